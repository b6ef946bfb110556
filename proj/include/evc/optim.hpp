#pragma once

#include <span>
#include <vector>

#include "evc/tensor.hpp"

namespace evc::ad {

struct RmsPropConfig {
  double lr = 1e-3;
  double decay = 0.9;
  double eps = 1e-8;
};

/// Running mean of squared gradients, one buffer per parameter.
struct RmsPropState {
  std::vector<Tensor> square_avg;
};

RmsPropState make_rmsprop_state(std::span<const Tensor> params);

/// state = decay*state + (1-decay)*g^2; param -= lr*g/(sqrt(state)+eps)
void rmsprop_step(std::span<Tensor> params, std::span<const Tensor> grads, RmsPropState& state,
                  const RmsPropConfig& config);

/// Clamps every value into [-c, c].
void clip_weights(std::span<Tensor> params, double c);

}  // namespace evc::ad
