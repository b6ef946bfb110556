#include "evc/optim.hpp"

#include "evc/error.hpp"
#include "evc/kernels.hpp"

namespace evc::ad {

RmsPropState make_rmsprop_state(std::span<const Tensor> params) {
  RmsPropState s;
  s.square_avg.reserve(params.size());
  for (const Tensor& p : params) s.square_avg.emplace_back(p.shape());
  return s;
}

void rmsprop_step(std::span<Tensor> params, std::span<const Tensor> grads, RmsPropState& state,
                  const RmsPropConfig& config) {
  if (params.size() != grads.size() || params.size() != state.square_avg.size())
    fail(ErrorKind::Shape, "rmsprop: " + std::to_string(params.size()) + " params, " + std::to_string(grads.size()) +
                               " grads, " + std::to_string(state.square_avg.size()) + " state buffers");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].shape() != grads[i].shape() || params[i].shape() != state.square_avg[i].shape())
      fail(ErrorKind::Shape, "rmsprop: parameter " + std::to_string(i) + " has shape " +
                                 shape_string(params[i].shape()) + ", gradient " + shape_string(grads[i].shape()));
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < params.size(); ++i)
    k.rmsprop(params[i].data(), grads[i].data(), state.square_avg[i].data(), params[i].size(), config.lr,
              config.decay, config.eps);
}

void clip_weights(std::span<Tensor> params, double c) {
  if (!(c > 0.0)) fail(ErrorKind::Config, "clip value must be positive");
  const auto& k = kernels::active();
  for (Tensor& p : params) k.clip(p.data(), p.size(), c);
}

}  // namespace evc::ad
