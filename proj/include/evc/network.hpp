#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evc/autodiff.hpp"
#include "evc/rng.hpp"

namespace evc::vawgan {

enum class LayerKind { Dense, Conv1d, ConvTranspose1d, Reshape };
enum class Activation { None, LeakyRelu, Tanh };

std::string_view to_string(LayerKind k);
std::string_view to_string(Activation a);

inline constexpr double kLeakySlope = 0.2;

/// One network stage. Dense layers act on [B, in]; convolutions on
/// [B, C, L]; Reshape changes the per-example shape.
struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  std::size_t in = 0;  // dense widths
  std::size_t out = 0;
  ad::Conv1dSpec conv;
  ad::ConvTranspose1dSpec deconv;
  ad::Shape shape;  // per-example target shape of a Reshape
  Activation activation = Activation::None;

  static LayerSpec dense(std::size_t in, std::size_t out, Activation act);
  static LayerSpec conv1d(ad::Conv1dSpec spec, Activation act);
  static LayerSpec conv_transpose1d(ad::ConvTranspose1dSpec spec, Activation act);
  static LayerSpec reshape(ad::Shape per_example);
};

struct CondDims {
  std::size_t emotion = 10;
  std::size_t f0 = 1;
};

/// Encoder maps an input frame to 2 * latent_dim values (mean, then
/// log-variance). Decoder maps concat(z, one-hot, f0) back to a frame.
/// Critic maps a frame to one score.
struct NetworkSpec {
  std::string preset;
  std::size_t input_dim = 0;
  std::size_t latent_dim = 16;
  CondDims cond;
  std::vector<LayerSpec> encoder;
  std::vector<LayerSpec> decoder;
  std::vector<LayerSpec> critic;

  std::size_t decoder_input_dim() const { return latent_dim + cond.emotion + cond.f0; }
};

/// Propagates shapes through all three stacks; ShapeError names the stack
/// and layer where widths stop matching.
void validate(const NetworkSpec& spec);

/// dim -> 64 -> 2*latent encoder, (latent+cond) -> 64 -> dim decoder,
/// dim -> 64 -> 1 critic.
NetworkSpec dense_preset(std::size_t input_dim, std::size_t f0_dim, std::size_t latent_dim = 16,
                         std::size_t hidden = 64, std::size_t n_emotions = 10);

/// Full-size conv1d stacks on 513-dim frames: encoder channels
/// {16,32,64,128,256} with kernel 7 stride 3, decoder kernels {9,7,7,1025},
/// critic kernels {7,7,115}, latent 128.
NetworkSpec paper_preset(std::size_t f0_dim, std::size_t n_emotions = 10);

/// "dense" or "paper"; ConfigError otherwise. paper requires input_dim 513.
NetworkSpec preset_by_name(std::string_view name, std::size_t input_dim, std::size_t f0_dim,
                           std::size_t n_emotions = 10);

std::string network_spec_to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const std::string& text);

struct ModelParams {
  std::vector<ad::Tensor> encoder;
  std::vector<ad::Tensor> decoder;
  std::vector<ad::Tensor> critic;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Uniform Glorot initialization, zero biases. Critic weights start
/// inside [-clip, clip].
ModelParams init_params(const NetworkSpec& spec, SeededRng& rng, double clip);

/// Number of parameter tensors a layer stack owns.
std::size_t param_count(std::span<const LayerSpec> layers);

/// Applies a layer stack to x: [B, in] -> [B, out].
ad::Var run_stack(std::span<const LayerSpec> layers, std::span<const ad::Var> params, ad::Var x);

std::vector<ad::Var> bind_params(ad::Tape& tape, std::span<const ad::Tensor> params, bool trainable);

}  // namespace evc::vawgan
