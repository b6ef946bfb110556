#include "evc/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

#include "evc/error.hpp"

namespace evc::vawgan {
namespace {

using nlohmann::json;

const char* stack_name(int which) {
  switch (which) {
    case 0: return "encoder";
    case 1: return "decoder";
    default: return "critic";
  }
}

ad::Shape propagate(const LayerSpec& l, const ad::Shape& in, const std::string& where) {
  auto bad = [&](const std::string& why) -> ad::Shape {
    fail(ErrorKind::Shape, where + " (" + std::string(to_string(l.kind)) + "): " + why + ", input " +
                               ad::shape_string(in));
  };
  switch (l.kind) {
    case LayerKind::Dense:
      if (l.in == 0 || l.out == 0) fail(ErrorKind::Config, where + ": dense widths must be >= 1");
      if (in != ad::Shape{l.in}) return bad("expected width " + std::to_string(l.in));
      return {l.out};
    case LayerKind::Conv1d: {
      ad::validate(l.conv);
      if (in.size() != 2 || in[0] != l.conv.in_channels) return bad("channel mismatch");
      if (in[1] + l.conv.pad_left + l.conv.pad_right < l.conv.kernel) return bad("input shorter than kernel");
      return {l.conv.out_channels, l.conv.output_length(in[1])};
    }
    case LayerKind::ConvTranspose1d: {
      const auto& d = l.deconv;
      if (d.kernel < 1 || d.stride < 1 || d.in_channels < 1 || d.out_channels < 1)
        fail(ErrorKind::Config, where + ": conv_transpose1d sizes must be >= 1");
      if (in.size() != 2 || in[0] != d.in_channels || in[1] == 0) return bad("channel mismatch");
      const std::size_t out = d.output_length(in[1]);
      if (out == 0) return bad("cropping removes the whole output");
      return {d.out_channels, out};
    }
    case LayerKind::Reshape:
      if (ad::element_count(l.shape) != ad::element_count(in) || l.shape.empty())
        return bad("cannot reshape to " + ad::shape_string(l.shape));
      return l.shape;
  }
  return in;
}

ad::Var activate(ad::Var x, Activation a) {
  switch (a) {
    case Activation::LeakyRelu: return ad::leaky_relu(x, kLeakySlope);
    case Activation::Tanh: return ad::tanh(x);
    case Activation::None: break;
  }
  return x;
}

Activation activation_from_string(const std::string& s) {
  if (s == "none") return Activation::None;
  if (s == "leaky_relu") return Activation::LeakyRelu;
  if (s == "tanh") return Activation::Tanh;
  fail(ErrorKind::Config, "unknown activation '" + s + "'");
}

json layer_to_json(const LayerSpec& l) {
  json j{{"type", to_string(l.kind)}, {"activation", to_string(l.activation)}};
  switch (l.kind) {
    case LayerKind::Dense:
      j["in"] = l.in;
      j["out"] = l.out;
      break;
    case LayerKind::Conv1d:
      j["kernel"] = l.conv.kernel;
      j["stride"] = l.conv.stride;
      j["in_channels"] = l.conv.in_channels;
      j["out_channels"] = l.conv.out_channels;
      j["pad_left"] = l.conv.pad_left;
      j["pad_right"] = l.conv.pad_right;
      break;
    case LayerKind::ConvTranspose1d:
      j["kernel"] = l.deconv.kernel;
      j["stride"] = l.deconv.stride;
      j["in_channels"] = l.deconv.in_channels;
      j["out_channels"] = l.deconv.out_channels;
      j["crop_left"] = l.deconv.crop_left;
      j["crop_right"] = l.deconv.crop_right;
      break;
    case LayerKind::Reshape:
      j["shape"] = l.shape;
      break;
  }
  return j;
}

LayerSpec layer_from_json(const json& j) {
  LayerSpec l;
  const std::string type = j.at("type").get<std::string>();
  l.activation = activation_from_string(j.value("activation", std::string("none")));
  if (type == "dense") {
    l.kind = LayerKind::Dense;
    l.in = j.at("in").get<std::size_t>();
    l.out = j.at("out").get<std::size_t>();
  } else if (type == "conv1d") {
    l.kind = LayerKind::Conv1d;
    l.conv = ad::Conv1dSpec{j.at("kernel").get<std::size_t>(),      j.at("stride").get<std::size_t>(),
                            j.at("in_channels").get<std::size_t>(), j.at("out_channels").get<std::size_t>(),
                            j.value("pad_left", std::size_t{0}),    j.value("pad_right", std::size_t{0})};
  } else if (type == "conv_transpose1d") {
    l.kind = LayerKind::ConvTranspose1d;
    l.deconv = ad::ConvTranspose1dSpec{
        j.at("kernel").get<std::size_t>(),      j.at("stride").get<std::size_t>(),
        j.at("in_channels").get<std::size_t>(), j.at("out_channels").get<std::size_t>(),
        j.value("crop_left", std::size_t{0}),   j.value("crop_right", std::size_t{0})};
  } else if (type == "reshape") {
    l.kind = LayerKind::Reshape;
    l.shape = j.at("shape").get<ad::Shape>();
  } else {
    fail(ErrorKind::Config, "unknown layer type '" + type + "'");
  }
  return l;
}

}  // namespace

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::ConvTranspose1d: return "conv_transpose1d";
    case LayerKind::Reshape: return "reshape";
  }
  return "?";
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::None: return "none";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out, Activation act) {
  LayerSpec l;
  l.kind = LayerKind::Dense;
  l.in = in;
  l.out = out;
  l.activation = act;
  return l;
}

LayerSpec LayerSpec::conv1d(ad::Conv1dSpec spec, Activation act) {
  LayerSpec l;
  l.kind = LayerKind::Conv1d;
  l.conv = spec;
  l.activation = act;
  return l;
}

LayerSpec LayerSpec::conv_transpose1d(ad::ConvTranspose1dSpec spec, Activation act) {
  LayerSpec l;
  l.kind = LayerKind::ConvTranspose1d;
  l.deconv = spec;
  l.activation = act;
  return l;
}

LayerSpec LayerSpec::reshape(ad::Shape per_example) {
  LayerSpec l;
  l.kind = LayerKind::Reshape;
  l.shape = std::move(per_example);
  return l;
}

void validate(const NetworkSpec& spec) {
  if (spec.input_dim == 0 || spec.latent_dim == 0)
    fail(ErrorKind::Config, "network input_dim and latent_dim must be >= 1");
  if (spec.cond.emotion < 2) fail(ErrorKind::Config, "network needs at least 2 emotion classes");
  const std::vector<LayerSpec>* stacks[3] = {&spec.encoder, &spec.decoder, &spec.critic};
  const ad::Shape inputs[3] = {{spec.input_dim}, {spec.decoder_input_dim()}, {spec.input_dim}};
  const ad::Shape outputs[3] = {{2 * spec.latent_dim}, {spec.input_dim}, {1}};
  for (int s = 0; s < 3; ++s) {
    if (stacks[s]->empty()) fail(ErrorKind::Config, std::string(stack_name(s)) + " has no layers");
    ad::Shape shape = inputs[s];
    for (std::size_t i = 0; i < stacks[s]->size(); ++i)
      shape = propagate((*stacks[s])[i], shape, std::string(stack_name(s)) + " layer " + std::to_string(i));
    if (shape != outputs[s])
      fail(ErrorKind::Shape, std::string(stack_name(s)) + " produces " + ad::shape_string(shape) + ", expected " +
                                 ad::shape_string(outputs[s]));
  }
}

NetworkSpec dense_preset(std::size_t input_dim, std::size_t f0_dim, std::size_t latent_dim, std::size_t hidden,
                         std::size_t n_emotions) {
  NetworkSpec n;
  n.preset = "dense";
  n.input_dim = input_dim;
  n.latent_dim = latent_dim;
  n.cond = CondDims{n_emotions, f0_dim};
  n.encoder = {LayerSpec::dense(input_dim, hidden, Activation::LeakyRelu),
               LayerSpec::dense(hidden, 2 * latent_dim, Activation::None)};
  n.decoder = {LayerSpec::dense(n.decoder_input_dim(), hidden, Activation::LeakyRelu),
               LayerSpec::dense(hidden, input_dim, Activation::None)};
  n.critic = {LayerSpec::dense(input_dim, hidden, Activation::LeakyRelu),
              LayerSpec::dense(hidden, 1, Activation::None)};
  validate(n);
  return n;
}

NetworkSpec paper_preset(std::size_t f0_dim, std::size_t n_emotions) {
  constexpr std::size_t dim = 513;
  NetworkSpec n;
  n.preset = "paper";
  n.input_dim = dim;
  n.latent_dim = 128;
  n.cond = CondDims{n_emotions, f0_dim};

  n.encoder.push_back(LayerSpec::reshape({1, dim}));
  std::size_t len = dim, ch = 1;
  for (std::size_t out : {16, 32, 64, 128, 256}) {
    const auto c = ad::Conv1dSpec::same(7, 3, ch, out, len);
    n.encoder.push_back(LayerSpec::conv1d(c, Activation::LeakyRelu));
    len = c.output_length(len);
    ch = out;
  }
  n.encoder.push_back(LayerSpec::reshape({ch * len}));
  n.encoder.push_back(LayerSpec::dense(ch * len, 2 * n.latent_dim, Activation::None));

  // 19 * 27 = 513: three stride-3 upsamplings reach the frame width.
  constexpr std::size_t seed_ch = 64, seed_len = 19;
  n.decoder.push_back(LayerSpec::dense(n.decoder_input_dim(), seed_ch * seed_len, Activation::LeakyRelu));
  n.decoder.push_back(LayerSpec::reshape({seed_ch, seed_len}));
  n.decoder.push_back(LayerSpec::conv_transpose1d(ad::ConvTranspose1dSpec::same(9, 3, seed_ch, 32),
                                                  Activation::LeakyRelu));
  n.decoder.push_back(LayerSpec::conv_transpose1d(ad::ConvTranspose1dSpec::same(7, 3, 32, 16), Activation::LeakyRelu));
  n.decoder.push_back(LayerSpec::conv_transpose1d(ad::ConvTranspose1dSpec::same(7, 3, 16, 8), Activation::LeakyRelu));
  n.decoder.push_back(LayerSpec::conv1d(ad::Conv1dSpec::same(1025, 1, 8, 1, dim), Activation::None));
  n.decoder.push_back(LayerSpec::reshape({dim}));

  n.critic.push_back(LayerSpec::reshape({1, dim}));
  len = dim;
  ch = 1;
  const std::size_t kernels[] = {7, 7, 115};
  const std::size_t chans[] = {16, 32, 64};
  for (int i = 0; i < 3; ++i) {
    const auto c = ad::Conv1dSpec::same(kernels[i], 3, ch, chans[i], len);
    n.critic.push_back(LayerSpec::conv1d(c, Activation::LeakyRelu));
    len = c.output_length(len);
    ch = chans[i];
  }
  n.critic.push_back(LayerSpec::reshape({ch * len}));
  n.critic.push_back(LayerSpec::dense(ch * len, 1, Activation::None));
  validate(n);
  return n;
}

NetworkSpec preset_by_name(std::string_view name, std::size_t input_dim, std::size_t f0_dim, std::size_t n_emotions) {
  if (name == "dense") return dense_preset(input_dim, f0_dim, 16, 64, n_emotions);
  if (name == "paper") {
    if (input_dim != 513)
      fail(ErrorKind::Config, "paper preset needs 513-dim frames, data has " + std::to_string(input_dim));
    return paper_preset(f0_dim, n_emotions);
  }
  fail(ErrorKind::Config, "unknown network preset '" + std::string(name) + "'");
}

std::string network_spec_to_json(const NetworkSpec& spec) {
  json j{{"preset", spec.preset},
         {"input_dim", spec.input_dim},
         {"latent_dim", spec.latent_dim},
         {"cond", {{"emotion", spec.cond.emotion}, {"f0", spec.cond.f0}}}};
  for (const auto* name : {"encoder", "decoder", "critic"}) j[name] = json::array();
  for (const auto& l : spec.encoder) j["encoder"].push_back(layer_to_json(l));
  for (const auto& l : spec.decoder) j["decoder"].push_back(layer_to_json(l));
  for (const auto& l : spec.critic) j["critic"].push_back(layer_to_json(l));
  return j.dump(2);
}

NetworkSpec network_spec_from_json(const std::string& text) {
  NetworkSpec n;
  try {
    const json j = json::parse(text);
    n.preset = j.value("preset", std::string("custom"));
    n.input_dim = j.at("input_dim").get<std::size_t>();
    n.latent_dim = j.at("latent_dim").get<std::size_t>();
    n.cond.emotion = j.at("cond").at("emotion").get<std::size_t>();
    n.cond.f0 = j.at("cond").at("f0").get<std::size_t>();
    for (const auto& l : j.at("encoder")) n.encoder.push_back(layer_from_json(l));
    for (const auto& l : j.at("decoder")) n.decoder.push_back(layer_from_json(l));
    for (const auto& l : j.at("critic")) n.critic.push_back(layer_from_json(l));
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("network spec: ") + e.what());
  }
  validate(n);
  return n;
}

std::size_t param_count(std::span<const LayerSpec> layers) {
  std::size_t n = 0;
  for (const auto& l : layers)
    if (l.kind != LayerKind::Reshape) n += 2;
  return n;
}

ModelParams init_params(const NetworkSpec& spec, SeededRng& rng, double clip) {
  auto init_stack = [&rng](const std::vector<LayerSpec>& layers) {
    std::vector<ad::Tensor> out;
    for (const auto& l : layers) {
      ad::Shape w, b;
      double fan_in = 0, fan_out = 0;
      switch (l.kind) {
        case LayerKind::Dense:
          w = {l.in, l.out};
          b = {l.out};
          fan_in = double(l.in);
          fan_out = double(l.out);
          break;
        case LayerKind::Conv1d:
          w = {l.conv.out_channels, l.conv.in_channels, l.conv.kernel};
          b = {l.conv.out_channels};
          fan_in = double(l.conv.in_channels * l.conv.kernel);
          fan_out = double(l.conv.out_channels * l.conv.kernel);
          break;
        case LayerKind::ConvTranspose1d:
          w = {l.deconv.in_channels, l.deconv.out_channels, l.deconv.kernel};
          b = {l.deconv.out_channels};
          fan_in = double(l.deconv.in_channels * l.deconv.kernel);
          fan_out = double(l.deconv.out_channels * l.deconv.kernel);
          break;
        case LayerKind::Reshape:
          continue;
      }
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      ad::Tensor wt(w);
      for (double& v : wt.values()) v = rng.uniform(-limit, limit);
      out.push_back(std::move(wt));
      out.emplace_back(b);
    }
    return out;
  };
  validate(spec);
  ModelParams p;
  p.encoder = init_stack(spec.encoder);
  p.decoder = init_stack(spec.decoder);
  p.critic = init_stack(spec.critic);
  for (auto& t : p.critic)
    for (double& v : t.values()) v = std::min(std::max(v, -clip), clip);
  return p;
}

std::vector<ad::Var> bind_params(ad::Tape& tape, std::span<const ad::Tensor> params, bool trainable) {
  std::vector<ad::Var> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(trainable ? tape.variable(p) : tape.constant(p));
  return out;
}

ad::Var run_stack(std::span<const LayerSpec> layers, std::span<const ad::Var> params, ad::Var x) {
  if (params.size() != param_count(layers))
    fail(ErrorKind::Shape, "layer stack needs " + std::to_string(param_count(layers)) + " parameter tensors, got " +
                               std::to_string(params.size()));
  std::size_t p = 0;
  for (const auto& l : layers) {
    const std::size_t batch = x.shape().at(0);
    switch (l.kind) {
      case LayerKind::Dense:
        x = ad::add_row_bias(ad::matmul(x, params[p]), params[p + 1]);
        p += 2;
        break;
      case LayerKind::Conv1d:
        x = ad::conv1d(x, params[p], params[p + 1], l.conv);
        p += 2;
        break;
      case LayerKind::ConvTranspose1d:
        x = ad::conv_transpose1d(x, params[p], params[p + 1], l.deconv);
        p += 2;
        break;
      case LayerKind::Reshape: {
        ad::Shape s{batch};
        s.insert(s.end(), l.shape.begin(), l.shape.end());
        x = ad::reshape(x, std::move(s));
        break;
      }
    }
    x = activate(x, l.activation);
  }
  return x;
}

}  // namespace evc::vawgan
