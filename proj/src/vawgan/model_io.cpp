#include <string>

#include <json.hpp>

#include "evc/error.hpp"
#include "evc/evcf.hpp"
#include "evc/vawgan.hpp"

namespace evc::vawgan {
namespace {

using nlohmann::json;

constexpr int kManifestVersion = 1;

json history_json(const std::vector<EpochStats>& h) {
  json a = json::array();
  for (std::size_t e = 0; e < h.size(); ++e)
    a.push_back({{"epoch", e},
                 {"recon_mse", h[e].recon_mse},
                 {"kl", h[e].kl},
                 {"critic_loss", h[e].critic_loss},
                 {"gen_adv_loss", h[e].gen_adv_loss}});
  return a;
}

json meta_json(const PipelineMeta& m) {
  json j{{"pipeline", to_string(m.kind)}};
  if (m.kind == PipelineKind::Spectrum) {
    j["scale_min"] = m.scale_min;
    j["scale_max"] = m.scale_max;
    j["f0_mode"] = to_string(m.f0_mode);
    j["f0_stats"] = {{"mean", m.f0_stats.mean}, {"std", m.f0_stats.std}, {"log_base", "e"}};
  } else {
    j["wavelet"] = {{"n_scales", m.wavelet.n_scales},
                    {"tau0_ms", m.wavelet.tau0_ms},
                    {"s_min", m.wavelet.s_min},
                    {"s_max", m.wavelet.s_max},
                    {"spacing", to_string(m.wavelet.spacing)}};
    j["scale_norm"] = {{"mean", m.scale_norm.mean}, {"std", m.scale_norm.std}};
  }
  return j;
}

PipelineMeta meta_from_json(const json& j) {
  PipelineMeta m;
  const std::string kind = j.at("pipeline").get<std::string>();
  if (kind == "spectrum") {
    m.kind = PipelineKind::Spectrum;
    m.scale_min = j.at("scale_min").get<std::vector<double>>();
    m.scale_max = j.at("scale_max").get<std::vector<double>>();
    const std::string mode = j.at("f0_mode").get<std::string>();
    if (mode == "norm_log_f0")
      m.f0_mode = F0CondMode::NormLogF0;
    else if (mode == "raw_hz")
      m.f0_mode = F0CondMode::RawHz;
    else
      fail(ErrorKind::Config, "unknown f0_mode '" + mode + "'");
    m.f0_stats.mean = j.at("f0_stats").at("mean").get<double>();
    m.f0_stats.std = j.at("f0_stats").at("std").get<double>();
    validate(m.f0_stats);
  } else if (kind == "prosody") {
    m.kind = PipelineKind::Prosody;
    const json& w = j.at("wavelet");
    m.wavelet.n_scales = w.at("n_scales").get<int>();
    m.wavelet.tau0_ms = w.at("tau0_ms").get<double>();
    m.wavelet.s_min = w.at("s_min").get<double>();
    m.wavelet.s_max = w.at("s_max").get<double>();
    m.wavelet.spacing = scale_spacing_from_string(w.at("spacing").get<std::string>());
    validate(m.wavelet);
    m.scale_norm.mean = j.at("scale_norm").at("mean").get<std::vector<double>>();
    m.scale_norm.std = j.at("scale_norm").at("std").get<std::vector<double>>();
  } else {
    fail(ErrorKind::Config, "unknown pipeline '" + kind + "'");
  }
  return m;
}

ad::Tensor tensor_from(const FeatureSequence& f, const ad::Shape& shape, const std::string& name) {
  if (f.data().data().size() != ad::element_count(shape))
    fail(ErrorKind::Shape, "parameter " + name + " holds " + std::to_string(f.data().data().size()) +
                               " values, expected shape " + ad::shape_string(shape));
  return ad::Tensor(shape, f.data().data());
}

FeatureSequence tensor_to_features(const ad::Tensor& t) {
  const std::size_t rows = t.rank() >= 2 ? t.dim(0) : 1;
  return FeatureSequence(Matrix(rows, t.size() / rows, t.values()), 1.0);
}

}  // namespace

std::string history_to_json(const std::vector<EpochStats>& history) { return history_json(history).dump(2) + "\n"; }

void save_model(const std::filesystem::path& dir, const TrainedModel& m) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "params", ec);
  if (ec) fail(ErrorKind::Io, "cannot create model directory " + dir.string() + ": " + ec.message());

  json params = json::array();
  const std::pair<const char*, const std::vector<ad::Tensor>*> stacks[] = {
      {"encoder", &m.params.encoder}, {"decoder", &m.params.decoder}, {"critic", &m.params.critic}};
  for (const auto& [name, tensors] : stacks) {
    for (std::size_t i = 0; i < tensors->size(); ++i) {
      const std::string file = std::string(name) + "_" + (i < 10 ? "0" : "") + std::to_string(i) + ".evcf";
      write_features(dir / "params" / file, tensor_to_features((*tensors)[i]));
      params.push_back({{"stack", name}, {"file", "params/" + file}, {"shape", (*tensors)[i].shape()}});
    }
  }
  json j{{"format", "evc-model"},
         {"version", kManifestVersion},
         {"trained", m.trained},
         {"seed", m.seed},
         {"network", json::parse(network_spec_to_json(m.spec))},
         {"loss_weights", {{"alpha", m.weights.alpha}, {"recon_weight", m.weights.recon_weight}}},
         {"optimizer",
          {{"name", "rmsprop"},
           {"lr", m.optim.lr},
           {"decay", m.optim.decay},
           {"eps", m.optim.eps},
           {"clip", m.optim.clip},
           {"epochs", m.optim.epochs},
           {"batch", m.optim.batch},
           {"n_critic", m.optim.n_critic},
           {"target_only_real", m.optim.target_only_real}}},
         {"features", meta_json(m.meta)},
         {"history", history_json(m.history)},
         {"params", params}};
  write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

TrainedModel load_model(const std::filesystem::path& dir) {
  const std::string text = read_file(dir / "manifest.json");
  TrainedModel m;
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string()) != "evc-model")
      fail(ErrorKind::Config, dir.string() + " is not a model directory");
    if (j.at("version").get<int>() != kManifestVersion)
      fail(ErrorKind::Config, "unsupported model manifest version " + j.at("version").dump());
    m.trained = j.at("trained").get<bool>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.spec = network_spec_from_json(j.at("network").dump());
    m.weights.alpha = j.at("loss_weights").at("alpha").get<double>();
    m.weights.recon_weight = j.at("loss_weights").at("recon_weight").get<double>();
    const json& o = j.at("optimizer");
    m.optim.lr = o.at("lr").get<double>();
    m.optim.decay = o.at("decay").get<double>();
    m.optim.eps = o.at("eps").get<double>();
    m.optim.clip = o.at("clip").get<double>();
    m.optim.epochs = o.at("epochs").get<std::size_t>();
    m.optim.batch = o.at("batch").get<std::size_t>();
    m.optim.n_critic = o.at("n_critic").get<std::size_t>();
    m.optim.target_only_real = o.at("target_only_real").get<bool>();
    m.meta = meta_from_json(j.at("features"));
    for (const json& e : j.at("history"))
      m.history.push_back(EpochStats{e.at("recon_mse").get<double>(), e.at("kl").get<double>(),
                                     e.at("critic_loss").get<double>(), e.at("gen_adv_loss").get<double>()});

    SeededRng dummy(0);
    const ModelParams shapes = init_params(m.spec, dummy, m.optim.clip);
    std::vector<ad::Tensor>* stacks[] = {&m.params.encoder, &m.params.decoder, &m.params.critic};
    const std::vector<ad::Tensor>* expected[] = {&shapes.encoder, &shapes.decoder, &shapes.critic};
    const char* names[] = {"encoder", "decoder", "critic"};
    const json& plist = j.at("params");
    std::size_t p = 0;
    for (int s = 0; s < 3; ++s) {
      for (const ad::Tensor& want : *expected[s]) {
        if (p >= plist.size()) fail(ErrorKind::Shape, "manifest lists too few parameter tensors");
        const json& entry = plist[p++];
        if (entry.at("stack").get<std::string>() != names[s] || entry.at("shape").get<ad::Shape>() != want.shape())
          fail(ErrorKind::Shape, "parameter " + entry.at("file").get<std::string>() + " does not match the network (" +
                                     ad::shape_string(want.shape()) + " expected)");
        const std::string file = entry.at("file").get<std::string>();
        stacks[s]->push_back(tensor_from(read_features(dir / file), want.shape(), file));
      }
    }
    if (p != plist.size()) fail(ErrorKind::Shape, "manifest lists extra parameter tensors");
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, "model manifest " + (dir / "manifest.json").string() + ": " + e.what());
  }
  return m;
}

}  // namespace evc::vawgan
