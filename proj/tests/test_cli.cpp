#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "evc/cli.hpp"
#include "evc/evcf.hpp"
#include "evc/f0prep.hpp"
#include "support.hpp"

using namespace evc;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run evc_run(std::vector<std::string> args) {
  args.insert(args.begin(), "evc");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Every regular file under dir, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

// Sum of three sinusoids in Hz with a few unvoiced gaps.
std::vector<double> fixture_hz(std::size_t n) {
  std::vector<double> hz(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double tt = static_cast<double>(t);
    hz[t] = 150.0 + 20.0 * std::sin(2.0 * std::numbers::pi * tt / 16.0) +
            14.0 * std::sin(2.0 * std::numbers::pi * tt / 40.0 + 0.3) +
            10.0 * std::sin(2.0 * std::numbers::pi * tt / 120.0 + 1.1);
  }
  for (std::size_t t = 100; t < 110; ++t) hz[t] = 0.0;
  for (std::size_t t = 600; t < 605; ++t) hz[t] = 0.0;
  return hz;
}

void write_hz(const fs::path& p, const std::vector<double>& hz) { write_features(p, FeatureSequence::column(hz, 5.0)); }

std::string toy_corpus(const fs::path& dir) {
  const fs::path data = dir / "toy";
  if (!fs::exists(data / "labels.json")) {
    const Run r = evc_run({"--seed", "7", "gen-toy", "--out-dir", data.string(), "--utts", "4", "--frames", "64", "--dim",
                       "16"});
    REQUIRE(r.code == 0);
  }
  return data.string();
}

}  // namespace

TEST_CASE("help exits cleanly for every subcommand") {
  CHECK(evc_run({"--help"}).code == 0);
  const std::map<std::string, std::vector<std::string>> flags = {
      {"f0prep", {"--out", "--out-dir", "--frame-shift", "--verify"}},
      {"cwt", {"--n-scales", "--s-min", "--s-max", "--spacing", "--verify"}},
      {"icwt", {"--sidecar", "--out", "--verify"}},
      {"gen-toy", {"--out-dir", "--emotions", "--utts", "--frames", "--dim"}},
      {"train", {"--pipeline", "--data", "--model-dir", "--preset", "--epochs", "--lr", "--clip", "--n-critic"}},
      {"convert", {"--spectrum-model", "--prosody-model", "--keep-source-f0", "--target-emotion", "--out-dir"}},
      {"eval", {"--ref", "--conv", "--allow-partial", "--csv"}},
  };
  for (const auto& [cmd, names] : flags) {
    const Run r = evc_run({cmd, "--help"});
    CHECK(r.code == 0);
    for (const auto& f : names) CHECK_MESSAGE(r.out.find(f) != std::string::npos, cmd << " help lacks " << f);
  }
  CHECK(evc_run({}).code == 2);
  CHECK(evc_run({"bogus"}).code == 2);
  CHECK(evc_run({"f0prep"}).code == 2);
}

TEST_CASE("f0prep") {
  const fs::path dir = test::scratch("cli_f0prep");
  write_hz(dir / "utt.f0.evcf", fixture_hz(1024));
  const Run ok = evc_run({"f0prep", (dir / "utt.f0.evcf").string(), "--out", (dir / "utt.lf0.evcf").string(), "--verify"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("round trip ok") != std::string::npos);
  const FeatureSequence track = read_features(dir / "utt.lf0.evcf");
  CHECK(track.n_frames() == 1024);
  const NormStats stats = norm_stats_from_json(slurp(dir / "utt.lf0.json"));
  CHECK(stats.mean > std::log(120.0));
  CHECK(stats.mean < std::log(180.0));

  std::ofstream(dir / "silent.csv") << "frame,hz,voiced\n0,0,0\n1,0,0\n2,0,0\n";
  const Run silent = evc_run({"f0prep", (dir / "silent.csv").string(), "--out", (dir / "s.lf0.evcf").string()});
  CHECK(silent.code == 2);
  CHECK(silent.err.find("NoVoicedFrames") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "s.lf0.evcf"));

  const Run missing = evc_run({"f0prep", (dir / "nope.f0.evcf").string(), "--out", (dir / "n.lf0.evcf").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("nope.f0.evcf") != std::string::npos);

  // Several inputs through a worker pool give the same bytes as one at a time.
  write_hz(dir / "b.f0.evcf", fixture_hz(300));
  CHECK(evc_run({"--jobs", "3", "f0prep", (dir / "utt.f0.evcf").string(), (dir / "b.f0.evcf").string(), "--out-dir",
             (dir / "many").string()})
            .code == 0);
  CHECK(slurp(dir / "many" / "utt.lf0.evcf") == slurp(dir / "utt.lf0.evcf"));
  CHECK(evc_run({"f0prep", (dir / "utt.f0.evcf").string(), (dir / "b.f0.evcf").string(), "--out",
             (dir / "x.lf0.evcf").string()})
            .code == 2);
}

TEST_CASE("cwt and icwt") {
  const fs::path dir = test::scratch("cli_cwt");
  write_hz(dir / "utt.f0.evcf", fixture_hz(1024));
  REQUIRE(evc_run({"f0prep", (dir / "utt.f0.evcf").string(), "--out", (dir / "utt.lf0.evcf").string()}).code == 0);
  const std::string lf0 = (dir / "utt.lf0.evcf").string();

  const Run fwd = evc_run({"cwt", lf0, "--out", (dir / "utt.cwt.evcf").string(), "--verify"});
  CHECK(fwd.code == 0);
  CHECK(read_features(dir / "utt.cwt.evcf").dim() == 513);
  const Run inv = evc_run({"icwt", (dir / "utt.cwt.evcf").string(), "--out", (dir / "back.lf0.evcf").string(), "--verify",
                       lf0});
  CHECK(inv.code == 0);
  CHECK(inv.out.find("round trip ok") != std::string::npos);

  const Run one = evc_run({"cwt", lf0, "--out", (dir / "one.cwt.evcf").string(), "--n-scales", "1"});
  CHECK(one.code == 2);
  CHECK(one.err.find("ConfigError") != std::string::npos);

  REQUIRE(evc_run({"cwt", lf0, "--out", (dir / "small.cwt.evcf").string(), "--n-scales", "64"}).code == 0);
  const Run mismatched = evc_run({"icwt", (dir / "utt.cwt.evcf").string(), "--sidecar", (dir / "small.cwt.json").string(),
                              "--out", (dir / "bad.lf0.evcf").string()});
  CHECK(mismatched.code == 2);
  CHECK(mismatched.err.find("ShapeError") != std::string::npos);

  const Run raw = evc_run({"cwt", (dir / "utt.f0.evcf").string(), "--out", (dir / "raw.cwt.evcf").string(), "--s-max",
                       "5000"});
  CHECK(raw.code == 0);
  CHECK(evc_run({"cwt", lf0, "--out", (dir / "lin.cwt.evcf").string(), "--spacing", "cubic"}).code == 2);
}

TEST_CASE("train is deterministic and maps failures to exit codes") {
  const fs::path dir = test::scratch("cli_train");
  const std::string data = toy_corpus(dir);
  auto train = [&](const std::string& out, std::vector<std::string> extra) {
    std::vector<std::string> a = {"--seed", "7", "train", "--pipeline", "spectrum", "--data", data, "--model-dir",
                                  (dir / out).string(), "--epochs", "3", "--quiet"};
    a.insert(a.end(), extra.begin(), extra.end());
    return evc_run(a);
  };
  const Run a = train("a", {});
  REQUIRE(a.code == 0);
  CHECK(a.err.empty());
  REQUIRE(train("b", {"--history", (dir / "b_history.json").string()}).code == 0);
  CHECK(tree(dir / "a") == tree(dir / "b"));
  CHECK(slurp(dir / "b_history.json") == slurp(dir / "a" / "history.json"));
  REQUIRE(evc_run({"--seed", "8", "train", "--pipeline", "spectrum", "--data", data, "--model-dir", (dir / "c").string(),
               "--epochs", "3", "--quiet"})
              .code == 0);
  CHECK(slurp(dir / "c" / "history.json") != slurp(dir / "a" / "history.json"));

  const Run loud = evc_run({"train", "--pipeline", "spectrum", "--data", data, "--model-dir", (dir / "loud").string(),
                            "--epochs", "2"});
  CHECK(loud.err.find("epoch 1:") != std::string::npos);

  // lr 0: the stored parameters are the seeded initialization.
  REQUIRE(train("frozen", {"--lr", "0"}).code == 0);
  const vawgan::TrainedModel frozen = vawgan::load_model(dir / "frozen");
  SeededRng init_rng = SeededRng(7).fork(1);
  const vawgan::ModelParams init = vawgan::init_params(frozen.spec, init_rng, frozen.optim.clip);
  REQUIRE(init.encoder.size() == frozen.params.encoder.size());
  for (std::size_t i = 0; i < init.encoder.size(); ++i)
    for (std::size_t j = 0; j < init.encoder[i].size(); ++j)
      CHECK(frozen.params.encoder[i][j] == static_cast<double>(static_cast<float>(init.encoder[i][j])));
  for (std::size_t i = 0; i < init.decoder.size(); ++i)
    for (std::size_t j = 0; j < init.decoder[i].size(); ++j)
      CHECK(frozen.params.decoder[i][j] == static_cast<double>(static_cast<float>(init.decoder[i][j])));

  CHECK(train("p", {"--preset", "giant"}).code == 2);
  CHECK(train("p", {"--recon-weight", "0"}).code == 2);
  CHECK(evc_run({"train", "--pipeline", "rhythm", "--data", data, "--model-dir", (dir / "p").string()}).code == 2);
  const Run diverged = train("d", {"--lr", "1e200"});
  CHECK(diverged.code == 3);
  CHECK(diverged.err.find("TrainingDiverged") != std::string::npos);
  CHECK(diverged.err.find("epoch") != std::string::npos);
  CHECK(evc_run({"train", "--pipeline", "spectrum", "--data", (dir / "nowhere").string(), "--model-dir",
             (dir / "p").string()})
            .code == 1);
  CHECK(evc_run({"train", "--pipeline", "spectrum", "--data", data, "--model-dir", data}).code == 2);
}

TEST_CASE("config file supplies options") {
  const fs::path dir = test::scratch("cli_config");
  const std::string data = toy_corpus(dir);
  std::ofstream(dir / "run.json") << R"({"seed": 7, "train": {"pipeline": "spectrum", "epochs": 3, "quiet": true,
    "data": ")" << data << R"("}})";
  REQUIRE(evc_run({"--config", (dir / "run.json").string(), "train", "--model-dir", (dir / "from_config").string()}).code ==
          0);
  REQUIRE(evc_run({"--seed", "7", "train", "--pipeline", "spectrum", "--data", data, "--epochs", "3", "--quiet",
               "--model-dir", (dir / "from_flags").string()})
              .code == 0);
  CHECK(tree(dir / "from_config") == tree(dir / "from_flags"));

  std::ofstream(dir / "broken.json") << "{\"seed\": ";
  CHECK(evc_run({"--config", (dir / "broken.json").string(), "train", "--model-dir", (dir / "x").string()}).code == 2);
}

TEST_CASE("convert") {
  const fs::path dir = test::scratch("cli_convert");
  const std::string data = toy_corpus(dir);
  const std::string sm = (dir / "spectrum").string(), pm = (dir / "prosody").string();
  REQUIRE(evc_run({"--seed", "7", "train", "--pipeline", "spectrum", "--data", data, "--model-dir", sm, "--epochs", "20",
               "--quiet"})
              .code == 0);
  REQUIRE(evc_run({"--seed", "7", "train", "--pipeline", "prosody", "--data", data, "--model-dir", pm, "--epochs", "1",
               "--quiet"})
              .code == 0);
  const fs::path sp = fs::path(data) / "emo0_0.sp.evcf", f0 = fs::path(data) / "emo0_0.f0.evcf";
  REQUIRE(fs::exists(sp));

  // Identity conversion reproduces the model's own reconstruction.
  const Run same = evc_run({"convert", "--spectrum-model", sm, "--keep-source-f0", "--sp", sp.string(), "--f0", f0.string(),
                        "--source-emotion", "0", "--target-emotion", "0", "--out-dir", (dir / "same").string()});
  REQUIRE(same.code == 0);
  const vawgan::TrainedModel model = vawgan::load_model(sm);
  const FeatureSequence src = read_features(sp);
  const F0Contour src_f0 = read_f0(f0);
  const vawgan::ConversionResult expect = vawgan::convert(src, src_f0, EmotionCode(0), EmotionCode(0), model, nullptr);
  const FeatureSequence got = read_features(dir / "same" / "emo0_0.sp.evcf");
  REQUIRE(got.n_frames() == expect.spectrum.n_frames());
  for (std::size_t i = 0; i < got.data().data().size(); ++i)
    CHECK(got.data().data()[i] == doctest::Approx(expect.spectrum.data().data()[i]).epsilon(1e-6));
  CHECK(read_f0(dir / "same" / "emo0_0.f0.evcf").values() == src_f0.values());

  const Run both = evc_run({"convert", "--spectrum-model", sm, "--prosody-model", pm, "--in-dir", data, "--source-emotion",
                        "0", "--target-emotion", "1", "--out-dir", (dir / "both").string()});
  REQUIRE(both.code == 0);
  const FeatureSequence conv_sp = read_features(dir / "both" / "emo0_0.sp.evcf");
  CHECK(conv_sp.dim() == 16);
  const F0Contour conv_f0 = read_f0(dir / "both" / "emo0_0.f0.evcf");
  CHECK(conv_f0.voiced() == src_f0.voiced());
  CHECK(fs::exists(dir / "both" / "emo1_3.sp.evcf"));

  const Run no_prosody = evc_run({"convert", "--spectrum-model", sm, "--sp", sp.string(), "--f0", f0.string(),
                              "--source-emotion", "0", "--target-emotion", "1", "--out-dir", (dir / "np").string()});
  CHECK(no_prosody.code == 2);
  CHECK(no_prosody.err.find("StateError") != std::string::npos);
  CHECK(evc_run({"convert", "--spectrum-model", pm, "--keep-source-f0", "--sp", sp.string(), "--f0", f0.string(),
             "--source-emotion", "0", "--target-emotion", "1", "--out-dir", (dir / "swap").string()})
            .code == 2);
  CHECK(evc_run({"convert", "--spectrum-model", sm, "--keep-source-f0", "--sp", sp.string(), "--f0", f0.string(),
             "--source-emotion", "0", "--target-emotion", "12", "--out-dir", (dir / "range").string()})
            .code == 2);
  CHECK(evc_run({"convert", "--spectrum-model", (dir / "absent").string(), "--keep-source-f0", "--sp", sp.string(), "--f0",
             f0.string(), "--source-emotion", "0", "--target-emotion", "1", "--out-dir", (dir / "absent_out").string()})
            .code == 1);
}

TEST_CASE("eval") {
  const fs::path dir = test::scratch("cli_eval");
  const std::string data = toy_corpus(dir);
  const Run same = evc_run({"eval", "--ref", data, "--conv", data, "--csv", (dir / "same.csv").string()});
  REQUIRE(same.code == 0);
  const auto report = nlohmann::json::parse(same.out);
  REQUIRE(report["utterances"].size() == 8);
  CHECK(report["mean"]["lsd_db"].get<double>() == 0.0);
  CHECK(report["mean"]["f0_rmse_hz"].get<double>() == 0.0);
  CHECK(report["mean"]["pcc"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report["mean"]["mcd_db"].is_null());
  const std::string csv = slurp(dir / "same.csv");
  CHECK(csv.rfind("utterance,mcd_db,lsd_db,f0_rmse_hz,pcc,n_frames_compared\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);

  fs::copy(data, dir / "partial");
  fs::remove(dir / "partial" / "emo1_2.sp.evcf");
  fs::remove(dir / "partial" / "emo1_2.f0.evcf");
  const Run strict = evc_run({"eval", "--ref", data, "--conv", (dir / "partial").string()});
  CHECK(strict.code == 4);
  CHECK(strict.err.find("emo1_2") != std::string::npos);
  const Run lenient = evc_run({"eval", "--ref", data, "--conv", (dir / "partial").string(), "--allow-partial"});
  CHECK(lenient.code == 0);
  CHECK(lenient.err.find("warning") != std::string::npos);
  CHECK(nlohmann::json::parse(lenient.out)["utterances"].size() == 7);

  fs::create_directories(dir / "empty_a");
  fs::create_directories(dir / "empty_b");
  CHECK(evc_run({"eval", "--ref", (dir / "empty_a").string(), "--conv", (dir / "empty_b").string()}).code == 4);
  CHECK(evc_run({"eval", "--ref", (dir / "nothing").string(), "--conv", data}).code == 1);
  CHECK(evc_run({"eval", "--ref", data, "--conv", data, "--f0-scale", "mel"}).code == 2);
}

TEST_CASE("installed binary gives identical bytes across runs and job counts") {
  const fs::path dir = test::scratch("cli_binary");
  const std::string tool = EVC_TOOL;
  auto sh = [&](const std::string& args) {
    const std::string cmd = "\"" + tool + "\" " + args + " > \"" + (dir / "log.txt").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  CHECK(sh("--help") == 0);
  CHECK(sh("train --help") == 0);
  for (const char* run : {"r1", "r2"}) {
    const fs::path d = dir / run;
    const std::string jobs = std::string(run) == "r1" ? "1" : "4";
    REQUIRE(sh("--seed 3 --jobs " + jobs + " gen-toy --out-dir \"" + (d / "toy").string() +
               "\" --utts 3 --frames 48 --dim 12") == 0);
    REQUIRE(sh("--seed 3 --jobs " + jobs + " train --pipeline spectrum --data \"" + (d / "toy").string() +
               "\" --model-dir \"" + (d / "model").string() + "\" --epochs 2 -q") == 0);
    REQUIRE(sh("--jobs " + jobs + " eval --ref \"" + (d / "toy").string() + "\" --conv \"" + (d / "toy").string() +
               "\" --out \"" + (d / "report.json").string() + "\"") == 0);
  }
  CHECK(tree(dir / "r1") == tree(dir / "r2"));
  CHECK(sh("f0prep \"" + (dir / "missing.evcf").string() + "\" --out \"" + (dir / "o.evcf").string() + "\"") == 1);
}
