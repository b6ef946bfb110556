#include <map>
#include <ostream>
#include <set>

#include <json.hpp>

#include "commands.hpp"
#include "evc/error.hpp"
#include "evc/evcf.hpp"
#include "evc/f0prep.hpp"
#include "evc/metrics.hpp"

namespace evc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Per-utterance files recognized by eval, keyed by the part after the stem.
constexpr const char* kMcep = ".mcep.evcf";
constexpr const char* kSpectrum = ".sp.evcf";
constexpr const char* kF0 = ".f0.evcf";

std::map<std::string, std::set<std::string>> scan(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::Io, dir.string() + " is not a directory");
  std::map<std::string, std::set<std::string>> found;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    for (const char* kind : {kMcep, kSpectrum, kF0})
      if (name.size() > std::string(kind).size() && name.ends_with(kind)) found[utterance_stem(e.path())].insert(kind);
  }
  return found;
}

UtteranceFeatures load(const fs::path& dir, const std::string& stem, const std::set<std::string>& kinds) {
  UtteranceFeatures u;
  if (kinds.count(kMcep)) u.mcep = read_features(dir / (stem + kMcep));
  if (kinds.count(kSpectrum)) u.spectrum = read_features(dir / (stem + kSpectrum));
  if (kinds.count(kF0)) u.f0_hz = interpolate_unvoiced(read_f0(dir / (stem + kF0))).values;
  return u;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json report_json(const MetricReport& r) {
  return json{{"mcd_db", opt_json(r.mcd_db)},
              {"lsd_db", opt_json(r.lsd_db)},
              {"f0_rmse_hz", opt_json(r.f0_rmse_hz)},
              {"pcc", opt_json(r.pcc)},
              {"n_frames_compared", r.n_frames_compared}};
}

std::string csv_cell(const std::optional<double>& v) {
  if (!v) return "";
  json j = *v;
  return j.dump();
}

std::string report_csv(const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::string s = "utterance,mcd_db,lsd_db,f0_rmse_hz,pcc,n_frames_compared\n";
  for (const auto& [id, r] : rows)
    s += id + "," + csv_cell(r.mcd_db) + "," + csv_cell(r.lsd_db) + "," + csv_cell(r.f0_rmse_hz) + "," +
         csv_cell(r.pcc) + "," + std::to_string(r.n_frames_compared) + "\n";
  return s;
}

struct EvalOpts {
  fs::path ref, conv, out, csv;
  bool allow_partial = false;
  bool no_c0 = false;
  std::string f0_scale = "linear";
};

void run_eval(const EvalOpts& o, const Context& ctx) {
  EvalOptions eo;
  eo.mcd.has_c0 = !o.no_c0;
  if (o.f0_scale == "linear")
    eo.f0_scale = F0Scale::Linear;
  else if (o.f0_scale == "log")
    eo.f0_scale = F0Scale::Log;
  else
    fail(ErrorKind::Config, "unknown --f0-scale '" + o.f0_scale + "'");

  const auto ref = scan(o.ref);
  const auto conv = scan(o.conv);
  std::vector<std::string> paired, unpaired;
  for (const auto& [stem, kinds] : ref) {
    const auto it = conv.find(stem);
    bool shared = false;
    if (it != conv.end())
      for (const auto& k : kinds) shared = shared || it->second.count(k) > 0;
    (shared ? paired : unpaired).push_back(stem);
  }
  for (const auto& [stem, kinds] : conv)
    if (!ref.count(stem)) unpaired.push_back(stem);

  for (const auto& u : unpaired) ctx.err << "unpaired utterance: " << u << "\n";
  if (paired.empty()) fail(ErrorKind::Pairing, "no utterances pair up between " + o.ref.string() + " and " + o.conv.string());
  if (!unpaired.empty() && !o.allow_partial)
    fail(ErrorKind::Pairing, std::to_string(unpaired.size()) + " unpaired utterance(s); pass --allow-partial to skip");
  if (!unpaired.empty()) ctx.err << "warning: averaging over " << paired.size() << " paired utterance(s)\n";

  std::vector<MetricReport> reports(paired.size());
  parallel_for(paired.size(), ctx.jobs, [&](std::size_t i) {
    const std::string& stem = paired[i];
    std::set<std::string> common;
    for (const auto& k : ref.at(stem))
      if (conv.at(stem).count(k)) common.insert(k);
    reports[i] = evaluate(load(o.ref, stem, common), load(o.conv, stem, common), eo);
  });

  json doc{{"utterances", json::array()}, {"unpaired", unpaired}};
  std::vector<std::pair<std::string, MetricReport>> rows;
  for (std::size_t i = 0; i < paired.size(); ++i) {
    json r = report_json(reports[i]);
    r["utterance"] = paired[i];
    doc["utterances"].push_back(std::move(r));
    rows.emplace_back(paired[i], reports[i]);
  }
  const MetricReport mean = mean_report(reports);
  doc["mean"] = report_json(mean);
  rows.emplace_back("mean", mean);

  const std::string text = doc.dump(2) + "\n";
  if (o.out.empty())
    ctx.out << text;
  else
    write_file_atomic(o.out, text);
  if (!o.csv.empty()) write_file_atomic(o.csv, report_csv(rows));
}

}  // namespace

void add_eval_command(CLI::App& app, CommandList& cmds) {
  auto o = std::make_shared<EvalOpts>();
  CLI::App* sub = app.add_subcommand("eval", "MCD, LSD, F0 RMSE and PCC between reference and converted utterances");
  sub->add_option("--ref", o->ref, "Reference directory (<utt>.mcep.evcf, <utt>.sp.evcf, <utt>.f0.evcf)")->required();
  sub->add_option("--conv", o->conv, "Converted directory, same layout")->required();
  sub->add_option("--out", o->out, "JSON report path (default: stdout)");
  sub->add_option("--csv", o->csv, "CSV report path");
  sub->add_flag("--allow-partial", o->allow_partial, "Average over paired utterances when some are missing");
  sub->add_flag("--no-c0", o->no_c0, "MCEP files have no energy coefficient in column 0");
  sub->add_option("--f0-scale", o->f0_scale, "F0 RMSE on linear Hz or log Hz")->capture_default_str();
  cmds.emplace_back(sub, [o](const Context& c) { run_eval(*o, c); });
}

}  // namespace evc::cli
