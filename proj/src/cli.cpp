#include "greyforce/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "greyforce/errors.hpp"
#include "greyforce/greybox.hpp"
#include "greyforce/metrics.hpp"
#include "greyforce/rng.hpp"

namespace greyforce::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

// Strict view of one JSON object: every key must be consumed.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(label() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  Section child(const std::string& key) { return Section(raw(key), path_.empty() ? key : path_ + "." + key); }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key, double def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(where(key) + " must be finite");
    return d;
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(where(key) + " must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  int integer(const std::string& key, int def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
    return v.get<int>();
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + " must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
    return v.get<std::string>();
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_array()) throw ConfigError(where(key) + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) throw ConfigError(where(key) + " must be an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_array()) throw ConfigError(where(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where(key) + " must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  void done() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown config key " + where(item.key()));
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config document" : path_; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

PredictionMode parse_mode(const std::string& s) {
  if (s == "osa") return PredictionMode::osa;
  if (s == "mpo") return PredictionMode::mpo;
  if (s == "mc_mpo" || s == "mc-mpo") return PredictionMode::mc_mpo;
  throw ConfigError("unknown prediction mode \"" + s + "\" (expected osa, mpo, mc_mpo)");
}

std::string mode_name(PredictionMode m) {
  switch (m) {
    case PredictionMode::osa: return "osa";
    case PredictionMode::mpo: return "mpo";
    case PredictionMode::mc_mpo: return "mc_mpo";
  }
  return "?";
}

std::string mode_label(PredictionMode m) {
  switch (m) {
    case PredictionMode::osa: return "OSA";
    case PredictionMode::mpo: return "MPO";
    case PredictionMode::mc_mpo: return "MC-MPO";
  }
  return "?";
}

LagMetric parse_metric(const std::string& s) {
  for (LagMetric m : kLagMetrics) {
    if (metric_name(m) == s) return m;
  }
  throw ConfigError("unknown lag metric \"" + s + "\" (expected AICc_OSA, AICc_MPO, BIC_OSA, BIC_MPO)");
}

WhiteboxMode parse_whitebox_mode(const std::string& s) {
  if (s == "refit-per-subset") return WhiteboxMode::refit_per_subset;
  if (s == "fixed-external") return WhiteboxMode::fixed_external;
  throw ConfigError("unknown white-box mode \"" + s + "\" (expected refit-per-subset, fixed-external)");
}

TrainingObjective parse_objective(const std::string& s) {
  if (s == "automatic") return TrainingObjective::automatic;
  if (s == "mpo_nlpl") return TrainingObjective::mpo_nlpl;
  if (s == "nlml") return TrainingObjective::nlml;
  throw ConfigError("unknown objective \"" + s + "\" (expected automatic, mpo_nlpl, nlml)");
}

void check_models(const std::vector<std::string>& names, const std::string& where) {
  if (names.empty()) throw ConfigError(where + " must name at least one model");
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (std::find(kModelNames.begin(), kModelNames.end(), n) == kModelNames.end()) {
      throw ConfigError("unknown model \"" + n + "\" in " + where);
    }
    if (!seen.insert(n).second) throw ConfigError("model \"" + n + "\" listed twice in " + where);
  }
}

QPSOOverrides parse_qpso(Section s) {
  QPSOOverrides o;
  if (s.has("swarm_size")) o.swarm_size = s.unsigned_int("swarm_size", 0);
  if (s.has("stability_tol")) o.stability_tol = s.number("stability_tol", 0.0);
  if (s.has("max_iters")) o.max_iters = s.unsigned_int("max_iters", 0);
  if (s.has("patience")) o.patience = s.unsigned_int("patience", 0);
  if (s.has("n_repeat_runs")) o.n_repeat_runs = s.unsigned_int("n_repeat_runs", 0);
  if (s.has("contraction_start")) o.contraction_start = s.number("contraction_start", 0.0);
  if (s.has("contraction_end")) o.contraction_end = s.number("contraction_end", 0.0);
  s.done();
  return o;
}

SyntheticConfig parse_synthetic(Section s, std::uint64_t master_seed) {
  SyntheticConfig c;
  c.n_points = s.unsigned_int("n_points", c.n_points);
  c.sample_rate_hz = s.number("sample_rate_hz", c.sample_rate_hz);
  c.cd_prime = s.number("cd_prime", c.cd_prime);
  c.cm_prime = s.number("cm_prime", c.cm_prime);
  c.noise_std = s.number("noise_std", c.noise_std);
  c.seed = s.unsigned_int("seed", derive_seed(master_seed, "synthetic"));
  if (s.has("waves")) {
    const Json& w = s.raw("waves");
    if (!w.is_array()) throw ConfigError("data.synthetic.waves must be an array");
    c.waves.clear();
    for (std::size_t i = 0; i < w.size(); ++i) {
      Section ws(w[i], "data.synthetic.waves[" + std::to_string(i) + "]");
      WaveComponent comp;
      comp.amplitude = ws.number("amplitude", comp.amplitude);
      comp.frequency_hz = ws.number("frequency_hz", comp.frequency_hz);
      comp.phase_rad = ws.number("phase_rad", comp.phase_rad);
      ws.done();
      c.waves.push_back(comp);
    }
  }
  if (s.has("residual")) {
    Section r = s.child("residual");
    const std::string kind = r.string("kind", "autoregressive_nonlinear");
    if (kind == "none") c.residual.kind = ResidualKind::none;
    else if (kind == "autoregressive_nonlinear") c.residual.kind = ResidualKind::autoregressive_nonlinear;
    else throw ConfigError("data.synthetic.residual.kind must be none or autoregressive_nonlinear");
    c.residual.gain = r.number("gain", c.residual.gain);
    c.residual.ar1 = r.number("ar1", c.residual.ar1);
    c.residual.ar2 = r.number("ar2", c.residual.ar2);
    r.done();
  }
  if (s.has("arx")) {
    Section a = s.child("arx");
    ArxTruth t;
    t.lags.exogenous = a.integer("exogenous_lags", t.lags.exogenous);
    t.lags.autoregressive = a.integer("autoregressive_lags", t.lags.autoregressive);
    t.exogenous = a.numbers("exogenous", {});
    t.autoregressive = a.numbers("autoregressive", {});
    a.done();
    c.arx = t;
  }
  s.done();
  c.validate();
  return c;
}

struct Prepared {
  TimeSeriesDataset data;
  Splits splits;
};

Prepared prepare(const RunConfig& cfg) {
  Prepared p;
  if (const auto* path = std::get_if<fs::path>(&cfg.data)) {
    p.data = load_csv(*path);
  } else {
    p.data = synthesize(std::get<SyntheticConfig>(cfg.data));
  }
  try {
    p.splits = split_sequential(p.data, cfg.splits);
  } catch (const BoundsError& e) {
    throw ConfigError(std::string("splits: ") + e.what());
  }
  return p;
}

NIGPrior whitebox_prior(const RunConfig& cfg) {
  return NIGPrior::from_physical(cfg.whitebox.physical, cfg.whitebox.relative_sd, cfg.whitebox.shape,
                                 cfg.whitebox.scale);
}

GibbsOptions gibbs_options(const RunConfig& cfg, const std::string& component) {
  GibbsOptions g;
  g.n_draws = cfg.whitebox.n_draws;
  g.burn_in = cfg.whitebox.burn_in;
  g.seed = derive_seed(cfg.seed, component);
  return g;
}

bool is_static(const std::string& name) { return name.rfind("static", 0) == 0; }
bool is_residual(const std::string& name) { return name.find("grey-residual") != std::string::npos; }
bool is_augmented(const std::string& name) { return name.find("grey-augmented") != std::string::npos; }

void apply(QPSOConfig& q, const QPSOOverrides& o) {
  if (o.swarm_size) q.swarm_size = *o.swarm_size;
  if (o.stability_tol) q.stability_tol = *o.stability_tol;
  if (o.max_iters) q.max_iters = *o.max_iters;
  if (o.patience) q.patience = *o.patience;
  if (o.n_repeat_runs) q.n_repeat_runs = *o.n_repeat_runs;
  if (o.contraction_start) q.contraction_start = *o.contraction_start;
  if (o.contraction_end) q.contraction_end = *o.contraction_end;
}

LagSpec model_spec(const std::string& name, const LagSpec& lags) {
  return is_static(name) ? LagSpec{lags.exogenous, 0} : lags;
}

GPNARXTrainingConfig training_config(const RunConfig& cfg, const std::string& name, const LagSpec& spec) {
  const std::size_t n_exog = is_augmented(name) ? 3 : 2;
  const std::size_t dim = n_exog * static_cast<std::size_t>(spec.exogenous + 1) +
                          static_cast<std::size_t>(spec.autoregressive) + 2;
  GPNARXTrainingConfig c;
  c.objective = cfg.optimizer.objective;
  c.search_lo = cfg.optimizer.search_lo;
  c.search_hi = cfg.optimizer.search_hi;
  c.stability_cost_tol = cfg.optimizer.stability_cost_tol;
  c.stability_position_tol = cfg.optimizer.stability_position_tol;
  QPSOConfig q = spec.autoregressive == 0 ? QPSOConfig::for_static_gp(dim, c.search_lo, c.search_hi)
                                          : QPSOConfig::for_gp_narx(dim, c.search_lo, c.search_hi);
  apply(q, spec.autoregressive == 0 ? cfg.optimizer.static_gp : cfg.optimizer.gp_narx);
  q.validate();
  c.qpso = q;
  c.seed = derive_seed(cfg.seed, name);
  return c;
}

// Files written by one subcommand, listed in its manifest.
class Outputs {
 public:
  Outputs(const RunConfig& cfg, std::string command) : cfg_(cfg), command_(std::move(command)) {
    fs::create_directories(dir());
  }

  fs::path dir() const { return cfg_.output_dir / command_; }

  fs::path file(const std::string& name) {
    files_.push_back(command_ + "/" + name);
    return dir() / name;
  }

  fs::path external(const std::string& relative) {
    files_.push_back(relative);
    const fs::path p = cfg_.output_dir / relative;
    fs::create_directories(p.parent_path());
    return p;
  }

  void manifest(Json extra = Json::object()) {
    Json echo = cfg_.source;
    echo.erase("output_dir");
    echo.erase("workers");
    Json m{{"command", command_}, {"version", kVersion}, {"seed", cfg_.seed}, {"config", echo}};
    for (auto& item : extra.items()) m[item.key()] = item.value();
    std::sort(files_.begin(), files_.end());
    m["outputs"] = files_;
    save_json(dir() / "manifest.json", m);
  }

 private:
  const RunConfig& cfg_;
  std::string command_;
  std::vector<std::string> files_;
};

struct LoadedModel {
  std::string name;
  std::optional<MorisonPosterior> whitebox;
  std::optional<GPNARXModel> blackbox;
  std::optional<GreyBoxModel> greybox;

  std::size_t max_lag() const {
    if (blackbox) return static_cast<std::size_t>(blackbox->spec.max_lag());
    if (greybox) return static_cast<std::size_t>(greybox->spec().max_lag());
    return 0;
  }
};

fs::path model_path(const RunConfig& cfg, const std::string& name) {
  return cfg.output_dir / "models" / (name + ".json");
}

LoadedModel load_model(const RunConfig& cfg, const std::string& name) {
  const Json j = load_json(model_path(cfg, name));
  LoadedModel m;
  m.name = name;
  const std::string kind = j.value("kind", "");
  if (kind == "whitebox") m.whitebox = posterior_from_json(j.at("model"));
  else if (kind == "gpnarx") m.blackbox = gpnarx_from_json(j.at("model"));
  else if (kind == "greybox") m.greybox = greybox_from_json(j.at("model"));
  else throw SchemaError(model_path(cfg, name).string() + ": unknown model kind \"" + kind + "\"");
  return m;
}

struct Evaluated {
  PredictiveSeries series;
  std::optional<MCPredictiveSeries> mc;
};

Evaluated predict_model(const LoadedModel& m, const TimeSeriesDataset& test, PredictionMode mode,
                        std::size_t n_samples, std::uint64_t seed) {
  Evaluated e;
  if (m.whitebox) {
    e.series = predict_whitebox(*m.whitebox, test, true);
  } else if (m.blackbox) {
    if (m.blackbox->n_exogenous != 2) throw ShapeError("model \"" + m.name + "\" expects other inputs than [U, Udot]");
    const NarxData d = NarxData::from_dataset(test);
    switch (mode) {
      case PredictionMode::osa: e.series = osa_predict(*m.blackbox, d); break;
      case PredictionMode::mpo: e.series = mpo_predict(*m.blackbox, d); break;
      case PredictionMode::mc_mpo:
        e.mc = mc_mpo_predict(*m.blackbox, d, n_samples, seed);
        e.series = e.mc->summary();
        break;
    }
  } else {
    GreyBoxPrediction g = predict_greybox(*m.greybox, test, mode, n_samples, seed);
    e.series = std::move(g.series);
    e.mc = std::move(g.mc);
  }
  return e;
}

std::string table_model_label(const std::string& name) {
  if (name == "whitebox") return "Morison";
  if (is_residual(name)) return "Residual modelling";
  if (is_augmented(name)) return "Input augmentation";
  return "Black-box";
}

LagSpec resolve_lags(const RunConfig& cfg, const Prepared& p, Outputs* out) {
  if (!cfg.lag_search.use_for_training) return cfg.lags;
  const LagSearchResult r =
      lag_search(p.splits.train, p.splits.validation, cfg.lag_search.max_exogenous, cfg.lag_search.max_autoregressive);
  const LagSpec chosen = r.best_for(cfg.lag_search.metric);
  if (out != nullptr) {
    write_lag_heatmap_csv(out->file("lag_heatmap.csv"), r);
  }
  return chosen;
}

}  // namespace

RunConfig parse_config(const Json& doc, const fs::path& base_dir) {
  RunConfig cfg;
  cfg.source = doc;
  Section root(doc, "");
  cfg.seed = root.unsigned_int("seed", 0);
  cfg.workers = root.integer("workers", 1);
  if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
  cfg.output_dir = root.string("output_dir", "out");

  if (!root.has("data")) throw ConfigError("config needs a data section (csv or synthetic)");
  {
    Section d = root.child("data");
    if (d.has("csv") == d.has("synthetic")) throw ConfigError("data needs exactly one of csv, synthetic");
    if (d.has("csv")) {
      fs::path p = d.string("csv", "");
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      cfg.data = p;
    } else {
      cfg.data = parse_synthetic(d.child("synthetic"), cfg.seed);
    }
    d.done();
  }
  if (root.has("splits")) {
    Section s = root.child("splits");
    cfg.splits.train = s.unsigned_int("train", cfg.splits.train);
    cfg.splits.validation = s.unsigned_int("validation", cfg.splits.validation);
    cfg.splits.test = s.unsigned_int("test", cfg.splits.test);
    s.done();
    if (cfg.splits.train == 0 || cfg.splits.validation == 0 || cfg.splits.test == 0) {
      throw ConfigError("every split size must be positive");
    }
  }
  if (root.has("lags")) {
    Section s = root.child("lags");
    cfg.lags.exogenous = s.integer("exogenous", cfg.lags.exogenous);
    cfg.lags.autoregressive = s.integer("autoregressive", cfg.lags.autoregressive);
    s.done();
  }
  if (cfg.lags.exogenous < 0 || cfg.lags.autoregressive < 1) {
    throw ConfigError("lags need exogenous >= 0 and autoregressive >= 1");
  }
  if (root.has("lag_search")) {
    Section s = root.child("lag_search");
    auto& l = cfg.lag_search;
    l.max_exogenous = s.integer("max_exogenous", l.max_exogenous);
    l.max_autoregressive = s.integer("max_autoregressive", l.max_autoregressive);
    l.metric = parse_metric(s.string("metric", metric_name(l.metric)));
    l.use_for_training = s.boolean("use_for_training", l.use_for_training);
    s.done();
    if (l.max_exogenous < 0 || l.max_autoregressive < 1) {
      throw ConfigError("lag_search needs max_exogenous >= 0 and max_autoregressive >= 1");
    }
  }
  if (root.has("whitebox")) {
    Section s = root.child("whitebox");
    auto& w = cfg.whitebox;
    if (s.has("physical")) {
      Section p = s.child("physical");
      w.physical.rho = p.number("rho", w.physical.rho);
      w.physical.diameter = p.number("diameter", w.physical.diameter);
      w.physical.cd = p.number("cd", w.physical.cd);
      w.physical.cm = p.number("cm", w.physical.cm);
      p.done();
    }
    w.relative_sd = s.number("relative_sd", w.relative_sd);
    w.shape = s.number("shape", w.shape);
    w.scale = s.number("scale", w.scale);
    w.n_draws = s.unsigned_int("n_draws", w.n_draws);
    w.burn_in = s.unsigned_int("burn_in", w.burn_in);
    s.done();
    w.physical.validate();
    if (!(w.relative_sd > 0.0)) throw ConfigError("whitebox.relative_sd must be positive");
    if (w.n_draws < 1) throw ConfigError("whitebox.n_draws must be at least 1");
  }
  cfg.models = root.strings("models", cfg.models);
  check_models(cfg.models, "models");
  if (root.has("modes")) {
    cfg.modes.clear();
    for (const auto& m : root.strings("modes", {})) cfg.modes.push_back(parse_mode(m));
    if (cfg.modes.empty()) throw ConfigError("modes must name at least one prediction mode");
  }
  if (root.has("optimizer")) {
    Section s = root.child("optimizer");
    auto& o = cfg.optimizer;
    o.search_lo = s.number("search_lo", o.search_lo);
    o.search_hi = s.number("search_hi", o.search_hi);
    o.objective = parse_objective(s.string("objective", objective_name(o.objective)));
    o.stability_cost_tol = s.number("stability_cost_tol", o.stability_cost_tol);
    o.stability_position_tol = s.number("stability_position_tol", o.stability_position_tol);
    o.fail_on_instability = s.boolean("fail_on_instability", o.fail_on_instability);
    if (s.has("static")) o.static_gp = parse_qpso(s.child("static"));
    if (s.has("narx")) o.gp_narx = parse_qpso(s.child("narx"));
    s.done();
    if (!(o.search_lo < o.search_hi)) throw ConfigError("optimizer.search_lo must be below search_hi");
  }
  cfg.mc_samples = root.unsigned_int("mc_samples", cfg.mc_samples);
  if (cfg.mc_samples < 1) throw ConfigError("mc_samples must be at least 1");
  cfg.posterior_paths = root.unsigned_int("posterior_paths", cfg.posterior_paths);

  cfg.coverage.targets.clear();
  for (int t = 0; t <= 80; t += 5) cfg.coverage.targets.push_back(t);
  if (root.has("coverage")) {
    Section s = root.child("coverage");
    auto& c = cfg.coverage;
    c.targets = s.numbers("targets", c.targets);
    c.tolerance = s.number("tolerance", c.tolerance);
    c.geometry.n_bins = s.unsigned_int("n_bins", c.geometry.n_bins);
    c.geometry.grid_resolution = s.unsigned_int("grid_resolution", c.geometry.grid_resolution);
    c.geometry.fill_window = s.unsigned_int("fill_window", c.geometry.fill_window);
    c.models = s.strings("models", c.models);
    if (s.has("whitebox_modes")) {
      c.whitebox_modes.clear();
      for (const auto& m : s.strings("whitebox_modes", {})) c.whitebox_modes.push_back(parse_whitebox_mode(m));
    }
    if (s.has("mc_samples")) c.mc_samples = s.unsigned_int("mc_samples", 1);
    s.done();
  }
  check_models(cfg.coverage.models, "coverage.models");
  for (double t : cfg.coverage.targets) {
    if (!(t >= 0.0 && t <= 100.0)) throw ConfigError("coverage targets must lie in [0, 100]");
  }
  if (!std::is_sorted(cfg.coverage.targets.begin(), cfg.coverage.targets.end())) {
    throw ConfigError("coverage targets must be ascending");
  }
  if (cfg.coverage.whitebox_modes.empty()) throw ConfigError("coverage.whitebox_modes must not be empty");
  if (cfg.coverage.geometry.n_bins < 3) throw ConfigError("coverage.n_bins must be at least 3");
  if (cfg.coverage.geometry.grid_resolution < 2) throw ConfigError("coverage.grid_resolution must be at least 2");
  if (cfg.coverage.mc_samples && *cfg.coverage.mc_samples < 1) throw ConfigError("coverage.mc_samples must be >= 1");

  if (root.has("spectra")) {
    Section s = root.child("spectra");
    cfg.spectra_windows = s.unsigned_int("n_windows", cfg.spectra_windows);
    s.done();
    if (cfg.spectra_windows < 1) throw ConfigError("spectra.n_windows must be at least 1");
  }
  root.done();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  const Json doc = load_json(path);
  return parse_config(doc, path.parent_path());
}

void cmd_synth(const RunConfig& cfg) {
  const auto* syn = std::get_if<SyntheticConfig>(&cfg.data);
  if (syn == nullptr) throw ConfigError("synth needs a data.synthetic section");
  Outputs out(cfg, "synth");
  write_csv(out.file("synthetic.csv"), synthesize(*syn));
  out.manifest();
}

void cmd_lagsearch(const RunConfig& cfg) {
  const Prepared p = prepare(cfg);
  Outputs out(cfg, "lagsearch");
  const auto& ls = cfg.lag_search;
  const LagSearchResult r = lag_search(p.splits.train, p.splits.validation, ls.max_exogenous, ls.max_autoregressive);
  write_lag_heatmap_csv(out.file("lag_heatmap.csv"), r);
  Json best = Json::object();
  for (LagMetric m : kLagMetrics) best[metric_name(m)] = to_json(r.best_for(m));
  Json failed = Json::array();
  for (const auto& c : r.cells) {
    if (!c.ok) failed.push_back({{"lags", to_json(c.lags)}, {"error", c.error}});
  }
  save_json(out.file("chosen_lags.json"), Json{{"metric", metric_name(ls.metric)},
                                               {"chosen", to_json(r.best_for(ls.metric))},
                                               {"best", best},
                                               {"n_scored", r.n_scored},
                                               {"failed_cells", failed}});
  out.manifest();
}

bool cmd_train(const RunConfig& cfg) {
  const Prepared p = prepare(cfg);
  Outputs out(cfg, "train");
  const LagSpec lags = resolve_lags(cfg, p, &out);

  const MorisonPosterior wb = fit_whitebox(p.splits.train, whitebox_prior(cfg), gibbs_options(cfg, "whitebox"));
  Json report{{"lags", to_json(lags)},
              {"whitebox",
               {{"beta_mean", {wb.beta_mean()(0), wb.beta_mean()(1)}},
                {"beta_covariance",
                 {{wb.beta_covariance()(0, 0), wb.beta_covariance()(0, 1)},
                  {wb.beta_covariance()(1, 0), wb.beta_covariance()(1, 1)}}},
                {"mean_noise_variance", wb.mean_noise_variance()},
                {"n_draws", wb.n_draws()}}},
              {"models", Json::object()}};
  save_json(out.external("models/whitebox.json"), Json{{"kind", "whitebox"}, {"model", to_json(wb)}});

  bool stable = true;
  for (const auto& name : cfg.models) {
    if (name == "whitebox") continue;
    const LagSpec spec = model_spec(name, lags);
    const GPNARXTrainingConfig tc = training_config(cfg, name, spec);
    GPNARXTrainingReport rep;
    Json saved;
    if (is_residual(name)) {
      saved = Json{{"kind", "greybox"},
                   {"model", to_json(train_residual(p.splits.train, p.splits.validation, wb, spec, tc, &rep))}};
    } else if (is_augmented(name)) {
      saved = Json{{"kind", "greybox"},
                   {"model", to_json(train_augmented(p.splits.train, p.splits.validation, wb, spec, tc, &rep))}};
    } else {
      saved = Json{{"kind", "gpnarx"}, {"model", to_json(train_gpnarx(p.splits.train, p.splits.validation, spec, tc, &rep))}};
    }
    save_json(out.external("models/" + name + ".json"), saved);
    if (rep.optim) {
      write_cost_trace_csv(out.file("qpso_trace_" + name + ".csv"), *rep.optim);
      if (!rep.stability.stable) stable = false;
    }
    report["models"][name] = to_json(rep);
  }
  report["all_stable"] = stable;
  save_json(out.file("training_report.json"), report);
  out.manifest();
  return stable || !cfg.optimizer.fail_on_instability;
}

void cmd_evaluate(const RunConfig& cfg) {
  for (const auto& name : cfg.models) {
    if (!fs::exists(model_path(cfg, name))) {
      throw IoError("missing model file " + model_path(cfg, name).string() + " (run train first)");
    }
  }
  const Prepared p = prepare(cfg);
  std::vector<LoadedModel> models;
  for (const auto& name : cfg.models) models.push_back(load_model(cfg, name));
  std::size_t eval_start = 0;
  for (const auto& m : models) eval_start = std::max(eval_start, m.max_lag());
  const TimeSeriesDataset& test = p.splits.test;
  if (eval_start + 2 > test.size()) throw ConfigError("test split is too short for the models' lags");

  Outputs out(cfg, "evaluate");
  const auto& ftr = p.splits.train.force();
  const Eigen::Map<const Eigen::VectorXd> f(ftr.data(), static_cast<Eigen::Index>(ftr.size()));
  const double train_mean = f.mean();
  const double train_var = (f.array() - train_mean).square().mean();
  const std::span<const double> truth(test.force().data() + eval_start, test.size() - eval_start);

  struct Row {
    std::string section, model, prediction;
    double nmse, msll;
  };
  std::vector<Row> rows;
  auto score = [&](const LoadedModel& m, PredictionMode mode, const std::string& section,
                   const std::string& prediction) {
    const Evaluated e = predict_model(m, test, mode, cfg.mc_samples, derive_seed(cfg.seed, "mc:" + m.name));
    const auto off = static_cast<Eigen::Index>(eval_start - e.series.first_index);
    const auto n = static_cast<Eigen::Index>(truth.size());
    const Eigen::VectorXd mean = e.series.mean.segment(off, n);
    const Eigen::VectorXd var = e.series.variance.segment(off, n);
    rows.push_back({section, table_model_label(m.name), prediction, nmse(truth, as_span(mean)),
                    msll(truth, as_span(mean), as_span(var), train_mean, train_var)});
    const std::string tag = prediction == "static" ? m.name : m.name + "_" + mode_name(mode);
    write_predictive_csv(out.file("posterior_" + tag + ".csv"), test, e.series, e.mc ? &*e.mc : nullptr,
                         cfg.posterior_paths);
  };
  auto find = [&](const std::string& name) -> const LoadedModel* {
    for (const auto& m : models) {
      if (m.name == name) return &m;
    }
    return nullptr;
  };

  if (const auto* m = find("whitebox")) score(*m, PredictionMode::osa, "Morison", "static");
  for (const char* name : {"static-gp", "static-grey-residual", "static-grey-augmented"}) {
    if (const auto* m = find(name)) score(*m, PredictionMode::osa, "Static GP", "static");
  }
  for (PredictionMode mode : {PredictionMode::osa, PredictionMode::mpo, PredictionMode::mc_mpo}) {
    if (std::find(cfg.modes.begin(), cfg.modes.end(), mode) == cfg.modes.end()) continue;
    for (const char* name : {"gpnarx", "gpnarx-grey-residual", "gpnarx-grey-augmented"}) {
      if (const auto* m = find(name)) score(*m, mode, "GP-NARX " + mode_label(mode), mode_name(mode));
    }
  }

  std::ofstream csv(out.file("evaluation.csv"));
  if (!csv) throw IoError("cannot write evaluation table");
  csv << "section,model,prediction,nmse,msll,n_scored,warmup_excluded\n";
  for (const auto& r : rows) {
    csv << r.section << ',' << r.model << ',' << r.prediction << ',' << format_double(r.nmse) << ','
        << format_double(r.msll) << ',' << truth.size() << ',' << eval_start << '\n';
  }
  csv.close();
  out.manifest(Json{{"n_scored", truth.size()}, {"warmup_excluded", eval_start}});
}

void cmd_coverage(const RunConfig& cfg) {
  const Prepared p = prepare(cfg);
  Outputs out(cfg, "coverage");
  const LagSpec lags = cfg.lags;
  const std::size_t n_samples = cfg.coverage.mc_samples.value_or(cfg.mc_samples);

  std::vector<SweepModel> models;
  for (const auto& name : cfg.coverage.models) {
    const LagSpec spec = model_spec(name, lags);
    if (name == "whitebox") {
      models.push_back(whitebox_sweep_model());
      continue;
    }
    const GPNARXTrainingConfig tc = training_config(cfg, name, spec);
    if (is_residual(name)) models.push_back(residual_sweep_model(name, spec, tc, n_samples));
    else if (is_augmented(name)) models.push_back(augmented_sweep_model(name, spec, tc, n_samples));
    else models.push_back(blackbox_sweep_model(name, spec, tc, n_samples));
  }

  const auto& geo = cfg.coverage.geometry;
  write_boundary_csv(out.file("boundary_train.csv"),
                     radial_boundary(input_points(p.splits.train), geo.n_bins, geo.fill_window));
  write_boundary_csv(out.file("boundary_validation.csv"),
                     radial_boundary(input_points(p.splits.validation), geo.n_bins, geo.fill_window));
  write_boundary_csv(out.file("boundary_test.csv"),
                     radial_boundary(input_points(p.splits.test), geo.n_bins, geo.fill_window));

  Json summary = Json::object();
  for (WhiteboxMode mode : cfg.coverage.whitebox_modes) {
    SweepConfig sc;
    sc.targets = cfg.coverage.targets;
    sc.tolerance = cfg.coverage.tolerance;
    sc.coverage = geo;
    sc.whitebox_mode = mode;
    sc.prior = whitebox_prior(cfg);
    sc.gibbs = gibbs_options(cfg, "whitebox");
    sc.eval_start = static_cast<std::size_t>(lags.max_lag());
    sc.seed = derive_seed(cfg.seed, "coverage:" + whitebox_mode_name(mode));
    if (mode == WhiteboxMode::fixed_external) {
      sc.external_whitebox = fit_whitebox(p.splits.validation, sc.prior, gibbs_options(cfg, "whitebox-external"));
    }
    const auto rows = coverage_sweep(p.splits, models, sc);
    write_sweep_csv(out.file("sweep_" + whitebox_mode_name(mode) + ".csv"), rows);
    std::size_t failed = 0, unreached = 0;
    for (const auto& r : rows) {
      failed += r.ok ? 0 : 1;
      unreached += r.reached ? 0 : 1;
    }
    summary[whitebox_mode_name(mode)] = {{"rows", rows.size()}, {"failed_cells", failed}, {"unreached_rows", unreached}};
  }
  out.manifest(Json{{"sweeps", summary}});
}

void cmd_spectra(const RunConfig& cfg) {
  const Prepared p = prepare(cfg);
  Outputs out(cfg, "spectra");
  const std::vector<NamedDataset> sets{{"train", p.splits.train}, {"validation", p.splits.validation},
                                       {"test", p.splits.test}};
  const SpectraComparison cmp = spectra_comparison(sets, cfg.spectra_windows);
  write_similarity_csv(out.file("pearson.csv"), cmp, true);
  write_similarity_csv(out.file("cosine.csv"), cmp, false);
  write_spectra_csv(out.file("spectra.csv"), cmp);
  out.manifest();
}

int run(int argc, char** argv) {
  CLI::App app{"Grey-box Morison + GP-NARX wave-force modelling"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"synth", "Write the configured synthetic dataset"},
      {"lagsearch", "ARX lag search with AICc/BIC heatmaps"},
      {"train", "Train the configured models"},
      {"evaluate", "Score trained models on the test split"},
      {"coverage", "Coverage-vs-NMSE sweeps"},
      {"spectra", "Welch spectra and similarity of the splits"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--workers", workers, "Worker threads (overrides the config)");
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    Json doc = load_json(config_path);
    if (!doc.is_object()) throw ConfigError("config document must be an object");
    if (seed) doc["seed"] = *seed;
    if (workers) doc["workers"] = *workers;
    if (out_dir) doc["output_dir"] = *out_dir;
    const RunConfig cfg = parse_config(doc, fs::path(config_path).parent_path());
    omp_set_num_threads(cfg.workers);
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec || !fs::is_directory(cfg.output_dir)) {
      throw IoError("cannot create output directory " + cfg.output_dir.string());
    }

    if (command == "synth") cmd_synth(cfg);
    else if (command == "lagsearch") cmd_lagsearch(cfg);
    else if (command == "evaluate") cmd_evaluate(cfg);
    else if (command == "coverage") cmd_coverage(cfg);
    else if (command == "spectra") cmd_spectra(cfg);
    else if (command == "train" && !cmd_train(cfg)) {
      std::cerr << "greyforce: QPSO repeat runs disagree; see train/training_report.json\n";
      return 1;
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "greyforce " << command << ": " << e.what() << '\n';
    return e.is_input_error() ? 2 : 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "greyforce " << command << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "greyforce " << command << ": " << e.what() << '\n';
    return 1;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage{"greyforce"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace greyforce::cli
