#include "greyforce/serialize.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "greyforce/errors.hpp"

namespace greyforce {

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

template <typename Matrix>
Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::VectorXd vector_from(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from(const Json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) throw SchemaError("ragged matrix in model file");
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), c) = j[i][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

// nlohmann's type errors are input problems from the caller's point of view.
template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

Json to_json(const LagSpec& spec) { return Json{{"exogenous", spec.exogenous}, {"autoregressive", spec.autoregressive}}; }

LagSpec lag_spec_from_json(const Json& j) {
  return guarded("lag spec", [&] {
    LagSpec s{j.at("exogenous").get<int>(), j.at("autoregressive").get<int>()};
    s.validate();
    return s;
  });
}

Json to_json(const MorisonPosterior& post) {
  return Json{{"beta_draws", matrix_json(post.beta_draws)},
              {"sigma_n_sq_draws", vector_json(post.noise_variance_draws)},
              {"prior",
               {{"mean", vector_json(post.prior.mean)},
                {"covariance", matrix_json(post.prior.covariance)},
                {"shape", post.prior.shape},
                {"scale", post.prior.scale}}},
              {"seed", post.seed}};
}

MorisonPosterior posterior_from_json(const Json& j) {
  return guarded("white-box posterior", [&] {
    MorisonPosterior p;
    p.beta_draws = matrix_from(j.at("beta_draws"), 2);
    p.noise_variance_draws = vector_from(j.at("sigma_n_sq_draws"));
    const Json& pr = j.at("prior");
    p.prior.mean = vector_from(pr.at("mean"));
    p.prior.covariance = matrix_from(pr.at("covariance"), 2);
    p.prior.shape = pr.at("shape").get<double>();
    p.prior.scale = pr.at("scale").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.validate();
    return p;
  });
}

Json to_json(const GPModel& model) {
  const auto& h = model.hyper();
  const auto& o = model.options();
  return Json{{"hyper",
               {{"signal_variance", h.signal_variance},
                {"length_scales", vector_json(h.length_scales)},
                {"noise_variance", h.noise_variance}}},
              {"options",
               {{"standardize_inputs", o.standardize_inputs},
                {"center_targets", o.center_targets},
                {"empty_prior_mean", o.empty_prior_mean}}},
              {"inputs", matrix_json(model.train_inputs())},
              {"targets", vector_json(model.train_targets())}};
}

GPModel gp_from_json(const Json& j) {
  return guarded("GP model", [&] {
    GPHyperparams h;
    const Json& hj = j.at("hyper");
    h.signal_variance = hj.at("signal_variance").get<double>();
    h.length_scales = vector_from(hj.at("length_scales"));
    h.noise_variance = hj.at("noise_variance").get<double>();
    GPFitOptions o;
    const Json& oj = j.at("options");
    o.standardize_inputs = oj.at("standardize_inputs").get<bool>();
    o.center_targets = oj.at("center_targets").get<bool>();
    o.empty_prior_mean = oj.at("empty_prior_mean").get<double>();
    const Eigen::MatrixXd x = matrix_from(j.at("inputs"), h.length_scales.size());
    const Eigen::VectorXd y = vector_from(j.at("targets"));
    return gp_fit(x, y, h, o);
  });
}

Json to_json(const GPNARXModel& model) {
  return Json{{"spec", to_json(model.spec)},
              {"target_channel", std::string(channel_name(model.target_channel))},
              {"transform", transform_name(model.transform)},
              {"n_exogenous", model.n_exogenous},
              {"gp", to_json(model.gp)}};
}

GPNARXModel gpnarx_from_json(const Json& j) {
  return guarded("GP-NARX model", [&] {
    GPNARXModel m;
    m.spec = lag_spec_from_json(j.at("spec"));
    m.transform = parse_transform(j.at("transform").get<std::string>());
    m.n_exogenous = j.at("n_exogenous").get<std::size_t>();
    m.gp = gp_from_json(j.at("gp"));
    if (m.gp.hyper().input_dim() != m.input_dim()) {
      throw SchemaError("GP input dimension does not match the lag spec");
    }
    return m;
  });
}

Json to_json(const GreyBoxModel& model) {
  return Json{{"architecture", architecture_name(model.architecture)},
              {"spec", to_json(model.spec())},
              {"include_whitebox_uncertainty", model.include_whitebox_uncertainty},
              {"whitebox", to_json(model.whitebox)},
              {"blackbox", to_json(model.blackbox)}};
}

GreyBoxModel greybox_from_json(const Json& j) {
  return guarded("grey-box model", [&] {
    GreyBoxModel m;
    m.architecture = parse_architecture(j.at("architecture").get<std::string>());
    m.include_whitebox_uncertainty = j.at("include_whitebox_uncertainty").get<bool>();
    m.whitebox = posterior_from_json(j.at("whitebox"));
    m.blackbox = gpnarx_from_json(j.at("blackbox"));
    return m;
  });
}

Json to_json(const QPSOConfig& cfg) {
  Json bounds = Json::array();
  for (const auto& [lo, hi] : cfg.bounds) bounds.push_back({lo, hi});
  return Json{{"swarm_size", cfg.swarm_size},
              {"stability_tol", cfg.stability_tol},
              {"max_iters", cfg.max_iters},
              {"patience", cfg.patience},
              {"contraction_start", cfg.contraction_start},
              {"contraction_end", cfg.contraction_end},
              {"n_repeat_runs", cfg.n_repeat_runs},
              {"seed", cfg.seed},
              {"bounds", bounds}};
}

Json to_json(const StabilityVerdict& v) {
  return Json{{"stable", v.stable},
              {"outlier_runs", v.outlier_runs},
              {"max_cost_gap", number(v.max_cost_gap)},
              {"max_position_gap", number(v.max_position_gap)}};
}

Json to_json(const GPNARXTrainingReport& report) {
  Json j{{"objective", objective_name(report.objective)},
         {"n_train_rows", report.n_train_rows},
         {"n_validation_rows", report.n_validation_rows},
         {"target_scale", report.target_scale},
         {"hyper",
          {{"signal_variance", report.hyper.signal_variance},
           {"length_scales", vector_json(report.hyper.length_scales)},
           {"noise_variance", report.hyper.noise_variance}}}};
  if (report.optim) {
    Json runs = Json::array();
    for (const auto& r : report.optim->runs) {
      runs.push_back({{"cost", number(r.cost)}, {"iterations", r.iterations}});
    }
    j["qpso"] = to_json(report.qpso);
    j["final_cost"] = number(report.optim->best_cost);
    j["best_run"] = report.optim->best_run;
    j["evaluations"] = report.optim->evaluations;
    j["runs"] = runs;
    j["stability"] = to_json(report.stability);
  } else {
    j["qpso"] = nullptr;
    j["zero_data"] = true;
  }
  return j;
}

void save_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_predictive_csv(const std::filesystem::path& path, const TimeSeriesDataset& ds,
                          const PredictiveSeries& pred, const MCPredictiveSeries* mc, std::size_t max_paths) {
  if (pred.first_index + pred.size() > ds.size()) throw ShapeError("prediction longer than its dataset");
  const std::size_t k = mc == nullptr ? 0 : std::min(max_paths, mc->n_samples());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "t,mean,variance";
  for (std::size_t p = 0; p < k; ++p) out << ",path_" << p;
  out << '\n';
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    out << format_double(ds.time(pred.first_index + i)) << ',' << format_double(pred.mean(e)) << ','
        << format_double(pred.variance(e));
    for (std::size_t p = 0; p < k; ++p) out << ',' << format_double(mc->paths(static_cast<Eigen::Index>(p), e));
    out << '\n';
  }
}

void write_cost_trace_csv(const std::filesystem::path& path, const OptimResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "run,iteration,best_cost\n";
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    const auto& trace = result.runs[r].cost_trace;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      out << r << ',' << i << ',' << (std::isfinite(trace[i]) ? format_double(trace[i]) : "inf") << '\n';
    }
  }
}

}  // namespace greyforce
