#include "ecr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace ecr {

namespace {

constexpr std::uint64_t kRepeatStreamBase = 1000;
constexpr std::uint64_t kOutlierStream = 7777;

std::uint64_t repeat_seed(std::uint64_t master, int repeat_index) {
  return derive_stream(master, kRepeatStreamBase + static_cast<std::uint64_t>(repeat_index));
}

struct MethodSettings {
  double alpha;
  double qae_epsilon;
  int qae_iterations;
  double step_exponent;
  double huber_delta;
  int knn_k;
  ModelSpec model;
  bool subsplit_learn;
};

IntervalPredictor build_method(Method m, const Dataset& data, const MethodSettings& s,
                               std::uint64_t seed) {
  StepSchedule schedule{1.0, s.step_exponent};
  switch (m) {
    case Method::split_cp:
    case Method::split_cp_huber: {
      FitConfig fit_cfg;
      fit_cfg.loss = m == Method::split_cp ? Loss::least_squares() : Loss::huber(s.huber_delta);
      fit_cfg.iterations = s.qae_iterations;
      fit_cfg.schedule = schedule;
      fit_cfg.seed = seed;
      return split_cp(data, s.alpha, fit_cfg, s.model);
    }
    case Method::effort:
    case Method::ad_effort: {
      QaeConfig qae_cfg;
      qae_cfg.alpha = s.alpha;
      qae_cfg.epsilon = s.qae_epsilon;
      qae_cfg.iterations = s.qae_iterations;
      qae_cfg.schedule = schedule;
      qae_cfg.seed = seed;
      if (m == Method::effort) return effort(data, s.alpha, qae_cfg, s.model);
      return ad_effort(data, s.alpha, qae_cfg, s.model, s.knn_k, s.subsplit_learn);
    }
    case Method::lw_cp:
      return locally_weighted_cp(data, s.alpha, s.knn_k, s.model);
    case Method::cqr:
      return cqr(data, s.alpha, s.knn_k);
  }
  throw std::logic_error("build_method: unknown method");
}

// one repeat: any module error aborts the whole repeat and marks every
// requested method as failed
std::vector<RepeatRecord> run_repeat(const std::vector<Method>& methods, const Dataset& data,
                                     const MethodSettings& s, int repeat, std::uint64_t seed) {
  std::vector<RepeatRecord> out;
  out.reserve(methods.size());
  try {
    const Subset test = data.subset(Split::test);
    for (Method m : methods) {
      const IntervalPredictor predictor = build_method(m, data, s, seed);
      const Evaluation eval = coverage_and_length(predictor, test);
      out.push_back({repeat, seed, m, eval.coverage, eval.mean_length, false, {}});
    }
  } catch (const std::exception& e) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.clear();
    for (Method m : methods) out.push_back({repeat, seed, m, nan, nan, true, e.what()});
  }
  return out;
}

double sample_sd(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

void aggregate(ExperimentReport& report, const std::vector<Method>& methods) {
  for (Method m : methods) {
    MethodAggregate agg;
    agg.method = m;
    std::vector<double> cov;
    std::vector<double> len;
    for (const RepeatRecord& r : report.records) {
      if (r.method != m) continue;
      if (r.failed) {
        ++agg.failures;
        report.any_failure = true;
        continue;
      }
      cov.push_back(r.coverage);
      len.push_back(r.mean_length);
    }
    agg.count = static_cast<int>(cov.size());
    if (!cov.empty()) {
      agg.cov_mean = std::accumulate(cov.begin(), cov.end(), 0.0) / cov.size();
      agg.len_mean = std::accumulate(len.begin(), len.end(), 0.0) / len.size();
      agg.cov_sd = sample_sd(cov, agg.cov_mean);
      agg.len_sd = sample_sd(len, agg.len_mean);
      agg.len_min = *std::min_element(len.begin(), len.end());
      agg.len_max = *std::max_element(len.begin(), len.end());
    }
    report.aggregates.push_back(agg);
  }
}

// repeats are independent tasks; records land in a preallocated slot per
// repeat so the output order never depends on scheduling
void run_repeats(int repeats, int jobs, const std::function<std::vector<RepeatRecord>(int)>& task,
                 ExperimentReport& report) {
  std::vector<std::vector<RepeatRecord>> slots(static_cast<std::size_t>(repeats));
  if (jobs <= 1) {
    for (int r = 0; r < repeats; ++r) slots[static_cast<std::size_t>(r)] = task(r);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int r = next.fetch_add(1); r < repeats; r = next.fetch_add(1)) {
        slots[static_cast<std::size_t>(r)] = task(r);
      }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min(jobs, repeats);
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (auto& slot : slots) {
    report.records.insert(report.records.end(), slot.begin(), slot.end());
  }
}

std::string join_methods(const std::vector<Method>& methods) {
  std::string out;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (i) out += ",";
    out += method_name(methods[i]);
  }
  return out;
}

void validate_common(double alpha, int repeats, double epsilon, int iterations, double huber_delta,
                     int knn_k, int jobs, const ModelSpec& model) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("config: alpha must lie in (0,1)");
  if (repeats < 1) throw std::invalid_argument("config: repeats must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("config: epsilon must be positive");
  if (iterations < 1) throw std::invalid_argument("config: iterations must be >= 1");
  if (!(huber_delta > 0.0)) throw std::invalid_argument("config: huber delta must be positive");
  if (knn_k < 0) throw std::invalid_argument("config: knn k must be nonnegative");
  if (jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
  if (model.kind == ModelKind::mlp && model.hidden_width < 1) {
    throw std::invalid_argument("config: mlp width must be positive");
  }
}

}  // namespace

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = {Method::split_cp, Method::split_cp_huber,
                                              Method::effort,   Method::lw_cp,
                                              Method::cqr,      Method::ad_effort};
  return methods;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::split_cp: return "split-cp";
    case Method::split_cp_huber: return "split-cp-huber";
    case Method::effort: return "effort";
    case Method::lw_cp: return "lw-cp";
    case Method::cqr: return "cqr";
    case Method::ad_effort: return "ad-effort";
  }
  return "?";
}

std::optional<Method> parse_method(const std::string& name) {
  for (Method m : all_methods()) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

std::string scenario_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::linear_3d: return "linear";
    case ScenarioKind::heteroscedastic_1d: return "heteroscedastic";
    case ScenarioKind::quadratic_nn: return "quadratic";
  }
  return "?";
}

std::optional<ScenarioKind> parse_scenario(const std::string& name) {
  if (name == "linear") return ScenarioKind::linear_3d;
  if (name == "heteroscedastic") return ScenarioKind::heteroscedastic_1d;
  if (name == "quadratic") return ScenarioKind::quadratic_nn;
  return std::nullopt;
}

std::string noise_name(NoiseLaw law) {
  switch (law) {
    case NoiseLaw::normal: return "normal";
    case NoiseLaw::mix_normal: return "mix-normal";
    case NoiseLaw::pareto: return "pareto";
    case NoiseLaw::mix_pareto: return "mix-pareto";
  }
  return "?";
}

std::optional<NoiseLaw> parse_noise(const std::string& name) {
  if (name == "normal") return NoiseLaw::normal;
  if (name == "mix-normal") return NoiseLaw::mix_normal;
  if (name == "pareto") return NoiseLaw::pareto;
  if (name == "mix-pareto") return NoiseLaw::mix_pareto;
  return std::nullopt;
}

ExperimentReport run_synthetic(const RunConfig& cfg) {
  validate_common(cfg.alpha, cfg.repeats, cfg.qae_epsilon, cfg.qae_iterations, cfg.huber_delta,
                  cfg.knn_k, cfg.jobs, cfg.model);
  if (cfg.methods.empty()) throw std::invalid_argument("config: no methods requested");
  if (cfg.n_lrn < 1 || cfg.n_cal < 1 || cfg.n_test < 1) {
    throw std::invalid_argument("config: split sizes must be >= 1");
  }
  const int s_train = cfg.subsplit_learn ? cfg.n_lrn / 2 : cfg.n_lrn;
  if (cfg.knn_k > std::min(cfg.n_lrn, s_train)) {
    throw std::invalid_argument("config: knn k exceeds the learn split size");
  }
  if (cfg.scenario != ScenarioKind::linear_3d && cfg.redraw_theta) {
    throw std::invalid_argument("config: redraw-theta only applies to the linear scenario");
  }

  const MethodSettings settings{cfg.alpha,       cfg.qae_epsilon, cfg.qae_iterations,
                                cfg.step_exponent, cfg.huber_delta, cfg.knn_k,
                                cfg.model,       cfg.subsplit_learn};

  ExperimentReport report;
  auto task = [&](int r) {
    const std::uint64_t seed = repeat_seed(cfg.seed, r);
    ScenarioSpec spec;
    spec.kind = cfg.scenario;
    spec.noise = cfg.noise;
    spec.n_lrn = cfg.n_lrn;
    spec.n_cal = cfg.n_cal;
    spec.n_test = cfg.n_test;
    spec.seed = seed;
    spec.theta_seed = cfg.redraw_theta ? seed : cfg.seed;
    spec.center_noise = cfg.center_noise;
    try {
      const Dataset data = generate(spec);
      return run_repeat(cfg.methods, data, settings, r + 1, seed);
    } catch (const std::exception& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      std::vector<RepeatRecord> out;
      for (Method m : cfg.methods) out.push_back({r + 1, seed, m, nan, nan, true, e.what()});
      return out;
    }
  };
  run_repeats(cfg.repeats, cfg.jobs, task, report);
  aggregate(report, cfg.methods);

  report.config_echo = {
      {"scenario", scenario_name(cfg.scenario)},
      {"noise", noise_name(cfg.noise)},
      {"methods", join_methods(cfg.methods)},
      {"alpha", format_double(cfg.alpha)},
      {"n-lrn", std::to_string(cfg.n_lrn)},
      {"n-cal", std::to_string(cfg.n_cal)},
      {"n-test", std::to_string(cfg.n_test)},
      {"repeats", std::to_string(cfg.repeats)},
      {"seed", std::to_string(cfg.seed)},
      {"epsilon", format_double(cfg.qae_epsilon)},
      {"iterations", std::to_string(cfg.qae_iterations)},
      {"step-exponent", format_double(cfg.step_exponent)},
      {"huber-delta", format_double(cfg.huber_delta)},
      {"knn-k", std::to_string(cfg.knn_k)},
      {"model", cfg.model.kind == ModelKind::linear ? "linear" : "mlp"},
      {"mlp-width", std::to_string(cfg.model.hidden_width)},
      {"redraw-theta", cfg.redraw_theta ? "true" : "false"},
      {"center-noise", cfg.center_noise ? "true" : "false"},
      {"subsplit-learn", cfg.subsplit_learn ? "true" : "false"},
      {"jobs", std::to_string(cfg.jobs)},
  };
  return report;
}

ExperimentReport run_real(const std::string& csv_path, const RealRunConfig& cfg) {
  validate_common(cfg.alpha, cfg.repeats, cfg.qae_epsilon, cfg.qae_iterations, cfg.huber_delta,
                  cfg.knn_k, cfg.jobs, cfg.model);
  if (cfg.methods.empty()) throw std::invalid_argument("config: no methods requested");
  if (!(cfg.outlier_frac >= 0.0 && cfg.outlier_frac < 1.0)) {
    throw std::invalid_argument("config: outlier fraction must lie in [0,1)");
  }
  if (!(cfg.outlier_mean_mult > 0.0)) {
    throw std::invalid_argument("config: outlier mean multiplier must be positive");
  }

  const CsvTable table = read_numeric_csv(csv_path);
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  if (n < 10) throw std::invalid_argument("run_real: need at least 10 data rows");
  if (table.cols() < 2) throw std::invalid_argument("run_real: need covariates plus a response column");
  const auto d = static_cast<Eigen::Index>(table.cols() - 1);

  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    y[i] = table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
  }

  // contamination: replace a seeded subset of responses with draws centered at
  // mult * max(y)
  int n_outliers = 0;
  if (cfg.outlier_frac > 0.0) {
    n_outliers = static_cast<int>(std::floor(cfg.outlier_frac * static_cast<double>(n) + 0.5));
    if (n_outliers > 0) {
      const double mean = cfg.outlier_mean_mult * y.maxCoeff();
      SplitMix64 rng(derive_stream(cfg.seed, kOutlierStream));
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
      for (int i = 0; i < n_outliers; ++i) {
        const auto j = i + static_cast<Eigen::Index>(rng.next() % static_cast<std::uint64_t>(n - i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        y[idx[static_cast<std::size_t>(i)]] = mean + rng.gaussian();
      }
    }
  }

  const int n_lrn = static_cast<int>(std::floor(0.4 * static_cast<double>(n)));
  const int n_cal = static_cast<int>(std::floor(0.4 * static_cast<double>(n)));
  const int n_test = static_cast<int>(n) - n_lrn - n_cal;
  if (n_lrn < 1 || n_cal < 1 || n_test < 1) {
    throw std::invalid_argument("run_real: 40/40/20 split leaves an empty part");
  }
  const int s_train = cfg.subsplit_learn ? n_lrn / 2 : n_lrn;
  if (cfg.knn_k > std::min(n_lrn, s_train)) {
    throw std::invalid_argument("config: knn k exceeds the learn split size");
  }

  const MethodSettings settings{cfg.alpha,       cfg.qae_epsilon, cfg.qae_iterations,
                                cfg.step_exponent, cfg.huber_delta, cfg.knn_k,
                                cfg.model,       cfg.subsplit_learn};

  ExperimentReport report;
  auto task = [&](int r) {
    const std::uint64_t seed = repeat_seed(cfg.seed, r);
    try {
      // seeded permutation, then 40/40/20 with the remainder to test
      SplitMix64 rng(seed);
      std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
      for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng.next() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
      }
      Dataset data;
      data.x = x;
      data.y = y;
      data.split.assign(static_cast<std::size_t>(n), Split::test);
      for (int i = 0; i < n_lrn; ++i) data.split[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = Split::learn;
      for (int i = n_lrn; i < n_lrn + n_cal; ++i) {
        data.split[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = Split::cal;
      }
      return run_repeat(cfg.methods, data, settings, r + 1, seed);
    } catch (const std::exception& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      std::vector<RepeatRecord> out;
      for (Method m : cfg.methods) out.push_back({r + 1, seed, m, nan, nan, true, e.what()});
      return out;
    }
  };
  run_repeats(cfg.repeats, cfg.jobs, task, report);
  aggregate(report, cfg.methods);

  report.config_echo = {
      {"data", csv_path},
      {"methods", join_methods(cfg.methods)},
      {"alpha", format_double(cfg.alpha)},
      {"rows", std::to_string(n)},
      {"split", std::to_string(n_lrn) + "/" + std::to_string(n_cal) + "/" + std::to_string(n_test)},
      {"repeats", std::to_string(cfg.repeats)},
      {"seed", std::to_string(cfg.seed)},
      {"outlier-frac", format_double(cfg.outlier_frac)},
      {"outlier-mean-mult", format_double(cfg.outlier_mean_mult)},
      {"outliers", std::to_string(n_outliers)},
      {"epsilon", format_double(cfg.qae_epsilon)},
      {"iterations", std::to_string(cfg.qae_iterations)},
      {"step-exponent", format_double(cfg.step_exponent)},
      {"huber-delta", format_double(cfg.huber_delta)},
      {"knn-k", std::to_string(cfg.knn_k)},
      {"model", cfg.model.kind == ModelKind::linear ? "linear" : "mlp"},
      {"mlp-width", std::to_string(cfg.model.hidden_width)},
      {"subsplit-learn", cfg.subsplit_learn ? "true" : "false"},
      {"jobs", std::to_string(cfg.jobs)},
  };
  return report;
}

std::string report_csv(const ExperimentReport& report) {
  std::string out = "repeat,seed,method,coverage,mean_length\n";
  for (const RepeatRecord& r : report.records) {
    out += std::to_string(r.repeat);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += csv_quote(method_name(r.method));
    out += ',';
    out += format_double(r.coverage);
    out += ',';
    out += format_double(r.mean_length);
    out += '\n';
  }
  return out;
}

std::string format_aggregates(const ExperimentReport& report, bool with_normalized) {
  double norm = 0.0;
  if (with_normalized) {
    for (const RepeatRecord& r : report.records) {
      if (!r.failed && std::isfinite(r.mean_length)) norm = std::max(norm, r.mean_length);
    }
  }
  char line[256];
  std::string out;
  std::snprintf(line, sizeof line, "%-15s %4s %10s %10s %12s %12s %12s %12s", "method", "n",
                "cov_mean", "cov_sd", "len_mean", "len_sd", "len_min", "len_max");
  out += line;
  if (with_normalized) out += "   norm_len";
  out += '\n';
  for (const MethodAggregate& a : report.aggregates) {
    std::snprintf(line, sizeof line, "%-15s %4d %10.4f %10.4f %12.5g %12.5g %12.5g %12.5g",
                  method_name(a.method).c_str(), a.count, a.cov_mean, a.cov_sd, a.len_mean, a.len_sd,
                  a.len_min, a.len_max);
    out += line;
    if (with_normalized) {
      std::snprintf(line, sizeof line, "   %8.4f", norm > 0.0 ? a.len_mean / norm : 0.0);
      out += line;
    }
    if (a.failures > 0) {
      std::snprintf(line, sizeof line, "   (%d failed)", a.failures);
      out += line;
    }
    out += '\n';
  }
  return out;
}

std::string format_config_echo(const ExperimentReport& report) {
  std::string out;
  for (const auto& [key, value] : report.config_echo) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ecr
