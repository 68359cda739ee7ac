#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ecr/conformal.hpp"
#include "ecr/csv.hpp"
#include "ecr/synth.hpp"

namespace ecr {

enum class Method { split_cp, split_cp_huber, effort, lw_cp, cqr, ad_effort };

const std::vector<Method>& all_methods();
std::string method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

std::string scenario_name(ScenarioKind k);
std::optional<ScenarioKind> parse_scenario(const std::string& name);
std::string noise_name(NoiseLaw law);
std::optional<NoiseLaw> parse_noise(const std::string& name);

struct RunConfig {
  ScenarioKind scenario = ScenarioKind::linear_3d;
  NoiseLaw noise = NoiseLaw::normal;
  std::vector<Method> methods = {Method::split_cp, Method::split_cp_huber, Method::effort};
  double alpha = 0.1;
  int n_lrn = 1000;
  int n_cal = 1000;
  int n_test = 1000;
  int repeats = 50;
  std::uint64_t seed = 1;
  double qae_epsilon = 0.1;
  int qae_iterations = 1000;
  double step_exponent = 0.6;
  double huber_delta = 1.35;
  int knn_k = 0;  // 0 = ceil(sqrt(n))
  ModelSpec model{};
  bool redraw_theta = false;  // default: one theta per experiment
  bool center_noise = false;
  bool subsplit_learn = false;  // ad-effort only
  int jobs = 1;
};

struct RealRunConfig {
  std::vector<Method> methods = {Method::ad_effort, Method::lw_cp, Method::cqr};
  double alpha = 0.1;
  int repeats = 10;
  std::uint64_t seed = 1;
  double outlier_frac = 0.0;
  double outlier_mean_mult = 2.0;
  double qae_epsilon = 0.1;
  int qae_iterations = 1000;
  double step_exponent = 0.6;
  double huber_delta = 1.35;
  int knn_k = 0;
  ModelSpec model{};
  bool subsplit_learn = false;
  int jobs = 1;
};

struct RepeatRecord {
  int repeat = 0;  // 1-based
  std::uint64_t seed = 0;
  Method method = Method::split_cp;
  double coverage = 0.0;
  double mean_length = 0.0;
  bool failed = false;
  std::string error;
};

struct MethodAggregate {
  Method method = Method::split_cp;
  int count = 0;  // successful repeats
  double cov_mean = 0.0, cov_sd = 0.0;
  double len_mean = 0.0, len_sd = 0.0, len_min = 0.0, len_max = 0.0;
  int failures = 0;
};

struct ExperimentReport {
  std::vector<RepeatRecord> records;  // (repeat, method) order
  std::vector<MethodAggregate> aggregates;
  bool any_failure = false;
  std::vector<std::pair<std::string, std::string>> config_echo;
};

// Runs the configured scenario `repeats` times on derived per-repeat streams.
// A module error inside a repeat aborts that repeat, records failure rows for
// its methods, and the remaining repeats continue.
ExperimentReport run_synthetic(const RunConfig& cfg);

// Ingests a numeric CSV (response in the last column), optionally contaminates
// the responses, and runs seeded 40/40/20 splits.
ExperimentReport run_real(const std::string& csv_path, const RealRunConfig& cfg);

// stable schema: header repeat,seed,method,coverage,mean_length; LF endings;
// 12 significant digits
std::string report_csv(const ExperimentReport& report);

// aligned aggregate table; with_normalized adds the per-report normalized
// mean length (divided by the largest mean length in the report)
std::string format_aggregates(const ExperimentReport& report, bool with_normalized = false);

// "key = value" lines of the effective config (also a valid config file)
std::string format_config_echo(const ExperimentReport& report);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace ecr
