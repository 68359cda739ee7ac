// Command-line front end: synthetic and real-data experiments, bound
// evaluators, and boxplot rendering.
//
// Exit codes: 0 success, 1 usage/parse error, 2 hypothesis or domain failure,
// 3 partial experiment failure.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecr/boxplot.hpp"
#include "ecr/bounds.hpp"
#include "ecr/csv.hpp"
#include "ecr/experiment.hpp"

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<ecr::Method> parse_method_list(const std::string& spec) {
  std::vector<ecr::Method> methods;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const std::string name = spec.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!name.empty()) {
      const auto m = ecr::parse_method(name);
      if (!m) throw UsageError("unknown method: " + name);
      methods.push_back(*m);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (methods.empty()) throw UsageError("no methods given");
  return methods;
}

int emit_report(const ecr::ExperimentReport& report, const std::string& output,
                bool normalized_table) {
  std::cout << ecr::format_config_echo(report) << "\n"
            << ecr::format_aggregates(report, normalized_table);
  if (!output.empty()) {
    ecr::write_text_file(output, ecr::report_csv(report));
    ecr::write_text_file(output + ".meta", ecr::format_config_echo(report));
    std::cout << "\nreport written to " << output << "\n";
  }
  if (report.any_failure) {
    std::cerr << "warning: some repeats failed\n";
    return 3;
  }
  return 0;
}

void print_value(const char* name, double v) {
  std::printf("%s = %.6g\n", name, v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"efficiency-oriented split conformal regression toolkit"};
  app.require_subcommand(1);

  // ---- run-synthetic ----------------------------------------------------
  auto* syn = app.add_subcommand("run-synthetic", "run a synthetic scenario");
  std::string syn_scenario = "linear";
  std::string syn_noise = "normal";
  std::string syn_methods = "split-cp,split-cp-huber,effort";
  std::string syn_model = "linear";
  std::string syn_output = "report.csv";
  ecr::RunConfig syn_cfg;
  syn->set_config("--config", "", "key = value config file; flags take precedence");
  syn->add_option("--scenario", syn_scenario, "linear | heteroscedastic | quadratic");
  syn->add_option("--noise", syn_noise, "normal | mix-normal | pareto | mix-pareto");
  syn->add_option("--methods", syn_methods, "comma-separated method list");
  syn->add_option("--alpha", syn_cfg.alpha, "miscoverage level");
  syn->add_option("--n-lrn", syn_cfg.n_lrn, "learn split size");
  syn->add_option("--n-cal", syn_cfg.n_cal, "calibration split size");
  syn->add_option("--n-test", syn_cfg.n_test, "test split size");
  syn->add_option("--repeats", syn_cfg.repeats, "number of repeats");
  syn->add_option("--seed", syn_cfg.seed, "master seed; all randomness derives from it");
  syn->add_option("--epsilon", syn_cfg.qae_epsilon, "quantile smoothing half-width");
  syn->add_option("--iterations", syn_cfg.qae_iterations, "gradient iterations");
  syn->add_option("--step-exponent", syn_cfg.step_exponent, "step size k^(-exponent)");
  syn->add_option("--huber-delta", syn_cfg.huber_delta, "huber loss parameter");
  syn->add_option("--knn-k", syn_cfg.knn_k, "neighbor count, 0 = ceil(sqrt(n))");
  syn->add_option("--model", syn_model, "linear | mlp");
  syn->add_option("--mlp-width", syn_cfg.model.hidden_width, "hidden layer width");
  syn->add_flag("--redraw-theta", syn_cfg.redraw_theta, "redraw linear coefficients per repeat");
  syn->add_flag("--center-noise", syn_cfg.center_noise, "subtract the analytic noise mean");
  syn->add_flag("--subsplit-learn", syn_cfg.subsplit_learn, "halve the learn split for ad-effort");
  syn->add_option("--jobs", syn_cfg.jobs, "parallel repeats (results are order-independent)");
  syn->add_option("--output", syn_output, "report CSV path (empty to skip)");

  // ---- run-real ----------------------------------------------------------
  auto* real = app.add_subcommand("run-real", "run 40/40/20 splits of a CSV dataset");
  std::string real_path;
  std::string real_methods = "ad-effort,lw-cp,cqr";
  std::string real_model = "linear";
  std::string real_output = "report.csv";
  ecr::RealRunConfig real_cfg;
  real->set_config("--config", "", "key = value config file; flags take precedence");
  real->add_option("data", real_path, "CSV with a header row; response in the last column")
      ->required();
  real->add_option("--methods", real_methods, "comma-separated method list");
  real->add_option("--alpha", real_cfg.alpha, "miscoverage level");
  real->add_option("--repeats", real_cfg.repeats, "number of random splits");
  real->add_option("--seed", real_cfg.seed, "master seed");
  real->add_option("--outlier-frac", real_cfg.outlier_frac, "fraction of contaminated responses");
  real->add_option("--outlier-mean-mult", real_cfg.outlier_mean_mult,
                   "outlier mean as a multiple of max(y)");
  real->add_option("--epsilon", real_cfg.qae_epsilon, "quantile smoothing half-width");
  real->add_option("--iterations", real_cfg.qae_iterations, "gradient iterations");
  real->add_option("--step-exponent", real_cfg.step_exponent, "step size k^(-exponent)");
  real->add_option("--huber-delta", real_cfg.huber_delta, "huber loss parameter");
  real->add_option("--knn-k", real_cfg.knn_k, "neighbor count, 0 = ceil(sqrt(n))");
  real->add_option("--model", real_model, "linear | mlp");
  real->add_option("--mlp-width", real_cfg.model.hidden_width, "hidden layer width");
  real->add_flag("--subsplit-learn", real_cfg.subsplit_learn, "halve the learn split for ad-effort");
  real->add_option("--jobs", real_cfg.jobs, "parallel repeats");
  real->add_option("--output", real_output, "report CSV path (empty to skip)");

  // ---- bounds ------------------------------------------------------------
  auto* bounds = app.add_subcommand("bounds", "closed-form bound evaluators");
  bounds->require_subcommand(1);
  long b_n = 1000, b_nc = 1000, b_nl = 1000;
  double b_alpha = 0.1, b_delta = 0.05;
  ecr::HolderParams holder;
  std::uint64_t b_finite = 0, b_vc = 0;
  double b_rade = -1.0;
  double b_a = 2.0, b_b = 0.0, b_phi = 0.0, b_psi = 0.0;

  auto add_holder = [&](CLI::App* cmd) {
    cmd->add_option("--holder-l", holder.l, "Holder constant L");
    cmd->add_option("--holder-gamma", holder.gamma, "Holder exponent in (0,1]");
    cmd->add_option("--holder-r", holder.r, "Holder window radius in (0,1]");
  };
  auto add_complexity = [&](CLI::App* cmd) {
    cmd->add_option("--finite-class", b_finite, "finite class size |F|");
    cmd->add_option("--vc", b_vc, "VC dimension");
    cmd->add_option("--rademacher", b_rade, "Rademacher complexity R_n");
  };
  auto complexity_input = [&]() -> ecr::ComplexityInput {
    const int given = (b_finite > 0) + (b_vc > 0) + (b_rade >= 0.0);
    if (given != 1) throw UsageError("give exactly one of --finite-class, --vc, --rademacher");
    if (b_finite > 0) return ecr::ComplexityInput::finite_class(b_finite);
    if (b_vc > 0) return ecr::ComplexityInput::vc_dimension(b_vc);
    return ecr::ComplexityInput::rademacher(b_rade);
  };

  auto* b_dkw = bounds->add_subcommand("dkw", "uniform empirical-CDF deviation");
  b_dkw->add_option("--n", b_n, "sample size");
  b_dkw->add_option("--delta", b_delta, "confidence parameter");

  auto* b_phi_cmd = bounds->add_subcommand("phi", "worst-case CDF estimation error");
  b_phi_cmd->add_option("--n", b_n, "sample size");
  b_phi_cmd->add_option("--delta", b_delta, "confidence parameter");
  add_complexity(b_phi_cmd);

  auto* b_prop = bounds->add_subcommand("prop31", "conservative oracle coverage level");
  b_prop->add_option("--nc", b_nc, "calibration size");
  b_prop->add_option("--alpha", b_alpha, "miscoverage level");
  b_prop->add_option("--delta", b_delta, "confidence parameter");

  auto* b_cor = bounds->add_subcommand("cor31", "excess length, fixed base predictor");
  b_cor->add_option("--nc", b_nc, "calibration size");
  b_cor->add_option("--alpha", b_alpha, "miscoverage level");
  b_cor->add_option("--delta", b_delta, "confidence parameter");
  add_holder(b_cor);

  auto* b_th1 = bounds->add_subcommand("theorem1", "excess length of the learned pipeline");
  b_th1->add_option("--nc", b_nc, "calibration size");
  b_th1->add_option("--nl", b_nl, "learn size");
  b_th1->add_option("--alpha", b_alpha, "miscoverage level");
  b_th1->add_option("--delta", b_delta, "confidence parameter");
  add_holder(b_th1);
  add_complexity(b_th1);

  auto* b_nested = bounds->add_subcommand("nested", "excess expected size, nested families");
  b_nested->add_option("--a", b_a, "linear size growth slope");
  b_nested->add_option("--b", b_b, "linear size growth offset");
  b_nested->add_option("--nc", b_nc, "calibration size");
  b_nested->add_option("--alpha", b_alpha, "miscoverage level");
  b_nested->add_option("--delta", b_delta, "confidence parameter");
  add_holder(b_nested);

  auto* b_th2 = bounds->add_subcommand("theorem2", "excess expected size, adaptive widths");
  b_th2->add_option("--nc", b_nc, "calibration size");
  b_th2->add_option("--delta", b_delta, "confidence parameter");
  b_th2->add_option("--phi", b_phi, "coverage complexity phi");
  b_th2->add_option("--psi", b_psi, "size complexity psi");
  add_holder(b_th2);

  // ---- plot ----------------------------------------------------------------
  auto* plot = app.add_subcommand("plot", "render report CSVs as an SVG boxplot");
  std::vector<std::string> plot_inputs;
  std::string plot_output;
  ecr::BoxplotOptions plot_opt;
  plot->add_option("reports", plot_inputs, "report CSV files")->required();
  plot->add_option("--output", plot_output, "SVG output path")->required();
  plot->add_option("--metric", plot_opt.metric, "mean_length | coverage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*syn) {
      const auto scenario = ecr::parse_scenario(syn_scenario);
      if (!scenario) throw UsageError("unknown scenario: " + syn_scenario);
      const auto noise = ecr::parse_noise(syn_noise);
      if (!noise) throw UsageError("unknown noise law: " + syn_noise);
      if (syn_model != "linear" && syn_model != "mlp") throw UsageError("unknown model: " + syn_model);
      syn_cfg.scenario = *scenario;
      syn_cfg.noise = *noise;
      syn_cfg.methods = parse_method_list(syn_methods);
      syn_cfg.model.kind = syn_model == "mlp" ? ecr::ModelKind::mlp : ecr::ModelKind::linear;
      return emit_report(ecr::run_synthetic(syn_cfg), syn_output, false);
    }
    if (*real) {
      if (real_model != "linear" && real_model != "mlp") throw UsageError("unknown model: " + real_model);
      real_cfg.methods = parse_method_list(real_methods);
      real_cfg.model.kind = real_model == "mlp" ? ecr::ModelKind::mlp : ecr::ModelKind::linear;
      return emit_report(ecr::run_real(real_path, real_cfg), real_output, true);
    }
    if (*bounds) {
      if (*b_dkw) {
        print_value("dkw_epsilon", ecr::dkw_epsilon(b_n, b_delta));
      } else if (*b_phi_cmd) {
        print_value("phi", ecr::phi_closed_form(complexity_input(), b_n, b_delta));
      } else if (*b_prop) {
        const auto level = ecr::conservative_oracle_level(b_nc, b_alpha, b_delta);
        print_value("oracle_level", level.level);
        if (level.rank_hypothesis_warning) {
          std::printf("warning: (n_c+1)(1-alpha) is an integer; the hypothesis fails\n");
        }
        if (level.saturated) std::printf("warning: level saturated at 1\n");
      } else if (*b_cor) {
        print_value("excess_length", ecr::excess_volume_bound_fixed_f(b_nc, b_alpha, b_delta, holder));
        std::printf("hypothesis (1-alpha)/n_c + sqrt(log(2/delta)/(2 n_c)) <= r: satisfied\n");
      } else if (*b_th1) {
        const auto b = ecr::effort_excess_volume_bound(b_nc, b_nl, b_alpha, b_delta, holder,
                                                       complexity_input());
        print_value("excess_length", b.total);
        print_value("calibration_term", b.calibration_term);
        print_value("learning_term", b.learning_term);
        std::printf("dominant term: %s\n",
                    b.learning_term > b.calibration_term ? "learning" : "calibration");
        std::printf("hypotheses satisfied\n");
      } else if (*b_nested) {
        print_value("excess_size", ecr::nested_length_bound(b_a, b_b, b_nc, b_alpha, b_delta, holder));
        std::printf("hypothesis (1-alpha)/n_c + sqrt(log(1/delta)/(2 n_c)) <= r: satisfied\n");
      } else if (*b_th2) {
        const auto b = ecr::adaptive_excess_volume_bound(b_nc, b_delta, holder, b_phi, b_psi);
        print_value("excess_size", b.total);
        print_value("size_term", b.size_term);
        print_value("quantile_term", b.quantile_term);
        std::printf("hypotheses satisfied\n");
      }
      return 0;
    }
    if (*plot) {
      ecr::write_text_file(plot_output, ecr::render_boxplot_svg(plot_inputs, plot_opt));
      std::cout << "boxplot written to " << plot_output << "\n";
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ecr::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
