#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "zomax/harness.hpp"

namespace {

void print_plan(const zomax::HyperparamPlan& plan) {
  std::printf("source:    %s\n", plan.source.c_str());
  std::printf("mu_max:    %.12g\n", plan.mu_max);
  std::printf("n_min:     %lld\n", plan.n_min);
  if (plan.t_min) std::printf("t_min:     %lld\n", *plan.t_min);
  std::printf("h_window:  (%.12g, %.12g]\n", plan.h_window.first,
              plan.h_window.second);
  for (const auto& w : plan.warnings) {
    std::printf("warning:   %s\n", w.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zeroth-order min-max optimisation toolkit"};
  app.require_subcommand(1);

  std::string config_path;

  auto* run = app.add_subcommand("run", "run a configured experiment");
  run->add_option("config", config_path, "experiment config file")->required();

  auto* compare = app.add_subcommand(
      "compare", "run the [variant *] sections of a config side by side");
  compare->add_option("config", config_path, "compare config file")->required();

  auto* mvi = app.add_subcommand(
      "mvi", "sample the proximal inequality around a candidate point");
  mvi->add_option("config", config_path, "study config file")->required();

  auto* plan = app.add_subcommand(
      "plan", "print smoothing/iteration/sample guidelines for a setting");
  std::string setting;
  double L1 = 1, L0 = 1, rho = 0, lambda = 1, r0 = 1, eps = 0.1, h = 0.1;
  double D_z = 1, delta = 0.5;
  int d = 2;
  double sigma = 0;
  plan->add_option("setting", setting,
                   "unconstrained | constrained | nonsmooth")
      ->required();
  plan->add_option("--L1", L1, "gradient Lipschitz constant");
  plan->add_option("--L0", L0, "value Lipschitz constant (nonsmooth)");
  plan->add_option("--rho", rho, "variational inequality slack parameter");
  plan->add_option("--lambda", lambda, "metric scale (B = lambda I)");
  plan->add_option("--r0", r0, "distance of the start to the solution");
  plan->add_option("--eps", eps, "target stationarity tolerance");
  plan->add_option("--h2", h, "step size h2 (or h in the constrained case)");
  plan->add_option("--Dz", D_z, "feasible-set diameter (constrained)");
  plan->add_option("--delta", delta, "Goldstein radius (nonsmooth)");
  plan->add_option("--d", d, "problem dimension n+m");
  plan->add_option("--sigma", sigma,
                   "oracle standard-deviation bound; > 0 switches to the "
                   "variance-reduced rules");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return zomax::run_experiment(config_path);
    if (compare->parsed()) return zomax::compare_study(config_path);
    if (mvi->parsed()) return zomax::mvi_study(config_path);
    if (plan->parsed()) {
      std::optional<double> sig =
          sigma > 0 ? std::optional<double>(sigma) : std::nullopt;
      if (setting == "unconstrained") {
        print_plan(zomax::plan_unconstrained(
            {L1, rho, lambda, r0, eps, h, d, sig}));
      } else if (setting == "constrained") {
        print_plan(zomax::plan_constrained(
            {L1, rho, lambda, r0, eps, h, D_z, d, sig}));
      } else if (setting == "nonsmooth") {
        print_plan(zomax::plan_nonsmooth({L0, rho, delta, eps, r0, d, sig}));
      } else {
        std::fprintf(stderr,
                     "unknown setting '%s' (expected unconstrained, "
                     "constrained or nonsmooth)\n",
                     setting.c_str());
        return 1;
      }
      return 0;
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 0;
}
