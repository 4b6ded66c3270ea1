#ifndef ZOMAX_SOLVERS_HPP
#define ZOMAX_SOLVERS_HPP

#include <optional>
#include <string>
#include <vector>

#include "zomax/oracles.hpp"
#include "zomax/problems.hpp"

namespace zomax {

enum class SolverVariant { ZOEG, VRZOEG, ModifiedVRZOEG, FirstOrderEG, GDA };

struct StepSchedule {
  static StepSchedule constant(double h) {
    if (!(h > 0)) throw std::invalid_argument("step size must be positive");
    return {h};
  }
  double value(long long) const { return h; }
  double h = 1e-3;
};

struct SolverConfig {
  SolverVariant variant = SolverVariant::ZOEG;
  JointPoint start;
  StepSchedule h1 = StepSchedule::constant(1e-3);
  StepSchedule h2 = StepSchedule::constant(1e-3);
  long long iterations = 0;
  OracleConfig oracle;
  std::uint64_t seed = 0;
  long long record_every = 1;
  // An infeasible start is projected onto the feasible set by default;
  // Reject turns it into an error instead.
  enum class StartMode { Project, Reject } start_mode = StartMode::Project;
  double divergence_threshold = 1e12;
  // Monte-Carlo sample count for the recorded diagnostic norm when the
  // problem has no analytic gradient. These draws live on their own stream
  // lane and are billed separately from the algorithm's evaluations.
  long long diag_mc_samples = 16;
};

struct TraceRecord {
  long long k = 0;
  JointPoint z;
  std::optional<JointPoint> z_hat;  // extrapolation computed at iteration k
  double f_value = 0;
  double diag_norm = 0;
  long long cum_evals = 0;  // evaluations consumed before iteration k
  double wall_time_s = 0;
};

struct RunTrace {
  enum class Status { Completed, Diverged, EvaluationFailed };

  std::vector<TraceRecord> records;
  JointPoint final_point;
  double final_f = 0;
  long long iterations_run = 0;
  long long total_evals = 0;  // algorithm evaluations (function or gradient)
  long long diag_evals = 0;   // extra evaluations spent on recorded diagnostics
  std::uint64_t seed = 0;
  Status status = Status::Completed;
  std::string status_detail;
  std::vector<std::string> warnings;
  double wall_time_s = 0;
};

// Two-projection extragradient iteration driven by single-sample Gaussian
// smoothing oracles: extrapolate with a fresh direction, update with another.
RunTrace run_zoeg(const MinMaxProblem& problem, const SolverConfig& cfg);

// Same iteration with each oracle call averaged over t_k directions.
RunTrace run_vr_zoeg(const MinMaxProblem& problem, const SolverConfig& cfg);

// Variance-reduced iteration with steps preconditioned by B^{-1}.
RunTrace run_modified_vr_zoeg(const MinMaxProblem& problem,
                              const SolverConfig& cfg);

// First-order baselines; require an analytic gradient operator.
RunTrace run_first_order_eg(const MinMaxProblem& problem,
                            const SolverConfig& cfg);
RunTrace run_gda(const MinMaxProblem& problem, const SolverConfig& cfg);

RunTrace run_solver(const MinMaxProblem& problem, const SolverConfig& cfg);

// Step-size window check against the known sufficient conditions when the
// problem carries (L1, rho) metadata and B is a scalar matrix; returns
// warning strings, empty when the configuration is inside the window.
std::vector<std::string> step_size_warnings(const MinMaxProblem& problem,
                                            const SolverConfig& cfg);

}  // namespace zomax

#endif  // ZOMAX_SOLVERS_HPP
