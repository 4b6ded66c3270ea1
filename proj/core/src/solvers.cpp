#include "zomax/solvers.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>

namespace zomax {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Gradient supplier for one oracle call: (iteration, call index, point).
using CallProvider =
    std::function<GradientEstimate(long long, long long, const JointPoint&)>;

JointPoint validated_start(const MinMaxProblem& problem,
                           const SolverConfig& cfg) {
  JointPoint z0 = cfg.start;
  if (z0.n() == 0 && z0.m() == 0) {
    z0 = JointPoint::Zero(problem.n(), problem.m());
  }
  if (z0.n() != problem.n() || z0.m() != problem.m()) {
    throw DimensionMismatch("start point does not match problem dimensions");
  }
  if (!z0.all_finite()) {
    throw std::invalid_argument("start point has non-finite entries");
  }
  if (!problem.set().is_unconstrained() &&
      !problem.set().contains(z0.flat(), 1e-12)) {
    if (cfg.start_mode == SolverConfig::StartMode::Reject) {
      throw std::invalid_argument("start point is infeasible");
    }
    z0 = project(problem.set(), z0, cfg.oracle.metric);
  }
  return z0;
}

// Diagnostic norm recorded in the trace: |F(z)| when an analytic operator
// exists, otherwise the Euclidean norm of a small Monte-Carlo smoothed
// gradient estimate drawn on the diagnostic lane.
double diag_norm_at(const MinMaxProblem& problem, const SolverConfig& cfg,
                    const Rng& rng, long long k, const JointPoint& z,
                    long long* diag_evals) {
  if (problem.has_analytic_gradient()) {
    return weighted_euclidean_norm(problem.analytic_gradient(z));
  }
  const long long t = std::max<long long>(1, cfg.diag_mc_samples);
  OracleConfig est = cfg.oracle;
  est.noise = NoiseModel::noiseless();
  est.scheme = SmoothingScheme::Forward;
  const double mu = cfg.oracle.mu.value(k);
  const double f0 = problem.evaluate(z);
  DualVector sum = DualVector::Zero(z.n(), z.m());
  RngStream no_noise(0);
  for (long long i = 0; i < t; ++i) {
    RngStream dir = rng.diagnostic_stream(k, i);
    const JointPoint u = est.metric.sample(dir);
    const JointPoint zp = z + mu * u;
    const double fp = problem.evaluate(zp);
    const double quot = (fp - f0) / mu;
    const DualVector bu = est.metric.apply(u);
    sum += DualVector{quot * bu.x, -quot * bu.y};
  }
  *diag_evals += t + 1;
  return weighted_euclidean_norm((1.0 / static_cast<double>(t)) * sum);
}

struct Recorder {
  RunTrace* trace;
  const MinMaxProblem* problem;
  const SolverConfig* cfg;
  const Rng* rng;
  Clock::time_point t0;
  bool probe_box_warned = false;

  // Records the state ahead of iteration k; returns the record index or -1.
  long long maybe_record(long long k, const JointPoint& z, long long cum) {
    if (k % cfg->record_every != 0) return -1;
    TraceRecord rec;
    rec.k = k;
    rec.z = z;
    rec.f_value = problem->evaluate(z);
    rec.diag_norm =
        diag_norm_at(*problem, *cfg, *rng, k, z, &trace->diag_evals);
    rec.cum_evals = cum;
    rec.wall_time_s = seconds_since(t0);
    trace->records.push_back(std::move(rec));
    check_probe_box(z);
    return static_cast<long long>(trace->records.size()) - 1;
  }

  void check_probe_box(const JointPoint& z) {
    if (probe_box_warned || !problem->metadata().l0_probe_box) return;
    const auto& [lo, hi] = *problem->metadata().l0_probe_box;
    const Eigen::VectorXd flat = z.flat();
    if ((flat.array() < lo.array()).any() || (flat.array() > hi.array()).any()) {
      trace->warnings.push_back(
          "iterates left the box on which the Lipschitz constant was "
          "measured; L0-based diagnostics are unreliable");
      probe_box_warned = true;
    }
  }
};

RunTrace extragradient_engine(const MinMaxProblem& problem,
                              const SolverConfig& cfg,
                              const CallProvider& provider,
                              bool precondition) {
  RunTrace trace;
  trace.seed = cfg.seed;
  trace.warnings = step_size_warnings(problem, cfg);
  const Rng rng(cfg.seed);
  const auto t0 = Clock::now();
  Recorder recorder{&trace, &problem, &cfg, &rng, t0};

  JointPoint z = validated_start(problem, cfg);
  long long cum = 0;
  long long k = 0;
  try {
    for (; k < cfg.iterations; ++k) {
      const long long rec_idx = recorder.maybe_record(k, z, cum);

      GradientEstimate g1 = provider(k, 0, z);
      cum += g1.function_evals;
      DualVector d1 = precondition ? cfg.oracle.metric.apply_inverse(g1.value)
                                   : g1.value;
      JointPoint z_hat =
          project(problem.set(), z - cfg.h1.value(k) * d1, cfg.oracle.metric);
      if (rec_idx >= 0) {
        trace.records[static_cast<std::size_t>(rec_idx)].z_hat = z_hat;
      }

      GradientEstimate g2 = provider(k, 1, z_hat);
      cum += g2.function_evals;
      DualVector d2 = precondition ? cfg.oracle.metric.apply_inverse(g2.value)
                                   : g2.value;
      z = project(problem.set(), z - cfg.h2.value(k) * d2, cfg.oracle.metric);

      if (!z.all_finite() ||
          weighted_euclidean_norm(z) > cfg.divergence_threshold) {
        trace.status = RunTrace::Status::Diverged;
        trace.status_detail =
            "iterate norm exceeded the divergence threshold at iteration " +
            std::to_string(k);
        ++k;
        break;
      }
    }
    if (trace.status == RunTrace::Status::Completed &&
        cfg.iterations % cfg.record_every == 0) {
      recorder.maybe_record(cfg.iterations, z, cum);
    }
  } catch (const EvaluationError& err) {
    trace.status = RunTrace::Status::EvaluationFailed;
    trace.status_detail = err.what();
  }

  trace.final_point = z;
  try {
    trace.final_f = problem.evaluate(z);
  } catch (const EvaluationError&) {
    trace.final_f = std::numeric_limits<double>::quiet_NaN();
  }
  trace.iterations_run = k;
  trace.total_evals = cum;
  trace.wall_time_s = seconds_since(t0);
  return trace;
}

CallProvider zo_provider(const MinMaxProblem& problem, const SolverConfig& cfg,
                         bool force_single_sample) {
  OracleConfig oracle = cfg.oracle;
  if (force_single_sample) {
    oracle.samples_per_call = SampleSchedule::constant(1);
  }
  const Rng rng(cfg.seed);
  Objective f = [&problem](const JointPoint& p) { return problem.evaluate(p); };
  return [f = std::move(f), oracle, rng](long long k, long long call,
                                         const JointPoint& z) {
    return averaged_oracle(f, z, oracle, rng, k, call);
  };
}

CallProvider analytic_provider(const MinMaxProblem& problem) {
  if (!problem.has_analytic_gradient()) {
    throw ConfigurationError(
        "first-order baselines require a problem with an analytic gradient");
  }
  return [&problem](long long, long long, const JointPoint& z) {
    GradientEstimate est;
    est.value = problem.analytic_gradient(z);
    est.samples_used = 0;
    est.function_evals = 1;  // one gradient evaluation
    return est;
  };
}

}  // namespace

std::vector<std::string> step_size_warnings(const MinMaxProblem& problem,
                                            const SolverConfig& cfg) {
  std::vector<std::string> warnings;
  const auto& meta = problem.metadata();
  const MetricMatrix& metric = cfg.oracle.metric;
  if (!meta.L1 || !metric.has_scalar_blocks() ||
      *metric.scalar_b1() != *metric.scalar_b2()) {
    return warnings;
  }
  const double L1 = *meta.L1;
  const double lambda = *metric.scalar_b1();
  const double rho = meta.rho.value_or(0.0);
  const double h1 = cfg.h1.value(0);
  const double h2 = cfg.h2.value(0);

  if (problem.set().is_unconstrained()) {
    const double h1_max = 1.0 / (L1 * lambda);
    const double h2_low = std::sqrt(2.0 * rho / (L1 * lambda * lambda));
    if (h1 > h1_max) {
      warnings.push_back("h1 exceeds 1/(L1*lambda); convergence window not "
                         "guaranteed");
    }
    // The window's lower end is treated as inclusive.
    if (h2 < h2_low || h2 > h1 / 2.0) {
      warnings.push_back(
          "h2 outside [sqrt(2 rho/(L1 lambda^2)), h1/2]; convergence window "
          "not guaranteed");
    }
  } else {
    if (h1 != h2) {
      warnings.push_back(
          "constrained runs assume equal step sizes h1 = h2; the sufficient "
          "conditions do not cover h1 != h2");
    }
    const double h = h2;
    const double h_max = 1.0 / (2.0 * L1 * lambda);
    const double h_low = std::sqrt(6.0 * rho / (L1 * lambda * lambda));
    if (h < h_low || h > h_max) {
      warnings.push_back(
          "h outside [sqrt(6 rho/(L1 lambda^2)), 1/(2 L1 lambda)]; "
          "convergence window not guaranteed");
    }
  }
  return warnings;
}

RunTrace run_zoeg(const MinMaxProblem& problem, const SolverConfig& cfg) {
  // Single-direction oracles: t_k is ignored by this variant.
  return extragradient_engine(problem, cfg,
                              zo_provider(problem, cfg, /*force_single=*/true),
                              /*precondition=*/false);
}

RunTrace run_vr_zoeg(const MinMaxProblem& problem, const SolverConfig& cfg) {
  return extragradient_engine(problem, cfg,
                              zo_provider(problem, cfg, /*force_single=*/false),
                              /*precondition=*/false);
}

RunTrace run_modified_vr_zoeg(const MinMaxProblem& problem,
                              const SolverConfig& cfg) {
  return extragradient_engine(problem, cfg,
                              zo_provider(problem, cfg, /*force_single=*/false),
                              /*precondition=*/true);
}

RunTrace run_first_order_eg(const MinMaxProblem& problem,
                            const SolverConfig& cfg) {
  return extragradient_engine(problem, cfg, analytic_provider(problem),
                              /*precondition=*/false);
}

RunTrace run_gda(const MinMaxProblem& problem, const SolverConfig& cfg) {
  if (!problem.has_analytic_gradient()) {
    throw ConfigurationError(
        "first-order baselines require a problem with an analytic gradient");
  }
  RunTrace trace;
  trace.seed = cfg.seed;
  trace.warnings = step_size_warnings(problem, cfg);
  const Rng rng(cfg.seed);
  const auto t0 = Clock::now();
  Recorder recorder{&trace, &problem, &cfg, &rng, t0};

  JointPoint z = validated_start(problem, cfg);
  long long cum = 0;
  long long k = 0;
  try {
    for (; k < cfg.iterations; ++k) {
      recorder.maybe_record(k, z, cum);
      const DualVector g = problem.analytic_gradient(z);
      cum += 1;
      z = project(problem.set(), z - cfg.h1.value(k) * g, cfg.oracle.metric);
      if (!z.all_finite() ||
          weighted_euclidean_norm(z) > cfg.divergence_threshold) {
        trace.status = RunTrace::Status::Diverged;
        trace.status_detail =
            "iterate norm exceeded the divergence threshold at iteration " +
            std::to_string(k);
        ++k;
        break;
      }
    }
    if (trace.status == RunTrace::Status::Completed &&
        cfg.iterations % cfg.record_every == 0) {
      recorder.maybe_record(cfg.iterations, z, cum);
    }
  } catch (const EvaluationError& err) {
    trace.status = RunTrace::Status::EvaluationFailed;
    trace.status_detail = err.what();
  }

  trace.final_point = z;
  try {
    trace.final_f = problem.evaluate(z);
  } catch (const EvaluationError&) {
    trace.final_f = std::numeric_limits<double>::quiet_NaN();
  }
  trace.iterations_run = k;
  trace.total_evals = cum;
  trace.wall_time_s = seconds_since(t0);
  return trace;
}

RunTrace run_solver(const MinMaxProblem& problem, const SolverConfig& cfg) {
  switch (cfg.variant) {
    case SolverVariant::ZOEG:
      return run_zoeg(problem, cfg);
    case SolverVariant::VRZOEG:
      return run_vr_zoeg(problem, cfg);
    case SolverVariant::ModifiedVRZOEG:
      return run_modified_vr_zoeg(problem, cfg);
    case SolverVariant::FirstOrderEG:
      return run_first_order_eg(problem, cfg);
    case SolverVariant::GDA:
      return run_gda(problem, cfg);
  }
  throw std::logic_error("unreachable solver variant");
}

}  // namespace zomax
