#ifndef ZOMAX_ORACLES_HPP
#define ZOMAX_ORACLES_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "zomax/geometry.hpp"
#include "zomax/rng.hpp"

namespace zomax {

using Objective = std::function<double(const JointPoint&)>;

// Raised when the objective returns a non-finite value; carries the point
// that was being evaluated.
struct EvaluationError : std::runtime_error {
  EvaluationError(std::string msg, JointPoint where)
      : std::runtime_error(std::move(msg)), at(std::move(where)) {}
  JointPoint at;
};

enum class SmoothingScheme { Forward, Backward, Central };

struct NoiseModel {
  static NoiseModel noiseless() { return {}; }
  static NoiseModel additive_gaussian(double variance) {
    if (variance < 0) throw std::invalid_argument("noise variance must be >= 0");
    NoiseModel nm;
    nm.variance = variance;
    return nm;
  }
  bool is_noiseless() const { return variance == 0.0; }
  double variance = 0.0;
};

// Smoothing parameter schedule: constant, or mu_k = l / (k+1).
struct MuSchedule {
  static MuSchedule constant(double mu) {
    if (!(mu > 0)) throw std::invalid_argument("mu must be positive");
    return {Kind::Constant, mu};
  }
  static MuSchedule harmonic(double l) {
    if (!(l > 0)) throw std::invalid_argument("harmonic scale must be positive");
    return {Kind::Harmonic, l};
  }
  double value(long long k) const {
    return kind == Kind::Constant ? param : param / static_cast<double>(k + 1);
  }
  enum class Kind { Constant, Harmonic };
  Kind kind = Kind::Constant;
  double param = 1.0;
};

// Per-iteration direction count t_k: constant, or t_k = k+1.
struct SampleSchedule {
  static SampleSchedule constant(long long t) {
    if (t < 1) throw std::invalid_argument("samples per call must be >= 1");
    return {Kind::Constant, t};
  }
  static SampleSchedule k_plus_one() { return {Kind::KPlusOne, 1}; }
  long long value(long long k) const {
    return kind == Kind::Constant ? param : k + 1;
  }
  enum class Kind { Constant, KPlusOne };
  Kind kind = Kind::Constant;
  long long param = 1;
};

struct OracleConfig {
  MuSchedule mu = MuSchedule::constant(1e-6);
  SmoothingScheme scheme = SmoothingScheme::Forward;
  SampleSchedule samples_per_call = SampleSchedule::constant(1);
  NoiseModel noise = NoiseModel::noiseless();
  MetricMatrix metric;
  // Reuse of f(z) across the directions of one averaged forward/backward
  // call. Defaults to on for noiseless evaluations (t+1 evaluations per
  // call) and off under output noise, where every evaluation must carry an
  // independent noise draw (2t evaluations per call).
  std::optional<bool> cache_base_eval;

  static OracleConfig defaults(Eigen::Index n, Eigen::Index m) {
    OracleConfig cfg;
    cfg.metric = MetricMatrix::identity(n, m);
    return cfg;
  }

  bool cache_enabled() const {
    if (cache_base_eval.has_value()) return *cache_base_eval;
    return noise.is_noiseless();
  }
};

struct GradientEstimate {
  DualVector value;
  long long samples_used = 0;
  long long function_evals = 0;
};

// Single-direction estimators. The direction u is supplied by the caller
// (normally a draw from N(0, B^{-1})); k resolves schedule entries. Output
// blocks follow the operator sign convention [g_x; -g_y].
//
// Forward:  (f(z+mu u) - f(z)) / mu * Bu          2 evaluations
// Backward: (f(z) - f(z-mu u)) / mu * Bu          2 evaluations
// Central:  (f(z+mu u) - f(z-mu u)) / (2mu) * Bu  2 evaluations
GradientEstimate forward_oracle(const Objective& f, const JointPoint& z,
                                const JointPoint& u, const OracleConfig& cfg,
                                RngStream& noise, long long k = 0);
GradientEstimate backward_oracle(const Objective& f, const JointPoint& z,
                                 const JointPoint& u, const OracleConfig& cfg,
                                 RngStream& noise, long long k = 0);
GradientEstimate central_oracle(const Objective& f, const JointPoint& z,
                                const JointPoint& u, const OracleConfig& cfg,
                                RngStream& noise, long long k = 0);

// Mean of t_k independent single-direction estimates, directions drawn from
// rng.stream(k, call_index, i) and noise from rng.noise_stream(k, call_index,
// i) in sample order, so the reduction is bit-reproducible.
GradientEstimate averaged_oracle(const Objective& f, const JointPoint& z,
                                 const OracleConfig& cfg, const Rng& rng,
                                 long long k = 0, long long call_index = 0);

struct ScalarEstimate {
  double mean = 0;
  double std_error = 0;
  long long function_evals = 0;
};

// Monte-Carlo estimate of the Gaussian-smoothed value f_mu(z) =
// E_u[f(z + mu u)], u ~ N(0, B^{-1}), over M draws.
ScalarEstimate estimate_f_mu(const Objective& f, const JointPoint& z, double mu,
                             long long M, const MetricMatrix& metric,
                             RngStream& stream);

struct VectorEstimate {
  DualVector mean;
  // Standard error of the vector mean: sqrt(sum_i |G_i - mean|_*^2 / (M(M-1))).
  double std_error = 0;
  long long function_evals = 0;
};

// Monte-Carlo estimate of the smoothed gradient operator F_mu(z) via M
// independent forward-oracle draws (noiseless).
VectorEstimate estimate_F_mu(const Objective& f, const JointPoint& z, double mu,
                             long long M, const MetricMatrix& metric,
                             RngStream& stream);

// Empirical E ||G(z) - Gbar||_*^2 over M oracle calls made with cfg (each call
// averaged over its configured t directions); Gbar is the sample mean.
double estimate_oracle_variance(const Objective& f, const JointPoint& z,
                                const OracleConfig& cfg, long long M,
                                const Rng& rng);

// Evaluations used by one averaged-oracle call with t directions.
long long evals_per_call(SmoothingScheme scheme, long long t, bool cache_base);

}  // namespace zomax

#endif  // ZOMAX_ORACLES_HPP
