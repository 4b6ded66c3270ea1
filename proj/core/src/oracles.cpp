#include "zomax/oracles.hpp"

#include <cmath>

namespace zomax {

namespace {

double noisy_eval(const Objective& f, const JointPoint& at,
                  const NoiseModel& noise, RngStream& stream) {
  double v = f(at);
  if (!std::isfinite(v)) {
    throw EvaluationError("objective returned a non-finite value", at);
  }
  if (!noise.is_noiseless()) {
    v += std::sqrt(noise.variance) * stream.next_normal();
  }
  return v;
}

GradientEstimate quotient_times_bu(double quotient, const JointPoint& u,
                                   const MetricMatrix& metric,
                                   long long evals) {
  const DualVector bu = metric.apply(u);
  GradientEstimate est;
  est.value = DualVector{quotient * bu.x, -quotient * bu.y};
  est.samples_used = 1;
  est.function_evals = evals;
  return est;
}

void check_dims(const JointPoint& z, const JointPoint& u,
                const MetricMatrix& metric) {
  if (z.n() != metric.n() || z.m() != metric.m() || u.n() != metric.n() ||
      u.m() != metric.m()) {
    throw DimensionMismatch("point/direction dimensions do not match metric");
  }
}

// Single-direction estimate with an optional precomputed base value f(z)
// (forward) or f(z) (backward); base reuse is what the cache flag controls.
GradientEstimate single_direction(const Objective& f, const JointPoint& z,
                                  const JointPoint& u, const OracleConfig& cfg,
                                  RngStream& noise, long long k,
                                  const double* cached_base) {
  check_dims(z, u, cfg.metric);
  const double mu = cfg.mu.value(k);
  switch (cfg.scheme) {
    case SmoothingScheme::Forward: {
      const double fp = noisy_eval(f, z + mu * u, cfg.noise, noise);
      long long evals = 1;
      double f0;
      if (cached_base) {
        f0 = *cached_base;
      } else {
        f0 = noisy_eval(f, z, cfg.noise, noise);
        evals += 1;
      }
      return quotient_times_bu((fp - f0) / mu, u, cfg.metric, evals);
    }
    case SmoothingScheme::Backward: {
      const double fm = noisy_eval(f, z - mu * u, cfg.noise, noise);
      long long evals = 1;
      double f0;
      if (cached_base) {
        f0 = *cached_base;
      } else {
        f0 = noisy_eval(f, z, cfg.noise, noise);
        evals += 1;
      }
      return quotient_times_bu((f0 - fm) / mu, u, cfg.metric, evals);
    }
    case SmoothingScheme::Central: {
      const double fp = noisy_eval(f, z + mu * u, cfg.noise, noise);
      const double fm = noisy_eval(f, z - mu * u, cfg.noise, noise);
      return quotient_times_bu((fp - fm) / (2.0 * mu), u, cfg.metric, 2);
    }
  }
  throw std::logic_error("unreachable smoothing scheme");
}

}  // namespace

long long evals_per_call(SmoothingScheme scheme, long long t, bool cache_base) {
  if (scheme == SmoothingScheme::Central) return 2 * t;
  return cache_base ? t + 1 : 2 * t;
}

GradientEstimate forward_oracle(const Objective& f, const JointPoint& z,
                                const JointPoint& u, const OracleConfig& cfg,
                                RngStream& noise, long long k) {
  OracleConfig c = cfg;
  c.scheme = SmoothingScheme::Forward;
  return single_direction(f, z, u, c, noise, k, nullptr);
}

GradientEstimate backward_oracle(const Objective& f, const JointPoint& z,
                                 const JointPoint& u, const OracleConfig& cfg,
                                 RngStream& noise, long long k) {
  OracleConfig c = cfg;
  c.scheme = SmoothingScheme::Backward;
  return single_direction(f, z, u, c, noise, k, nullptr);
}

GradientEstimate central_oracle(const Objective& f, const JointPoint& z,
                                const JointPoint& u, const OracleConfig& cfg,
                                RngStream& noise, long long k) {
  OracleConfig c = cfg;
  c.scheme = SmoothingScheme::Central;
  return single_direction(f, z, u, c, noise, k, nullptr);
}

GradientEstimate averaged_oracle(const Objective& f, const JointPoint& z,
                                 const OracleConfig& cfg, const Rng& rng,
                                 long long k, long long call_index) {
  const long long t = cfg.samples_per_call.value(k);
  const bool cache = cfg.cache_enabled() &&
                     cfg.scheme != SmoothingScheme::Central;

  double base = 0.0;
  long long evals = 0;
  if (cache) {
    RngStream base_noise = rng.noise_stream(k, call_index, t);
    base = noisy_eval(f, z, cfg.noise, base_noise);
    evals += 1;
  }

  DualVector sum = DualVector::Zero(z.n(), z.m());
  for (long long i = 0; i < t; ++i) {
    RngStream dir = rng.stream(k, call_index, i);
    RngStream noise = rng.noise_stream(k, call_index, i);
    const JointPoint u = cfg.metric.sample(dir);
    const GradientEstimate one =
        single_direction(f, z, u, cfg, noise, k, cache ? &base : nullptr);
    sum += one.value;
    evals += one.function_evals;
  }

  GradientEstimate est;
  est.value = (1.0 / static_cast<double>(t)) * sum;
  est.samples_used = t;
  est.function_evals = evals;
  return est;
}

ScalarEstimate estimate_f_mu(const Objective& f, const JointPoint& z, double mu,
                             long long M, const MetricMatrix& metric,
                             RngStream& stream) {
  if (M < 2) throw std::invalid_argument("estimate_f_mu needs M >= 2");
  if (!(mu > 0)) throw std::invalid_argument("mu must be positive");
  double sum = 0, sumsq = 0;
  for (long long i = 0; i < M; ++i) {
    const JointPoint u = metric.sample(stream);
    const JointPoint at = z + mu * u;
    const double v = f(at);
    if (!std::isfinite(v)) {
      throw EvaluationError("objective returned a non-finite value", at);
    }
    sum += v;
    sumsq += v * v;
  }
  ScalarEstimate est;
  est.mean = sum / static_cast<double>(M);
  const double var =
      std::max(0.0, (sumsq - sum * sum / static_cast<double>(M)) /
                        static_cast<double>(M - 1));
  est.std_error = std::sqrt(var / static_cast<double>(M));
  est.function_evals = M;
  return est;
}

VectorEstimate estimate_F_mu(const Objective& f, const JointPoint& z, double mu,
                             long long M, const MetricMatrix& metric,
                             RngStream& stream) {
  if (M < 2) throw std::invalid_argument("estimate_F_mu needs M >= 2");
  OracleConfig cfg;
  cfg.metric = metric;
  cfg.mu = MuSchedule::constant(mu);
  cfg.scheme = SmoothingScheme::Forward;

  std::vector<DualVector> draws;
  draws.reserve(static_cast<std::size_t>(M));
  DualVector sum = DualVector::Zero(z.n(), z.m());
  long long evals = 0;
  RngStream no_noise(0);
  const double f0 = f(z);
  if (!std::isfinite(f0)) {
    throw EvaluationError("objective returned a non-finite value", z);
  }
  evals += 1;
  for (long long i = 0; i < M; ++i) {
    const JointPoint u = metric.sample(stream);
    const GradientEstimate one =
        single_direction(f, z, u, cfg, no_noise, 0, &f0);
    draws.push_back(one.value);
    sum += one.value;
    evals += one.function_evals;
  }
  VectorEstimate est;
  est.mean = (1.0 / static_cast<double>(M)) * sum;
  double dev = 0;
  for (const DualVector& g : draws) {
    const DualVector diff = g - est.mean;
    const double nd = dual_norm(diff, metric);
    dev += nd * nd;
  }
  est.std_error =
      std::sqrt(dev / (static_cast<double>(M) * static_cast<double>(M - 1)));
  est.function_evals = evals;
  return est;
}

double estimate_oracle_variance(const Objective& f, const JointPoint& z,
                                const OracleConfig& cfg, long long M,
                                const Rng& rng) {
  if (M < 10) {
    throw std::invalid_argument("estimate_oracle_variance needs M >= 10");
  }
  std::vector<DualVector> draws;
  draws.reserve(static_cast<std::size_t>(M));
  DualVector sum = DualVector::Zero(z.n(), z.m());
  for (long long i = 0; i < M; ++i) {
    const GradientEstimate one = averaged_oracle(f, z, cfg, rng, /*k=*/i);
    draws.push_back(one.value);
    sum += one.value;
  }
  const DualVector mean = (1.0 / static_cast<double>(M)) * sum;
  double acc = 0;
  for (const DualVector& g : draws) {
    const double nd = dual_norm(g - mean, cfg.metric);
    acc += nd * nd;
  }
  return acc / static_cast<double>(M - 1);
}

}  // namespace zomax
