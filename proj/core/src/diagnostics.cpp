#include "zomax/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace zomax {

namespace {

std::vector<MviReport::Bin> make_histogram(const std::vector<double>& values,
                                           int bins) {
  std::vector<MviReport::Bin> hist;
  if (values.empty() || bins < 1) return hist;
  const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  double lo = *mn_it, hi = *mx_it;
  if (lo == hi) {
    hist.push_back({lo, hi, static_cast<long long>(values.size())});
    return hist;
  }
  const double width = (hi - lo) / bins;
  hist.resize(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    hist[static_cast<std::size_t>(b)] = {lo + b * width, lo + (b + 1) * width, 0};
  }
  for (const double v : values) {
    int b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    ++hist[static_cast<std::size_t>(b)].count;
  }
  return hist;
}

MviReport report_from_values(std::vector<double> values, double rho, int bins) {
  MviReport rep;
  rep.samples = static_cast<long long>(values.size());
  rep.rho_used = rho;
  rep.min_value = *std::min_element(values.begin(), values.end());
  long long violating = 0;
  for (const double v : values) {
    if (v < 0) ++violating;
  }
  rep.violating_fraction =
      static_cast<double>(violating) / static_cast<double>(values.size());
  rep.histogram = make_histogram(values, bins);
  return rep;
}

long long ceil_to_count(double v) {
  if (!(v > 0)) return 1;
  return std::max<long long>(1, static_cast<long long>(std::ceil(v)));
}

}  // namespace

DualVector gradient_mapping_tau(const MinMaxProblem& problem,
                                const JointPoint& z, double h1, double h2,
                                const DualVector& F_value,
                                const MetricMatrix& metric) {
  if (!(h1 > 0) || !(h2 > 0)) {
    throw std::invalid_argument("mapping step sizes must be positive");
  }
  if (problem.set().is_unconstrained()) return F_value;
  const auto [set_x, set_y] = problem.set().split(problem.n());
  DualVector tau = F_value;
  if (!set_x.is_unconstrained()) {
    if (!metric.has_scalar_blocks()) {
      throw ConfigurationError(
          "projection with an active constraint requires scalar metric blocks");
    }
    tau.x = (z.x - set_x.project(z.x - h1 * F_value.x)) / h1;
  }
  if (!set_y.is_unconstrained()) {
    if (!metric.has_scalar_blocks()) {
      throw ConfigurationError(
          "projection with an active constraint requires scalar metric blocks");
    }
    tau.y = (z.y - set_y.project(z.y - h2 * F_value.y)) / h2;
  }
  return tau;
}

DualVector projected_residual(const MinMaxProblem& problem, const JointPoint& z,
                              double h, const DualVector& g,
                              const MetricMatrix& metric) {
  if (!(h > 0)) throw std::invalid_argument("residual step size must be positive");
  if (problem.set().is_unconstrained()) return g;
  const JointPoint proj = project(problem.set(), z - h * g, metric);
  return (1.0 / h) * (z - proj);
}

MviReport prox_mvi_sampler(const MinMaxProblem& problem,
                           const JointPoint& candidate, double h,
                           long long count,
                           const Eigen::VectorXd& sampling_variances,
                           double rho, const MetricMatrix& metric,
                           RngStream& stream, int histogram_bins) {
  if (count < 1) throw std::invalid_argument("sampler needs count >= 1");
  if (sampling_variances.size() != candidate.dim()) {
    throw DimensionMismatch("sampling variance length must match dimension");
  }
  if ((sampling_variances.array() < 0).any()) {
    throw std::invalid_argument("sampling variances must be nonnegative");
  }
  const Eigen::VectorXd sdev = sampling_variances.cwiseSqrt();
  const Eigen::Index n = problem.n();

  auto draw_feasible = [&]() {
    Eigen::VectorXd v(candidate.dim());
    const Eigen::VectorXd base = candidate.flat();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v[i] = base[i] + sdev[i] * stream.next_normal();
    }
    return JointPoint::from_flat(problem.set().project(v), n);
  };

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    const JointPoint z = draw_feasible();
    const JointPoint z_bar = draw_feasible();
    const DualVector g = problem.gradient_or_fd(z_bar);
    const DualVector residual = projected_residual(problem, z, h, g, metric);
    double value = dot(residual, z_bar - candidate);
    if (rho > 0) {
      const double nd = dual_norm(residual, metric);
      value += 0.5 * rho * nd * nd;
    }
    values.push_back(value);
  }
  return report_from_values(std::move(values), rho, histogram_bins);
}

MviReport weak_mvi_sampler(const GradientOperator& F, const JointPoint& z_star,
                           double rho, long long count,
                           const Eigen::VectorXd& box_lower,
                           const Eigen::VectorXd& box_upper,
                           const MetricMatrix& metric, RngStream& stream,
                           int histogram_bins) {
  if (count < 1) throw std::invalid_argument("sampler needs count >= 1");
  if (box_lower.size() != z_star.dim() || box_upper.size() != z_star.dim()) {
    throw DimensionMismatch("probe box must match dimension");
  }
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    Eigen::VectorXd v(z_star.dim());
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      v[j] = box_lower[j] +
             stream.next_uniform() * (box_upper[j] - box_lower[j]);
    }
    const JointPoint z = JointPoint::from_flat(v, z_star.n());
    const DualVector g = F(z);
    double value = dot(g, z - z_star);
    if (rho > 0) {
      const double nd = dual_norm(g, metric);
      value += 0.5 * rho * nd * nd;
    }
    values.push_back(value);
  }
  return report_from_values(std::move(values), rho, histogram_bins);
}

MviReport weak_mvi_sampler(const MinMaxProblem& problem,
                           const JointPoint& z_star, double rho,
                           long long count, const Eigen::VectorXd& box_lower,
                           const Eigen::VectorXd& box_upper,
                           const MetricMatrix& metric, RngStream& stream,
                           int histogram_bins) {
  GradientOperator F = [&problem](const JointPoint& z) {
    return problem.gradient_or_fd(z);
  };
  return weak_mvi_sampler(F, z_star, rho, count, box_lower, box_upper, metric,
                          stream, histogram_bins);
}

double goldstein_mu_rule(double delta, double epsilon, double L0, int d) {
  if (!(delta > 0) || !(delta < 1)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
  if (!(epsilon > 0) || !(L0 > 0) || d < 1) {
    throw std::invalid_argument("epsilon, L0 and d must be positive");
  }
  const double dd = static_cast<double>(d);
  return delta / std::sqrt(dd * std::numbers::pi * std::numbers::e) *
         std::pow(epsilon / (8.0 * L0), 1.0 / dd);
}

StationarityReport goldstein_surrogate(const MinMaxProblem& problem,
                                       const JointPoint& z, double delta,
                                       double epsilon, double L0, long long M,
                                       const MetricMatrix& metric,
                                       RngStream& stream) {
  if (!metric.is_identity()) {
    throw ConfigurationError(
        "the Goldstein surrogate is only available for the identity metric");
  }
  const double gamma = epsilon / 2.0;
  if (gamma > std::min(5.0 * L0, 1.0)) {
    throw std::invalid_argument(
        "epsilon/2 exceeds min(5 L0, 1); the smoothed-gradient containment "
        "does not apply");
  }
  const double mu =
      goldstein_mu_rule(delta, epsilon, L0, static_cast<int>(z.dim()));

  Objective f = [&problem](const JointPoint& p) { return problem.evaluate(p); };
  const VectorEstimate est = estimate_F_mu(f, z, mu, M, metric, stream);
  const double norm = weighted_euclidean_norm(est.mean);

  StationarityReport rep;
  rep.grad_norm = norm;
  rep.mapping_norm = norm;
  StationarityReport::Goldstein g;
  g.delta = delta;
  g.gamma = gamma;
  g.mu = mu;
  g.grad_estimate_norm = norm;
  g.std_error = est.std_error;
  g.certified_bound = norm + gamma + 3.0 * est.std_error;
  rep.goldstein = g;
  rep.evals_spent = est.function_evals;
  return rep;
}

HyperparamPlan plan_unconstrained(const UnconstrainedPlanInputs& in) {
  if (!(in.L1 > 0) || !(in.lambda > 0) || !(in.epsilon > 0) || !(in.r0 > 0) ||
      !(in.h2 > 0) || in.rho < 0 || in.d < 1) {
    throw std::invalid_argument("plan inputs must be positive (rho >= 0)");
  }
  const double lam = in.lambda, L1 = in.L1, eps = in.epsilon;
  const double d3 = std::pow(static_cast<double>(in.d) + 3.0, 1.5);
  const double d3cube = std::pow(static_cast<double>(in.d) + 3.0, 3.0);
  const double denom = lam * lam * L1 * in.h2 * in.h2 - 2.0 * in.rho;
  if (!(denom > 0)) {
    throw InfeasibleWindow(
        "lambda^2 L1 h2^2 - 2 rho must be positive; decrease rho or enlarge h2");
  }

  HyperparamPlan plan;
  plan.h_window = {std::sqrt(2.0 * in.rho / (L1 * lam * lam)),
                   1.0 / (2.0 * L1 * lam)};
  const bool vr = in.sigma.has_value() && *in.sigma > 0;
  if (vr) {
    plan.source = "unconstrained-vr";
    plan.mu_max = std::min(
        eps / (std::sqrt(3.0) * lam * L1 * d3),
        std::sqrt(denom / (24.0 * lam * L1 * in.d +
                           24.0 * lam * L1 * L1 * in.rho * d3cube)) *
            eps);
    plan.n_min = ceil_to_count(
        12.0 * lam * lam * L1 * in.r0 * in.r0 / denom / (eps * eps) - 1.0);
    const double inner = L1 * in.h2 * in.h2 - 2.0 * in.rho;
    if (!(inner > 0)) {
      throw InfeasibleWindow("L1 h2^2 - 2 rho must be positive for the sample "
                             "count rule");
    }
    const double sig = *in.sigma;
    plan.t_min = ceil_to_count(18.0 * lam * sig * sig /
                               (lam * lam * L1 * inner) / (eps * eps));
  } else {
    plan.source = "unconstrained";
    plan.mu_max = std::min(
        eps / (std::numbers::sqrt2 * lam * L1 * d3),
        std::sqrt(denom / (16.0 * lam * L1 * in.d +
                           16.0 * lam * L1 * L1 * in.rho * d3cube)) *
            eps);
    plan.n_min = ceil_to_count(
        8.0 * lam * lam * L1 * in.r0 * in.r0 / denom / (eps * eps) - 1.0);
    plan.t_min = 1;
  }
  if (in.rho >= 1.0 / (8.0 * L1)) {
    plan.warnings.push_back(
        "rho is outside [0, 1/(8 L)) for kappa = 1; the variational "
        "inequality assumption may not admit a solution");
  }
  if (in.h2 < plan.h_window.first || in.h2 > plan.h_window.second) {
    plan.warnings.push_back("supplied h2 lies outside the admissible window");
  }
  return plan;
}

HyperparamPlan plan_constrained(const ConstrainedPlanInputs& in) {
  if (!(in.L1 > 0) || !(in.lambda > 0) || !(in.epsilon > 0) || !(in.r0 > 0) ||
      !(in.h > 0) || !(in.D_z > 0) || in.rho < 0 || in.d < 1) {
    throw std::invalid_argument("plan inputs must be positive (rho >= 0)");
  }
  const double lam = in.lambda, L1 = in.L1, eps = in.epsilon;
  const double d3 = std::pow(static_cast<double>(in.d) + 3.0, 1.5);
  const double d3cube = std::pow(static_cast<double>(in.d) + 3.0, 3.0);
  const double denom = lam * lam * L1 * in.h * in.h - 6.0 * in.rho;
  if (!(denom > 0)) {
    throw InfeasibleWindow(
        "lambda^2 L1 h^2 - 6 rho must be positive; decrease rho or enlarge h");
  }

  const double a = 4.0 * in.rho * lam * L1 * L1 * d3cube / denom;
  const double b = 4.0 * lam * L1 * in.D_z * d3 / denom;
  // Quadratic root in mu; series fallback for the rho = 0 degenerate case.
  const double root = (a < 1e-12 * b * b)
                          ? eps * eps / (2.0 * b)
                          : (-b + std::sqrt(b * b + a * eps * eps)) / (2.0 * a);

  HyperparamPlan plan;
  plan.mu_max = std::min(root, eps / (std::numbers::sqrt2 * lam * L1 * d3));
  plan.h_window = {std::sqrt(6.0 * in.rho / (L1 * lam * lam)),
                   1.0 / (2.0 * L1 * lam)};
  const bool vr = in.sigma.has_value() && *in.sigma > 0;
  if (vr) {
    plan.source = "constrained-vr";
    plan.n_min = ceil_to_count(
        32.0 * lam * lam * L1 * in.r0 * in.r0 / denom / (eps * eps) - 1.0);
    const double sig = *in.sigma;
    const double c = (36.0 * in.rho + 4.0 / L1 + 4.0) * lam * sig * sig / denom;
    const double dd = 2.0 * in.D_z * lam * sig / denom;
    plan.t_min = 32 * ceil_to_count(std::max(c / (eps * eps),
                                             dd * dd / std::pow(eps, 4.0)));
  } else {
    plan.source = "constrained";
    plan.n_min = ceil_to_count(
        16.0 * lam * lam * L1 * in.r0 * in.r0 / denom / (eps * eps) - 1.0);
    plan.t_min = 1;
  }
  if (in.rho >= 1.0 / (24.0 * L1)) {
    plan.warnings.push_back(
        "rho is outside [0, 1/(24 L)) for kappa = 1; the proximal "
        "variational inequality assumption may not admit a solution");
  }
  if (in.h < plan.h_window.first || in.h > plan.h_window.second) {
    plan.warnings.push_back("supplied h lies outside the admissible window");
  }
  return plan;
}

HyperparamPlan plan_nonsmooth(const NonsmoothPlanInputs& in) {
  if (!(in.L0 > 0) || !(in.epsilon > 0) || !(in.r0 > 0) || in.rho < 0 ||
      in.d < 1) {
    throw std::invalid_argument("plan inputs must be positive (rho >= 0)");
  }
  const double mu = goldstein_mu_rule(in.delta, in.epsilon, in.L0, in.d);
  const double L1mu = std::sqrt(static_cast<double>(in.d)) * in.L0 / mu;
  const double h1_max = 1.0 / L1mu;
  const double h2 = h1_max / 2.0;
  const double low = std::sqrt(in.rho / L1mu);
  if (!(low < h2)) {
    throw InfeasibleWindow(
        "rho is too large: sqrt(rho / L1(f_mu)) must fall below h1/2");
  }
  const double denom = L1mu * h2 * h2 - in.rho;
  if (!(denom > 0)) {
    throw InfeasibleWindow("L1(f_mu) h2^2 - rho must be positive");
  }
  const double eps = in.epsilon;

  HyperparamPlan plan;
  plan.mu_max = mu;
  plan.h_window = {low, h2};
  const bool vr = in.sigma.has_value() && *in.sigma > 0;
  if (vr) {
    plan.source = "nonsmooth-vr";
    plan.n_min =
        ceil_to_count(16.0 * in.r0 * in.r0 * L1mu / denom / (eps * eps) - 1.0);
    const double sig = *in.sigma;
    plan.t_min =
        ceil_to_count(24.0 * sig * sig / (L1mu * denom) / (eps * eps));
  } else {
    plan.source = "nonsmooth";
    plan.n_min =
        ceil_to_count(8.0 * in.r0 * in.r0 * L1mu / denom / (eps * eps) - 1.0);
    plan.t_min = 1;
  }
  if (in.rho >= 1.0 / (4.0 * L1mu)) {
    plan.warnings.push_back(
        "rho is outside [0, 1/(4 L1(f_mu))) for kappa = 1; the smoothed "
        "variational inequality assumption may not admit a solution");
  }
  return plan;
}

double nu_bound(NuSetting setting, const NuParams& params, double lambda_min,
                double lambda_max, double h) {
  if (!(lambda_min > 0) || !(lambda_max >= lambda_min) || !(h > 0)) {
    throw std::invalid_argument("need 0 < lambda_min <= lambda_max and h > 0");
  }
  const double L = params.L_bar;
  const double kappa = lambda_max / lambda_min;
  const double a_bar = L * params.a;
  switch (setting) {
    case NuSetting::Unconstrained: {
      const double b_bar = L * params.b;
      const double c_bar = L * L * params.c;
      const double e_bar = params.e / L;
      const double denom = L * lambda_max * h * h - 2.0 * params.rho;
      if (!(denom > 0)) throw InfeasibleWindow("bound denominator is not positive");
      return (lambda_max * a_bar + b_bar / kappa + c_bar / (lambda_max * kappa) +
              lambda_min * lambda_min * e_bar) /
             denom;
    }
    case NuSetting::Constrained: {
      const double b_bar = L * params.b;
      const double c_bar = L * L * params.c;
      const double denom = L * lambda_max * h * h - 6.0 * params.rho;
      if (!(denom > 0)) throw InfeasibleWindow("bound denominator is not positive");
      return (lambda_max * a_bar + b_bar + c_bar / lambda_min +
              params.p * lambda_min * kappa +
              (36.0 * params.rho * kappa * kappa * lambda_min +
               4.0 * lambda_min * lambda_max / L) *
                  params.e) /
             denom;
    }
    case NuSetting::Nonsmooth: {
      const double b_bar = params.b / L;
      const double denom = L * lambda_max * h * h - params.rho;
      if (!(denom > 0)) throw InfeasibleWindow("bound denominator is not positive");
      return (lambda_max * a_bar + lambda_min * lambda_min * b_bar) / denom;
    }
  }
  throw std::logic_error("unreachable setting");
}

NuOptimum nu_optimize(NuSetting setting, const NuParams& params) {
  if (params.rho != 0) {
    throw std::invalid_argument(
        "closed-form optimisation is only available for rho = 0");
  }
  const double L = params.L_bar;
  NuOptimum opt;
  opt.h_star = 1.0 / (2.0 * L);
  opt.kappa_star = 1.0;
  const double a_bar = L * params.a;
  switch (setting) {
    case NuSetting::Unconstrained: {
      const double b_bar = L * params.b;
      const double e_bar = params.e / L;
      if (!(b_bar > 0) || !(e_bar > 0)) {
        throw std::invalid_argument("b and e must be positive");
      }
      opt.lambda_star = std::sqrt(b_bar / e_bar);
      opt.value = 4.0 * L * (a_bar + 2.0 * std::sqrt(b_bar * e_bar));
      return opt;
    }
    case NuSetting::Constrained: {
      const double b_bar = L * params.b;
      const double e_bar = 4.0 * params.e / L;
      if (!(b_bar > 0) || !(e_bar > 0)) {
        throw std::invalid_argument("b and e must be positive");
      }
      opt.lambda_star = std::sqrt(b_bar / e_bar);
      opt.value =
          4.0 * L * (params.p + a_bar + 2.0 * std::sqrt(b_bar * e_bar));
      return opt;
    }
    case NuSetting::Nonsmooth: {
      // The bound decreases monotonically as the scale shrinks; the optimum
      // is the zero-scale limit.
      opt.lambda_star = 0.0;
      opt.lambda_star_is_limit = true;
      opt.value = 4.0 * L * a_bar;
      return opt;
    }
  }
  throw std::logic_error("unreachable setting");
}

}  // namespace zomax
