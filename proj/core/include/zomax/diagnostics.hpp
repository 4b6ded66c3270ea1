#ifndef ZOMAX_DIAGNOSTICS_HPP
#define ZOMAX_DIAGNOSTICS_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zomax/problems.hpp"

namespace zomax {

struct InfeasibleWindow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StationarityReport {
  double grad_norm = 0;     // |F(z)| or its estimate
  double mapping_norm = 0;  // ||tau(z)||_* in the constrained case
  struct Goldstein {
    double delta = 0;
    double gamma = 0;
    double mu = 0;
    double grad_estimate_norm = 0;  // ||Fhat_mu(z)||
    double std_error = 0;
    // grad_estimate_norm + gamma + 3 std errors: an upper bound on the
    // distance from zero to the delta-Goldstein subdifferential.
    double certified_bound = 0;
  };
  std::optional<Goldstein> goldstein;
  long long evals_spent = 0;
};

struct MviReport {
  long long samples = 0;
  double min_value = 0;
  double violating_fraction = 0;  // fraction of strictly negative values
  double rho_used = 0;
  struct Bin {
    double left = 0, right = 0;
    long long count = 0;
  };
  std::vector<Bin> histogram;
};

struct HyperparamPlan {
  double mu_max = 0;
  long long n_min = 1;
  std::optional<long long> t_min;
  std::pair<double, double> h_window{0, 0};  // (low, high], step-size window
  std::string source;
  std::vector<std::string> warnings;
};

// Projected gradient mapping
//   tau_x = (x - Proj_X(x - h1 Fx)) / h1,  tau_y = (y - Proj_Y(y - h2 Fy)) / h2,
// where F carries the [grad_x; -grad_y] sign convention. Reduces to F itself
// when the set is unconstrained or no projection is active.
DualVector gradient_mapping_tau(const MinMaxProblem& problem,
                                const JointPoint& z, double h1, double h2,
                                const DualVector& F_value,
                                const MetricMatrix& metric);

// Joint projected residual P(z, h, g) = (z - Proj_Z(z - h g)) / h.
DualVector projected_residual(const MinMaxProblem& problem, const JointPoint& z,
                              double h, const DualVector& g,
                              const MetricMatrix& metric);

// Samples pairs (z, zbar) from a diagonal normal centred at the candidate,
// projects them onto the feasible set, and evaluates
//   <P(z, h, F(zbar)), zbar - candidate> + rho/2 ||P||_*^2.
// F defaults to the problem's analytic operator, central differences
// otherwise. Draw i consumes stream(i) for z then zbar.
MviReport prox_mvi_sampler(const MinMaxProblem& problem,
                           const JointPoint& candidate, double h,
                           long long count,
                           const Eigen::VectorXd& sampling_variances,
                           double rho, const MetricMatrix& metric,
                           RngStream& stream, int histogram_bins = 40);

// Samples z uniformly in the probe box and evaluates
//   <F(z), z - z_star> + rho/2 ||F(z)||_*^2.
MviReport weak_mvi_sampler(const GradientOperator& F, const JointPoint& z_star,
                           double rho, long long count,
                           const Eigen::VectorXd& box_lower,
                           const Eigen::VectorXd& box_upper,
                           const MetricMatrix& metric, RngStream& stream,
                           int histogram_bins = 40);
MviReport weak_mvi_sampler(const MinMaxProblem& problem,
                           const JointPoint& z_star, double rho,
                           long long count, const Eigen::VectorXd& box_lower,
                           const Eigen::VectorXd& box_upper,
                           const MetricMatrix& metric, RngStream& stream,
                           int histogram_bins = 40);

// Admissible smoothing parameter for certifying (delta, epsilon)-Goldstein
// stationarity through the smoothed gradient: with gamma = epsilon/2,
//   mu <= delta / sqrt(d pi e) * (epsilon / (8 L0))^(1/d).
double goldstein_mu_rule(double delta, double epsilon, double L0, int d);

// Monte-Carlo certificate: estimates ||grad f_mu(z)|| with M draws at the mu
// above; the smoothed gradient lies within gamma of the delta-Goldstein
// subdifferential, so estimate + gamma + 3 SE bounds dist(0, d_delta f(z)).
// Only stated for the identity metric; other metrics are rejected.
StationarityReport goldstein_surrogate(const MinMaxProblem& problem,
                                       const JointPoint& z, double delta,
                                       double epsilon, double L0, long long M,
                                       const MetricMatrix& metric,
                                       RngStream& stream);

// Hyperparameter calculators. Each transcribes the sufficient conditions for
// driving the respective stationarity measure below epsilon: the admissible
// smoothing parameter, the iteration count, the per-iteration sample count
// (when a variance bound sigma is supplied), and the step-size window.
// B = lambda * I throughout; infeasible windows raise InfeasibleWindow.

struct UnconstrainedPlanInputs {
  double L1 = 1;
  double rho = 0;
  double lambda = 1;
  double r0 = 1;
  double epsilon = 0.1;
  double h2 = 0.1;
  int d = 2;
  std::optional<double> sigma;
};
HyperparamPlan plan_unconstrained(const UnconstrainedPlanInputs& in);

struct ConstrainedPlanInputs {
  double L1 = 1;
  double rho = 0;
  double lambda = 1;
  double r0 = 1;
  double epsilon = 0.1;
  double h = 0.1;
  double D_z = 1;
  int d = 2;
  std::optional<double> sigma;
};
HyperparamPlan plan_constrained(const ConstrainedPlanInputs& in);

struct NonsmoothPlanInputs {
  double L0 = 1;
  double rho = 0;
  double delta = 0.5;
  double epsilon = 0.1;
  double r0 = 1;
  int d = 2;
  std::optional<double> sigma;
};
HyperparamPlan plan_nonsmooth(const NonsmoothPlanInputs& in);

// Convergence-bound evaluators nu(lambda_min, lambda_max, h) for the three
// settings, parameterised by the Euclidean-norm gradient Lipschitz constant
// L_bar and the raw constants of the respective bound:
//   unconstrained: a = 2 r0^2/(N+1), b = 2 mu^2 d, c = 2 mu^2 rho (d+3)^3,
//                  e = 3 sigma^2 / t
//   constrained:   a = 2 r0^2/(N+1), b = mu D_z (d+3)^{3/2},
//                  c = mu^2 rho (d+3)^3, e = sigma^2/t, p = 2 D_z sigma/sqrt(t)
//   nonsmooth:     a = 2 r0^2/(N+1), b = 3 sigma^2 / t
enum class NuSetting { Unconstrained, Constrained, Nonsmooth };

struct NuParams {
  double L_bar = 1;
  double rho = 0;
  double a = 0, b = 0, c = 0, e = 0, p = 0;
};

double nu_bound(NuSetting setting, const NuParams& params, double lambda_min,
                double lambda_max, double h);

// Closed-form minimiser over (h, lambda_min, lambda_max) for rho = 0: the
// optimal condition number is 1, h* = 1/(2 L_bar), and the optimal scale is
// sqrt(b_bar / e_bar) where it exists. In the nonsmooth setting the optimum
// is a limit: the bound decreases as the scale shrinks to zero.
struct NuOptimum {
  double h_star = 0;
  double lambda_star = 0;
  double kappa_star = 1;
  double value = 0;
  bool lambda_star_is_limit = false;
};
NuOptimum nu_optimize(NuSetting setting, const NuParams& params);

}  // namespace zomax

#endif  // ZOMAX_DIAGNOSTICS_HPP
