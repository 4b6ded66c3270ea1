#ifndef ZOMAX_PROBLEMS_HPP
#define ZOMAX_PROBLEMS_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zomax/geometry.hpp"
#include "zomax/oracles.hpp"

namespace zomax {

struct ConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Closed convex feasible set over a flat coordinate vector. Joint sets for a
// min-max problem are products of an x-block set and a y-block set; Box,
// NonnegativeOrthant and Unconstrained split at any coordinate, Ball does not
// and therefore only appears inside a Product.
class FeasibleSet {
 public:
  enum class Kind { Unconstrained, Box, Ball, NonnegativeOrthant, Product };

  static FeasibleSet unconstrained();
  static FeasibleSet box(Eigen::VectorXd lower, Eigen::VectorXd upper);
  static FeasibleSet ball(Eigen::VectorXd center, double radius);
  static FeasibleSet nonnegative_orthant();
  static FeasibleSet product(std::vector<FeasibleSet> blocks,
                             std::vector<Eigen::Index> dims);

  Kind kind() const { return kind_; }
  bool is_unconstrained() const { return kind_ == Kind::Unconstrained; }

  Eigen::VectorXd project(const Eigen::VectorXd& v) const;
  bool contains(const Eigen::VectorXd& v, double tol = 1e-12) const;
  double distance(const Eigen::VectorXd& v) const;

  // Euclidean diameter; +infinity when unbounded.
  double diameter() const;

  // Split into the leading n coordinates and the rest; throws when the set
  // does not factor there (a Ball crossing the cut).
  std::pair<FeasibleSet, FeasibleSet> split(Eigen::Index n) const;

  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  const Eigen::VectorXd& center() const { return center_; }
  double radius() const { return radius_; }
  const std::vector<FeasibleSet>& blocks() const { return blocks_; }
  const std::vector<Eigen::Index>& block_dims() const { return block_dims_; }

 private:
  Kind kind_ = Kind::Unconstrained;
  Eigen::VectorXd lower_, upper_;
  Eigen::VectorXd center_;
  double radius_ = 0;
  std::vector<FeasibleSet> blocks_;
  std::vector<Eigen::Index> block_dims_;
};

// Projection of a joint point in the metric-weighted norm. Closed forms only
// exist when each block of B is a scalar multiple of the identity (then the
// weighted projection coincides with the Euclidean one); other metrics with
// an active constraint raise ConfigurationError.
JointPoint project(const FeasibleSet& set, const JointPoint& z,
                   const MetricMatrix& metric);

using GradientOperator = std::function<DualVector(const JointPoint&)>;

struct ProblemMetadata {
  std::optional<double> L0;
  std::optional<double> L1;
  std::optional<double> rho;
  std::optional<JointPoint> z_star;
  // Compact box on which a locally-Lipschitz objective's L0 was measured.
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> l0_probe_box;
};

// A min-max instance: objective f(x, y) minimised over x and maximised over
// y, an optional analytic operator F(z) = [grad_x f; -grad_y f], a feasible
// set in product form, and optional regularity metadata. Immutable after
// construction; evaluation is reentrant.
class MinMaxProblem {
 public:
  MinMaxProblem(std::string name, Eigen::Index n, Eigen::Index m, Objective f,
                std::optional<GradientOperator> analytic_gradient,
                FeasibleSet set, ProblemMetadata metadata = {});

  const std::string& name() const { return name_; }
  Eigen::Index n() const { return n_; }
  Eigen::Index m() const { return m_; }
  Eigen::Index dim() const { return n_ + m_; }

  double evaluate(const JointPoint& z) const;
  bool has_analytic_gradient() const { return gradient_.has_value(); }
  DualVector analytic_gradient(const JointPoint& z) const;

  // Central-difference approximation of the operator, usable when no
  // analytic gradient is attached; step is scaled per coordinate by
  // step_scale * (1 + |z_i|).
  DualVector fd_gradient(const JointPoint& z, double step_scale = 1e-6) const;

  // Analytic operator when present, finite differences otherwise.
  DualVector gradient_or_fd(const JointPoint& z) const;

  const FeasibleSet& set() const { return set_; }
  const ProblemMetadata& metadata() const { return metadata_; }

 private:
  std::string name_;
  Eigen::Index n_, m_;
  Objective f_;
  std::optional<GradientOperator> gradient_;
  FeasibleSet set_;
  ProblemMetadata metadata_;
};

// --- 1+1 dimensional test objectives -------------------------------------

// f1(x,y) = 2x^2 - 2y^2 + 4xy + 10 sin(xy), smooth, unconstrained.
MinMaxProblem toy_f1();
// f2(x,y) = log(1+e^x) + 3xy - log(1+e^y) on the box |x| <= 3, |y| <= 2.
MinMaxProblem toy_f2();
// f3(x,y) = |x^3 - 1| - |y^3 + 1|, nonsmooth, unconstrained. L0 metadata is
// measured on the given probe box (the objective is only locally Lipschitz).
MinMaxProblem toy_f3(double probe_half_width = 10.0);

// f(x,y) = x*y, unconstrained; the operator (y, -x) is the classic rotation
// on which extragradient contracts and plain descent-ascent diverges.
MinMaxProblem bilinear_problem();

// f(x,y) = x*y on the nonnegative orthant with the componentwise-nonnegative
// operator (y, x). With this operator the proximal Minty inequality holds at
// the origin for every pair of feasible points, which is what the proximal
// samplers certify. Note the operator is not the min-max rotation.
MinMaxProblem orthant_prox_mvi_problem();

// --- robust least squares -------------------------------------------------

// min_x max_{|delta| <= radius} |A x - y0 + delta|^2. The x block is
// unconstrained with dimension cols(A); the adversarial block delta has
// dimension rows(A).
MinMaxProblem rls_problem(const Eigen::MatrixXd& A, const Eigen::VectorXd& y0,
                          double radius);
// Instance with A, y0 entries drawn i.i.d. from N(0,1).
MinMaxProblem random_rls_problem(Eigen::Index rows, Eigen::Index cols,
                                 double radius, std::uint64_t seed);
void save_rls_instance(const std::string& path, const Eigen::MatrixXd& A,
                       const Eigen::VectorXd& y0);
std::pair<Eigen::MatrixXd, Eigen::VectorXd> load_rls_instance(
    const std::string& path);

// --- data poisoning on logistic regression --------------------------------

struct PoisoningDataset {
  Eigen::MatrixXd features;        // samples x 20
  Eigen::VectorXi labels;          // 0/1
  std::vector<Eigen::Index> poisoned;  // indices perturbed by the attacker
};

struct PoisoningProblem {
  MinMaxProblem problem;
  PoisoningDataset dataset;
  // Fraction of correct sign predictions of model y on the clean features.
  double accuracy(const Eigen::VectorXd& model) const;
  // Model fitted on the unattacked objective (x = 0) by gradient descent;
  // used as the clean-training baseline.
  Eigen::VectorXd fit_clean_model(long long iterations = 4000,
                                  double step = 1.0) const;
};

// Attack on a generated binary classification set: 500 samples with
// 20-dimensional N(0,I) features, labels thresholded from a random linear
// model, 15% of the samples exposed to an additive feature perturbation x
// with ||x||_inf <= 10; the trainer fits y against the mixed loss with ridge
// weight 1e-3. Objective signs follow the min-max reformulation (x minimises,
// y maximises).
PoisoningProblem poisoning_problem(std::uint64_t seed);
PoisoningProblem poisoning_problem_from_dataset(PoisoningDataset dataset);

void save_poisoning_dataset(const std::string& path,
                            const PoisoningDataset& dataset);
PoisoningDataset load_poisoning_dataset(const std::string& path);

// --- lane merging open-loop game -------------------------------------------

struct CarState {
  double x = 0, y = 0, heading = 0, speed = 0;
};
struct CarInput {
  double accel = 0, steer = 0;
};

// Classic fourth-order Runge-Kutta step of the kinematic bicycle model
// [v cos(theta); v sin(theta); v tan(delta)/L; a] with piecewise-linear
// inputs: the midpoint stage uses the average of the two endpoint inputs.
CarState rk4_step(const CarState& state, const CarInput& input_now,
                  const CarInput& input_next, double dt, double wheelbase);

struct LaneMergingSpec {
  int control_points = 50;  // per car
  double dt = 0.4;
  double y_target = 5.0;
  // Input bounds and wheelbase (not part of the benchmark's published
  // parameters; defaults are engineering choices and are config-exposed).
  double accel_min = -3.0, accel_max = 3.0;
  double steer_min = -0.5, steer_max = 0.5;
  double wheelbase = 2.5;
  CarState car1_start{0.0, 5.0, 0.0, 2.0};
  CarState car2_start{5.0, 0.0, 0.0, 3.0};
};

struct LaneMergingRollout {
  std::vector<CarState> car1, car2;
  std::vector<double> gamma1, gamma2;  // per-step objective terms
  double total = 0;
};

// Two-car game: car 2 (the minimiser, 2*Phi decision variables laid out as
// [accels..., steers...]) merges into the target lane, car 1 (the maximiser,
// Phi acceleration variables, steering fixed at zero) keeps its speed; both
// are penalised for proximity. States roll out with rk4_step from the given
// starts; the objective sums both per-step terms over the horizon.
MinMaxProblem lane_merging_problem(const LaneMergingSpec& spec = {});
LaneMergingRollout lane_merging_rollout(const LaneMergingSpec& spec,
                                        const JointPoint& controls);

// Indices of acceleration coordinates in the joint control vector (the rest
// are steering); used to build blockwise sampling covariances.
std::vector<bool> lane_merging_accel_mask(const LaneMergingSpec& spec);

// --- |x| - |y| with closed-form smoothed operator --------------------------

struct AbsDiffProblem {
  MinMaxProblem problem;
  double sigma = 1.0;  // directions drawn from N(0, sigma^2 I), i.e. B = I/sigma^2
  MetricMatrix metric;
  // Exact smoothed operator: component i equals 1 - 2 Phi(-z_i / (mu sigma)).
  DualVector smoothed_operator(const JointPoint& z, double mu) const;
};

// f(x,y) = |x| - |y| in 1+1 dimensions. Smoothing against N(0, sigma^2)
// yields folded-normal expectations whose gradient has the closed form
// above; the origin satisfies the Minty inequality for the smoothed
// operator.
AbsDiffProblem abs_diff_problem(double sigma = 1.0);

// Standard normal CDF.
double normal_cdf(double t);

}  // namespace zomax

#endif  // ZOMAX_PROBLEMS_HPP
