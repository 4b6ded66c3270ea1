#include "zomax/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace zomax {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double softplus(double s) {
  return std::log1p(std::exp(-std::abs(s))) + std::max(s, 0.0);
}

double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

void write_row(std::ostream& os, const Eigen::VectorXd& v) {
  char buf[64];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    os << (i ? "," : "") << buf;
  }
  os << "\n";
}

std::vector<double> parse_row(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    out.push_back(std::stod(cell));
  }
  return out;
}

}  // namespace

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

// --- FeasibleSet ------------------------------------------------------------

FeasibleSet FeasibleSet::unconstrained() { return FeasibleSet{}; }

FeasibleSet FeasibleSet::box(Eigen::VectorXd lower, Eigen::VectorXd upper) {
  if (lower.size() != upper.size()) {
    throw DimensionMismatch("box bounds must have equal length");
  }
  if ((lower.array() > upper.array()).any()) {
    throw std::invalid_argument("box lower bound exceeds upper bound");
  }
  FeasibleSet s;
  s.kind_ = Kind::Box;
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

FeasibleSet FeasibleSet::ball(Eigen::VectorXd center, double radius) {
  if (!(radius > 0)) throw std::invalid_argument("ball radius must be positive");
  FeasibleSet s;
  s.kind_ = Kind::Ball;
  s.center_ = std::move(center);
  s.radius_ = radius;
  return s;
}

FeasibleSet FeasibleSet::nonnegative_orthant() {
  FeasibleSet s;
  s.kind_ = Kind::NonnegativeOrthant;
  return s;
}

FeasibleSet FeasibleSet::product(std::vector<FeasibleSet> blocks,
                                 std::vector<Eigen::Index> dims) {
  if (blocks.size() != dims.size() || blocks.empty()) {
    throw std::invalid_argument("product needs one dimension per block");
  }
  FeasibleSet s;
  s.kind_ = Kind::Product;
  s.blocks_ = std::move(blocks);
  s.block_dims_ = std::move(dims);
  return s;
}

Eigen::VectorXd FeasibleSet::project(const Eigen::VectorXd& v) const {
  switch (kind_) {
    case Kind::Unconstrained:
      return v;
    case Kind::Box: {
      if (v.size() != lower_.size()) {
        throw DimensionMismatch("box dimension mismatch");
      }
      return v.cwiseMax(lower_).cwiseMin(upper_);
    }
    case Kind::Ball: {
      if (v.size() != center_.size()) {
        throw DimensionMismatch("ball dimension mismatch");
      }
      const Eigen::VectorXd diff = v - center_;
      const double norm = diff.norm();
      if (norm <= radius_) return v;
      return center_ + (radius_ / norm) * diff;
    }
    case Kind::NonnegativeOrthant:
      return v.cwiseMax(0.0);
    case Kind::Product: {
      Eigen::VectorXd out(v.size());
      Eigen::Index off = 0;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        out.segment(off, block_dims_[b]) =
            blocks_[b].project(v.segment(off, block_dims_[b]));
        off += block_dims_[b];
      }
      if (off != v.size()) {
        throw DimensionMismatch("product blocks do not partition the vector");
      }
      return out;
    }
  }
  throw std::logic_error("unreachable set kind");
}

bool FeasibleSet::contains(const Eigen::VectorXd& v, double tol) const {
  return distance(v) <= tol;
}

double FeasibleSet::distance(const Eigen::VectorXd& v) const {
  return (v - project(v)).norm();
}

double FeasibleSet::diameter() const {
  switch (kind_) {
    case Kind::Unconstrained:
    case Kind::NonnegativeOrthant:
      return kInf;
    case Kind::Box:
      return (upper_ - lower_).norm();
    case Kind::Ball:
      return 2.0 * radius_;
    case Kind::Product: {
      double acc = 0;
      for (const auto& b : blocks_) {
        const double d = b.diameter();
        if (std::isinf(d)) return kInf;
        acc += d * d;
      }
      return std::sqrt(acc);
    }
  }
  throw std::logic_error("unreachable set kind");
}

std::pair<FeasibleSet, FeasibleSet> FeasibleSet::split(Eigen::Index n) const {
  switch (kind_) {
    case Kind::Unconstrained:
      return {unconstrained(), unconstrained()};
    case Kind::NonnegativeOrthant:
      return {nonnegative_orthant(), nonnegative_orthant()};
    case Kind::Box:
      return {box(lower_.head(n), upper_.head(n)),
              box(lower_.tail(lower_.size() - n), upper_.tail(upper_.size() - n))};
    case Kind::Ball:
      throw ConfigurationError("a ball constraint does not factor across blocks");
    case Kind::Product: {
      std::vector<FeasibleSet> left, right;
      std::vector<Eigen::Index> ldims, rdims;
      Eigen::Index off = 0;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const Eigen::Index dim = block_dims_[b];
        if (off + dim <= n) {
          left.push_back(blocks_[b]);
          ldims.push_back(dim);
        } else if (off >= n) {
          right.push_back(blocks_[b]);
          rdims.push_back(dim);
        } else {
          auto [a, c] = blocks_[b].split(n - off);
          left.push_back(a);
          ldims.push_back(n - off);
          right.push_back(c);
          rdims.push_back(dim - (n - off));
        }
        off += dim;
      }
      auto pack = [](std::vector<FeasibleSet> bs, std::vector<Eigen::Index> ds) {
        if (bs.empty()) return unconstrained();
        if (bs.size() == 1) return bs[0];
        return product(std::move(bs), std::move(ds));
      };
      return {pack(std::move(left), std::move(ldims)),
              pack(std::move(right), std::move(rdims))};
    }
  }
  throw std::logic_error("unreachable set kind");
}

JointPoint project(const FeasibleSet& set, const JointPoint& z,
                   const MetricMatrix& metric) {
  if (set.is_unconstrained()) return z;
  const Eigen::VectorXd flat = set.project(z.flat());
  const JointPoint projected = JointPoint::from_flat(flat, z.n());
  // A feasible point is its own projection in every norm; the metric only
  // matters once the constraint actually moves the point, and then the
  // closed-form Euclidean projection is the weighted one only for
  // scalar-per-block metrics.
  if (projected == z) return z;
  if (!metric.has_scalar_blocks()) {
    throw ConfigurationError(
        "projection with an active constraint requires each metric block to "
        "be a scalar multiple of the identity");
  }
  return projected;
}

// --- MinMaxProblem ----------------------------------------------------------

MinMaxProblem::MinMaxProblem(std::string name, Eigen::Index n, Eigen::Index m,
                             Objective f,
                             std::optional<GradientOperator> analytic_gradient,
                             FeasibleSet set, ProblemMetadata metadata)
    : name_(std::move(name)),
      n_(n),
      m_(m),
      f_(std::move(f)),
      gradient_(std::move(analytic_gradient)),
      set_(std::move(set)),
      metadata_(std::move(metadata)) {}

double MinMaxProblem::evaluate(const JointPoint& z) const {
  if (z.n() != n_ || z.m() != m_) {
    throw DimensionMismatch("point dimensions do not match problem");
  }
  const double v = f_(z);
  if (!std::isfinite(v)) {
    throw EvaluationError("objective returned a non-finite value", z);
  }
  return v;
}

DualVector MinMaxProblem::analytic_gradient(const JointPoint& z) const {
  if (!gradient_) {
    throw ConfigurationError("problem '" + name_ + "' has no analytic gradient");
  }
  return (*gradient_)(z);
}

DualVector MinMaxProblem::fd_gradient(const JointPoint& z,
                                      double step_scale) const {
  DualVector g = DualVector::Zero(n_, m_);
  JointPoint p = z;
  for (Eigen::Index i = 0; i < n_; ++i) {
    const double h = step_scale * (1.0 + std::abs(z.x[i]));
    const double orig = p.x[i];
    p.x[i] = orig + h;
    const double fp = f_(p);
    p.x[i] = orig - h;
    const double fm = f_(p);
    p.x[i] = orig;
    g.x[i] = (fp - fm) / (2.0 * h);
  }
  for (Eigen::Index i = 0; i < m_; ++i) {
    const double h = step_scale * (1.0 + std::abs(z.y[i]));
    const double orig = p.y[i];
    p.y[i] = orig + h;
    const double fp = f_(p);
    p.y[i] = orig - h;
    const double fm = f_(p);
    p.y[i] = orig;
    g.y[i] = -(fp - fm) / (2.0 * h);
  }
  return g;
}

DualVector MinMaxProblem::gradient_or_fd(const JointPoint& z) const {
  return gradient_ ? (*gradient_)(z) : fd_gradient(z);
}

// --- toy objectives ---------------------------------------------------------

MinMaxProblem toy_f1() {
  Objective f = [](const JointPoint& z) {
    const double x = z.x[0], y = z.y[0];
    return 2 * x * x - 2 * y * y + 4 * x * y + 10 * std::sin(x * y);
  };
  GradientOperator F = [](const JointPoint& z) {
    const double x = z.x[0], y = z.y[0];
    const double c = std::cos(x * y);
    const double gx = 4 * x + 4 * y + 10 * y * c;
    const double gy = -4 * y + 4 * x + 10 * x * c;
    return DualVector::Scalars(gx, -gy);
  };
  ProblemMetadata meta;
  meta.z_star = JointPoint::Scalars(0.0, 0.0);
  return MinMaxProblem("toy_f1", 1, 1, std::move(f), std::move(F),
                       FeasibleSet::unconstrained(), std::move(meta));
}

MinMaxProblem toy_f2() {
  Objective f = [](const JointPoint& z) {
    const double x = z.x[0], y = z.y[0];
    return softplus(x) + 3 * x * y - softplus(y);
  };
  GradientOperator F = [](const JointPoint& z) {
    const double x = z.x[0], y = z.y[0];
    const double gx = sigmoid(x) + 3 * y;
    const double gy = 3 * x - sigmoid(y);
    return DualVector::Scalars(gx, -gy);
  };
  Eigen::VectorXd lo(2), hi(2);
  lo << -3, -2;
  hi << 3, 2;
  ProblemMetadata meta;
  meta.L1 = 3.25;  // |Hessian| <= 3 coupling + 1/4 logistic curvature
  return MinMaxProblem("toy_f2", 1, 1, std::move(f), std::move(F),
                       FeasibleSet::box(lo, hi), std::move(meta));
}

MinMaxProblem toy_f3(double probe_half_width) {
  Objective f = [](const JointPoint& z) {
    const double x = z.x[0], y = z.y[0];
    return std::abs(x * x * x - 1.0) - std::abs(y * y * y + 1.0);
  };
  ProblemMetadata meta;
  const double w = probe_half_width;
  meta.L0 = 3.0 * std::numbers::sqrt2 * w * w;
  meta.z_star = JointPoint::Scalars(1.0, -1.0);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -w);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, w);
  meta.l0_probe_box = std::make_pair(lo, hi);
  return MinMaxProblem("toy_f3", 1, 1, std::move(f), std::nullopt,
                       FeasibleSet::unconstrained(), std::move(meta));
}

MinMaxProblem bilinear_problem() {
  Objective f = [](const JointPoint& z) { return z.x[0] * z.y[0]; };
  GradientOperator F = [](const JointPoint& z) {
    return DualVector::Scalars(z.y[0], -z.x[0]);
  };
  ProblemMetadata meta;
  meta.L1 = 1.0;
  meta.rho = 0.0;
  meta.z_star = JointPoint::Scalars(0.0, 0.0);
  return MinMaxProblem("bilinear", 1, 1, std::move(f), std::move(F),
                       FeasibleSet::unconstrained(), std::move(meta));
}

MinMaxProblem orthant_prox_mvi_problem() {
  Objective f = [](const JointPoint& z) { return z.x[0] * z.y[0]; };
  // Componentwise-nonnegative operator (y, x) on the orthant; see header.
  GradientOperator F = [](const JointPoint& z) {
    return DualVector::Scalars(z.y[0], z.x[0]);
  };
  ProblemMetadata meta;
  meta.L1 = 1.0;
  meta.rho = 0.0;
  meta.z_star = JointPoint::Scalars(0.0, 0.0);
  return MinMaxProblem("orthant_prox_mvi", 1, 1, std::move(f), std::move(F),
                       FeasibleSet::nonnegative_orthant(), std::move(meta));
}

// --- robust least squares ---------------------------------------------------

MinMaxProblem rls_problem(const Eigen::MatrixXd& A, const Eigen::VectorXd& y0,
                          double radius) {
  if (A.rows() != y0.size()) {
    throw DimensionMismatch("rows(A) must equal length(y0)");
  }
  if (!(radius > 0)) throw std::invalid_argument("radius must be positive");
  const Eigen::Index rows = A.rows(), cols = A.cols();

  auto shared_A = std::make_shared<Eigen::MatrixXd>(A);
  auto shared_y = std::make_shared<Eigen::VectorXd>(y0);
  Objective f = [shared_A, shared_y](const JointPoint& z) {
    return (*shared_A * z.x - *shared_y + z.y).squaredNorm();
  };
  GradientOperator F = [shared_A, shared_y](const JointPoint& z) {
    const Eigen::VectorXd r = *shared_A * z.x - *shared_y + z.y;
    return DualVector{2.0 * shared_A->transpose() * r, -2.0 * r};
  };

  ProblemMetadata meta;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  meta.L1 = 2.0 * (smax * smax + 1.0);
  if (rows <= cols && svd.singularValues().size() &&
      svd.singularValues().tail(1)(0) > 1e-10 * smax) {
    // Underdetermined with full row rank: the min-norm interpolant together
    // with a zero perturbation is a zero of the operator.
    Eigen::VectorXd x_star = svd.solve(y0);
    meta.z_star = JointPoint{x_star, Eigen::VectorXd::Zero(rows)};
  }

  std::vector<FeasibleSet> blocks;
  blocks.push_back(FeasibleSet::unconstrained());
  blocks.push_back(FeasibleSet::ball(Eigen::VectorXd::Zero(rows), radius));
  FeasibleSet set = FeasibleSet::product(std::move(blocks), {cols, rows});

  return MinMaxProblem("rls", cols, rows, std::move(f), std::move(F),
                       std::move(set), std::move(meta));
}

MinMaxProblem random_rls_problem(Eigen::Index rows, Eigen::Index cols,
                                 double radius, std::uint64_t seed) {
  RngStream stream = Rng(seed).generic_stream(0x1);
  Eigen::MatrixXd A(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      A(i, j) = stream.next_normal();
    }
  }
  Eigen::VectorXd y0(rows);
  for (Eigen::Index i = 0; i < rows; ++i) y0[i] = stream.next_normal();
  return rls_problem(A, y0, radius);
}

void save_rls_instance(const std::string& path, const Eigen::MatrixXd& A,
                       const Eigen::VectorXd& y0) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << A.rows() << "," << A.cols() << "\n";
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    write_row(os, A.row(i).transpose());
  }
  write_row(os, y0);
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> load_rls_instance(
    const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty instance file");
  const auto dims = parse_row(line);
  if (dims.size() != 2) throw std::runtime_error("bad instance header");
  const Eigen::Index rows = static_cast<Eigen::Index>(dims[0]);
  const Eigen::Index cols = static_cast<Eigen::Index>(dims[1]);
  Eigen::MatrixXd A(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!std::getline(is, line)) throw std::runtime_error("truncated matrix");
    const auto row = parse_row(line);
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::runtime_error("bad matrix row length");
    }
    for (Eigen::Index j = 0; j < cols; ++j) A(i, j) = row[j];
  }
  if (!std::getline(is, line)) throw std::runtime_error("missing target row");
  const auto yrow = parse_row(line);
  if (static_cast<Eigen::Index>(yrow.size()) != rows) {
    throw std::runtime_error("bad target row length");
  }
  Eigen::VectorXd y0(rows);
  for (Eigen::Index i = 0; i < rows; ++i) y0[i] = yrow[i];
  return {A, y0};
}

// --- data poisoning ----------------------------------------------------------

namespace {

constexpr Eigen::Index kPoisonFeatures = 20;
constexpr Eigen::Index kPoisonSamples = 500;
constexpr double kPoisonRidge = 1e-3;
constexpr double kPoisonBoxHalfWidth = 10.0;
constexpr double kPoisonRatio = 0.15;

// Cross-entropy of the logistic model with feature shift `shift` applied to
// the listed samples (mean over that subset).
double subset_loss(const Eigen::MatrixXd& feats, const Eigen::VectorXi& labels,
                   const std::vector<Eigen::Index>& subset,
                   const Eigen::VectorXd& shift, const Eigen::VectorXd& model) {
  double acc = 0;
  const double shift_dot = shift.size() ? shift.dot(model) : 0.0;
  for (const Eigen::Index i : subset) {
    const double s = feats.row(i).dot(model) + shift_dot;
    acc += labels[i] == 1 ? softplus(-s) : softplus(s);
  }
  return acc / static_cast<double>(subset.size());
}

void subset_loss_grad(const Eigen::MatrixXd& feats,
                      const Eigen::VectorXi& labels,
                      const std::vector<Eigen::Index>& subset,
                      const Eigen::VectorXd& shift,
                      const Eigen::VectorXd& model, Eigen::VectorXd* g_shift,
                      Eigen::VectorXd* g_model) {
  if (g_shift) g_shift->setZero();
  if (g_model) g_model->setZero();
  const double shift_dot = shift.size() ? shift.dot(model) : 0.0;
  for (const Eigen::Index i : subset) {
    const double s = feats.row(i).dot(model) + shift_dot;
    const double w = sigmoid(s) - static_cast<double>(labels[i]);
    if (g_shift) *g_shift += w * model;
    if (g_model) {
      *g_model += w * (feats.row(i).transpose() + shift);
    }
  }
  const double inv = 1.0 / static_cast<double>(subset.size());
  if (g_shift) *g_shift *= inv;
  if (g_model) *g_model *= inv;
}

}  // namespace

double PoisoningProblem::accuracy(const Eigen::VectorXd& model) const {
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < dataset.features.rows(); ++i) {
    const int pred = dataset.features.row(i).dot(model) >= 0.0 ? 1 : 0;
    if (pred == dataset.labels[i]) ++correct;
  }
  return static_cast<double>(correct) /
         static_cast<double>(dataset.features.rows());
}

Eigen::VectorXd PoisoningProblem::fit_clean_model(long long iterations,
                                                  double step) const {
  std::vector<Eigen::Index> all(dataset.features.rows());
  for (Eigen::Index i = 0; i < dataset.features.rows(); ++i) all[i] = i;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(dataset.features.cols());
  Eigen::VectorXd g(dataset.features.cols());
  const Eigen::VectorXd no_shift = Eigen::VectorXd::Zero(dataset.features.cols());
  for (long long it = 0; it < iterations; ++it) {
    subset_loss_grad(dataset.features, dataset.labels, all, no_shift, y,
                     nullptr, &g);
    g += 2.0 * kPoisonRidge * y;
    y -= step * g;
  }
  return y;
}

PoisoningProblem poisoning_problem_from_dataset(PoisoningDataset dataset) {
  const Eigen::Index n_feat = dataset.features.cols();
  auto data = std::make_shared<PoisoningDataset>(std::move(dataset));

  std::vector<Eigen::Index> clean;
  for (Eigen::Index i = 0; i < data->features.rows(); ++i) {
    if (std::find(data->poisoned.begin(), data->poisoned.end(), i) ==
        data->poisoned.end()) {
      clean.push_back(i);
    }
  }
  auto clean_idx = std::make_shared<std::vector<Eigen::Index>>(std::move(clean));
  auto poison_idx = std::make_shared<std::vector<Eigen::Index>>(data->poisoned);

  Objective f = [data, clean_idx, poison_idx](const JointPoint& z) {
    const double lp =
        subset_loss(data->features, data->labels, *poison_idx, z.x, z.y);
    const Eigen::VectorXd no_shift = Eigen::VectorXd::Zero(z.x.size());
    const double lt =
        subset_loss(data->features, data->labels, *clean_idx, no_shift, z.y);
    return -(lp + lt + kPoisonRidge * z.y.squaredNorm());
  };
  GradientOperator F = [data, clean_idx, poison_idx](const JointPoint& z) {
    Eigen::VectorXd gx(z.x.size()), gy_p(z.y.size()), gy_t(z.y.size());
    subset_loss_grad(data->features, data->labels, *poison_idx, z.x, z.y, &gx,
                     &gy_p);
    const Eigen::VectorXd no_shift = Eigen::VectorXd::Zero(z.x.size());
    subset_loss_grad(data->features, data->labels, *clean_idx, no_shift, z.y,
                     nullptr, &gy_t);
    const Eigen::VectorXd grad_x = -gx;
    const Eigen::VectorXd grad_y = -(gy_p + gy_t + 2.0 * kPoisonRidge * z.y);
    return DualVector{grad_x, -grad_y};
  };

  Eigen::VectorXd lo = Eigen::VectorXd::Constant(n_feat, -kPoisonBoxHalfWidth);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(n_feat, kPoisonBoxHalfWidth);
  std::vector<FeasibleSet> blocks;
  blocks.push_back(FeasibleSet::box(lo, hi));
  blocks.push_back(FeasibleSet::unconstrained());
  FeasibleSet set = FeasibleSet::product(std::move(blocks), {n_feat, n_feat});

  MinMaxProblem problem("poisoning", n_feat, n_feat, std::move(f), std::move(F),
                        std::move(set));
  return PoisoningProblem{std::move(problem), *data};
}

PoisoningProblem poisoning_problem(std::uint64_t seed) {
  RngStream stream = Rng(seed).generic_stream(0x2);
  PoisoningDataset data;
  data.features.resize(kPoisonSamples, kPoisonFeatures);
  data.labels.resize(kPoisonSamples);

  Eigen::VectorXd theta(kPoisonFeatures);
  for (Eigen::Index j = 0; j < kPoisonFeatures; ++j) {
    theta[j] = stream.next_normal();
  }
  for (Eigen::Index i = 0; i < kPoisonSamples; ++i) {
    for (Eigen::Index j = 0; j < kPoisonFeatures; ++j) {
      data.features(i, j) = stream.next_normal();
    }
    const double v = std::sqrt(1e-3) * stream.next_normal();
    const double s = data.features.row(i).dot(theta) + v;
    data.labels[i] = s >= 0.0 ? 1 : 0;
  }

  // Random 15% subset via a seeded shuffle.
  std::vector<Eigen::Index> order(kPoisonSamples);
  for (Eigen::Index i = 0; i < kPoisonSamples; ++i) order[i] = i;
  for (Eigen::Index i = kPoisonSamples - 1; i > 0; --i) {
    const Eigen::Index j =
        static_cast<Eigen::Index>(stream.next_u64() % (i + 1));
    std::swap(order[i], order[j]);
  }
  const Eigen::Index n_poison = static_cast<Eigen::Index>(
      std::ceil(kPoisonRatio * static_cast<double>(kPoisonSamples)));
  data.poisoned.assign(order.begin(), order.begin() + n_poison);
  std::sort(data.poisoned.begin(), data.poisoned.end());
  return poisoning_problem_from_dataset(std::move(data));
}

void save_poisoning_dataset(const std::string& path,
                            const PoisoningDataset& dataset) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (Eigen::Index j = 0; j < dataset.features.cols(); ++j) {
    os << "feature_" << j << ",";
  }
  os << "label\n";
  // Perturbed samples are emitted first so the subset is recoverable from
  // the file alone: the first ceil(15%) rows are the perturbed ones.
  std::vector<Eigen::Index> order;
  order.insert(order.end(), dataset.poisoned.begin(), dataset.poisoned.end());
  for (Eigen::Index i = 0; i < dataset.features.rows(); ++i) {
    if (std::find(dataset.poisoned.begin(), dataset.poisoned.end(), i) ==
        dataset.poisoned.end()) {
      order.push_back(i);
    }
  }
  char buf[64];
  for (const Eigen::Index i : order) {
    for (Eigen::Index j = 0; j < dataset.features.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", dataset.features(i, j));
      os << buf << ",";
    }
    os << dataset.labels[i] << "\n";
  }
}

PoisoningDataset load_poisoning_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty dataset file");
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_row(line));
  }
  if (rows.empty()) throw std::runtime_error("dataset has no rows");
  const Eigen::Index n_feat = static_cast<Eigen::Index>(rows[0].size()) - 1;
  PoisoningDataset data;
  data.features.resize(static_cast<Eigen::Index>(rows.size()), n_feat);
  data.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n_feat + 1) {
      throw std::runtime_error("inconsistent dataset row length");
    }
    for (Eigen::Index j = 0; j < n_feat; ++j) {
      data.features(static_cast<Eigen::Index>(i), j) = rows[i][j];
    }
    data.labels[static_cast<Eigen::Index>(i)] =
        rows[i][n_feat] >= 0.5 ? 1 : 0;
  }
  const Eigen::Index n_poison = static_cast<Eigen::Index>(std::ceil(
      kPoisonRatio * static_cast<double>(data.features.rows())));
  for (Eigen::Index i = 0; i < n_poison; ++i) data.poisoned.push_back(i);
  return data;
}

// --- lane merging ------------------------------------------------------------

namespace {

struct StateDeriv {
  double dx, dy, dheading, dspeed;
};

StateDeriv bicycle_deriv(const CarState& s, const CarInput& u,
                         double wheelbase) {
  return {s.speed * std::cos(s.heading), s.speed * std::sin(s.heading),
          s.speed * std::tan(u.steer) / wheelbase, u.accel};
}

CarState advance(const CarState& s, const StateDeriv& k, double h) {
  return {s.x + h * k.dx, s.y + h * k.dy, s.heading + h * k.dheading,
          s.speed + h * k.dspeed};
}

CarInput clip_input(const CarInput& u, const LaneMergingSpec& spec) {
  return {std::clamp(u.accel, spec.accel_min, spec.accel_max),
          std::clamp(u.steer, spec.steer_min, spec.steer_max)};
}

}  // namespace

CarState rk4_step(const CarState& state, const CarInput& input_now,
                  const CarInput& input_next, double dt, double wheelbase) {
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  if (!(wheelbase > 0)) throw std::invalid_argument("wheelbase must be positive");
  const CarInput mid{0.5 * (input_now.accel + input_next.accel),
                     0.5 * (input_now.steer + input_next.steer)};
  const StateDeriv k1 = bicycle_deriv(state, input_now, wheelbase);
  const StateDeriv k2 = bicycle_deriv(advance(state, k1, dt / 2), mid, wheelbase);
  const StateDeriv k3 = bicycle_deriv(advance(state, k2, dt / 2), mid, wheelbase);
  const StateDeriv k4 = bicycle_deriv(advance(state, k3, dt), input_next, wheelbase);
  return {state.x + dt / 6 * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx),
          state.y + dt / 6 * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy),
          state.heading +
              dt / 6 * (k1.dheading + 2 * k2.dheading + 2 * k3.dheading +
                        k4.dheading),
          state.speed +
              dt / 6 * (k1.dspeed + 2 * k2.dspeed + 2 * k3.dspeed + k4.dspeed)};
}

LaneMergingRollout lane_merging_rollout(const LaneMergingSpec& spec,
                                        const JointPoint& controls) {
  const int phi = spec.control_points;
  if (controls.n() != 2 * phi || controls.m() != phi) {
    throw DimensionMismatch("control vector does not match horizon");
  }
  auto car1_input = [&](int k) {
    return clip_input(CarInput{controls.y[k], 0.0}, spec);
  };
  auto car2_input = [&](int k) {
    return clip_input(CarInput{controls.x[k], controls.x[phi + k]}, spec);
  };

  LaneMergingRollout out;
  out.car1.reserve(phi);
  out.car2.reserve(phi);
  CarState s1 = spec.car1_start, s2 = spec.car2_start;
  for (int k = 0; k < phi; ++k) {
    out.car1.push_back(s1);
    out.car2.push_back(s2);
    const double d2 = (s1.x - s2.x) * (s1.x - s2.x) +
                      (s1.y - s2.y) * (s1.y - s2.y);
    const double prox = std::exp(-d2);
    const double g1 = 0.5 * s1.speed * s1.speed - 2.0 * prox;
    const double g2 =
        prox + 10.0 * (s2.y - spec.y_target) * (s2.y - spec.y_target);
    out.gamma1.push_back(g1);
    out.gamma2.push_back(g2);
    out.total += g1 + g2;
    if (k + 1 < phi) {
      s1 = rk4_step(s1, car1_input(k), car1_input(k + 1), spec.dt,
                    spec.wheelbase);
      s2 = rk4_step(s2, car2_input(k), car2_input(k + 1), spec.dt,
                    spec.wheelbase);
    }
  }
  return out;
}

MinMaxProblem lane_merging_problem(const LaneMergingSpec& spec) {
  const int phi = spec.control_points;
  if (phi < 2) throw std::invalid_argument("need at least two control points");
  auto shared_spec = std::make_shared<LaneMergingSpec>(spec);
  Objective f = [shared_spec](const JointPoint& z) {
    return lane_merging_rollout(*shared_spec, z).total;
  };

  Eigen::VectorXd lo(3 * phi), hi(3 * phi);
  lo.head(phi).setConstant(spec.accel_min);
  hi.head(phi).setConstant(spec.accel_max);
  lo.segment(phi, phi).setConstant(spec.steer_min);
  hi.segment(phi, phi).setConstant(spec.steer_max);
  lo.tail(phi).setConstant(spec.accel_min);
  hi.tail(phi).setConstant(spec.accel_max);

  return MinMaxProblem("lane_merging", 2 * phi, phi, std::move(f), std::nullopt,
                       FeasibleSet::box(lo, hi));
}

std::vector<bool> lane_merging_accel_mask(const LaneMergingSpec& spec) {
  const int phi = spec.control_points;
  std::vector<bool> mask(3 * phi, false);
  for (int k = 0; k < phi; ++k) {
    mask[k] = true;            // car 2 accelerations
    mask[2 * phi + k] = true;  // car 1 accelerations
  }
  return mask;
}

// --- |x| - |y| ----------------------------------------------------------------

DualVector AbsDiffProblem::smoothed_operator(const JointPoint& z,
                                             double mu) const {
  const double sx = 1.0 - 2.0 * normal_cdf(-z.x[0] / (mu * sigma));
  const double sy = 1.0 - 2.0 * normal_cdf(-z.y[0] / (mu * sigma));
  return DualVector::Scalars(sx, sy);
}

AbsDiffProblem abs_diff_problem(double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive");
  Objective f = [](const JointPoint& z) {
    return std::abs(z.x[0]) - std::abs(z.y[0]);
  };
  ProblemMetadata meta;
  meta.L0 = std::numbers::sqrt2;
  meta.rho = 0.0;
  meta.z_star = JointPoint::Scalars(0.0, 0.0);
  MinMaxProblem problem("abs_diff", 1, 1, std::move(f), std::nullopt,
                        FeasibleSet::unconstrained(), std::move(meta));
  AbsDiffProblem out{std::move(problem), sigma,
                     MetricMatrix::scaled_identity(1.0 / (sigma * sigma), 1, 1)};
  return out;
}

}  // namespace zomax
