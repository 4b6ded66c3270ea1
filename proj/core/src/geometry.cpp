#include "zomax/geometry.hpp"

#include <cmath>

namespace zomax {

namespace {

// Exact scalar-multiple-of-identity detection; used to pick cheap sampling
// and matvec paths and to validate projection preconditions.
std::optional<double> scalar_of(const Eigen::MatrixXd& b) {
  if (b.rows() == 0) return 1.0;
  const double c = b(0, 0);
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      const double want = (i == j) ? c : 0.0;
      if (b(i, j) != want) return std::nullopt;
    }
  }
  return c;
}

void check_spd(const Eigen::MatrixXd& b, const char* which) {
  if (b.rows() != b.cols()) {
    throw std::invalid_argument(std::string(which) + " block must be square");
  }
  const double scale = b.cwiseAbs().maxCoeff();
  if (!b.allFinite()) {
    throw std::invalid_argument(std::string(which) + " block has non-finite entries");
  }
  if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0)) {
    throw std::invalid_argument(std::string(which) + " block is not symmetric");
  }
}

}  // namespace

MetricMatrix MetricMatrix::identity(Eigen::Index n, Eigen::Index m) {
  return scaled_identity(1.0, n, m);
}

MetricMatrix MetricMatrix::scaled_identity(double lambda, Eigen::Index n,
                                           Eigen::Index m) {
  if (!(lambda > 0)) {
    throw std::invalid_argument("metric scale must be positive");
  }
  return diagonal(Eigen::VectorXd::Constant(n, lambda),
                  Eigen::VectorXd::Constant(m, lambda));
}

MetricMatrix MetricMatrix::diagonal(const Eigen::VectorXd& d1,
                                    const Eigen::VectorXd& d2) {
  return from_blocks(Eigen::MatrixXd(d1.asDiagonal()),
                     Eigen::MatrixXd(d2.asDiagonal()));
}

MetricMatrix MetricMatrix::from_blocks(const Eigen::MatrixXd& b1,
                                       const Eigen::MatrixXd& b2) {
  check_spd(b1, "B1");
  check_spd(b2, "B2");
  MetricMatrix metric;
  metric.n_ = b1.rows();
  metric.m_ = b2.rows();
  metric.b1_ = b1;
  metric.b2_ = b2;
  metric.finalize();
  return metric;
}

void MetricMatrix::finalize() {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(b1_);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(b2_);
  if (es1.info() != Eigen::Success || es2.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition of metric block failed");
  }
  lambda_min_ = std::min(es1.eigenvalues().minCoeff(), es2.eigenvalues().minCoeff());
  lambda_max_ = std::max(es1.eigenvalues().maxCoeff(), es2.eigenvalues().maxCoeff());
  if (!(lambda_min_ > 1e-12 * lambda_max_) || !(lambda_min_ > 0)) {
    throw std::invalid_argument("metric blocks must be positive definite");
  }

  b1_inv_ = es1.eigenvectors() * es1.eigenvalues().cwiseInverse().asDiagonal() *
            es1.eigenvectors().transpose();
  b2_inv_ = es2.eigenvectors() * es2.eigenvalues().cwiseInverse().asDiagonal() *
            es2.eigenvectors().transpose();
  // Symmetrise before factoring; the eigen reconstruction is symmetric only
  // to rounding.
  b1_inv_ = 0.5 * (b1_inv_ + b1_inv_.transpose()).eval();
  b2_inv_ = 0.5 * (b2_inv_ + b2_inv_.transpose()).eval();

  scalar_b1_ = scalar_of(b1_);
  scalar_b2_ = scalar_of(b2_);
  diagonal_ = b1_.isDiagonal(0.0) && b2_.isDiagonal(0.0);
  if (diagonal_) {
    // Exact inverses and factors for the diagonal case.
    b1_inv_ = Eigen::MatrixXd(b1_.diagonal().cwiseInverse().asDiagonal());
    b2_inv_ = Eigen::MatrixXd(b2_.diagonal().cwiseInverse().asDiagonal());
    chol_inv_1_ =
        Eigen::MatrixXd(b1_.diagonal().cwiseSqrt().cwiseInverse().asDiagonal());
    chol_inv_2_ =
        Eigen::MatrixXd(b2_.diagonal().cwiseSqrt().cwiseInverse().asDiagonal());
    return;
  }

  Eigen::LLT<Eigen::MatrixXd> llt1(b1_inv_);
  Eigen::LLT<Eigen::MatrixXd> llt2(b2_inv_);
  if (llt1.info() != Eigen::Success || llt2.info() != Eigen::Success) {
    throw std::runtime_error("Cholesky factorisation of inverse metric failed");
  }
  chol_inv_1_ = llt1.matrixL();
  chol_inv_2_ = llt2.matrixL();

  const double err1 =
      (chol_inv_1_ * chol_inv_1_.transpose() - b1_inv_).cwiseAbs().maxCoeff();
  const double err2 =
      (chol_inv_2_ * chol_inv_2_.transpose() - b2_inv_).cwiseAbs().maxCoeff();
  const double scale =
      std::max(b1_inv_.cwiseAbs().maxCoeff(), b2_inv_.cwiseAbs().maxCoeff());
  if (err1 > 1e-10 * scale || err2 > 1e-10 * scale) {
    throw std::runtime_error("sampling factor does not reproduce B^{-1}");
  }
}

DualVector MetricMatrix::apply(const JointPoint& z) const {
  if (z.n() != n_ || z.m() != m_) {
    throw DimensionMismatch("point dimensions do not match metric");
  }
  if (has_scalar_blocks()) {
    return {*scalar_b1_ * z.x, *scalar_b2_ * z.y};
  }
  if (diagonal_) {
    return {b1_.diagonal().cwiseProduct(z.x), b2_.diagonal().cwiseProduct(z.y)};
  }
  return {b1_ * z.x, b2_ * z.y};
}

JointPoint MetricMatrix::apply_inverse(const DualVector& g) const {
  if (g.n() != n_ || g.m() != m_) {
    throw DimensionMismatch("dual vector dimensions do not match metric");
  }
  if (has_scalar_blocks()) {
    return {g.x / *scalar_b1_, g.y / *scalar_b2_};
  }
  if (diagonal_) {
    return {b1_inv_.diagonal().cwiseProduct(g.x),
            b2_inv_.diagonal().cwiseProduct(g.y)};
  }
  return {b1_inv_ * g.x, b2_inv_ * g.y};
}

JointPoint MetricMatrix::sample(RngStream& stream) const {
  Eigen::VectorXd xi1(n_), xi2(m_);
  for (Eigen::Index i = 0; i < n_; ++i) xi1[i] = stream.next_normal();
  for (Eigen::Index i = 0; i < m_; ++i) xi2[i] = stream.next_normal();
  if (diagonal_) {
    return {chol_inv_1_.diagonal().cwiseProduct(xi1),
            chol_inv_2_.diagonal().cwiseProduct(xi2)};
  }
  return {chol_inv_1_ * xi1, chol_inv_2_ * xi2};
}

double primal_norm(const JointPoint& z, const MetricMatrix& metric) {
  const DualVector bz = metric.apply(z);
  return std::sqrt(dot(z, bz));
}

double dual_norm(const DualVector& g, const MetricMatrix& metric) {
  const JointPoint binv_g = metric.apply_inverse(g);
  return std::sqrt(dot(g, binv_g));
}

std::vector<JointPoint> sample_gaussian(const MetricMatrix& metric,
                                        RngStream& stream, long long count) {
  if (count < 0) {
    throw std::invalid_argument("sample count must be nonnegative");
  }
  std::vector<JointPoint> draws;
  draws.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    draws.push_back(metric.sample(stream));
  }
  return draws;
}

}  // namespace zomax
