#ifndef ZOMAX_GEOMETRY_HPP
#define ZOMAX_GEOMETRY_HPP

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

#include "zomax/rng.hpp"

namespace zomax {

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A point z = (x, y) of the min-max space R^n x R^m. The same block layout is
// used for dual objects (gradient-operator values), which carry the sign
// convention [grad_x; -grad_y].
struct JointPoint {
  Eigen::VectorXd x;
  Eigen::VectorXd y;

  JointPoint() = default;
  JointPoint(Eigen::VectorXd x_in, Eigen::VectorXd y_in)
      : x(std::move(x_in)), y(std::move(y_in)) {}

  static JointPoint Zero(Eigen::Index n, Eigen::Index m) {
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(m)};
  }
  // Scalar blocks, handy for 1+1-dimensional problems.
  static JointPoint Scalars(double xv, double yv) {
    Eigen::VectorXd a(1), b(1);
    a << xv;
    b << yv;
    return {a, b};
  }

  Eigen::Index n() const { return x.size(); }
  Eigen::Index m() const { return y.size(); }
  Eigen::Index dim() const { return x.size() + y.size(); }

  bool all_finite() const { return x.allFinite() && y.allFinite(); }

  Eigen::VectorXd flat() const {
    Eigen::VectorXd v(dim());
    v.head(n()) = x;
    v.tail(m()) = y;
    return v;
  }
  static JointPoint from_flat(const Eigen::VectorXd& v, Eigen::Index n) {
    return {v.head(n), v.tail(v.size() - n)};
  }

  JointPoint& operator+=(const JointPoint& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  JointPoint& operator-=(const JointPoint& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  JointPoint& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }

  friend JointPoint operator+(JointPoint a, const JointPoint& b) { return a += b; }
  friend JointPoint operator-(JointPoint a, const JointPoint& b) { return a -= b; }
  friend JointPoint operator*(double s, JointPoint a) { return a *= s; }
  friend JointPoint operator*(JointPoint a, double s) { return a *= s; }

  friend bool operator==(const JointPoint& a, const JointPoint& b) {
    return a.x == b.x && a.y == b.y;
  }
};

// Dual-side values share the block layout of JointPoint.
using DualVector = JointPoint;

inline double dot(const JointPoint& a, const JointPoint& b) {
  return a.x.dot(b.x) + a.y.dot(b.y);
}

// |z| = <z,z>^{1/2}, the plain Euclidean norm; independent of the metric.
inline double weighted_euclidean_norm(const JointPoint& z) {
  return std::sqrt(z.x.squaredNorm() + z.y.squaredNorm());
}

// Block-diagonal SPD sampling metric B = diag(B1, B2). Defines the primal
// norm ||z|| = <z,Bz>^{1/2}, the dual norm ||g||_* = <g,B^{-1}g>^{1/2} and
// the direction distribution N(0, B^{-1}). Immutable after construction and
// safe to share across threads; sampling takes an explicit stream handle.
class MetricMatrix {
 public:
  // Empty placeholder (0x0); any use other than assignment throws.
  MetricMatrix() = default;

  static MetricMatrix identity(Eigen::Index n, Eigen::Index m);
  // B = lambda * I on both blocks.
  static MetricMatrix scaled_identity(double lambda, Eigen::Index n,
                                      Eigen::Index m);
  static MetricMatrix diagonal(const Eigen::VectorXd& d1,
                               const Eigen::VectorXd& d2);
  // General SPD blocks; rejects asymmetric or non positive definite input
  // (smallest eigenvalue must exceed 1e-12 times the largest).
  static MetricMatrix from_blocks(const Eigen::MatrixXd& b1,
                                  const Eigen::MatrixXd& b2);

  Eigen::Index n() const { return n_; }
  Eigen::Index m() const { return m_; }
  Eigen::Index dim() const { return n_ + m_; }

  const Eigen::MatrixXd& b1() const { return b1_; }
  const Eigen::MatrixXd& b2() const { return b2_; }

  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }
  double kappa() const { return lambda_max_ / lambda_min_; }

  // Lower-triangular factor of B^{-1} per block, so that L L^T = B^{-1}.
  const Eigen::MatrixXd& sampling_factor_1() const { return chol_inv_1_; }
  const Eigen::MatrixXd& sampling_factor_2() const { return chol_inv_2_; }

  bool is_identity() const {
    return scalar_b1_ == 1.0 && scalar_b2_ == 1.0;
  }
  // True when each block is a positive scalar multiple of the identity.
  bool has_scalar_blocks() const {
    return scalar_b1_.has_value() && scalar_b2_.has_value();
  }
  std::optional<double> scalar_b1() const { return scalar_b1_; }
  std::optional<double> scalar_b2() const { return scalar_b2_; }

  DualVector apply(const JointPoint& z) const;          // B z
  JointPoint apply_inverse(const DualVector& g) const;  // B^{-1} g

  // One draw u ~ N(0, B^{-1}); block u1 from N(0, B1^{-1}) and u2 from
  // N(0, B2^{-1}), independent. Coordinates consume the stream in index
  // order, x block first.
  JointPoint sample(RngStream& stream) const;

 private:
  void finalize();

  Eigen::Index n_ = 0, m_ = 0;
  Eigen::MatrixXd b1_, b2_;
  Eigen::MatrixXd b1_inv_, b2_inv_;
  Eigen::MatrixXd chol_inv_1_, chol_inv_2_;
  double lambda_min_ = 0, lambda_max_ = 0;
  std::optional<double> scalar_b1_, scalar_b2_;
  bool diagonal_ = false;
};

// ||z|| = <z, Bz>^{1/2}.
double primal_norm(const JointPoint& z, const MetricMatrix& metric);
// ||g||_* = <g, B^{-1} g>^{1/2}.
double dual_norm(const DualVector& g, const MetricMatrix& metric);

std::vector<JointPoint> sample_gaussian(const MetricMatrix& metric,
                                        RngStream& stream, long long count);

}  // namespace zomax

#endif  // ZOMAX_GEOMETRY_HPP
