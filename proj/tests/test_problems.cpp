#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "zomax/problems.hpp"

using namespace zomax;

namespace {

JointPoint random_feasible(const MinMaxProblem& problem, RngStream& stream,
                           double scale = 2.0) {
  Eigen::VectorXd v(problem.dim());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = scale * stream.next_normal();
  }
  return JointPoint::from_flat(problem.set().project(v), problem.n());
}

void check_gradient_consistency(const MinMaxProblem& problem, int points,
                                double tol, double scale = 2.0) {
  RngStream stream = Rng(515).generic_stream(1);
  for (int i = 0; i < points; ++i) {
    const JointPoint z = random_feasible(problem, stream, scale);
    const DualVector exact = problem.analytic_gradient(z);
    const DualVector fd = problem.fd_gradient(z);
    const double gap = weighted_euclidean_norm(exact - fd);
    const double ref = 1.0 + weighted_euclidean_norm(exact);
    CHECK(gap <= tol * ref);
  }
}

}  // namespace

TEST_CASE("projection closed forms") {
  const auto metric = MetricMatrix::identity(1, 1);

  Eigen::VectorXd lo(2), hi(2);
  lo << -3, -2;
  hi << 3, 2;
  const auto box = FeasibleSet::box(lo, hi);
  const JointPoint interior = JointPoint::Scalars(1.0, -0.5);
  CHECK(project(box, interior, metric) == interior);
  const JointPoint clamped = project(box, JointPoint::Scalars(5, -7), metric);
  CHECK(clamped.x[0] == 3.0);
  CHECK(clamped.y[0] == -2.0);

  // Ball on the y block: radial scaling.
  std::vector<FeasibleSet> blocks;
  blocks.push_back(FeasibleSet::unconstrained());
  blocks.push_back(FeasibleSet::ball(Eigen::VectorXd::Zero(2), 5.0));
  const auto prod = FeasibleSet::product(std::move(blocks), {1, 2});
  Eigen::VectorXd y(2);
  y << 6.0, 8.0;  // |y| = 10
  const JointPoint scaled =
      project(prod, JointPoint{Eigen::VectorXd::Constant(1, 2.0), y},
              MetricMatrix::identity(1, 2));
  CHECK(scaled.y[0] == doctest::Approx(3.0));
  CHECK(scaled.y[1] == doctest::Approx(4.0));
  CHECK(scaled.x[0] == 2.0);
}

TEST_CASE("projection requires scalar metric blocks when constrained") {
  Eigen::MatrixXd b1(2, 2);
  b1 << 2, 1, 1, 2;
  const auto metric = MetricMatrix::from_blocks(b1, Eigen::MatrixXd::Identity(1, 1));
  const auto orthant = FeasibleSet::nonnegative_orthant();
  const JointPoint z{Eigen::VectorXd::Constant(2, -1.0),
                     Eigen::VectorXd::Constant(1, 1.0)};
  CHECK_THROWS_AS(project(orthant, z, metric), ConfigurationError);
  // Unconstrained passes through untouched for any metric.
  CHECK(project(FeasibleSet::unconstrained(), z, metric) == z);
  // So does a point the constraint does not move: interior points are fixed
  // points of the projection in every norm.
  const JointPoint inside{Eigen::VectorXd::Constant(2, 1.0),
                          Eigen::VectorXd::Constant(1, 2.0)};
  CHECK(project(orthant, inside, metric) == inside);
}

TEST_CASE("projection is idempotent and non-expansive") {
  RngStream stream = Rng(21).generic_stream(0);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(4, -1.5);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(4, 2.0);
  std::vector<FeasibleSet> product_blocks;
  product_blocks.push_back(FeasibleSet::ball(Eigen::VectorXd::Zero(2), 1.0));
  product_blocks.push_back(FeasibleSet::nonnegative_orthant());
  const std::vector<FeasibleSet> sets = {
      FeasibleSet::box(lo, hi),
      FeasibleSet::ball(Eigen::VectorXd::Ones(4), 2.5),
      FeasibleSet::nonnegative_orthant(),
      FeasibleSet::product(std::move(product_blocks), {2, 2}),
  };
  for (const auto& set : sets) {
    for (int i = 0; i < 1000; ++i) {
      Eigen::VectorXd a(4), b(4);
      for (Eigen::Index j = 0; j < 4; ++j) {
        a[j] = 3.0 * stream.next_normal();
        b[j] = 3.0 * stream.next_normal();
      }
      const Eigen::VectorXd pa = set.project(a);
      const Eigen::VectorXd pb = set.project(b);
      CHECK((set.project(pa) - pa).norm() <= 1e-12);
      CHECK((pa - pb).norm() <= (a - b).norm() * (1 + 1e-12));
    }
  }
}

TEST_CASE("set diameters") {
  Eigen::VectorXd lo(2), hi(2);
  lo << -3, -2;
  hi << 3, 2;
  CHECK(FeasibleSet::box(lo, hi).diameter() ==
        doctest::Approx(std::sqrt(52.0)));
  CHECK(FeasibleSet::ball(Eigen::VectorXd::Zero(3), 5.0).diameter() == 10.0);
  CHECK(std::isinf(FeasibleSet::unconstrained().diameter()));
  CHECK(std::isinf(FeasibleSet::nonnegative_orthant().diameter()));
}

TEST_CASE("toy objectives") {
  const auto f1 = toy_f1();
  CHECK(f1.evaluate(JointPoint::Scalars(0, 0)) == 0.0);
  const DualVector g0 = f1.analytic_gradient(JointPoint::Scalars(0, 0));
  CHECK(g0.x[0] == 0.0);
  CHECK(g0.y[0] == 0.0);

  const auto f2 = toy_f2();
  CHECK(f2.set().kind() == FeasibleSet::Kind::Box);
  CHECK(f2.set().lower()[0] == -3.0);
  CHECK(f2.set().upper()[0] == 3.0);
  CHECK(f2.set().lower()[1] == -2.0);
  CHECK(f2.set().upper()[1] == 2.0);

  const auto f3 = toy_f3();
  CHECK(f3.evaluate(JointPoint::Scalars(1, -1)) == 0.0);
  CHECK_FALSE(f3.has_analytic_gradient());
  REQUIRE(f3.metadata().z_star.has_value());
  CHECK(f3.metadata().z_star->x[0] == 1.0);
  CHECK(f3.metadata().z_star->y[0] == -1.0);
  REQUIRE(f3.metadata().L0.has_value());
  // The separable terms are minimised/maximised exactly at their kinks: the
  // x term only grows away from 1, the y term only shrinks away from -1.
  CHECK(f3.evaluate(JointPoint::Scalars(1.3, -1)) > 0.0);
  CHECK(f3.evaluate(JointPoint::Scalars(1, -0.7)) < 0.0);
  CHECK(f3.evaluate(JointPoint::Scalars(0.6, -1)) > 0.0);
}

TEST_CASE("analytic gradients match central differences") {
  check_gradient_consistency(toy_f1(), 100, 1e-4);
  check_gradient_consistency(toy_f2(), 100, 1e-4);
  check_gradient_consistency(bilinear_problem(), 100, 1e-4);
  check_gradient_consistency(random_rls_problem(6, 9, 2.0, 3), 100, 1e-4);
  check_gradient_consistency(poisoning_problem(5).problem, 25, 1e-4);
}

TEST_CASE("robust least squares") {
  // Zero data: the objective reduces to the squared perturbation norm.
  const auto zero = rls_problem(Eigen::MatrixXd::Zero(2, 3),
                                Eigen::VectorXd::Zero(2), 1.0);
  Eigen::VectorXd delta(2);
  delta << 0.3, -0.4;
  const JointPoint z{Eigen::VectorXd::Zero(3), delta};
  CHECK(zero.evaluate(z) == doctest::Approx(0.25));
  const DualVector g = zero.analytic_gradient(z);
  CHECK(g.x.norm() == 0.0);
  CHECK((g.y + 2.0 * delta).norm() == 0.0);  // y block is -grad_delta

  // Exact fit.
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd y0(2);
  y0 << 1, 0;
  const auto fit = rls_problem(A, y0, 1.0);
  Eigen::VectorXd x(2);
  x << 1, 0;
  CHECK(fit.evaluate(JointPoint{x, Eigen::VectorXd::Zero(2)}) == 0.0);

  // Benchmark-scale instance.
  const auto big = random_rls_problem(150, 250, 5.0, 1);
  CHECK(big.n() == 250);
  CHECK(big.m() == 150);
  CHECK(big.set().blocks()[1].radius() == 5.0);
  REQUIRE(big.metadata().z_star.has_value());
  const DualVector at_star = big.analytic_gradient(*big.metadata().z_star);
  CHECK(weighted_euclidean_norm(at_star) <= 1e-6);

  CHECK_THROWS_AS(rls_problem(A, Eigen::VectorXd::Zero(3), 1.0),
                  DimensionMismatch);
}

TEST_CASE("rls instance round trip") {
  const std::string path = "rls_roundtrip_test.csv";
  RngStream stream = Rng(8).generic_stream(0);
  Eigen::MatrixXd A(3, 4);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) A(i, j) = stream.next_normal();
  }
  Eigen::VectorXd y0(3);
  for (Eigen::Index i = 0; i < 3; ++i) y0[i] = stream.next_normal();
  save_rls_instance(path, A, y0);
  const auto [A2, y2] = load_rls_instance(path);
  CHECK((A - A2).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((y0 - y2).cwiseAbs().maxCoeff() <= 1e-12);
  std::filesystem::remove(path);
}

TEST_CASE("poisoning problem") {
  const auto pp = poisoning_problem(7);
  CHECK(pp.dataset.features.rows() == 500);
  CHECK(pp.dataset.features.cols() == 20);
  CHECK(pp.dataset.poisoned.size() == 75);
  for (Eigen::Index i = 0; i < 500; ++i) {
    const int b = pp.dataset.labels[i];
    CHECK((b == 0 || b == 1));
  }

  // With no perturbation both loss terms see clean features.
  RngStream stream = Rng(9).generic_stream(0);
  Eigen::VectorXd y(20);
  for (Eigen::Index i = 0; i < 20; ++i) y[i] = 0.3 * stream.next_normal();
  const JointPoint z{Eigen::VectorXd::Zero(20), y};

  auto softplus = [](double s) {
    return std::log1p(std::exp(-std::abs(s))) + std::max(s, 0.0);
  };
  double lp = 0, lt = 0;
  long long np = 0, nt = 0;
  for (Eigen::Index i = 0; i < 500; ++i) {
    const double s = pp.dataset.features.row(i).dot(y);
    const double loss =
        pp.dataset.labels[i] == 1 ? softplus(-s) : softplus(s);
    const bool poisoned =
        std::find(pp.dataset.poisoned.begin(), pp.dataset.poisoned.end(), i) !=
        pp.dataset.poisoned.end();
    if (poisoned) {
      lp += loss;
      ++np;
    } else {
      lt += loss;
      ++nt;
    }
  }
  const double expected = -(lp / np + lt / nt + 1e-3 * y.squaredNorm());
  CHECK(pp.problem.evaluate(z) == doctest::Approx(expected).epsilon(1e-12));

  // A plain fit on the unattacked objective predicts better than chance.
  const Eigen::VectorXd clean = pp.fit_clean_model(2000, 0.5);
  CHECK(pp.accuracy(clean) > 0.5);
}

TEST_CASE("poisoning dataset round trip") {
  const std::string path = "poisoning_roundtrip_test.csv";
  const auto pp = poisoning_problem(11);
  save_poisoning_dataset(path, pp.dataset);
  const auto loaded = load_poisoning_dataset(path);
  CHECK(loaded.features.rows() == 500);
  CHECK(loaded.poisoned.size() == 75);

  // Row order differs (perturbed rows are emitted first) but the objective
  // only depends on the subset split, so values agree.
  const auto pp2 = poisoning_problem_from_dataset(loaded);
  RngStream stream = Rng(10).generic_stream(0);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x(20), y(20);
    for (Eigen::Index i = 0; i < 20; ++i) {
      x[i] = stream.next_normal();
      y[i] = 0.2 * stream.next_normal();
    }
    const JointPoint z{x, y};
    CHECK(pp.problem.evaluate(z) ==
          doctest::Approx(pp2.problem.evaluate(z)).epsilon(1e-10));
  }
  std::filesystem::remove(path);
}

TEST_CASE("bicycle model step") {
  const CarState rest{1.0, 2.0, 0.5, 0.0};
  const CarState still = rk4_step(rest, {0, 0}, {0, 0}, 0.4, 2.5);
  CHECK(still.x == rest.x);
  CHECK(still.y == rest.y);
  CHECK(still.heading == rest.heading);
  CHECK(still.speed == rest.speed);

  const CarState rolling{0, 0, 0, 2.0};
  const CarState moved = rk4_step(rolling, {0, 0}, {0, 0}, 0.4, 2.5);
  CHECK(moved.x == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(moved.y == doctest::Approx(0.0));
  CHECK(moved.speed == 2.0);

  // Constant acceleration from rest: x(t) = a t^2 / 2 is integrated exactly.
  const CarState accel = rk4_step({0, 0, 0, 0}, {1, 0}, {1, 0}, 1.0, 2.5);
  CHECK(accel.speed == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(accel.x == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("bicycle step shows fourth-order convergence") {
  const CarState s0{0.2, -0.1, 0.3, 2.0};
  auto input_at = [](double t) {
    return CarInput{0.5 + 0.1 * t, 0.2 + 0.05 * t};
  };
  auto integrate = [&](double total, int steps) {
    CarState s = s0;
    const double dt = total / steps;
    for (int i = 0; i < steps; ++i) {
      s = rk4_step(s, input_at(i * dt), input_at((i + 1) * dt), dt, 2.5);
    }
    return s;
  };
  auto state_err = [](const CarState& a, const CarState& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                     (a.heading - b.heading) * (a.heading - b.heading) +
                     (a.speed - b.speed) * (a.speed - b.speed));
  };
  const double total = 0.4;
  const CarState ref = integrate(total, 100);
  const double err_coarse = state_err(integrate(total, 1), ref);
  const double err_fine = state_err(integrate(total, 2), ref);
  CHECK(err_coarse / err_fine >= 14.0);
}

TEST_CASE("lane merging dimensions and determinism") {
  const LaneMergingSpec spec;
  const auto problem = lane_merging_problem(spec);
  CHECK(problem.n() == 100);
  CHECK(problem.m() == 50);

  const JointPoint zero = JointPoint::Zero(100, 50);
  const double v1 = problem.evaluate(zero);
  const double v2 = problem.evaluate(zero);
  CHECK(std::isfinite(v1));
  CHECK(v1 == v2);

  // Larger separation shrinks the proximity penalty at the first step.
  LaneMergingSpec near = spec;
  near.car1_start = CarState{0.0, 1.0, 0.0, 2.0};
  near.car2_start = CarState{1.0, 0.0, 0.0, 3.0};
  LaneMergingSpec far = near;
  far.car2_start.x = 2.0 * near.car2_start.x;
  const auto near_roll = lane_merging_rollout(near, zero);
  const auto far_roll = lane_merging_rollout(far, zero);
  const double near_prox =
      near_roll.gamma2[0] -
      10.0 * std::pow(near_roll.car2[0].y - near.y_target, 2.0);
  const double far_prox =
      far_roll.gamma2[0] -
      10.0 * std::pow(far_roll.car2[0].y - far.y_target, 2.0);
  CHECK(far_prox < near_prox);
  // Both per-car terms carry the same exponential, with opposite signs.
  const double near_prox_g1 =
      -0.5 * (near_roll.gamma1[0] - 0.5 * std::pow(near_roll.car1[0].speed, 2));
  CHECK(near_prox_g1 == doctest::Approx(near_prox).epsilon(1e-12));
}

TEST_CASE("smoothed operator closed form for the absolute-value objective") {
  const auto ad = abs_diff_problem(1.0);
  const DualVector origin = ad.smoothed_operator(JointPoint::Scalars(0, 0), 0.1);
  CHECK(origin.x[0] == 0.0);
  CHECK(origin.y[0] == 0.0);

  const DualVector far = ad.smoothed_operator(JointPoint::Scalars(1e9, 0), 0.1);
  CHECK(far.x[0] == doctest::Approx(1.0).epsilon(1e-12));

  const double mu = 0.3;
  const DualVector at_mu =
      ad.smoothed_operator(JointPoint::Scalars(mu * 1.0, 0), mu);
  CHECK(at_mu.x[0] == doctest::Approx(0.6826894921370859).epsilon(1e-12));

  CHECK(ad.metric.scalar_b1().value() == doctest::Approx(1.0));
}
