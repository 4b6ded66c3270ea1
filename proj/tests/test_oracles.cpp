#include <doctest.h>

#include <cmath>

#include "zomax/oracles.hpp"
#include "zomax/problems.hpp"

using namespace zomax;

namespace {

OracleConfig base_cfg(double mu = 0.1) {
  OracleConfig cfg = OracleConfig::defaults(1, 1);
  cfg.mu = MuSchedule::constant(mu);
  return cfg;
}

const Objective kConstant = [](const JointPoint&) { return 3.5; };
const Objective kLinearDiff = [](const JointPoint& z) {
  return z.x[0] - z.y[0];
};
const Objective kSquareX = [](const JointPoint& z) { return z.x[0] * z.x[0]; };

RngStream no_noise() { return RngStream(0); }

}  // namespace

TEST_CASE("forward oracle closed forms") {
  auto cfg = base_cfg();
  RngStream nn = no_noise();

  const auto zero = forward_oracle(kConstant, JointPoint::Scalars(0.3, -0.2),
                                   JointPoint::Scalars(1.0, 2.0), cfg, nn);
  CHECK(zero.value.x[0] == 0.0);
  CHECK(zero.value.y[0] == 0.0);
  CHECK(zero.function_evals == 2);

  // Linear objective: the quotient equals the directional derivative.
  const auto est = forward_oracle(kLinearDiff, JointPoint::Scalars(0, 0),
                                  JointPoint::Scalars(1.0, 0.0), cfg, nn);
  CHECK(est.value.x[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(est.value.y[0] == doctest::Approx(0.0));
}

TEST_CASE("backward oracle closed forms") {
  auto cfg = base_cfg(0.5);
  RngStream nn = no_noise();

  const auto zero = backward_oracle(kConstant, JointPoint::Scalars(1, 1),
                                    JointPoint::Scalars(2.0, -1.0), cfg, nn);
  CHECK(zero.value.x[0] == 0.0);

  // Exact on linear objectives, where backward equals forward.
  const auto fwd = forward_oracle(kLinearDiff, JointPoint::Scalars(0.7, 0.1),
                                  JointPoint::Scalars(0.4, -0.3), cfg, nn);
  const auto bwd = backward_oracle(kLinearDiff, JointPoint::Scalars(0.7, 0.1),
                                   JointPoint::Scalars(0.4, -0.3), cfg, nn);
  CHECK(fwd.value.x[0] == doctest::Approx(bwd.value.x[0]).epsilon(1e-9));
  CHECK(fwd.value.y[0] == doctest::Approx(bwd.value.y[0]).epsilon(1e-9));

  const auto est = backward_oracle(kSquareX, JointPoint::Scalars(1.0, 0.0),
                                   JointPoint::Scalars(1.0, 0.0), cfg, nn);
  CHECK(est.value.x[0] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("central oracle is exact on quadratics along the line") {
  auto cfg = base_cfg(0.5);
  RngStream nn = no_noise();
  const auto zero = central_oracle(kConstant, JointPoint::Scalars(0, 0),
                                   JointPoint::Scalars(1, 1), cfg, nn);
  CHECK(zero.value.x[0] == 0.0);

  const auto est = central_oracle(kSquareX, JointPoint::Scalars(1.0, 0.0),
                                  JointPoint::Scalars(1.0, 0.0), cfg, nn);
  CHECK(est.value.x[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(est.function_evals == 2);
}

TEST_CASE("y block carries a negative sign") {
  auto cfg = base_cfg();
  RngStream nn = no_noise();
  const Objective f = [](const JointPoint& z) { return z.x[0] + z.y[0]; };
  const auto est = forward_oracle(f, JointPoint::Scalars(0, 0),
                                  JointPoint::Scalars(0.0, 1.0), cfg, nn);
  CHECK(est.value.y[0] == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("noise makes central four times less variable than forward") {
  auto cfg = base_cfg(0.1);
  cfg.noise = NoiseModel::additive_gaussian(0.01);
  const JointPoint z = JointPoint::Scalars(0, 0);
  const JointPoint u = JointPoint::Scalars(1.0, 0.0);
  const Rng rng(4242);

  const long long trials = 100000;
  double var_f = 0, var_c = 0;
  for (long long i = 0; i < trials; ++i) {
    RngStream nf = rng.noise_stream(i, 0, 0);
    RngStream nc = rng.noise_stream(i, 1, 0);
    const double vf = forward_oracle(kConstant, z, u, cfg, nf).value.x[0];
    const double vc = central_oracle(kConstant, z, u, cfg, nc).value.x[0];
    var_f += vf * vf;
    var_c += vc * vc;
  }
  var_f /= trials;
  var_c /= trials;
  const double ratio = var_c / var_f;
  CHECK(ratio < 0.25 * 1.5);
  CHECK(ratio > 0.25 / 1.5);
}

TEST_CASE("averaged oracle with one sample equals the single oracle") {
  auto cfg = base_cfg();
  const Rng rng(7);
  const JointPoint z = JointPoint::Scalars(0.2, -0.4);

  const auto avg = averaged_oracle(kLinearDiff, z, cfg, rng, /*k=*/3, /*call=*/1);
  RngStream dir = rng.stream(3, 1, 0);
  const JointPoint u = cfg.metric.sample(dir);
  RngStream nn = no_noise();
  const auto single = forward_oracle(kLinearDiff, z, u, cfg, nn);
  CHECK(avg.value.x[0] == single.value.x[0]);
  CHECK(avg.value.y[0] == single.value.y[0]);
  CHECK(avg.samples_used == 1);
}

TEST_CASE("averaged oracle on a constant objective is zero for any t") {
  auto cfg = base_cfg();
  cfg.samples_per_call = SampleSchedule::constant(17);
  const auto est =
      averaged_oracle(kConstant, JointPoint::Scalars(1, 1), cfg, Rng(5));
  CHECK(est.value.x[0] == 0.0);
  CHECK(est.value.y[0] == 0.0);
  CHECK(est.samples_used == 17);
}

TEST_CASE("averaging divides the variance by the sample count") {
  const JointPoint z = JointPoint::Scalars(0.5, 0.5);
  auto cfg1 = base_cfg();
  auto cfg100 = base_cfg();
  cfg100.samples_per_call = SampleSchedule::constant(100);

  const long long reps = 10000;
  const double v1 = estimate_oracle_variance(kLinearDiff, z, cfg1, reps, Rng(31));
  const double v100 =
      estimate_oracle_variance(kLinearDiff, z, cfg100, reps, Rng(32));
  const double ratio = v100 / v1;
  CHECK(ratio > 0.01 / 1.3);
  CHECK(ratio < 0.01 * 1.3);
}

TEST_CASE("function evaluation accounting") {
  CHECK(evals_per_call(SmoothingScheme::Forward, 1, true) == 2);
  CHECK(evals_per_call(SmoothingScheme::Forward, 5, true) == 6);
  CHECK(evals_per_call(SmoothingScheme::Forward, 5, false) == 10);
  CHECK(evals_per_call(SmoothingScheme::Backward, 3, true) == 4);
  CHECK(evals_per_call(SmoothingScheme::Central, 5, true) == 10);
  CHECK(evals_per_call(SmoothingScheme::Central, 5, false) == 10);

  auto cached = base_cfg();
  cached.samples_per_call = SampleSchedule::constant(5);
  CHECK(averaged_oracle(kLinearDiff, JointPoint::Scalars(0, 0), cached, Rng(1))
            .function_evals == 6);

  auto noisy = cached;
  noisy.noise = NoiseModel::additive_gaussian(0.1);
  CHECK(averaged_oracle(kLinearDiff, JointPoint::Scalars(0, 0), noisy, Rng(1))
            .function_evals == 10);

  auto central = cached;
  central.scheme = SmoothingScheme::Central;
  CHECK(averaged_oracle(kLinearDiff, JointPoint::Scalars(0, 0), central, Rng(1))
            .function_evals == 10);
}

TEST_CASE("identical seed and config give a bit-identical estimate stream") {
  auto cfg = base_cfg();
  cfg.samples_per_call = SampleSchedule::constant(4);
  cfg.noise = NoiseModel::additive_gaussian(0.05);
  const JointPoint z = JointPoint::Scalars(0.3, 0.9);
  for (long long k = 0; k < 5; ++k) {
    const auto a = averaged_oracle(kLinearDiff, z, cfg, Rng(777), k, 0);
    const auto b = averaged_oracle(kLinearDiff, z, cfg, Rng(777), k, 0);
    CHECK(a.value.x[0] == b.value.x[0]);
    CHECK(a.value.y[0] == b.value.y[0]);
    CHECK(a.function_evals == b.function_evals);
  }
}

TEST_CASE("evaluation failure carries the probed point") {
  auto cfg = base_cfg(0.5);
  RngStream nn = no_noise();
  const Objective bad = [](const JointPoint& z) {
    return z.x[0] > 0.6 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  };
  const JointPoint z = JointPoint::Scalars(0.2, 0.0);
  const JointPoint u = JointPoint::Scalars(1.0, 0.0);
  try {
    forward_oracle(bad, z, u, cfg, nn);
    FAIL("expected an evaluation error");
  } catch (const EvaluationError& err) {
    CHECK(err.at.x[0] == doctest::Approx(0.7));
  }
}

TEST_CASE("smoothing parameter and sample schedules") {
  const auto mu = MuSchedule::harmonic(0.5);
  CHECK(mu.value(0) == doctest::Approx(0.5));
  CHECK(mu.value(4) == doctest::Approx(0.1));
  const auto ts = SampleSchedule::k_plus_one();
  CHECK(ts.value(0) == 1);
  CHECK(ts.value(9) == 10);
  CHECK_THROWS_AS(MuSchedule::constant(0.0), std::invalid_argument);
  CHECK_THROWS_AS(SampleSchedule::constant(0), std::invalid_argument);
}

TEST_CASE("smoothed value estimate") {
  const auto metric = MetricMatrix::identity(1, 1);
  RngStream stream = Rng(9).generic_stream(0);

  // Exact on affine objectives.
  const auto lin = estimate_f_mu(kLinearDiff, JointPoint::Scalars(2.0, 0.5),
                                 0.3, 200000, metric, stream);
  CHECK(std::abs(lin.mean - 1.5) <= 3.0 * lin.std_error);

  // Squared norm gains mu^2 * d: at the origin with mu = 1 the smoothed
  // value is the dimension.
  const Objective sqn = [](const JointPoint& z) {
    return z.x.squaredNorm() + z.y.squaredNorm();
  };
  const auto sq = estimate_f_mu(sqn, JointPoint::Zero(1, 1), 1.0, 1000000,
                                metric, stream);
  CHECK(std::abs(sq.mean - 2.0) <= 3.0 * sq.std_error);

  // Smoothing gap bound for a quadratic with known curvature.
  const Objective quad = [](const JointPoint& z) {
    return 2.0 * z.x.squaredNorm() + 1.5 * z.y.squaredNorm();
  };
  const double L1 = 4.0;
  const JointPoint at = JointPoint::Scalars(0.7, -0.3);
  const double f_at = quad(at);
  const double mu = 0.2;
  const auto est = estimate_f_mu(quad, at, mu, 200000, metric, stream);
  CHECK(std::abs(est.mean - f_at) <=
        mu * mu / 2.0 * L1 * 2.0 + 3.0 * est.std_error);

  CHECK_THROWS_AS(estimate_f_mu(kLinearDiff, JointPoint::Scalars(0, 0), 0.1, 1,
                                metric, stream),
                  std::invalid_argument);
}

TEST_CASE("smoothed operator estimate") {
  const auto metric = MetricMatrix::identity(1, 1);
  RngStream stream = Rng(10).generic_stream(0);

  const auto zero = estimate_F_mu(kConstant, JointPoint::Scalars(1, 2), 0.1,
                                  1000, metric, stream);
  CHECK(zero.mean.x[0] == 0.0);
  CHECK(zero.mean.y[0] == 0.0);
  CHECK(zero.std_error == 0.0);

  // Folded-normal closed form for |x| - |y|.
  const auto ad = abs_diff_problem(1.0);
  const Objective f = [&ad](const JointPoint& p) { return ad.problem.evaluate(p); };
  const JointPoint z = JointPoint::Scalars(0.5, -0.5);
  const double mu = 0.1;
  const auto est = estimate_F_mu(f, z, mu, 200000, ad.metric, stream);
  const DualVector exact = ad.smoothed_operator(z, mu);
  CHECK(std::abs(est.mean.x[0] - exact.x[0]) <= 4.0 * est.std_error);
  CHECK(std::abs(est.mean.y[0] - exact.y[0]) <= 4.0 * est.std_error);

  // Operator gap bound for a smooth quadratic: mu/2 L1 (d+3)^{3/2}.
  const Objective quad = [](const JointPoint& z) {
    return 2.0 * z.x.squaredNorm() + 1.5 * z.y.squaredNorm();
  };
  const GradientOperator F = [](const JointPoint& z) {
    return DualVector{4.0 * z.x, -3.0 * z.y};
  };
  const JointPoint at = JointPoint::Scalars(0.4, 0.8);
  const auto op = estimate_F_mu(quad, at, 0.05, 200000, metric, stream);
  const double gap = dual_norm(op.mean - F(at), metric);
  CHECK(gap <= 0.05 / 2.0 * 4.0 * std::pow(5.0, 1.5) + 3.0 * op.std_error);
}

TEST_CASE("oracle variance estimate") {
  const auto metric = MetricMatrix::identity(1, 1);

  auto cfg = base_cfg();
  CHECK(estimate_oracle_variance(kConstant, JointPoint::Scalars(0, 0), cfg, 100,
                                 Rng(3)) == 0.0);

  // Lipschitz bound L0^2 (d+4)^2 with d = 2.
  const auto ad = abs_diff_problem(1.0);
  const Objective f = [&ad](const JointPoint& p) { return ad.problem.evaluate(p); };
  auto cfg_ad = base_cfg(0.05);
  const double var = estimate_oracle_variance(f, JointPoint::Scalars(0.3, -0.7),
                                              cfg_ad, 20000, Rng(12));
  const double bound = 2.0 * 36.0;  // L0^2 (d+4)^2, L0 = sqrt(2)
  CHECK(var <= bound);
  CHECK(var > 0.0);
  (void)metric;
}

TEST_CASE("every scheme is unbiased for the smoothed operator") {
  const auto metric = MetricMatrix::identity(1, 1);
  const std::vector<Objective> objectives = {
      kLinearDiff,
      [](const JointPoint& z) { return z.x[0] * z.y[0]; },
      [](const JointPoint& z) { return 2 * z.x[0] * z.x[0] - z.y[0] * z.y[0]; },
      [](const JointPoint& z) { return std::abs(z.x[0]) - std::abs(z.y[0]); },
      [](const JointPoint& z) {
        return std::log(1 + std::exp(z.x[0])) + 3 * z.x[0] * z.y[0] -
               std::log(1 + std::exp(z.y[0]));
      },
  };
  const JointPoint z = JointPoint::Scalars(0.35, -0.6);
  const double mu = 0.15;

  int obj_idx = 0;
  for (const Objective& f : objectives) {
    RngStream ref_stream = Rng(1000 + obj_idx).generic_stream(0);
    const auto ref = estimate_F_mu(f, z, mu, 1000000, metric, ref_stream);

    for (const SmoothingScheme scheme :
         {SmoothingScheme::Forward, SmoothingScheme::Backward,
          SmoothingScheme::Central}) {
      OracleConfig cfg = OracleConfig::defaults(1, 1);
      cfg.mu = MuSchedule::constant(mu);
      cfg.scheme = scheme;
      const Rng rng(77 + obj_idx);
      const long long M = 100000;
      DualVector sum = DualVector::Zero(1, 1);
      std::vector<DualVector> draws;
      draws.reserve(M);
      for (long long i = 0; i < M; ++i) {
        const auto est = averaged_oracle(f, z, cfg, rng, i,
                                         static_cast<long long>(scheme));
        draws.push_back(est.value);
        sum += est.value;
      }
      const DualVector mean = (1.0 / M) * sum;
      double dev = 0;
      for (const auto& g : draws) {
        const double nd = dual_norm(g - mean, metric);
        dev += nd * nd;
      }
      const double se = std::sqrt(dev / (static_cast<double>(M) * (M - 1)));
      const double gap = dual_norm(mean - ref.mean, metric);
      CHECK(gap <= 4.0 * (se + ref.std_error));
    }
    ++obj_idx;
  }
}
