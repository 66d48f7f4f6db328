#include <cmath>
#include <random>
#include <vector>

#include "advbilevel/errors.hpp"
#include "advbilevel/generator.hpp"
#include "doctest.h"
#include "fd_oracle.hpp"

using namespace advbilevel;

namespace {

struct Sample {
  double v, alpha, beta;
};

// Half the points sit in the unsaturated band |alpha (v - beta)| <= 3, the
// rest have beta anywhere in [0, 1]; |alpha| ranges over 0.1 .. 1000.
std::vector<Sample> random_points(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Sample> out;
  for (int i = 0; i < count; ++i) {
    const double v = 0.01 + 0.98 * u(rng);
    const double alpha = (u(rng) < 0.5 ? -1.0 : 1.0) * std::pow(10.0, -1.0 + 4.0 * u(rng));
    const double beta = i % 2 == 0 ? v + (6.0 * u(rng) - 3.0) / std::abs(alpha) : u(rng);
    out.push_back({v, alpha, beta});
  }
  return out;
}

double rel_err(double analytic, double reference) {
  return fd::max_rel_error(fd::Matrix::Constant(1, 1, analytic), fd::Matrix::Constant(1, 1, reference));
}

}  // namespace

TEST_CASE("step inverse CDF branches") {
  CHECK(step_inverse_cdf(0.3, 0.5) == 0.0);
  CHECK(step_inverse_cdf(0.5, 0.5) == 0.0);
  CHECK(step_inverse_cdf(0.7, 0.5) == 1.0);
}

TEST_CASE("smooth step closed-form values") {
  CHECK(smooth_step(0.5, 100.0, 0.5) == 0.5);
  for (const double v : {0.0, 0.2, 0.9}) {
    CHECK(smooth_step(v, 0.0, 0.3) == 0.5);
    CHECK(smooth_step(v, 0.0, -4.0) == 0.5);
  }
  CHECK(smooth_step(0.7, 100.0, 0.5) == doctest::Approx((std::tanh(20.0) + 1.0) / 2.0).epsilon(1e-15));
  CHECK(smooth_step(0.6, 3.0, 0.5) == doctest::Approx((std::tanh(0.3) + 1.0) / 2.0).epsilon(1e-14));
}

TEST_CASE("smooth step stays strictly inside (0,1) and never produces NaN") {
  for (const double x : {-1e6, -800.0, -40.0, 0.0, 40.0, 800.0, 1e6}) {
    const double t = smooth_step(0.5, x, 0.0);
    CHECK(t > 0.0);
    CHECK(t < 1.0);
    const SmoothStepDerivs d = smooth_step_derivs(0.5, x, 0.0);
    CHECK(std::isfinite(d.d_alpha));
    CHECK(std::isfinite(d.d_beta));
    CHECK(std::isfinite(d.d2_alpha2));
    CHECK(std::isfinite(d.d2_beta2));
    CHECK(std::isfinite(d.d2_alpha_beta));
  }
  const SmoothStepDerivs far = smooth_step_derivs(0.9, 1e4, 0.1);
  CHECK(far.d_alpha == 0.0);
  CHECK(far.d_beta == 0.0);
}

TEST_CASE("smooth step approaches the exact step away from the threshold") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double beta = u(rng);
    double v = u(rng);
    if (std::abs(v - beta) < 0.01) v = beta + (v < beta ? -0.01 : 0.01);
    if (v < 0.0 || v > 1.0) continue;
    CHECK(std::abs(smooth_step(v, 1e6, beta) - step_inverse_cdf(v, beta)) <= 1e-9);
  }
}

TEST_CASE("first partials at the threshold") {
  const SmoothStepDerivs d = smooth_step_derivs(0.5, 100.0, 0.5);
  CHECK(d.d_alpha == 0.0);
  // -alpha sech^2(0) / 2, confirmed by differencing smooth_step below.
  CHECK(d.d_beta == doctest::Approx(-50.0).epsilon(1e-15));
  const double h = 1e-6;
  const double fd_beta = (smooth_step(0.5, 100.0, 0.5 + h) - smooth_step(0.5, 100.0, 0.5 - h)) / (2 * h);
  CHECK(rel_err(d.d_beta, fd_beta) <= 1e-5);
}

TEST_CASE("all five partials agree with central differences at 100 random points") {
  const double h = 1e-6;
  for (const Sample& s : random_points(100, 17)) {
    CAPTURE(s.v);
    CAPTURE(s.alpha);
    CAPTURE(s.beta);
    const SmoothStepDerivs d = smooth_step_derivs(s.v, s.alpha, s.beta);
    const double fa = (smooth_step(s.v, s.alpha + h, s.beta) - smooth_step(s.v, s.alpha - h, s.beta)) / (2 * h);
    const double fb = (smooth_step(s.v, s.alpha, s.beta + h) - smooth_step(s.v, s.alpha, s.beta - h)) / (2 * h);
    CHECK(rel_err(d.d_alpha, fa) <= 1e-5);
    CHECK(rel_err(d.d_beta, fb) <= 1e-5);

    // Second partials: differences of the first partials just validated.
    const auto da = [&](double a, double b) { return smooth_step_derivs(s.v, a, b).d_alpha; };
    const auto db = [&](double a, double b) { return smooth_step_derivs(s.v, a, b).d_beta; };
    const double faa = (da(s.alpha + h, s.beta) - da(s.alpha - h, s.beta)) / (2 * h);
    const double fbb = (db(s.alpha, s.beta + h) - db(s.alpha, s.beta - h)) / (2 * h);
    const double fab = (da(s.alpha, s.beta + h) - da(s.alpha, s.beta - h)) / (2 * h);
    const double fba = (db(s.alpha + h, s.beta) - db(s.alpha - h, s.beta)) / (2 * h);
    CHECK(rel_err(d.d2_alpha2, faa) <= 1e-5);
    CHECK(rel_err(d.d2_beta2, fbb) <= 1e-5);
    CHECK(rel_err(d.d2_alpha_beta, fab) <= 1e-5);
    CHECK(rel_err(d.d2_alpha_beta, fba) <= 1e-5);
  }
}

TEST_CASE("second partials agree with second differences of smooth_step for moderate slopes") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = 1e-4;
  for (int i = 0; i < 50; ++i) {
    const double v = u(rng);
    const double alpha = 10.0 * u(rng) - 5.0;
    const double beta = u(rng);
    const auto t = [&](double a, double b) { return smooth_step(v, a, b); };
    const SmoothStepDerivs d = smooth_step_derivs(v, alpha, beta);
    const double faa = (t(alpha + h, beta) - 2 * t(alpha, beta) + t(alpha - h, beta)) / (h * h);
    const double fbb = (t(alpha, beta + h) - 2 * t(alpha, beta) + t(alpha, beta - h)) / (h * h);
    const double fab = (t(alpha + h, beta + h) - t(alpha + h, beta - h) - t(alpha - h, beta + h) +
                        t(alpha - h, beta - h)) / (4 * h * h);
    CHECK(std::abs(d.d2_alpha2 - faa) <= 1e-5 * std::max(1.0, std::abs(faa)));
    CHECK(std::abs(d.d2_beta2 - fbb) <= 1e-5 * std::max(1.0, std::abs(fbb)));
    CHECK(std::abs(d.d2_alpha_beta - fab) <= 1e-5 * std::max(1.0, std::abs(fab)));
  }
}

TEST_CASE("generate_row") {
  const GeneratorParams p(Vector::Constant(2, 100.0), Vector::Constant(2, 0.5));
  const Vector row = generate_row(Vector::Constant(2, 0.5), p);
  CHECK(row(0) == 0.5);
  CHECK(row(1) == 0.5);

  const GeneratorParams steep(Vector::Constant(1, 1000.0), Vector::Constant(1, 0.1));
  CHECK(std::abs(generate_row(Vector::Constant(1, 0.9), steep)(0) - 1.0) <= 1e-12);

  CHECK_THROWS_AS(generate_row(Vector::Constant(3, 0.5), p), DimensionError);
}

TEST_CASE("reflected parameters generate the same row") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index q = 1 + static_cast<Eigen::Index>(rng() % 6);
    Vector z(q), alpha(q), beta(q);
    for (Eigen::Index j = 0; j < q; ++j) {
      z(j) = 0.001 + 0.998 * u(rng);
      alpha(j) = 2000.0 * u(rng) - 1000.0;
      beta(j) = 2.0 * u(rng) - 0.5;
    }
    const Vector a = generate_row(z, GeneratorParams(alpha, beta));
    const Vector b = generate_row(z, GeneratorParams(-alpha, 2.0 * z - beta));
    for (Eigen::Index j = 0; j < q; ++j) {
      // Only the rounding of 2z - beta separates the two arguments.
      CHECK(std::abs(a(j) - b(j)) <= 4e-16 * (1.0 + std::abs(alpha(j))));
    }
  }
}

TEST_CASE("generate_matrix matches row-by-row evaluation") {
  SUBCASE("empty") {
    const GeneratorParams p(Vector::Ones(3), Vector::Zero(3));
    const Matrix g = generate_matrix(NoiseMatrix(Matrix(0, 3)), p);
    CHECK(g.rows() == 0);
    CHECK(g.cols() == 3);
  }
  SUBCASE("mixed signs") {
    Matrix zv(3, 2);
    zv << 0.1, 0.8, 0.45, 0.55, 0.9, 0.2;
    const NoiseMatrix z(zv);
    Vector alpha(2), beta(2);
    alpha << 30.0, -12.0;
    beta << 0.4, 0.6;
    const GeneratorParams p(alpha, beta);
    for (const Exec exec : {Exec::serial, Exec::parallel}) {
      const Matrix g = generate_matrix(z, p, exec);
      for (Eigen::Index k = 0; k < 3; ++k) {
        const Vector row = generate_row(Vector(zv.row(k).transpose()), p);
        CHECK(g.row(k).transpose() == row);
      }
    }
  }
  SUBCASE("single row") {
    const NoiseMatrix z(Matrix::Constant(1, 2, 0.3));
    const GeneratorParams p(Vector::Constant(2, 7.0), Vector::Constant(2, 0.2));
    CHECK(generate_matrix(z, p).row(0).transpose() == generate_row(Vector::Constant(2, 0.3), p));
  }
  CHECK_THROWS_AS(generate_matrix(NoiseMatrix(Matrix::Constant(2, 3, 0.5)),
                                  GeneratorParams(Vector::Ones(2), Vector::Zero(2))),
                  DimensionError);
}

TEST_CASE("generator parameter and noise invariants") {
  CHECK_THROWS_AS(GeneratorParams(Vector::Ones(2), Vector::Ones(3)), DimensionError);
  CHECK_THROWS_AS(GeneratorParams(Vector(), Vector()), DimensionError);
  CHECK_THROWS(GeneratorParams(Vector::Constant(1, NAN), Vector::Ones(1)));

  Vector alpha(2), beta(2);
  alpha << 1.0, 2.0;
  beta << 3.0, 4.0;
  const GeneratorParams p(alpha, beta);
  Vector stacked(4);
  stacked << 1.0, 2.0, 3.0, 4.0;
  CHECK(p.stacked() == stacked);
  CHECK(GeneratorParams::from_stacked(stacked).beta == beta);

  CHECK_THROWS_AS(NoiseMatrix(Matrix::Constant(1, 1, 0.0)), DataError);
  CHECK_THROWS_AS(NoiseMatrix(Matrix::Constant(1, 1, 1.0)), DataError);

  const NoiseMatrix a = NoiseMatrix::draw(20, 7, 42);
  const NoiseMatrix b = NoiseMatrix::draw(20, 7, 42);
  CHECK(a.values() == b.values());
  CHECK(a.values().minCoeff() > 0.0);
  CHECK(a.values().maxCoeff() < 1.0);
  CHECK(NoiseMatrix::draw(20, 7, 43).values() != a.values());
}
