#include <cmath>
#include <random>

#include "advbilevel/errors.hpp"
#include "advbilevel/stationarity.hpp"
#include "doctest.h"
#include "fd_oracle.hpp"
#include "instances.hpp"

using namespace advbilevel;
using testing_support::Instance;
using testing_support::random_instance;

namespace {

Vector concat(std::initializer_list<Vector> parts) {
  Eigen::Index n = 0;
  for (const Vector& p : parts) n += p.size();
  Vector out(n);
  Eigen::Index at = 0;
  for (const Vector& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

}  // namespace

TEST_CASE("point packing round trip") {
  Vector alpha(2), beta(2), w(2);
  alpha << 1, 2;
  beta << 3, 4;
  w << 5, 6;
  const BilevelPoint pt{w, GeneratorParams(alpha, beta), 0.5};
  Vector expected(7);
  expected << 5, 6, 1, 2, 3, 4, 0.5;
  CHECK(pt.pack() == expected);
  const BilevelPoint back = BilevelPoint::unpack(expected);
  CHECK(back.w == w);
  CHECK(back.theta.beta == beta);
  CHECK(back.zeta == 0.5);
  CHECK_THROWS_AS(BilevelPoint::unpack(Vector::Zero(6)), DimensionError);
}

TEST_CASE("residual equals the concatenated gradients") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const Instance in = random_instance(rng);
    const ProblemData& p = in.problem;
    const Gradients up = upper_gradients(in.w, in.theta, p);
    const Gradients lo = lower_gradients(in.w, in.theta, p);
    const double z2 = in.zeta * in.zeta;
    const Vector expected = concat({up.w, Vector(up.theta - z2 * lo.theta), lo.theta});
    const Vector r = assemble_residual(in.packed(), p);
    CHECK(r.size() == 5 * p.q());
    CHECK((r - expected).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, expected.cwiseAbs().maxCoeff()));

    // Dependence on zeta only through zeta^2.
    BilevelPoint flipped = BilevelPoint::unpack(in.packed());
    flipped.zeta = -flipped.zeta;
    CHECK(assemble_residual(flipped.pack(), p) == r);
    const Matrix j = assemble_jacobian(in.packed(), p);
    const Matrix jf = assemble_jacobian(flipped.pack(), p);
    CHECK(jf.leftCols(3 * p.q()) == j.leftCols(3 * p.q()));
    CHECK(jf.col(3 * p.q()) == -j.col(3 * p.q()));

    // The middle block is linear in zeta^2.
    BilevelPoint zero = BilevelPoint::unpack(in.packed());
    zero.zeta = 0.0;
    const Vector r0 = assemble_residual(zero.pack(), p);
    const Eigen::Index q = p.q();
    CHECK(r0.segment(q, 2 * q) == up.theta);
    const Vector diff = r.segment(q, 2 * q) - r0.segment(q, 2 * q);
    CHECK((diff + z2 * lo.theta).cwiseAbs().maxCoeff() <=
          1e-13 * std::max(1.0, up.theta.cwiseAbs().maxCoeff()));
    CHECK(assemble_jacobian(zero.pack(), p).col(3 * q).isZero(0.0));
  }
}

TEST_CASE("zero weights and no regularization leave only the data gradient") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    Instance in = random_instance(rng);
    const ProblemData p(in.problem.data, in.problem.z, in.problem.gamma, 0.0);
    in.w.setZero();
    const Vector r = assemble_residual(in.packed(), p);
    const Eigen::Index q = p.q();
    CHECK(r.tail(4 * q).isZero(0.0));
    CHECK(r.head(q) == upper_gradients(in.w, in.theta, p).w);
  }
}

TEST_CASE("last Jacobian column is zero outside the middle block") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const Instance in = random_instance(rng);
    const ProblemData& p = in.problem;
    const Eigen::Index q = p.q();
    const StationaritySystem s = assemble(in.packed(), p);
    CHECK(s.jacobian.rows() == 5 * q);
    CHECK(s.jacobian.cols() == 3 * q + 1);
    CHECK(s.lambda_equiv == in.zeta * in.zeta);
    const Vector last = s.jacobian.col(3 * q);
    CHECK(last.head(q).isZero(0.0));
    CHECK(last.tail(2 * q).isZero(0.0));
    const Vector expected = -2.0 * in.zeta * lower_gradients(in.w, in.theta, p).theta;
    CHECK((last.segment(q, 2 * q) - expected).cwiseAbs().maxCoeff() <=
          1e-14 * std::max(1.0, expected.cwiseAbs().maxCoeff()));
    CHECK(s.residual == assemble_residual(in.packed(), p));
  }
}

TEST_CASE("q = 1 Jacobian equals the explicitly composed blocks") {
  Matrix X(1, 1);
  X << 1;
  Vector y(1);
  y << 0;
  Matrix zv(1, 1);
  zv << 0.4;
  const ProblemData p(BowDataset(X, y), NoiseMatrix(zv), Vector::Ones(1), 0.05);
  Vector alpha(1), beta(1), w(1);
  alpha << 6.0;
  beta << 0.3;
  w << 1.2;
  const double zeta = 0.8;
  const GeneratorParams theta(alpha, beta);
  const Hessians hu = upper_hessians(w, theta, p);
  const Hessians hl = lower_hessians(w, theta, p);
  const Vector gl = lower_gradients(w, theta, p).theta;
  const double z2 = zeta * zeta;

  Matrix expected = Matrix::Zero(5, 4);
  expected(0, 0) = hu.ww(0, 0);
  expected.block(0, 1, 1, 2) = hu.w_theta;
  expected.block(1, 0, 2, 1) = (hu.w_theta - z2 * hl.w_theta).transpose();
  expected.block(1, 1, 2, 2) = hu.theta_theta - z2 * hl.theta_theta;
  expected.block(1, 3, 2, 1) = -2.0 * zeta * gl;
  expected.block(3, 0, 2, 1) = hl.w_theta.transpose();
  expected.block(3, 1, 2, 2) = hl.theta_theta;

  const Matrix j = assemble_jacobian(BilevelPoint{w, theta, zeta}.pack(), p);
  CHECK((j - expected).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, expected.cwiseAbs().maxCoeff()));
}

TEST_CASE("Jacobian agrees with central differences of the residual") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    const Instance in = random_instance(rng);
    const ProblemData& p = in.problem;
    const Vector x = in.packed();
    const Matrix analytic = assemble_jacobian(x, p);
    const Matrix oracle =
        fd::jacobian([&](const Vector& v) { return assemble_residual(v, p); }, x, 1e-6);
    CAPTURE(trial);
    CHECK(fd::max_rel_error(analytic, oracle) <= 1e-5);
    // The library's own difference helper must agree with the oracle.
    const Matrix lib = finite_difference_jacobian(x, p, 1e-6);
    CHECK((lib - oracle).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, oracle.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("finite-difference error falls quadratically with the step") {
  std::mt19937_64 rng(45);
  testing_support::InstanceShape shape;
  shape.max_alpha = 5.0;
  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Instance in = random_instance(rng, shape);
    const Vector x = in.packed();
    const Matrix analytic = assemble_jacobian(x, in.problem);
    const double e1 = (finite_difference_jacobian(x, in.problem, 1e-2) - analytic).cwiseAbs().maxCoeff();
    const double e2 = (finite_difference_jacobian(x, in.problem, 5e-3) - analytic).cwiseAbs().maxCoeff();
    if (e1 < 1e-9) continue;  // nearly linear point: nothing to resolve
    ++checked;
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
  }
  CHECK(checked > 0);
  CHECK_THROWS_AS(finite_difference_jacobian(Vector::Zero(4), ProblemData(), 0.0), ConfigError);
}

TEST_CASE("BilevelSystem forwards to the assemblers") {
  std::mt19937_64 rng(46);
  const Instance in = random_instance(rng);
  const BilevelSystem sys(in.problem);
  CHECK(sys.num_variables() == 3 * in.problem.q() + 1);
  CHECK(sys.num_residuals() == 5 * in.problem.q());
  Vector r;
  Matrix j;
  sys.linearize(in.packed(), r, j);
  CHECK(r == assemble_residual(in.packed(), in.problem));
  CHECK(j == assemble_jacobian(in.packed(), in.problem));
  CHECK(sys.residual(in.packed()) == r);
  CHECK_THROWS_AS(sys.residual(Vector::Zero(2)), DimensionError);
}
