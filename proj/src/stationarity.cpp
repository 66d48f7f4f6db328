#include "advbilevel/stationarity.hpp"

#include "advbilevel/errors.hpp"

namespace advbilevel {

namespace {

Eigen::Index q_of(const Vector& x) {
  if (x.size() < 4 || (x.size() - 1) % 3 != 0) {
    throw DimensionError("stationarity unknowns must have length 3q + 1");
  }
  return (x.size() - 1) / 3;
}

Vector residual_from(const LevelGradients& g, double zeta) {
  const Eigen::Index q = g.upper.w.size();
  Vector phi(5 * q);
  phi.head(q) = g.upper.w;
  phi.segment(q, 2 * q) = g.upper.theta - (zeta * zeta) * g.lower.theta;
  phi.tail(2 * q) = g.lower.theta;
  return phi;
}

Matrix jacobian_from(const LevelDerivatives& d, double zeta) {
  const Eigen::Index q = d.upper.w.size();
  const double lambda = zeta * zeta;
  Matrix jac = Matrix::Zero(5 * q, 3 * q + 1);
  jac.block(0, 0, q, q) = d.upper_hess.ww;
  jac.block(0, q, q, 2 * q) = d.upper_hess.w_theta;
  jac.block(q, 0, 2 * q, q) =
      d.upper_hess.w_theta.transpose() - lambda * d.lower_hess.w_theta.transpose();
  jac.block(q, q, 2 * q, 2 * q) = d.upper_hess.theta_theta - lambda * d.lower_hess.theta_theta;
  jac.block(q, 3 * q, 2 * q, 1) = (-2.0 * zeta) * d.lower.theta;
  jac.block(3 * q, 0, 2 * q, q) = d.lower_hess.w_theta.transpose();
  jac.block(3 * q, q, 2 * q, 2 * q) = d.lower_hess.theta_theta;
  return jac;
}

void check_problem(const Vector& x, const ProblemData& p) {
  if (q_of(x) != p.q()) throw DimensionError("stationarity unknowns do not match problem q");
}

}  // namespace

Vector BilevelPoint::pack() const {
  const Eigen::Index q = w.size();
  if (theta.q() != q) throw DimensionError("weights and generator parameters differ in q");
  Vector x(3 * q + 1);
  x << w, theta.alpha, theta.beta, zeta;
  return x;
}

BilevelPoint BilevelPoint::unpack(const Vector& x) {
  const Eigen::Index q = q_of(x);
  return {x.head(q), GeneratorParams(x.segment(q, q), x.segment(2 * q, q)), x(3 * q)};
}

Vector assemble_residual(const Vector& x, const ProblemData& p, Exec exec) {
  check_problem(x, p);
  const BilevelPoint pt = BilevelPoint::unpack(x);
  return residual_from(level_gradients(pt.w, pt.theta, p, exec), pt.zeta);
}

Matrix assemble_jacobian(const Vector& x, const ProblemData& p, Exec exec) {
  check_problem(x, p);
  const BilevelPoint pt = BilevelPoint::unpack(x);
  return jacobian_from(level_derivatives(pt.w, pt.theta, p, exec), pt.zeta);
}

StationaritySystem assemble(const Vector& x, const ProblemData& p, Exec exec) {
  check_problem(x, p);
  const BilevelPoint pt = BilevelPoint::unpack(x);
  const LevelDerivatives d = level_derivatives(pt.w, pt.theta, p, exec);
  return {residual_from({d.upper, d.lower}, pt.zeta), jacobian_from(d, pt.zeta),
          pt.zeta * pt.zeta};
}

Matrix finite_difference_jacobian(const Vector& x, const ProblemData& p, double step, Exec exec) {
  if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
  check_problem(x, p);
  Matrix jac(5 * p.q(), x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + step;
    const Vector up = assemble_residual(xp, p, exec);
    xp(i) = x(i) - step;
    const Vector down = assemble_residual(xp, p, exec);
    xp(i) = x(i);
    jac.col(i) = (up - down) / (2.0 * step);
  }
  return jac;
}

Vector BilevelSystem::residual(const Vector& x) const { return assemble_residual(x, problem_, exec_); }

void BilevelSystem::linearize(const Vector& x, Vector& residual, Matrix& jacobian) const {
  StationaritySystem s = assemble(x, problem_, exec_);
  residual = std::move(s.residual);
  jacobian = std::move(s.jacobian);
}

}  // namespace advbilevel
