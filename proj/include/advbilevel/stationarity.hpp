#pragma once

#include "advbilevel/lm_solver.hpp"
#include "advbilevel/objectives.hpp"

namespace advbilevel {

/// Unknowns of the stationarity system, flattened as (w | alpha | beta | zeta),
/// 3q + 1 entries.
struct BilevelPoint {
  Vector w;
  GeneratorParams theta;
  double zeta = 0.0;

  Vector pack() const;
  static BilevelPoint unpack(const Vector& x);
};

/// Residual blocks, in order:
///   grad_w F                       (q)
///   grad_theta F - zeta^2 grad_theta f  (2q)
///   grad_theta f                   (2q)
/// The Jacobian is 5q x (3q + 1) with column blocks (w | theta | zeta); rows
/// differentiate residual blocks, so the (2,1) block is d/dw of grad_theta F,
/// the transpose of the objectives' w_theta block.
struct StationaritySystem {
  Vector residual;
  Matrix jacobian;
  double lambda_equiv = 0.0;  // zeta^2
};

Vector assemble_residual(const Vector& x, const ProblemData& p, Exec exec = Exec::parallel);
Matrix assemble_jacobian(const Vector& x, const ProblemData& p, Exec exec = Exec::parallel);
StationaritySystem assemble(const Vector& x, const ProblemData& p, Exec exec = Exec::parallel);

/// Central differences of assemble_residual, one column per unknown.
Matrix finite_difference_jacobian(const Vector& x, const ProblemData& p, double step,
                                  Exec exec = Exec::parallel);

/// Adapter exposing the stationarity system to the LM solver.
class BilevelSystem final : public LeastSquaresSystem {
 public:
  explicit BilevelSystem(const ProblemData& problem, Exec exec = Exec::parallel)
      : problem_(problem), exec_(exec) {}

  Eigen::Index num_variables() const override { return 3 * problem_.q() + 1; }
  Eigen::Index num_residuals() const override { return 5 * problem_.q(); }
  Vector residual(const Vector& x) const override;
  void linearize(const Vector& x, Vector& residual, Matrix& jacobian) const override;

 private:
  const ProblemData& problem_;
  Exec exec_;
};

}  // namespace advbilevel
