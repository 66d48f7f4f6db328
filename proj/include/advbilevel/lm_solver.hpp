#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "advbilevel/exec.hpp"
#include "advbilevel/generator.hpp"

namespace advbilevel {

/// A square-or-overdetermined residual map x -> Phi(x) with its Jacobian.
class LeastSquaresSystem {
 public:
  virtual ~LeastSquaresSystem() = default;

  virtual Eigen::Index num_variables() const = 0;
  virtual Eigen::Index num_residuals() const = 0;
  virtual Vector residual(const Vector& x) const = 0;
  virtual void linearize(const Vector& x, Vector& residual, Matrix& jacobian) const = 0;
};

struct LmConfig {
  double epsilon = 1e-8;  // stop once ||Phi||^2 <= epsilon
  int max_iter = 1000;
  double eta0 = 1e-3;
  int kappa = 5;
  double tau = 0.9;
  double omega_min = 1e-100;
  double eta_decay = 10.0;
  double eta_min = 1e-20;  // decay never takes eta below this
  int max_damping_retries = 20;

  void validate() const;
};

enum class SolverStatus { converged, max_iter, stalled };

const char* to_string(SolverStatus status);

struct TraceRecord {
  int iter = 0;
  double residual_sq = 0.0;
  double eta = 0.0;
  double omega = 0.0;
  bool accepted = false;
  std::string event;
};

struct SolverState {
  Vector point;
  double eta = 0.0;
  int iter = 0;
  // ||Phi||^2 at every iterate visited, starting with the initial point.
  std::vector<double> residual_sq_history;
  SolverStatus status = SolverStatus::max_iter;
  std::vector<TraceRecord> trace;

  double residual_sq() const { return residual_sq_history.back(); }
};

/// J^T J, assembled in fixed column blocks.
Matrix normal_matrix(const Matrix& jacobian, Exec exec = Exec::parallel);

/// Solves (J^T J + eta I) d = -J^T Phi by Cholesky. A failed factorization
/// multiplies eta by 10 and retries; `eta` holds the damping actually used.
/// Throws SingularError when every retry fails.
Vector lm_step(const Matrix& jacobian, const Vector& residual, double& eta,
               int max_retries = 20, Exec exec = Exec::parallel);

struct LineSearchResult {
  double omega = 1.0;
  bool accepted = false;
  Vector trial;           // x + omega d when accepted
  double residual_sq = 0.0;  // ||Phi(trial)||^2 when accepted
};

/// Halves omega from 1 until ||Phi(x + omega d)||^2 < ||Phi(x)||^2 + omega g^T d,
/// with g = J^T Phi. Gives up once omega < omega_min.
LineSearchResult line_search(const LeastSquaresSystem& system, const Vector& x, const Vector& d,
                             double residual_sq, double slope, const LmConfig& config);

SolverState solve(const LeastSquaresSystem& system, const Vector& x0, const LmConfig& config,
                  Exec exec = Exec::parallel);

/// CSV with header `iter,residual_sq,eta,omega,accepted,event`.
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);

}  // namespace advbilevel
