#include "advbilevel/lm_solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "advbilevel/errors.hpp"
#include "advbilevel/line_search.hpp"

namespace advbilevel {

namespace {

constexpr Eigen::Index kNormalBlock = 32;

}  // namespace

void LmConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (max_iter < 0) throw ConfigError("max_iter must be nonnegative");
  if (!(eta0 > 0.0)) throw ConfigError("eta0 must be positive");
  if (kappa < 1) throw ConfigError("kappa must be at least 1");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (!(omega_min > 0.0)) throw ConfigError("omega_min must be positive");
  if (!(eta_decay > 1.0)) throw ConfigError("eta_decay must exceed 1");
  if (!(eta_min > 0.0 && eta_min <= eta0)) throw ConfigError("eta_min must lie in (0, eta0]");
  if (max_damping_retries < 0) throw ConfigError("max_damping_retries must be nonnegative");
}

const char* to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::converged:
      return "converged";
    case SolverStatus::max_iter:
      return "max_iter";
    case SolverStatus::stalled:
      return "stalled";
  }
  return "unknown";
}

Matrix normal_matrix(const Matrix& jacobian, Exec exec) {
  const Eigen::Index n = jacobian.cols();
  Matrix out(n, n);
  const Eigen::Index blocks = (n + kNormalBlock - 1) / kNormalBlock;
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index start = b * kNormalBlock;
    const Eigen::Index width = std::min(kNormalBlock, n - start);
    out.middleCols(start, width).noalias() =
        jacobian.transpose() * jacobian.middleCols(start, width);
  }
  // Mirror the upper triangle so the result is exactly symmetric.
  out.triangularView<Eigen::StrictlyLower>() = out.transpose();
  return out;
}

Vector lm_step(const Matrix& jacobian, const Vector& residual, double& eta, int max_retries,
               Exec exec) {
  if (!(eta > 0.0)) throw ConfigError("damping eta must be positive");
  if (jacobian.rows() != residual.size()) throw DimensionError("Jacobian rows differ from residual");
  const Matrix normal = normal_matrix(jacobian, exec);
  const Vector rhs = -(jacobian.transpose() * residual);
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    Matrix damped = normal;
    damped.diagonal().array() += eta;
    const Eigen::LLT<Matrix> llt(damped);
    if (llt.info() == Eigen::Success) {
      Vector d = llt.solve(rhs);
      if (d.allFinite()) return d;
    }
    eta *= 10.0;
  }
  throw SingularError("normal equations could not be factorized; Jacobian or residual is defective");
}

LineSearchResult line_search(const LeastSquaresSystem& system, const Vector& x, const Vector& d,
                             double residual_sq, double slope, const LmConfig& config) {
  if (!d.allFinite()) return {};
  if (d.isZero(0.0)) return {1.0, true, x, residual_sq};
  Vector trial;
  const auto eval = [&](double omega) {
    trial = x + omega * d;
    return system.residual(trial).squaredNorm();
  };
  const BacktrackResult r = backtrack(residual_sq, slope, eval, 1.0, 0.5, config.omega_min);
  if (!r.accepted) return {r.omega, false, Vector(), 0.0};
  return {r.omega, true, std::move(trial), r.value};
}

SolverState solve(const LeastSquaresSystem& system, const Vector& x0, const LmConfig& config,
                  Exec exec) {
  config.validate();
  if (x0.size() != system.num_variables()) throw DimensionError("initial point has wrong length");
  if (!x0.allFinite()) throw ConfigError("initial point must be finite");

  SolverState state;
  state.point = x0;
  state.eta = config.eta0;

  Vector residual;
  Matrix jacobian;
  system.linearize(state.point, residual, jacobian);
  double r2 = residual.squaredNorm();
  state.residual_sq_history.push_back(r2);

  // History index where the current kappa-lookback window started.
  std::size_t window_start = 0;
  int consecutive_failures = 0;

  while (true) {
    if (!std::isfinite(r2) || !jacobian.allFinite()) {
      state.status = SolverStatus::stalled;
      break;
    }
    if (r2 <= config.epsilon) {
      state.status = SolverStatus::converged;
      break;
    }
    if (state.iter >= config.max_iter) {
      state.status = SolverStatus::max_iter;
      break;
    }

    TraceRecord rec;
    rec.iter = state.iter;
    rec.residual_sq = r2;

    const double eta_before = state.eta;
    const Vector d = lm_step(jacobian, residual, state.eta, config.max_damping_retries, exec);
    if (state.eta != eta_before) rec.event = "damping_retry";
    rec.eta = state.eta;
    const double slope = (jacobian.transpose() * residual).dot(d);

    LineSearchResult ls = line_search(system, state.point, d, r2, slope, config);
    rec.omega = ls.omega;
    rec.accepted = ls.accepted;
    ++state.iter;

    if (!ls.accepted) {
      state.eta = config.eta0;
      window_start = state.residual_sq_history.size() - 1;
      rec.event = "eta_reset";
      state.trace.push_back(std::move(rec));
      if (++consecutive_failures >= 2) {
        state.status = SolverStatus::stalled;
        break;
      }
      continue;
    }
    consecutive_failures = 0;

    // Slow progress over the last kappa iterates pushes the step toward Gauss-Newton.
    const std::size_t k = state.residual_sq_history.size() - 1;
    const auto kappa = static_cast<std::size_t>(config.kappa);
    if (k - window_start >= kappa) {
      const double ratio = state.residual_sq_history[k] / state.residual_sq_history[k - kappa];
      if (ratio > config.tau && state.eta > config.eta_min) {
        state.eta = std::max(state.eta / config.eta_decay, config.eta_min);
        if (rec.event.empty()) rec.event = "eta_decay";
      }
    }
    state.trace.push_back(std::move(rec));

    state.point = std::move(ls.trial);
    system.linearize(state.point, residual, jacobian);
    r2 = residual.squaredNorm();
    state.residual_sq_history.push_back(r2);
  }
  return state;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << "iter,residual_sq,eta,omega,accepted,event\n";
  for (const TraceRecord& r : trace) {
    fmt::print(out, "{},{:.17g},{:.17g},{:.17g},{},{}\n", r.iter, r.residual_sq, r.eta, r.omega,
               r.accepted ? 1 : 0, r.event);
  }
}

}  // namespace advbilevel
