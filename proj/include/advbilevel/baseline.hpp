#pragma once

#include <vector>

#include "advbilevel/objectives.hpp"

namespace advbilevel {

struct BaselineConfig {
  double mu = 0.01;
  int max_iter = 100000;
  double grad_tol = 1e-4;
  // Backtracking: each iteration starts from the Barzilai-Borwein step (or
  // `growth` times the last accepted step when curvature is not positive) and
  // shrinks by `shrink` until the Armijo condition with `armijo` holds.
  double initial_step = 1.0;
  double growth = 2.0;
  double shrink = 0.5;
  double armijo = 1e-4;
  double min_step = 1e-20;

  void validate() const;
};

struct BaselineResult {
  Vector w;
  bool converged = false;  // false means w is the best iterate seen, not a stationary point
  int iterations = 0;
  double grad_norm = 0.0;
  std::vector<double> loss_history;
};

/// Regularized logistic regression on the static data only, by gradient
/// descent with backtracking. Same loss convention as the leader: mu ||w||^2
/// per sample.
BaselineResult train_baseline(const BowDataset& data, const BaselineConfig& cfg,
                              Exec exec = Exec::parallel);

/// 1 where predict(w, X_i) >= threshold.
std::vector<int> classify(const Vector& w, const Matrix& X, double threshold = 0.5);

}  // namespace advbilevel
