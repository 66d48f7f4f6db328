#include "advbilevel/baseline.hpp"

#include <cmath>
#include <utility>

#include "advbilevel/errors.hpp"
#include "advbilevel/line_search.hpp"

namespace advbilevel {

void BaselineConfig::validate() const {
  if (!(mu >= 0.0)) throw ConfigError("baseline mu must be nonnegative");
  if (max_iter < 1) throw ConfigError("baseline max_iter must be positive");
  if (!(grad_tol > 0.0)) throw ConfigError("baseline grad_tol must be positive");
  if (!(initial_step > 0.0) || !(growth >= 1.0)) throw ConfigError("bad baseline step rule");
  if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("baseline shrink must lie in (0,1)");
  if (!(armijo > 0.0 && armijo < 1.0)) throw ConfigError("baseline armijo must lie in (0,1)");
  if (!(min_step > 0.0)) throw ConfigError("baseline min_step must be positive");
}

BaselineResult train_baseline(const BowDataset& data, const BaselineConfig& cfg, Exec exec) {
  cfg.validate();
  if (data.n() < 1) throw DataError("baseline needs at least one training row");

  BaselineResult out;
  out.w = Vector::Zero(data.q());
  double loss = training_loss(out.w, data, cfg.mu, exec);
  Vector grad = training_gradient(out.w, data, cfg.mu, exec);
  out.loss_history.push_back(loss);
  double step = cfg.initial_step;

  Vector prev_w;
  Vector prev_grad;

  while (true) {
    out.grad_norm = grad.norm();
    if (out.grad_norm <= cfg.grad_tol) {
      out.converged = true;
      break;
    }
    if (out.iterations >= cfg.max_iter) break;

    // First trial step: Barzilai-Borwein when curvature is positive, else
    // the last accepted step grown by `growth`.
    double first = step * cfg.growth;
    if (prev_w.size() > 0) {
      const Vector s = out.w - prev_w;
      const double sy = s.dot(grad - prev_grad);
      if (sy > 0.0) first = s.squaredNorm() / sy;
    }
    prev_w = out.w;
    prev_grad = grad;

    const double slope = -grad.squaredNorm();
    const auto eval = [&](double omega) {
      return training_loss(out.w - omega * grad, data, cfg.mu, exec);
    };
    const BacktrackResult r =
        backtrack(loss, cfg.armijo * slope, eval, first, cfg.shrink, cfg.min_step);
    if (r.accepted) {
      out.w -= r.omega * grad;
      step = r.omega;
      loss = r.value;
      grad = training_gradient(out.w, data, cfg.mu, exec);
    } else {
      // Sufficient decrease is below the resolution of the summed loss. The
      // loss is convex along the ray, so a nonnegative overlap between the
      // trial gradient and the current one still certifies descent.
      bool moved = false;
      for (double omega = first; omega >= cfg.min_step; omega *= cfg.shrink) {
        const Vector trial = out.w - omega * grad;
        if (trial == out.w) break;
        const double trial_loss = training_loss(trial, data, cfg.mu, exec);
        if (!(trial_loss <= loss)) continue;
        Vector trial_grad = training_gradient(trial, data, cfg.mu, exec);
        if (trial_grad.dot(grad) < 0.0) continue;
        out.w = trial;
        step = omega;
        loss = trial_loss;
        grad = std::move(trial_grad);
        moved = true;
        break;
      }
      if (!moved) break;
    }
    out.loss_history.push_back(loss);
    ++out.iterations;
  }
  return out;
}

std::vector<int> classify(const Vector& w, const Matrix& X, double threshold) {
  if (X.rows() > 0 && X.cols() != w.size()) throw DimensionError("weights do not match features");
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = predict(w, X.row(i).transpose()) >= threshold ? 1 : 0;
  }
  return out;
}

}  // namespace advbilevel
