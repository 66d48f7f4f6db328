#include "advbilevel/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "advbilevel/errors.hpp"
#include "kernels.hpp"

namespace advbilevel {

namespace {

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

void check_binary(const Vector& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0 && v(i) != 1.0) throw DataError(std::string(what) + " entries must be 0 or 1");
  }
}

// Loss of one sample given its margin s = w^T x, without the regularizer.
double sample_loss(double s, double label) {
  const double pos = std::clamp(sigmoid(s), kLossClamp, 1.0 - kLossClamp);
  const double neg = std::clamp(sigmoid(-s), kLossClamp, 1.0 - kLossClamp);
  return -label * std::log(pos) - (1.0 - label) * std::log(neg);
}

double loss_sum(const Vector& margins, const Vector& labels) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < margins.size(); ++k) total += sample_loss(margins(k), labels(k));
  return total;
}

// r = sigma - label and c = sigma (1 - sigma), from unclamped sigma.
Vector residuals(const Vector& margins, const Vector& labels) {
  Vector r(margins.size());
  for (Eigen::Index k = 0; k < margins.size(); ++k) {
    const double lab = labels(k);
    r(k) = lab == 1.0 ? -sigmoid(-margins(k)) : sigmoid(margins(k)) - lab;
  }
  return r;
}

Vector curvatures(const Vector& margins) {
  Vector c(margins.size());
  for (Eigen::Index k = 0; k < margins.size(); ++k) {
    c(k) = sigmoid(margins(k)) * sigmoid(-margins(k));
  }
  return c;
}

Vector margins(const Matrix& rows, const Vector& w, Exec exec) {
  return exec == Exec::serial ? kernels::reference::margins(rows, w) : kernels::omp::margins(rows, w);
}
Vector data_gradient(const Matrix& rows, const Vector& r, Exec exec) {
  return exec == Exec::serial ? kernels::reference::data_gradient(rows, r)
                              : kernels::omp::data_gradient(rows, r);
}
Matrix data_hessian(const Matrix& rows, const Vector& c, Exec exec) {
  return exec == Exec::serial ? kernels::reference::data_hessian(rows, c)
                              : kernels::omp::data_hessian(rows, c);
}
Vector theta_gradient(const Vector& w, const GeneratorJet& jet, const Vector& r, Exec exec) {
  return exec == Exec::serial ? kernels::reference::theta_gradient(w, jet, r)
                              : kernels::omp::theta_gradient(w, jet, r);
}
Matrix w_theta_hessian(const Vector& w, const GeneratorJet& jet, const Vector& r, const Vector& c,
                       Exec exec) {
  return exec == Exec::serial ? kernels::reference::w_theta_hessian(w, jet, r, c)
                              : kernels::omp::w_theta_hessian(w, jet, r, c);
}
Matrix theta_theta_hessian(const Vector& w, const GeneratorJet& jet, const Vector& r,
                           const Vector& c, Exec exec) {
  return exec == Exec::serial ? kernels::reference::theta_theta_hessian(w, jet, r, c)
                              : kernels::omp::theta_theta_hessian(w, jet, r, c);
}

void check_point(const Vector& w, const GeneratorParams& theta, const ProblemData& p) {
  if (w.size() != p.q()) throw DimensionError("weights length does not match q");
  if (theta.q() != p.q()) throw DimensionError("generator parameters do not match q");
}

// One generator evaluation shared by every quantity requested at a point.
struct Evaluation {
  const ProblemData& p;
  const Vector& w;
  Exec exec;
  GeneratorJet jet;
  Vector gen_margins;
  Vector data_margins;
  Vector gen_curv;
  Vector flipped;

  Evaluation(const Vector& w_in, const GeneratorParams& theta, const ProblemData& p_in, Exec e)
      : p(p_in), w(w_in), exec(e) {
    check_point(w, theta, p);
    jet = generate_jet(p.z, theta, exec);
    gen_margins = margins(jet.value, w, exec);
    data_margins = p.n() > 0 ? margins(p.data.X, w, exec) : Vector();
    gen_curv = curvatures(gen_margins);
    flipped = Vector::Ones(p.m()) - p.gamma;
  }

  double reg_value(Eigen::Index count) const {
    return static_cast<double>(count) * p.mu * w.squaredNorm();
  }

  Gradients gradients(const Vector& gen_labels, bool with_data) const {
    const Vector r = residuals(gen_margins, gen_labels);
    Eigen::Index count = p.m();
    Vector gw = data_gradient(jet.value, r, exec);
    if (with_data && p.n() > 0) {
      gw += data_gradient(p.data.X, residuals(data_margins, p.data.y), exec);
    }
    if (with_data) count += p.n();
    gw += (2.0 * p.mu * static_cast<double>(count)) * w;
    return {std::move(gw), theta_gradient(w, jet, r, exec)};
  }

  Hessians hessians(const Vector& gen_labels, bool with_data) const {
    const Vector r = residuals(gen_margins, gen_labels);
    Eigen::Index count = p.m();
    Matrix hww = data_hessian(jet.value, gen_curv, exec);
    if (with_data && p.n() > 0) hww += data_hessian(p.data.X, curvatures(data_margins), exec);
    if (with_data) count += p.n();
    hww.diagonal().array() += 2.0 * p.mu * static_cast<double>(count);
    return {std::move(hww), w_theta_hessian(w, jet, r, gen_curv, exec),
            theta_theta_hessian(w, jet, r, gen_curv, exec)};
  }
};

}  // namespace

BowDataset::BowDataset(Matrix X_in, Vector y_in, std::vector<std::int64_t> timestamps_in)
    : X(std::move(X_in)), y(std::move(y_in)), timestamps(std::move(timestamps_in)) {
  if (X.rows() != y.size()) throw DimensionError("label count does not match row count");
  if (!timestamps.empty() && static_cast<Eigen::Index>(timestamps.size()) != X.rows()) {
    throw DimensionError("timestamp count does not match row count");
  }
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      if (X(i, j) != 0.0 && X(i, j) != 1.0) throw DataError("feature entries must be 0 or 1");
    }
  }
  check_binary(y, "labels");
}

ProblemData::ProblemData(BowDataset data_in, NoiseMatrix z_in, Vector gamma_in, double mu_in)
    : data(std::move(data_in)), z(std::move(z_in)), gamma(std::move(gamma_in)), mu(mu_in) {
  if (z.cols() < 1) throw DimensionError("noise matrix needs at least one column");
  if (data.n() > 0 && data.q() != z.cols()) {
    throw DimensionError("static data and noise have different feature counts");
  }
  if (gamma.size() != z.rows()) throw DimensionError("gamma length does not match noise rows");
  check_binary(gamma, "gamma");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("mu must be finite and nonnegative");
}

double predict(const Eigen::Ref<const Vector>& w, const Eigen::Ref<const Vector>& x) {
  if (w.size() != x.size()) throw DimensionError("weights and features differ in length");
  double s = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) s += w(j) * x(j);
  return sigmoid(s);
}

double logistic_loss(const Eigen::Ref<const Vector>& w, const Eigen::Ref<const Vector>& x,
                     double label, double mu) {
  if (w.size() != x.size()) throw DimensionError("weights and features differ in length");
  if (label != 0.0 && label != 1.0) throw DataError("label must be 0 or 1");
  double s = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) s += w(j) * x(j);
  return sample_loss(s, label) + mu * w.squaredNorm();
}

double training_loss(const Vector& w, const BowDataset& data, double mu, Exec exec) {
  if (w.size() != data.q()) throw DimensionError("weights length does not match q");
  return loss_sum(margins(data.X, w, exec), data.y) +
         static_cast<double>(data.n()) * mu * w.squaredNorm();
}

Vector training_gradient(const Vector& w, const BowDataset& data, double mu, Exec exec) {
  if (w.size() != data.q()) throw DimensionError("weights length does not match q");
  Vector g = data_gradient(data.X, residuals(margins(data.X, w, exec), data.y), exec);
  g += (2.0 * mu * static_cast<double>(data.n())) * w;
  return g;
}

double upper_objective(const Vector& w, const GeneratorParams& theta, const ProblemData& p,
                       Exec exec) {
  check_point(w, theta, p);
  const Matrix g = generate_matrix(p.z, theta, exec);
  double total = loss_sum(margins(g, w, exec), p.gamma);
  if (p.n() > 0) total = loss_sum(margins(p.data.X, w, exec), p.data.y) + total;
  return total + static_cast<double>(p.n() + p.m()) * p.mu * w.squaredNorm();
}

double lower_objective(const Vector& w, const GeneratorParams& theta, const ProblemData& p,
                       Exec exec) {
  check_point(w, theta, p);
  const Matrix g = generate_matrix(p.z, theta, exec);
  const Vector flipped = Vector::Ones(p.m()) - p.gamma;
  return loss_sum(margins(g, w, exec), flipped) +
         static_cast<double>(p.m()) * p.mu * w.squaredNorm();
}

Gradients upper_gradients(const Vector& w, const GeneratorParams& theta, const ProblemData& p,
                          Exec exec) {
  const Evaluation ev(w, theta, p, exec);
  return ev.gradients(p.gamma, true);
}

Gradients lower_gradients(const Vector& w, const GeneratorParams& theta, const ProblemData& p,
                          Exec exec) {
  const Evaluation ev(w, theta, p, exec);
  return ev.gradients(ev.flipped, false);
}

Hessians upper_hessians(const Vector& w, const GeneratorParams& theta, const ProblemData& p,
                        Exec exec) {
  const Evaluation ev(w, theta, p, exec);
  return ev.hessians(p.gamma, true);
}

Hessians lower_hessians(const Vector& w, const GeneratorParams& theta, const ProblemData& p,
                        Exec exec) {
  const Evaluation ev(w, theta, p, exec);
  return ev.hessians(ev.flipped, false);
}

LevelGradients level_gradients(const Vector& w, const GeneratorParams& theta, const ProblemData& p,
                               Exec exec) {
  const Evaluation ev(w, theta, p, exec);
  return {ev.gradients(p.gamma, true), ev.gradients(ev.flipped, false)};
}

LevelDerivatives level_derivatives(const Vector& w, const GeneratorParams& theta,
                                   const ProblemData& p, Exec exec) {
  const Evaluation ev(w, theta, p, exec);
  return {ev.gradients(p.gamma, true), ev.gradients(ev.flipped, false),
          ev.hessians(p.gamma, true), ev.hessians(ev.flipped, false)};
}

}  // namespace advbilevel
