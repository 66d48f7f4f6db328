#pragma once

#include <cstdint>
#include <vector>

#include "advbilevel/exec.hpp"
#include "advbilevel/generator.hpp"

namespace advbilevel {

/// Binary bag-of-words data: X is n x q with 0/1 entries, y holds 0/1 labels.
/// Timestamps are optional day ordinals, one per row when present.
struct BowDataset {
  Matrix X;
  Vector y;
  std::vector<std::int64_t> timestamps;

  BowDataset() = default;
  BowDataset(Matrix X_in, Vector y_in, std::vector<std::int64_t> timestamps_in = {});

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index q() const { return X.cols(); }
};

/// Everything the two players' objectives need besides (w, theta).
/// gamma is the true class of each generated row; the follower is scored
/// against the flipped labels 1 - gamma. mu multiplies ||w||^2 once per sample.
struct ProblemData {
  BowDataset data;
  NoiseMatrix z;
  Vector gamma;
  double mu = 0.0;

  ProblemData() = default;
  ProblemData(BowDataset data_in, NoiseMatrix z_in, Vector gamma_in, double mu_in);

  Eigen::Index q() const { return z.cols(); }
  Eigen::Index n() const { return data.n(); }
  Eigen::Index m() const { return z.rows(); }
};

struct Gradients {
  Vector w;      // q
  Vector theta;  // 2q, stacked (alpha | beta)
};

struct Hessians {
  Matrix ww;           // q x q
  Matrix w_theta;      // q x 2q
  Matrix theta_theta;  // 2q x 2q
};

/// First and second derivatives of both levels at one point, sharing a
/// single evaluation of the generator.
struct LevelDerivatives {
  Gradients upper;
  Gradients lower;
  Hessians upper_hess;
  Hessians lower_hess;
};

/// Lower bound applied to sigma and 1 - sigma before taking logs.
inline constexpr double kLossClamp = 1e-12;

/// Probability of class 1 under a linear logistic model, overflow-safe.
double predict(const Eigen::Ref<const Vector>& w, const Eigen::Ref<const Vector>& x);

double logistic_loss(const Eigen::Ref<const Vector>& w, const Eigen::Ref<const Vector>& x,
                     double label, double mu);

// Static-data part only: sum_i L(w, X_i, y_i) including n mu ||w||^2.
double training_loss(const Vector& w, const BowDataset& data, double mu, Exec exec = Exec::parallel);
Vector training_gradient(const Vector& w, const BowDataset& data, double mu,
                         Exec exec = Exec::parallel);

double upper_objective(const Vector& w, const GeneratorParams& theta, const ProblemData& p,
                       Exec exec = Exec::parallel);
double lower_objective(const Vector& w, const GeneratorParams& theta, const ProblemData& p,
                       Exec exec = Exec::parallel);

Gradients upper_gradients(const Vector& w, const GeneratorParams& theta, const ProblemData& p,
                          Exec exec = Exec::parallel);
Gradients lower_gradients(const Vector& w, const GeneratorParams& theta, const ProblemData& p,
                          Exec exec = Exec::parallel);

Hessians upper_hessians(const Vector& w, const GeneratorParams& theta, const ProblemData& p,
                        Exec exec = Exec::parallel);
Hessians lower_hessians(const Vector& w, const GeneratorParams& theta, const ProblemData& p,
                        Exec exec = Exec::parallel);

struct LevelGradients {
  Gradients upper;
  Gradients lower;
};

LevelGradients level_gradients(const Vector& w, const GeneratorParams& theta, const ProblemData& p,
                               Exec exec = Exec::parallel);

LevelDerivatives level_derivatives(const Vector& w, const GeneratorParams& theta,
                                   const ProblemData& p, Exec exec = Exec::parallel);

}  // namespace advbilevel
