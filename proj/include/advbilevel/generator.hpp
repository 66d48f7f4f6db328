#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "advbilevel/exec.hpp"

namespace advbilevel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Parameters of the smoothed inverse-CDF generator, one (slope, threshold)
/// pair per feature. As a flat vector they are stacked (alpha_1..alpha_q,
/// beta_1..beta_q); every derivative block in the library uses that order.
struct GeneratorParams {
  Vector alpha;
  Vector beta;

  GeneratorParams() = default;
  GeneratorParams(Vector alpha_in, Vector beta_in);

  Eigen::Index q() const { return alpha.size(); }

  Vector stacked() const;
  static GeneratorParams from_stacked(const Eigen::Ref<const Vector>& theta);
};

/// Uniform noise z in (0,1)^{m x q}, fixed for the lifetime of an experiment.
class NoiseMatrix {
 public:
  NoiseMatrix() = default;
  explicit NoiseMatrix(Matrix values);

  const Matrix& values() const { return values_; }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }

  /// Seeded draw. Uses its own 53-bit mapping of a 64-bit Mersenne twister so
  /// that the same seed yields the same matrix on every standard library.
  static NoiseMatrix draw(Eigen::Index m, Eigen::Index q, std::uint64_t seed);

 private:
  Matrix values_;
};

/// Exact inverse CDF of a binary feature whose proportion of zeros is beta.
double step_inverse_cdf(double v, double beta);

/// (tanh(alpha (v - beta)) + 1) / 2, evaluated as a logistic of 2 alpha (v - beta)
/// and kept strictly inside (0,1).
double smooth_step(double v, double alpha, double beta);

struct SmoothStepDerivs {
  double d_alpha = 0.0;
  double d_beta = 0.0;
  double d2_alpha2 = 0.0;
  double d2_beta2 = 0.0;
  double d2_alpha_beta = 0.0;
};

SmoothStepDerivs smooth_step_derivs(double v, double alpha, double beta);

Vector generate_row(std::span<const double> z_row, const GeneratorParams& params);
Vector generate_row(const Eigen::Ref<const Vector>& z_row, const GeneratorParams& params);

Matrix generate_matrix(const NoiseMatrix& z, const GeneratorParams& params,
                       Exec exec = Exec::parallel);

/// Generated data together with the per-entry partials of the smoothed map,
/// all m x q. Entry (k, j) refers to feature j of generated row k.
struct GeneratorJet {
  Matrix value;
  Matrix d_alpha;
  Matrix d_beta;
  Matrix d2_alpha2;
  Matrix d2_beta2;
  Matrix d2_alpha_beta;
};

GeneratorJet generate_jet(const NoiseMatrix& z, const GeneratorParams& params,
                          Exec exec = Exec::parallel);

}  // namespace advbilevel
