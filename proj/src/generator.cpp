#include "advbilevel/generator.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>

#include "advbilevel/errors.hpp"

namespace advbilevel {

namespace {

// Symmetric bounds: 2^-53 and the largest double below one, 1 - 2^-53. A
// floor near DBL_MIN would push downstream products into subnormals.
constexpr double kLowest = 0x1p-53;
constexpr double kHighest = 1.0 - 0x1p-53;

double clamp_open_unit(double t) {
  if (t < kLowest) return kLowest;
  if (t > kHighest) return kHighest;
  return t;
}

// Logistic of u; only ever exponentiates a non-positive argument.
double logistic(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

constexpr double kDerivCutoff = 175.0;

// sech^2(x) = 4 e / (1 + e)^2 with e = exp(-2|x|); underflows cleanly to 0.
double sech2(double x) {
  const double e = std::exp(-2.0 * std::abs(x));
  const double d = 1.0 + e;
  return 4.0 * e / (d * d);
}

void check_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + " has non-finite entries");
}

}  // namespace

GeneratorParams::GeneratorParams(Vector alpha_in, Vector beta_in)
    : alpha(std::move(alpha_in)), beta(std::move(beta_in)) {
  if (alpha.size() != beta.size()) throw DimensionError("alpha and beta lengths differ");
  if (alpha.size() < 1) throw DimensionError("generator needs q >= 1");
  check_finite(alpha, "alpha");
  check_finite(beta, "beta");
}

Vector GeneratorParams::stacked() const {
  Vector theta(2 * q());
  theta << alpha, beta;
  return theta;
}

GeneratorParams GeneratorParams::from_stacked(const Eigen::Ref<const Vector>& theta) {
  if (theta.size() % 2 != 0) throw DimensionError("stacked theta must have even length");
  const Eigen::Index q = theta.size() / 2;
  return GeneratorParams(theta.head(q), theta.tail(q));
}

NoiseMatrix::NoiseMatrix(Matrix values) : values_(std::move(values)) {
  for (Eigen::Index j = 0; j < values_.cols(); ++j) {
    for (Eigen::Index k = 0; k < values_.rows(); ++k) {
      const double v = values_(k, j);
      if (!(v > 0.0 && v < 1.0)) throw DataError("noise entries must lie strictly in (0,1)");
    }
  }
}

NoiseMatrix NoiseMatrix::draw(Eigen::Index m, Eigen::Index q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix values(m, q);
  // Row-major fill: for a fixed q, growing m only appends rows.
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index j = 0; j < q; ++j) {
      values(k, j) = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
    }
  }
  return NoiseMatrix(std::move(values));
}

double step_inverse_cdf(double v, double beta) { return v <= beta ? 0.0 : 1.0; }

double smooth_step(double v, double alpha, double beta) {
  return clamp_open_unit(logistic(2.0 * alpha * (v - beta)));
}

SmoothStepDerivs smooth_step_derivs(double v, double alpha, double beta) {
  const double diff = v - beta;
  const double x = alpha * diff;
  // Past this point sech^2 < 1e-150. Products of such partials land in the
  // subnormal range, which is slow and numerically meaningless.
  if (!(std::abs(x) < kDerivCutoff)) return {};
  const double s2 = sech2(x);
  const double th = std::tanh(x);
  SmoothStepDerivs d;
  d.d_alpha = 0.5 * diff * s2;
  d.d_beta = -0.5 * alpha * s2;
  d.d2_alpha2 = -diff * diff * s2 * th;
  d.d2_beta2 = -alpha * alpha * s2 * th;
  d.d2_alpha_beta = -0.5 * s2 * (1.0 - 2.0 * x * th);
  return d;
}

Vector generate_row(std::span<const double> z_row, const GeneratorParams& params) {
  if (static_cast<Eigen::Index>(z_row.size()) != params.q()) {
    throw DimensionError("noise row length does not match generator q");
  }
  Vector out(params.q());
  for (Eigen::Index j = 0; j < params.q(); ++j) {
    out(j) = smooth_step(z_row[static_cast<std::size_t>(j)], params.alpha(j), params.beta(j));
  }
  return out;
}

Vector generate_row(const Eigen::Ref<const Vector>& z_row, const GeneratorParams& params) {
  return generate_row(std::span<const double>(z_row.data(), static_cast<std::size_t>(z_row.size())),
                      params);
}

Matrix generate_matrix(const NoiseMatrix& z, const GeneratorParams& params, Exec exec) {
  if (z.cols() != params.q()) throw DimensionError("noise column count does not match generator q");
  const Matrix& zv = z.values();
  const Eigen::Index m = z.rows();
  const Eigen::Index q = z.cols();
  Matrix out(m, q);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (Eigen::Index j = 0; j < q; ++j) {
    for (Eigen::Index k = 0; k < m; ++k) {
      out(k, j) = smooth_step(zv(k, j), params.alpha(j), params.beta(j));
    }
  }
  return out;
}

GeneratorJet generate_jet(const NoiseMatrix& z, const GeneratorParams& params, Exec exec) {
  if (z.cols() != params.q()) throw DimensionError("noise column count does not match generator q");
  const Matrix& zv = z.values();
  const Eigen::Index m = z.rows();
  const Eigen::Index q = z.cols();
  GeneratorJet jet{Matrix(m, q), Matrix(m, q), Matrix(m, q),
                   Matrix(m, q), Matrix(m, q), Matrix(m, q)};
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (Eigen::Index j = 0; j < q; ++j) {
    for (Eigen::Index k = 0; k < m; ++k) {
      const double v = zv(k, j);
      jet.value(k, j) = smooth_step(v, params.alpha(j), params.beta(j));
      const SmoothStepDerivs d = smooth_step_derivs(v, params.alpha(j), params.beta(j));
      jet.d_alpha(k, j) = d.d_alpha;
      jet.d_beta(k, j) = d.d_beta;
      jet.d2_alpha2(k, j) = d.d2_alpha2;
      jet.d2_beta2(k, j) = d.d2_beta2;
      jet.d2_alpha_beta(k, j) = d.d2_alpha_beta;
    }
  }
  return jet;
}

}  // namespace advbilevel
