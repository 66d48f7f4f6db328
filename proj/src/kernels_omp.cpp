#include "kernels.hpp"

#include <algorithm>

namespace advbilevel::kernels::omp {

namespace {

Matrix stacked_partials(const GeneratorJet& jet) {
  Matrix d(jet.d_alpha.rows(), 2 * jet.d_alpha.cols());
  d << jet.d_alpha, jet.d_beta;
  return d;
}

constexpr Eigen::Index kBlock = 4;

// out[i] = sum over k of u[k] * cols[i][k], k increasing, for i < kBlock.
// Four independent sums share each load of u.
void weighted_dots(const double* u, const double* const* cols, Eigen::Index m, double* out) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  const double* c0 = cols[0];
  const double* c1 = cols[1];
  const double* c2 = cols[2];
  const double* c3 = cols[3];
  for (Eigen::Index k = 0; k < m; ++k) {
    const double uk = u[k];
    a0 += uk * c0[k];
    a1 += uk * c1[k];
    a2 += uk * c2[k];
    a3 += uk * c3[k];
  }
  out[0] = a0;
  out[1] = a1;
  out[2] = a2;
  out[3] = a3;
}

// sum_k u[k] * M(k, j) for j in [first, last), in blocks of kBlock columns.
// Short blocks are padded with column `first`; their sums are discarded.
template <class Store>
void blocked_dots(const Vector& u, const Matrix& mat, Eigen::Index first, Eigen::Index last, Store store) {
  const double* cols[kBlock];
  double out[kBlock];
  for (Eigen::Index j = first; j < last; j += kBlock) {
    const Eigen::Index width = std::min(kBlock, last - j);
    for (Eigen::Index i = 0; i < kBlock; ++i) cols[i] = mat.col(i < width ? j + i : first).data();
    weighted_dots(u.data(), cols, mat.rows(), out);
    for (Eigen::Index i = 0; i < width; ++i) store(j + i, out[i]);
  }
}

}  // namespace

Vector margins(const Matrix& rows, const Vector& w) {
  const Eigen::Index m = rows.rows();
  const Eigen::Index q = rows.cols();
  Vector s(m);
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < m; ++k) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) acc += w(j) * rows(k, j);
    s(k) = acc;
  }
  return s;
}

Vector data_gradient(const Matrix& rows, const Vector& r) {
  const Eigen::Index m = rows.rows();
  const Eigen::Index q = rows.cols();
  Vector g(q);
#pragma omp parallel for schedule(static)
  for (Eigen::Index l = 0; l < q; ++l) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) acc += r(k) * rows(k, l);
    g(l) = acc;
  }
  return g;
}

Matrix data_hessian(const Matrix& rows, const Vector& c) {
  const Eigen::Index q = rows.cols();
  Matrix h(q, q);
#pragma omp parallel for schedule(dynamic, 4)
  for (Eigen::Index l = 0; l < q; ++l) {
    const Vector u = c.cwiseProduct(rows.col(l));
    blocked_dots(u, rows, l, q, [&](Eigen::Index lp, double v) { h(l, lp) = v; });
  }
  for (Eigen::Index l = 0; l < q; ++l) {
    for (Eigen::Index lp = l + 1; lp < q; ++lp) h(lp, l) = h(l, lp);
  }
  return h;
}

Vector theta_gradient(const Vector& w, const GeneratorJet& jet, const Vector& r) {
  const Matrix d = stacked_partials(jet);
  const Eigen::Index m = d.rows();
  const Eigen::Index q = w.size();
  Vector g(2 * q);
#pragma omp parallel for schedule(static)
  for (Eigen::Index p = 0; p < 2 * q; ++p) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) acc += r(k) * d(k, p);
    g(p) = w(p % q) * acc;
  }
  return g;
}

Matrix w_theta_hessian(const Vector& w, const GeneratorJet& jet, const Vector& r, const Vector& c) {
  const Matrix d = stacked_partials(jet);
  const Matrix& g = jet.value;
  const Eigen::Index m = d.rows();
  const Eigen::Index q = w.size();
  // cg(k, l) = c(k) g(k, l), the same product the reference forms per sample.
  const Matrix cg = c.asDiagonal() * g;
  Matrix h(q, 2 * q);
#pragma omp parallel for schedule(static)
  for (Eigen::Index p = 0; p < 2 * q; ++p) {
    const Eigen::Index f = p % q;
    double direct = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) direct += r(k) * d(k, p);
    const Vector dp = d.col(p);
    blocked_dots(dp, cg, 0, q, [&](Eigen::Index l, double v) { h(l, p) = w(f) * v + (l == f ? direct : 0.0); });
  }
  return h;
}

Matrix theta_theta_hessian(const Vector& w, const GeneratorJet& jet, const Vector& r,
                           const Vector& c) {
  const Matrix d = stacked_partials(jet);
  const Eigen::Index m = d.rows();
  const Eigen::Index q = w.size();
  const Eigen::Index dim = 2 * q;
  Matrix h(dim, dim);
#pragma omp parallel for schedule(dynamic, 4)
  for (Eigen::Index p = 0; p < dim; ++p) {
    const Eigen::Index fp = p % q;
    const Vector u = c.cwiseProduct(d.col(p));
    blocked_dots(u, d, p, dim, [&](Eigen::Index pp, double acc) {
      double v = (w(fp) * w(pp % q)) * acc;
      if (fp == pp % q) {
        const Matrix& second = p == pp ? (p < q ? jet.d2_alpha2 : jet.d2_beta2) : jet.d2_alpha_beta;
        double s = 0.0;
        for (Eigen::Index k = 0; k < m; ++k) s += r(k) * second(k, fp);
        v += w(fp) * s;
      }
      h(p, pp) = v;
    });
  }
  for (Eigen::Index p = 0; p < dim; ++p) {
    for (Eigen::Index pp = p + 1; pp < dim; ++pp) h(pp, p) = h(p, pp);
  }
  return h;
}

}  // namespace advbilevel::kernels::omp
