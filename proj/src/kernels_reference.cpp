#include "kernels.hpp"

namespace advbilevel::kernels::reference {

namespace {

// Row k of the stacked (alpha | beta) partials.
void stacked_row(const GeneratorJet& jet, Eigen::Index k, Vector& d) {
  const Eigen::Index q = jet.d_alpha.cols();
  d.resize(2 * q);
  d.head(q) = jet.d_alpha.row(k).transpose();
  d.tail(q) = jet.d_beta.row(k).transpose();
}

}  // namespace

Vector margins(const Matrix& rows, const Vector& w) {
  Vector s = Vector::Zero(rows.rows());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    for (Eigen::Index k = 0; k < rows.rows(); ++k) s(k) += w(j) * rows(k, j);
  }
  return s;
}

Vector data_gradient(const Matrix& rows, const Vector& r) {
  Vector g = Vector::Zero(rows.cols());
  for (Eigen::Index l = 0; l < rows.cols(); ++l) {
    for (Eigen::Index k = 0; k < rows.rows(); ++k) g(l) += r(k) * rows(k, l);
  }
  return g;
}

Matrix data_hessian(const Matrix& rows, const Vector& c) {
  const Eigen::Index q = rows.cols();
  Matrix h = Matrix::Zero(q, q);  // lower triangle accumulates
  Vector x(q);
  for (Eigen::Index k = 0; k < rows.rows(); ++k) {
    x = rows.row(k).transpose();
    for (Eigen::Index l = 0; l < q; ++l) {
      const double a = c(k) * x(l);
      for (Eigen::Index lp = l; lp < q; ++lp) h(lp, l) += a * x(lp);
    }
  }
  for (Eigen::Index l = 0; l < q; ++l) {
    for (Eigen::Index lp = l + 1; lp < q; ++lp) h(l, lp) = h(lp, l);
  }
  return h;
}

Vector theta_gradient(const Vector& w, const GeneratorJet& jet, const Vector& r) {
  const Eigen::Index q = w.size();
  Vector acc = Vector::Zero(2 * q);
  Vector d;
  for (Eigen::Index k = 0; k < jet.value.rows(); ++k) {
    stacked_row(jet, k, d);
    for (Eigen::Index p = 0; p < 2 * q; ++p) acc(p) += r(k) * d(p);
  }
  for (Eigen::Index p = 0; p < 2 * q; ++p) acc(p) = w(p % q) * acc(p);
  return acc;
}

Matrix w_theta_hessian(const Vector& w, const GeneratorJet& jet, const Vector& r, const Vector& c) {
  const Eigen::Index q = w.size();
  Matrix curv = Matrix::Zero(q, 2 * q);
  Vector direct = Vector::Zero(2 * q);
  Vector cg(q);
  Vector d;
  for (Eigen::Index k = 0; k < jet.value.rows(); ++k) {
    stacked_row(jet, k, d);
    for (Eigen::Index l = 0; l < q; ++l) cg(l) = c(k) * jet.value(k, l);
    for (Eigen::Index p = 0; p < 2 * q; ++p) {
      direct(p) += r(k) * d(p);
      for (Eigen::Index l = 0; l < q; ++l) curv(l, p) += cg(l) * d(p);
    }
  }
  Matrix h(q, 2 * q);
  for (Eigen::Index p = 0; p < 2 * q; ++p) {
    const Eigen::Index f = p % q;
    for (Eigen::Index l = 0; l < q; ++l) {
      h(l, p) = w(f) * curv(l, p) + (l == f ? direct(p) : 0.0);
    }
  }
  return h;
}

Matrix theta_theta_hessian(const Vector& w, const GeneratorJet& jet, const Vector& r,
                           const Vector& c) {
  const Eigen::Index q = w.size();
  const Eigen::Index dim = 2 * q;
  Matrix curv = Matrix::Zero(dim, dim);  // lower triangle accumulates
  Vector s_aa = Vector::Zero(q);
  Vector s_bb = Vector::Zero(q);
  Vector s_ab = Vector::Zero(q);
  Vector d;
  for (Eigen::Index k = 0; k < jet.value.rows(); ++k) {
    stacked_row(jet, k, d);
    for (Eigen::Index p = 0; p < dim; ++p) {
      const double a = c(k) * d(p);
      for (Eigen::Index pp = p; pp < dim; ++pp) curv(pp, p) += a * d(pp);
    }
    for (Eigen::Index j = 0; j < q; ++j) {
      s_aa(j) += r(k) * jet.d2_alpha2(k, j);
      s_bb(j) += r(k) * jet.d2_beta2(k, j);
      s_ab(j) += r(k) * jet.d2_alpha_beta(k, j);
    }
  }
  Matrix h(dim, dim);
  for (Eigen::Index p = 0; p < dim; ++p) {
    for (Eigen::Index pp = p; pp < dim; ++pp) {
      double v = (w(p % q) * w(pp % q)) * curv(pp, p);
      if (p % q == pp % q) {
        const Eigen::Index j = p % q;
        const double second = p == pp ? (p < q ? s_aa(j) : s_bb(j)) : s_ab(j);
        v += w(j) * second;
      }
      h(p, pp) = v;
      h(pp, p) = v;
    }
  }
  return h;
}

}  // namespace advbilevel::kernels::reference
