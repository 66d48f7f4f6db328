#pragma once

// Sample-sum kernels behind the objectives module. `rows` is a sample matrix
// (static X or generated G), `r` the per-sample residual sigma - label and `c`
// the per-sample curvature sigma (1 - sigma). Regularization is added by the
// caller.
//
// Two implementations with identical arithmetic: `reference` accumulates one
// sample at a time the way the derivative formulas read; `omp` partitions the
// output entries across threads and sums samples in increasing order inside
// each entry, so results do not depend on the thread count.

#include "advbilevel/generator.hpp"

namespace advbilevel::kernels {

namespace reference {
Vector margins(const Matrix& rows, const Vector& w);
Vector data_gradient(const Matrix& rows, const Vector& r);
Matrix data_hessian(const Matrix& rows, const Vector& c);
Vector theta_gradient(const Vector& w, const GeneratorJet& jet, const Vector& r);
Matrix w_theta_hessian(const Vector& w, const GeneratorJet& jet, const Vector& r, const Vector& c);
Matrix theta_theta_hessian(const Vector& w, const GeneratorJet& jet, const Vector& r,
                           const Vector& c);
}  // namespace reference

namespace omp {
Vector margins(const Matrix& rows, const Vector& w);
Vector data_gradient(const Matrix& rows, const Vector& r);
Matrix data_hessian(const Matrix& rows, const Vector& c);
Vector theta_gradient(const Vector& w, const GeneratorJet& jet, const Vector& r);
Matrix w_theta_hessian(const Vector& w, const GeneratorJet& jet, const Vector& r, const Vector& c);
Matrix theta_theta_hessian(const Vector& w, const GeneratorJet& jet, const Vector& r,
                           const Vector& c);
}  // namespace omp

}  // namespace advbilevel::kernels
