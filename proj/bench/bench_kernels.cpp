// Serial reference loops against the OpenMP kernels on a desk-scale problem.
// Run with OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include "advbilevel/lm_solver.hpp"
#include "advbilevel/stationarity.hpp"

namespace {

using namespace advbilevel;

ProblemData make_problem(Eigen::Index q, Eigen::Index n, Eigen::Index m) {
  Matrix X = (Matrix::Random(n, q).array() > 0.6).cast<double>();
  Vector y = (Vector::Random(n).array() > 0.0).cast<double>();
  return ProblemData(BowDataset(std::move(X), std::move(y)), NoiseMatrix::draw(m, q, 11),
                     Vector::Ones(m), 0.01);
}

Vector make_point(Eigen::Index q) {
  const BilevelPoint pt{0.3 * Vector::Random(q),
                        GeneratorParams(Vector::Constant(q, 20.0), 0.5 * Vector::Ones(q)), 0.7};
  return pt.pack();
}

Exec exec_of(const benchmark::State& state) {
  return state.range(1) == 0 ? Exec::serial : Exec::parallel;
}

void BM_LevelDerivatives(benchmark::State& state) {
  const Eigen::Index q = state.range(0);
  const ProblemData p = make_problem(q, 2000, 100);
  const BilevelPoint pt = BilevelPoint::unpack(make_point(q));
  for (auto _ : state) {
    benchmark::DoNotOptimize(level_derivatives(pt.w, pt.theta, p, exec_of(state)));
  }
}

void BM_AssembleJacobian(benchmark::State& state) {
  const Eigen::Index q = state.range(0);
  const ProblemData p = make_problem(q, 2000, 100);
  const Vector x = make_point(q);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_jacobian(x, p, exec_of(state)));
}

void BM_NormalMatrix(benchmark::State& state) {
  const Eigen::Index q = state.range(0);
  const Matrix jac = Matrix::Random(5 * q, 3 * q + 1);
  for (auto _ : state) benchmark::DoNotOptimize(normal_matrix(jac, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_LevelDerivatives)->ArgsProduct({{50, 200}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleJacobian)->ArgsProduct({{50, 200}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NormalMatrix)->ArgsProduct({{50, 200}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
