#include "advbilevel/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "advbilevel/errors.hpp"

namespace advbilevel {

namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

constexpr const char* kMetricsHeader = "config_id,period,rho,mu,seed,tp,tn,fp,fn,p4,f1";

}  // namespace

void ExperimentConfig::validate() const {
  if (q_target < 1) throw ConfigError("q_target must be at least 1");
  if (train_size < 1) throw ConfigError("train_size must be at least 1");
  for (const double r : rho) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("rho entries must lie in (0, 1]");
  }
  if (mu.empty()) throw ConfigError("mu grid must not be empty");
  for (const double m : mu) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw ConfigError("mu entries must be finite and nonnegative");
  }
  if (!std::isfinite(alpha0)) throw ConfigError("alpha0 must be finite");
  if (zeta0.empty()) throw ConfigError("zeta0 grid must not be empty");
  if (beta0_sample_size < 1) throw ConfigError("beta0_sample_size must be at least 1");
  if (beta0_restarts < 1) throw ConfigError("beta0_restarts must be at least 1");
  if (adversarial_class != 0 && adversarial_class != 1) throw ConfigError("adversarial_class must be 0 or 1");
  lm.validate();
}

void write_prepared(const fs::path& dir, const EncodedCorpus& corpus) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "vocab.tsv");
    write_vocabulary(out, corpus.vocab);
  }
  {
    auto out = open_out(dir / "train.txt");
    write_dataset(out, corpus.train);
  }
  auto manifest = open_out(dir / "periods.tsv");
  for (const auto& [period, data] : corpus.tests) {
    const std::string file = "test_" + period + ".txt";
    auto out = open_out(dir / file);
    write_dataset(out, data);
    fmt::print(manifest, "{}\t{}\t{}\n", period, file, data.n());
  }
}

PreparedData load_prepared(const fs::path& dir) {
  PreparedData out;
  {
    auto in = open_in(dir / "train.txt");
    out.train = read_dataset(in);
  }
  auto manifest = open_in(dir / "periods.tsv");
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string period;
    std::string file;
    if (!std::getline(ss, period, '\t') || !std::getline(ss, file, '\t')) {
      throw DataError("periods.tsv: malformed line");
    }
    auto in = open_in(dir / file);
    BowDataset data = read_dataset(in);
    if (data.n() > 0 && data.q() != out.train.q()) {
      throw DataError("period " + period + " has a different feature count than train");
    }
    out.tests.emplace_back(period, std::move(data));
  }
  return out;
}

PreparedData load_experiment_data(const ExperimentConfig& cfg) {
  if (!cfg.data_dir.empty()) return load_prepared(cfg.data_dir);
  if (cfg.corpus.empty()) throw ConfigError("either data_dir or corpus must be given");
  auto in = open_in(cfg.corpus);
  RawCorpus records = read_corpus_tsv(in);
  std::unordered_set<std::string> stop;
  if (!cfg.stopwords.empty()) {
    auto sw = open_in(cfg.stopwords);
    stop = read_stopwords(sw);
  }
  EncodedCorpus enc = prepare_corpus(std::move(records), {cfg.train_size, cfg.period}, stop,
                                     cfg.q_target, cfg.count_mode);
  return {std::move(enc.train), std::move(enc.tests)};
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t x = base ^ (stream * 0x9e3779b97f4a7c15ULL) ^ (index * 0xc2b2ae3d27d4eb4fULL);
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

BowDataset rows_of_class(const BowDataset& data, int label) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (data.y(i) == static_cast<double>(label)) keep.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(keep.size());
  Matrix X(n, data.q());
  for (Eigen::Index i = 0; i < n; ++i) X.row(i) = data.X.row(keep[static_cast<std::size_t>(i)]);
  return BowDataset(std::move(X), Vector::Constant(n, label));
}

Vector init_beta0(const BowDataset& adversarial_rows, std::size_t b, std::uint64_t seed) {
  const auto available = static_cast<std::size_t>(adversarial_rows.n());
  if (b < 1) throw ConfigError("beta0 sample size must be at least 1");
  if (b > available) {
    throw DataError(fmt::format("beta0 sample size {} exceeds the {} adversarial rows", b, available));
  }
  std::vector<Eigen::Index> order(available);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (available - i));
    std::swap(order[i], order[j]);
  }
  Vector sum = Vector::Zero(adversarial_rows.q());
  for (std::size_t i = 0; i < b; ++i) sum += adversarial_rows.X.row(order[i]).transpose();
  return sum / static_cast<double>(b);
}

Eigen::Index adversary_size(const BowDataset& train, double rho, int adversarial_class) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < train.n(); ++i) {
    if (train.y(i) == static_cast<double>(adversarial_class)) ++count;
  }
  const auto m = static_cast<Eigen::Index>(std::llround(rho * static_cast<double>(count)));
  return std::max<Eigen::Index>(m, 1);
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const MetricsRow& r : rows) {
    fmt::print(out, "{},{},{:g},{:g},{},{},{},{},{},{:.17g},{:.17g}\n", r.config_id, r.period, r.rho,
               r.mu, r.seed, r.counts.tp, r.counts.tn, r.counts.fp, r.counts.fn, r.p4, r.f1);
  }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::vector<MetricsRow> rows;
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw DataError("metrics CSV: unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 11) throw DataError("metrics CSV: expected 11 columns");
    try {
      MetricsRow r;
      r.config_id = f[0];
      r.period = f[1];
      r.rho = std::stod(f[2]);
      r.mu = std::stod(f[3]);
      r.seed = std::stoull(f[4]);
      r.counts = {std::stoll(f[5]), std::stoll(f[6]), std::stoll(f[7]), std::stoll(f[8])};
      r.p4 = std::stod(f[9]);
      r.f1 = std::stod(f[10]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw DataError("metrics CSV: malformed number in line '" + line + "'");
    }
  }
  return rows;
}

std::vector<MetricsRow> evaluate_periods(const std::string& config_id, const Vector& w,
                                         const PreparedData& data, double rho, double mu,
                                         std::uint64_t seed) {
  std::vector<MetricsRow> rows;
  for (const auto& [period, test] : data.tests) {
    const std::vector<int> preds = classify(w, test.X);
    std::vector<int> truths(static_cast<std::size_t>(test.n()));
    for (Eigen::Index i = 0; i < test.n(); ++i) truths[static_cast<std::size_t>(i)] = test.y(i) != 0.0;
    MetricsRow r{config_id, period, rho, mu, seed, confusion(preds, truths), 0.0, 0.0};
    r.p4 = p4_score(r.counts);
    r.f1 = f1_score(r.counts);
    rows.push_back(std::move(r));
  }
  return rows;
}

bool SweepResult::all_cells_stalled() const {
  return !cells.empty() && std::all_of(cells.begin(), cells.end(), [](const CellResult& c) {
    return c.state.status == SolverStatus::stalled;
  });
}

std::vector<CellSpec> plan_cells(const ExperimentConfig& cfg, const BowDataset& train) {
  std::vector<CellSpec> cells;
  for (const double rho : cfg.rho) {
    const Eigen::Index m = adversary_size(train, rho, cfg.adversarial_class);
    for (int b = 0; b < cfg.beta0_restarts; ++b) {
      for (const double mu : cfg.mu) {
        for (const double zeta0 : cfg.zeta0) {
          cells.push_back({fmt::format("bilevel_rho{:g}_mu{:g}_zeta{:g}_b{}", rho, mu, zeta0, b), rho,
                           mu, zeta0, b, m});
        }
      }
    }
  }
  return cells;
}

CellResult run_cell(const CellSpec& spec, const ExperimentConfig& cfg, const BowDataset& train,
                    Exec exec) {
  const Eigen::Index q = train.q();
  const BowDataset adversarial = rows_of_class(train, cfg.adversarial_class);
  const std::size_t b =
      std::min(cfg.beta0_sample_size, static_cast<std::size_t>(adversarial.n()));
  // Noise depends on (seed, m, q) only, so cells sharing rho share z.
  const NoiseMatrix z =
      NoiseMatrix::draw(spec.m, q, derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(spec.m)));
  const Vector beta0 =
      init_beta0(adversarial, b, derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(spec.beta0_index)));

  const ProblemData problem(train, z, Vector::Constant(spec.m, cfg.adversarial_class), spec.mu);
  const BilevelPoint start{Vector::Zero(q), GeneratorParams(Vector::Constant(q, cfg.alpha0), beta0),
                           spec.zeta0};
  const BilevelSystem system(problem, exec);

  CellResult out;
  out.spec = spec;
  try {
    out.state = solve(system, start.pack(), cfg.lm, exec);
  } catch (const SingularError& e) {
    out.state.point = start.pack();
    out.state.status = SolverStatus::stalled;
    out.state.residual_sq_history.push_back(system.residual(out.state.point).squaredNorm());
    out.error = e.what();
  }
  out.point = BilevelPoint::unpack(out.state.point);
  return out;
}

SweepResult run_baseline(const ExperimentConfig& cfg, const PreparedData& data) {
  cfg.validate();
  SweepResult out;
  for (const double mu : cfg.mu) {
    BaselineConfig bc = cfg.baseline;
    bc.mu = mu;
    BaselineRun run{fmt::format("baseline_mu{:g}", mu), mu, train_baseline(data.train, bc)};
    auto rows = evaluate_periods(run.id, run.result.w, data, 0.0, mu, cfg.seed);
    out.metrics.insert(out.metrics.end(), rows.begin(), rows.end());
    out.baselines.push_back(std::move(run));
  }
  return out;
}

SweepResult run_bilevel(const ExperimentConfig& cfg, const PreparedData& data) {
  SweepResult out = run_baseline(cfg, data);
  const std::vector<CellSpec> plan = plan_cells(cfg, data.train);
  out.cells.resize(plan.size());
  const auto count = static_cast<std::ptrdiff_t>(plan.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    // Nested regions are inactive by default, so each cell runs its kernels on
    // one thread. Output is identical either way.
    out.cells[idx] = run_cell(plan[idx], cfg, data.train, Exec::parallel);
  }
  for (const CellResult& cell : out.cells) {
    auto rows = evaluate_periods(cell.spec.id, cell.point.w, data, cell.spec.rho, cell.spec.mu, cfg.seed);
    out.metrics.insert(out.metrics.end(), rows.begin(), rows.end());
  }
  return out;
}

void write_weights(std::ostream& out, const Vector& w) {
  for (Eigen::Index i = 0; i < w.size(); ++i) fmt::print(out, "{:.17g}\n", w(i));
}

Vector read_weights(std::istream& in) {
  std::vector<double> values;
  double v = 0.0;
  while (in >> v) values.push_back(v);
  if (!in.eof()) throw DataError("weights file: malformed number");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_sweep(const fs::path& dir, const SweepResult& result) {
  fs::create_directories(dir / "weights");
  {
    auto out = open_out(dir / "metrics.csv");
    write_metrics_csv(out, result.metrics);
  }
  for (const BaselineRun& b : result.baselines) {
    auto out = open_out(dir / "weights" / (b.id + ".txt"));
    write_weights(out, b.result.w);
  }
  if (result.cells.empty()) return;
  fs::create_directories(dir / "traces");
  auto cells = open_out(dir / "cells.csv");
  cells << "config_id,rho,mu,zeta0,beta0_index,m,status,iterations,residual_sq,error\n";
  for (const CellResult& c : result.cells) {
    fmt::print(cells, "{},{:g},{:g},{:g},{},{},{},{},{:.17g},{}\n", c.spec.id, c.spec.rho, c.spec.mu,
               c.spec.zeta0, c.spec.beta0_index, c.spec.m, to_string(c.state.status), c.state.iter,
               c.state.residual_sq(), c.error);
    auto trace = open_out(dir / "traces" / (c.spec.id + ".csv"));
    write_trace_csv(trace, c.state.trace);
    auto weights = open_out(dir / "weights" / (c.spec.id + ".txt"));
    write_weights(weights, c.point.w);
  }
}

std::vector<PeriodSummary> summarize(const std::vector<MetricsRow>& rows) {
  std::vector<std::string> periods;
  std::map<std::string, PeriodSummary> by_period;
  std::map<std::string, std::pair<bool, bool>> seen;  // (baseline seen, cell seen)
  for (const MetricsRow& r : rows) {
    if (!by_period.contains(r.period)) {
      periods.push_back(r.period);
      by_period[r.period].period = r.period;
    }
    PeriodSummary& s = by_period[r.period];
    auto& [has_base, has_cell] = seen[r.period];
    const bool is_baseline = r.config_id.starts_with("baseline");
    if (is_baseline && (!has_base || r.p4 > s.baseline_p4)) {
      s.baseline_id = r.config_id;
      s.baseline_p4 = r.p4;
      has_base = true;
    } else if (!is_baseline && (!has_cell || r.p4 > s.best_p4)) {
      s.best_id = r.config_id;
      s.best_p4 = r.p4;
      has_cell = true;
    }
  }
  std::vector<PeriodSummary> out;
  for (const std::string& p : periods) {
    PeriodSummary s = by_period[p];
    s.delta = s.best_p4 - s.baseline_p4;
    out.push_back(std::move(s));
  }
  return out;
}

void write_report(std::ostream& out, const std::vector<MetricsRow>& rows) {
  std::vector<std::string> periods;
  std::vector<std::string> configs;
  std::map<std::pair<std::string, std::string>, double> p4;
  for (const MetricsRow& r : rows) {
    if (std::find(periods.begin(), periods.end(), r.period) == periods.end()) periods.push_back(r.period);
    if (std::find(configs.begin(), configs.end(), r.config_id) == configs.end()) configs.push_back(r.config_id);
    p4[{r.config_id, r.period}] = r.p4;
  }
  out << "config_id";
  for (const auto& p : periods) out << ',' << p;
  out << '\n';
  for (const auto& c : configs) {
    out << c;
    for (const auto& p : periods) {
      const auto it = p4.find({c, p});
      if (it == p4.end()) {
        out << ',';
      } else {
        fmt::print(out, ",{:.6f}", it->second);
      }
    }
    out << '\n';
  }
  out << "\nperiod,baseline_id,baseline_p4,best_id,best_p4,delta\n";
  for (const PeriodSummary& s : summarize(rows)) {
    fmt::print(out, "{},{},{:.6f},{},{:.6f},{:.6f}\n", s.period, s.baseline_id, s.baseline_p4,
               s.best_id, s.best_p4, s.delta);
  }
}

std::vector<CurvePoint> emit_generator_curves(const std::vector<double>& alphas,
                                              const std::vector<double>& betas, int grid_points) {
  if (grid_points < 2) throw ConfigError("generator curves need at least two grid points");
  std::vector<CurvePoint> out;
  const auto emit = [&](const char* family, double alpha, double beta) {
    for (int i = 0; i < grid_points; ++i) {
      const double v = static_cast<double>(i) / static_cast<double>(grid_points - 1);
      out.push_back({family, alpha, beta, v, smooth_step(v, alpha, beta)});
    }
  };
  for (const double a : alphas) emit("vary_alpha", a, 0.5);
  for (const double b : betas) emit("vary_beta", 100.0, b);
  return out;
}

ProblemData nonconvexity_problem(const NonconvexitySetup& setup) {
  return ProblemData(BowDataset(), NoiseMatrix(Matrix::Constant(1, 1, setup.z)),
                     Vector::Constant(1, setup.gamma), setup.mu);
}

std::vector<SurfacePoint> emit_nonconvexity_surface(const NonconvexitySetup& setup) {
  const ProblemData p = nonconvexity_problem(setup);
  const Vector w = Vector::Constant(1, setup.w);
  std::vector<SurfacePoint> out;
  for (int i = 0; i <= 80; ++i) {
    const double alpha = -10.0 + 0.25 * i;
    for (int j = 0; j <= 80; ++j) {
      const double beta = static_cast<double>(j - 20) / 40.0;
      const GeneratorParams theta(Vector::Constant(1, alpha), Vector::Constant(1, beta));
      out.push_back({alpha, beta, lower_objective(w, theta, p, Exec::serial)});
    }
  }
  return out;
}

void write_curves_csv(std::ostream& out, const std::vector<CurvePoint>& points) {
  out << "family,alpha,beta,v,t\n";
  for (const CurvePoint& p : points) {
    fmt::print(out, "{},{:g},{:g},{:.6g},{:.17g}\n", p.family, p.alpha, p.beta, p.v, p.t);
  }
}

void write_surface_csv(std::ostream& out, const std::vector<SurfacePoint>& points) {
  out << "alpha,beta,f\n";
  for (const SurfacePoint& p : points) fmt::print(out, "{:g},{:g},{:.17g}\n", p.alpha, p.beta, p.f);
}

}  // namespace advbilevel
