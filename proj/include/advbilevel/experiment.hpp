#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "advbilevel/baseline.hpp"
#include "advbilevel/corpus.hpp"
#include "advbilevel/evaluation.hpp"
#include "advbilevel/lm_solver.hpp"
#include "advbilevel/stationarity.hpp"

namespace advbilevel {

struct ExperimentConfig {
  std::string corpus;     // raw TSV corpus; used when data_dir is empty
  std::string data_dir;   // directory written by `prep`
  std::string stopwords;  // optional stopword file
  std::size_t q_target = 1000;
  std::size_t train_size = 2000;
  PeriodUnit period = PeriodUnit::year;
  CountMode count_mode = CountMode::document;
  std::vector<double> rho = {0.05, 0.075, 0.10, 0.125, 0.15, 0.20, 0.25};
  std::vector<double> mu = {0.01};
  double alpha0 = 1000.0;
  std::vector<double> zeta0 = {0.1, 1.0};
  std::size_t beta0_sample_size = 200;
  int beta0_restarts = 1;
  int adversarial_class = 1;
  std::uint64_t seed = 0;
  LmConfig lm;
  BaselineConfig baseline;

  void validate() const;
};

/// Encoded training set and ascending test periods.
struct PreparedData {
  BowDataset train;
  std::vector<std::pair<std::string, BowDataset>> tests;
};

/// Writes vocab.tsv, train.txt, one test_<period>.txt per period and a
/// periods.tsv manifest (`period<TAB>file<TAB>rows`).
void write_prepared(const std::filesystem::path& dir, const EncodedCorpus& corpus);
PreparedData load_prepared(const std::filesystem::path& dir);

/// Loads `data_dir` if set, otherwise encodes `corpus` in memory.
PreparedData load_experiment_data(const ExperimentConfig& cfg);

/// Independent stream seeds from one experiment seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

BowDataset rows_of_class(const BowDataset& data, int label);

/// Column means of b rows drawn uniformly without replacement.
Vector init_beta0(const BowDataset& adversarial_rows, std::size_t b, std::uint64_t seed);

/// round(rho * adversarial-class training rows), at least 1.
Eigen::Index adversary_size(const BowDataset& train, double rho, int adversarial_class);

struct MetricsRow {
  std::string config_id;
  std::string period;
  double rho = 0.0;
  double mu = 0.0;
  std::uint64_t seed = 0;
  ConfusionCounts counts;
  double p4 = 0.0;
  double f1 = 0.0;
};

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

std::vector<MetricsRow> evaluate_periods(const std::string& config_id, const Vector& w,
                                         const PreparedData& data, double rho, double mu,
                                         std::uint64_t seed);

struct CellSpec {
  std::string id;
  double rho = 0.0;
  double mu = 0.0;
  double zeta0 = 0.0;
  int beta0_index = 0;
  Eigen::Index m = 0;
};

struct CellResult {
  CellSpec spec;
  SolverState state;
  BilevelPoint point;
  std::string error;  // set when the solver threw
};

struct BaselineRun {
  std::string id;
  double mu = 0.0;
  BaselineResult result;
};

struct SweepResult {
  std::vector<BaselineRun> baselines;
  std::vector<CellResult> cells;
  std::vector<MetricsRow> metrics;  // baselines first, then cells in plan order

  bool all_cells_stalled() const;
};

/// Cells in plan order: rho, then beta0 restart, then mu, then zeta0.
std::vector<CellSpec> plan_cells(const ExperimentConfig& cfg, const BowDataset& train);

/// Solves one cell from w = 0, alpha = alpha0, beta = beta0, zeta = zeta0.
CellResult run_cell(const CellSpec& spec, const ExperimentConfig& cfg, const BowDataset& train,
                    Exec exec = Exec::serial);

/// Baseline per mu plus every planned cell, evaluated on every test period.
/// Cells run concurrently; output order is fixed by the plan.
SweepResult run_bilevel(const ExperimentConfig& cfg, const PreparedData& data);

SweepResult run_baseline(const ExperimentConfig& cfg, const PreparedData& data);

/// Writes metrics.csv, cells.csv, traces/<id>.csv and weights/<id>.txt.
void write_sweep(const std::filesystem::path& dir, const SweepResult& result);

/// One weight per line.
void write_weights(std::ostream& out, const Vector& w);
Vector read_weights(std::istream& in);

struct PeriodSummary {
  std::string period;
  std::string baseline_id;
  double baseline_p4 = 0.0;
  std::string best_id;
  double best_p4 = 0.0;
  double delta = 0.0;
};

/// Per period: best baseline row against best non-baseline row by P4.
std::vector<PeriodSummary> summarize(const std::vector<MetricsRow>& rows);

/// `config_id,<period>...` table of P4 for every configuration, followed by a
/// blank line and the per-period best-cell summary.
void write_report(std::ostream& out, const std::vector<MetricsRow>& rows);

// Figure data ---------------------------------------------------------------

struct CurvePoint {
  std::string family;  // "vary_alpha" or "vary_beta"
  double alpha = 0.0;
  double beta = 0.0;
  double v = 0.0;
  double t = 0.0;
};

/// Smoothed step sampled on `grid_points` evenly spaced v in [0,1]: every alpha
/// at beta = 0.5, and every beta at alpha = 100.
std::vector<CurvePoint> emit_generator_curves(const std::vector<double>& alphas,
                                              const std::vector<double>& betas,
                                              int grid_points = 201);

struct SurfacePoint {
  double alpha = 0.0;
  double beta = 0.0;
  double f = 0.0;
};

/// Single generated sample, single feature: w = 10, z = 0.5, gamma = 1, mu = 0.1.
struct NonconvexitySetup {
  double w = 10.0;
  double z = 0.5;
  double gamma = 1.0;
  double mu = 0.1;
};

ProblemData nonconvexity_problem(const NonconvexitySetup& setup = {});

/// Lower objective on alpha in [-10, 10] (step 0.25) x beta in [-0.5, 1.5] (step 0.025).
std::vector<SurfacePoint> emit_nonconvexity_surface(const NonconvexitySetup& setup = {});

void write_curves_csv(std::ostream& out, const std::vector<CurvePoint>& points);
void write_surface_csv(std::ostream& out, const std::vector<SurfacePoint>& points);

}  // namespace advbilevel
