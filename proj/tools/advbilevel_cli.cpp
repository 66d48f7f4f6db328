// advbilevel: corpus preparation, training, sweeps and figure data.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "advbilevel/errors.hpp"
#include "advbilevel/experiment.hpp"

namespace fs = std::filesystem;
using namespace advbilevel;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitStalled = 4;

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

void add_experiment_options(CLI::App& app, ExperimentConfig& cfg) {
  const std::map<std::string, PeriodUnit> periods{{"year", PeriodUnit::year}, {"month", PeriodUnit::month}};
  const std::map<std::string, CountMode> modes{{"document", CountMode::document}, {"token", CountMode::token}};
  const std::string group = "Experiment";
  app.add_option("--corpus", cfg.corpus, "Raw TSV corpus (timestamp, label, text)")->group(group);
  app.add_option("--data_dir", cfg.data_dir, "Directory written by prep")->group(group);
  app.add_option("--stopwords", cfg.stopwords, "Stopword file, one token per line")->group(group);
  app.add_option("--q_target", cfg.q_target, "Vocabulary size")->capture_default_str()->group(group);
  app.add_option("--train_size", cfg.train_size, "Earliest rows used for training")
      ->capture_default_str()
      ->group(group);
  app.add_option("--period", cfg.period, "Test period: year or month")
      ->transform(CLI::CheckedTransformer(periods, CLI::ignore_case))
      ->option_text("year|month")
      ->group(group);
  app.add_option("--count_mode", cfg.count_mode, "Vocabulary ranking: document or token")
      ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case))
      ->option_text("document|token")
      ->group(group);
  app.add_option("--rho", cfg.rho, "Adversary sizes as fractions of the adversarial class")
      ->delimiter(',')
      ->group(group);
  app.add_option("--mu", cfg.mu, "Regularization grid")->delimiter(',')->group(group);
  app.add_option("--alpha0", cfg.alpha0, "Initial generator steepness")->capture_default_str()->group(group);
  app.add_option("--zeta0", cfg.zeta0, "Initial multiplier grid")->delimiter(',')->group(group);
  app.add_option("--beta0_sample_size", cfg.beta0_sample_size, "Rows averaged for the initial thresholds")
      ->capture_default_str()
      ->group(group);
  app.add_option("--beta0_restarts", cfg.beta0_restarts, "Independent threshold draws per cell")
      ->capture_default_str()
      ->group(group);
  app.add_option("--adversarial_class", cfg.adversarial_class, "Label the adversary generates")
      ->capture_default_str()
      ->group(group);
  app.add_option("--seed", cfg.seed, "Experiment seed")->group(group);

  const std::string lm = "Solver";
  app.add_option("--lm_epsilon", cfg.lm.epsilon, "Stop once ||Phi||^2 is at most this")
      ->capture_default_str()
      ->group(lm);
  app.add_option("--lm_max_iter", cfg.lm.max_iter)->capture_default_str()->group(lm);
  app.add_option("--lm_eta0", cfg.lm.eta0)->capture_default_str()->group(lm);
  app.add_option("--lm_kappa", cfg.lm.kappa)->capture_default_str()->group(lm);
  app.add_option("--lm_tau", cfg.lm.tau)->capture_default_str()->group(lm);
  app.add_option("--lm_omega_min", cfg.lm.omega_min)->capture_default_str()->group(lm);
  app.add_option("--lm_eta_decay", cfg.lm.eta_decay)->capture_default_str()->group(lm);
  app.add_option("--lm_eta_min", cfg.lm.eta_min)->capture_default_str()->group(lm);

  const std::string bl = "Baseline";
  app.add_option("--baseline_grad_tol", cfg.baseline.grad_tol)->capture_default_str()->group(bl);
  app.add_option("--baseline_max_iter", cfg.baseline.max_iter)->capture_default_str()->group(bl);
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  if (path.empty()) return {};
  auto in = open_in(path);
  return read_stopwords(in);
}

void write_metrics(const fs::path& out_dir, const SweepResult& result) {
  write_sweep(out_dir, result);
  fmt::print("wrote {} metrics rows to {}\n", result.metrics.size(), (out_dir / "metrics.csv").string());
}

int report_cells(const SweepResult& result) {
  for (const CellResult& c : result.cells) {
    fmt::print("{}: {} after {} iterations, ||Phi||^2 = {:.3e}{}\n", c.spec.id, to_string(c.state.status),
               c.state.iter, c.state.residual_sq(), c.error.empty() ? "" : " (" + c.error + ")");
  }
  if (result.all_cells_stalled()) {
    fmt::print(stderr, "solver stalled in all {} cells\n", result.cells.size());
    return kExitStalled;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarially robust classifiers by pessimistic bilevel training"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI file with one `key = value` per experiment option");

  ExperimentConfig cfg;
  add_experiment_options(app, cfg);

  std::string out = ".";

  auto* prep = app.add_subcommand("prep", "Split and encode a raw corpus");
  prep->add_option("--out", out, "Output directory")->required();

  auto* train_baseline = app.add_subcommand("train-baseline", "Regularized logistic regression per mu");
  train_baseline->add_option("--out", out, "Output directory")->required();

  double cell_rho = 0.1;
  double cell_zeta0 = 1.0;
  int cell_beta0 = 0;
  auto* train_bilevel = app.add_subcommand("train-bilevel", "Solve a single bilevel cell");
  train_bilevel->add_option("--out", out, "Output directory")->required();
  train_bilevel->add_option("--cell_rho", cell_rho, "Adversary size fraction")->capture_default_str();
  train_bilevel->add_option("--cell_zeta0", cell_zeta0, "Initial multiplier")->capture_default_str();
  train_bilevel->add_option("--cell_beta0_index", cell_beta0, "Threshold draw index")
      ->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Baselines plus every (rho, beta0, mu, zeta0) cell");
  sweep->add_option("--out", out, "Output directory")->required();

  std::vector<double> alphas = {1, 5, 10, 50, 100};
  std::vector<double> betas = {0.2, 0.35, 0.5, 0.65, 0.8};
  int grid = 201;
  auto* plot_gen = app.add_subcommand("plot-generator", "Smoothed step curves as CSV");
  plot_gen->add_option("--out", out, "Output CSV")->required();
  plot_gen->add_option("--alphas", alphas)->delimiter(',')->capture_default_str();
  plot_gen->add_option("--betas", betas)->delimiter(',')->capture_default_str();
  plot_gen->add_option("--grid", grid, "Points on [0,1]")->capture_default_str();

  NonconvexitySetup surface;
  auto* plot_nc = app.add_subcommand("plot-nonconvexity", "Lower objective over (alpha, beta) as CSV");
  plot_nc->add_option("--out", out, "Output CSV")->required();
  plot_nc->add_option("--w", surface.w)->capture_default_str();
  plot_nc->add_option("--z", surface.z)->capture_default_str();
  plot_nc->add_option("--gamma", surface.gamma)->capture_default_str();
  plot_nc->add_option("--surface_mu", surface.mu)->capture_default_str();

  std::vector<std::string> inputs;
  auto* report = app.add_subcommand("report", "Join metrics CSVs into a per-period P4 table");
  report->add_option("inputs", inputs, "metrics.csv files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", out, "Output CSV (default: stdout)");

  SynthConfig synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic drifting-adversary corpus as TSV");
  synth_cmd->add_option("--out", out, "Output TSV")->required();
  synth_cmd->add_option("--synth_seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--synth_q", synth.q)->capture_default_str();
  synth_cmd->add_option("--synth_train_size", synth.train_size)->capture_default_str();
  synth_cmd->add_option("--synth_periods", synth.periods)->capture_default_str();
  synth_cmd->add_option("--synth_period_size", synth.period_size)->capture_default_str();
  synth_cmd->add_option("--drift_strength", synth.drift_strength)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const bool needs_seed = app.got_subcommand(train_baseline) || app.got_subcommand(train_bilevel) ||
                            app.got_subcommand(sweep);
    if (needs_seed && app.get_option("--seed")->count() == 0) {
      throw ConfigError("--seed is required for training and sweeps");
    }

    if (app.got_subcommand(prep)) {
      if (cfg.corpus.empty()) throw ConfigError("prep needs --corpus");
      cfg.validate();
      auto in = open_in(cfg.corpus);
      EncodedCorpus enc = prepare_corpus(read_corpus_tsv(in), {cfg.train_size, cfg.period},
                                         load_stopwords(cfg.stopwords), cfg.q_target, cfg.count_mode);
      write_prepared(out, enc);
      fmt::print("{} training rows, {} test periods, {} features -> {}\n", enc.train.n(),
                 enc.tests.size(), enc.vocab.size(), out);
    } else if (app.got_subcommand(train_baseline)) {
      const PreparedData data = load_experiment_data(cfg);
      write_metrics(out, run_baseline(cfg, data));
    } else if (app.got_subcommand(train_bilevel)) {
      cfg.validate();
      const PreparedData data = load_experiment_data(cfg);
      if (cfg.mu.size() != 1) throw ConfigError("train-bilevel takes a single mu");
      if (cell_beta0 < 0) throw ConfigError("--cell_beta0_index must be nonnegative");
      CellSpec spec;
      spec.rho = cell_rho;
      spec.mu = cfg.mu.front();
      spec.zeta0 = cell_zeta0;
      spec.beta0_index = cell_beta0;
      spec.m = adversary_size(data.train, cell_rho, cfg.adversarial_class);
      spec.id = fmt::format("bilevel_rho{:g}_mu{:g}_zeta{:g}_b{}", spec.rho, spec.mu, spec.zeta0,
                            spec.beta0_index);
      SweepResult result;
      result.cells.push_back(run_cell(spec, cfg, data.train, Exec::parallel));
      const CellResult& cell = result.cells.back();
      result.metrics = evaluate_periods(spec.id, cell.point.w, data, spec.rho, spec.mu, cfg.seed);
      write_metrics(out, result);
      return report_cells(result);
    } else if (app.got_subcommand(sweep)) {
      const PreparedData data = load_experiment_data(cfg);
      const SweepResult result = run_bilevel(cfg, data);
      write_metrics(out, result);
      return report_cells(result);
    } else if (app.got_subcommand(plot_gen)) {
      auto file = open_out(out);
      write_curves_csv(file, emit_generator_curves(alphas, betas, grid));
    } else if (app.got_subcommand(plot_nc)) {
      auto file = open_out(out);
      write_surface_csv(file, emit_nonconvexity_surface(surface));
    } else if (app.got_subcommand(report)) {
      std::vector<MetricsRow> rows;
      for (const std::string& path : inputs) {
        auto in = open_in(path);
        const auto part = read_metrics_csv(in);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      if (report->get_option("--out")->count() > 0) {
        auto file = open_out(out);
        write_report(file, rows);
      } else {
        write_report(std::cout, rows);
      }
    } else if (app.got_subcommand(synth_cmd)) {
      const SynthCorpus corpus = synth_drift_corpus(synth);
      auto file = open_out(out);
      write_corpus_tsv(file, render_synth_corpus(corpus, synth));
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kExitData;
  } catch (const DimensionError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
