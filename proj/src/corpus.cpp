#include "advbilevel/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "advbilevel/errors.hpp"

namespace advbilevel {

namespace {

// Days since 1970-01-01 of a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2 ? 1 : 0;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(std::int64_t y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

std::string civil_date(int year, int day_of_year) {
  unsigned m = 1;
  int d = day_of_year;
  while (d >= static_cast<int>(days_in_month(year, m))) {
    d -= static_cast<int>(days_in_month(year, m));
    ++m;
  }
  return fmt::format("{:04d}-{:02d}-{:02d}", year, m, d + 1);
}

double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1p-53;
}

BowDataset sample_block(std::mt19937_64& rng, std::size_t rows, const Vector& rates0,
                        const Vector& rates1, double frac1, int year) {
  const Eigen::Index q = rates0.size();
  Matrix X = Matrix::Zero(static_cast<Eigen::Index>(rows), q);
  Vector y(static_cast<Eigen::Index>(rows));
  std::vector<std::int64_t> days(rows);
  const std::int64_t jan1 = days_from_civil(year, 1, 1);
  const int year_len = is_leap(year) ? 366 : 365;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const bool adversarial = unit_draw(rng) < frac1;
    y(r) = adversarial ? 1.0 : 0.0;
    const Vector& rates = adversarial ? rates1 : rates0;
    for (Eigen::Index j = 0; j < q; ++j) X(r, j) = unit_draw(rng) < rates(j) ? 1.0 : 0.0;
    days[i] = jan1 + static_cast<std::int64_t>(i * static_cast<std::size_t>(year_len) / rows);
  }
  return BowDataset(std::move(X), std::move(y), std::move(days));
}

}  // namespace

std::int64_t parse_iso_date(std::string_view text) {
  const auto bad = [&] { return DataError("invalid ISO-8601 date '" + std::string(text) + "'"); };
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') throw bad();
  const auto digits = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (!std::isdigit(static_cast<unsigned char>(text[i]))) throw bad();
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  const int y = digits(0, 4);
  const int m = digits(5, 2);
  const int d = digits(8, 2);
  if (m < 1 || m > 12 || d < 1 || d > static_cast<int>(days_in_month(y, static_cast<unsigned>(m)))) {
    throw bad();
  }
  if (text.size() > 10 && text[10] != 'T' && text[10] != ' ') throw bad();
  return days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

RawCorpus read_corpus_tsv(std::istream& in) {
  RawCorpus out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw DataError(fmt::format("corpus line {}: expected three tab-separated columns", line_no));
    }
    CorpusRecord rec;
    rec.date = line.substr(0, t1);
    rec.day = parse_iso_date(rec.date);
    const std::string label = line.substr(t1 + 1, t2 - t1 - 1);
    if (label != "0" && label != "1") {
      throw DataError(fmt::format("corpus line {}: label must be 0 or 1", line_no));
    }
    rec.label = label == "1" ? 1 : 0;
    rec.text = line.substr(t2 + 1);
    out.push_back(std::move(rec));
  }
  return out;
}

void write_corpus_tsv(std::ostream& out, const RawCorpus& corpus) {
  for (const CorpusRecord& r : corpus) fmt::print(out, "{}\t{}\t{}\n", r.date, r.label, r.text);
}

std::unordered_set<std::string> read_stopwords(std::istream& in) {
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.insert(line.substr(b, e - b + 1));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (const char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (u >= 0x80 || std::isalnum(u)) {
      current.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : ch);
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::unordered_map<std::string, Eigen::Index> Vocabulary::index() const {
  std::unordered_map<std::string, Eigen::Index> out;
  for (std::size_t i = 0; i < words.size(); ++i) out.emplace(words[i], static_cast<Eigen::Index>(i));
  return out;
}

Vocabulary build_vocabulary(const RawCorpus& train, const std::unordered_set<std::string>& stopwords,
                            std::size_t q_target, CountMode mode) {
  if (q_target < 1) throw ConfigError("q_target must be at least 1");
  if (train.empty()) throw DataError("cannot build a vocabulary from an empty training set");
  std::unordered_map<std::string, std::int64_t> counts;
  for (const CorpusRecord& r : train) {
    std::vector<std::string> tokens = tokenize(r.text);
    if (mode == CountMode::document) {
      std::sort(tokens.begin(), tokens.end());
      tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    }
    for (std::string& t : tokens) {
      if (!stopwords.contains(t)) ++counts[std::move(t)];
    }
  }
  if (counts.empty()) throw DataError("EmptyVocabulary: every training token is a stopword");
  std::vector<std::pair<std::string, std::int64_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  ranked.resize(std::min(ranked.size(), q_target));
  Vocabulary vocab;
  for (auto& [word, count] : ranked) {
    vocab.words.push_back(word);
    vocab.counts.push_back(count);
  }
  return vocab;
}

BowDataset encode(const RawCorpus& records, const Vocabulary& vocab) {
  if (vocab.size() == 0) throw DataError("vocabulary is empty");
  const auto index = vocab.index();
  const auto n = static_cast<Eigen::Index>(records.size());
  Matrix X = Matrix::Zero(n, static_cast<Eigen::Index>(vocab.size()));
  Vector y(n);
  std::vector<std::int64_t> days(records.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const CorpusRecord& r = records[static_cast<std::size_t>(i)];
    for (const std::string& t : tokenize(r.text)) {
      if (const auto it = index.find(t); it != index.end()) X(i, it->second) = 1.0;
    }
    y(i) = r.label;
    days[static_cast<std::size_t>(i)] = r.day;
  }
  return BowDataset(std::move(X), std::move(y), std::move(days));
}

std::string period_key(const CorpusRecord& record, PeriodUnit unit) {
  return record.date.substr(0, unit == PeriodUnit::year ? 4 : 7);
}

CorpusSplit chronological_split(RawCorpus records, const SplitSpec& spec) {
  if (records.size() < spec.train_size) {
    throw DataError(fmt::format("corpus has {} records, fewer than train_size {}", records.size(),
                                spec.train_size));
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const CorpusRecord& a, const CorpusRecord& b) { return a.day < b.day; });
  CorpusSplit split;
  const auto cut = records.begin() + static_cast<std::ptrdiff_t>(spec.train_size);
  split.train.assign(std::make_move_iterator(records.begin()), std::make_move_iterator(cut));
  std::map<std::string, RawCorpus> groups;
  for (auto it = cut; it != records.end(); ++it) {
    std::string key = period_key(*it, spec.period);
    groups[key].push_back(std::move(*it));
  }
  for (auto& [key, rows] : groups) split.tests.emplace_back(key, std::move(rows));
  return split;
}

EncodedCorpus prepare_corpus(RawCorpus records, const SplitSpec& spec,
                             const std::unordered_set<std::string>& stopwords,
                             std::size_t q_target, CountMode mode) {
  CorpusSplit split = chronological_split(std::move(records), spec);
  EncodedCorpus out;
  out.vocab = build_vocabulary(split.train, stopwords, q_target, mode);
  out.train = encode(split.train, out.vocab);
  for (const auto& [key, rows] : split.tests) out.tests.emplace_back(key, encode(rows, out.vocab));
  return out;
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < vocab.size(); ++i) fmt::print(out, "{}\t{}\n", vocab.words[i], vocab.counts[i]);
}

Vocabulary read_vocabulary(std::istream& in) {
  Vocabulary vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("vocabulary line lacks a tab");
    vocab.words.push_back(line.substr(0, tab));
    vocab.counts.push_back(std::stoll(line.substr(tab + 1)));
  }
  return vocab;
}

void write_dataset(std::ostream& out, const BowDataset& data) {
  fmt::print(out, "{} {}\n", data.n(), data.q());
  std::string row;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < data.q(); ++j) {
      row.push_back(data.X(i, j) != 0.0 ? '1' : '0');
      row.push_back(' ');
    }
    row.push_back(data.y(i) != 0.0 ? '1' : '0');
    row.push_back('\n');
    out << row;
  }
}

BowDataset read_dataset(std::istream& in) {
  long long n = -1;
  long long q = -1;
  if (!(in >> n >> q) || n < 0 || q < 0) throw DataError("dataset dump: bad `n q` header");
  Matrix X(n, q);
  Vector y(n);
  for (long long i = 0; i < n; ++i) {
    for (long long j = 0; j <= q; ++j) {
      int v = -1;
      if (!(in >> v) || (v != 0 && v != 1)) {
        throw DataError(fmt::format("dataset dump: row {} has a missing or non-binary entry", i + 1));
      }
      if (j < q) {
        X(i, j) = v;
      } else {
        y(i) = v;
      }
    }
  }
  return BowDataset(std::move(X), std::move(y));
}

void SynthConfig::validate() const {
  if (train_size < 1 || periods < 1 || period_size < 1 || q < 1) {
    throw ConfigError("synthetic corpus sizes must be positive");
  }
  if (!(drift_strength >= 0.0 && drift_strength <= 1.0)) {
    throw ConfigError("drift_strength must lie in [0, 1]");
  }
  if (!(adversarial_fraction > 0.0 && adversarial_fraction < 1.0)) {
    throw ConfigError("adversarial_fraction must lie in (0, 1)");
  }
  if (!(min_rate > 0.0 && min_rate <= max_rate && max_rate < 1.0)) {
    throw ConfigError("synthetic rates must satisfy 0 < min_rate <= max_rate < 1");
  }
}

Vector drifted_rates(const SynthCorpus& corpus, const SynthConfig& cfg, int period) {
  const double progress =
      cfg.periods == 1 ? 1.0 : static_cast<double>(period - 1) / static_cast<double>(cfg.periods - 1);
  return corpus.class1_rates +
         (cfg.drift_strength * progress) * (corpus.class0_rates - corpus.class1_rates);
}

SynthCorpus synth_drift_corpus(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  SynthCorpus out;
  out.class0_rates.resize(cfg.q);
  out.class1_rates.resize(cfg.q);
  const double span = cfg.max_rate - cfg.min_rate;
  for (Eigen::Index j = 0; j < cfg.q; ++j) out.class0_rates(j) = cfg.min_rate + span * unit_draw(rng);
  for (Eigen::Index j = 0; j < cfg.q; ++j) out.class1_rates(j) = cfg.min_rate + span * unit_draw(rng);

  out.train = sample_block(rng, cfg.train_size, out.class0_rates, out.class1_rates,
                           cfg.adversarial_fraction, cfg.first_year);
  for (int t = 1; t <= cfg.periods; ++t) {
    const int year = cfg.first_year + t;
    out.tests.emplace_back(std::to_string(year),
                           sample_block(rng, cfg.period_size, out.class0_rates,
                                        drifted_rates(out, cfg, t), cfg.adversarial_fraction, year));
  }
  return out;
}

const std::vector<std::string>& synth_stopwords() {
  static const std::vector<std::string> kWords = {"the", "and", "of", "to", "a"};
  return kWords;
}

RawCorpus render_synth_corpus(const SynthCorpus& corpus, const SynthConfig& cfg) {
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const auto& stop = synth_stopwords();
  RawCorpus out;
  const auto render_block = [&](const BowDataset& block, int year) {
    const std::int64_t jan1 = days_from_civil(year, 1, 1);
    for (Eigen::Index i = 0; i < block.n(); ++i) {
      CorpusRecord rec;
      rec.day = block.timestamps[static_cast<std::size_t>(i)];
      rec.date = civil_date(year, static_cast<int>(rec.day - jan1));
      rec.label = block.y(i) != 0.0 ? 1 : 0;
      std::string text = stop[rng() % stop.size()];
      for (Eigen::Index j = 0; j < block.q(); ++j) {
        if (block.X(i, j) == 0.0) continue;
        text += fmt::format(" F{:03d}", j);
        if (rng() % 4 == 0) text += " " + stop[rng() % stop.size()];
      }
      rec.text = std::move(text);
      out.push_back(std::move(rec));
    }
  };
  render_block(corpus.train, cfg.first_year);
  for (std::size_t t = 0; t < corpus.tests.size(); ++t) {
    render_block(corpus.tests[t].second, cfg.first_year + static_cast<int>(t) + 1);
  }
  return out;
}

}  // namespace advbilevel
