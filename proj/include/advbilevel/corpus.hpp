#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "advbilevel/objectives.hpp"

namespace advbilevel {

struct CorpusRecord {
  std::string date;        // ISO-8601 calendar date, YYYY-MM-DD
  std::int64_t day = 0;    // days since 1970-01-01
  int label = 0;
  std::string text;
};

using RawCorpus = std::vector<CorpusRecord>;

/// Parses YYYY-MM-DD (anything after the date, such as a time, is ignored).
std::int64_t parse_iso_date(std::string_view text);

/// Reads `timestamp<TAB>label<TAB>text` lines. Blank lines are skipped.
RawCorpus read_corpus_tsv(std::istream& in);
void write_corpus_tsv(std::ostream& out, const RawCorpus& corpus);

/// One token per line; blank lines and surrounding whitespace are ignored.
std::unordered_set<std::string> read_stopwords(std::istream& in);

/// Lowercases ASCII letters and splits on every run of characters that are
/// not ASCII alphanumerics. Bytes of multi-byte UTF-8 sequences stay inside tokens.
std::vector<std::string> tokenize(std::string_view text);

enum class CountMode { document, token };

struct Vocabulary {
  std::vector<std::string> words;    // rank order: descending count, then lexicographic
  std::vector<std::int64_t> counts;

  std::size_t size() const { return words.size(); }
  std::unordered_map<std::string, Eigen::Index> index() const;
};

Vocabulary build_vocabulary(const RawCorpus& train, const std::unordered_set<std::string>& stopwords,
                            std::size_t q_target, CountMode mode = CountMode::document);

/// Binary presence of each vocabulary word; labels and day stamps copied.
BowDataset encode(const RawCorpus& records, const Vocabulary& vocab);

enum class PeriodUnit { year, month };

struct SplitSpec {
  std::size_t train_size = 2000;
  PeriodUnit period = PeriodUnit::year;
};

std::string period_key(const CorpusRecord& record, PeriodUnit unit);

struct CorpusSplit {
  RawCorpus train;
  std::vector<std::pair<std::string, RawCorpus>> tests;  // ascending period
};

/// Stable sort by date, first train_size rows for training, the rest grouped
/// by calendar period.
CorpusSplit chronological_split(RawCorpus records, const SplitSpec& spec);

struct EncodedCorpus {
  Vocabulary vocab;
  BowDataset train;
  std::vector<std::pair<std::string, BowDataset>> tests;
};

EncodedCorpus prepare_corpus(RawCorpus records, const SplitSpec& spec,
                             const std::unordered_set<std::string>& stopwords,
                             std::size_t q_target, CountMode mode = CountMode::document);

/// `word<TAB>count` lines in rank order.
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocabulary(std::istream& in);

/// Header `n q`, then one row per sample: q space-separated 0/1 values and the label.
void write_dataset(std::ostream& out, const BowDataset& data);
BowDataset read_dataset(std::istream& in);

// Synthetic drifting-adversary corpus -------------------------------------

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t train_size = 2000;
  int periods = 4;
  std::size_t period_size = 500;
  Eigen::Index q = 50;
  double drift_strength = 0.6;
  double adversarial_fraction = 0.5;  // share of class-1 rows in every block
  double min_rate = 0.02;
  double max_rate = 0.25;
  int first_year = 2000;

  void validate() const;
};

struct SynthCorpus {
  BowDataset train;
  std::vector<std::pair<std::string, BowDataset>> tests;  // one per test year
  Vector class0_rates;
  Vector class1_rates;  // training-time rates
};

/// Per-feature occurrence rates of class 1 in test period `period` (1-based).
/// The first test period matches training; the last has moved a fraction
/// drift_strength of the way to the class-0 rates.
Vector drifted_rates(const SynthCorpus& corpus, const SynthConfig& cfg, int period);

SynthCorpus synth_drift_corpus(const SynthConfig& cfg);

/// Text rendering of a synthetic corpus: feature j appears as token `fNNN`,
/// dates fall inside the block's calendar year, and a few stopwords are mixed in.
RawCorpus render_synth_corpus(const SynthCorpus& corpus, const SynthConfig& cfg);

/// The stopwords sprinkled into rendered synthetic text.
const std::vector<std::string>& synth_stopwords();

}  // namespace advbilevel
