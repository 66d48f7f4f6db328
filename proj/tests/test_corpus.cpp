#include <algorithm>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "advbilevel/corpus.hpp"
#include "advbilevel/errors.hpp"
#include "doctest.h"

using namespace advbilevel;

namespace {

using Tokens = std::vector<std::string>;

CorpusRecord rec(const std::string& date, int label, const std::string& text) {
  return {date, parse_iso_date(date), label, text};
}

RawCorpus three_docs() {
  return {rec("2001-01-01", 1, "spam spam win"), rec("2001-01-02", 0, "hello win"),
          rec("2001-01-03", 1, "win")};
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("Buy NOW!!") == Tokens{"buy", "now"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("a1-b2") == Tokens{"a1", "b2"});
  CHECK(tokenize("  --  ").empty());
  CHECK(tokenize("Tab\tsep\nnew") == Tokens{"tab", "sep", "new"});
  CHECK(tokenize("caf\xc3\xa9 ok") == Tokens{"caf\xc3\xa9", "ok"});
}

TEST_CASE("dates") {
  CHECK(parse_iso_date("1970-01-01") == 0);
  CHECK(parse_iso_date("1970-01-02") == 1);
  CHECK(parse_iso_date("2000-03-01") - parse_iso_date("2000-02-28") == 2);
  CHECK(parse_iso_date("2001-03-01") - parse_iso_date("2001-02-28") == 1);
  CHECK(parse_iso_date("2004-06-15T12:00:00Z") == parse_iso_date("2004-06-15"));
  CHECK_THROWS_AS(parse_iso_date("2004/06/15"), DataError);
  CHECK_THROWS_AS(parse_iso_date("2004-13-01"), DataError);
  CHECK_THROWS_AS(parse_iso_date("2003-02-29"), DataError);
}

TEST_CASE("vocabulary") {
  SUBCASE("document frequency with lexicographic ties") {
    const Vocabulary v = build_vocabulary(three_docs(), {}, 2);
    CHECK(v.words == Tokens{"win", "hello"});
    CHECK(v.counts == std::vector<std::int64_t>{3, 1});
  }
  SUBCASE("token counts") {
    const Vocabulary v = build_vocabulary(three_docs(), {}, 2, CountMode::token);
    CHECK(v.words == Tokens{"win", "spam"});
    CHECK(v.counts == std::vector<std::int64_t>{3, 2});
  }
  SUBCASE("q_target above the number of distinct tokens") {
    const Vocabulary v = build_vocabulary(three_docs(), {}, 100);
    CHECK(v.words == Tokens{"win", "hello", "spam"});
  }
  SUBCASE("stopwords are excluded") {
    const Vocabulary v = build_vocabulary(three_docs(), {"win"}, 100);
    CHECK(v.words == Tokens{"hello", "spam"});
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(build_vocabulary(three_docs(), {"win", "spam", "hello"}, 5), DataError);
    CHECK_THROWS_AS(build_vocabulary({}, {}, 5), DataError);
    CHECK_THROWS_AS(build_vocabulary(three_docs(), {}, 0), ConfigError);
  }
  SUBCASE("record order does not matter") {
    RawCorpus docs = three_docs();
    docs.push_back(rec("2001-01-04", 0, "alpha beta gamma beta"));
    docs.push_back(rec("2001-01-05", 0, "gamma win zeta"));
    const Vocabulary ref = build_vocabulary(docs, {}, 4);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
      std::shuffle(docs.begin(), docs.end(), rng);
      const Vocabulary v = build_vocabulary(docs, {}, 4);
      CHECK(v.words == ref.words);
      CHECK(v.counts == ref.counts);
    }
  }
}

TEST_CASE("encode") {
  const Vocabulary v = build_vocabulary(three_docs(), {}, 3);  // win, hello, spam
  const RawCorpus docs = {rec("2002-01-01", 1, "Spam SPAM spam and win"), rec("2002-01-02", 0, "nothing here")};
  const BowDataset d = encode(docs, v);
  Matrix expected(2, 3);
  expected << 1, 0, 1, 0, 0, 0;
  CHECK(d.X == expected);
  CHECK(d.y(0) == 1.0);
  CHECK(d.y(1) == 0.0);
  CHECK(d.timestamps == std::vector<std::int64_t>{docs[0].day, docs[1].day});
  CHECK_THROWS_AS(encode(docs, Vocabulary{}), DataError);
}

TEST_CASE("chronological split") {
  const RawCorpus records = {rec("2003-05-01", 0, "e"), rec("2001-01-01", 1, "a"),
                             rec("2002-07-01", 0, "c"), rec("2001-06-01", 0, "b"),
                             rec("2003-01-01", 1, "d")};
  SplitSpec spec;
  spec.train_size = 3;
  const CorpusSplit s = chronological_split(records, spec);
  REQUIRE(s.train.size() == 3);
  CHECK(s.train[0].text == "a");
  CHECK(s.train[1].text == "b");
  CHECK(s.train[2].text == "c");
  REQUIRE(s.tests.size() == 1);
  CHECK(s.tests[0].first == "2003");
  CHECK(s.tests[0].second.size() == 2);
  CHECK(s.tests[0].second[0].text == "d");

  spec.period = PeriodUnit::month;
  const CorpusSplit monthly = chronological_split(records, spec);
  REQUIRE(monthly.tests.size() == 2);
  CHECK(monthly.tests[0].first == "2003-01");
  CHECK(monthly.tests[1].first == "2003-05");

  spec.train_size = 5;
  CHECK(chronological_split(records, spec).tests.empty());
  spec.train_size = 6;
  CHECK_THROWS_AS(chronological_split(records, spec), DataError);

  // Stable for equal dates, and independent of the input order otherwise.
  RawCorpus tied = {rec("2001-01-01", 0, "first"), rec("2001-01-01", 1, "second"), rec("2000-01-01", 0, "zero")};
  spec.train_size = 2;
  const CorpusSplit t = chronological_split(tied, spec);
  CHECK(t.train[0].text == "zero");
  CHECK(t.train[1].text == "first");
  CHECK(t.tests[0].second[0].text == "second");
}

TEST_CASE("split keeps every record and train precedes test") {
  SynthConfig cfg;
  cfg.train_size = 50;
  cfg.period_size = 20;
  cfg.q = 6;
  RawCorpus raw = render_synth_corpus(synth_drift_corpus(cfg), cfg);
  std::mt19937_64 rng(3);
  std::shuffle(raw.begin(), raw.end(), rng);
  SplitSpec spec;
  spec.train_size = 50;
  const CorpusSplit s = chronological_split(raw, spec);
  std::size_t total = s.train.size();
  std::int64_t last_train = 0;
  for (const auto& r : s.train) last_train = std::max(last_train, r.day);
  for (const auto& [key, rows] : s.tests) {
    total += rows.size();
    for (const auto& r : rows) CHECK(r.day >= last_train);
  }
  CHECK(total == raw.size());
  CHECK(s.tests.size() == 4);
}

TEST_CASE("TSV, vocabulary and dataset round trips") {
  const RawCorpus docs = three_docs();
  std::stringstream tsv;
  write_corpus_tsv(tsv, docs);
  CHECK(tsv.str().substr(0, 28) == "2001-01-01\t1\tspam spam win\n2");
  const RawCorpus back = read_corpus_tsv(tsv);
  REQUIRE(back.size() == 3);
  CHECK(back[1].text == "hello win");
  CHECK(back[2].day == docs[2].day);

  std::istringstream bad_label("2001-01-01\t2\ttext\n");
  CHECK_THROWS_AS(read_corpus_tsv(bad_label), DataError);
  std::istringstream missing("2001-01-01\t1\n");
  CHECK_THROWS_AS(read_corpus_tsv(missing), DataError);

  const Vocabulary v = build_vocabulary(docs, {}, 3);
  std::stringstream vs;
  write_vocabulary(vs, v);
  CHECK(vs.str() == "win\t3\nhello\t1\nspam\t1\n");
  const Vocabulary vb = read_vocabulary(vs);
  CHECK(vb.words == v.words);
  CHECK(vb.counts == v.counts);

  const BowDataset d = encode(docs, v);
  std::stringstream ds;
  write_dataset(ds, d);
  CHECK(ds.str() == "3 3\n1 0 1 1\n1 1 0 0\n1 0 0 1\n");
  const BowDataset db = read_dataset(ds);
  CHECK(db.X == d.X);
  CHECK(db.y == d.y);
  std::istringstream truncated("2 2\n1 0 1\n");
  CHECK_THROWS_AS(read_dataset(truncated), DataError);

  std::istringstream stop(" the \n\nand\n");
  const auto sw = read_stopwords(stop);
  CHECK(sw.size() == 2);
  CHECK(sw.contains("the"));
}

TEST_CASE("synthetic drift corpus") {
  SynthConfig cfg;
  cfg.q = 8;
  cfg.train_size = 300;
  cfg.period_size = 200;

  SUBCASE("deterministic for a fixed seed") {
    const SynthCorpus a = synth_drift_corpus(cfg);
    const SynthCorpus b = synth_drift_corpus(cfg);
    CHECK(a.train.X == b.train.X);
    CHECK(a.train.y == b.train.y);
    CHECK(a.tests.back().second.X == b.tests.back().second.X);
    std::ostringstream ta, tb;
    write_corpus_tsv(ta, render_synth_corpus(a, cfg));
    write_corpus_tsv(tb, render_synth_corpus(b, cfg));
    CHECK(ta.str() == tb.str());
    cfg.seed = 2;
    CHECK(synth_drift_corpus(cfg).train.X != a.train.X);
  }
  SUBCASE("no drift keeps the class-1 rates") {
    cfg.drift_strength = 0.0;
    const SynthCorpus c = synth_drift_corpus(cfg);
    for (int t = 1; t <= cfg.periods; ++t) CHECK(drifted_rates(c, cfg, t) == c.class1_rates);
  }
  SUBCASE("full drift reaches the class-0 rates in the last period") {
    cfg.drift_strength = 1.0;
    const SynthCorpus c = synth_drift_corpus(cfg);
    CHECK((drifted_rates(c, cfg, cfg.periods) - c.class0_rates).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(drifted_rates(c, cfg, 1) == c.class1_rates);
  }
  SUBCASE("shape and labels") {
    const SynthCorpus c = synth_drift_corpus(cfg);
    CHECK(c.train.n() == 300);
    CHECK(c.train.q() == 8);
    REQUIRE(c.tests.size() == 4);
    CHECK(c.tests[0].first == "2001");
    CHECK(c.tests[3].first == "2004");
    const double frac = c.train.y.mean();
    CHECK(frac > 0.4);
    CHECK(frac < 0.6);
  }
  SUBCASE("rendered text encodes back to the same matrix") {
    const SynthCorpus c = synth_drift_corpus(cfg);
    const RawCorpus raw = render_synth_corpus(c, cfg);
    CHECK(raw.size() == 300 + 4 * 200);
    Vocabulary identity;
    for (Eigen::Index j = 0; j < cfg.q; ++j) {
      identity.words.push_back(fmt::format("f{:03d}", j));
      identity.counts.push_back(0);
    }
    const RawCorpus train(raw.begin(), raw.begin() + 300);
    const BowDataset enc = encode(train, identity);
    CHECK(enc.X == c.train.X);
    CHECK(enc.y == c.train.y);
    std::unordered_set<std::string> stop(synth_stopwords().begin(), synth_stopwords().end());
    const Vocabulary v = build_vocabulary(train, stop, 1000);
    CHECK(v.size() <= static_cast<std::size_t>(cfg.q));
    for (const auto& w : v.words) CHECK(w[0] == 'f');
  }
  SUBCASE("invalid settings") {
    cfg.drift_strength = 1.5;
    CHECK_THROWS_AS(synth_drift_corpus(cfg), ConfigError);
  }
}
