#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "minimt/error.hpp"
#include "minimt/metrics.hpp"
#include "minimt/util.hpp"
#include "oracles.hpp"

using namespace minimt;
using namespace minimt::metrics;

namespace {

Words W(const std::string& s) { return split_ws(s); }

std::vector<Words> random_sentences(std::mt19937& rng, std::size_t n, std::size_t vocab = 8, std::size_t max_len = 12) {
  std::vector<Words> out;
  for (std::size_t i = 0; i < n; ++i) {
    Words w;
    std::size_t len = 1 + rng() % max_len;
    for (std::size_t k = 0; k < len; ++k) w.push_back("w" + std::to_string(rng() % vocab));
    out.push_back(w);
  }
  return out;
}

// Textbook corpus BLEU with counts kept in ordered maps of n-gram vectors.
double oracle_bleu(const std::vector<Words>& refs, const std::vector<Words>& hyps, int max_n) {
  double log_p = 0.0;
  std::size_t c = 0, r = 0;
  for (int n = 1; n <= max_n; ++n) {
    double match = 0, total = 0;
    for (std::size_t s = 0; s < hyps.size(); ++s) {
      std::map<Words, int> h, g;
      for (std::size_t i = 0; i + n <= hyps[s].size(); ++i) ++h[Words(hyps[s].begin() + i, hyps[s].begin() + i + n)];
      for (std::size_t i = 0; i + n <= refs[s].size(); ++i) ++g[Words(refs[s].begin() + i, refs[s].begin() + i + n)];
      for (auto& [k, v] : h) {
        match += std::min(v, g.count(k) ? g[k] : 0);
        total += v;
      }
    }
    if (match == 0) return 0.0;
    log_p += std::log(match / total) / max_n;
  }
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    c += hyps[s].size();
    r += refs[s].size();
  }
  double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
  return 100.0 * bp * std::exp(log_p);
}

}  // namespace

// ---- BLEU ----

TEST(Bleu, IdentityScoresHundred) {
  std::mt19937 rng(1);
  for (int t = 0; t < 50; ++t) {
    auto x = random_sentences(rng, 1 + rng() % 5);
    auto r = bleu(x, x);
    EXPECT_DOUBLE_EQ(r.score, 100.0);
    EXPECT_DOUBLE_EQ(r.brevity_penalty, 1.0);
  }
}

TEST(Bleu, ClippedUnigramPrecision) {
  auto r = bleu({W("the cat")}, {W("the the the")}, 1);
  EXPECT_EQ(r.matches[0], 1u);
  EXPECT_EQ(r.totals[0], 3u);
  EXPECT_DOUBLE_EQ(r.precisions[0], 1.0 / 3.0);
}

TEST(Bleu, ShortHypothesisIsPenalised) {
  auto r = bleu({W("a b c d e f")}, {W("a b c d")});
  EXPECT_LT(r.brevity_penalty, 1.0);
  EXPECT_NEAR(r.brevity_penalty, std::exp(1.0 - 6.0 / 4.0), 1e-15);
  EXPECT_LT(r.score, 100.0);
  for (double p : r.precisions) EXPECT_EQ(p, 1.0);
}

TEST(Bleu, MatchesTextbookOracleWhenNoOrderIsEmpty) {
  std::mt19937 rng(5);
  int compared = 0;
  for (int t = 0; t < 200; ++t) {
    auto refs = random_sentences(rng, 4, 3);
    auto hyps = random_sentences(rng, 4, 3);
    auto r = bleu(refs, hyps);
    double o = oracle_bleu(refs, hyps, 4);
    if (o > 0) {
      EXPECT_NEAR(r.score, o, 1e-9);
      EXPECT_EQ(r.unsmoothed_score, r.score);
      ++compared;
    } else {
      EXPECT_EQ(r.unsmoothed_score, 0.0);
      EXPECT_GT(r.score, 0.0);
    }
  }
  EXPECT_GT(compared, 50);
}

TEST(Bleu, RangeAndOrderInvariance) {
  std::mt19937 rng(9);
  for (int t = 0; t < 50; ++t) {
    auto refs = random_sentences(rng, 6), hyps = random_sentences(rng, 6);
    auto a = bleu(refs, hyps);
    EXPECT_GE(a.score, 0.0);
    EXPECT_LE(a.score, 100.0);
    std::vector<std::size_t> perm(refs.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Words> r2, h2;
    for (auto i : perm) {
      r2.push_back(refs[i]);
      h2.push_back(hyps[i]);
    }
    EXPECT_EQ(bleu(r2, h2).score, a.score);
  }
}

TEST(Bleu, NoMatchesIsZeroUnsmoothed) {
  auto r = bleu({W("a b c")}, {W("x y z")});
  EXPECT_EQ(r.unsmoothed_score, 0.0);
  EXPECT_GT(r.score, 0.0);
  EXPECT_EQ(r.smoothing, "add-one-on-zero-matches");
}

TEST(Bleu, Errors) {
  EXPECT_THROW(bleu({}, {}), Error);
  EXPECT_THROW(bleu({W("a")}, {W("a"), W("b")}), Error);
}

// ---- TER ----

TEST(Ter, IdentityIsZero) {
  std::mt19937 rng(2);
  for (const auto& x : random_sentences(rng, 100)) EXPECT_EQ(ter(x, x).score, 0.0);
}

TEST(Ter, SingleShiftExample) {
  auto r = ter(W("a b c d"), W("a c d b"));
  EXPECT_EQ(r.shifts, 1u);
  EXPECT_EQ(r.edits(), 1u);
  EXPECT_DOUBLE_EQ(r.score, 25.0);
}

TEST(Ter, OverLengthHypothesisExceedsHundred) {
  auto r = ter(W("a b"), W("a b x y z"));
  EXPECT_EQ(r.insertions, 3u);
  EXPECT_DOUBLE_EQ(r.score, 150.0);
}

TEST(Ter, EmptyReferenceIsAnError) { EXPECT_THROW(ter(Words{}, W("a")), Error); }

TEST(Ter, BetweenExhaustiveOptimumAndLevenshtein) {
  auto seqs = oracles::all_sequences({"a", "b", "c"}, 4);
  std::size_t with_shift = 0;
  for (const auto& hyp : seqs) {
    auto shifts = oracles::shift_distances(hyp);
    for (const auto& ref : seqs) {
      if (ref.empty()) continue;
      auto r = ter(ref, hyp);
      std::size_t lev = oracles::plain_levenshtein(hyp, ref);
      std::size_t best = oracles::exhaustive_ter_edits(shifts, ref);
      ASSERT_GE(r.edits(), best) << join(ref) << " | " << join(hyp);
      ASSERT_LE(r.edits(), lev) << join(ref) << " | " << join(hyp);
      if (best == lev) ASSERT_EQ(r.shifts, 0u);
      with_shift += r.shifts > 0;
    }
  }
  EXPECT_GT(with_shift, 0u);
}

TEST(Ter, CorpusScorePoolsEdits) {
  auto r = ter(std::vector<Words>{W("a b c d"), W("x y")}, std::vector<Words>{W("a c d b"), W("x")});
  EXPECT_EQ(r.edits(), 2u);
  EXPECT_EQ(r.ref_len, 6u);
  EXPECT_NEAR(r.score, 100.0 * 2 / 6, 1e-12);
}

TEST(Levenshtein, Basics) {
  EXPECT_EQ(levenshtein(W("a b c"), W("a b c")), 0u);
  EXPECT_EQ(levenshtein(Words{}, W("a b")), 2u);
  EXPECT_EQ(levenshtein(W("a b c"), W("a x c")), 1u);
}

// ---- classification statistics ----

TEST(ClassificationStats, PublishedConfusionTable) {
  // rows are predicted {Other, Simple}, columns gold; Other is the positive class
  auto m = ConfusionMatrix::from_predicted_rows({{{1275, 90}, {220, 1291}}});
  auto s = classification_stats(m, Label::Other);
  EXPECT_NEAR(*s.precision, 0.9341, 1e-4);
  EXPECT_NEAR(*s.recall, 0.8528, 1e-4);
  EXPECT_NEAR(*s.accuracy, 0.8922, 1e-4);
  EXPECT_NEAR(*s.f1, 0.8916, 1e-4);
  EXPECT_NEAR(*s.kappa, 0.78, 0.005);
  EXPECT_EQ(m.total(), 2876u);
}

TEST(ClassificationStats, PerfectDiagonal) {
  ConfusionMatrix m;
  m.add(Label::Simple, Label::Simple, 7);
  m.add(Label::Other, Label::Other, 5);
  for (auto pos : {Label::Simple, Label::Other}) {
    auto s = classification_stats(m, pos);
    EXPECT_EQ(*s.precision, 1.0);
    EXPECT_EQ(*s.recall, 1.0);
    EXPECT_EQ(*s.accuracy, 1.0);
    EXPECT_EQ(*s.f1, 1.0);
    EXPECT_EQ(*s.kappa, 1.0);
  }
}

TEST(ClassificationStats, IndependentPredictionsGiveZeroKappa) {
  // gold 60/40, predictions 50/50 drawn independently: every cell is a product of marginals
  ConfusionMatrix m;
  m.add(Label::Simple, Label::Simple, 30);
  m.add(Label::Simple, Label::Other, 30);
  m.add(Label::Other, Label::Simple, 20);
  m.add(Label::Other, Label::Other, 20);
  EXPECT_NEAR(*classification_stats(m, Label::Simple).kappa, 0.0, 1e-12);
}

TEST(ClassificationStats, UndefinedCellsAreMarked) {
  ConfusionMatrix m;
  m.add(Label::Other, Label::Other, 4);
  auto s = classification_stats(m, Label::Simple);
  EXPECT_FALSE(s.precision.has_value());
  EXPECT_FALSE(s.recall.has_value());
  EXPECT_EQ(*s.accuracy, 1.0);
  EXPECT_FALSE(s.kappa.has_value());
  EXPECT_EQ(to_json(s)["precision"], "undefined");
  EXPECT_THROW(classification_stats(ConfusionMatrix{}, Label::Simple), Error);
}

TEST(ClassificationStats, KappaBoundedOnRandomMatrices) {
  std::mt19937 rng(3);
  for (int t = 0; t < 500; ++t) {
    ConfusionMatrix m;
    for (auto a : {Label::Other, Label::Simple})
      for (auto p : {Label::Other, Label::Simple}) m.add(a, p, rng() % 20);
    if (m.total() == 0) continue;
    auto s = classification_stats(m, Label::Simple);
    if (s.kappa) {
      EXPECT_GE(*s.kappa, -1.0 - 1e-12);
      EXPECT_LE(*s.kappa, 1.0 + 1e-12);
    }
    EXPECT_GE(*s.accuracy, 0.0);
    EXPECT_LE(*s.accuracy, 1.0);
  }
}

// ---- ratings ----

TEST(RatingSheet, ShapeAndDeterminism) {
  std::vector<std::string> src = {"one", "two, with comma", "three \"quoted\""}, hyp = {"a", "b", "c"};
  auto sheet = make_rating_sheet(src, hyp, 11);
  auto rows = parse_csv(sheet);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"sentence_id", "source", "hypothesis", "adequacy", "fluency"}));
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    ASSERT_EQ(rows[r].size(), 5u);
    EXPECT_EQ(rows[r][3], "");
    EXPECT_EQ(rows[r][4], "");
    std::size_t i = std::stoul(rows[r][0]) - 1;
    EXPECT_EQ(rows[r][1], src[i]);
    EXPECT_EQ(rows[r][2], hyp[i]);
    seen.insert(rows[r][0]);
  }
  EXPECT_EQ(seen.size(), 3u);
  EXPECT_EQ(make_rating_sheet(src, hyp, 11), sheet);
  EXPECT_THROW(make_rating_sheet(src, {"a"}, 1), Error);
}

TEST(RatingSheet, ParseAndValidate) {
  auto recs = parse_rating_sheet("sentence_id,source,hypothesis,adequacy,fluency\n1,s,h,4,3\n2,s,h,5,1\n", "r1");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].rater_id, "r1");
  EXPECT_EQ(recs[1].adequacy, 5);
  try {
    parse_rating_sheet("sentence_id,adequacy,fluency\n1,4,3\n2,6,3\n", "r");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_rating_sheet("id,adequacy\n", "r"), Error);
}

TEST(AggregateRatings, AverageIsMeanOfRaterMeans) {
  // rater means 1.98 and 2.26 (50 ratings each) average to 2.12
  std::vector<RatingRecord> recs;
  for (int i = 0; i < 50; ++i) recs.push_back({std::to_string(i), "r1", 3, i < 49 ? 2 : 1});
  for (int i = 0; i < 50; ++i) recs.push_back({std::to_string(i), "r2", 3, i < 13 ? 3 : 2});
  auto s = aggregate_ratings(recs);
  EXPECT_NEAR(s.raters["r1"].fluency, 1.98, 1e-12);
  EXPECT_NEAR(s.raters["r2"].fluency, 2.26, 1e-12);
  EXPECT_NEAR(s.avg_fluency, 2.12, 1e-12);
  // unequal counts: still the mean of the means, not of the pooled records
  auto t = aggregate_ratings({{"1", "a", 1, 1}, {"1", "b", 5, 5}, {"2", "b", 5, 5}});
  EXPECT_DOUBLE_EQ(t.avg_adequacy, 3.0);
}

TEST(AggregateRatings, SingleRaterAndErrors) {
  auto s = aggregate_ratings({{"1", "a", 2, 4}, {"2", "a", 3, 5}});
  EXPECT_DOUBLE_EQ(s.avg_adequacy, 2.5);
  EXPECT_DOUBLE_EQ(s.avg_fluency, 4.5);
  EXPECT_THROW(aggregate_ratings({}), Error);
  EXPECT_THROW(aggregate_ratings({{"1", "a", 6, 1}}), Error);
}

TEST(Csv, RoundTripsAwkwardFields) {
  std::vector<std::string> fields = {"plain", "with,comma", "quote\"inside", "line\nbreak", "", "ক খ"};
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + csv_escape(fields[i]);
  auto rows = parse_csv(line + "\r\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0], fields);
  EXPECT_THROW(parse_csv("\"open"), Error);
}
