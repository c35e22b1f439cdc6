#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace minimt::metrics {

using Words = std::vector<std::string>;

// Two-way sentence complexity label. Other sorts first, as in the confusion tables.
enum class Label : int { Other = 0, Simple = 1 };

std::string to_string(Label label);

struct BleuReport {
  int max_n = 4;
  std::vector<std::size_t> matches;  // clipped n-gram matches per order
  std::vector<std::size_t> totals;   // hypothesis n-grams per order
  std::vector<double> precisions;    // after add-one smoothing of zero matches
  double brevity_penalty = 0.0;
  double score = 0.0;             // smoothed, in [0, 100]
  double unsmoothed_score = 0.0;  // exactly 0 when some order has no match
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  std::string smoothing = "add-one-on-zero-matches";
  std::string tokenization = "whitespace";
  bool case_sensitive = true;
};

// Corpus-level BLEU with clipped n-gram counts and a single reference per hypothesis.
BleuReport bleu(const std::vector<Words>& references, const std::vector<Words>& hypotheses, int max_n = 4);

struct TerReport {
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t substitutions = 0;
  std::size_t shifts = 0;
  std::size_t ref_len = 0;
  double score = 0.0;  // 100 * edits / ref_len; may exceed 100

  std::size_t edits() const { return insertions + deletions + substitutions + shifts; }
};

std::size_t levenshtein(const Words& a, const Words& b);

// Greedy block-shift search followed by word-level Levenshtein.
TerReport ter(const Words& reference, const Words& hypothesis);
// Corpus TER: summed edits over summed reference length.
TerReport ter(const std::vector<Words>& references, const std::vector<Words>& hypotheses);

class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;

  // Builds from a table whose rows are predicted labels and whose columns are
  // gold labels, both ordered {Other, Simple}.
  static ConfusionMatrix from_predicted_rows(const std::array<std::array<std::size_t, 2>, 2>& rows);

  void add(Label actual, Label predicted, std::size_t n = 1);
  std::size_t at(Label actual, Label predicted) const;
  std::size_t total() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  // counts_[actual][predicted]
  std::array<std::array<std::size_t, 2>, 2> counts_{};
};

// Fractions in [0, 1] (kappa in [-1, 1]); nullopt where a denominator is zero.
struct ClassificationStats {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> accuracy;
  std::optional<double> f1;
  std::optional<double> kappa;
};

ClassificationStats classification_stats(const ConfusionMatrix& m, Label positive);

struct RatingRecord {
  std::string sentence_id;
  std::string rater_id;
  int adequacy = 0;
  int fluency = 0;
};

// CSV rows (sentence_id, source, hypothesis, adequacy, fluency) with the score
// columns left blank and the row order shuffled under `seed`.
std::string make_rating_sheet(const std::vector<std::string>& sources, const std::vector<std::string>& hypotheses,
                              std::uint64_t seed, const std::vector<std::string>& sentence_ids = {});

// Parses a filled-in sheet. A `rater_id` column wins over `default_rater`.
std::vector<RatingRecord> parse_rating_sheet(std::string_view csv, const std::string& default_rater);

struct RatingSummary {
  struct PerRater {
    double adequacy = 0.0;
    double fluency = 0.0;
    std::size_t count = 0;
  };
  std::map<std::string, PerRater> raters;
  double avg_adequacy = 0.0;  // mean of the rater means
  double avg_fluency = 0.0;
};

RatingSummary aggregate_ratings(const std::vector<RatingRecord>& records);

// RFC-4180 helpers.
std::string csv_escape(std::string_view field);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

nlohmann::json to_json(const BleuReport& r);
nlohmann::json to_json(const TerReport& r);
nlohmann::json to_json(const ClassificationStats& s);
nlohmann::json to_json(const RatingSummary& s);

}  // namespace minimt::metrics
