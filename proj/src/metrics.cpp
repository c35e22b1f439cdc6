#include "minimt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "minimt/error.hpp"
#include "minimt/util.hpp"

namespace minimt::metrics {

std::string to_string(Label label) { return label == Label::Simple ? "Simple" : "Other"; }

namespace {

using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts count_ngrams(const Words& words, int n) {
  NgramCounts counts;
  if (static_cast<int>(words.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      if (k) key += '\x1f';
      key += words[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

BleuReport bleu(const std::vector<Words>& references, const std::vector<Words>& hypotheses, int max_n) {
  if (hypotheses.empty()) data_error("BLEU needs at least one hypothesis");
  if (references.size() != hypotheses.size()) {
    data_error("BLEU: " + std::to_string(references.size()) + " references vs " + std::to_string(hypotheses.size()) +
               " hypotheses");
  }
  if (max_n < 1) usage_error("BLEU max_n must be >= 1");
  BleuReport r;
  r.max_n = max_n;
  r.matches.assign(max_n, 0);
  r.totals.assign(max_n, 0);
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    r.hyp_len += hypotheses[s].size();
    r.ref_len += references[s].size();
    for (int n = 1; n <= max_n; ++n) {
      auto hyp = count_ngrams(hypotheses[s], n);
      auto ref = count_ngrams(references[s], n);
      for (const auto& [gram, c] : hyp) {
        auto it = ref.find(gram);
        r.matches[n - 1] += std::min(c, it == ref.end() ? std::size_t{0} : it->second);
        r.totals[n - 1] += c;
      }
    }
  }
  double log_sum = 0.0;
  bool any_zero = false;
  for (int n = 0; n < max_n; ++n) {
    double p;
    if (r.matches[n] == 0) {
      any_zero = true;
      p = 1.0 / static_cast<double>(r.totals[n] + 1);
    } else {
      p = static_cast<double>(r.matches[n]) / static_cast<double>(r.totals[n]);
    }
    r.precisions.push_back(p);
    log_sum += std::log(p) / max_n;
  }
  if (r.hyp_len == 0) {
    r.brevity_penalty = 0.0;
  } else if (r.hyp_len < r.ref_len) {
    r.brevity_penalty = std::exp(1.0 - static_cast<double>(r.ref_len) / static_cast<double>(r.hyp_len));
  } else {
    r.brevity_penalty = 1.0;
  }
  r.score = std::clamp(100.0 * r.brevity_penalty * std::exp(log_sum), 0.0, 100.0);
  r.unsmoothed_score = any_zero ? 0.0 : r.score;
  return r;
}

std::size_t levenshtein(const Words& a, const Words& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

struct EditAlignment {
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t substitutions = 0;
  std::vector<long> hyp_to_ref;  // reference index for matched/substituted hypothesis words, -1 otherwise
  std::vector<bool> exact;       // hypothesis word matches its aligned reference word
};

// Full DP with backtrace; edits are from the hypothesis' point of view:
// a hypothesis word with no reference counterpart is an insertion.
EditAlignment align_edits(const Words& hyp, const Words& ref) {
  const std::size_t n = hyp.size(), m = ref.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      at(i, j) = std::min({at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1), at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  EditAlignment out;
  out.hyp_to_ref.assign(n, -1);
  out.exact.assign(n, false);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1)) {
      out.hyp_to_ref[i - 1] = static_cast<long>(j - 1);
      if (hyp[i - 1] == ref[j - 1]) {
        out.exact[i - 1] = true;
      } else {
        ++out.substitutions;
      }
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++out.insertions;
      --i;
    } else {
      ++out.deletions;
      --j;
    }
  }
  return out;
}

Words apply_shift(const Words& words, std::size_t start, std::size_t len, std::size_t dest) {
  Words rest;
  rest.reserve(words.size());
  rest.insert(rest.end(), words.begin(), words.begin() + static_cast<long>(start));
  rest.insert(rest.end(), words.begin() + static_cast<long>(start + len), words.end());
  Words out(rest.begin(), rest.begin() + static_cast<long>(dest));
  out.insert(out.end(), words.begin() + static_cast<long>(start), words.begin() + static_cast<long>(start + len));
  out.insert(out.end(), rest.begin() + static_cast<long>(dest), rest.end());
  return out;
}

constexpr std::size_t kMaxShiftLength = 10;

}  // namespace

TerReport ter(const Words& reference, const Words& hypothesis) {
  if (reference.empty()) data_error("TER is undefined for an empty reference");
  Words cur = hypothesis;
  std::size_t shifts = 0;
  for (;;) {
    const std::size_t base = levenshtein(cur, reference);
    if (base <= 1) break;  // a shift costs 1 and cannot beat a single edit
    auto align = align_edits(cur, reference);
    std::size_t best_total = base;  // a shift is kept only if 1 + lev drops below this
    std::optional<Words> best;
    const std::size_t n = cur.size();
    for (std::size_t start = 0; start < n; ++start) {
      for (std::size_t len = std::min(kMaxShiftLength, n - start); len >= 1; --len) {
        bool all_exact = true;
        for (std::size_t k = start; k < start + len; ++k) all_exact = all_exact && align.exact[k];
        if (all_exact) continue;
        for (std::size_t j = 0; j + len <= reference.size(); ++j) {
          if (!std::equal(cur.begin() + static_cast<long>(start), cur.begin() + static_cast<long>(start + len),
                          reference.begin() + static_cast<long>(j))) {
            continue;
          }
          // Destinations: directly after the hypothesis word aligned to ref[j-1],
          // or at ref position j itself.
          std::vector<std::size_t> dests;
          if (j == 0) {
            dests.push_back(0);
          } else {
            for (std::size_t h = 0; h < n; ++h) {
              if (align.hyp_to_ref[h] == static_cast<long>(j - 1) && (h < start || h >= start + len)) {
                dests.push_back(h < start ? h + 1 : h + 1 - len);
              }
            }
          }
          dests.push_back(std::min(j, n - len));
          for (auto dest : dests) {
            if (dest == start) continue;
            Words moved = apply_shift(cur, start, len, dest);
            std::size_t total = levenshtein(moved, reference) + 1;
            if (total < best_total) {
              best_total = total;
              best = std::move(moved);
            }
          }
        }
      }
    }
    if (!best) break;
    cur = std::move(*best);
    ++shifts;
  }
  auto final_align = align_edits(cur, reference);
  TerReport r;
  r.insertions = final_align.insertions;
  r.deletions = final_align.deletions;
  r.substitutions = final_align.substitutions;
  r.shifts = shifts;
  r.ref_len = reference.size();
  r.score = 100.0 * static_cast<double>(r.edits()) / static_cast<double>(r.ref_len);
  return r;
}

TerReport ter(const std::vector<Words>& references, const std::vector<Words>& hypotheses) {
  if (hypotheses.empty()) data_error("TER needs at least one hypothesis");
  if (references.size() != hypotheses.size()) data_error("TER: reference/hypothesis count mismatch");
  TerReport total;
  for (std::size_t i = 0; i < references.size(); ++i) {
    auto r = ter(references[i], hypotheses[i]);
    total.insertions += r.insertions;
    total.deletions += r.deletions;
    total.substitutions += r.substitutions;
    total.shifts += r.shifts;
    total.ref_len += r.ref_len;
  }
  total.score = 100.0 * static_cast<double>(total.edits()) / static_cast<double>(total.ref_len);
  return total;
}

ConfusionMatrix ConfusionMatrix::from_predicted_rows(const std::array<std::array<std::size_t, 2>, 2>& rows) {
  ConfusionMatrix m;
  for (int p = 0; p < 2; ++p) {
    for (int a = 0; a < 2; ++a) m.counts_[a][p] = rows[p][a];
  }
  return m;
}

void ConfusionMatrix::add(Label actual, Label predicted, std::size_t n) {
  counts_[static_cast<int>(actual)][static_cast<int>(predicted)] += n;
}

std::size_t ConfusionMatrix::at(Label actual, Label predicted) const {
  return counts_[static_cast<int>(actual)][static_cast<int>(predicted)];
}

std::size_t ConfusionMatrix::total() const {
  return counts_[0][0] + counts_[0][1] + counts_[1][0] + counts_[1][1];
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (int a = 0; a < 2; ++a) {
    for (int p = 0; p < 2; ++p) counts_[a][p] += other.counts_[a][p];
  }
  return *this;
}

ClassificationStats classification_stats(const ConfusionMatrix& m, Label positive) {
  const double total = static_cast<double>(m.total());
  if (m.total() == 0) data_error("classification_stats on an all-zero confusion matrix");
  const Label negative = positive == Label::Simple ? Label::Other : Label::Simple;
  const double tp = static_cast<double>(m.at(positive, positive));
  const double fn = static_cast<double>(m.at(positive, negative));
  const double fp = static_cast<double>(m.at(negative, positive));
  const double tn = static_cast<double>(m.at(negative, negative));

  ClassificationStats s;
  if (tp + fp > 0) s.precision = tp / (tp + fp);
  if (tp + fn > 0) s.recall = tp / (tp + fn);
  s.accuracy = (tp + tn) / total;
  if (s.precision && s.recall && *s.precision + *s.recall > 0) {
    s.f1 = 2.0 * *s.precision * *s.recall / (*s.precision + *s.recall);
  }
  const double p_o = (tp + tn) / total;
  const double p_e = ((tp + fn) / total) * ((tp + fp) / total) + ((tn + fp) / total) * ((tn + fn) / total);
  if (p_e < 1.0) s.kappa = (p_o - p_e) / (1.0 - p_e);
  return s;
}

std::string csv_escape(std::string_view field) {
  bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool row_has_content = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      row_has_content = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      row_has_content = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (row_has_content || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      row_has_content = false;
    } else {
      field += c;
      row_has_content = true;
    }
  }
  if (quoted) data_error("CSV: unterminated quoted field");
  if (row_has_content || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string make_rating_sheet(const std::vector<std::string>& sources, const std::vector<std::string>& hypotheses,
                              std::uint64_t seed, const std::vector<std::string>& sentence_ids) {
  if (sources.size() != hypotheses.size()) {
    data_error("rating sheet: " + std::to_string(sources.size()) + " sources vs " + std::to_string(hypotheses.size()) +
               " hypotheses");
  }
  if (!sentence_ids.empty() && sentence_ids.size() != sources.size()) data_error("rating sheet: id count mismatch");
  std::vector<std::size_t> order(sources.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::string out = "sentence_id,source,hypothesis,adequacy,fluency\r\n";
  for (auto i : order) {
    std::string id = sentence_ids.empty() ? std::to_string(i + 1) : sentence_ids[i];
    out += csv_escape(id) + ',' + csv_escape(sources[i]) + ',' + csv_escape(hypotheses[i]) + ",,\r\n";
  }
  return out;
}

std::vector<RatingRecord> parse_rating_sheet(std::string_view csv, const std::string& default_rater) {
  auto rows = parse_csv(csv);
  if (rows.empty()) data_error("rating sheet is empty");
  const auto& header = rows[0];
  auto column = [&](const std::string& name) -> long {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<long>(it - header.begin());
  };
  long id_col = column("sentence_id"), adq_col = column("adequacy"), flu_col = column("fluency");
  long rater_col = column("rater_id");
  if (id_col < 0 || adq_col < 0 || flu_col < 0) {
    data_error("rating sheet header needs sentence_id, adequacy and fluency columns");
  }
  auto score = [](const std::string& cell, std::size_t row, const char* what) {
    int v = 0;
    bool ok = !cell.empty() && cell.size() <= 2 && std::all_of(cell.begin(), cell.end(), ::isdigit);
    if (ok) v = std::stoi(cell);
    if (!ok || v < 1 || v > 5) {
      data_error("rating sheet row " + std::to_string(row) + ": " + what + " '" + cell + "' is not an integer in 1..5");
    }
    return v;
  };
  std::vector<RatingRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto cell = [&](long c) -> std::string { return c < static_cast<long>(row.size()) ? row[c] : std::string(); };
    RatingRecord rec;
    rec.sentence_id = cell(id_col);
    rec.rater_id = rater_col >= 0 && !cell(rater_col).empty() ? cell(rater_col) : default_rater;
    rec.adequacy = score(cell(adq_col), r + 1, "adequacy");
    rec.fluency = score(cell(flu_col), r + 1, "fluency");
    out.push_back(std::move(rec));
  }
  return out;
}

RatingSummary aggregate_ratings(const std::vector<RatingRecord>& records) {
  if (records.empty()) data_error("no rating records to aggregate");
  RatingSummary s;
  std::map<std::string, std::pair<double, double>> sums;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.adequacy < 1 || r.adequacy > 5 || r.fluency < 1 || r.fluency > 5) {
      data_error("rating record " + std::to_string(i + 1) + " has a score outside 1..5");
    }
    auto& acc = sums[r.rater_id];
    acc.first += r.adequacy;
    acc.second += r.fluency;
    ++s.raters[r.rater_id].count;
  }
  for (auto& [rater, per] : s.raters) {
    per.adequacy = sums[rater].first / static_cast<double>(per.count);
    per.fluency = sums[rater].second / static_cast<double>(per.count);
    s.avg_adequacy += per.adequacy;
    s.avg_fluency += per.fluency;
  }
  s.avg_adequacy /= static_cast<double>(s.raters.size());
  s.avg_fluency /= static_cast<double>(s.raters.size());
  return s;
}

nlohmann::json to_json(const BleuReport& r) {
  return {{"score", r.score},
          {"unsmoothed_score", r.unsmoothed_score},
          {"precisions", r.precisions},
          {"matches", r.matches},
          {"totals", r.totals},
          {"brevity_penalty", r.brevity_penalty},
          {"hyp_len", r.hyp_len},
          {"ref_len", r.ref_len},
          {"max_n", r.max_n},
          {"smoothing", r.smoothing},
          {"tokenization", r.tokenization},
          {"case_sensitive", r.case_sensitive}};
}

nlohmann::json to_json(const TerReport& r) {
  return {{"score", r.score},       {"insertions", r.insertions}, {"deletions", r.deletions},
          {"substitutions", r.substitutions}, {"shifts", r.shifts},         {"ref_len", r.ref_len},
          {"shift_search", "greedy"},         {"case_sensitive", true}};
}

nlohmann::json to_json(const ClassificationStats& s) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json { return v ? nlohmann::json(*v) : nlohmann::json("undefined"); };
  return {{"precision", opt(s.precision)},
          {"recall", opt(s.recall)},
          {"accuracy", opt(s.accuracy)},
          {"f1", opt(s.f1)},
          {"kappa", opt(s.kappa)}};
}

nlohmann::json to_json(const RatingSummary& s) {
  nlohmann::json raters = nlohmann::json::object();
  for (const auto& [id, r] : s.raters) {
    raters[id] = {{"adequacy", r.adequacy}, {"fluency", r.fluency}, {"count", r.count}};
  }
  return {{"raters", raters}, {"avg_adequacy", s.avg_adequacy}, {"avg_fluency", s.avg_fluency}};
}

}  // namespace minimt::metrics
