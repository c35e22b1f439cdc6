#include "minimt/smt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "minimt/error.hpp"
#include "minimt/util.hpp"

namespace minimt::smt {

double TranslationTable::prob(const std::string& f, const std::string& e) const {
  auto row = rows_.find(e);
  if (row == rows_.end()) return 0.0;
  auto it = row->second.find(f);
  return it == row->second.end() ? 0.0 : it->second;
}

Ibm1Trainer::Ibm1Trainer(const WordPairs& pairs) {
  if (pairs.empty()) data_error("IBM Model 1 needs a non-empty corpus");
  std::unordered_map<std::string, std::uint32_t> src_ids{{kNull, 0}}, tgt_ids;
  src_words_.push_back(kNull);
  std::unordered_map<std::uint64_t, std::size_t> slot;
  for (const auto& [src, tgt] : pairs) {
    Pair p;
    p.src.push_back(0);
    for (const auto& w : src) {
      auto [it, ins] = src_ids.emplace(w, static_cast<std::uint32_t>(src_words_.size()));
      if (ins) src_words_.push_back(w);
      p.src.push_back(it->second);
    }
    for (const auto& w : tgt) {
      auto [it, ins] = tgt_ids.emplace(w, static_cast<std::uint32_t>(tgt_words_.size()));
      if (ins) tgt_words_.push_back(w);
      p.tgt.push_back(it->second);
    }
    for (auto f : p.tgt) {
      for (auto e : p.src) {
        std::uint64_t key = (static_cast<std::uint64_t>(e) << 32) | f;
        auto [it, ins] = slot.emplace(key, params_.size());
        if (ins) params_.emplace_back(e, f);
        p.param.push_back(it->second);
      }
    }
    pairs_.push_back(std::move(p));
  }
  t_.assign(params_.size(), 1.0 / static_cast<double>(tgt_words_.size()));
}

void Ibm1Trainer::step() {
  std::vector<double> counts(params_.size(), 0.0);
  for (const auto& p : pairs_) {
    const std::size_t l = p.src.size();
    for (std::size_t j = 0; j < p.tgt.size(); ++j) {
      double denom = 0.0;
      for (std::size_t i = 0; i < l; ++i) denom += t_[p.param[j * l + i]];
      for (std::size_t i = 0; i < l; ++i) {
        std::size_t k = p.param[j * l + i];
        counts[k] += t_[k] / denom;
      }
    }
  }
  std::vector<double> totals(src_words_.size(), 0.0);
  for (std::size_t k = 0; k < params_.size(); ++k) totals[params_[k].first] += counts[k];
  for (std::size_t k = 0; k < params_.size(); ++k) t_[k] = counts[k] / totals[params_[k].first];
}

double Ibm1Trainer::log_likelihood() const {
  double ll = 0.0;
  for (const auto& p : pairs_) {
    const std::size_t l = p.src.size();
    for (std::size_t j = 0; j < p.tgt.size(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < l; ++i) s += t_[p.param[j * l + i]];
      ll += std::log(s / static_cast<double>(l));
    }
  }
  return ll;
}

TranslationTable Ibm1Trainer::table() const {
  TranslationTable t;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    t.set(src_words_[params_[k].first], tgt_words_[params_[k].second], t_[k]);
  }
  return t;
}

TranslationTable train_ibm1(const WordPairs& pairs, std::size_t iterations) {
  if (iterations < 1) usage_error("IBM Model 1 needs at least one iteration");
  Ibm1Trainer trainer(pairs);
  for (std::size_t i = 0; i < iterations; ++i) trainer.step();
  return trainer.table();
}

TranslationTable train_ibm1(const corpus::ParallelCorpus& corpus, std::size_t iterations) {
  return train_ibm1(to_word_pairs(corpus), iterations);
}

double ibm1_log_likelihood(const TranslationTable& table, const WordPairs& pairs) {
  double ll = 0.0;
  for (const auto& [src, tgt] : pairs) {
    for (const auto& f : tgt) {
      double s = table.prob(f, kNull);
      for (const auto& e : src) s += table.prob(f, e);
      ll += std::log(s / static_cast<double>(src.size() + 1));
    }
  }
  return ll;
}

WordPairs to_word_pairs(const corpus::ParallelCorpus& corpus) {
  WordPairs out;
  out.reserve(corpus.size());
  for (const auto& p : corpus.pairs()) out.emplace_back(p.source.words(), p.target.words());
  return out;
}

WordPairs reversed(const WordPairs& pairs) {
  WordPairs out;
  out.reserve(pairs.size());
  for (const auto& [s, t] : pairs) out.emplace_back(t, s);
  return out;
}

Alignment viterbi_align(const TranslationTable& t, const Words& source, const Words& target) {
  Alignment out;
  for (std::size_t j = 0; j < target.size(); ++j) {
    std::size_t best_i = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < source.size(); ++i) {
      double p = t.prob(target[j], source[i]);
      if (p > best) {
        best = p;
        best_i = i;
      }
    }
    if (!source.empty() && best >= t.prob(target[j], kNull)) out.insert({best_i, j});
  }
  return out;
}

Alignment invert(const Alignment& a) {
  Alignment out;
  for (const auto& [s, t] : a) out.insert({t, s});
  return out;
}

Alignment symmetrize(const Alignment& src_to_tgt, const Alignment& tgt_to_src) {
  Alignment uni, result;
  std::set_union(src_to_tgt.begin(), src_to_tgt.end(), tgt_to_src.begin(), tgt_to_src.end(),
                 std::inserter(uni, uni.end()));
  std::set_intersection(src_to_tgt.begin(), src_to_tgt.end(), tgt_to_src.begin(), tgt_to_src.end(),
                        std::inserter(result, result.end()));
  std::set<std::size_t> src_aligned, tgt_aligned;
  for (const auto& [s, t] : result) {
    src_aligned.insert(s);
    tgt_aligned.insert(t);
  }
  auto add = [&](const Link& l) {
    result.insert(l);
    src_aligned.insert(l.first);
    tgt_aligned.insert(l.second);
  };

  static constexpr std::array<std::pair<int, int>, 8> kNeighbours = {
      {{-1, 0}, {0, -1}, {1, 0}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}}};
  bool added = true;
  while (added) {
    added = false;
    for (auto cur = result.begin(); cur != result.end(); ++cur) {
      for (auto [ds, dt] : kNeighbours) {
        if ((ds < 0 && cur->first == 0) || (dt < 0 && cur->second == 0)) continue;
        Link cand{cur->first + ds, cur->second + dt};
        if (!uni.count(cand) || result.count(cand)) continue;
        if (!src_aligned.count(cand.first) || !tgt_aligned.count(cand.second)) {
          add(cand);
          added = true;
        }
      }
      if (added) break;  // iterators into `result` may have shifted; rescan
    }
  }
  for (const auto& l : uni) {
    if (result.count(l)) continue;
    if (!src_aligned.count(l.first) || !tgt_aligned.count(l.second)) add(l);
  }
  return result;
}

std::vector<PhrasePair> extract_phrases(const Words& source, const Words& target, const Alignment& alignment,
                                        std::size_t max_phrase_len) {
  const std::size_t n = source.size(), m = target.size();
  std::vector<std::vector<std::size_t>> src_links(n);
  std::vector<bool> tgt_aligned(m, false);
  for (const auto& [s, t] : alignment) {
    if (s >= n || t >= m) data_error("alignment link out of sentence bounds");
    src_links[s].push_back(t);
    tgt_aligned[t] = true;
  }
  std::vector<PhrasePair> out;
  for (std::size_t s1 = 0; s1 < n; ++s1) {
    for (std::size_t s2 = s1; s2 < n && s2 - s1 < max_phrase_len; ++s2) {
      std::size_t tmin = m, tmax = 0;
      bool any = false;
      for (std::size_t i = s1; i <= s2; ++i) {
        for (auto t : src_links[i]) {
          tmin = std::min(tmin, t);
          tmax = std::max(tmax, t);
          any = true;
        }
      }
      if (!any || tmax - tmin + 1 > max_phrase_len) continue;
      bool consistent = true;
      for (const auto& [s, t] : alignment) {
        if (t >= tmin && t <= tmax && (s < s1 || s > s2)) {
          consistent = false;
          break;
        }
      }
      if (!consistent) continue;
      // Grow the target span over unaligned neighbours on either side.
      for (std::size_t ts = tmin + 1; ts-- > 0;) {
        if (ts != tmin && tgt_aligned[ts]) break;
        for (std::size_t te = tmax; te < m; ++te) {
          if (te != tmax && tgt_aligned[te]) break;
          if (te - ts + 1 > max_phrase_len) break;
          PhrasePair pp;
          pp.src_begin = s1;
          pp.src_end = s2 + 1;
          pp.tgt_begin = ts;
          pp.tgt_end = te + 1;
          pp.src.assign(source.begin() + static_cast<long>(s1), source.begin() + static_cast<long>(s2 + 1));
          pp.tgt.assign(target.begin() + static_cast<long>(ts), target.begin() + static_cast<long>(te + 1));
          for (const auto& [s, t] : alignment) {
            if (s >= s1 && s <= s2 && t >= ts && t <= te) pp.links.insert({s - s1, t - ts});
          }
          out.push_back(std::move(pp));
        }
      }
    }
  }
  return out;
}

void PhraseTable::add(PhraseTableEntry entry) {
  if (entry.src.empty() || entry.tgt.empty()) data_error("phrase table entry with an empty side");
  for (double s : entry.scores) {
    if (!(s > 0.0 && s <= 1.0)) data_error("phrase score outside (0, 1] for '" + join(entry.src) + "'");
  }
  by_source_[join(entry.src)].push_back(std::move(entry));
  ++size_;
}

const std::vector<PhraseTableEntry>* PhraseTable::lookup(const Words& src) const {
  auto it = by_source_.find(join(src));
  return it == by_source_.end() ? nullptr : &it->second;
}

std::string PhraseTable::serialize() const {
  std::string out;
  for (const auto& [key, entries] : by_source_) {
    for (const auto& e : entries) {
      out += key + " ||| " + join(e.tgt) + " |||";
      for (double s : e.scores) out += ' ' + format_double(s);
      out += '\n';
    }
  }
  return out;
}

PhraseTable PhraseTable::parse(const std::string& text) {
  PhraseTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto a = line.find(" ||| ");
    auto b = a == std::string::npos ? a : line.find(" ||| ", a + 5);
    if (b == std::string::npos) data_error("phrase table line " + std::to_string(lineno) + ": expected 3 fields");
    PhraseTableEntry e;
    e.src = split_ws(line.substr(0, a));
    e.tgt = split_ws(line.substr(a + 5, b - a - 5));
    auto scores = split_ws(line.substr(b + 5));
    if (scores.size() != 4) data_error("phrase table line " + std::to_string(lineno) + ": expected 4 scores");
    for (std::size_t k = 0; k < 4; ++k) e.scores[k] = parse_double(scores[k]);
    table.add(std::move(e));
  }
  return table;
}

void PhraseTable::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

PhraseTable PhraseTable::load(const std::filesystem::path& path) { return parse(read_file(path)); }

namespace {

constexpr double kLexFloor = 1e-12;

// Per-word average over links, NULL for unaligned words, multiplied out.
double lexical_weight(const Words& from, const Words& to, const Alignment& links, const TranslationTable& t,
                      bool links_from_is_first) {
  double w = 1.0;
  for (std::size_t j = 0; j < to.size(); ++j) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& l : links) {
      std::size_t fi = links_from_is_first ? l.first : l.second;
      std::size_t tj = links_from_is_first ? l.second : l.first;
      if (tj == j) {
        sum += t.prob(to[j], from[fi]);
        ++count;
      }
    }
    w *= count ? sum / static_cast<double>(count) : t.prob(to[j], kNull);
  }
  return std::clamp(w, kLexFloor, 1.0);
}

}  // namespace

PhraseTable score_phrase_table(const std::vector<PhrasePair>& phrases, const TranslationTable& t_fwd,
                               const TranslationTable& t_rev) {
  struct Acc {
    Words src, tgt;
    std::size_t count = 0;
    double lex_ts = 0.0, lex_st = 0.0;
  };
  std::map<std::pair<std::string, std::string>, Acc> pairs;
  std::unordered_map<std::string, std::size_t> src_count, tgt_count;
  for (const auto& pp : phrases) {
    auto s = join(pp.src), t = join(pp.tgt);
    auto& acc = pairs[{s, t}];
    if (acc.count == 0) {
      acc.src = pp.src;
      acc.tgt = pp.tgt;
    }
    ++acc.count;
    ++src_count[s];
    ++tgt_count[t];
    acc.lex_ts = std::max(acc.lex_ts, lexical_weight(pp.src, pp.tgt, pp.links, t_fwd, true));
    acc.lex_st = std::max(acc.lex_st, lexical_weight(pp.tgt, pp.src, pp.links, t_rev, false));
  }
  PhraseTable table;
  for (auto& [key, acc] : pairs) {
    PhraseTableEntry e;
    e.src = acc.src;
    e.tgt = acc.tgt;
    e.scores = {static_cast<double>(acc.count) / static_cast<double>(src_count[key.first]),
                static_cast<double>(acc.count) / static_cast<double>(tgt_count[key.second]), acc.lex_ts, acc.lex_st};
    table.add(std::move(e));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Decoder

namespace {

const double kLn10 = std::log(10.0);

struct Option {
  std::size_t begin = 0, end = 0;
  const PhraseTableEntry* entry = nullptr;  // null for a copied OOV word
  Words tgt;
  std::vector<lm::WordId> tgt_ids;
  double tm = 0.0;            // weighted TM score (plus OOV penalty)
  double word_penalty = 0.0;  // weighted
  double estimate = 0.0;      // tm + word penalty + weighted context-free LM
};

struct Hyp {
  std::vector<bool> coverage;
  std::size_t covered = 0;
  std::vector<lm::WordId> lm_state;
  std::size_t last_end = 0;
  double score = 0.0;
  double future = 0.0;
  std::size_t distortion_total = 0;
  long pred = -1;
  const Option* option = nullptr;
  double lm_delta = 0.0, dist_delta = 0.0;
};

struct SignatureHash {
  std::size_t operator()(const std::tuple<std::vector<bool>, std::vector<lm::WordId>, std::size_t>& s) const {
    std::size_t h = std::hash<std::vector<bool>>()(std::get<0>(s));
    for (auto id : std::get<1>(s)) h = h * 1000003u ^ id;
    return h * 31u ^ std::get<2>(s);
  }
};

// Higher score wins; on equal scores, less reordering wins.
bool better(const Hyp& a, const Hyp& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.distortion_total < b.distortion_total;
}

// In relaxed mode every position gets a copy option unless a one-word phrase
// covers it, and reordering is unrestricted, so some complete path always exists.
std::optional<Translation> decode_pass(const Words& source, const PhraseTable& table, const lm::NGramLM& lm,
                                       const DecoderConfig& cfg, bool relaxed) {
  const std::size_t n = source.size();
  Translation result;
  result.relaxed = relaxed;
  const auto& w = cfg.weights;
  const std::size_t distortion_limit = relaxed ? DecoderConfig::kUnlimited : cfg.distortion_limit;

  // Translation options per span, pruned to the table limit by estimated score.
  std::vector<std::vector<std::vector<Option>>> options(n, std::vector<std::vector<Option>>(n + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j <= n && j - i <= cfg.max_phrase_len; ++j) {
      Words src(source.begin() + static_cast<long>(i), source.begin() + static_cast<long>(j));
      const auto* entries = table.lookup(src);
      if (!entries) continue;
      auto& opts = options[i][j];
      for (const auto& e : *entries) {
        Option o;
        o.begin = i;
        o.end = j;
        o.entry = &e;
        o.tgt = e.tgt;
        for (const auto& t : e.tgt) o.tgt_ids.push_back(lm.id(t));
        for (std::size_t k = 0; k < 4; ++k) o.tm += w.tm[k] * std::log(e.scores[k]);
        o.word_penalty = w.word_penalty * static_cast<double>(e.tgt.size());
        double lm_est = 0.0;
        for (auto id : o.tgt_ids) lm_est += lm.logprob(std::span<const lm::WordId>(), id);
        o.estimate = o.tm + o.word_penalty + w.lm * kLn10 * lm_est;
        opts.push_back(std::move(o));
      }
      std::stable_sort(opts.begin(), opts.end(),
                       [](const Option& a, const Option& b) { return a.estimate > b.estimate; });
      if (opts.size() > cfg.table_limit) opts.resize(cfg.table_limit);
    }
    bool covered = false;
    for (std::size_t b = 0; b <= i && !covered; ++b) {
      for (std::size_t e = i + 1; e <= n && !covered; ++e) covered = b < n && !options[b][e].empty();
    }
    if (!covered || (relaxed && options[i][i + 1].empty())) {
      Option o;
      o.begin = i;
      o.end = i + 1;
      o.tgt = {source[i]};
      o.tgt_ids = {lm.id(source[i])};
      o.tm = cfg.oov_penalty;
      o.word_penalty = w.word_penalty;
      o.estimate = o.tm + o.word_penalty + w.lm * kLn10 * lm.logprob(std::span<const lm::WordId>(), o.tgt_ids[0]);
      options[i][i + 1].push_back(std::move(o));
    }
  }

  // Future cost of covering each span, best split or best single option.
  const double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> fc(n + 1, std::vector<double>(n + 1, kNegInf));
  for (std::size_t len = 1; len <= n; ++len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      std::size_t j = i + len;
      double best = kNegInf;
      for (const auto& o : options[i][j]) best = std::max(best, o.estimate);
      for (std::size_t k = i + 1; k < j; ++k) best = std::max(best, fc[i][k] + fc[k][j]);
      fc[i][j] = best;
    }
  }
  auto future_of = [&](const std::vector<bool>& cov) {
    double total = 0.0;
    std::size_t i = 0;
    while (i < n) {
      if (cov[i]) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < n && !cov[j]) ++j;
      total += fc[i][j];
      i = j;
    }
    return total;
  };

  const std::size_t ctx_len = lm.order() > 0 ? lm.order() - 1 : 0;
  std::vector<Hyp> arena;
  arena.reserve(1024);
  using Signature = std::tuple<std::vector<bool>, std::vector<lm::WordId>, std::size_t>;
  std::vector<std::vector<std::size_t>> stacks(n + 1);
  std::vector<std::unordered_map<Signature, std::size_t, SignatureHash>> recombine(n + 1);

  {
    Hyp root;
    root.coverage.assign(n, false);
    if (ctx_len > 0) root.lm_state = {lm.bos_id()};
    root.future = future_of(root.coverage);
    arena.push_back(std::move(root));
    stacks[0].push_back(0);
  }

  std::vector<lm::WordId> ctx;
  for (std::size_t k = 0; k < n; ++k) {
    auto& stack = stacks[k];
    std::stable_sort(stack.begin(), stack.end(), [&](std::size_t a, std::size_t b) {
      double sa = arena[a].score + arena[a].future, sb = arena[b].score + arena[b].future;
      if (sa != sb) return sa > sb;
      return arena[a].distortion_total < arena[b].distortion_total;
    });
    if (stack.size() > cfg.beam_size) stack.resize(cfg.beam_size);

    for (std::size_t hi : stack) {
      for (std::size_t i = 0; i < n; ++i) {
        if (arena[hi].coverage[i]) continue;
        std::size_t jump = i > arena[hi].last_end ? i - arena[hi].last_end : arena[hi].last_end - i;
        if (jump > distortion_limit) continue;
        for (std::size_t j = i + 1; j <= n && !arena[hi].coverage[j - 1]; ++j) {
          for (const auto& o : options[i][j]) {
            const Hyp& h = arena[hi];
            Hyp next;
            next.coverage = h.coverage;
            for (std::size_t p = i; p < j; ++p) next.coverage[p] = true;
            next.covered = h.covered + (j - i);
            next.last_end = j;
            next.distortion_total = h.distortion_total + jump;
            ctx = h.lm_state;
            double lm_sum = 0.0;
            for (auto id : o.tgt_ids) {
              lm_sum += lm.logprob(ctx, id);
              ctx.push_back(id);
            }
            if (next.covered == n) lm_sum += lm.logprob(ctx, lm.eos_id());
            if (ctx.size() > ctx_len) ctx.erase(ctx.begin(), ctx.end() - static_cast<long>(ctx_len));
            next.lm_state = ctx;
            next.lm_delta = w.lm * kLn10 * lm_sum;
            next.dist_delta = -w.distortion * static_cast<double>(jump);
            next.score = h.score + o.tm + o.word_penalty + next.lm_delta + next.dist_delta;
            next.future = future_of(next.coverage);
            next.pred = static_cast<long>(hi);
            next.option = &o;

            Signature sig{next.coverage, next.lm_state, next.last_end};
            auto& slot = recombine[next.covered];
            auto found = slot.find(sig);
            if (found == slot.end()) {
              slot.emplace(std::move(sig), arena.size());
              stacks[next.covered].push_back(arena.size());
              arena.push_back(std::move(next));
            } else if (better(next, arena[found->second])) {
              arena[found->second] = std::move(next);
            }
          }
        }
      }
    }
  }

  if (stacks[n].empty()) return std::nullopt;
  std::size_t best = stacks[n][0];
  for (std::size_t hi : stacks[n]) {
    if (better(arena[hi], arena[best])) best = hi;
  }
  result.score = arena[best].score;
  std::vector<std::size_t> chain;
  for (long cur = static_cast<long>(best); arena[cur].pred >= 0; cur = arena[cur].pred) {
    chain.push_back(static_cast<std::size_t>(cur));
  }
  std::reverse(chain.begin(), chain.end());
  for (auto hi : chain) {
    const Hyp& h = arena[hi];
    const Option& o = *h.option;
    TraceStep step;
    step.src_begin = o.begin;
    step.src_end = o.end;
    step.src.assign(source.begin() + static_cast<long>(o.begin), source.begin() + static_cast<long>(o.end));
    step.tgt = o.tgt;
    step.tm = o.tm;
    step.lm = h.lm_delta;
    step.distortion = h.dist_delta;
    step.word_penalty = o.word_penalty;
    step.oov = o.entry == nullptr;
    result.words.insert(result.words.end(), o.tgt.begin(), o.tgt.end());
    result.trace.push_back(std::move(step));
  }
  return result;
}

}  // namespace

Translation decode(const Words& source, const PhraseTable& table, const lm::NGramLM& lm, const DecoderConfig& cfg) {
  if (table.empty()) data_error("cannot decode with an empty phrase table");
  if (cfg.beam_size < 1) usage_error("beam_size must be >= 1");
  if (source.empty()) {
    Translation result;
    std::vector<lm::WordId> ctx{lm.bos_id()};
    result.score = cfg.weights.lm * kLn10 * lm.logprob(ctx, lm.eos_id());
    return result;
  }
  if (auto t = decode_pass(source, table, lm, cfg, false)) return std::move(*t);
  // Distortion limits or phrase overlaps can strand a gap; retry without them.
  if (auto t = decode_pass(source, table, lm, cfg, true)) return std::move(*t);
  data_error("decoder found no complete translation");
}

nlohmann::json Translation::trace_json(const Words& source) const {
  nlohmann::json steps = nlohmann::json::array();
  double tm = 0, lmv = 0, dist = 0, wp = 0;
  for (const auto& s : trace) {
    steps.push_back({{"src_span", {s.src_begin, s.src_end}},
                     {"src", join(s.src)},
                     {"tgt", join(s.tgt)},
                     {"tm", s.tm},
                     {"lm", s.lm},
                     {"distortion", s.distortion},
                     {"word_penalty", s.word_penalty},
                     {"oov", s.oov}});
    tm += s.tm;
    lmv += s.lm;
    dist += s.distortion;
    wp += s.word_penalty;
  }
  return {{"source", join(source)},
          {"translation", join(words)},
          {"score", score},
          {"relaxed", relaxed},
          {"features", {{"tm", tm}, {"lm", lmv}, {"distortion", dist}, {"word_penalty", wp}}},
          {"steps", steps}};
}

SmtSystem train_smt(const corpus::ParallelCorpus& corpus, const SmtTrainOptions& options) {
  auto pairs = to_word_pairs(corpus);
  auto t_fwd = train_ibm1(pairs, options.ibm_iterations);
  auto t_rev = train_ibm1(reversed(pairs), options.ibm_iterations);
  std::vector<PhrasePair> phrases;
  for (const auto& [src, tgt] : pairs) {
    auto a_fwd = viterbi_align(t_fwd, src, tgt);
    auto a_rev = invert(viterbi_align(t_rev, tgt, src));
    auto sym = symmetrize(a_fwd, a_rev);
    auto extracted = extract_phrases(src, tgt, sym, options.max_phrase_len);
    phrases.insert(phrases.end(), std::make_move_iterator(extracted.begin()),
                   std::make_move_iterator(extracted.end()));
  }
  std::vector<Words> targets;
  for (const auto& [src, tgt] : pairs) targets.push_back(tgt);
  return SmtSystem{score_phrase_table(phrases, t_fwd, t_rev), lm::train_lm(targets, options.lm)};
}

}  // namespace minimt::smt
