#include "minimt/simplex.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "minimt/error.hpp"
#include "minimt/util.hpp"

namespace minimt::simplex {

namespace {

constexpr std::array<const char*, kTagCount> kTagNames = {"NP", "VP", "PP", "ADJP", "ADVP", "PRP", "OTHER"};

const std::unordered_set<std::string> kPrepositions = {
    "in",     "on",      "at",     "by",     "for",    "with",   "from",   "to",      "of",    "about",
    "into",   "onto",    "over",   "under",  "after",  "before", "through", "during", "without", "between",
    "among",  "near",    "behind", "above",  "below",  "across", "along",  "around",  "against", "towards",
    "toward", "upon",    "within", "beside", "beyond", "inside", "outside", "until",  "like"};

const std::unordered_set<std::string> kSubjectPronouns = {"i", "you", "he", "she", "it", "we", "they"};

const std::unordered_set<std::string> kObjectPronouns = {"me",      "him",      "her",     "us",        "them",
                                                         "myself",  "yourself", "himself", "herself",   "itself",
                                                         "ourselves", "yourselves", "themselves"};

const std::unordered_set<std::string> kConjunctions = {
    "and", "but", "or", "nor", "because", "although", "though", "while", "when", "whenever", "if", "unless",
    "since", "which", "who", "whom", "whose", "that", "so", "yet", "whereas", "where", "whether", "than"};

const std::unordered_set<std::string> kVerbs = {
    "is",     "am",      "are",    "was",    "were",   "be",      "been",    "being",   "has",    "have",
    "had",    "do",      "does",   "did",    "will",   "would",   "shall",   "should",  "can",    "could",
    "may",    "might",   "must",   "go",     "goes",   "went",    "gone",    "come",    "comes",  "came",
    "run",    "runs",    "ran",    "eat",    "eats",   "ate",     "eaten",   "see",     "sees",   "saw",
    "seen",   "make",    "makes",  "made",   "take",   "takes",   "took",    "taken",   "give",   "gives",
    "gave",   "given",   "get",    "gets",   "got",    "say",     "says",    "said",    "know",   "knows",
    "knew",   "known",   "think",  "thinks", "thought", "find",   "finds",   "found",   "tell",   "tells",
    "told",   "become",  "becomes", "became", "leave", "leaves",  "left",    "feel",    "feels",  "felt",
    "bring",  "brings",  "brought", "begin", "begins", "began",   "keep",    "keeps",   "kept",   "hold",
    "holds",  "held",    "write",  "writes", "wrote",  "written", "stand",   "stands",  "stood",  "hear",
    "hears",  "heard",   "meet",   "meets",  "met",    "sit",     "sits",    "sat",     "speak",  "speaks",
    "spoke",  "read",    "reads",  "grow",   "grows",  "grew",    "buy",     "buys",    "bought", "sell",
    "sells",  "sold",    "sleep",  "sleeps", "slept",  "drink",   "drinks",  "drank",   "like",   "likes",
    "love",   "loves",   "want",   "wants",  "need",   "needs",   "live",    "lives",   "work",   "works",
    "play",   "plays",   "sing",   "sings",  "sang",   "build",   "builds",  "built",   "open",   "opens",
    "close",  "closes",  "swim",   "swims",  "swam",   "fly",     "flies",   "flew",    "teach",  "teaches",
    "taught", "catch",   "catches", "caught", "cook",  "cooks",   "drive",   "drives",  "drove",  "wash",
    "washes", "carry",   "carries", "help",  "helps",  "walk",    "walks",   "talk",    "talks",  "visit",
    "visits", "watch",   "watches", "win",   "wins",   "won",     "lose",    "loses",   "lost",   "pay",
    "pays",   "paid",    "send",   "sends",  "sent",   "wear",    "wears",   "wore",    "cut",    "cuts",
    "put",    "puts",    "sees",   "throw",  "throws", "threw",   "draw",    "draws",   "drew",   "fall",
    "falls",  "fell",    "show",   "shows",  "showed", "call",    "calls",   "ask",     "asks",   "use",
    "uses",   "study",   "studies", "cry",   "cries",  "laugh",   "laughs",  "smile",   "smiles", "stay",
    "stays",  "wait",    "waits",  "jump",   "jumps",  "dance",   "dances",  "paint",   "paints", "clean",
    "cleans", "kill",    "kills",  "lay",    "lays",   "lies",    "sees"};

const std::unordered_set<std::string> kAdverbs = {"very",   "often", "always", "never",    "soon",      "now",
                                                  "then",   "here",  "there",  "today",    "tomorrow",  "yesterday",
                                                  "also",   "too",   "again",  "already",  "still",     "not",
                                                  "seldom", "away",  "home",   "tonight",  "everywhere"};

const std::unordered_set<std::string> kAdjectives = {
    "happy", "sad",  "big",  "small", "good",  "bad",   "tall",  "short", "hot",    "cold",  "new",   "old",
    "young", "tired", "hungry", "ready", "red", "blue", "green", "white", "black",  "long",  "late",  "early",
    "busy",  "angry", "kind", "nice",  "clean", "dirty", "rich", "poor",  "strong", "weak",  "sick",  "free",
    "fast",  "slow",  "warm", "quiet", "loud",  "easy",  "hard", "open",  "full",   "empty", "bright", "dark"};

const std::unordered_set<std::string> kNotVerbIng = {"thing",   "something", "nothing", "anything", "everything",
                                                     "morning", "evening",   "king",    "ring",     "spring",
                                                     "string",  "ceiling",   "wedding", "during"};

const std::unordered_set<std::string> kNotAdverbLy = {"family", "july", "italy", "supply", "reply", "fly", "only"};

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_punctuation_token(const std::string& w) {
  return std::none_of(w.begin(), w.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u);
  });
}

bool looks_adjectival(const std::string& w) {
  return kAdjectives.count(w) || (w.size() > 5 && (ends_with(w, "ful") || ends_with(w, "ous") ||
                                                  ends_with(w, "ive") || ends_with(w, "able")));
}

ChunkTag tag_word(const std::string& w, std::optional<ChunkTag> prev) {
  if (kConjunctions.count(w)) return ChunkTag::OTHER;
  if (kPrepositions.count(w)) return ChunkTag::PP;
  if (kSubjectPronouns.count(w)) return ChunkTag::NP;
  if (kObjectPronouns.count(w)) return ChunkTag::PRP;
  if (kVerbs.count(w)) return ChunkTag::VP;
  if (kAdverbs.count(w)) return ChunkTag::ADVP;
  if (w.size() >= 4 && ends_with(w, "ly") && !kNotAdverbLy.count(w)) return ChunkTag::ADVP;
  if (w.size() >= 5 && ends_with(w, "ing") && !kNotVerbIng.count(w)) return ChunkTag::VP;
  if (w.size() >= 5 && ends_with(w, "ed")) return ChunkTag::VP;
  // Predicative adjectives follow a verb; attributive ones fold into the noun phrase.
  if (prev == ChunkTag::VP && looks_adjectival(w)) return ChunkTag::ADJP;
  if (prev == ChunkTag::ADJP && looks_adjectival(w)) return ChunkTag::ADJP;
  return ChunkTag::NP;
}

}  // namespace

std::string to_string(ChunkTag tag) { return kTagNames[static_cast<int>(tag)]; }

ChunkTag parse_tag(std::string_view text) {
  for (std::size_t i = 0; i < kTagCount; ++i) {
    if (text == kTagNames[i]) return static_cast<ChunkTag>(i);
  }
  data_error("unknown chunk tag '" + std::string(text) + "'");
}

std::string format_pattern(const Pattern& pattern) {
  std::string out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (i) out += ' ';
    out += to_string(pattern[i].tag);
    if (pattern[i].starred) out += '*';
  }
  return out;
}

Pattern parse_pattern(std::string_view text) {
  Pattern out;
  for (auto& item : split_ws(text)) {
    bool starred = !item.empty() && item.back() == '*';
    if (starred) item.pop_back();
    out.push_back({parse_tag(item), starred});
  }
  if (out.empty()) data_error("empty rule pattern");
  return out;
}

bool matches(const Pattern& pattern, const std::vector<ChunkTag>& tags) {
  const std::size_t P = pattern.size(), S = tags.size();
  // reach[i][j]: first i items consume exactly the first j tags.
  std::vector<std::vector<char>> reach(P + 1, std::vector<char>(S + 1, 0));
  reach[0][0] = 1;
  for (std::size_t i = 0; i < P; ++i) {
    for (std::size_t j = 0; j < S; ++j) {
      if (!reach[i][j]) continue;
      for (std::size_t k = j; k < S && tags[k] == pattern[i].tag; ++k) {
        reach[i + 1][k + 1] = 1;
        if (!pattern[i].starred) break;
      }
    }
  }
  return reach[P][S] != 0;
}

std::string RuleSet::serialize() const {
  std::string out = "# sentences\t" + std::to_string(source_count) + "\n";
  for (const auto& r : rules) out += format_pattern(r.pattern) + '\t' + format_double(r.confidence) + '\n';
  return out;
}

RuleSet RuleSet::parse(const std::string& text) {
  RuleSet set;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto tab = line.find('\t');
      if (line.rfind("# sentences", 0) == 0 && tab != std::string::npos) {
        set.source_count = std::stoull(line.substr(tab + 1));
      }
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos) data_error("rule line " + std::to_string(lineno) + ": expected PATTERN<TAB>confidence");
    Rule r{parse_pattern(line.substr(0, tab)), parse_double(line.substr(tab + 1))};
    if (r.confidence < 0.0 || r.confidence > 100.0) {
      data_error("rule line " + std::to_string(lineno) + ": confidence outside [0, 100]");
    }
    if (!seen.insert(format_pattern(r.pattern)).second) {
      data_error("rule line " + std::to_string(lineno) + ": duplicate pattern");
    }
    set.rules.push_back(std::move(r));
  }
  return set;
}

void RuleSet::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

RuleSet RuleSet::load(const std::filesystem::path& path) { return parse(read_file(path)); }

ChunkSequence fallback_chunk(const corpus::Sentence& sentence) {
  return fallback_chunk(sentence.words(), sentence.id());
}

ChunkSequence fallback_chunk(const std::vector<std::string>& words, std::int64_t sentence_id) {
  ChunkSequence out{sentence_id, {}};
  std::optional<ChunkTag> prev;
  for (const auto& w : words) {
    if (is_punctuation_token(w)) continue;
    ChunkTag tag = tag_word(corpus::lowercase(w), prev);
    if (!prev || *prev != tag) out.tags.push_back(tag);
    prev = tag;
  }
  if (out.tags.empty()) out.tags.push_back(ChunkTag::NP);
  return out;
}

Pattern surface_form(const ChunkSequence& chunks) {
  Pattern out;
  for (auto tag : chunks.tags) {
    if (!out.empty() && out.back().tag == tag) {
      out.back().starred = true;
    } else {
      out.push_back({tag, false});
    }
  }
  return out;
}

RuleSet mine_rules(const std::vector<ChunkSequence>& simple_chunked) {
  if (simple_chunked.empty()) data_error("cannot mine rules from an empty sentence set");
  std::map<std::string, std::pair<Pattern, std::size_t>> counts;
  for (const auto& c : simple_chunked) {
    if (c.tags.empty()) data_error("empty chunk sequence for sentence " + std::to_string(c.sentence_id));
    auto p = surface_form(c);
    auto& slot = counts[format_pattern(p)];
    slot.first = std::move(p);
    ++slot.second;
  }
  RuleSet set;
  set.source_count = simple_chunked.size();
  for (auto& [key, entry] : counts) {
    set.rules.push_back(
        {entry.first, 100.0 * static_cast<double>(entry.second) / static_cast<double>(set.source_count)});
  }
  // counts is keyed by pattern text, so stable_sort leaves equal confidences alphabetical.
  std::stable_sort(set.rules.begin(), set.rules.end(),
                   [](const Rule& a, const Rule& b) { return a.confidence > b.confidence; });
  return set;
}

Label classify_rule(const RuleSet& rules, const ChunkSequence& chunks) {
  if (rules.rules.empty()) usage_error("classify_rule needs a non-empty rule set");
  for (const auto& r : rules.rules) {
    if (matches(r.pattern, chunks.tags)) return Label::Simple;
  }
  return Label::Other;
}

Eigen::VectorXd encode_features(const ChunkSequence& chunks, std::size_t max_len) {
  if (max_len < 1) usage_error("feature max_len must be >= 1");
  constexpr std::size_t kSlots = kTagCount + 1;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(max_len * kSlots));
  for (std::size_t pos = 0; pos < max_len; ++pos) {
    std::size_t slot = pos < chunks.tags.size() ? static_cast<std::size_t>(chunks.tags[pos]) : kTagCount;
    x(static_cast<Eigen::Index>(pos * kSlots + slot)) = 1.0;
  }
  return x;
}

LabeledDataset read_labeled(const std::filesystem::path& path) {
  LabeledDataset out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) data_error(path.string() + ":" + std::to_string(lineno) + ": expected LABEL<TAB>TAGS");
    std::string label = line.substr(0, tab);
    LabeledItem item;
    if (label == "Simple") {
      item.label = Label::Simple;
    } else if (label == "Other") {
      item.label = Label::Other;
    } else {
      data_error(path.string() + ":" + std::to_string(lineno) + ": unknown label '" + label + "'");
    }
    item.chunks.sentence_id = static_cast<std::int64_t>(lineno);
    for (const auto& t : split_ws(line.substr(tab + 1))) item.chunks.tags.push_back(parse_tag(t));
    if (item.chunks.tags.empty()) data_error(path.string() + ":" + std::to_string(lineno) + ": no tags");
    out.push_back(std::move(item));
  }
  return out;
}

FfnnModel FfnnModel::init(std::size_t max_len, double range, std::uint64_t seed) {
  FfnnModel m;
  m.max_len = max_len;
  const auto in = static_cast<Eigen::Index>(max_len * (kTagCount + 1));
  Rng rng(seed);
  auto fill = [&](auto& t, Eigen::Index rows, Eigen::Index cols) {
    t.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) t(r, c) = rng.uniform(-range, range);
    }
  };
  fill(m.w1, kHidden1, in);
  fill(m.b1, kHidden1, 1);
  fill(m.w2, kHidden2, kHidden1);
  fill(m.b2, kHidden2, 1);
  fill(m.w3, 2, kHidden2);
  fill(m.b3, 2, 1);
  return m;
}

Eigen::MatrixXd FfnnModel::forward(const Eigen::MatrixXd& inputs) const {
  Eigen::MatrixXd a1 = ((w1 * inputs).colwise() + b1).array().tanh();
  Eigen::MatrixXd a2 = ((w2 * a1).colwise() + b2).array().tanh();
  return ((w3 * a2).colwise() + b3).array().tanh();
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  auto rows = j.at("rows").get<Eigen::Index>();
  auto cols = j.at("cols").get<Eigen::Index>();
  auto flat = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) model_error("FFNN tensor size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

}  // namespace

std::string FfnnModel::serialize() const {
  nlohmann::json j = {{"format", "minimt-ffnn-1"},
                      {"max_len", max_len},
                      {"w1", matrix_to_json(w1)},
                      {"b1", matrix_to_json(b1)},
                      {"w2", matrix_to_json(w2)},
                      {"b2", matrix_to_json(b2)},
                      {"w3", matrix_to_json(w3)},
                      {"b3", matrix_to_json(b3)}};
  return j.dump() + "\n";
}

FfnnModel FfnnModel::parse(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    model_error(std::string("FFNN model is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "minimt-ffnn-1") model_error("not an FFNN model file");
  FfnnModel m;
  m.max_len = j.at("max_len").get<std::size_t>();
  m.w1 = matrix_from_json(j.at("w1"));
  m.b1 = matrix_from_json(j.at("b1"));
  m.w2 = matrix_from_json(j.at("w2"));
  m.b2 = matrix_from_json(j.at("b2"));
  m.w3 = matrix_from_json(j.at("w3"));
  m.b3 = matrix_from_json(j.at("b3"));
  if (m.w1.rows() != static_cast<Eigen::Index>(kHidden1) || m.w2.rows() != static_cast<Eigen::Index>(kHidden2) ||
      m.w3.rows() != 2 || m.in_dim() != m.max_len * (kTagCount + 1)) {
    model_error("FFNN model has unexpected layer sizes");
  }
  return m;
}

Eigen::MatrixXd ffnn_targets(const std::vector<Label>& labels) {
  Eigen::MatrixXd t(2, static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    bool simple = labels[i] == Label::Simple;
    t(0, static_cast<Eigen::Index>(i)) = simple ? 1.0 : -1.0;
    t(1, static_cast<Eigen::Index>(i)) = simple ? -1.0 : 1.0;
  }
  return t;
}

double ffnn_mse(const FfnnModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  Eigen::MatrixXd diff = model.forward(inputs) - targets;
  return diff.squaredNorm() / static_cast<double>(diff.size());
}

double ffnn_mse_with_gradients(const FfnnModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                               FfnnGradients& g) {
  Eigen::MatrixXd a1 = ((model.w1 * inputs).colwise() + model.b1).array().tanh();
  Eigen::MatrixXd a2 = ((model.w2 * a1).colwise() + model.b2).array().tanh();
  Eigen::MatrixXd a3 = ((model.w3 * a2).colwise() + model.b3).array().tanh();
  Eigen::MatrixXd diff = a3 - targets;
  const double n = static_cast<double>(diff.size());

  Eigen::MatrixXd d3 = (2.0 / n) * diff.array() * (1.0 - a3.array().square());
  g.w3 = d3 * a2.transpose();
  g.b3 = d3.rowwise().sum();
  Eigen::MatrixXd d2 = (model.w3.transpose() * d3).array() * (1.0 - a2.array().square());
  g.w2 = d2 * a1.transpose();
  g.b2 = d2.rowwise().sum();
  Eigen::MatrixXd d1 = (model.w2.transpose() * d2).array() * (1.0 - a1.array().square());
  g.w1 = d1 * inputs.transpose();
  g.b1 = d1.rowwise().sum();
  return diff.squaredNorm() / n;
}

namespace {

void check_two_classes(const LabeledDataset& data) {
  bool has_simple = false, has_other = false;
  for (const auto& item : data) {
    has_simple = has_simple || item.label == Label::Simple;
    has_other = has_other || item.label == Label::Other;
  }
  if (!has_simple || !has_other) data_error("FFNN training data must contain both Simple and Other examples");
}

}  // namespace

FfnnModel train_ffnn(const LabeledDataset& data, const FfnnConfig& cfg, const EpochCallback& on_epoch) {
  if (data.size() < 2) data_error("FFNN training needs at least two examples");
  check_two_classes(data);
  if (cfg.batch_size < 1 || cfg.epochs < 1 || !(cfg.learning_rate > 0.0)) usage_error("invalid FFNN configuration");

  FfnnModel model = FfnnModel::init(cfg.max_len, cfg.init_range, cfg.seed);
  const auto in_dim = static_cast<Eigen::Index>(model.in_dim());
  Eigen::MatrixXd all_x(in_dim, static_cast<Eigen::Index>(data.size()));
  std::vector<Label> labels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    all_x.col(static_cast<Eigen::Index>(i)) = encode_features(data[i].chunks, cfg.max_len);
    labels.push_back(data[i].label);
  }
  Eigen::MatrixXd all_t = ffnn_targets(labels);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed ^ 0x5eed5eedULL);
  FfnnGradients g;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      auto b = static_cast<Eigen::Index>(end - start);
      Eigen::MatrixXd x(in_dim, b), t(2, b);
      for (std::size_t k = start; k < end; ++k) {
        x.col(static_cast<Eigen::Index>(k - start)) = all_x.col(static_cast<Eigen::Index>(order[k]));
        t.col(static_cast<Eigen::Index>(k - start)) = all_t.col(static_cast<Eigen::Index>(order[k]));
      }
      loss_sum += ffnn_mse_with_gradients(model, x, t, g);
      ++batches;
      model.w1 -= cfg.learning_rate * g.w1;
      model.b1 -= cfg.learning_rate * g.b1;
      model.w2 -= cfg.learning_rate * g.w2;
      model.b2 -= cfg.learning_rate * g.b2;
      model.w3 -= cfg.learning_rate * g.w3;
      model.b3 -= cfg.learning_rate * g.b3;
    }
    if (on_epoch) on_epoch(epoch, loss_sum / static_cast<double>(batches));
  }
  return model;
}

std::pair<Label, double> label_from_outputs(double simple_out, double other_out) {
  if (simple_out > other_out) return {Label::Simple, simple_out};
  return {Label::Other, other_out};
}

std::pair<Label, double> classify_ffnn(const FfnnModel& model, const ChunkSequence& chunks) {
  Eigen::VectorXd x = encode_features(chunks, model.max_len);
  if (static_cast<std::size_t>(x.size()) != model.in_dim()) {
    usage_error("feature dimension " + std::to_string(x.size()) + " does not match model input " +
                std::to_string(model.in_dim()));
  }
  Eigen::MatrixXd y = model.forward(x);
  return label_from_outputs(y(0, 0), y(1, 0));
}

metrics::ConfusionMatrix cross_validate(const LabeledDataset& data, std::size_t k, const FfnnConfig& cfg,
                                        std::uint64_t seed) {
  if (k < 2) usage_error("cross-validation needs k >= 2");
  if (data.size() < k) data_error("cross-validation needs at least k items");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::size_t> fold(data.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) fold[order[pos]] = pos % k;

  metrics::ConfusionMatrix total;
  for (std::size_t f = 0; f < k; ++f) {
    LabeledDataset train, test;
    for (std::size_t i = 0; i < data.size(); ++i) (fold[i] == f ? test : train).push_back(data[i]);
    FfnnModel model = train_ffnn(train, cfg);
    for (const auto& item : test) total.add(item.label, classify_ffnn(model, item.chunks).first);
  }
  return total;
}

ExtractResult extract_simple(const corpus::ParallelCorpus& corpus, const std::vector<ChunkSequence>& chunks,
                             const Classifier& classifier) {
  if (chunks.size() != corpus.size()) {
    data_error("have " + std::to_string(chunks.size()) + " chunk annotations for " + std::to_string(corpus.size()) +
               " sentence pairs");
  }
  ExtractResult out{corpus::ParallelCorpus(corpus.src_lang(), corpus.tgt_lang()), 0};
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (classifier(chunks[i]) == Label::Simple) {
      out.simple.add(corpus.pairs()[i]);
    } else {
      ++out.other_count;
    }
  }
  if (out.simple.empty()) log_warning("no sentence pair was classified Simple");
  return out;
}

std::vector<ChunkSequence> read_chunk_file(const std::filesystem::path& path) {
  std::vector<ChunkSequence> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) data_error(path.string() + ":" + std::to_string(lineno) + ": expected id<TAB>TAGS");
    ChunkSequence c;
    c.sentence_id = std::stoll(line.substr(0, tab));
    for (const auto& t : split_ws(line.substr(tab + 1))) c.tags.push_back(parse_tag(t));
    if (c.tags.empty()) data_error(path.string() + ":" + std::to_string(lineno) + ": no chunk tags");
    out.push_back(std::move(c));
  }
  return out;
}

std::string format_chunk_file(const std::vector<ChunkSequence>& chunks) {
  std::string out;
  for (const auto& c : chunks) {
    out += std::to_string(c.sentence_id) + '\t';
    for (std::size_t i = 0; i < c.tags.size(); ++i) {
      if (i) out += ' ';
      out += to_string(c.tags[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace minimt::simplex
