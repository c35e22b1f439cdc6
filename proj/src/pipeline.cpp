#include "minimt/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "minimt/error.hpp"
#include "minimt/lm.hpp"
#include "minimt/manifest.hpp"
#include "minimt/util.hpp"

namespace minimt::pipeline {

namespace {

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    data_error("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) data_error("cannot create directory " + dir.string() + ": " + ec.message());
}

std::vector<std::string> sentence_texts(const std::vector<corpus::Sentence>& sentences) {
  std::vector<std::string> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(s.text());
  return out;
}

}  // namespace

std::vector<fs::path> corpus_files(const fs::path& dir) {
  return {dir / "corpus.src", dir / "corpus.tgt", dir / "corpus.ids", dir / "corpus.json"};
}

corpus::ParallelCorpus load_corpus_dir(const fs::path& dir) {
  auto files = corpus_files(dir);
  for (const auto& f : files) {
    if (!fs::exists(f)) data_error("missing corpus file " + f.string() + " (run preprocess first)");
  }
  auto meta = read_json(files[3]);
  return corpus::read_parallel(files[0], files[1], meta.value("src_lang", "src"), meta.value("tgt_lang", "tgt"),
                               files[2]);
}

std::vector<fs::path> save_corpus_dir(const corpus::ParallelCorpus& corpus, const fs::path& dir) {
  make_dir(dir);
  auto files = corpus_files(dir);
  corpus::write_parallel(corpus, files[0], files[1], files[2]);
  write_json(files[3], {{"src_lang", corpus.src_lang()}, {"tgt_lang", corpus.tgt_lang()}, {"pairs", corpus.size()}});
  return files;
}

void guard_outputs(const std::vector<fs::path>& paths, bool force) {
  if (force) return;
  for (const auto& p : paths) {
    if (fs::exists(p)) usage_error(p.string() + " already exists; pass --force to overwrite");
  }
}

// ---------------------------------------------------------------------------
// preprocess

PreprocessSummary preprocess(const PreprocessOptions& opts) {
  auto src_lines = read_lines(opts.src_file);
  auto tgt_lines = read_lines(opts.tgt_file);
  if (src_lines.size() != tgt_lines.size()) {
    data_error("line count mismatch: " + opts.src_file.string() + " has " + std::to_string(src_lines.size()) +
               " lines, " + opts.tgt_file.string() + " has " + std::to_string(tgt_lines.size()));
  }
  auto outputs = corpus_files(opts.out_dir);
  for (const char* name : {"vocab.src", "vocab.tgt", "preprocess.json", "manifest.json"}) {
    outputs.push_back(opts.out_dir / name);
  }
  guard_outputs(outputs, opts.force);
  make_dir(opts.out_dir);

  nlohmann::json config = {{"src_file", opts.src_file.string()}, {"tgt_file", opts.tgt_file.string()},
                           {"out_dir", opts.out_dir.string()},   {"src_lang", opts.src_lang},
                           {"tgt_lang", opts.tgt_lang},          {"max_len", opts.max_len}};
  RunManifest manifest("preprocess", config, 0);
  manifest.add_input(opts.src_file);
  manifest.add_input(opts.tgt_file);
  manifest.begin(opts.out_dir / "manifest.json");

  auto tokenize_side = [](const std::vector<std::string>& lines, const fs::path& file) {
    std::vector<corpus::Sentence> out;
    out.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      try {
        out.emplace_back(static_cast<std::int64_t>(i + 1), corpus::tokenize(lines[i]));
      } catch (const Error& e) {
        data_error(file.string() + " line " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    return out;
  };
  auto src = tokenize_side(src_lines, opts.src_file);
  auto tgt = tokenize_side(tgt_lines, opts.tgt_file);

  PreprocessSummary summary;
  summary.input_pairs = src.size();
  auto maybe_truecase = [](std::vector<corpus::Sentence>& side) {
    if (side.empty() || !corpus::is_latin_script(side)) return false;
    auto model = corpus::train_truecaser(side);
    for (auto& s : side) s = corpus::truecase(model, s);
    return true;
  };
  summary.truecased_src = maybe_truecase(src);
  summary.truecased_tgt = maybe_truecase(tgt);

  corpus::ParallelCorpus raw(opts.src_lang, opts.tgt_lang);
  for (std::size_t i = 0; i < src.size(); ++i) raw.add({src[i], tgt[i]});
  if (raw.empty()) data_error("input files are empty");
  auto cleaned = corpus::clean_pairs(raw, opts.max_len);
  summary.kept_pairs = cleaned.size();

  save_corpus_dir(cleaned, opts.out_dir);
  corpus::build_vocab(cleaned.sources()).save(opts.out_dir / "vocab.src");
  corpus::build_vocab(cleaned.targets()).save(opts.out_dir / "vocab.tgt");
  write_json(opts.out_dir / "preprocess.json", {{"input_pairs", summary.input_pairs},
                                                {"kept_pairs", summary.kept_pairs},
                                                {"dropped_pairs", summary.input_pairs - summary.kept_pairs},
                                                {"max_len", opts.max_len},
                                                {"truecased", {{"src", summary.truecased_src}, {"tgt", summary.truecased_tgt}}}});
  for (std::size_t i = 0; i + 1 < outputs.size(); ++i) manifest.add_output(outputs[i]);
  manifest.finish();
  return summary;
}

// ---------------------------------------------------------------------------
// extract-simple

ExtractSummary extract_simple(const ExtractOptions& opts) {
  if (opts.method != "rules" && opts.method != "ffnn") {
    usage_error("unknown extraction method '" + opts.method + "' (expected rules or ffnn)");
  }
  auto corpus = load_corpus_dir(opts.corpus_dir);

  std::vector<simplex::ChunkSequence> chunks;
  if (!opts.chunks_file.empty()) {
    std::map<std::int64_t, simplex::ChunkSequence> by_id;
    for (auto& c : simplex::read_chunk_file(opts.chunks_file)) by_id.emplace(c.sentence_id, std::move(c));
    for (const auto& p : corpus.pairs()) {
      auto it = by_id.find(p.source.id());
      if (it == by_id.end()) data_error("chunk file has no entry for sentence id " + std::to_string(p.source.id()));
      chunks.push_back(it->second);
    }
  } else if (opts.allow_fallback) {
    for (const auto& p : corpus.pairs()) chunks.push_back(simplex::fallback_chunk(p.source));
  } else {
    usage_error("no chunk annotations: pass --chunks FILE or --allow-fallback for the heuristic chunker");
  }

  auto outputs = corpus_files(opts.out_dir);
  outputs.push_back(opts.out_dir / "counts.json");
  outputs.push_back(opts.out_dir / (opts.method == "rules" ? "rules.tsv" : "ffnn.json"));
  guard_outputs(outputs, opts.force);
  make_dir(opts.out_dir);

  nlohmann::json config = {{"corpus_dir", opts.corpus_dir.string()}, {"method", opts.method},
                           {"chunks_file", opts.chunks_file.string()}, {"allow_fallback", opts.allow_fallback},
                           {"rules_file", opts.rules_file.string()},   {"labeled_file", opts.labeled_file.string()},
                           {"ffnn_model", opts.ffnn_model.string()},
                           {"ffnn", {{"learning_rate", opts.ffnn.learning_rate}, {"epochs", opts.ffnn.epochs},
                                     {"batch_size", opts.ffnn.batch_size}, {"max_len", opts.ffnn.max_len},
                                     {"seed", opts.ffnn.seed}}}};
  RunManifest manifest("extract-simple", config, opts.ffnn.seed);
  for (const auto& f : corpus_files(opts.corpus_dir)) manifest.add_input(f);
  for (const auto* f : {&opts.chunks_file, &opts.rules_file, &opts.labeled_file, &opts.ffnn_model}) {
    if (!f->empty()) manifest.add_input(*f);
  }
  manifest.begin(opts.out_dir / "manifest.json");

  simplex::Classifier classifier;
  if (opts.method == "rules") {
    simplex::RuleSet rules;
    if (!opts.rules_file.empty()) {
      rules = simplex::RuleSet::load(opts.rules_file);
    } else if (!opts.labeled_file.empty()) {
      std::vector<simplex::ChunkSequence> simple;
      for (const auto& item : simplex::read_labeled(opts.labeled_file)) {
        if (item.label == metrics::Label::Simple) simple.push_back(item.chunks);
      }
      rules = simplex::mine_rules(simple);
    } else {
      usage_error("rules method needs --rules FILE or --labeled FILE to mine from");
    }
    rules.save(outputs.back());
    classifier = [rules](const simplex::ChunkSequence& c) { return simplex::classify_rule(rules, c); };
  } else {
    simplex::FfnnModel model;
    if (!opts.ffnn_model.empty()) {
      model = simplex::FfnnModel::parse(read_file(opts.ffnn_model));
    } else if (!opts.labeled_file.empty()) {
      model = simplex::train_ffnn(simplex::read_labeled(opts.labeled_file), opts.ffnn);
    } else {
      usage_error("ffnn method needs --ffnn-model FILE or --labeled FILE to train on");
    }
    write_file_atomic(outputs.back(), model.serialize());
    classifier = [model](const simplex::ChunkSequence& c) { return simplex::classify_ffnn(model, c).first; };
  }

  auto result = simplex::extract_simple(corpus, chunks, classifier);
  ExtractSummary summary{opts.method, corpus.size(), result.simple.size(), result.other_count};
  save_corpus_dir(result.simple, opts.out_dir);
  write_json(opts.out_dir / "counts.json",
             {{"method", summary.method}, {"total", summary.total}, {"simple", summary.simple}, {"other", summary.other}});
  for (const auto& f : outputs) manifest.add_output(f);
  manifest.finish();
  return summary;
}

// ---------------------------------------------------------------------------
// train

std::string to_string(System s) {
  switch (s) {
    case System::Smt: return "smt";
    case System::NmtWord: return "nmt-word";
    case System::NmtChar: return "nmt-char";
  }
  return "?";
}

System parse_system(const std::string& name) {
  if (name == "smt") return System::Smt;
  if (name == "nmt-word") return System::NmtWord;
  if (name == "nmt-char") return System::NmtChar;
  usage_error("unknown system '" + name + "' (expected smt, nmt-word or nmt-char)");
}

namespace {

nlohmann::json decoder_json(const smt::DecoderConfig& d) {
  auto limit = [](std::size_t v) -> nlohmann::json {
    if (v == smt::DecoderConfig::kUnlimited) return "unlimited";
    return v;
  };
  return {{"beam_size", limit(d.beam_size)},
          {"distortion_limit", limit(d.distortion_limit)},
          {"max_phrase_len", d.max_phrase_len},
          {"table_limit", d.table_limit},
          {"oov_penalty", d.oov_penalty},
          {"weights",
           {{"tm", d.weights.tm}, {"lm", d.weights.lm}, {"distortion", d.weights.distortion},
            {"word_penalty", d.weights.word_penalty}}}};
}

smt::DecoderConfig decoder_from_json(const nlohmann::json& j) {
  auto limit = [](const nlohmann::json& v) {
    return v.is_string() ? smt::DecoderConfig::kUnlimited : v.get<std::size_t>();
  };
  smt::DecoderConfig d;
  d.beam_size = limit(j.at("beam_size"));
  d.distortion_limit = limit(j.at("distortion_limit"));
  d.max_phrase_len = j.at("max_phrase_len").get<std::size_t>();
  d.table_limit = j.at("table_limit").get<std::size_t>();
  d.oov_penalty = j.at("oov_penalty").get<double>();
  const auto& w = j.at("weights");
  d.weights.tm = w.at("tm").get<std::array<double, 4>>();
  d.weights.lm = w.at("lm").get<double>();
  d.weights.distortion = w.at("distortion").get<double>();
  d.weights.word_penalty = w.at("word_penalty").get<double>();
  return d;
}

nlohmann::json nmt_json(const nmt::TrainConfig& c) {
  return {{"lr", c.lr},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"optimizer", c.optimizer == nmt::Optimizer::RmsProp ? "rmsprop" : "sgd"},
          {"seed", c.seed},
          {"max_len", c.max_len},
          {"teacher_forcing", c.teacher_forcing},
          {"embed_dim", c.embed_dim},
          {"hidden", c.hidden},
          {"attention", c.attention},
          {"clip_norm", c.clip_norm},
          {"init_range", c.init_range}};
}

}  // namespace

nlohmann::json to_json(const TrainOptions& opts) {
  nlohmann::json j = {{"system", to_string(opts.system)},
                      {"corpus_dir", opts.corpus_dir.string()},
                      {"out_dir", opts.out_dir.string()}};
  if (opts.system == System::Smt) {
    j["smt"] = {{"ibm_iterations", opts.smt.ibm_iterations},
                {"max_phrase_len", opts.smt.max_phrase_len},
                {"lm_order", opts.smt.lm_order},
                {"decoder", decoder_json(opts.smt.decoder)}};
  } else {
    j["nmt"] = nmt_json(opts.nmt);
  }
  return j;
}

void train(const TrainOptions& opts, std::ostream* log) {
  auto corpus = load_corpus_dir(opts.corpus_dir);
  if (corpus.empty()) data_error("corpus " + opts.corpus_dir.string() + " has no sentence pairs");
  std::vector<fs::path> outputs{opts.out_dir / "model.json"};
  if (opts.system == System::Smt) {
    outputs.push_back(opts.out_dir / "phrase-table.txt");
    outputs.push_back(opts.out_dir / "lm.arpa");
  } else {
    outputs.push_back(opts.out_dir / "model.bin");
    outputs.push_back(opts.out_dir / "train-log.tsv");
  }
  guard_outputs(outputs, opts.force);
  make_dir(opts.out_dir);

  auto config = to_json(opts);
  std::uint64_t seed = opts.system == System::Smt ? 0 : opts.nmt.seed;
  RunManifest manifest("train", config, seed);
  for (const auto& f : corpus_files(opts.corpus_dir)) manifest.add_input(f);
  manifest.begin(opts.out_dir / "manifest.json");

  nlohmann::json model_meta = {{"system", to_string(opts.system)},
                               {"src_lang", corpus.src_lang()},
                               {"tgt_lang", corpus.tgt_lang()},
                               {"config", config}};
  if (opts.system == System::Smt) {
    smt::SmtTrainOptions so;
    so.ibm_iterations = opts.smt.ibm_iterations;
    so.max_phrase_len = opts.smt.max_phrase_len;
    so.lm.order = opts.smt.lm_order;
    auto system = smt::train_smt(corpus, so);
    system.phrases.save(outputs[1]);
    system.lm.save(outputs[2]);
    if (log) *log << "phrase table: " << system.phrases.size() << " entries\n";
  } else {
    std::string tsv = "epoch\tloss\n";
    auto on_epoch = [&](std::size_t epoch, double loss, const nmt::Seq2SeqModel&) {
      tsv += std::to_string(epoch) + "\t" + format_double(loss) + "\n";
      if (log) *log << "epoch " << epoch << " loss " << loss << "\n";
      return true;
    };
    auto model = opts.system == System::NmtWord ? nmt::train_word_nmt(corpus, opts.nmt, on_epoch)
                                                : nmt::train_char_nmt(corpus, opts.nmt, on_epoch);
    model.save(outputs[1]);
    write_file_atomic(outputs[2], tsv);
  }
  write_json(outputs[0], model_meta);
  for (const auto& f : outputs) manifest.add_output(f);
  manifest.finish();
}

// ---------------------------------------------------------------------------
// translate

Translator Translator::load(const fs::path& model_dir) {
  auto meta_path = model_dir / "model.json";
  if (!fs::exists(meta_path)) model_error("no model.json in " + model_dir.string());
  auto meta = read_json(meta_path);
  Translator t;
  try {
    t.system_ = parse_system(meta.at("system").get<std::string>());
    t.src_lang_ = meta.at("src_lang").get<std::string>();
    t.tgt_lang_ = meta.at("tgt_lang").get<std::string>();
    if (t.system_ == System::Smt) {
      t.decoder = decoder_from_json(meta.at("config").at("smt").at("decoder"));
    }
  } catch (const nlohmann::json::exception& e) {
    model_error("malformed " + meta_path.string() + ": " + e.what());
  } catch (const Error& e) {
    model_error("malformed " + meta_path.string() + ": " + e.what());
  }
  if (t.system_ == System::Smt) {
    t.smt_ = std::make_shared<smt::SmtSystem>(smt::SmtSystem{smt::PhraseTable::load(model_dir / "phrase-table.txt"),
                                                             lm::NGramLM::load(model_dir / "lm.arpa")});
  } else {
    auto model = nmt::Seq2SeqModel::load(model_dir / "model.bin");
    auto expected = t.system_ == System::NmtWord ? nmt::ModelKind::Word : nmt::ModelKind::Char;
    if (model.kind != expected) model_error("model.bin kind does not match model.json in " + model_dir.string());
    t.nmt_ = std::make_shared<nmt::Seq2SeqModel>(std::move(model));
  }
  return t;
}

std::string Translator::translate(const std::string& line, nlohmann::json* trace) const {
  auto words = split_ws(line);
  if (words.empty()) {
    if (trace) *trace = nlohmann::json::object();
    return {};
  }
  if (smt_) {
    auto result = smt::decode(words, smt_->phrases, smt_->lm, decoder);
    if (trace) *trace = result.trace_json(words);
    return join(result.words);
  }
  return nmt::translate_greedy(*nmt_, join(words), max_len);
}

std::size_t translate(const TranslateOptions& opts) {
  auto translator = Translator::load(opts.model_dir);
  if (opts.beam) translator.decoder.beam_size = *opts.beam;
  if (opts.distortion_limit) translator.decoder.distortion_limit = *opts.distortion_limit;
  translator.max_len = opts.max_len;

  std::vector<std::string> lines;
  if (fs::is_directory(opts.input)) {
    auto corpus = load_corpus_dir(opts.input);
    if (corpus.src_lang() != translator.src_lang()) {
      model_error("model translates from '" + translator.src_lang() + "' but corpus " + opts.input.string() +
                  " has source language '" + corpus.src_lang() + "'");
    }
    lines = sentence_texts(corpus.sources());
  } else {
    lines = read_lines(opts.input);
  }
  std::vector<fs::path> outputs{opts.output};
  if (!opts.trace.empty()) outputs.push_back(opts.trace);
  guard_outputs(outputs, opts.force);

  std::vector<std::string> out;
  out.reserve(lines.size());
  std::string traces;
  for (const auto& line : lines) {
    nlohmann::json trace;
    out.push_back(translator.translate(line, opts.trace.empty() ? nullptr : &trace));
    if (!opts.trace.empty()) traces += trace.dump() + "\n";
  }
  write_lines_atomic(opts.output, out);
  if (!opts.trace.empty()) write_file_atomic(opts.trace, traces);
  return out.size();
}

// ---------------------------------------------------------------------------
// evaluate

nlohmann::json evaluate(const std::vector<std::string>& refs, const std::vector<std::string>& hyps,
                        const std::vector<std::string>& metric_names) {
  for (const auto& m : metric_names) {
    if (std::find(kMetrics.begin(), kMetrics.end(), m) == kMetrics.end()) {
      usage_error("unknown metric '" + m + "' (valid metrics: " + join(kMetrics, ", ") + ")");
    }
  }
  if (refs.size() != hyps.size()) {
    data_error("reference has " + std::to_string(refs.size()) + " lines but hypothesis has " +
               std::to_string(hyps.size()));
  }
  std::vector<metrics::Words> r, h;
  for (const auto& l : refs) r.push_back(split_ws(l));
  for (const auto& l : hyps) h.push_back(split_ws(l));
  nlohmann::json report = nlohmann::json::object();
  for (const auto& m : metric_names) {
    if (m == "bleu") report["bleu"] = metrics::to_json(metrics::bleu(r, h));
    if (m == "ter") report["ter"] = metrics::to_json(metrics::ter(r, h));
  }
  return report;
}

std::string evaluation_csv(const nlohmann::json& report) {
  std::string out = "system,bleu,bleu_unsmoothed,ter\r\n";
  for (const auto& [system, r] : report.items()) {
    auto field = [&](const char* metric, const char* key) -> std::string {
      if (!r.contains(metric)) return "";
      return format_double(r[metric].at(key).get<double>());
    };
    out += metrics::csv_escape(system) + "," + field("bleu", "score") + "," + field("bleu", "unsmoothed_score") + "," +
           field("ter", "score") + "\r\n";
  }
  return out;
}

nlohmann::json evaluate_files(const EvaluateOptions& opts) {
  std::vector<fs::path> outputs;
  if (!opts.out_json.empty()) outputs.push_back(opts.out_json);
  if (!opts.out_csv.empty()) outputs.push_back(opts.out_csv);
  guard_outputs(outputs, opts.force);
  nlohmann::json report;
  report[opts.system] = evaluate(read_lines(opts.ref), read_lines(opts.hyp), opts.metrics);
  if (!opts.out_json.empty()) write_json(opts.out_json, report);
  if (!opts.out_csv.empty()) write_file_atomic(opts.out_csv, evaluation_csv(report));
  return report;
}

// ---------------------------------------------------------------------------
// manual evaluation sheets

void rate_sheet(const fs::path& src, const fs::path& hyp, const fs::path& out, std::uint64_t seed, bool force) {
  auto sources = read_lines(src);
  auto hyps = read_lines(hyp);
  if (sources.size() != hyps.size()) {
    data_error("source has " + std::to_string(sources.size()) + " lines but hypothesis has " +
               std::to_string(hyps.size()));
  }
  guard_outputs({out}, force);
  write_file_atomic(out, metrics::make_rating_sheet(sources, hyps, seed));
}

metrics::RatingSummary rate_aggregate(const std::vector<fs::path>& sheets, const std::vector<std::string>& raters) {
  if (sheets.empty()) usage_error("no rating sheets given");
  if (!raters.empty() && raters.size() != sheets.size()) usage_error("give one rater name per sheet");
  std::vector<metrics::RatingRecord> records;
  for (std::size_t i = 0; i < sheets.size(); ++i) {
    std::string rater = raters.empty() ? sheets[i].stem().string() : raters[i];
    try {
      auto parsed = metrics::parse_rating_sheet(read_file(sheets[i]), rater);
      records.insert(records.end(), parsed.begin(), parsed.end());
    } catch (const Error& e) {
      data_error(sheets[i].string() + ": " + e.what());
    }
  }
  return metrics::aggregate_ratings(records);
}

// ---------------------------------------------------------------------------
// compare

nmt::TrainConfig CompareOptions::compare_word_budget() {
  nmt::TrainConfig c = nmt::TrainConfig::word_defaults();
  c.hidden = 64;
  c.embed_dim = 32;
  c.epochs = 30;
  c.batch_size = 16;
  c.lr = 0.003;
  return c;
}

nmt::TrainConfig CompareOptions::compare_char_budget() {
  nmt::TrainConfig c = nmt::TrainConfig::char_defaults();
  c.hidden = 64;
  c.epochs = 30;
  c.batch_size = 16;
  c.lr = 0.003;
  c.max_len = 160;
  return c;
}

namespace {

struct Cell {
  std::string system;
  std::string corpus;
  fs::path corpus_dir;
};

TrainOptions cell_train_options(const Cell& cell, const CompareOptions& opts, const fs::path& dir) {
  TrainOptions t;
  t.corpus_dir = cell.corpus_dir;
  t.out_dir = dir / "model";
  t.force = true;
  t.smt = opts.smt;
  if (cell.system == "SMT") {
    t.system = System::Smt;
  } else if (cell.system == "CNMT") {
    t.system = System::NmtChar;
    t.nmt = opts.chr;
    t.nmt.attention = false;
  } else {
    t.system = System::NmtWord;
    t.nmt = opts.word;
    t.nmt.attention = cell.system == "WNMT-A";
  }
  t.nmt.seed = opts.seed;
  return t;
}

nlohmann::json run_cell(const Cell& cell, const CompareOptions& opts, bool& reused) {
  const fs::path dir = opts.out_dir / "cells" / (cell.system + "." + cell.corpus);
  make_dir(dir);
  auto topts = cell_train_options(cell, opts, dir);
  nlohmann::json config = {{"cell", {{"system", cell.system}, {"corpus", cell.corpus}}},
                           {"train", to_json(topts)},
                           {"evaluation", "training-set"}};
  const fs::path manifest_path = dir / "manifest.json";
  const fs::path metrics_path = dir / "metrics.json";
  reused = false;
  if (fs::exists(manifest_path) && fs::exists(metrics_path)) {
    auto old = RunManifest::load(manifest_path);
    if (old.value("config", nlohmann::json()) == config && RunManifest::verify(old)) {
      reused = true;
      return read_json(metrics_path);
    }
  }

  RunManifest manifest("compare-cell", config, opts.seed);
  for (const auto& f : corpus_files(cell.corpus_dir)) manifest.add_input(f);
  manifest.begin(manifest_path);
  train(topts);
  auto corpus = load_corpus_dir(cell.corpus_dir);
  auto translator = Translator::load(topts.out_dir);
  auto sources = sentence_texts(corpus.sources());
  std::vector<std::string> hyps;
  hyps.reserve(sources.size());
  for (const auto& s : sources) hyps.push_back(translator.translate(s));
  write_lines_atomic(dir / "hyp.txt", hyps);
  auto metrics = evaluate(sentence_texts(corpus.targets()), hyps);
  write_json(metrics_path, metrics);
  for (const auto& f : fs::directory_iterator(topts.out_dir)) {
    if (f.path().filename() != "manifest.json") manifest.add_output(f.path());
  }
  manifest.add_output(dir / "hyp.txt");
  manifest.add_output(metrics_path);
  manifest.finish();
  return metrics;
}

bool is_nmt(const std::string& system) { return system != "SMT"; }

nlohmann::json winners(const nlohmann::json& cells) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& corpus : kCompareCorpora) {
    std::string best_bleu, best_ter, best_nmt;
    double bleu = -1.0, ter = 0.0, nmt_bleu = -1.0;
    std::optional<double> smt_bleu;
    for (const auto& c : cells) {
      if (c.at("corpus") != corpus || c.at("status") != "ok") continue;
      const std::string sys = c.at("system");
      double b = c.at("bleu").get<double>(), t = c.at("ter").get<double>();
      if (b > bleu) {
        bleu = b;
        best_bleu = sys;
      }
      if (best_ter.empty() || t < ter) {
        ter = t;
        best_ter = sys;
      }
      if (is_nmt(sys) && b > nmt_bleu) {
        nmt_bleu = b;
        best_nmt = sys;
      }
      if (!is_nmt(sys)) smt_bleu = b;
    }
    nlohmann::json w = {{"bleu", best_bleu.empty() ? nlohmann::json() : nlohmann::json(best_bleu)},
                        {"ter", best_ter.empty() ? nlohmann::json() : nlohmann::json(best_ter)}};
    if (smt_bleu && !best_nmt.empty()) {
      std::ostringstream claim;
      claim << std::fixed << std::setprecision(2);
      if (*smt_bleu > nmt_bleu) {
        claim << "SMT wins BLEU on " << corpus << " (" << *smt_bleu << " vs " << nmt_bleu << " for " << best_nmt << ")";
      } else if (*smt_bleu < nmt_bleu) {
        claim << best_nmt << " wins BLEU on " << corpus << " (" << nmt_bleu << " vs " << *smt_bleu << " for SMT)";
      } else {
        claim << "SMT and " << best_nmt << " tie on " << corpus << " BLEU (" << nmt_bleu << ")";
      }
      w["smt_vs_nmt"] = claim.str();
    }
    out[corpus] = w;
  }
  return out;
}

void write_report(const fs::path& out_dir, const nlohmann::json& report) {
  write_json(out_dir / "compare.json", report);
  write_file_atomic(out_dir / "compare.txt", render_compare(report));
  std::string csv = "system,corpus,status,bleu,ter\r\n";
  for (const auto& c : report.at("cells")) {
    bool ok = c.at("status") == "ok";
    csv += c.at("system").get<std::string>() + "," + c.at("corpus").get<std::string>() + "," +
           c.at("status").get<std::string>() + "," + (ok ? format_double(c.at("bleu").get<double>()) : "") + "," +
           (ok ? format_double(c.at("ter").get<double>()) : "") + "\r\n";
  }
  write_file_atomic(out_dir / "compare.csv", csv);
}

bool report_partial(const nlohmann::json& report) {
  for (const auto& c : report.at("cells")) {
    if (c.at("status") != "ok") return true;
  }
  return false;
}

}  // namespace

CompareResult compare(const CompareOptions& opts, std::ostream* log) {
  if (opts.render_only) {
    auto path = opts.out_dir / "compare.json";
    if (!fs::exists(path)) data_error("no saved report at " + path.string());
    auto report = read_json(path);
    write_file_atomic(opts.out_dir / "compare.txt", render_compare(report));
    return {report, report_partial(report)};
  }
  for (const auto& s : opts.systems) {
    if (std::find(kCompareSystems.begin(), kCompareSystems.end(), s) == kCompareSystems.end()) {
      usage_error("unknown system '" + s + "' (expected one of " + join(kCompareSystems, ", ") + ")");
    }
  }
  if (opts.simple_dir.empty() && opts.whole_dir.empty()) usage_error("compare needs --simple and/or --whole corpora");
  make_dir(opts.out_dir);

  nlohmann::json config = {{"simple_dir", opts.simple_dir.string()},
                           {"whole_dir", opts.whole_dir.string()},
                           {"systems", opts.systems},
                           {"smt", {{"ibm_iterations", opts.smt.ibm_iterations},
                                    {"max_phrase_len", opts.smt.max_phrase_len},
                                    {"lm_order", opts.smt.lm_order},
                                    {"decoder", decoder_json(opts.smt.decoder)}}},
                           {"word_nmt", nmt_json(opts.word)},
                           {"char_nmt", nmt_json(opts.chr)}};
  RunManifest manifest("compare", config, opts.seed);

  std::vector<Cell> cells;
  nlohmann::json grid = nlohmann::json::array();
  std::vector<std::size_t> runnable;
  for (const auto& system : kCompareSystems) {
    for (const auto& corpus : kCompareCorpora) {
      const fs::path& dir = corpus == "simple" ? opts.simple_dir : opts.whole_dir;
      nlohmann::json cell = {{"system", system}, {"corpus", corpus}};
      if (std::find(opts.systems.begin(), opts.systems.end(), system) == opts.systems.end()) {
        cell["status"] = "missing";
        cell["reason"] = "system not requested";
      } else if (dir.empty()) {
        cell["status"] = "missing";
        cell["reason"] = "corpus not provided";
      } else {
        cell["status"] = "pending";
        runnable.push_back(cells.size());
      }
      cells.push_back({system, corpus, dir});
      grid.push_back(cell);
    }
  }
  for (const auto* d : {&opts.simple_dir, &opts.whole_dir}) {
    if (d->empty()) continue;
    for (const auto& f : corpus_files(*d)) {
      if (!fs::exists(f)) data_error("missing corpus file " + f.string());
      manifest.add_input(f);
    }
  }
  manifest.begin(opts.out_dir / "manifest.json");

  std::size_t jobs = opts.jobs ? opts.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, std::max<std::size_t>(1, runnable.size()));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  nlohmann::json reuse = nlohmann::json::object();
  auto worker = [&] {
    for (std::size_t k = next++; k < runnable.size(); k = next++) {
      std::size_t idx = runnable[k];
      const auto& cell = cells[idx];
      nlohmann::json result;
      bool reused = false;
      std::string error;
      try {
        result = run_cell(cell, opts, reused);
      } catch (const std::exception& e) {
        error = e.what();
      }
      std::lock_guard<std::mutex> lock(mu);
      auto& g = grid[idx];
      if (error.empty()) {
        g["status"] = "ok";
        g["bleu"] = result.at("bleu").at("score");
        g["ter"] = result.at("ter").at("score");
        reuse[cell.system + "." + cell.corpus] = reused;
      } else {
        g["status"] = "missing";
        g["reason"] = "failed: " + error;
      }
      if (log) {
        *log << cell.system << " / " << cell.corpus << ": "
             << (error.empty() ? std::string(reused ? "reused cached cell" : "done") : "FAILED (" + error + ")")
             << "\n";
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  nlohmann::json report = {{"systems", kCompareSystems},
                           {"corpora", kCompareCorpora},
                           {"evaluation", "training-set"},
                           {"seed", opts.seed},
                           {"cells", grid},
                           {"winners", winners(grid)}};
  write_report(opts.out_dir, report);
  manifest.note("reused_cells", reuse);
  for (const char* name : {"compare.json", "compare.txt", "compare.csv"}) manifest.add_output(opts.out_dir / name);
  manifest.finish();
  return {report, report_partial(report)};
}

std::string render_compare(const nlohmann::json& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  const auto& corpora = report.at("corpora");
  out << std::left << std::setw(10) << "system";
  for (const auto& c : corpora) {
    out << std::setw(12) << (c.get<std::string>() + " BLEU") << std::setw(12) << (c.get<std::string>() + " TER");
  }
  out << "\n";
  for (const auto& s : report.at("systems")) {
    out << std::setw(10) << s.get<std::string>();
    for (const auto& c : corpora) {
      const nlohmann::json* cell = nullptr;
      for (const auto& x : report.at("cells")) {
        if (x.at("system") == s && x.at("corpus") == c) cell = &x;
      }
      if (cell && cell->at("status") == "ok") {
        std::ostringstream b, t;
        b << std::fixed << std::setprecision(2) << cell->at("bleu").get<double>();
        t << std::fixed << std::setprecision(2) << cell->at("ter").get<double>();
        out << std::setw(12) << b.str() << std::setw(12) << t.str();
      } else {
        out << std::setw(12) << "missing" << std::setw(12) << "missing";
      }
    }
    out << "\n";
  }
  const auto& w = report.at("winners");
  for (const auto& c : corpora) {
    const auto& x = w.at(c.get<std::string>());
    out << c.get<std::string>() << ": best BLEU " << (x.at("bleu").is_null() ? "n/a" : x.at("bleu").get<std::string>())
        << ", best TER " << (x.at("ter").is_null() ? "n/a" : x.at("ter").get<std::string>());
    if (x.contains("smt_vs_nmt")) out << "; " << x.at("smt_vs_nmt").get<std::string>();
    out << "\n";
  }
  return out.str();
}

}  // namespace minimt::pipeline
