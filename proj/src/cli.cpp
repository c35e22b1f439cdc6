#include "minimt/cli.hpp"

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "minimt/error.hpp"
#include "minimt/manifest.hpp"
#include "minimt/pipeline.hpp"
#include "minimt/util.hpp"

namespace minimt::cli {

namespace {

namespace fs = std::filesystem;
using pipeline::System;

void add_common(CLI::App* cmd, std::uint64_t& seed, bool* force) {
  // Expanded by with_config() before parsing; registered here for --help and validation.
  cmd->add_option("--config", "key=value file of option defaults; command-line flags win")->check(CLI::ExistingFile);
  cmd->add_option("--seed", seed, "random seed")->envname("MINIMT_SEED")->capture_default_str();
  if (force) cmd->add_flag("--force", *force, "overwrite existing outputs");
}

nmt::Optimizer parse_optimizer(const std::string& name) {
  if (name == "rmsprop") return nmt::Optimizer::RmsProp;
  if (name == "sgd") return nmt::Optimizer::Sgd;
  usage_error("unknown optimizer '" + name + "' (expected rmsprop or sgd)");
}

struct NmtFlags {
  std::optional<std::size_t> epochs, batch_size, hidden, embed, max_len;
  std::optional<double> lr, clip_norm;
  std::optional<std::string> optimizer;
  bool no_attention = false;

  void add(CLI::App* cmd, bool with_attention_flag) {
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--batch-size", batch_size, "mini-batch size");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--hidden", hidden, "LSTM hidden size");
    cmd->add_option("--embed", embed, "word embedding size");
    cmd->add_option("--max-len", max_len, "truncate training sequences to this many symbols");
    cmd->add_option("--clip-norm", clip_norm, "global gradient norm clip");
    cmd->add_option("--optimizer", optimizer, "rmsprop or sgd");
    if (with_attention_flag) cmd->add_flag("--no-attention", no_attention, "word model without attention");
  }

  void apply(nmt::TrainConfig& c) const {
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (hidden) c.hidden = *hidden;
    if (embed) c.embed_dim = *embed;
    if (max_len) c.max_len = *max_len;
    if (lr) c.lr = *lr;
    if (clip_norm) c.clip_norm = *clip_norm;
    if (optimizer) c.optimizer = parse_optimizer(*optimizer);
    if (no_attention) c.attention = false;
  }
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text + ",") {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur.push_back(ch);
    }
  }
  return out;
}

// Turns `--config FILE` into `--key=value` arguments placed ahead of the
// user's own, so that with last-one-wins parsing flags override the file.
std::vector<std::string> with_config(const std::vector<std::string>& args) {
  fs::path file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) file = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) file = args[i].substr(9);
  }
  if (file.empty() || args.empty() || !fs::is_regular_file(file)) return args;
  std::vector<std::string> injected;
  std::size_t lineno = 0;
  for (auto line : read_lines(file)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto words = split_ws(line);
    if (words.empty()) continue;
    line = join(words);
    auto eq = line.find('=');
    if (eq == std::string::npos) usage_error(file.string() + " line " + std::to_string(lineno) + ": expected key=value");
    auto key = join(split_ws(line.substr(0, eq)));
    auto value = join(split_ws(line.substr(eq + 1)));
    if (key.empty() || key == "config") usage_error(file.string() + " line " + std::to_string(lineno) + ": bad key");
    injected.push_back("--" + key + "=" + value);
  }
  std::vector<std::string> out{args[0]};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"minimt: desk-scale SMT vs NMT workbench", "minimt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::uint64_t seed = 1;
  bool force = false;

  // preprocess
  pipeline::PreprocessOptions pre;
  auto* c_pre = app.add_subcommand("preprocess", "tokenize, truecase and length-filter a parallel corpus");
  c_pre->add_option("--src", pre.src_file, "source text, one sentence per line")->required()->check(CLI::ExistingFile);
  c_pre->add_option("--tgt", pre.tgt_file, "target text, line-aligned with --src")->required()->check(CLI::ExistingFile);
  c_pre->add_option("--out", pre.out_dir, "output corpus directory")->required();
  c_pre->add_option("--src-lang", pre.src_lang, "source language tag")->capture_default_str();
  c_pre->add_option("--tgt-lang", pre.tgt_lang, "target language tag")->capture_default_str();
  c_pre->add_option("--max-len", pre.max_len, "drop pairs with a longer side")->capture_default_str();
  add_common(c_pre, seed, &force);

  // extract-simple
  pipeline::ExtractOptions ext;
  std::optional<std::size_t> ffnn_epochs, ffnn_batch;
  std::optional<double> ffnn_lr;
  auto* c_ext = app.add_subcommand("extract-simple", "keep pairs whose source is a simple sentence");
  c_ext->add_option("--corpus", ext.corpus_dir, "preprocessed corpus directory")->required();
  c_ext->add_option("--out", ext.out_dir, "output directory for the simple subset")->required();
  c_ext->add_option("--method", ext.method, "rules or ffnn")->capture_default_str();
  c_ext->add_option("--chunks", ext.chunks_file, "chunk annotations, id<TAB>TAGS per line");
  c_ext->add_flag("--allow-fallback", ext.allow_fallback, "use the heuristic chunker when --chunks is absent");
  c_ext->add_option("--rules", ext.rules_file, "saved rule set (rules method)");
  c_ext->add_option("--labeled", ext.labeled_file, "labeled chunk data: Simple|Other<TAB>TAGS");
  c_ext->add_option("--ffnn-model", ext.ffnn_model, "saved classifier (ffnn method)");
  c_ext->add_option("--epochs", ffnn_epochs, "classifier epochs");
  c_ext->add_option("--batch-size", ffnn_batch, "classifier batch size");
  c_ext->add_option("--lr", ffnn_lr, "classifier learning rate");
  add_common(c_ext, seed, &force);

  // train
  pipeline::TrainOptions tr;
  std::string system_name;
  NmtFlags tr_nmt;
  std::optional<std::size_t> ibm_iters, max_phrase, lm_order, beam, dlimit;
  auto* c_tr = app.add_subcommand("train", "train an SMT or NMT system");
  c_tr->add_option("--system", system_name, "smt, nmt-word or nmt-char")->required();
  c_tr->add_option("--corpus", tr.corpus_dir, "preprocessed corpus directory")->required();
  c_tr->add_option("--out", tr.out_dir, "model directory")->required();
  c_tr->add_option("--ibm-iterations", ibm_iters, "IBM Model 1 EM iterations");
  c_tr->add_option("--max-phrase-len", max_phrase, "longest extracted phrase");
  c_tr->add_option("--lm-order", lm_order, "n-gram order");
  c_tr->add_option("--beam", beam, "decoder beam size stored with the model");
  c_tr->add_option("--distortion-limit", dlimit, "decoder distortion limit stored with the model");
  tr_nmt.add(c_tr, true);
  add_common(c_tr, seed, &force);

  // translate
  pipeline::TranslateOptions trn;
  std::optional<std::size_t> trn_beam, trn_dlimit;
  auto* c_trn = app.add_subcommand("translate", "translate a file or corpus directory line by line");
  c_trn->add_option("--model", trn.model_dir, "model directory from train")->required();
  c_trn->add_option("--input", trn.input, "tokenized input file or corpus directory")->required()->check(CLI::ExistingPath);
  c_trn->add_option("--output", trn.output, "output file")->required();
  c_trn->add_option("--trace", trn.trace, "SMT decoder trace, one JSON object per line");
  c_trn->add_option("--beam", trn_beam, "override the decoder beam size");
  c_trn->add_option("--distortion-limit", trn_dlimit, "override the decoder distortion limit");
  c_trn->add_option("--max-len", trn.max_len, "longest NMT output")->capture_default_str();
  add_common(c_trn, seed, &force);

  // evaluate
  pipeline::EvaluateOptions ev;
  std::string metric_list = "bleu,ter";
  auto* c_ev = app.add_subcommand("evaluate", "score hypotheses against references");
  c_ev->add_option("--ref", ev.ref, "reference file")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--hyp", ev.hyp, "hypothesis file")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--metrics", metric_list, "comma-separated: bleu,ter")->capture_default_str();
  c_ev->add_option("--system", ev.system, "system name used in the report")->capture_default_str();
  c_ev->add_option("--out", ev.out_json, "JSON report path");
  c_ev->add_option("--csv", ev.out_csv, "flat CSV report path");
  add_common(c_ev, seed, &force);

  // rate-sheet
  fs::path rs_src, rs_hyp, rs_out;
  auto* c_rs = app.add_subcommand("rate-sheet", "blind adequacy/fluency rating sheet");
  c_rs->add_option("--src", rs_src, "source sentences")->required()->check(CLI::ExistingFile);
  c_rs->add_option("--hyp", rs_hyp, "system outputs")->required()->check(CLI::ExistingFile);
  c_rs->add_option("--out", rs_out, "CSV sheet")->required();
  add_common(c_rs, seed, &force);

  // rate-aggregate
  std::vector<fs::path> ra_sheets;
  std::vector<std::string> ra_raters;
  fs::path ra_out;
  auto* c_ra = app.add_subcommand("rate-aggregate", "per-rater and averaged adequacy/fluency");
  c_ra->add_option("--sheets", ra_sheets, "filled-in sheets")->required()->check(CLI::ExistingFile);
  c_ra->add_option("--raters", ra_raters, "rater names, one per sheet (default: file stems)");
  c_ra->add_option("--out", ra_out, "JSON summary path");
  add_common(c_ra, seed, &force);

  // compare
  pipeline::CompareOptions cmp;
  std::string cmp_systems = "SMT,CNMT,WNMT-NA,WNMT-A";
  NmtFlags cmp_nmt;
  std::optional<std::size_t> cmp_char_epochs;
  auto* c_cmp = app.add_subcommand("compare", "train and score the system x corpus grid");
  c_cmp->add_option("--simple", cmp.simple_dir, "corpus directory of simple sentences");
  c_cmp->add_option("--whole", cmp.whole_dir, "corpus directory of the whole corpus");
  c_cmp->add_option("--out", cmp.out_dir, "report directory")->required();
  c_cmp->add_option("--systems", cmp_systems, "comma-separated subset of SMT,CNMT,WNMT-NA,WNMT-A")->capture_default_str();
  c_cmp->add_option("--jobs", cmp.jobs, "cells trained in parallel (0: all cores)");
  c_cmp->add_option("--char-epochs", cmp_char_epochs, "epochs for the character model (default: --epochs)");
  c_cmp->add_flag("--render-only", cmp.render_only, "re-render the saved report without running systems");
  cmp_nmt.add(c_cmp, false);
  add_common(c_cmp, seed, nullptr);

  try {
    try {
      auto expanded = with_config(args);
      std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
      app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
      int code = app.exit(e);
      return code == 0 ? kSuccess : kUsage;
    }

    if (*c_pre) {
      pre.force = force;
      auto s = pipeline::preprocess(pre);
      std::cout << "kept " << s.kept_pairs << " of " << s.input_pairs << " pairs\n";
    } else if (*c_ext) {
      ext.force = force;
      ext.ffnn.seed = seed;
      if (ffnn_epochs) ext.ffnn.epochs = *ffnn_epochs;
      if (ffnn_batch) ext.ffnn.batch_size = *ffnn_batch;
      if (ffnn_lr) ext.ffnn.learning_rate = *ffnn_lr;
      auto s = pipeline::extract_simple(ext);
      std::cout << "method " << s.method << ": simple " << s.simple << ", other " << s.other << ", total " << s.total
                << "\n";
    } else if (*c_tr) {
      tr.system = pipeline::parse_system(system_name);
      tr.force = force;
      if (tr.system == System::Smt) {
        if (ibm_iters) tr.smt.ibm_iterations = *ibm_iters;
        if (max_phrase) tr.smt.max_phrase_len = tr.smt.decoder.max_phrase_len = *max_phrase;
        if (lm_order) tr.smt.lm_order = *lm_order;
        if (beam) tr.smt.decoder.beam_size = *beam;
        if (dlimit) tr.smt.decoder.distortion_limit = *dlimit;
      } else {
        tr.nmt = tr.system == System::NmtWord ? nmt::TrainConfig::word_defaults() : nmt::TrainConfig::char_defaults();
        tr_nmt.apply(tr.nmt);
        if (tr.system == System::NmtChar && tr_nmt.no_attention) tr.nmt.attention = false;
        tr.nmt.seed = seed;
      }
      pipeline::train(tr, &std::cerr);
      std::cout << "model written to " << tr.out_dir.string() << "\n";
    } else if (*c_trn) {
      trn.force = force;
      trn.beam = trn_beam;
      trn.distortion_limit = trn_dlimit;
      auto n = pipeline::translate(trn);
      std::cout << "translated " << n << " lines\n";
    } else if (*c_ev) {
      ev.force = force;
      ev.metrics = split_list(metric_list);
      auto report = pipeline::evaluate_files(ev);
      std::cout << report.dump(2) << "\n";
    } else if (*c_rs) {
      pipeline::rate_sheet(rs_src, rs_hyp, rs_out, seed, force);
      std::cout << "sheet written to " << rs_out.string() << "\n";
    } else if (*c_ra) {
      auto summary = pipeline::rate_aggregate(ra_sheets, ra_raters);
      auto j = metrics::to_json(summary);
      if (!ra_out.empty()) {
        pipeline::guard_outputs({ra_out}, force);
        write_file_atomic(ra_out, j.dump(2) + "\n");
      }
      std::cout << j.dump(2) << "\n";
    } else if (*c_cmp) {
      cmp.seed = seed;
      cmp.systems = split_list(cmp_systems);
      cmp_nmt.apply(cmp.word);
      cmp_nmt.apply(cmp.chr);
      cmp.chr.attention = false;
      if (cmp_char_epochs) cmp.chr.epochs = *cmp_char_epochs;
      auto result = pipeline::compare(cmp, &std::cerr);
      std::cout << pipeline::render_compare(result.report);
      if (result.partial) {
        std::cerr << "partial report: some cells are missing\n";
        return kPartial;
      }
    }
    return kSuccess;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Usage ? kUsage : kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace minimt::cli
