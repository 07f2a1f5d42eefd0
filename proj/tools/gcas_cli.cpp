// gcas: convert / stats / train / evaluate / predict / gradcheck.
// Exit codes: 0 success, 1 internal error (or failed gradient check), 2 bad input.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "gcas/data/msr.hpp"
#include "gcas/trainer/checkpoint.hpp"
#include "gcas/trainer/evaluate.hpp"
#include "gcas/trainer/gradcheck_suite.hpp"

namespace fs = std::filesystem;
using namespace gcas;

namespace {

struct BadInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadInput("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset load_data(const std::string& path) {
  if (!fs::is_regular_file(path)) throw BadInput("no such data file: " + path);
  return load_dataset(path);
}

std::string default_data_dir() {
  const char* env = std::getenv("GCAS_DATA_DIR");
  return env ? env : "";
}

// ---- convert -----------------------------------------------------------------

struct ConvertArgs {
  std::string in = default_data_dir();
  std::string domain, out, kb;
};

int run_convert(const ConvertArgs& a) {
  if (a.in.empty()) throw BadInput("no input directory (pass --in or set GCAS_DATA_DIR)");
  auto file = find_msr_file(a.in, a.domain);
  if (!file) throw BadInput("missing " + (fs::path(a.in) / (a.domain + "_all.tsv")).string());
  std::optional<KbCounts> kb;
  if (!a.kb.empty()) {
    std::istringstream kin(read_file(a.kb));
    kb = read_kb_counts(kin);
  }
  std::ifstream tsv(*file);
  if (!tsv) throw BadInput("cannot read " + file->string());
  MsrConversion conv = convert_msr(tsv, kb ? &*kb : nullptr);
  for (const auto& w : conv.warnings) std::cerr << "warning: " << w << "\n";
  std::ostringstream buf;
  write_dataset(buf, conv.data);
  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw BadInput("cannot write " + a.out);
  out << buf.str();
  const auto st = dataset_stats(conv.data);
  auto count = [&](const char* s) {
    auto it = st.dialogues_per_split.find(s);
    return it == st.dialogues_per_split.end() ? std::size_t{0} : it->second;
  };
  std::printf("dialogues: total %zu, train %zu, valid %zu, test %zu\n", st.dialogues, count("train"),
              count("valid"), count("test"));
  if (conv.unparsed_rows) std::printf("unparsed act annotations: %zu rows\n", conv.unparsed_rows);
  return 0;
}

// ---- stats -------------------------------------------------------------------

int run_stats(const std::string& data_path, bool as_json) {
  const auto st = dataset_stats(load_data(data_path));
  const auto j = st.to_json();
  if (as_json) {
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::printf("dialogues: total %zu", st.dialogues);
  for (const auto& [split, n] : st.dialogues_per_split) std::printf(", %s %zu", split.c_str(), n);
  std::printf("\n\n%-10s %10s %10s\n", "acts/turn", "user", "agent");
  std::set<std::size_t> keys;
  for (const auto& [k, n] : st.user_acts_per_turn) keys.insert(k);
  for (const auto& [k, n] : st.agent_acts_per_turn) keys.insert(k);
  auto get = [](const std::map<std::size_t, std::size_t>& m, std::size_t k) {
    auto it = m.find(k);
    return it == m.end() ? std::size_t{0} : it->second;
  };
  for (auto k : keys)
    std::printf("%-10zu %10zu %10zu\n", k, get(st.user_acts_per_turn, k), get(st.agent_acts_per_turn, k));
  std::printf("\ndistinct acts %zu, slots %zu, act-slot pairs %zu\n", st.distinct_acts, st.distinct_slots,
              st.distinct_pairs);
  std::printf("turns with 2+ acts: %.4f of all turns, %.4f of agent turns\n", st.multi_act_fraction_all,
              st.multi_act_fraction_agent);
  return 0;
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
  std::string data, config, out;
  nlohmann::json overrides = nlohmann::json::object();
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg;
  if (!a.config.empty()) {
    try {
      cfg.merge_json(nlohmann::json::parse(read_file(a.config)));
    } catch (const nlohmann::json::parse_error& e) {
      throw BadInput("config " + a.config + ": " + e.what());
    }
  }
  cfg.merge_json(a.overrides);
  cfg.validate();
  const Dataset data = load_data(a.data);
  const Dataset train_set = filter_split(data, "train");
  const Dataset valid_set = filter_split(data, "valid");
  if (train_set.empty()) throw BadInput(a.data + " has no dialogues in the train split");
  const Vocabularies vocab = build_vocabs(train_set);
  std::printf("model %s, %zu train / %zu valid dialogues\n", model_kind_name(cfg.model), train_set.size(),
              valid_set.size());
  auto result = train(cfg, vocab, train_set, valid_set, [](const EpochReport& e) {
    std::printf("epoch %3zu  loss %.4f  valid frame F1 %.4f  (%.1fs)\n", e.epoch, e.train_loss, e.valid_frame_f1,
                e.seconds);
    std::fflush(stdout);
  });
  save_checkpoint(a.out, *result.model, vocab, cfg);
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& e : result.history) hist.push_back(e.to_json());
  std::ofstream(a.out + ".history.json") << hist.dump(2) << "\n";
  if (result.best_epoch)
    std::printf("best epoch %zu, valid frame F1 %.4f; saved %s\n", *result.best_epoch, result.best_f1, a.out.c_str());
  else
    std::printf("no epochs run; saved initial parameters to %s\n", a.out.c_str());
  return 0;
}

// ---- evaluate / predict -------------------------------------------------------

std::optional<ModelKind> expected_kind(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_model_kind(s);
}

struct EvaluateArgs {
  std::string checkpoint, data, split = "test", model, report;
  bool json = false, success_all_acts = false;
  std::size_t beam = 0;
  unsigned threads = 0;
};

int run_evaluate(const EvaluateArgs& a) {
  Checkpoint ck = load_checkpoint(a.checkpoint, expected_kind(a.model));
  const Dataset data = load_data(a.data);
  const Dataset train_part = filter_split(data, "train");
  if (!train_part.empty()) {
    const std::string fp = build_vocabs(train_part).fingerprint();
    if (fp != ck.vocab.fingerprint()) {
      throw BadInput("vocabulary fingerprint mismatch: checkpoint " + ck.vocab.fingerprint() + ", data " + fp +
                     "; refusing to evaluate");
    }
  }
  const Dataset part = filter_split(data, a.split);
  if (part.empty()) throw BadInput(a.data + " has no dialogues in split '" + a.split + "'");
  DecodeOptions decode = ck.config.decode_options();
  if (a.beam) decode.beam = a.beam;
  const MetricsReport rep = evaluate_model(*ck.model, ck.vocab, part, decode, EvalOptions{a.success_all_acts}, a.threads);
  nlohmann::json j = rep.to_json();
  j["model"] = model_kind_name(ck.model->kind());
  j["split"] = a.split;
  if (!a.report.empty()) std::ofstream(a.report) << j.dump(2) << "\n";
  if (a.json) std::cout << j.dump(2) << "\n";
  else std::cout << "model " << model_kind_name(ck.model->kind()) << ", split " << a.split << "\n"
                 << format_report_table(j);
  return 0;
}

struct PredictArgs {
  std::string checkpoint, state, tokens, model;
};

int run_predict(const PredictArgs& a) {
  Checkpoint ck = load_checkpoint(a.checkpoint, expected_kind(a.model));
  DialogueState state;
  if (!a.state.empty()) {
    try {
      state = state_from_json(nlohmann::json::parse(read_file(a.state)));
    } catch (const nlohmann::json::exception& e) {
      throw BadInput("state " + a.state + ": " + e.what());
    }
  } else {
    state = parse_state_tokens(read_file(a.tokens), ck.vocab);
  }
  const Example ex = make_example(state, {}, ck.vocab);
  std::cout << format_frames(ck.model->predict(ex, ck.vocab, ck.config.decode_options())) << "\n";
  return 0;
}

// ---- gradcheck ---------------------------------------------------------------

int run_gradcheck(const std::string& model, std::uint64_t seed, std::size_t hidden, double tol) {
  std::vector<ModelKind> kinds;
  if (model == "all") kinds = {ModelKind::Classification, ModelKind::Seq2Seq, ModelKind::Cas, ModelKind::Gcas};
  else kinds = {parse_model_kind(model)};
  bool ok = true;
  for (auto kind : kinds) {
    const GradCheckRun run = run_gradcheck(kind, seed, hidden);
    std::printf("%s (hidden %zu, seed %llu, %zu parameters)\n", model_kind_name(kind), hidden,
                static_cast<unsigned long long>(seed), run.parameters);
    std::printf("  %-36s %8s %14s\n", "parameter", "checked", "max rel err");
    for (const auto& e : run.report.entries)
      std::printf("  %-36s %8zu %14.3e %s\n", e.parameter.c_str(), e.checked, e.max_rel_error,
                  e.max_rel_error <= tol ? "ok" : "FAIL");
    const bool pass = run.report.passed(tol);
    std::printf("  %s: max %.3e (tolerance %.0e)\n", pass ? "PASS" : "FAIL", run.report.max_rel_error(), tol);
    ok = ok && pass;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-act dialogue policy toolkit"};
  app.require_subcommand(1);

  ConvertArgs conv;
  auto* c = app.add_subcommand("convert", "Convert MSR challenge TSV files to the JSONL turn schema");
  c->add_option("--in", conv.in, "Directory holding <domain>_all.tsv (default: $GCAS_DATA_DIR)");
  c->add_option("--domain", conv.domain, "movie, taxi or restaurant")
      ->required()
      ->check(CLI::IsMember({"movie", "taxi", "restaurant"}));
  c->add_option("--out", conv.out, "Output JSONL path")->required();
  c->add_option("--kb", conv.kb, "Optional TSV of (session, message, KB result count)");

  std::string stats_data;
  bool stats_json = false;
  auto* s = app.add_subcommand("stats", "Dialogue and act-per-turn counts");
  s->add_option("--data", stats_data, "Dataset JSONL")->required();
  s->add_flag("--json", stats_json, "Print the machine-readable form");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a policy model");
  t->add_option("--data", tr.data, "Dataset JSONL with train/valid splits")->required();
  t->add_option("--config", tr.config, "JSON config with TrainConfig field names");
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  std::string o_model;
  std::size_t o_hidden = 0, o_width = 0, o_batch = 0, o_epochs = 0, o_patience = 0, o_beam = 0, o_steps = 0, o_len = 0;
  double o_tf = 0, o_lr = 0, o_target = 0;
  std::uint64_t o_seed = 0;
  auto* f_model = t->add_option("--model", o_model, "classification, seq2seq, cas or gcas");
  auto* f_hidden = t->add_option("--hidden-size", o_hidden);
  auto* f_width = t->add_option("--class-width", o_width);
  auto* f_tf = t->add_option("--teacher-forcing", o_tf);
  auto* f_lr = t->add_option("--learning-rate", o_lr);
  auto* f_batch = t->add_option("--batch-size", o_batch);
  auto* f_epochs = t->add_option("--max-epochs", o_epochs);
  auto* f_patience = t->add_option("--patience", o_patience);
  auto* f_seed = t->add_option("--seed", o_seed);
  auto* f_beam = t->add_option("--beam-size", o_beam);
  auto* f_steps = t->add_option("--max-decode-steps", o_steps);
  auto* f_len = t->add_option("--max-len", o_len);
  auto* f_target = t->add_option("--target-f1", o_target, "Stop once validation frame F1 reaches this");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a checkpoint on one split");
  e->add_option("--checkpoint", ev.checkpoint)->required();
  e->add_option("--data", ev.data)->required();
  e->add_option("--split", ev.split, "train, valid or test")->check(CLI::IsMember({"train", "valid", "test"}));
  e->add_option("--model", ev.model, "Expected model kind");
  e->add_option("--report", ev.report, "Also write the JSON report here");
  e->add_flag("--json", ev.json, "Print JSON instead of the table");
  e->add_flag("--success-all-acts", ev.success_all_acts, "Success F1 counts slots of every agent act");
  e->add_option("--beam-size", ev.beam, "Override the Seq2Seq beam size");
  e->add_option("--threads", ev.threads, "Worker threads (default: all cores)");

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Predict agent frames for one dialogue state");
  p->add_option("--checkpoint", pr.checkpoint)->required();
  auto* f_state = p->add_option("--state", pr.state, "JSON DialogueState file");
  auto* f_tokens = p->add_option("--tokens", pr.tokens, "Serialized state token file");
  f_state->excludes(f_tokens);
  p->add_option("--model", pr.model, "Expected model kind");

  std::string gc_model = "all";
  std::uint64_t gc_seed = 1;
  std::size_t gc_hidden = 8;
  double gc_tol = 1e-4;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of end-to-end gradients");
  g->add_option("--model", gc_model, "Model kind or 'all'")
      ->check(CLI::IsMember({"all", "classification", "seq2seq", "cas", "gcas"}));
  g->add_option("--seed", gc_seed);
  g->add_option("--hidden", gc_hidden);
  g->add_option("--tolerance", gc_tol);

  try {
    app.parse(argc, argv);
    if (p->parsed() && f_state->count() == 0 && f_tokens->count() == 0)
      throw CLI::RequiredError("predict needs --state or --tokens");
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c->parsed()) return run_convert(conv);
    if (s->parsed()) return run_stats(stats_data, stats_json);
    if (t->parsed()) {
      auto& o = tr.overrides;
      if (f_model->count()) o["model"] = o_model;
      if (f_hidden->count()) o["hidden_size"] = o_hidden;
      if (f_width->count()) o["class_width"] = o_width;
      if (f_tf->count()) o["teacher_forcing"] = o_tf;
      if (f_lr->count()) o["learning_rate"] = o_lr;
      if (f_batch->count()) o["batch_size"] = o_batch;
      if (f_epochs->count()) o["max_epochs"] = o_epochs;
      if (f_patience->count()) o["patience"] = o_patience;
      if (f_seed->count()) o["seed"] = o_seed;
      if (f_beam->count()) o["beam_size"] = o_beam;
      if (f_steps->count()) o["max_decode_steps"] = o_steps;
      if (f_len->count()) o["max_len"] = o_len;
      if (f_target->count()) o["target_f1"] = o_target;
      return run_train(tr);
    }
    if (e->parsed()) return run_evaluate(ev);
    if (p->parsed()) return run_predict(pr);
    if (g->parsed()) return run_gradcheck(gc_model, gc_seed, gc_hidden, gc_tol);
  } catch (const BadInput& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const DataError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const gcas::ParseError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const CheckpointError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return 1;
  }
  return 1;
}
