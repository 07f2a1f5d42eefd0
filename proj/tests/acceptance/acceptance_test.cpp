// Acceptance run: one PASS / FAIL / SKIP line per criterion. Exit status is
// non-zero when any criterion fails. Criteria that need the MSR challenge
// files look in $GCAS_DATA_DIR and are skipped when it is unset or empty.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gcas/data/msr.hpp"
#include "gcas/trainer/evaluate.hpp"
#include "gcas/trainer/gradcheck_suite.hpp"
#include "gcas/trainer/synthetic.hpp"
#include "gcas/trainer/trainer.hpp"

using namespace gcas;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::Fail, std::move(d)}; }
Outcome skip(std::string d) { return {Status::Skip, std::move(d)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::optional<std::filesystem::path> data_dir() {
  const char* env = std::getenv("GCAS_DATA_DIR");
  if (!env || !*env) return std::nullopt;
  return std::filesystem::path(env);
}

std::optional<Dataset> load_msr(const std::string& domain) {
  auto dir = data_dir();
  if (!dir) return std::nullopt;
  auto file = find_msr_file(*dir, domain);
  if (!file) return std::nullopt;
  std::ifstream in(*file);
  return convert_msr(in).data;
}

// ---- 1. gradient checks ---------------------------------------------------------

Outcome gradient_checks() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = true;
  for (auto kind : {ModelKind::Classification, ModelKind::Seq2Seq, ModelKind::Cas, ModelKind::Gcas}) {
    const GradCheckRun run = run_gradcheck(kind, 1, 8);
    const double err = run.report.max_rel_error();
    ok = ok && run.report.passed(1e-4);
    detail += fmt("%s %.2e, ", model_kind_name(kind), err);
  }
  const double secs = seconds_since(t0);
  detail += fmt("%.1fs", secs);
  return ok && secs < 60.0 ? pass(detail) : fail(detail);
}

// ---- 2. format fidelity ----------------------------------------------------------

const std::string kAnnotation =
    "inform(moviename={The Witch, The Other Side of the Door, The Boy}; genre=thriller)     multiple_choice(moviename)";
const std::string kClassification = "inform+moviename, inform+genre, multiple_choice+moviename";
const std::string kSequence =
    "'inform' '(' 'moviename' '=' ';' 'genre' '=' ')' 'multiple_choice' '(' 'moviename' ')' '<eos>'";
const std::string kCas =
    "(<continue>, inform, {moviename, genre}) (<continue>, multiple_choice, {moviename}) (<stop>, <pad>, {})";

std::vector<std::string> unquote_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok.substr(1, tok.size() - 2));
  return out;
}

bool same_with_values(const std::vector<ActFrame>& a, const std::vector<ActFrame>& b) {
  if (a != b) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].valued != b[i].valued) return false;
  return true;
}

Outcome format_fidelity() {
  const auto frames = parse_frames(kAnnotation);
  Vocabularies v = Vocabularies::empty();
  for (const auto& f : frames) v.add_target_frame(f);
  v.finalize();

  std::vector<std::string> broken;
  // frames -> each encoding, byte for byte
  const auto pairs = to_pair_targets(frames, v);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < pairs.targets.size(); ++i)
    if (pairs.targets[i] == 1.0) active.push_back(i);
  if (format_pairs(frames) != kClassification) broken.push_back("classification");
  if (format_cas_sequence(to_cas_sequence(frames)) != kCas) broken.push_back("cas");
  if (format_token_sequence(to_token_sequence(frames)) != kSequence) broken.push_back("sequence");

  // each encoding -> frames -> encoding again
  const auto from_pairs = frames_from_pairs(active, v);
  if (from_pairs != frames || format_pairs(from_pairs) != kClassification) broken.push_back("classification inverse");
  const auto from_cas = from_cas_sequence(to_cas_sequence(frames));
  if (from_cas != frames || format_cas_sequence(to_cas_sequence(from_cas)) != kCas) broken.push_back("cas inverse");
  const auto from_tokens = from_token_sequence(unquote_tokens(kSequence), v);
  if (!same_with_values(from_tokens, frames) || format_token_sequence(to_token_sequence(from_tokens)) != kSequence)
    broken.push_back("sequence inverse");
  // the value-free annotation parses back to the same frames
  if (parse_frames(format_frames(frames)) != frames) broken.push_back("annotation");

  if (!broken.empty()) {
    std::string d = "mismatch:";
    for (const auto& b : broken) d += " " + b;
    return fail(d);
  }
  return pass("annotation, classification, cas and token strings all byte-exact");
}

// ---- 3. dataset statistics -------------------------------------------------------

struct DomainTable {
  const char* name;
  std::size_t total, train, valid, test, acts, slots, pairs;
  std::array<std::size_t, 4> user, agent;  // turns with 1..4 acts
};

const DomainTable kReferenceCounts[] = {
    {"movie", 2888, 1445, 433, 1010, 11, 29, 90, {9130, 1275, 106, 11}, {5078, 4982, 427, 33}},
    {"taxi", 3093, 1548, 463, 1082, 11, 23, 63, {10544, 762, 50, 8}, {7855, 3301, 200, 8}},
    {"restaurant", 4101, 2051, 615, 1435, 11, 31, 91, {12726, 1672, 100, 3}, {10333, 3755, 403, 10}},
};

Outcome dataset_statistics() {
  if (!data_dir()) return skip("GCAS_DATA_DIR not set");
  std::vector<std::string> problems, seen;
  std::size_t turns = 0, multi = 0;
  for (const auto& t : kReferenceCounts) {
    auto data = load_msr(t.name);
    if (!data) continue;
    seen.push_back(t.name);
    const auto st = dataset_stats(*data);
    auto split = [&](const char* s) {
      auto it = st.dialogues_per_split.find(s);
      return it == st.dialogues_per_split.end() ? std::size_t{0} : it->second;
    };
    auto check = [&](const std::string& what, std::size_t got, std::size_t want) {
      if (got != want) problems.push_back(fmt("%s %s %zu (want %zu)", t.name, what.c_str(), got, want));
    };
    check("total", st.dialogues, t.total);
    check("train", split("train"), t.train);
    check("valid", split("valid"), t.valid);
    check("test", split("test"), t.test);
    check("acts", st.distinct_acts, t.acts);
    check("slots", st.distinct_slots, t.slots);
    check("pairs", st.distinct_pairs, t.pairs);
    for (std::size_t k = 1; k <= 4; ++k) {
      auto get = [&](const std::map<std::size_t, std::size_t>& h) {
        auto it = h.find(k);
        return it == h.end() ? std::size_t{0} : it->second;
      };
      check(fmt("user %zu-act", k), get(st.user_acts_per_turn), t.user[k - 1]);
      check(fmt("agent %zu-act", k), get(st.agent_acts_per_turn), t.agent[k - 1]);
    }
    for (const auto* h : {&st.user_acts_per_turn, &st.agent_acts_per_turn})
      for (auto [k, n] : *h) {
        turns += n;
        if (k >= 2) multi += n;
      }
  }
  if (seen.empty()) return skip("no <domain>_all.tsv under GCAS_DATA_DIR");
  std::string detail = "domains:";
  for (const auto& s : seen) detail += " " + s;
  if (seen.size() == 3) {
    const double frac = 100.0 * static_cast<double>(multi) / static_cast<double>(turns);
    detail += fmt("; multi-act turns %.2f%%", frac);
    if (std::fabs(frac - 23.0) > 1.0) problems.push_back(fmt("multi-act fraction %.2f%% (want 23 +- 1)", frac));
  } else {
    detail += "; multi-act fraction needs all three domains, not checked";
  }
  if (!problems.empty()) {
    detail += "; ";
    for (std::size_t i = 0; i < problems.size() && i < 6; ++i) detail += (i ? ", " : "") + problems[i];
    if (problems.size() > 6) detail += fmt(" (+%zu more)", problems.size() - 6);
    return fail(detail);
  }
  return pass(detail);
}

// ---- 4. metric oracle ------------------------------------------------------------

const std::vector<std::string> kOracleActs{"inform", "request", "confirm_question", "multiple_choice", "thanks"};
const std::vector<std::string> kOracleSlots{"moviename", "genre", "date", "city", "theater"};

std::vector<ActFrame> random_turn(std::mt19937_64& rng) {
  std::vector<ActFrame> out;
  const std::size_t n = rng() % 5;  // up to 4 frames
  for (std::size_t i = 0; i < n; ++i) {
    ActFrame f;
    f.act = kOracleActs[rng() % kOracleActs.size()];
    const std::size_t k = rng() % 6;  // up to 5 slots
    for (std::size_t j = 0; j < k; ++j) {
      const auto& s = kOracleSlots[rng() % kOracleSlots.size()];
      f.add_slot(s, rng() % 2 == 0);
    }
    out.push_back(f);
  }
  return out;
}

struct Count {
  std::size_t tp = 0, pred = 0, gold = 0;
};

bool contains(const std::vector<std::string>& v, const std::string& s) {
  for (const auto& x : v)
    if (x == s) return true;
  return false;
}

void push_unique(std::vector<std::string>& v, const std::string& s) {
  if (!contains(v, s)) v.push_back(s);
}

void count_sets(Count& c, const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  c.pred += pred.size();
  c.gold += gold.size();
  for (const auto& p : pred) c.tp += contains(gold, p);
}

// a frame as "act|slot|slot" with the slots sorted, so equal frames give equal strings
std::string frame_string(const ActFrame& f) {
  std::vector<std::string> slots;
  for (const auto& s : f.slots) push_unique(slots, s);
  std::sort(slots.begin(), slots.end());
  std::string out = f.act;
  for (const auto& s : slots) out += "|" + s;
  return out;
}

struct OracleCounts {
  Count act, frame, entity, success, inform_all, inform_critical, inform_non_critical;
};

OracleCounts oracle(const Dataset& data, const std::vector<DialoguePredictions>& preds) {
  OracleCounts c;
  for (std::size_t d = 0; d < data.size(); ++d) {
    const auto& turns = data[d].turns;
    std::vector<std::string> agent_requested, kb_informed, agent_informed, user_requested;
    std::size_t k = 0;
    for (std::size_t t = 0; t < turns.size(); ++t) {
      const auto& r = turns[t];
      if (r.speaker == Speaker::User) {
        for (const auto& f : r.target)
          if (f.act == "request")
            for (const auto& s : f.slots)
              if (!f.valued.contains(s)) push_unique(user_requested, s);
        continue;
      }
      const auto& pred = preds[d][k++];
      std::vector<std::string> pa, ga, pf, gf, pi, gi;
      for (const auto& f : pred) {
        push_unique(pa, f.act);
        push_unique(pf, frame_string(f));
        if (f.act == "inform")
          for (const auto& s : f.slots) push_unique(pi, s);
        if (f.act == "request")
          for (const auto& s : f.slots) push_unique(agent_requested, s);
        if (f.act == "inform")
          for (const auto& s : f.slots) push_unique(agent_informed, s);
      }
      for (const auto& f : r.target) {
        push_unique(ga, f.act);
        push_unique(gf, frame_string(f));
        if (f.act == "inform")
          for (const auto& s : f.slots) push_unique(gi, s);
      }
      for (const auto& s : r.kb_query_slots) push_unique(kb_informed, s);
      count_sets(c.act, pa, ga);
      count_sets(c.frame, pf, gf);
      count_sets(c.inform_all, pi, gi);
      // history scan: did the user inform this slot at an earlier turn?
      auto informed_before = [&](const std::string& slot) {
        for (std::size_t u = 0; u < t; ++u) {
          if (turns[u].speaker != Speaker::User) continue;
          for (const auto& f : turns[u].target)
            if (contains(f.slots, slot) && (f.act == "inform" || f.valued.contains(slot))) return true;
        }
        return false;
      };
      std::vector<std::string> pc, gc, pn, gn;
      for (const auto& s : pi) (informed_before(s) ? pn : pc).push_back(s);
      for (const auto& s : gi) (informed_before(s) ? gn : gc).push_back(s);
      count_sets(c.inform_critical, pc, gc);
      count_sets(c.inform_non_critical, pn, gn);
    }
    count_sets(c.entity, agent_requested, kb_informed);
    count_sets(c.success, agent_informed, user_requested);
  }
  return c;
}

bool same_counts(const PrfAccumulator& acc, const Count& c) {
  const PRF m = acc.micro();
  if (m.tp != c.tp || m.pred != c.pred || m.gold != c.gold) return false;
  const double p = c.pred ? double(c.tp) / double(c.pred) : 0.0;
  const double r = c.gold ? double(c.tp) / double(c.gold) : 0.0;
  const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  return std::fabs(m.precision - p) < 1e-12 && std::fabs(m.recall - r) < 1e-12 && std::fabs(m.f1 - f) < 1e-12;
}

Outcome metric_oracle() {
  std::mt19937_64 rng(20240);
  std::size_t mismatches = 0;
  std::string first;
  for (int inst = 0; inst < 1000; ++inst) {
    Dataset data(1 + rng() % 3);
    std::vector<DialoguePredictions> preds(data.size());
    for (std::size_t d = 0; d < data.size(); ++d) {
      data[d].id = "d" + std::to_string(d);
      const std::size_t n = 1 + rng() % 6;
      for (std::size_t t = 0; t < n; ++t) {
        TurnRecord r;
        r.dialogue_id = data[d].id;
        r.turn_index = static_cast<int>(t);
        r.speaker = rng() % 2 ? Speaker::User : Speaker::Agent;
        r.target = random_turn(rng);
        if (r.speaker == Speaker::Agent) {
          for (const auto& s : kOracleSlots)
            if (rng() % 3 == 0) r.kb_query_slots.push_back(s);
          preds[d].push_back(random_turn(rng));
        }
        data[d].turns.push_back(r);
      }
    }
    const MetricsReport rep = evaluate_predictions(data, preds);
    const OracleCounts o = oracle(data, preds);
    const std::pair<const PrfAccumulator*, const Count*> checks[] = {
        {&rep.act, &o.act},
        {&rep.frame, &o.frame},
        {&rep.entity, &o.entity},
        {&rep.success, &o.success},
        {&rep.inform_all, &o.inform_all},
        {&rep.inform_critical, &o.inform_critical},
        {&rep.inform_non_critical, &o.inform_non_critical}};
    const char* names[] = {"act", "frame", "entity", "success", "inform all", "inform critical", "inform non-critical"};
    for (std::size_t i = 0; i < std::size(checks); ++i) {
      if (!same_counts(*checks[i].first, *checks[i].second)) {
        if (!mismatches) first = fmt("instance %d %s", inst, names[i]);
        ++mismatches;
      }
    }
  }
  if (mismatches) return fail(fmt("%zu mismatches, first at ", mismatches) + first);
  return pass("1000 instances; act, frame, entity, success and inform-slot (all/critical/non-critical) counts exact");
}

// ---- 5. overfit smoke ------------------------------------------------------------

TrainConfig smoke_config(ModelKind kind, std::size_t epochs) {
  TrainConfig c;
  c.model = kind;
  c.batch_size = 1;
  c.max_epochs = epochs;
  c.patience = epochs;
  c.target_f1 = 1.0;
  c.seed = 1;
  return c;
}

Outcome overfit_smoke() {
  std::string detail;
  bool ok = true;
  const auto t0 = std::chrono::steady_clock::now();
  {
    const Dataset data = make_synthetic_corpus({.examples = 20});
    const Vocabularies v = build_vocabs(data);
    const auto examples = make_examples(data, v);
    for (auto kind : {ModelKind::Gcas, ModelKind::Cas}) {
      const auto cfg = smoke_config(kind, 300);
      auto r = train(cfg, v, data, {});
      const FrameScore s = score_frames(*r.model, examples, v, cfg.decode_options());
      ok = ok && s.accuracy == 1.0;
      detail += fmt("%s accuracy %.3f after %zu epochs, ", model_kind_name(kind), s.accuracy, r.history.size());
    }
  }
  const double secs = seconds_since(t0);
  detail += fmt("%.1fs; ", secs);
  ok = ok && secs < 120.0;
  {
    const Dataset data = make_synthetic_corpus({.examples = 5});
    const Vocabularies v = build_vocabs(data);
    const auto examples = make_examples(data, v);
    const auto cfg = smoke_config(ModelKind::Seq2Seq, 500);
    auto r = train(cfg, v, data, {});
    const auto& model = dynamic_cast<const Seq2SeqPolicy&>(*r.model);
    std::size_t exact = 0;
    for (const auto& ex : examples) {
      auto ids = model.decode_ids(ex, cfg.decode_options());
      ids.push_back(kTargetEos);  // decode_ids drops the closing <eos>
      exact += ids == ex.tokens;
    }
    ok = ok && exact == examples.size();
    detail += fmt("seq2seq %zu/%zu token sequences exact after %zu epochs", exact, examples.size(), r.history.size());
  }
  return ok ? pass(detail) : fail(detail);
}

// ---- 6. beam search --------------------------------------------------------------

ModelDims beam_dims(std::size_t target_vocab) {
  ModelDims d;
  d.state_vocab = 6;
  d.acts = 5;
  d.slots = 8;
  d.pairs = 10;
  d.target_vocab = target_vocab;
  d.features = 14;
  d.hidden = 8;
  d.embed = 8;
  d.class_width = 16;
  return d;
}

const std::vector<int> kBeamState{2, 4, 5, 3};

// Best of every sequence that ends in <eos> within max_len tokens, or reaches
// max_len without one.
BeamHypothesis exhaustive_best(Seq2SeqDecoder& dec, std::size_t max_len) {
  BeamHypothesis best;
  best.log_prob = -INFINITY;
  std::function<void(Seq2SeqDecoder::State, std::vector<int>&, double)> walk =
      [&](Seq2SeqDecoder::State s, std::vector<int>& toks, double lp) {
        auto [next, logp] = dec.step(s, toks.empty() ? kTargetGo : toks.back());
        for (std::size_t t = 0; t < logp.size(); ++t) {
          toks.push_back(static_cast<int>(t));
          const double score = lp + logp[t];
          if (static_cast<int>(t) == dec.eos() || toks.size() == max_len) {
            if (score > best.log_prob) best = BeamHypothesis{toks, score, true};
          } else {
            walk(next, toks, score);
          }
          toks.pop_back();
        }
      };
  std::vector<int> toks;
  walk(dec.initial(), toks, 0.0);
  return best;
}

Outcome beam_soundness() {
  std::size_t greedy_mismatch = 0, argmax_mismatch = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    {
      ParameterStore store;
      auto p = Seq2SeqParams::create(store, beam_dims(9), seed);
      Seq2SeqDecoder dec(store, p, kBeamState);
      const auto g = greedy_search(dec, 20);
      const auto b = beam_search(dec, 1, 20);
      greedy_mismatch += g.tokens != b.tokens || g.log_prob != b.log_prob;
    }
    {
      ParameterStore store;
      auto p = Seq2SeqParams::create(store, beam_dims(5), seed);
      Seq2SeqDecoder dec(store, p, kBeamState);
      const auto oracle = exhaustive_best(dec, 4);
      const auto b = beam_search(dec, 10, 4);
      argmax_mismatch += b.tokens != oracle.tokens;
    }
  }
  const std::string detail = fmt("beam 1 vs greedy: %zu/100 differ; beam 10 vs exhaustive (|V|=5, len 4): %zu/100 differ",
                                 greedy_mismatch, argmax_mismatch);
  return greedy_mismatch == 0 && argmax_mismatch == 0 ? pass(detail) : fail(detail);
}

// ---- 7. directional check on MSR movie --------------------------------------------

Outcome directional_movie() {
  if (!data_dir()) return skip("GCAS_DATA_DIR not set");
  auto data = load_msr("movie");
  if (!data) return skip("movie_all.tsv not found under GCAS_DATA_DIR");
  const Dataset train_set = filter_split(*data, "train");
  const Dataset valid_set = filter_split(*data, "valid");
  const Dataset test_set = filter_split(*data, "test");
  const Vocabularies v = build_vocabs(train_set);
  auto median_f1 = [&](ModelKind kind) {
    std::vector<double> f1;
    for (std::uint64_t seed : {1, 2, 3}) {
      TrainConfig cfg;
      cfg.model = kind;
      cfg.seed = seed;
      auto r = train(cfg, v, train_set, valid_set);
      const auto rep = evaluate_model(*r.model, v, test_set, cfg.decode_options());
      f1.push_back(100.0 * rep.frame.micro().f1);
    }
    std::sort(f1.begin(), f1.end());
    return f1[1];
  };
  const double gcas = median_f1(ModelKind::Gcas);
  const double cas = median_f1(ModelKind::Cas);
  const std::string detail = fmt("median test frame F1 gCAS %.2f, CAS %.2f (reference 38.58)", gcas, cas);
  return gcas > cas && std::fabs(gcas - 38.58) <= 5.0 ? pass(detail) : fail(detail);
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "gradient check", gradient_checks},
      {2, "format fidelity", format_fidelity},
      {3, "dataset statistics", dataset_statistics},
      {4, "metric oracle", metric_oracle},
      {5, "overfit smoke", overfit_smoke},
      {6, "beam search", beam_soundness},
      {7, "gCAS vs CAS on movie", directional_movie},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    failures += o.status == Status::Fail;
    std::printf("%s [%d] %s (%.1fs): %s\n", tag, c.id, c.name, seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
