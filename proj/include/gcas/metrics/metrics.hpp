#pragma once

// Turn-level act/frame scores, dialogue-level Entity and Success F1, and the
// critical/non-critical breakdown of inform slots. Counts are summed before
// precision/recall are taken (micro); macro means are reported alongside.

#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "gcas/data/dataset.hpp"

namespace gcas {

struct PRF {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  std::size_t tp = 0, pred = 0, gold = 0;

  static PRF from_counts(std::size_t tp, std::size_t pred, std::size_t gold) {
    PRF r;
    r.tp = tp;
    r.pred = pred;
    r.gold = gold;
    r.precision = pred ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
    r.recall = gold ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
    const double s = r.precision + r.recall;
    r.f1 = s > 0.0 ? 2.0 * r.precision * r.recall / s : 0.0;
    return r;
  }

  nlohmann::json to_json() const {
    return {{"precision", precision}, {"recall", recall}, {"f1", f1},
            {"tp", tp},               {"pred", pred},     {"gold", gold}};
  }
};

/// Accumulates counts; `macro` averages per-unit P/R/F1 over units where
/// either side is non-empty.
struct PrfAccumulator {
  std::size_t tp = 0, pred = 0, gold = 0;
  double sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
  std::size_t units = 0;

  template <class Set>
  void add(const Set& predicted, const Set& gold_set) {
    std::size_t hit = 0;
    for (const auto& x : predicted) hit += gold_set.count(x);
    tp += hit;
    pred += predicted.size();
    gold += gold_set.size();
    if (!predicted.empty() || !gold_set.empty()) {
      const PRF u = PRF::from_counts(hit, predicted.size(), gold_set.size());
      sum_p += u.precision;
      sum_r += u.recall;
      sum_f += u.f1;
      ++units;
    }
  }

  PRF micro() const { return PRF::from_counts(tp, pred, gold); }

  PRF macro() const {
    PRF r;
    r.tp = tp;
    r.pred = pred;
    r.gold = gold;
    if (units) {
      const double n = static_cast<double>(units);
      r.precision = sum_p / n;
      r.recall = sum_r / n;
      r.f1 = sum_f / n;
    }
    return r;
  }
};

struct TurnEval {
  std::vector<ActFrame> predicted;
  std::vector<ActFrame> gold;
};

/// Act type plus slot set; frames compare equal regardless of slot order.
using FrameKey = std::pair<std::string, std::set<std::string>>;

inline std::set<FrameKey> frame_keys(const std::vector<ActFrame>& frames) {
  std::set<FrameKey> out;
  for (const auto& f : frames) out.emplace(f.act, f.slot_set());
  return out;
}

inline std::set<std::string> act_keys(const std::vector<ActFrame>& frames) {
  std::set<std::string> out;
  for (const auto& f : frames) out.insert(f.act);
  return out;
}

inline PrfAccumulator act_counts(std::span<const TurnEval> turns) {
  PrfAccumulator acc;
  for (const auto& t : turns) acc.add(act_keys(t.predicted), act_keys(t.gold));
  return acc;
}

inline PrfAccumulator frame_counts(std::span<const TurnEval> turns) {
  PrfAccumulator acc;
  for (const auto& t : turns) acc.add(frame_keys(t.predicted), frame_keys(t.gold));
  return acc;
}

inline PRF act_prf(std::span<const TurnEval> turns) { return act_counts(turns).micro(); }
inline PRF frame_prf(std::span<const TurnEval> turns) { return frame_counts(turns).micro(); }

struct DialogueEval {
  std::set<std::string> agent_requested;
  std::set<std::string> kb_user_informed;  // user-informed slots used for KB queries
  std::set<std::string> agent_informed;
  std::set<std::string> user_requested;
};

inline PrfAccumulator entity_counts(std::span<const DialogueEval> ds) {
  PrfAccumulator acc;
  for (const auto& d : ds) acc.add(d.agent_requested, d.kb_user_informed);
  return acc;
}

inline PrfAccumulator success_counts(std::span<const DialogueEval> ds) {
  PrfAccumulator acc;
  for (const auto& d : ds) acc.add(d.agent_informed, d.user_requested);
  return acc;
}

inline PRF entity_f1(std::span<const DialogueEval> ds) { return entity_counts(ds).micro(); }
inline PRF success_f1(std::span<const DialogueEval> ds) { return success_counts(ds).micro(); }

enum class Criticality { Critical, NonCritical };

enum class SlotFilter { All, Critical, NonCritical };

inline const char* slot_filter_name(SlotFilter f) {
  switch (f) {
    case SlotFilter::All: return "all";
    case SlotFilter::Critical: return "critical";
    case SlotFilter::NonCritical: return "non-critical";
  }
  return "?";
}

/// For each turn, the slots the user informed at strictly earlier turns.
inline std::vector<std::set<std::string>> prior_user_informs(const Dialogue& d) {
  std::vector<std::set<std::string>> out;
  std::set<std::string> seen;
  for (const auto& r : d.turns) {
    out.push_back(seen);
    if (r.speaker != Speaker::User) continue;
    for (const auto& f : r.target)
      for (const auto& s : f.slots)
        if (informs_slot(f, s)) seen.insert(s);
  }
  return out;
}

/// Per turn, criticality of every slot in the turn's gold inform frames
/// (empty for user turns and turns without inform).
inline std::vector<std::map<std::string, Criticality>> classify_slot_criticality(const Dialogue& d) {
  const auto prior = prior_user_informs(d);
  std::vector<std::map<std::string, Criticality>> out(d.turns.size());
  for (std::size_t t = 0; t < d.turns.size(); ++t) {
    if (d.turns[t].speaker != Speaker::Agent) continue;
    for (const auto& f : d.turns[t].target) {
      if (f.act != "inform") continue;
      for (const auto& s : f.slots)
        out[t][s] = prior[t].contains(s) ? Criticality::NonCritical : Criticality::Critical;
    }
  }
  return out;
}

/// One agent turn for the inform-slot breakdown. A slot is non-critical when
/// it is in `user_informed_before`.
struct InformTurn {
  std::vector<ActFrame> predicted;
  std::vector<ActFrame> gold;
  std::set<std::string> user_informed_before;
};

inline std::set<std::string> inform_slots(const std::vector<ActFrame>& frames) {
  std::set<std::string> out;
  for (const auto& f : frames)
    if (f.act == "inform") out.insert(f.slots.begin(), f.slots.end());
  return out;
}

inline PrfAccumulator inform_slot_counts(std::span<const InformTurn> turns, SlotFilter filter) {
  PrfAccumulator acc;
  for (const auto& t : turns) {
    auto keep = [&](const std::set<std::string>& slots) {
      std::set<std::string> out;
      for (const auto& s : slots) {
        const bool non_critical = t.user_informed_before.contains(s);
        if (filter == SlotFilter::All || (filter == SlotFilter::NonCritical) == non_critical)
          out.insert(s);
      }
      return out;
    };
    acc.add(keep(inform_slots(t.predicted)), keep(inform_slots(t.gold)));
  }
  return acc;
}

inline PRF inform_slot_prf(std::span<const InformTurn> turns, SlotFilter filter) {
  return inform_slot_counts(turns, filter).micro();
}

// ---- dataset-level assembly -------------------------------------------------

/// Predicted frames for every agent turn of one dialogue, in turn order.
using DialoguePredictions = std::vector<std::vector<ActFrame>>;

struct EvalOptions {
  bool success_all_acts = false;  // count slots of every agent act as provided
};

inline DialogueEval dialogue_eval(const Dialogue& d, const DialoguePredictions& pred,
                                  const EvalOptions& opt = {}) {
  DialogueEval e;
  std::size_t k = 0;
  for (const auto& r : d.turns) {
    if (r.speaker == Speaker::User) {
      for (const auto& f : r.target)
        if (f.act == "request")
          for (const auto& s : f.slots)
            if (!f.valued.contains(s)) e.user_requested.insert(s);
      continue;
    }
    e.kb_user_informed.insert(r.kb_query_slots.begin(), r.kb_query_slots.end());
    const auto& frames = pred.at(k++);
    for (const auto& f : frames) {
      if (f.act == "request") e.agent_requested.insert(f.slots.begin(), f.slots.end());
      if (f.act == "inform" || opt.success_all_acts) e.agent_informed.insert(f.slots.begin(), f.slots.end());
    }
  }
  return e;
}

struct MetricsReport {
  std::size_t dialogues = 0, turns = 0;
  PrfAccumulator act, frame, entity, success;
  PrfAccumulator inform_all, inform_critical, inform_non_critical;

  nlohmann::json to_json() const {
    auto both = [](const PrfAccumulator& a) {
      return nlohmann::json{{"micro", a.micro().to_json()}, {"macro", a.macro().to_json()}};
    };
    return {{"dialogues", dialogues},
            {"agent_turns", turns},
            {"act", both(act)},
            {"frame", both(frame)},
            {"entity_f1", both(entity)},
            {"success_f1", both(success)},
            {"inform_slots",
             {{"all", both(inform_all)},
              {"critical", both(inform_critical)},
              {"non-critical", both(inform_non_critical)}}}};
  }
};

/// `predictions[i]` holds the frames predicted for the agent turns of
/// `dialogues[i]`.
inline MetricsReport evaluate_predictions(const Dataset& dialogues,
                                          const std::vector<DialoguePredictions>& predictions,
                                          const EvalOptions& opt = {}) {
  if (predictions.size() != dialogues.size())
    throw std::invalid_argument("evaluate: predictions for " + std::to_string(predictions.size()) +
                                " dialogues, expected " + std::to_string(dialogues.size()));
  MetricsReport rep;
  std::vector<TurnEval> turns;
  std::vector<InformTurn> informs;
  std::vector<DialogueEval> dials;
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    const Dialogue& d = dialogues[i];
    const auto prior = prior_user_informs(d);
    std::size_t k = 0;
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      if (d.turns[t].speaker != Speaker::Agent) continue;
      const auto& pred = predictions[i].at(k++);
      turns.push_back(TurnEval{pred, d.turns[t].target});
      informs.push_back(InformTurn{pred, d.turns[t].target, prior[t]});
    }
    if (k != predictions[i].size())
      throw std::invalid_argument("evaluate: dialogue " + d.id + " has " + std::to_string(k) +
                                  " agent turns but " + std::to_string(predictions[i].size()) +
                                  " predictions");
    dials.push_back(dialogue_eval(d, predictions[i], opt));
  }
  rep.dialogues = dialogues.size();
  rep.turns = turns.size();
  rep.act = act_counts(turns);
  rep.frame = frame_counts(turns);
  rep.entity = entity_counts(dials);
  rep.success = success_counts(dials);
  rep.inform_all = inform_slot_counts(informs, SlotFilter::All);
  rep.inform_critical = inform_slot_counts(informs, SlotFilter::Critical);
  rep.inform_non_critical = inform_slot_counts(informs, SlotFilter::NonCritical);
  return rep;
}

/// Aligned plain-text rendering of a report's JSON form.
inline std::string format_report_table(const nlohmann::json& report) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "dialogues %zu, agent turns %zu\n",
                report.at("dialogues").get<std::size_t>(), report.at("agent_turns").get<std::size_t>());
  out += buf;
  std::snprintf(buf, sizeof buf, "%-24s %8s %8s %8s   %8s %8s %8s\n", "metric", "P", "R", "F1",
                "macro P", "macro R", "macro F1");
  out += buf;
  auto row = [&](const std::string& label, const nlohmann::json& m) {
    const auto& mi = m.at("micro");
    const auto& ma = m.at("macro");
    std::snprintf(buf, sizeof buf, "%-24s %8.4f %8.4f %8.4f   %8.4f %8.4f %8.4f\n", label.c_str(),
                  mi.at("precision").get<double>(), mi.at("recall").get<double>(),
                  mi.at("f1").get<double>(), ma.at("precision").get<double>(),
                  ma.at("recall").get<double>(), ma.at("f1").get<double>());
    out += buf;
  };
  row("act", report.at("act"));
  row("frame", report.at("frame"));
  row("entity", report.at("entity_f1"));
  row("success", report.at("success_f1"));
  for (const char* f : {"all", "critical", "non-critical"})
    row(std::string("inform slots (") + f + ")", report.at("inform_slots").at(f));
  return out;
}

}  // namespace gcas
