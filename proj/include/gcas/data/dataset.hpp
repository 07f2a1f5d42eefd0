#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "gcas/data/frames.hpp"
#include "gcas/data/state.hpp"
#include "gcas/data/vocab.hpp"
#include "json.hpp"

namespace gcas {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Speaker { User, Agent };

inline const char* speaker_name(Speaker s) { return s == Speaker::User ? "user" : "agent"; }

struct TurnRecord {
  std::string dialogue_id;
  int turn_index = 0;
  Speaker speaker = Speaker::Agent;
  DialogueState state;
  std::vector<ActFrame> target;  // acts of this turn's speaker, dataset order
  std::string split = "train";
  // User-informed slots present when a KB query returned results at this turn.
  std::vector<std::string> kb_query_slots;
};

struct Dialogue {
  std::string id;
  std::string split;
  std::vector<TurnRecord> turns;  // chronological, both speakers
};

using Dataset = std::vector<Dialogue>;

// ---------------------------------------------------------------------------
// JSONL schema

inline nlohmann::json frames_to_json(const std::vector<ActFrame>& frames) {
  auto arr = nlohmann::json::array();
  for (const auto& f : frames) {
    nlohmann::json j = {{"act", f.act}, {"slots", f.slots}};
    if (!f.valued.empty()) {
      std::vector<std::string> valued;
      for (const auto& s : f.slots)
        if (f.valued.contains(s)) valued.push_back(s);
      j["valued_slots"] = valued;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

inline std::vector<ActFrame> frames_from_json(const nlohmann::json& arr) {
  std::vector<ActFrame> out;
  for (const auto& j : arr) {
    ActFrame f;
    f.act = j.at("act").get<std::string>();
    if (f.act.empty()) throw DataError("empty act name");
    for (const auto& s : j.at("slots")) f.add_slot(s.get<std::string>());
    if (j.contains("valued_slots")) {
      for (const auto& s : j["valued_slots"]) f.valued.insert(s.get<std::string>());
    }
    out.push_back(std::move(f));
  }
  return out;
}

inline nlohmann::json state_to_json(const DialogueState& s) {
  return {{"prev_agent_acts", frames_to_json(s.prev_agent_acts)},
          {"user_acts", frames_to_json(s.user_acts)},
          {"user_request_slots", s.user_request_slots},
          {"user_inform_slots", s.user_inform_slots},
          {"agent_request_slots", s.agent_request_slots},
          {"agent_proposed_slots", s.agent_proposed_slots},
          {"turn", s.turn}};
}

inline DialogueState state_from_json(const nlohmann::json& j) {
  DialogueState s;
  auto slots = [&](const char* key) {
    return j.contains(key) ? j[key].get<std::vector<std::string>>() : std::vector<std::string>{};
  };
  if (j.contains("prev_agent_acts")) s.prev_agent_acts = frames_from_json(j["prev_agent_acts"]);
  if (j.contains("user_acts")) s.user_acts = frames_from_json(j["user_acts"]);
  s.user_request_slots = slots("user_request_slots");
  s.user_inform_slots = slots("user_inform_slots");
  s.agent_request_slots = slots("agent_request_slots");
  s.agent_proposed_slots = slots("agent_proposed_slots");
  if (j.contains("turn")) s.turn = j["turn"].get<int>();
  if (j.contains("kb_result_count")) s.kb_result_count = j["kb_result_count"].get<long>();
  return s;
}

inline nlohmann::json record_to_json(const TurnRecord& r) {
  nlohmann::json j = {{"dialogue_id", r.dialogue_id},
                      {"turn_index", r.turn_index},
                      {"speaker", speaker_name(r.speaker)},
                      {"split", r.split},
                      {"state", state_to_json(r.state)},
                      {"kb_result_count", r.state.kb_result_count},
                      {"target_acts", frames_to_json(r.target)}};
  if (!r.kb_query_slots.empty()) j["kb_query_slots"] = r.kb_query_slots;
  return j;
}

inline TurnRecord record_from_json(const nlohmann::json& j) {
  TurnRecord r;
  r.dialogue_id = j.at("dialogue_id").get<std::string>();
  r.turn_index = j.at("turn_index").get<int>();
  if (r.turn_index < 0) throw DataError("negative turn_index");
  const auto speaker = j.at("speaker").get<std::string>();
  if (speaker == "user") r.speaker = Speaker::User;
  else if (speaker == "agent") r.speaker = Speaker::Agent;
  else throw DataError("unknown speaker '" + speaker + "'");
  r.state = state_from_json(j.at("state"));
  if (!j.at("state").contains("turn")) r.state.turn = r.turn_index;
  r.state.kb_result_count = j.value("kb_result_count", 0L);
  if (r.state.kb_result_count < 0) throw DataError("negative kb_result_count");
  r.target = frames_from_json(j.at("target_acts"));
  r.split = j.value("split", std::string("train"));
  if (j.contains("kb_query_slots")) {
    r.kb_query_slots = j["kb_query_slots"].get<std::vector<std::string>>();
  }
  return r;
}

/// Groups records by dialogue in first-appearance order. Errors carry the
/// 1-based line number.
inline Dataset read_dataset(std::istream& in) {
  Dataset out;
  std::unordered_map<std::string, std::size_t> by_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    TurnRecord r;
    try {
      r = record_from_json(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    auto [it, inserted] = by_id.try_emplace(r.dialogue_id, out.size());
    if (inserted) out.push_back(Dialogue{r.dialogue_id, r.split, {}});
    Dialogue& d = out[it->second];
    if (!d.turns.empty() && r.turn_index <= d.turns.back().turn_index) {
      throw DataError("line " + std::to_string(line_no) + ": turn_index " +
                      std::to_string(r.turn_index) + " not increasing in dialogue " + d.id);
    }
    d.turns.push_back(std::move(r));
  }
  return out;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path);
  return read_dataset(in);
}

inline void write_dataset(std::ostream& out, const Dataset& data) {
  for (const auto& d : data)
    for (const auto& r : d.turns) out << record_to_json(r).dump() << '\n';
}

inline Dataset filter_split(const Dataset& data, const std::string& split) {
  Dataset out;
  for (const auto& d : data)
    if (d.split == split) out.push_back(d);
  return out;
}

/// Vocabularies from the given (training) dialogues only.
inline Vocabularies build_vocabs(const Dataset& train) {
  Vocabularies v = Vocabularies::empty();
  std::size_t agent_turns = 0;
  for (const auto& d : train) {
    for (const auto& r : d.turns) {
      const auto& s = r.state;
      for (const auto& f : s.prev_agent_acts) v.add_frame(f);
      for (const auto& f : s.user_acts) v.add_frame(f);
      for (const auto* list : {&s.user_request_slots, &s.user_inform_slots,
                               &s.agent_request_slots, &s.agent_proposed_slots}) {
        for (const auto& slot : *list) v.add_slot(slot);
      }
      if (r.speaker == Speaker::Agent) {
        ++agent_turns;
        for (const auto& f : r.target) v.add_target_frame(f);
      } else {
        for (const auto& f : r.target) v.add_frame(f);
      }
    }
  }
  if (agent_turns == 0) throw DataError("cannot build vocabularies: no agent turns in training data");
  v.finalize();
  return v;
}

// ---------------------------------------------------------------------------
// Statistics

struct DatasetStats {
  std::map<std::string, std::size_t> dialogues_per_split;
  std::size_t dialogues = 0;
  // acts-per-turn histogram per speaker: key = number of acts in the turn
  std::map<std::size_t, std::size_t> user_acts_per_turn;
  std::map<std::size_t, std::size_t> agent_acts_per_turn;
  std::size_t distinct_acts = 0;
  std::size_t distinct_slots = 0;
  std::size_t distinct_pairs = 0;
  double multi_act_fraction_all = 0.0;    // turns with >= 2 acts, both speakers
  double multi_act_fraction_agent = 0.0;  // agent turns only

  nlohmann::json to_json() const {
    auto hist = [](const std::map<std::size_t, std::size_t>& h) {
      nlohmann::json j = nlohmann::json::object();
      for (auto [k, v] : h) j[std::to_string(k)] = v;
      return j;
    };
    return {{"dialogues", dialogues},
            {"splits", dialogues_per_split},
            {"acts_per_turn", {{"user", hist(user_acts_per_turn)}, {"agent", hist(agent_acts_per_turn)}}},
            {"distinct", {{"acts", distinct_acts}, {"slots", distinct_slots}, {"pairs", distinct_pairs}}},
            {"multi_act_fraction", {{"all", multi_act_fraction_all}, {"agent", multi_act_fraction_agent}}}};
  }
};

inline DatasetStats dataset_stats(const Dataset& data) {
  DatasetStats st;
  std::set<std::string> acts, slots, pairs;
  std::size_t turns = 0, multi = 0, agent_turns = 0, agent_multi = 0;
  for (const auto& d : data) {
    ++st.dialogues;
    ++st.dialogues_per_split[d.split];
    for (const auto& r : d.turns) {
      const std::size_t n = r.target.size();
      auto& hist = r.speaker == Speaker::User ? st.user_acts_per_turn : st.agent_acts_per_turn;
      ++hist[n];
      ++turns;
      if (n >= 2) ++multi;
      if (r.speaker == Speaker::Agent) {
        ++agent_turns;
        if (n >= 2) ++agent_multi;
      }
      for (const auto& f : r.target) {
        acts.insert(f.act);
        for (const auto& s : f.slots) {
          slots.insert(s);
          pairs.insert(pair_name(f.act, s));
        }
      }
    }
  }
  st.distinct_acts = acts.size();
  st.distinct_slots = slots.size();
  st.distinct_pairs = pairs.size();
  st.multi_act_fraction_all = turns ? static_cast<double>(multi) / turns : 0.0;
  st.multi_act_fraction_agent = agent_turns ? static_cast<double>(agent_multi) / agent_turns : 0.0;
  return st;
}

}  // namespace gcas
