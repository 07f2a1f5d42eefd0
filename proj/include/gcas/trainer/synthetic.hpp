#pragma once

// Small consistent corpora for overfitting checks: every agent turn has a
// distinct state, so an exact fit exists.

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gcas/data/dataset.hpp"
#include "gcas/data/state.hpp"

namespace gcas {

struct SyntheticSpec {
  std::size_t examples = 20;
  std::size_t acts = 5;
  std::size_t slots = 8;
  std::size_t max_frames = 3;
  std::size_t max_slots_per_frame = 3;
  std::uint64_t seed = 1;
};

inline std::vector<std::string> synthetic_act_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("act" + std::to_string(i));
  return out;
}

inline std::vector<std::string> synthetic_slot_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("slot" + std::to_string(i));
  return out;
}

/// One single-turn dialogue per example, all in the "train" split.
inline Dataset make_synthetic_corpus(const SyntheticSpec& spec) {
  const auto acts = synthetic_act_names(spec.acts);
  const auto slots = synthetic_slot_names(spec.slots);
  std::mt19937_64 rng(spec.seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto random_slots = [&](std::size_t max) {
    std::vector<std::string> out;
    const std::size_t k = pick(max + 1);
    for (std::size_t i = 0; i < k; ++i) {
      const auto& s = slots[pick(slots.size())];
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  auto random_frames = [&](std::size_t max_frames, std::size_t min_frames) {
    std::vector<ActFrame> out;
    std::set<std::string> used;
    const std::size_t n = min_frames + pick(max_frames - min_frames + 1);
    while (out.size() < n && used.size() < acts.size()) {
      const auto& a = acts[pick(acts.size())];
      if (!used.insert(a).second) continue;
      out.push_back(ActFrame{a, random_slots(spec.max_slots_per_frame)});
    }
    std::sort(out.begin(), out.end(), [](const ActFrame& x, const ActFrame& y) { return x.act < y.act; });
    return out;
  };

  Dataset data;
  std::set<std::string> seen_states;
  while (data.size() < spec.examples) {
    TurnRecord r;
    r.dialogue_id = "syn" + std::to_string(data.size());
    r.turn_index = 0;
    r.speaker = Speaker::Agent;
    r.state.user_acts = random_frames(2, 1);
    r.state.prev_agent_acts = random_frames(2, 0);
    r.state.user_inform_slots = random_slots(3);
    r.state.user_request_slots = random_slots(2);
    r.state.turn = static_cast<int>(pick(10));
    r.state.kb_result_count = static_cast<long>(pick(4));
    r.target = random_frames(spec.max_frames, 1);
    // distinct even without the turn and KB features
    DialogueState key = r.state;
    key.turn = 0;
    key.kb_result_count = 0;
    if (!seen_states.insert(state_to_json(key).dump()).second) continue;
    Dialogue d;
    d.id = r.dialogue_id;
    d.split = "train";
    d.turns.push_back(std::move(r));
    data.push_back(std::move(d));
  }
  return data;
}

}  // namespace gcas
