#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "gcas/data/frames.hpp"
#include "gcas/data/vocab.hpp"

namespace gcas {

inline constexpr int kMaxTurn = 40;

/// Dialogue state at one turn: the six encoder sections plus turn number and
/// knowledge-base result count.
struct DialogueState {
  std::vector<ActFrame> prev_agent_acts;
  std::vector<ActFrame> user_acts;
  std::vector<std::string> user_request_slots;
  std::vector<std::string> user_inform_slots;
  std::vector<std::string> agent_request_slots;
  std::vector<std::string> agent_proposed_slots;
  int turn = 0;
  long kb_result_count = 0;

  friend bool operator==(const DialogueState&, const DialogueState&) = default;
};

/// k = [log(1 + kb result count), min(turn, 40) / 40].
struct KbFeatures {
  std::array<double, 2> values{0.0, 0.0};

  static KbFeatures from_state(const DialogueState& s) {
    const double count = static_cast<double>(std::max(0L, s.kb_result_count));
    const double turn = static_cast<double>(std::clamp(s.turn, 0, kMaxTurn));
    return {{std::log1p(count), turn / kMaxTurn}};
  }
};

namespace detail {

inline int state_token(const Vocabularies& v, const std::string& s) {
  const int i = v.state_tokens.find(s);
  return i >= 0 ? i : v.state_tokens.at(kUnk);
}

// Canonical order: slots by vocabulary index (unknown last, lexicographic),
// act frames by (act index, canonical slots).
inline std::vector<std::string> canonical_slots(const Vocabularies& v,
                                                const std::vector<std::string>& slots) {
  ActFrame tmp{"", slots};
  tmp = v.canonical(tmp);
  tmp.slots.erase(std::unique(tmp.slots.begin(), tmp.slots.end()), tmp.slots.end());
  return tmp.slots;
}

inline std::vector<ActFrame> canonical_frames(const Vocabularies& v,
                                              const std::vector<ActFrame>& frames) {
  std::vector<ActFrame> out = v.canonical(frames);
  auto key = [&](const ActFrame& f) {
    const int a = v.acts.find(f.act);
    std::vector<int> s;
    for (const auto& x : f.slots) s.push_back(v.slots.find(x));
    return std::tuple(a < 0 ? 1 << 30 : a, f.act, s, f.slots);
  };
  std::stable_sort(out.begin(), out.end(),
                   [&](const ActFrame& a, const ActFrame& b) { return key(a) < key(b); });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

/// Section marker followed by that section's act/slot tokens, for each of the
/// six sections in fixed order. Unknown tokens map to <unk>.
inline std::vector<int> serialize_state(const DialogueState& s, const Vocabularies& v) {
  const auto& markers = state_section_markers();
  std::vector<int> out;
  auto frames = [&](const std::string& marker, const std::vector<ActFrame>& fs) {
    out.push_back(v.state_tokens.at(marker));
    for (const auto& f : detail::canonical_frames(v, fs)) {
      out.push_back(detail::state_token(v, f.act));
      for (const auto& slot : f.slots) out.push_back(detail::state_token(v, slot));
    }
  };
  auto slots = [&](const std::string& marker, const std::vector<std::string>& ss) {
    out.push_back(v.state_tokens.at(marker));
    for (const auto& slot : detail::canonical_slots(v, ss)) {
      out.push_back(detail::state_token(v, slot));
    }
  };
  frames(markers[0], s.prev_agent_acts);
  frames(markers[1], s.user_acts);
  slots(markers[2], s.user_request_slots);
  slots(markers[3], s.user_inform_slots);
  slots(markers[4], s.agent_request_slots);
  slots(markers[5], s.agent_proposed_slots);
  return out;
}

inline std::size_t state_feature_size(const Vocabularies& v) {
  return state_section_markers().size() * v.state_tokens.size() + 2;
}

/// Per-section multi-hot over state tokens, followed by the two KB features.
inline std::vector<double> state_features(const DialogueState& s, const Vocabularies& v) {
  const std::size_t width = v.state_tokens.size();
  std::vector<double> out(state_feature_size(v), 0.0);
  auto hot = [&](std::size_t section, const std::string& tok) {
    out[section * width + static_cast<std::size_t>(detail::state_token(v, tok))] = 1.0;
  };
  auto frames = [&](std::size_t section, const std::vector<ActFrame>& fs) {
    for (const auto& f : fs) {
      hot(section, f.act);
      for (const auto& slot : f.slots) hot(section, slot);
    }
  };
  auto slots = [&](std::size_t section, const std::vector<std::string>& ss) {
    for (const auto& slot : ss) hot(section, slot);
  };
  frames(0, s.prev_agent_acts);
  frames(1, s.user_acts);
  slots(2, s.user_request_slots);
  slots(3, s.user_inform_slots);
  slots(4, s.agent_request_slots);
  slots(5, s.agent_proposed_slots);
  const auto k = KbFeatures::from_state(s);
  out[out.size() - 2] = k.values[0];
  out[out.size() - 1] = k.values[1];
  return out;
}

}  // namespace gcas
