#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "gcas/data/frames.hpp"
#include "json.hpp"

namespace gcas {

/// Bijective string <-> id map in insertion order.
class Index {
 public:
  Index() = default;
  Index(std::initializer_list<std::string_view> items) {
    for (auto s : items) add(std::string(s));
  }

  int add(const std::string& s) {
    auto [it, inserted] = ids_.try_emplace(s, static_cast<int>(items_.size()));
    if (inserted) items_.push_back(s);
    return it->second;
  }
  /// -1 when absent.
  int find(std::string_view s) const {
    auto it = ids_.find(std::string(s));
    return it == ids_.end() ? -1 : it->second;
  }
  bool contains(std::string_view s) const { return find(s) >= 0; }
  int at(std::string_view s) const {
    const int i = find(s);
    if (i < 0) throw std::out_of_range("unknown vocabulary item '" + std::string(s) + "'");
    return i;
  }
  const std::string& operator[](std::size_t i) const { return items_.at(i); }
  std::size_t size() const { return items_.size(); }
  const std::vector<std::string>& items() const { return items_; }

  friend bool operator==(const Index& a, const Index& b) { return a.items_ == b.items_; }

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, int> ids_;
};

inline std::string pair_name(std::string_view act, std::string_view slot) {
  return std::string(act) + "+" + std::string(slot);
}

/// Six state-section markers in serialization order.
inline const std::vector<std::string>& state_section_markers() {
  static const std::vector<std::string> markers = {
      "<prev_agent_acts>",     "<user_acts>",           "<user_request_slots>",
      "<user_inform_slots>",   "<agent_request_slots>", "<agent_proposed_slots>"};
  return markers;
}

struct Vocabularies {
  Index acts;     // "<pad>" at 0
  Index slots;
  Index pairs;    // "act+slot", zero-slot acts as "act+<noslot>"
  Index state_tokens;
  Index target_tokens;

  static Vocabularies empty() {
    Vocabularies v;
    v.acts.add(std::string(kPad));
    v.state_tokens.add(std::string(kPad));
    v.state_tokens.add(std::string(kUnk));
    for (const auto& m : state_section_markers()) v.state_tokens.add(m);
    for (auto t : {kPad, kGo, kEos, kUnk}) v.target_tokens.add(std::string(t));
    for (auto t : {"(", ")", "=", ";"}) v.target_tokens.add(t);
    return v;
  }

  void add_frame(const ActFrame& f) {
    acts.add(f.act);
    state_tokens.add(f.act);
    for (const auto& s : f.slots) {
      slots.add(s);
      state_tokens.add(s);
    }
  }
  void add_slot(const std::string& s) {
    slots.add(s);
    state_tokens.add(s);
  }
  void add_target_frame(const ActFrame& f) {
    add_frame(f);
    if (f.slots.empty()) pairs.add(pair_name(f.act, kNoSlot));
    for (const auto& s : f.slots) pairs.add(pair_name(f.act, s));
  }

  /// Target tokens are fixed punctuation followed by acts then slots; call
  /// once after all frames have been added.
  void finalize() {
    for (std::size_t i = 1; i < acts.size(); ++i) target_tokens.add(acts[i]);
    for (const auto& s : slots.items()) target_tokens.add(s);
  }

  /// Sorts slots into slot-vocabulary order; unknown slots follow in
  /// lexicographic order.
  ActFrame canonical(const ActFrame& f) const {
    ActFrame out = f;
    std::stable_sort(out.slots.begin(), out.slots.end(), [&](const auto& a, const auto& b) {
      const int ia = slots.find(a), ib = slots.find(b);
      if (ia >= 0 && ib >= 0) return ia < ib;
      if (ia >= 0 || ib >= 0) return ia >= 0;
      return a < b;
    });
    return out;
  }
  std::vector<ActFrame> canonical(const std::vector<ActFrame>& frames) const {
    std::vector<ActFrame> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(canonical(f));
    return out;
  }

  nlohmann::json to_json() const {
    return {{"acts", acts.items()},
            {"slots", slots.items()},
            {"pairs", pairs.items()},
            {"state_tokens", state_tokens.items()},
            {"target_tokens", target_tokens.items()}};
  }

  static Vocabularies from_json(const nlohmann::json& j) {
    Vocabularies v;
    auto fill = [&](Index& idx, const char* key) {
      for (const auto& s : j.at(key)) idx.add(s.get<std::string>());
    };
    fill(v.acts, "acts");
    fill(v.slots, "slots");
    fill(v.pairs, "pairs");
    fill(v.state_tokens, "state_tokens");
    fill(v.target_tokens, "target_tokens");
    return v;
  }

  /// FNV-1a over the serialized vocabularies, as 16 hex digits.
  std::string fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : to_json().dump()) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  friend bool operator==(const Vocabularies&, const Vocabularies&) = default;
};

}  // namespace gcas
