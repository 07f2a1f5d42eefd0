#pragma once

// Converter from the MSR end-to-end dialogue challenge TSV layout
// (session.ID, Message.ID, Message.Timestamp, Message.From, Message.Text,
// dialogue-act columns...) into the JSONL turn schema.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gcas/data/dataset.hpp"

namespace gcas {

struct MsrConversion {
  Dataset data;
  std::size_t unparsed_rows = 0;
  std::vector<std::string> warnings;
};

struct SplitCounts {
  std::size_t train = 0, valid = 0, test = 0;
};

/// valid = floor(0.15 n), test = floor(0.35 n), train = the rest; dialogues are
/// assigned train, valid, test in ascending session order.
inline SplitCounts split_counts(std::size_t n) {
  SplitCounts c;
  c.valid = n * 15 / 100;
  c.test = n * 35 / 100;
  c.train = n - c.valid - c.test;
  return c;
}

// (session, message) -> KB result count
using KbCounts = std::map<std::pair<std::string, std::string>, long>;

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline bool is_integer(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

inline void add_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

inline void remove_value(std::vector<std::string>& v, const std::string& s) {
  v.erase(std::remove(v.begin(), v.end(), s), v.end());
}

struct RawTurn {
  std::string message_id;
  Speaker speaker;
  std::vector<ActFrame> acts;
};

// Rule-based state tracking over annotated acts:
//  - user slots with a value, or in an inform act, are user-informed;
//    value-less slots of user request acts are user-requested until the agent
//    provides them;
//  - value-less slots of agent request acts are agent-requested; every other
//    agent slot is agent-proposed.
inline std::vector<TurnRecord> track_dialogue(const std::string& id,
                                              const std::vector<RawTurn>& raw,
                                              const KbCounts* kb) {
  std::vector<TurnRecord> out;
  DialogueState st;
  std::vector<ActFrame> pending_user;
  for (std::size_t t = 0; t < raw.size(); ++t) {
    const RawTurn& rt = raw[t];
    TurnRecord rec;
    rec.dialogue_id = id;
    rec.turn_index = static_cast<int>(t);
    rec.speaker = rt.speaker;
    rec.target = rt.acts;
    rec.state = st;
    rec.state.user_acts = pending_user;
    rec.state.turn = static_cast<int>(t);
    std::optional<long> count;
    if (kb) {
      auto it = kb->find({id, rt.message_id});
      if (it != kb->end()) count = it->second;
    }
    rec.state.kb_result_count = count.value_or(0);
    if (rt.speaker == Speaker::Agent) {
      const bool informs = std::any_of(rt.acts.begin(), rt.acts.end(),
                                       [](const ActFrame& f) { return f.act == "inform"; });
      const bool queried = kb ? count.value_or(0) > 0 : informs;
      if (queried) rec.kb_query_slots = st.user_inform_slots;
      for (const auto& f : rt.acts) {
        for (const auto& s : f.slots) {
          if (f.act == "request" && !f.valued.contains(s)) add_unique(st.agent_request_slots, s);
          else {
            add_unique(st.agent_proposed_slots, s);
            remove_value(st.user_request_slots, s);
          }
        }
      }
      st.prev_agent_acts = rt.acts;
      pending_user.clear();
    } else {
      for (const auto& f : rt.acts) {
        pending_user.push_back(f);
        for (const auto& s : f.slots) {
          if (informs_slot(f, s)) add_unique(st.user_inform_slots, s);
          else if (f.act == "request") add_unique(st.user_request_slots, s);
        }
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace detail

inline KbCounts read_kb_counts(std::istream& in) {
  KbCounts out;
  std::string line;
  while (std::getline(in, line)) {
    auto cols = detail::split_tabs(line);
    if (cols.size() < 3 || !detail::is_integer(cols[2])) continue;
    out[{cols[0], cols[1]}] = std::stol(cols[2]);
  }
  return out;
}

inline MsrConversion convert_msr(std::istream& tsv, const KbCounts* kb = nullptr) {
  MsrConversion conv;
  std::map<long long, std::vector<detail::RawTurn>> sessions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(tsv, line)) {
    ++line_no;
    auto cols = detail::split_tabs(line);
    if (cols.size() < 4 || !detail::is_integer(cols[0])) continue;  // header or blank
    detail::RawTurn rt;
    rt.message_id = cols[1];
    std::string from = cols[3];
    std::transform(from.begin(), from.end(), from.begin(), ::tolower);
    if (from == "user") rt.speaker = Speaker::User;
    else if (from == "agent") rt.speaker = Speaker::Agent;
    else throw DataError("line " + std::to_string(line_no) + ": unknown speaker '" + cols[3] + "'");
    std::string acts;
    for (std::size_t c = 5; c < cols.size(); ++c) acts += cols[c] + " ";
    try {
      rt.acts = parse_frames(acts);
    } catch (const ParseError& e) {
      ++conv.unparsed_rows;
      conv.warnings.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
    sessions[std::stoll(cols[0])].push_back(std::move(rt));
  }
  const SplitCounts counts = split_counts(sessions.size());
  std::size_t i = 0;
  for (const auto& [session, raw] : sessions) {
    const std::string id = std::to_string(session);
    Dialogue d;
    d.id = id;
    d.split = i < counts.train ? "train" : i < counts.train + counts.valid ? "valid" : "test";
    d.turns = detail::track_dialogue(id, raw, kb);
    for (auto& r : d.turns) r.split = d.split;
    conv.data.push_back(std::move(d));
    ++i;
  }
  return conv;
}

/// Locates `<domain>_all.tsv` directly in `dir` or under `dir/data`.
inline std::optional<std::filesystem::path> find_msr_file(const std::filesystem::path& dir,
                                                          const std::string& domain) {
  for (const auto& cand : {dir / (domain + "_all.tsv"), dir / "data" / (domain + "_all.tsv")}) {
    if (std::filesystem::is_regular_file(cand)) return cand;
  }
  return std::nullopt;
}

}  // namespace gcas
