#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "gcas/data/frames.hpp"
#include "gcas/data/vocab.hpp"

namespace gcas {

enum class Continue { Continue = 0, Stop = 1, Pad = 2 };
inline constexpr std::size_t kContinueSize = 3;

inline const char* continue_name(Continue c) {
  switch (c) {
    case Continue::Continue: return "<continue>";
    case Continue::Stop: return "<stop>";
    case Continue::Pad: return "<pad>";
  }
  return "?";
}

/// (continue, act, slots); the terminal tuple is (<stop>, <pad>, {}).
struct CasTuple {
  Continue cont = Continue::Pad;
  std::string act = std::string(kPad);
  std::vector<std::string> slots;

  static CasTuple stop() { return {Continue::Stop, std::string(kPad), {}}; }
  friend bool operator==(const CasTuple&, const CasTuple&) = default;
};

inline std::string format_cas_tuple(const CasTuple& t) {
  std::string out = std::string("(") + continue_name(t.cont) + ", " + t.act + ", {";
  for (std::size_t i = 0; i < t.slots.size(); ++i) {
    if (i) out += ", ";
    out += t.slots[i];
  }
  return out + "})";
}

inline std::string format_cas_sequence(const std::vector<CasTuple>& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += format_cas_tuple(seq[i]);
  }
  return out;
}

inline std::vector<CasTuple> to_cas_sequence(const std::vector<ActFrame>& frames) {
  std::vector<CasTuple> out;
  out.reserve(frames.size() + 1);
  for (const auto& f : frames) out.push_back({Continue::Continue, f.act, f.slots});
  out.push_back(CasTuple::stop());
  return out;
}

/// Lenient inverse: stops at the first <stop>; skips <pad> continues and
/// <pad> acts.
inline std::vector<ActFrame> from_cas_sequence(const std::vector<CasTuple>& seq) {
  std::vector<ActFrame> out;
  for (const auto& t : seq) {
    if (t.cont == Continue::Stop) break;
    if (t.cont == Continue::Pad || t.act == kPad) continue;
    ActFrame f;
    f.act = t.act;
    for (const auto& s : t.slots) f.add_slot(s);
    out.push_back(std::move(f));
  }
  return out;
}

/// act ( slot = ; slot ) ... <eos>. A slot is followed by '=' when it carried
/// a value in the annotation.
inline std::vector<std::string> to_token_sequence(const std::vector<ActFrame>& frames) {
  std::vector<std::string> out;
  for (const auto& f : frames) {
    out.push_back(f.act);
    out.emplace_back("(");
    for (std::size_t i = 0; i < f.slots.size(); ++i) {
      if (i) out.emplace_back(";");
      out.push_back(f.slots[i]);
      if (f.valued.contains(f.slots[i])) out.emplace_back("=");
    }
    out.emplace_back(")");
  }
  out.emplace_back(kEos);
  return out;
}

/// Lenient left-to-right scan. Act tokens open frames, slot tokens inside an
/// open frame add slots, ')' closes the frame, everything else is skipped and
/// <eos> ends the scan.
inline std::vector<ActFrame> from_token_sequence(const std::vector<std::string>& tokens,
                                                 const Vocabularies& vocab) {
  std::vector<ActFrame> out;
  bool open = false;
  bool in_parens = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    if (tok == kEos) break;
    if (tok == "(") {
      in_parens = open;
      continue;
    }
    if (tok == ")") {
      open = in_parens = false;
      continue;
    }
    const bool is_act = tok != kPad && vocab.acts.contains(tok);
    const bool is_slot = vocab.slots.contains(tok);
    if (is_slot && open && (in_parens || !is_act)) {
      const bool valued = i + 1 < tokens.size() && tokens[i + 1] == "=";
      out.back().add_slot(tok, valued);
    } else if (is_act) {
      out.push_back(ActFrame{tok, {}});
      open = true;
      in_parens = false;
    }
  }
  return out;
}

inline std::string format_token_sequence(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += "'" + tokens[i] + "'";
  }
  return out;
}

struct PairEncoding {
  std::vector<double> targets;
  std::vector<std::string> dropped;  // pairs absent from the vocabulary
};

inline PairEncoding to_pair_targets(const std::vector<ActFrame>& frames, const Vocabularies& vocab) {
  PairEncoding enc;
  enc.targets.assign(vocab.pairs.size(), 0.0);
  auto mark = [&](const std::string& pair) {
    const int i = vocab.pairs.find(pair);
    if (i < 0) enc.dropped.push_back(pair);
    else enc.targets[static_cast<std::size_t>(i)] = 1.0;
  };
  for (const auto& f : frames) {
    if (f.slots.empty()) mark(pair_name(f.act, kNoSlot));
    for (const auto& s : f.slots) mark(pair_name(f.act, s));
  }
  return enc;
}

/// Groups active pairs (in pair-vocabulary order) into frames, acts ordered by
/// first active pair.
inline std::vector<ActFrame> frames_from_pairs(const std::vector<std::size_t>& active,
                                               const Vocabularies& vocab) {
  std::vector<ActFrame> out;
  for (std::size_t idx : active) {
    const std::string& pair = vocab.pairs[idx];
    const auto plus = pair.find('+');
    const std::string act = pair.substr(0, plus);
    const std::string slot = pair.substr(plus + 1);
    auto it = std::find_if(out.begin(), out.end(), [&](const ActFrame& f) { return f.act == act; });
    if (it == out.end()) {
      out.push_back(ActFrame{act, {}});
      it = out.end() - 1;
    }
    if (slot != kNoSlot) it->add_slot(slot);
  }
  return out;
}

inline std::string format_pairs(const std::vector<ActFrame>& frames) {
  std::string out;
  for (const auto& f : frames) {
    auto emit = [&](std::string_view slot) {
      if (!out.empty()) out += ", ";
      out += pair_name(f.act, slot);
    };
    if (f.slots.empty()) emit(kNoSlot);
    for (const auto& s : f.slots) emit(s);
  }
  return out;
}

}  // namespace gcas
