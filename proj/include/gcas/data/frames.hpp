#pragma once

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gcas {

inline constexpr std::string_view kPad = "<pad>";
inline constexpr std::string_view kEos = "<eos>";
inline constexpr std::string_view kGo = "<go>";
inline constexpr std::string_view kUnk = "<unk>";
inline constexpr std::string_view kNoSlot = "<noslot>";

/// One dialogue act and its slot names. Slot values are dropped; `valued`
/// remembers which slots carried a value ("slot=") in the source notation so
/// the token encoding can reproduce the '=' markers. Equality ignores it.
struct ActFrame {
  std::string act;
  std::vector<std::string> slots;
  std::set<std::string> valued;

  ActFrame() = default;
  ActFrame(std::string a, std::vector<std::string> s, std::set<std::string> v = {})
      : act(std::move(a)), slots(std::move(s)), valued(std::move(v)) {}

  bool has_slot(std::string_view s) const {
    return std::find(slots.begin(), slots.end(), s) != slots.end();
  }
  void add_slot(const std::string& s, bool with_value = false) {
    if (!has_slot(s)) slots.push_back(s);
    if (with_value) valued.insert(s);
  }
  std::set<std::string> slot_set() const { return {slots.begin(), slots.end()}; }

  friend bool operator==(const ActFrame& a, const ActFrame& b) {
    return a.act == b.act && a.slots == b.slots;
  }
};

/// A user frame informs a slot when the slot carried a value or the frame is
/// an inform act.
inline bool informs_slot(const ActFrame& f, const std::string& slot) {
  return f.has_slot(slot) && (f.valued.contains(slot) || f.act == "inform");
}

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

namespace detail {
inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}
}  // namespace detail

/// Parses `act(slot=value; slot; ...) act(...)` into frames in annotation
/// order. Values (including brace lists and nested parentheses) are skipped.
inline std::vector<ActFrame> parse_frames(std::string_view text) {
  std::vector<ActFrame> frames;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto skip_space = [&] {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  for (skip_space(); i < n; skip_space()) {
    const std::size_t act_start = i;
    while (i < n && text[i] != '(' && text[i] != ')' &&
           !std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    if (i == act_start) throw ParseError("expected act name", i);
    ActFrame frame;
    frame.act = std::string(text.substr(act_start, i - act_start));
    skip_space();
    if (i >= n || text[i] != '(') throw ParseError("expected '(' after act " + frame.act, i);
    const std::size_t open = i++;
    std::size_t item_start = i;
    int parens = 0, braces = 0;
    bool closed = false;
    auto flush_item = [&](std::size_t end) {
      const std::string item = detail::trim(text.substr(item_start, end - item_start));
      if (item.empty()) return;
      const auto eq = item.find('=');
      const std::string name = detail::trim(std::string_view(item).substr(0, eq));
      if (name.empty()) throw ParseError("empty slot name", item_start);
      frame.add_slot(name, eq != std::string::npos);
    };
    for (; i < n; ++i) {
      const char c = text[i];
      if (c == '{') ++braces;
      else if (c == '}') {
        if (--braces < 0) throw ParseError("unbalanced '}'", i);
      } else if (c == '(') ++parens;
      else if (c == ')') {
        if (parens > 0) {
          --parens;
          continue;
        }
        if (braces != 0) throw ParseError("unbalanced '{'", i);
        flush_item(i);
        ++i;
        closed = true;
        break;
      } else if (c == ';' && parens == 0 && braces == 0) {
        flush_item(i);
        item_start = i + 1;
      }
    }
    if (!closed) throw ParseError("unbalanced '(' opened", open);
    frames.push_back(std::move(frame));
  }
  return frames;
}

/// Value-free annotation: `inform(moviename;genre) multiple_choice(moviename)`.
inline std::string format_frames(const std::vector<ActFrame>& frames) {
  std::string out;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (f) out += ' ';
    out += frames[f].act + '(';
    for (std::size_t s = 0; s < frames[f].slots.size(); ++s) {
      if (s) out += ';';
      out += frames[f].slots[s];
    }
    out += ')';
  }
  return out;
}

}  // namespace gcas
