#pragma once

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcas/data/dataset.hpp"
#include "gcas/data/encodings.hpp"
#include "gcas/data/state.hpp"

namespace gcas {

enum class ModelKind { Classification, Seq2Seq, Cas, Gcas };

inline const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Classification: return "classification";
    case ModelKind::Seq2Seq: return "seq2seq";
    case ModelKind::Cas: return "cas";
    case ModelKind::Gcas: return "gcas";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  for (auto k : {ModelKind::Classification, ModelKind::Seq2Seq, ModelKind::Cas, ModelKind::Gcas}) {
    if (s == model_kind_name(k)) return k;
  }
  throw std::invalid_argument("unknown model kind '" + s + "'");
}

struct ModelDims {
  std::size_t state_vocab = 0;
  std::size_t acts = 0;  // includes <pad> at 0
  std::size_t slots = 0;
  std::size_t pairs = 0;
  std::size_t target_vocab = 0;
  std::size_t features = 0;
  std::size_t hidden = 64;
  std::size_t embed = 64;
  std::size_t class_width = 128;

  std::size_t cas_input() const { return kContinueSize + acts + slots + 2; }

  static ModelDims from_vocab(const Vocabularies& v, std::size_t hidden, std::size_t class_width) {
    ModelDims d;
    d.state_vocab = v.state_tokens.size();
    d.acts = v.acts.size();
    d.slots = v.slots.size();
    d.pairs = v.pairs.size();
    d.target_vocab = v.target_tokens.size();
    d.features = state_feature_size(v);
    d.hidden = hidden;
    d.embed = hidden;
    d.class_width = class_width;
    return d;
  }
};

// Fixed ids of the special target tokens (see Vocabularies::empty).
inline constexpr int kTargetPad = 0;
inline constexpr int kTargetGo = 1;
inline constexpr int kTargetEos = 2;

/// One decoder step target: continue index, act index, slot multi-hot.
struct CasStep {
  int cont = static_cast<int>(Continue::Pad);
  int act = 0;
  std::vector<double> slots;

  bool masked() const { return cont == static_cast<int>(Continue::Pad); }
  friend bool operator==(const CasStep&, const CasStep&) = default;
};

/// Training/evaluation instance with every encoding the four model families
/// consume.
struct Example {
  std::vector<int> state_tokens;
  std::vector<double> features;
  KbFeatures kb;
  std::vector<CasStep> cas;
  std::vector<int> tokens;
  std::vector<double> pairs;
  std::vector<ActFrame> gold;
};

inline std::vector<CasStep> encode_cas(const std::vector<CasTuple>& seq, const Vocabularies& v) {
  std::vector<CasStep> out;
  for (const auto& t : seq) {
    CasStep s;
    s.cont = static_cast<int>(t.cont);
    const int a = v.acts.find(t.act);
    s.act = a < 0 ? 0 : a;
    s.slots.assign(v.slots.size(), 0.0);
    for (const auto& slot : t.slots) {
      const int i = v.slots.find(slot);
      if (i >= 0) s.slots[static_cast<std::size_t>(i)] = 1.0;
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline CasTuple decode_cas(const CasStep& s, const Vocabularies& v) {
  CasTuple t;
  t.cont = static_cast<Continue>(s.cont);
  if (t.cont == Continue::Stop) return CasTuple::stop();
  t.act = v.acts[static_cast<std::size_t>(s.act)];
  for (std::size_t i = 0; i < s.slots.size(); ++i)
    if (s.slots[i] > 0.5) t.slots.push_back(v.slots[i]);
  return t;
}

inline std::vector<int> encode_tokens(const std::vector<std::string>& toks, const Vocabularies& v) {
  std::vector<int> out;
  out.reserve(toks.size());
  const int unk = v.target_tokens.at(kUnk);
  for (const auto& t : toks) {
    const int i = v.target_tokens.find(t);
    out.push_back(i < 0 ? unk : i);
  }
  return out;
}

inline std::vector<std::string> decode_tokens(const std::vector<int>& ids, const Vocabularies& v) {
  std::vector<std::string> out;
  for (int i : ids) out.push_back(v.target_tokens[static_cast<std::size_t>(i)]);
  return out;
}

inline Example make_example(const DialogueState& state, const std::vector<ActFrame>& gold,
                            const Vocabularies& v) {
  Example ex;
  ex.state_tokens = serialize_state(state, v);
  ex.features = state_features(state, v);
  ex.kb = KbFeatures::from_state(state);
  ex.gold = v.canonical(gold);
  ex.cas = encode_cas(to_cas_sequence(ex.gold), v);
  ex.tokens = encode_tokens(to_token_sequence(ex.gold), v);
  ex.pairs = to_pair_targets(ex.gold, v).targets;
  return ex;
}

inline Example make_example(const TurnRecord& r, const Vocabularies& v) {
  return make_example(r.state, r.target, v);
}

/// Agent turns of the given dialogues, in order.
inline std::vector<Example> make_examples(const Dataset& data, const Vocabularies& v) {
  std::vector<Example> out;
  for (const auto& d : data)
    for (const auto& r : d.turns)
      if (r.speaker == Speaker::Agent) out.push_back(make_example(r, v));
  return out;
}

/// True with probability `rate`; rate 1 always forces, rate 0 never does.
inline bool teacher_force_choice(std::mt19937_64& rng, double rate) {
  if (rate >= 1.0) return true;
  if (rate <= 0.0) return false;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < rate;
}

/// Coin source used by the decoders during training.
struct TeacherForcing {
  std::mt19937_64* rng = nullptr;
  double rate = 1.0;
  bool draw() const { return rng ? teacher_force_choice(*rng, rate) : rate >= 1.0; }
};

inline std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace gcas
