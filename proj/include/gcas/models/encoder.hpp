#pragma once

#include <span>
#include <string>
#include <vector>

#include "gcas/autodiff/gru.hpp"
#include "gcas/models/common.hpp"

namespace gcas {

struct EncoderParams {
  ParamId embedding = 0;  // [state vocab x embed]
  GruParams gru;

  static EncoderParams create(ParameterStore& store, const std::string& prefix,
                              const ModelDims& d, std::uint64_t seed) {
    EncoderParams p;
    p.embedding = store.add_random(prefix + ".embedding", {d.state_vocab, d.embed}, seed);
    p.gru = GruParams::create(store, prefix + ".gru", d.embed, d.hidden, seed);
    return p;
  }
};

/// Hidden state after every input token; `final` is the last of them.
struct EncoderOutput {
  std::vector<Var> states;
  Var final;
};

/// Embeds the serialized state and runs a single-layer GRU from a zero state.
inline EncoderOutput encode_state(Tape& tape, const EncoderParams& p, std::span<const int> tokens) {
  if (tokens.empty()) throw std::invalid_argument("encode_state: empty token sequence");
  const Var table = tape.param(p.embedding);
  Var h = tape.constant(Tensor({p.gru.hidden_size}, 0.0));
  EncoderOutput out;
  out.states.reserve(tokens.size());
  for (int tok : tokens) {
    h = gru_step(tape, p.gru, tape.embedding(table, static_cast<std::size_t>(tok)), h).h;
    out.states.push_back(h);
  }
  out.final = h;
  return out;
}

}  // namespace gcas
