#pragma once

#include <string>

#include "gcas/autodiff/tape.hpp"

namespace gcas {

/// Gate weights act on the concatenation [input, hidden].
struct GruParams {
  ParamId w_update = 0, b_update = 0;
  ParamId w_reset = 0, b_reset = 0;
  ParamId w_candidate = 0, b_candidate = 0;
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;

  static GruParams create(ParameterStore& store, const std::string& prefix, std::size_t input,
                          std::size_t hidden, std::uint64_t seed) {
    GruParams p;
    p.input_size = input;
    p.hidden_size = hidden;
    const Shape w{hidden, input + hidden};
    const Shape b{hidden};
    p.w_update = store.add_random(prefix + ".w_update", w, seed);
    p.b_update = store.add_random(prefix + ".b_update", b, seed);
    p.w_reset = store.add_random(prefix + ".w_reset", w, seed);
    p.b_reset = store.add_random(prefix + ".b_reset", b, seed);
    p.w_candidate = store.add_random(prefix + ".w_candidate", w, seed);
    p.b_candidate = store.add_random(prefix + ".b_candidate", b, seed);
    return p;
  }
};

struct GruOutput {
  Var g;  // cell output; identical to h
  Var h;
};

/// z = sigmoid(Wz[x,h] + bz), r = sigmoid(Wr[x,h] + br),
/// c = tanh(Wc[x, r*h] + bc), h' = (1 - z)*h + z*c.
inline GruOutput gru_step(Tape& tape, const GruParams& p, Var x, Var h_prev) {
  if (x.value().shape != Shape{p.input_size} || h_prev.value().shape != Shape{p.hidden_size}) {
    throw ShapeError("gru_step: expected input [" + std::to_string(p.input_size) +
                     "] and hidden [" + std::to_string(p.hidden_size) + "], got " +
                     shape_string(x.value().shape) + " and " + shape_string(h_prev.value().shape));
  }
  const Var xh = tape.concat({x, h_prev});
  const Var z = tape.sigmoid(tape.affine(tape.param(p.w_update), xh, tape.param(p.b_update)));
  const Var r = tape.sigmoid(tape.affine(tape.param(p.w_reset), xh, tape.param(p.b_reset)));
  const Var xrh = tape.concat({x, tape.mul(r, h_prev)});
  const Var cand =
      tape.tanh(tape.affine(tape.param(p.w_candidate), xrh, tape.param(p.b_candidate)));
  // (1 - z)*h + z*c written as h + z*(c - h)
  const Var h = tape.add(h_prev, tape.mul(z, tape.sub(cand, h_prev)));
  return {h, h};
}

}  // namespace gcas
