#pragma once

// Multi-label classification baseline: state multi-hot ++ k through two
// rectified 128-wide layers, then one sigmoid per (act, slot) pair.

#include <string>
#include <vector>

#include "gcas/autodiff/tape.hpp"
#include "gcas/models/common.hpp"

namespace gcas {

struct ClassifierParams {
  ModelDims dims;
  ParamId w1 = 0, b1 = 0, w2 = 0, b2 = 0, w_out = 0, b_out = 0;

  static ClassifierParams create(ParameterStore& store, const ModelDims& d, std::uint64_t seed) {
    ClassifierParams p;
    p.dims = d;
    p.w1 = store.add_random("classifier.w1", {d.class_width, d.features}, seed);
    p.b1 = store.add_random("classifier.b1", {d.class_width}, seed);
    p.w2 = store.add_random("classifier.w2", {d.class_width, d.class_width}, seed);
    p.b2 = store.add_random("classifier.b2", {d.class_width}, seed);
    p.w_out = store.add_random("classifier.w_out", {d.pairs, d.class_width}, seed);
    p.b_out = store.add_random("classifier.b_out", {d.pairs}, seed);
    return p;
  }
};

/// Pair logits. `features` is the state multi-hot with the two KB features
/// already appended (see state_features).
inline Var classification_logits(Tape& tape, const ClassifierParams& p,
                                 const std::vector<double>& features) {
  if (features.size() != p.dims.features) {
    throw ShapeError("classification input has " + std::to_string(features.size()) +
                     " features, expected " + std::to_string(p.dims.features));
  }
  Var x = tape.constant(Tensor::vector(features));
  Var h1 = tape.relu(tape.affine(tape.param(p.w1), x, tape.param(p.b1)));
  Var h2 = tape.relu(tape.affine(tape.param(p.w2), h1, tape.param(p.b2)));
  return tape.affine(tape.param(p.w_out), h2, tape.param(p.b_out));
}

inline std::vector<double> classification_forward(Tape& tape, const ClassifierParams& p,
                                                  const std::vector<double>& features) {
  const Tensor& logits = classification_logits(tape, p, features).value();
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gcas::sigmoid(logits[i]);
  return out;
}

/// Summed binary cross-entropy over the pair vocabulary.
inline Var classification_loss(Tape& tape, const ClassifierParams& p,
                               const std::vector<double>& features,
                               const std::vector<double>& targets) {
  if (targets.size() != p.dims.pairs) {
    throw ShapeError("classification targets have " + std::to_string(targets.size()) +
                     " entries, expected " + std::to_string(p.dims.pairs));
  }
  return tape.sigmoid_cross_entropy(classification_logits(tape, p, features), targets);
}

/// Pairs above the threshold, grouped into frames by act.
inline std::vector<ActFrame> classification_frames(const std::vector<double>& probs,
                                                   const Vocabularies& v, double threshold = 0.5) {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] > threshold) active.push_back(i);
  return frames_from_pairs(active, v);
}

}  // namespace gcas
