#pragma once

// Attention sequence-to-sequence baseline. The decoder GRU reads the previous
// target token's embedding concatenated with an additive-attention context
// over the encoder states; beam search ranks hypotheses by summed log
// probability.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "gcas/autodiff/gru.hpp"
#include "gcas/models/common.hpp"
#include "gcas/models/encoder.hpp"

namespace gcas {

struct AttentionParams {
  ParamId w_enc = 0;  // W1, applied to encoder states
  ParamId w_dec = 0;  // W2, applied to the decoder state
  ParamId v = 0;      // [1 x hidden]

  static AttentionParams create(ParameterStore& store, const std::string& prefix, std::size_t hidden,
                                std::uint64_t seed) {
    AttentionParams p;
    p.w_enc = store.add_random(prefix + ".w_enc", {hidden, hidden}, seed);
    p.w_dec = store.add_random(prefix + ".w_dec", {hidden, hidden}, seed);
    p.v = store.add_random(prefix + ".v", {1, hidden}, seed);
    return p;
  }
};

struct Seq2SeqParams {
  ModelDims dims;
  EncoderParams encoder;
  ParamId target_embedding = 0;  // [target vocab x embed]
  AttentionParams attention;
  GruParams gru;                 // input: embed + hidden
  ParamId w_out = 0, b_out = 0;  // [target vocab x 2 hidden]

  static Seq2SeqParams create(ParameterStore& store, const ModelDims& d, std::uint64_t seed) {
    Seq2SeqParams p;
    p.dims = d;
    p.encoder = EncoderParams::create(store, "encoder", d, seed);
    p.target_embedding = store.add_random("seq2seq.target_embedding", {d.target_vocab, d.embed}, seed);
    p.attention = AttentionParams::create(store, "seq2seq.attention", d.hidden, seed);
    p.gru = GruParams::create(store, "seq2seq.gru", d.embed + d.hidden, d.hidden, seed);
    p.w_out = store.add_random("seq2seq.w_out", {d.target_vocab, 2 * d.hidden}, seed);
    p.b_out = store.add_random("seq2seq.b_out", {d.target_vocab}, seed);
    return p;
  }
};

/// Encoder states with their W1 projections, computed once per input.
struct AttentionMemory {
  Var states;                  // [hidden x l], column i = e_i
  std::vector<Var> projected;  // W1 e_i
};

struct AttentionOutput {
  Var weights;  // alpha, length l
  Var context;
};

inline AttentionMemory prepare_attention(Tape& tape, const AttentionParams& p,
                                         const std::vector<Var>& enc_states) {
  if (enc_states.empty()) throw std::invalid_argument("attention: empty encoder sequence");
  AttentionMemory m;
  m.states = tape.stack_columns(enc_states);
  const Var w1 = tape.param(p.w_enc);
  m.projected.reserve(enc_states.size());
  for (const Var& e : enc_states) m.projected.push_back(tape.matmul(w1, e));
  return m;
}

/// alpha_i = softmax_i(v . tanh(W1 e_i + W2 h)); context = sum_i alpha_i e_i.
inline AttentionOutput attention(Tape& tape, const AttentionParams& p, const AttentionMemory& m,
                                 Var h) {
  const Var q = tape.matmul(tape.param(p.w_dec), h);
  const Var v = tape.param(p.v);
  std::vector<Var> scores;
  scores.reserve(m.projected.size());
  for (const Var& pe : m.projected) scores.push_back(tape.matmul(v, tape.tanh(tape.add(pe, q))));
  AttentionOutput out;
  out.weights = tape.softmax(tape.concat(scores));
  out.context = tape.matmul(m.states, out.weights);
  return out;
}

struct Seq2SeqStep {
  Var h;
  Var logits;
  AttentionOutput att;
};

inline Seq2SeqStep seq2seq_step(Tape& tape, const Seq2SeqParams& p, const AttentionMemory& m,
                                Var h_prev, int prev_token) {
  if (prev_token < 0 || static_cast<std::size_t>(prev_token) >= p.dims.target_vocab) {
    throw ShapeError("seq2seq: token " + std::to_string(prev_token) + " outside target vocabulary of " +
                     std::to_string(p.dims.target_vocab));
  }
  Seq2SeqStep s;
  s.att = attention(tape, p.attention, m, h_prev);
  const Var emb = tape.embedding(tape.param(p.target_embedding), static_cast<std::size_t>(prev_token));
  s.h = gru_step(tape, p.gru, tape.concat({emb, s.att.context}), h_prev).h;
  s.logits = tape.affine(tape.param(p.w_out), tape.concat({s.h, s.att.context}), tape.param(p.b_out));
  return s;
}

/// Summed per-token cross-entropy under teacher forcing, starting from <go>.
/// Positions holding <pad> (batch padding) end the sequence.
inline Var seq2seq_loss(Tape& tape, const Seq2SeqParams& p, const EncoderOutput& enc,
                        std::span<const int> targets) {
  if (targets.empty() || targets.front() == kTargetPad)
    throw std::invalid_argument("seq2seq loss: empty target sequence");
  const AttentionMemory m = prepare_attention(tape, p.attention, enc.states);
  Var h = enc.final;
  int prev = kTargetGo;
  Var loss = tape.constant(Tensor::scalar(0.0));
  for (int y : targets) {
    if (y == kTargetPad) break;
    Seq2SeqStep s = seq2seq_step(tape, p, m, h, prev);
    loss = tape.add(loss, tape.softmax_cross_entropy(s.logits, static_cast<std::size_t>(y)));
    h = s.h;
    prev = y;
  }
  return loss;
}

struct BeamHypothesis {
  std::vector<int> tokens;  // includes the closing <eos> when one was produced
  double log_prob = 0.0;
  bool finished = false;
};

/// Incremental decoder over one encoded state, for greedy and beam search.
/// Owns its tape, so the parameter store must outlive it.
class Seq2SeqDecoder {
 public:
  using State = Var;

  Seq2SeqDecoder(const ParameterStore& store, const Seq2SeqParams& p, std::span<const int> state_tokens)
      : p_(&p), tape_(store) {
    const EncoderOutput enc = encode_state(tape_, p.encoder, state_tokens);
    memory_ = prepare_attention(tape_, p.attention, enc.states);
    initial_ = enc.final;
  }

  std::size_t vocab_size() const { return p_->dims.target_vocab; }
  int eos() const { return kTargetEos; }
  State initial() const { return initial_; }

  /// Next state and log-probabilities over the target vocabulary, where
  /// `prev` is the previous token (<go> at the first step).
  std::pair<State, std::vector<double>> step(State h, int prev) {
    Seq2SeqStep s = seq2seq_step(tape_, *p_, memory_, h, prev);
    return {s.h, gcas::log_softmax(s.logits.value().values)};
  }

 private:
  const Seq2SeqParams* p_;
  Tape tape_;
  AttentionMemory memory_;
  Var initial_;
};

/// Argmax decoding (ties to the lowest token id) until <eos> or max_len tokens.
template <class Decoder>
BeamHypothesis greedy_search(Decoder& dec, std::size_t max_len) {
  BeamHypothesis out;
  auto state = dec.initial();
  int prev = kTargetGo;
  while (out.tokens.size() < max_len) {
    auto [next, logp] = dec.step(state, prev);
    const int tok = static_cast<int>(argmax(logp));
    out.tokens.push_back(tok);
    out.log_prob += logp[static_cast<std::size_t>(tok)];
    state = next;
    prev = tok;
    if (tok == dec.eos()) break;
  }
  out.finished = true;
  return out;
}

/// Beam search by summed log probability. At each depth the best `beam`
/// extensions of all live hypotheses survive (ties: earlier hypothesis, then
/// lower token id); an extension by <eos>, or one reaching max_len, is
/// finished. Search ends early once the best finished hypothesis scores at
/// least the best live one, since extensions only lower the score.
template <class Decoder>
BeamHypothesis beam_search(Decoder& dec, std::size_t beam, std::size_t max_len) {
  if (beam == 0) throw std::invalid_argument("beam_search: beam size must be positive");
  struct Live {
    BeamHypothesis hyp;
    typename Decoder::State state;
  };
  struct Candidate {
    double score;
    std::size_t parent;
    int token;
  };
  std::vector<Live> live{Live{BeamHypothesis{}, dec.initial()}};
  std::vector<BeamHypothesis> finished;
  auto better = [](const BeamHypothesis& a, const BeamHypothesis& b) { return a.log_prob > b.log_prob; };

  for (std::size_t depth = 0; depth < max_len && !live.empty(); ++depth) {
    std::vector<Candidate> cands;
    std::vector<typename Decoder::State> next_states;
    for (std::size_t i = 0; i < live.size(); ++i) {
      const int prev = live[i].hyp.tokens.empty() ? kTargetGo : live[i].hyp.tokens.back();
      auto [next, logp] = dec.step(live[i].state, prev);
      next_states.push_back(next);
      for (std::size_t t = 0; t < logp.size(); ++t)
        cands.push_back(Candidate{live[i].hyp.log_prob + logp[t], i, static_cast<int>(t)});
    }
    const std::size_t keep = std::min(beam, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<long>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Live> survivors;
    for (std::size_t c = 0; c < keep; ++c) {
      BeamHypothesis h = live[cands[c].parent].hyp;
      h.tokens.push_back(cands[c].token);
      h.log_prob = cands[c].score;
      if (cands[c].token == dec.eos() || h.tokens.size() >= max_len) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        survivors.push_back(Live{std::move(h), next_states[cands[c].parent]});
      }
    }
    live = std::move(survivors);
    if (!finished.empty() && !live.empty()) {
      const double best_done = std::min_element(finished.begin(), finished.end(), better)->log_prob;
      if (best_done >= live.front().hyp.log_prob) break;
    }
  }
  if (!finished.empty()) {
    // stable: among equal scores the earliest finished wins
    return *std::min_element(finished.begin(), finished.end(), better);
  }
  return live.empty() ? BeamHypothesis{} : live.front().hyp;
}

/// Beam-decoded target ids without the closing <eos>.
inline std::vector<int> seq2seq_decode(const ParameterStore& store, const Seq2SeqParams& p,
                                       std::span<const int> state_tokens, std::size_t beam = 10,
                                       std::size_t max_len = 60) {
  Seq2SeqDecoder dec(store, p, state_tokens);
  BeamHypothesis best = beam == 1 ? greedy_search(dec, max_len) : beam_search(dec, beam, max_len);
  if (!best.tokens.empty() && best.tokens.back() == kTargetEos) best.tokens.pop_back();
  return best.tokens;
}

}  // namespace gcas
