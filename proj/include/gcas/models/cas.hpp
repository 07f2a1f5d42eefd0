#pragma once

// Continue-Act-Slots decoders. The gated cell chains three GRU units per step
// (continue -> act -> slots), each conditioned on the previous unit's hidden
// state; the CAS baseline uses one GRU with three parallel heads.

#include <string>
#include <vector>

#include "gcas/autodiff/gru.hpp"
#include "gcas/models/common.hpp"
#include "gcas/models/encoder.hpp"

namespace gcas {

struct CasUnitParams {
  ParamId w_x = 0, b_x = 0;  // tuple input map
  GruParams gru;
  ParamId w_g = 0, b_g = 0;  // output projection

  static CasUnitParams create(ParameterStore& store, const std::string& prefix,
                              const ModelDims& d, std::size_t outputs, std::uint64_t seed) {
    CasUnitParams u;
    u.w_x = store.add_random(prefix + ".w_x", {d.hidden, d.cas_input()}, seed);
    u.b_x = store.add_random(prefix + ".b_x", {d.hidden}, seed);
    u.gru = GruParams::create(store, prefix + ".gru", d.hidden, d.hidden, seed);
    u.w_g = store.add_random(prefix + ".w_g", {outputs, d.hidden}, seed);
    u.b_g = store.add_random(prefix + ".b_g", {outputs}, seed);
    return u;
  }
};

struct GcasParams {
  ModelDims dims;
  EncoderParams encoder;
  CasUnitParams cont, act, slots;

  static GcasParams create(ParameterStore& store, const ModelDims& d, std::uint64_t seed) {
    GcasParams p;
    p.dims = d;
    p.encoder = EncoderParams::create(store, "encoder", d, seed);
    p.cont = CasUnitParams::create(store, "gcas.continue", d, kContinueSize, seed);
    p.act = CasUnitParams::create(store, "gcas.act", d, d.acts, seed);
    p.slots = CasUnitParams::create(store, "gcas.slots", d, d.slots, seed);
    return p;
  }
};

struct CasParams {
  ModelDims dims;
  EncoderParams encoder;
  GruParams gru;
  ParamId w_c = 0, b_c = 0, w_a = 0, b_a = 0, w_s = 0, b_s = 0;

  static CasParams create(ParameterStore& store, const ModelDims& d, std::uint64_t seed) {
    CasParams p;
    p.dims = d;
    p.encoder = EncoderParams::create(store, "encoder", d, seed);
    p.gru = GruParams::create(store, "cas.gru", d.cas_input(), d.hidden, seed);
    p.w_c = store.add_random("cas.w_continue", {kContinueSize, d.hidden}, seed);
    p.b_c = store.add_random("cas.b_continue", {kContinueSize}, seed);
    p.w_a = store.add_random("cas.w_act", {d.acts, d.hidden}, seed);
    p.b_a = store.add_random("cas.b_act", {d.acts}, seed);
    p.w_s = store.add_random("cas.w_slots", {d.slots, d.hidden}, seed);
    p.b_s = store.add_random("cas.b_slots", {d.slots}, seed);
    return p;
  }
};

/// Per-step record. For the CAS baseline the three unit slots alias the single
/// GRU's input/output.
struct CasStepTrace {
  Var x_c, g_c, h_c;
  Var x_a, g_a, h_a;
  Var x_s, g_s, h_s;
  Var logits_c, logits_a, logits_s;
  std::vector<double> p_c, p_a, s;
  int c_fed = 0;  // continue value given to the act and slots units
  int a_fed = 0;  // act value given to the slots unit
  Var h_out;      // carried to the next step

  CasStep prediction(double threshold) const {
    CasStep out{c_fed, a_fed, std::vector<double>(s.size(), 0.0)};
    for (std::size_t i = 0; i < s.size(); ++i) out.slots[i] = s[i] > threshold ? 1.0 : 0.0;
    return out;
  }
};

/// Tuple fed to the first decoding step.
inline CasStep cas_start_tuple(const ModelDims& d) {
  return CasStep{static_cast<int>(Continue::Pad), 0, std::vector<double>(d.slots, 0.0)};
}

/// one-hot(c) ++ one-hot(a) ++ s ++ k
inline Tensor cas_input(int c, int a, const std::vector<double>& s, const KbFeatures& k,
                        const ModelDims& d) {
  if (c < 0 || c >= static_cast<int>(kContinueSize) || a < 0 || a >= static_cast<int>(d.acts) ||
      s.size() != d.slots) {
    throw ShapeError("cas input: continue " + std::to_string(c) + ", act " + std::to_string(a) +
                     " of " + std::to_string(d.acts) + ", " + std::to_string(s.size()) +
                     " slots of " + std::to_string(d.slots));
  }
  Tensor x({d.cas_input()}, 0.0);
  x[static_cast<std::size_t>(c)] = 1.0;
  x[kContinueSize + static_cast<std::size_t>(a)] = 1.0;
  std::copy(s.begin(), s.end(), x.values.begin() + static_cast<long>(kContinueSize + d.acts));
  x[d.cas_input() - 2] = k.values[0];
  x[d.cas_input() - 1] = k.values[1];
  return x;
}

namespace detail {

inline std::vector<double> sigmoid_values(const Tensor& logits) {
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gcas::sigmoid(logits[i]);
  return out;
}

inline void check_hidden(const Var& h, const ModelDims& d) {
  if (h.value().shape != Shape{d.hidden}) {
    throw ShapeError("decoder hidden state " + shape_string(h.value().shape) + ", expected [" +
                     std::to_string(d.hidden) + "]");
  }
}

struct UnitOut {
  Var x, g, h, logits;
};

inline UnitOut run_unit(Tape& tape, const CasUnitParams& u, Tensor input, Var h_prev) {
  UnitOut o;
  o.x = tape.affine(tape.param(u.w_x), tape.constant(std::move(input)), tape.param(u.b_x));
  auto gru = gru_step(tape, u.gru, o.x, h_prev);
  o.g = gru.g;
  o.h = gru.h;
  o.logits = tape.affine(tape.param(u.w_g), o.g, tape.param(u.b_g));
  return o;
}

}  // namespace detail

/// One gated CAS step. When `forced` is given its continue and act values are
/// fed to the later units; otherwise the argmax predictions are.
inline CasStepTrace gcas_step(Tape& tape, const GcasParams& p, const CasStep& prev,
                              const KbFeatures& k, Var h_prev, const CasStep* forced = nullptr) {
  const ModelDims& d = p.dims;
  detail::check_hidden(h_prev, d);
  CasStepTrace t;

  auto c = detail::run_unit(tape, p.cont, cas_input(prev.cont, prev.act, prev.slots, k, d), h_prev);
  t.x_c = c.x, t.g_c = c.g, t.h_c = c.h, t.logits_c = c.logits;
  t.p_c = gcas::softmax(c.logits.value().values);
  t.c_fed = forced ? forced->cont : static_cast<int>(argmax(t.p_c));

  auto a = detail::run_unit(tape, p.act, cas_input(t.c_fed, prev.act, prev.slots, k, d), t.h_c);
  t.x_a = a.x, t.g_a = a.g, t.h_a = a.h, t.logits_a = a.logits;
  t.p_a = gcas::softmax(a.logits.value().values);
  t.a_fed = forced ? forced->act : static_cast<int>(argmax(t.p_a));

  auto s = detail::run_unit(tape, p.slots, cas_input(t.c_fed, t.a_fed, prev.slots, k, d), t.h_a);
  t.x_s = s.x, t.g_s = s.g, t.h_s = s.h, t.logits_s = s.logits;
  t.s = detail::sigmoid_values(s.logits.value());
  t.h_out = t.h_s;
  return t;
}

/// CAS baseline step: one GRU over the previous tuple, three independent heads.
inline CasStepTrace cas_step(Tape& tape, const CasParams& p, const CasStep& prev,
                             const KbFeatures& k, Var h_prev, const CasStep* forced = nullptr) {
  const ModelDims& d = p.dims;
  detail::check_hidden(h_prev, d);
  CasStepTrace t;
  t.x_c = tape.constant(cas_input(prev.cont, prev.act, prev.slots, k, d));
  auto gru = gru_step(tape, p.gru, t.x_c, h_prev);
  t.g_c = gru.g;
  t.h_c = gru.h;
  t.x_a = t.x_s = t.x_c;
  t.g_a = t.g_s = t.g_c;
  t.h_a = t.h_s = t.h_c;
  t.logits_c = tape.affine(tape.param(p.w_c), t.g_c, tape.param(p.b_c));
  t.logits_a = tape.affine(tape.param(p.w_a), t.g_c, tape.param(p.b_a));
  t.logits_s = tape.affine(tape.param(p.w_s), t.g_c, tape.param(p.b_s));
  t.p_c = gcas::softmax(t.logits_c.value().values);
  t.p_a = gcas::softmax(t.logits_a.value().values);
  t.s = detail::sigmoid_values(t.logits_s.value());
  t.c_fed = forced ? forced->cont : static_cast<int>(argmax(t.p_c));
  t.a_fed = forced ? forced->act : static_cast<int>(argmax(t.p_a));
  t.h_out = t.h_c;
  return t;
}

struct CasLoss {
  Var total, cont, act, slots;

  double value() const { return total.value()[0]; }
};

/// Summed cross-entropy of continue and act, summed slot binary cross-entropy,
/// over every unmasked step. Steps whose target continue is <pad> are run but
/// contribute nothing and draw no teacher-forcing coin.
template <class Params, class StepFn>
CasLoss cas_family_loss(Tape& tape, const Params& p, Var h0, const KbFeatures& k,
                        const std::vector<CasStep>& targets, const TeacherForcing& tf,
                        StepFn step, double threshold = 0.5) {
  if (targets.empty()) throw std::invalid_argument("cas loss: empty target sequence");
  CasLoss loss;
  loss.cont = loss.act = loss.slots = tape.constant(Tensor::scalar(0.0));
  CasStep prev = cas_start_tuple(p.dims);
  Var h = h0;
  for (const CasStep& target : targets) {
    if (target.masked()) {
      auto trace = step(tape, p, prev, k, h, &target);
      prev = target;
      h = trace.h_out;
      continue;
    }
    const bool forced = tf.draw();
    auto trace = step(tape, p, prev, k, h, forced ? &target : nullptr);
    loss.cont = tape.add(loss.cont, tape.softmax_cross_entropy(trace.logits_c, static_cast<std::size_t>(target.cont)));
    loss.act = tape.add(loss.act, tape.softmax_cross_entropy(trace.logits_a, static_cast<std::size_t>(target.act)));
    loss.slots = tape.add(loss.slots, tape.sigmoid_cross_entropy(trace.logits_s, target.slots));
    prev = forced ? target : trace.prediction(threshold);
    h = trace.h_out;
  }
  loss.total = tape.add(tape.add(loss.cont, loss.act), loss.slots);
  return loss;
}

inline CasLoss gcas_loss(Tape& tape, const GcasParams& p, const EncoderOutput& enc,
                         const KbFeatures& k, const std::vector<CasStep>& targets,
                         const TeacherForcing& tf = {}) {
  return cas_family_loss(tape, p, enc.final, k, targets, tf,
                         [](Tape& t, const GcasParams& pp, const CasStep& prev, const KbFeatures& kk,
                            Var h, const CasStep* f) { return gcas_step(t, pp, prev, kk, h, f); });
}

inline CasLoss cas_loss(Tape& tape, const CasParams& p, const EncoderOutput& enc,
                        const KbFeatures& k, const std::vector<CasStep>& targets,
                        const TeacherForcing& tf = {}) {
  return cas_family_loss(tape, p, enc.final, k, targets, tf,
                         [](Tape& t, const CasParams& pp, const CasStep& prev, const KbFeatures& kk,
                            Var h, const CasStep* f) { return cas_step(t, pp, prev, kk, h, f); });
}

/// Greedy decoding: stops after a predicted <stop> (which is emitted as the
/// terminal tuple) or after `max_steps` tuples.
template <class Params, class StepFn>
std::vector<CasStep> cas_family_decode(Tape& tape, const Params& p, Var h0, const KbFeatures& k,
                                       std::size_t max_steps, double threshold, StepFn step) {
  std::vector<CasStep> out;
  CasStep prev = cas_start_tuple(p.dims);
  Var h = h0;
  while (out.size() < max_steps) {
    auto trace = step(tape, p, prev, k, h, nullptr);
    if (trace.c_fed == static_cast<int>(Continue::Stop)) {
      out.push_back(CasStep{static_cast<int>(Continue::Stop), 0, std::vector<double>(p.dims.slots, 0.0)});
      break;
    }
    prev = trace.prediction(threshold);
    out.push_back(prev);
    h = trace.h_out;
  }
  return out;
}

inline std::vector<CasStep> gcas_decode(Tape& tape, const GcasParams& p, const EncoderOutput& enc,
                                        const KbFeatures& k, std::size_t max_steps = 6,
                                        double threshold = 0.5) {
  return cas_family_decode(tape, p, enc.final, k, max_steps, threshold,
                           [](Tape& t, const GcasParams& pp, const CasStep& prev,
                              const KbFeatures& kk, Var h, const CasStep* f) {
                             return gcas_step(t, pp, prev, kk, h, f);
                           });
}

inline std::vector<CasStep> cas_decode(Tape& tape, const CasParams& p, const EncoderOutput& enc,
                                       const KbFeatures& k, std::size_t max_steps = 6,
                                       double threshold = 0.5) {
  return cas_family_decode(tape, p, enc.final, k, max_steps, threshold,
                           [](Tape& t, const CasParams& pp, const CasStep& prev,
                              const KbFeatures& kk, Var h, const CasStep* f) {
                             return cas_step(t, pp, prev, kk, h, f);
                           });
}

}  // namespace gcas
