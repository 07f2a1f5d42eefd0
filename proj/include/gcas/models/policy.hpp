#pragma once

// Uniform handle over the four model families, as used by the trainer,
// evaluation and the CLI.

#include <memory>
#include <string>
#include <vector>

#include "gcas/models/cas.hpp"
#include "gcas/models/classifier.hpp"
#include "gcas/models/seq2seq.hpp"

namespace gcas {

struct DecodeOptions {
  std::size_t max_steps = 6;  // gCAS / CAS tuples
  double threshold = 0.5;
  std::size_t beam = 10;      // Seq2Seq
  std::size_t max_len = 60;
};

/// Scalar training loss; the three components are filled for the CAS family.
struct ModelLoss {
  Var total;
  double cont = 0.0, act = 0.0, slots = 0.0;
};

class PolicyModel {
 public:
  virtual ~PolicyModel() = default;

  virtual ModelKind kind() const = 0;
  /// Training loss for one example; `tf` supplies teacher-forcing coins for
  /// the CAS family and is ignored elsewhere.
  virtual ModelLoss loss_terms(Tape& tape, const Example& ex, const TeacherForcing& tf) const = 0;
  Var loss(Tape& tape, const Example& ex, const TeacherForcing& tf) const {
    return loss_terms(tape, ex, tf).total;
  }
  virtual std::vector<ActFrame> predict(const Example& ex, const Vocabularies& v,
                                        const DecodeOptions& opt) const = 0;

  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  const ModelDims& dims() const { return dims_; }
  std::size_t parameter_count() const { return store_.scalar_count(); }

 protected:
  explicit PolicyModel(const ModelDims& d) : dims_(d) {}

  ModelDims dims_;
  ParameterStore store_;
};

class GcasPolicy final : public PolicyModel {
 public:
  GcasPolicy(const ModelDims& d, std::uint64_t seed) : PolicyModel(d), p_(GcasParams::create(store_, d, seed)) {}

  ModelKind kind() const override { return ModelKind::Gcas; }
  const GcasParams& net() const { return p_; }

  ModelLoss loss_terms(Tape& tape, const Example& ex, const TeacherForcing& tf) const override {
    auto l = gcas_loss(tape, p_, encode_state(tape, p_.encoder, ex.state_tokens), ex.kb, ex.cas, tf);
    return {l.total, l.cont.value()[0], l.act.value()[0], l.slots.value()[0]};
  }

  std::vector<ActFrame> predict(const Example& ex, const Vocabularies& v,
                                const DecodeOptions& opt) const override {
    Tape tape(store_);
    auto steps = gcas_decode(tape, p_, encode_state(tape, p_.encoder, ex.state_tokens), ex.kb,
                             opt.max_steps, opt.threshold);
    std::vector<CasTuple> tuples;
    for (const auto& s : steps) tuples.push_back(decode_cas(s, v));
    return v.canonical(from_cas_sequence(tuples));
  }

 private:
  GcasParams p_;
};

class CasPolicy final : public PolicyModel {
 public:
  CasPolicy(const ModelDims& d, std::uint64_t seed) : PolicyModel(d), p_(CasParams::create(store_, d, seed)) {}

  ModelKind kind() const override { return ModelKind::Cas; }
  const CasParams& net() const { return p_; }

  ModelLoss loss_terms(Tape& tape, const Example& ex, const TeacherForcing& tf) const override {
    auto l = cas_loss(tape, p_, encode_state(tape, p_.encoder, ex.state_tokens), ex.kb, ex.cas, tf);
    return {l.total, l.cont.value()[0], l.act.value()[0], l.slots.value()[0]};
  }

  std::vector<ActFrame> predict(const Example& ex, const Vocabularies& v,
                                const DecodeOptions& opt) const override {
    Tape tape(store_);
    auto steps = cas_decode(tape, p_, encode_state(tape, p_.encoder, ex.state_tokens), ex.kb,
                            opt.max_steps, opt.threshold);
    std::vector<CasTuple> tuples;
    for (const auto& s : steps) tuples.push_back(decode_cas(s, v));
    return v.canonical(from_cas_sequence(tuples));
  }

 private:
  CasParams p_;
};

class Seq2SeqPolicy final : public PolicyModel {
 public:
  Seq2SeqPolicy(const ModelDims& d, std::uint64_t seed)
      : PolicyModel(d), p_(Seq2SeqParams::create(store_, d, seed)) {}

  ModelKind kind() const override { return ModelKind::Seq2Seq; }
  const Seq2SeqParams& net() const { return p_; }

  ModelLoss loss_terms(Tape& tape, const Example& ex, const TeacherForcing&) const override {
    return {seq2seq_loss(tape, p_, encode_state(tape, p_.encoder, ex.state_tokens), ex.tokens)};
  }

  std::vector<int> decode_ids(const Example& ex, const DecodeOptions& opt) const {
    return seq2seq_decode(store_, p_, ex.state_tokens, opt.beam, opt.max_len);
  }

  std::vector<ActFrame> predict(const Example& ex, const Vocabularies& v,
                                const DecodeOptions& opt) const override {
    return v.canonical(from_token_sequence(decode_tokens(decode_ids(ex, opt), v), v));
  }

 private:
  Seq2SeqParams p_;
};

class ClassificationPolicy final : public PolicyModel {
 public:
  ClassificationPolicy(const ModelDims& d, std::uint64_t seed)
      : PolicyModel(d), p_(ClassifierParams::create(store_, d, seed)) {}

  ModelKind kind() const override { return ModelKind::Classification; }
  const ClassifierParams& net() const { return p_; }

  ModelLoss loss_terms(Tape& tape, const Example& ex, const TeacherForcing&) const override {
    return {classification_loss(tape, p_, ex.features, ex.pairs)};
  }

  std::vector<ActFrame> predict(const Example& ex, const Vocabularies& v,
                                const DecodeOptions& opt) const override {
    Tape tape(store_);
    return v.canonical(classification_frames(classification_forward(tape, p_, ex.features), v, opt.threshold));
  }

 private:
  ClassifierParams p_;
};

inline std::unique_ptr<PolicyModel> make_policy(ModelKind kind, const ModelDims& d, std::uint64_t seed) {
  switch (kind) {
    case ModelKind::Gcas: return std::make_unique<GcasPolicy>(d, seed);
    case ModelKind::Cas: return std::make_unique<CasPolicy>(d, seed);
    case ModelKind::Seq2Seq: return std::make_unique<Seq2SeqPolicy>(d, seed);
    case ModelKind::Classification: return std::make_unique<ClassificationPolicy>(d, seed);
  }
  throw std::invalid_argument("unknown model kind");
}

}  // namespace gcas
