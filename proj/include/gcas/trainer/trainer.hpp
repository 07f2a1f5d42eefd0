#pragma once

// Mini-batch Adam training with per-epoch validation, best-checkpoint
// retention and patience-based early stopping.

#include <chrono>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gcas/autodiff/adam.hpp"
#include "gcas/metrics/metrics.hpp"
#include "gcas/models/policy.hpp"

namespace gcas {

struct TrainConfig {
  ModelKind model = ModelKind::Gcas;
  std::size_t hidden_size = 64;
  std::size_t class_width = 128;
  double teacher_forcing = 0.5;
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  std::size_t max_decode_steps = 6;
  std::size_t beam_size = 10;
  std::size_t max_len = 60;
  // Stop as soon as validation frame F1 reaches this value.
  std::optional<double> target_f1;

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
    if (teacher_forcing < 0.0 || teacher_forcing > 1.0) fail("teacher_forcing must be in [0, 1]");
    if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
    if (hidden_size == 0 || class_width == 0 || batch_size == 0 || max_decode_steps == 0 ||
        beam_size == 0 || max_len == 0)
      fail("sizes must be positive");
  }

  DecodeOptions decode_options() const {
    return DecodeOptions{max_decode_steps, 0.5, beam_size, max_len};
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"model", model_kind_name(model)},
                     {"hidden_size", hidden_size},
                     {"class_width", class_width},
                     {"teacher_forcing", teacher_forcing},
                     {"learning_rate", learning_rate},
                     {"batch_size", batch_size},
                     {"max_epochs", max_epochs},
                     {"patience", patience},
                     {"seed", seed},
                     {"max_decode_steps", max_decode_steps},
                     {"beam_size", beam_size},
                     {"max_len", max_len}};
    j["target_f1"] = target_f1 ? nlohmann::json(*target_f1) : nlohmann::json(nullptr);
    return j;
  }

  /// Fields absent from `j` keep their current values; unknown keys are
  /// rejected.
  void merge_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
      try {
        if (key == "model") model = parse_model_kind(value.get<std::string>());
        else if (key == "hidden_size") hidden_size = value.get<std::size_t>();
        else if (key == "class_width") class_width = value.get<std::size_t>();
        else if (key == "teacher_forcing") teacher_forcing = value.get<double>();
        else if (key == "learning_rate") learning_rate = value.get<double>();
        else if (key == "batch_size") batch_size = value.get<std::size_t>();
        else if (key == "max_epochs") max_epochs = value.get<std::size_t>();
        else if (key == "patience") patience = value.get<std::size_t>();
        else if (key == "seed") seed = value.get<std::uint64_t>();
        else if (key == "max_decode_steps") max_decode_steps = value.get<std::size_t>();
        else if (key == "beam_size") beam_size = value.get<std::size_t>();
        else if (key == "max_len") max_len = value.get<std::size_t>();
        else if (key == "target_f1") target_f1 = value.is_null() ? std::nullopt : std::optional(value.get<double>());
        else throw std::invalid_argument("config: unknown field '" + key + "'");
      } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config: bad value for '" + key + "': " + e.what());
      }
    }
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.merge_json(j);
    c.validate();
    return c;
  }
};

struct EpochReport {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean per example
  double loss_continue = 0.0, loss_act = 0.0, loss_slots = 0.0;
  double valid_frame_f1 = 0.0;
  double valid_frame_accuracy = 0.0;  // turns whose frame set is exactly right
  double seconds = 0.0;

  nlohmann::json to_json() const {
    return {{"epoch", epoch},
            {"train_loss", train_loss},
            {"loss_continue", loss_continue},
            {"loss_act", loss_act},
            {"loss_slots", loss_slots},
            {"valid_frame_f1", valid_frame_f1},
            {"valid_frame_accuracy", valid_frame_accuracy},
            {"seconds", seconds}};
  }

  /// Equality of everything except wall time.
  bool same_trajectory(const EpochReport& o) const {
    return epoch == o.epoch && train_loss == o.train_loss && loss_continue == o.loss_continue &&
           loss_act == o.loss_act && loss_slots == o.loss_slots && valid_frame_f1 == o.valid_frame_f1 &&
           valid_frame_accuracy == o.valid_frame_accuracy;
  }
};

struct TrainResult {
  std::unique_ptr<PolicyModel> model;  // parameters of the best epoch
  std::vector<EpochReport> history;
  std::optional<std::size_t> best_epoch;
  double best_f1 = 0.0;
};

/// Extends every target to the batch's longest with masked steps
/// (continue <pad>, act <pad>, no slots) and <pad> tokens.
inline std::vector<Example> pad_batch(std::vector<Example> batch, std::size_t slots) {
  std::size_t cas_len = 0, tok_len = 0;
  for (const auto& e : batch) {
    cas_len = std::max(cas_len, e.cas.size());
    tok_len = std::max(tok_len, e.tokens.size());
  }
  for (auto& e : batch) {
    e.cas.resize(cas_len, CasStep{static_cast<int>(Continue::Pad), 0, std::vector<double>(slots, 0.0)});
    e.tokens.resize(tok_len, kTargetPad);
  }
  return batch;
}

struct FrameScore {
  double f1 = 0.0;
  double accuracy = 0.0;
};

inline FrameScore score_frames(const PolicyModel& model, const std::vector<Example>& examples,
                               const Vocabularies& v, const DecodeOptions& opt) {
  std::vector<TurnEval> turns;
  std::size_t exact = 0;
  for (const auto& ex : examples) {
    turns.push_back(TurnEval{model.predict(ex, v, opt), ex.gold});
    exact += frame_keys(turns.back().predicted) == frame_keys(turns.back().gold);
  }
  FrameScore s;
  s.f1 = frame_prf(turns).f1;
  s.accuracy = examples.empty() ? 0.0 : static_cast<double>(exact) / static_cast<double>(examples.size());
  return s;
}

using EpochCallback = std::function<void(const EpochReport&)>;

/// Core loop over prepared examples. `dims` must describe `vocab`. When
/// `valid` is empty the training examples are scored instead.
inline TrainResult train_examples(const TrainConfig& cfg, const ModelDims& dims, const Vocabularies& vocab,
                                  const std::vector<Example>& train, const std::vector<Example>& valid,
                                  const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("train: empty training set");
  TrainResult result;
  result.model = make_policy(cfg.model, dims, cfg.seed);
  PolicyModel& model = *result.model;
  ParameterStore& store = model.params();
  AdamState adam(store);
  const AdamConfig adam_cfg{cfg.learning_rate};
  std::mt19937_64 shuffle_rng(splitmix64(cfg.seed ^ 0x5368756666ULL));
  std::mt19937_64 tf_rng(splitmix64(cfg.seed ^ 0x5465616368ULL));
  const TeacherForcing tf{&tf_rng, cfg.teacher_forcing};
  const std::vector<Example>& scored = valid.empty() ? train : valid;
  const DecodeOptions decode = cfg.decode_options();

  std::vector<Tensor> best = store.tensors();
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochReport rep;
    rep.epoch = epoch;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      std::vector<Example> batch;
      for (std::size_t i = b; i < std::min(order.size(), b + cfg.batch_size); ++i) batch.push_back(train[order[i]]);
      batch = pad_batch(std::move(batch), dims.slots);
      Gradients grads = zero_gradients(store);
      const double scale = 1.0 / static_cast<double>(batch.size());
      for (const auto& ex : batch) {
        Tape tape(store);
        const ModelLoss l = model.loss_terms(tape, ex, tf);
        rep.train_loss += l.total.value()[0];
        rep.loss_continue += l.cont;
        rep.loss_act += l.act;
        rep.loss_slots += l.slots;
        accumulate(grads, tape.backward(l.total), scale);
      }
      adam_step(adam, store, grads, adam_cfg);
    }
    const double n = static_cast<double>(train.size());
    rep.train_loss /= n;
    rep.loss_continue /= n;
    rep.loss_act /= n;
    rep.loss_slots /= n;
    const FrameScore score = score_frames(model, scored, vocab, decode);
    rep.valid_frame_f1 = score.f1;
    rep.valid_frame_accuracy = score.accuracy;
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(rep);
    if (on_epoch) on_epoch(rep);

    if (!result.best_epoch || score.f1 > result.best_f1) {
      result.best_epoch = epoch;
      result.best_f1 = score.f1;
      best = store.tensors();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
    if (cfg.target_f1 && score.f1 >= *cfg.target_f1) break;
  }
  store.tensors() = std::move(best);
  return result;
}

/// Trains on the agent turns of `train_set`, validating on `valid_set`.
/// Vocabularies come from `train_set`.
inline TrainResult train(const TrainConfig& cfg, const Vocabularies& vocab, const Dataset& train_set,
                         const Dataset& valid_set, const EpochCallback& on_epoch = {}) {
  const auto train_ex = make_examples(train_set, vocab);
  if (train_ex.empty()) throw std::invalid_argument("train: no agent turns in the training set");
  const auto valid_ex = make_examples(valid_set, vocab);
  return train_examples(cfg, ModelDims::from_vocab(vocab, cfg.hidden_size, cfg.class_width), vocab, train_ex,
                        valid_ex, on_epoch);
}

}  // namespace gcas
