#pragma once

// Checkpoint = parameter archive at `path` plus a JSON sidecar at
// `path.json` describing the model kind, sizes, seed and vocabularies.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "gcas/autodiff/archive.hpp"
#include "gcas/trainer/trainer.hpp"

namespace gcas {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

inline void save_checkpoint(const std::filesystem::path& path, const PolicyModel& model,
                            const Vocabularies& vocab, const TrainConfig& cfg) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + path.string());
    write_archive(out, model.params());
    if (!out) throw CheckpointError("write failed for " + path.string());
  }
  nlohmann::json side{{"model_kind", model_kind_name(model.kind())},
                      {"hidden_size", model.dims().hidden},
                      {"class_width", model.dims().class_width},
                      {"seed", cfg.seed},
                      {"parameter_count", model.parameter_count()},
                      {"vocab_fingerprint", vocab.fingerprint()},
                      {"vocab", vocab.to_json()},
                      {"config", cfg.to_json()}};
  std::ofstream out(sidecar_path(path));
  if (!out) throw CheckpointError("cannot write " + sidecar_path(path).string());
  out << side.dump(2) << "\n";
}

struct Checkpoint {
  std::unique_ptr<PolicyModel> model;
  Vocabularies vocab;
  TrainConfig config;
  nlohmann::json sidecar;
};

/// Loads and validates a checkpoint. With `expected` set, a checkpoint of a
/// different model kind is rejected.
inline Checkpoint load_checkpoint(const std::filesystem::path& path,
                                  std::optional<ModelKind> expected = std::nullopt) {
  Checkpoint ck;
  {
    std::ifstream in(sidecar_path(path));
    if (!in) throw CheckpointError("missing checkpoint sidecar " + sidecar_path(path).string());
    try {
      ck.sidecar = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError("corrupt checkpoint sidecar: " + std::string(e.what()));
    }
  }
  ModelKind kind;
  std::size_t hidden = 0, width = 0;
  try {
    kind = parse_model_kind(ck.sidecar.at("model_kind").get<std::string>());
    hidden = ck.sidecar.at("hidden_size").get<std::size_t>();
    width = ck.sidecar.at("class_width").get<std::size_t>();
    ck.vocab = Vocabularies::from_json(ck.sidecar.at("vocab"));
    ck.config = TrainConfig::from_json(ck.sidecar.at("config"));
  } catch (const std::exception& e) {
    throw CheckpointError("bad checkpoint sidecar: " + std::string(e.what()));
  }
  if (expected && *expected != kind) {
    throw CheckpointError(std::string("checkpoint holds a ") + model_kind_name(kind) + " model, expected " +
                          model_kind_name(*expected));
  }
  if (ck.vocab.fingerprint() != ck.sidecar.value("vocab_fingerprint", "")) {
    throw CheckpointError("checkpoint vocabulary does not match its fingerprint");
  }
  ck.model = make_policy(kind, ModelDims::from_vocab(ck.vocab, hidden, width), ck.config.seed);

  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path.string());
  ParameterStore stored;
  try {
    stored = read_archive(in);
  } catch (const ArchiveError& e) {
    throw CheckpointError(e.what());
  }
  ParameterStore& target = ck.model->params();
  if (stored.size() != target.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(stored.size()) + " parameters, model expects " +
                          std::to_string(target.size()));
  }
  for (ParamId i = 0; i < target.size(); ++i) {
    if (stored.name(i) != target.name(i) || stored[i].shape != target[i].shape) {
      throw CheckpointError("parameter " + stored.name(i) + " " + shape_string(stored[i].shape) +
                            " does not match model parameter " + target.name(i) + " " +
                            shape_string(target[i].shape));
    }
    target[i] = stored[i];
  }
  return ck;
}

}  // namespace gcas
