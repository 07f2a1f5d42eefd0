#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "gcas/trainer/checkpoint.hpp"
#include "gcas/trainer/synthetic.hpp"

using namespace gcas;
namespace fs = std::filesystem;

namespace {

// Agent turn whose target is the annotated movie example (three moviename candidates, genre given).
Dataset movie_example_corpus() {
  TurnRecord r;
  r.dialogue_id = "t2";
  r.speaker = Speaker::Agent;
  r.state.user_acts = {ActFrame{"request", {"moviename"}}, ActFrame{"inform", {"genre"}, {"genre"}}};
  r.state.user_request_slots = {"moviename"};
  r.state.user_inform_slots = {"genre"};
  r.state.turn = 3;
  r.state.kb_result_count = 3;
  r.target = parse_frames(
      "inform(moviename={The Witch, The Other Side of the Door, The Boy}; genre=thriller) "
      "multiple_choice(moviename)");
  Dialogue d;
  d.id = "t2";
  d.turns = {r};
  return {d};
}

TrainConfig quick_config(ModelKind kind) {
  TrainConfig c;
  c.model = kind;
  c.hidden_size = 16;
  c.class_width = 16;
  c.batch_size = 4;
  c.max_epochs = 3;
  c.seed = 11;
  c.beam_size = 3;
  c.max_len = 20;
  return c;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("gcas_trainer_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(TeacherForcing, ExtremeRatesAreDeterministic) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_TRUE(teacher_force_choice(rng, 1.0));
    EXPECT_FALSE(teacher_force_choice(rng, 0.0));
  }
}

TEST(TeacherForcing, HalfRateEmpiricalMean) {
  std::mt19937_64 rng(42);
  std::size_t hits = 0;
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) hits += teacher_force_choice(rng, 0.5);
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.5, 0.01);
}

TEST(TrainConfig, DefaultsAndJsonRoundTrip) {
  TrainConfig c;
  EXPECT_EQ(c.hidden_size, 64u);
  EXPECT_EQ(c.class_width, 128u);
  EXPECT_EQ(c.teacher_forcing, 0.5);
  EXPECT_EQ(c.learning_rate, 0.001);
  EXPECT_EQ(c.batch_size, 32u);
  EXPECT_EQ(c.beam_size, 10u);
  c.model = ModelKind::Seq2Seq;
  c.seed = 99;
  c.target_f1 = 0.75;
  TrainConfig back = TrainConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(TrainConfig, RejectsUnknownFieldsAndBadValues) {
  EXPECT_THROW(TrainConfig::from_json({{"hiden_size", 3}}), std::invalid_argument);
  EXPECT_THROW(TrainConfig::from_json({{"teacher_forcing", 1.5}}), std::invalid_argument);
  EXPECT_THROW(TrainConfig::from_json({{"batch_size", 0}}), std::invalid_argument);
  EXPECT_THROW(TrainConfig::from_json({{"model", "rnn"}}), std::invalid_argument);
  EXPECT_THROW(TrainConfig::from_json({{"hidden_size", "big"}}), std::invalid_argument);
}

TEST(Train, ZeroEpochsReturnsInitialModel) {
  auto data = make_synthetic_corpus({});
  auto v = build_vocabs(data);
  auto cfg = quick_config(ModelKind::Gcas);
  cfg.max_epochs = 0;
  auto r = train(cfg, v, data, {});
  EXPECT_TRUE(r.history.empty());
  auto fresh = make_policy(ModelKind::Gcas, ModelDims::from_vocab(v, cfg.hidden_size, cfg.class_width), cfg.seed);
  EXPECT_EQ(r.model->params().tensors(), fresh->params().tensors());
}

TEST(Train, RejectsEmptyTrainingSet) {
  auto data = make_synthetic_corpus({});
  auto v = build_vocabs(data);
  EXPECT_THROW(train(quick_config(ModelKind::Gcas), v, {}, {}), std::invalid_argument);
}

TEST(Train, SameSeedSameTrajectory) {
  auto data = make_synthetic_corpus({});
  auto v = build_vocabs(data);
  for (auto kind : {ModelKind::Gcas, ModelKind::Cas, ModelKind::Seq2Seq, ModelKind::Classification}) {
    auto a = train(quick_config(kind), v, data, data);
    auto b = train(quick_config(kind), v, data, data);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      EXPECT_EQ(a.history[i].epoch, i);
      EXPECT_TRUE(a.history[i].same_trajectory(b.history[i])) << model_kind_name(kind) << " epoch " << i;
    }
    EXPECT_EQ(a.model->params().tensors(), b.model->params().tensors());
  }
}

TEST(Train, CasFamilyReportsLossBreakdown) {
  auto data = make_synthetic_corpus({});
  auto v = build_vocabs(data);
  auto r = train(quick_config(ModelKind::Gcas), v, data, {});
  for (const auto& e : r.history) {
    EXPECT_NEAR(e.train_loss, e.loss_continue + e.loss_act + e.loss_slots, 1e-9);
    EXPECT_GT(e.loss_slots, 0.0);
  }
}

TEST(Train, KeepsBestValidationCheckpoint) {
  auto data = make_synthetic_corpus({});
  auto v = build_vocabs(data);
  auto cfg = quick_config(ModelKind::Cas);
  cfg.max_epochs = 15;
  cfg.learning_rate = 0.02;
  auto r = train(cfg, v, data, data);
  double best = -1;
  for (const auto& e : r.history) best = std::max(best, e.valid_frame_f1);
  ASSERT_TRUE(r.best_epoch.has_value());
  EXPECT_EQ(r.best_f1, best);
  EXPECT_EQ(r.history[*r.best_epoch].valid_frame_f1, best);
  const auto ex = make_examples(data, v);
  EXPECT_EQ(score_frames(*r.model, ex, v, cfg.decode_options()).f1, best);
}

TEST(Train, StopsAfterPatienceWithoutImprovement) {
  auto data = make_synthetic_corpus({});
  auto v = build_vocabs(data);
  auto cfg = quick_config(ModelKind::Classification);
  cfg.learning_rate = 1e-300;  // parameters effectively frozen
  cfg.max_epochs = 50;
  cfg.patience = 3;
  auto r = train(cfg, v, data, data);
  EXPECT_EQ(r.history.size(), 4u);
  EXPECT_EQ(r.best_epoch, 0u);
}

TEST(Batching, PaddedTargetsLeaveLossAndGradientsUnchanged) {
  auto data = make_synthetic_corpus({});
  auto v = build_vocabs(data);
  const auto dims = ModelDims::from_vocab(v, 8, 8);
  auto examples = make_examples(data, v);
  auto padded = pad_batch(examples, dims.slots);
  std::size_t longer = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) longer += padded[i].cas.size() > examples[i].cas.size();
  ASSERT_GT(longer, 0u);
  for (auto kind : {ModelKind::Gcas, ModelKind::Cas, ModelKind::Seq2Seq}) {
    auto model = make_policy(kind, dims, 3);
    for (std::size_t i = 0; i < examples.size(); ++i) {
      std::mt19937_64 ra(i), rb(i);
      Tape ta(model->params()), tb(model->params());
      Var la = model->loss(ta, examples[i], {&ra, 0.5});
      Var lb = model->loss(tb, padded[i], {&rb, 0.5});
      EXPECT_NEAR(la.value()[0], lb.value()[0], 1e-10);
      auto ga = ta.backward(la), gb = tb.backward(lb);
      for (std::size_t p = 0; p < ga.size(); ++p)
        for (std::size_t j = 0; j < ga[p].size(); ++j) ASSERT_NEAR(ga[p][j], gb[p][j], 1e-10);
    }
  }
}

TEST(Overfit, GcasDecodesMovieExampleTuplesExactly) {
  auto data = movie_example_corpus();
  auto v = build_vocabs(data);
  TrainConfig cfg;
  cfg.model = ModelKind::Gcas;
  cfg.batch_size = 1;
  cfg.max_epochs = 300;
  cfg.patience = 300;
  cfg.target_f1 = 1.0;
  cfg.seed = 3;
  auto r = train(cfg, v, data, {});
  const auto ex = make_examples(data, v);
  auto& model = dynamic_cast<GcasPolicy&>(*r.model);
  Tape tape(model.params());
  auto out = gcas_decode(tape, model.net(), encode_state(tape, model.net().encoder, ex[0].state_tokens), ex[0].kb);
  std::vector<CasTuple> tuples;
  for (const auto& s : out) tuples.push_back(decode_cas(s, v));
  EXPECT_EQ(format_cas_sequence(tuples),
            "(<continue>, inform, {moviename, genre}) (<continue>, multiple_choice, {moviename}) "
            "(<stop>, <pad>, {})");
}

TEST(Overfit, Seq2SeqDecodesMovieExampleTokensExactly) {
  auto data = movie_example_corpus();
  auto v = build_vocabs(data);
  TrainConfig cfg;
  cfg.model = ModelKind::Seq2Seq;
  cfg.batch_size = 1;
  cfg.max_epochs = 300;
  cfg.patience = 300;
  cfg.target_f1 = 1.0;
  cfg.seed = 3;
  auto r = train(cfg, v, data, {});
  const auto ex = make_examples(data, v);
  auto& model = dynamic_cast<Seq2SeqPolicy&>(*r.model);
  auto ids = model.decode_ids(ex[0], cfg.decode_options());
  ids.push_back(kTargetEos);
  EXPECT_EQ(format_token_sequence(decode_tokens(ids, v)),
            "'inform' '(' 'moviename' '=' ';' 'genre' '=' ')' 'multiple_choice' '(' 'moviename' ')' '<eos>'");
}

TEST(Checkpoint, RoundTripIsBitExact) {
  TempDir dir;
  auto data = make_synthetic_corpus({});
  auto v = build_vocabs(data);
  for (auto kind : {ModelKind::Gcas, ModelKind::Cas, ModelKind::Seq2Seq, ModelKind::Classification}) {
    auto cfg = quick_config(kind);
    auto model = make_policy(kind, ModelDims::from_vocab(v, cfg.hidden_size, cfg.class_width), 123);
    std::mt19937_64 rng(5);
    for (auto& t : model->params().tensors())
      for (auto& x : t.values) x = std::uniform_real_distribution<double>(-3, 3)(rng);
    const fs::path path = dir.path / model_kind_name(kind);
    save_checkpoint(path, *model, v, cfg);
    auto ck = load_checkpoint(path, kind);
    EXPECT_EQ(ck.model->kind(), kind);
    EXPECT_EQ(ck.vocab, v);
    EXPECT_EQ(ck.config.to_json(), cfg.to_json());
    const auto& a = model->params().tensors();
    const auto& b = ck.model->params().tensors();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      EXPECT_EQ(std::memcmp(a[i].values.data(), b[i].values.data(), a[i].size() * sizeof(double)), 0);
  }
}

TEST(Checkpoint, TruncatedPayloadNamesLastParameter) {
  TempDir dir;
  auto data = make_synthetic_corpus({});
  auto v = build_vocabs(data);
  auto cfg = quick_config(ModelKind::Gcas);
  auto model = make_policy(cfg.model, ModelDims::from_vocab(v, cfg.hidden_size, cfg.class_width), 1);
  const fs::path path = dir.path / "ck";
  save_checkpoint(path, *model, v, cfg);
  fs::resize_file(path, fs::file_size(path) - 8);
  try {
    load_checkpoint(path);
    FAIL() << "expected an error";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find(model->params().names().back()), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, RejectsKindMismatchAndTamperedVocab) {
  TempDir dir;
  auto data = make_synthetic_corpus({});
  auto v = build_vocabs(data);
  auto cfg = quick_config(ModelKind::Cas);
  auto model = make_policy(cfg.model, ModelDims::from_vocab(v, cfg.hidden_size, cfg.class_width), 1);
  const fs::path path = dir.path / "ck";
  save_checkpoint(path, *model, v, cfg);
  EXPECT_THROW(load_checkpoint(path, ModelKind::Gcas), CheckpointError);
  EXPECT_NO_THROW(load_checkpoint(path, ModelKind::Cas));

  std::ifstream in(sidecar_path(path));
  auto side = nlohmann::json::parse(in);
  in.close();
  side["vocab"]["slots"].push_back("extra");
  std::ofstream(sidecar_path(path)) << side.dump();
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
  fs::remove(sidecar_path(path));
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
}
