#pragma once

// End-to-end finite-difference check (encoder + decoder + loss) for one model
// family on a small seeded instance: |A| = 5 (with <pad>), |S| = 8, a
// 3-token state and a two-frame target.

#include "gcas/autodiff/gradcheck.hpp"
#include "gcas/models/policy.hpp"

namespace gcas {

inline Vocabularies gradcheck_vocab() {
  Vocabularies v = Vocabularies::empty();
  v.add_target_frame(ActFrame{"inform", {"moviename", "genre", "date"}});
  v.add_target_frame(ActFrame{"request", {"starttime", "theater"}});
  v.add_target_frame(ActFrame{"multiple_choice", {"moviename", "city"}});
  v.add_target_frame(ActFrame{"greeting", {}});
  v.add_slot("numberofpeople");
  v.add_slot("zip");
  v.finalize();
  return v;
}

inline Example gradcheck_example(const Vocabularies& v) {
  DialogueState s;
  s.user_acts = {ActFrame{"request", {"theater"}}};
  s.user_inform_slots = {"moviename", "zip"};
  s.turn = 4;
  s.kb_result_count = 2;
  Example ex = make_example(s, {ActFrame{"inform", {"moviename", "date"}, {"moviename"}}, ActFrame{"greeting", {}}}, v);
  ex.state_tokens = {v.state_tokens.at("request"), v.state_tokens.at("theater"), v.state_tokens.at("zip")};
  return ex;
}

struct GradCheckRun {
  ModelKind kind;
  std::size_t parameters = 0;
  GradCheckReport report;
};

inline GradCheckRun run_gradcheck(ModelKind kind, std::uint64_t seed, std::size_t hidden = 8,
                                  std::size_t class_width = 16) {
  const Vocabularies v = gradcheck_vocab();
  const Example ex = gradcheck_example(v);
  auto model = make_policy(kind, ModelDims::from_vocab(v, hidden, class_width), seed);
  GradCheckRun run{kind, model->parameter_count(), {}};
  run.report = check_gradients(model->params(), [&](Tape& t) { return model->loss(t, ex, TeacherForcing{}); });
  return run;
}

}  // namespace gcas
