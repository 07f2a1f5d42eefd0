#pragma once

// Runs a model over every agent turn of a dataset and scores the predictions.

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>
#include <vector>

#include "gcas/metrics/metrics.hpp"
#include "gcas/models/policy.hpp"

namespace gcas {

/// Predictions per dialogue. Dialogues are spread over `threads` workers
/// (0 = hardware concurrency); the result does not depend on the count.
inline std::vector<DialoguePredictions> predict_dataset(const PolicyModel& model, const Vocabularies& v,
                                                        const Dataset& data, const DecodeOptions& opt,
                                                        unsigned threads = 0) {
  std::vector<DialoguePredictions> out(data.size());
  auto run = [&](std::size_t i) {
    for (const auto& r : data[i].turns)
      if (r.speaker == Speaker::Agent) out[i].push_back(model.predict(make_example(r, v), v, opt));
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, data.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < data.size(); ++i) run(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < data.size(); i = next++) run(i);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

inline MetricsReport evaluate_model(const PolicyModel& model, const Vocabularies& v, const Dataset& data,
                                    const DecodeOptions& decode, const EvalOptions& eval = {},
                                    unsigned threads = 0) {
  return evaluate_predictions(data, predict_dataset(model, v, data, decode, threads), eval);
}

/// Reads a whitespace-separated serialized state (section markers followed by
/// their act/slot tokens) back into a DialogueState. In the two act sections
/// an act token opens a frame and slot tokens attach to it.
inline DialogueState parse_state_tokens(const std::string& text, const Vocabularies& v) {
  const auto& markers = state_section_markers();
  DialogueState s;
  std::istringstream in(text);
  std::string tok;
  int section = -1;
  while (in >> tok) {
    auto m = std::find(markers.begin(), markers.end(), tok);
    if (m != markers.end()) {
      section = static_cast<int>(m - markers.begin());
      continue;
    }
    if (section < 0) throw DataError("state tokens must start with a section marker, got '" + tok + "'");
    if (section <= 1) {
      auto& frames = section == 0 ? s.prev_agent_acts : s.user_acts;
      if (v.acts.contains(tok) && tok != kPad) frames.push_back(ActFrame{tok, {}});
      else if (!frames.empty()) frames.back().add_slot(tok);
      else throw DataError("slot '" + tok + "' before any act in " + markers[static_cast<std::size_t>(section)]);
      continue;
    }
    std::vector<std::string>* lists[] = {&s.user_request_slots, &s.user_inform_slots, &s.agent_request_slots,
                                         &s.agent_proposed_slots};
    lists[section - 2]->push_back(tok);
  }
  if (section < 0) throw DataError("empty state token sequence");
  return s;
}

}  // namespace gcas
