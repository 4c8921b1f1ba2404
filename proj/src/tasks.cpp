#include "stgrasp/tasks.hpp"

#include <memory>
#include <thread>

namespace stgrasp {

TaskBinding make_slip_task(const SlipModel& model, const SlipDataset& data) {
  TaskBinding t;
  t.classes = 2;
  t.forward = [&model, &data](std::size_t i) { return model.logits(data.samples.at(i)); };
  t.label = [&data](std::size_t i) { return static_cast<std::size_t>(data.samples.at(i).label); };
  t.trainable = model.parameters();
  return t;
}

TaskBinding make_outcome_task(const GraspModel& model, const GraspDataset& data) {
  TaskBinding t;
  t.classes = kNumOutcomes;
  t.forward = [&model, &data](std::size_t i) {
    const GraspSample& s = data.samples.at(i);
    return model.predict(model.embed(s), s.force_threshold);
  };
  t.label = [&data](std::size_t i) { return static_cast<std::size_t>(data.samples.at(i).outcome); };
  t.trainable = model.embedding_parameters();
  for (auto& p : model.predictor_parameters()) t.trainable.push_back(std::move(p));
  return t;
}

std::vector<PhysicalEmbedding> embed_all(const GraspModel& model, const GraspDataset& data, std::size_t threads) {
  std::vector<PhysicalEmbedding> out(data.samples.size());
  threads = std::max<std::size_t>(1, std::min(threads, out.size()));
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](std::size_t w) {
    try {
      for (std::size_t i = out.size() * w / threads; i < out.size() * (w + 1) / threads; ++i) {
        out[i] = {model.embed(data.samples[i]).values.detach()};
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1 || Tape::active()) {
    // stay on this thread so an active tape keeps seeing every op
    for (std::size_t w = 0; w < threads; ++w) work(w);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

TaskBinding make_fruit_task(GraspModel& model, const GraspDataset& data, std::size_t threads) {
  model.set_embedding_frozen(true);
  auto cache = std::make_shared<std::vector<PhysicalEmbedding>>(embed_all(model, data, threads));
  TaskBinding t;
  t.classes = kNumFruits;
  t.forward = [&model, cache](std::size_t i) { return model.classify(cache->at(i)); };
  t.label = [&data](std::size_t i) { return static_cast<std::size_t>(data.samples.at(i).fruit); };
  t.trainable = model.fruit_parameters();
  return t;
}

}  // namespace stgrasp
