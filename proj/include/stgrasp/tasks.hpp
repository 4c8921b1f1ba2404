#pragma once

#include <cstddef>
#include <vector>

#include "stgrasp/dataset.hpp"
#include "stgrasp/models.hpp"
#include "stgrasp/train.hpp"

namespace stgrasp {

// The bindings keep references to the model and dataset; both must outlive them.

TaskBinding make_slip_task(const SlipModel& model, const SlipDataset& data);

// Joint training of encoders, fusion and predictor on (sample, threshold) pairs.
TaskBinding make_outcome_task(const GraspModel& model, const GraspDataset& data);

// Freezes the encoders and fusion, caches every sample's embedding once
// (sharded over `threads`), and trains only the fruit head.
TaskBinding make_fruit_task(GraspModel& model, const GraspDataset& data, std::size_t threads = 1);

// Embeddings for every sample, computed without recording gradients.
std::vector<PhysicalEmbedding> embed_all(const GraspModel& model, const GraspDataset& data, std::size_t threads = 1);

}  // namespace stgrasp
