#pragma once

#include <string>
#include <vector>

#include "stgrasp/serialize.hpp"
#include "stgrasp/tensor.hpp"

namespace stgrasp {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedTensor>;

// Deep copy of parameter values, used for best-checkpoint selection.
std::vector<std::vector<float>> snapshot_values(const ParamList& params);
void restore_values(ParamList& params, const std::vector<std::vector<float>>& values);

// `frozen_prefixes` marks entries whose name starts with any of them.
Checkpoint to_checkpoint(const ParamList& params, const std::vector<std::string>& frozen_prefixes = {});

// Copies values by name; every parameter must be present with a matching shape.
void load_into(ParamList& params, const Checkpoint& ckpt);

std::size_t count_elements(const ParamList& params);

}  // namespace stgrasp
