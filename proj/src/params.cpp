#include "stgrasp/params.hpp"

#include <algorithm>

#include "stgrasp/error.hpp"

namespace stgrasp {

std::vector<std::vector<float>> snapshot_values(const ParamList& params) {
  std::vector<std::vector<float>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

void restore_values(ParamList& params, const std::vector<std::vector<float>>& values) {
  if (values.size() != params.size()) throw UsageError("restore_values: snapshot size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].tensor.mutable_data();
    if (dst.size() != values[i].size()) throw UsageError("restore_values: shape changed for " + params[i].name);
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

Checkpoint to_checkpoint(const ParamList& params, const std::vector<std::string>& frozen_prefixes) {
  Checkpoint ckpt;
  for (const auto& p : params) {
    const bool frozen = std::any_of(frozen_prefixes.begin(), frozen_prefixes.end(),
                                    [&](const std::string& pre) { return p.name.rfind(pre, 0) == 0; });
    ckpt.entries.push_back({p.name, p.tensor.detach(), frozen});
  }
  return ckpt;
}

void load_into(ParamList& params, const Checkpoint& ckpt) {
  for (auto& p : params) {
    const CheckpointEntry* e = ckpt.find(p.name);
    if (!e) throw DataError("checkpoint is missing parameter '" + p.name + "'");
    if (e->tensor.shape() != p.tensor.shape()) {
      throw DataError("checkpoint parameter '" + p.name + "' has shape " + shape_str(e->tensor.shape()) +
                      ", expected " + shape_str(p.tensor.shape()));
    }
    const auto src = e->tensor.data();
    std::copy(src.begin(), src.end(), p.tensor.mutable_data().begin());
  }
}

std::size_t count_elements(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

}  // namespace stgrasp
