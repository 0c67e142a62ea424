#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oneshot/tensor.hpp"

namespace oneshot {

struct AdamHyper {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates, one pair per parameter, created on the first step.
struct AdamState {
  AdamHyper hyper;
  std::uint64_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

/// One bias-corrected Adam update of every parameter from its `grad`.
/// Throws ContractError if a gradient was never populated (see Parameter::zero_grad).
void adam_step(std::span<Parameter> params, AdamState& state);

}  // namespace oneshot
