#pragma once

#include <cstdint>
#include <vector>

#include "bmgcn/matrix.hpp"

namespace bmgcn {

struct AdamOptions {
  double lr = 1e-3;
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::int64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;

  explicit AdamState(AdamOptions opts = {}) : options(opts) {}
};

// One bias-corrected Adam update. Weight decay is folded into the gradient
// (g += wd * p) before the moment update. Moments are allocated on first use.
void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
               AdamState& state);

}  // namespace bmgcn
