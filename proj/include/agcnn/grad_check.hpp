#pragma once

#include <functional>

#include "agcnn/tensor.hpp"

namespace agcnn {

// A scalar-valued tensor function built on a caller-provided tape. Must be
// deterministic: two evaluations at the same point must agree exactly.
using TensorFn = std::function<TensorPtr(Tape&, const TensorPtr&)>;

// Compares the analytic gradient of f at x against central differences.
// Returns max over coordinates of
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double grad_check(const TensorFn& f, const TensorPtr& x, double eps = 1e-5);

}  // namespace agcnn
