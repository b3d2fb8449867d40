#include "agcnn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace agcnn {

namespace {

double eval_scalar(const TensorFn& f, const TensorPtr& x) {
  Tape tape;
  NoGradGuard guard(tape);
  auto y = f(tape, x);
  if (!y->is_scalar())
    throw Error(ErrorKind::contract, "grad_check requires a scalar-valued f");
  return y->data[0];
}

}  // namespace

double grad_check(const TensorFn& f, const TensorPtr& x, double eps) {
  if (!(eps > 0.0))
    throw Error(ErrorKind::contract, "grad_check eps must be positive");

  // Determinism probe: training-mode dropout without a fixed mask, or any
  // other stochastic f, is a contract violation.
  const double probe_a = eval_scalar(f, x);
  const double probe_b = eval_scalar(f, x);
  if (probe_a != probe_b)
    throw Error(ErrorKind::contract, "grad_check requires a deterministic f");

  auto probe = std::make_shared<Tensor>(*x);
  probe->requires_grad = true;
  probe->grad.clear();
  Tape tape;
  auto y = f(tape, probe);
  if (!y->is_scalar())
    throw Error(ErrorKind::contract, "grad_check requires a scalar-valued f");
  tape.backward(y);
  std::vector<double> analytic(probe->size(), 0.0);
  if (!probe->grad.empty()) analytic = probe->grad;

  double worst = 0.0;
  for (size_t i = 0; i < x->size(); ++i) {
    auto lo = std::make_shared<Tensor>(*x);
    auto hi = std::make_shared<Tensor>(*x);
    lo->requires_grad = hi->requires_grad = false;
    lo->data[i] -= eps;
    hi->data[i] += eps;
    const double numeric = (eval_scalar(f, hi) - eval_scalar(f, lo)) / (2.0 * eps);
    const double denom =
        std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-8});
    worst = std::max(worst, std::fabs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace agcnn
