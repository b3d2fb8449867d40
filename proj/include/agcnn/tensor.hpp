#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "agcnn/error.hpp"

namespace agcnn {

// Dense row-major float64 tensor with an optional gradient buffer.
// grad is empty until a backward pass touches the tensor.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;

  Tensor() = default;

  explicit Tensor(std::vector<size_t> shape_, double fill = 0.0)
      : shape(std::move(shape_)) {
    data.assign(checked_numel(shape), fill);
  }

  Tensor(std::vector<size_t> shape_, std::vector<double> data_)
      : shape(std::move(shape_)), data(std::move(data_)) {
    if (checked_numel(shape) != data.size())
      throw Error(ErrorKind::shape, "tensor data length does not match shape");
  }

  size_t size() const { return data.size(); }

  size_t extent(size_t dim) const { return shape.at(dim); }

  // 2-D accessors for [rows x cols] tensors
  double& at(size_t r, size_t c) { return data[r * shape[1] + c]; }
  double at(size_t r, size_t c) const { return data[r * shape[1] + c]; }

  bool is_scalar() const { return data.size() == 1; }

  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
  }

  void zero_grad() {
    if (!grad.empty()) grad.assign(data.size(), 0.0);
  }

  static size_t checked_numel(const std::vector<size_t>& shape) {
    if (shape.empty())
      throw Error(ErrorKind::shape, "tensor shape must have at least one extent");
    size_t n = 1;
    for (size_t e : shape) {
      if (e < 1) throw Error(ErrorKind::shape, "tensor extents must be >= 1");
      n *= e;
    }
    return n;
  }
};

using TensorPtr = std::shared_ptr<Tensor>;

inline TensorPtr make_tensor(std::vector<size_t> shape, double fill = 0.0,
                             bool requires_grad = false) {
  auto t = std::make_shared<Tensor>(std::move(shape), fill);
  t->requires_grad = requires_grad;
  return t;
}

inline TensorPtr make_tensor(std::vector<size_t> shape,
                             std::vector<double> data,
                             bool requires_grad = false) {
  auto t = std::make_shared<Tensor>(std::move(shape), std::move(data));
  t->requires_grad = requires_grad;
  return t;
}

inline TensorPtr make_scalar(double v, bool requires_grad = false) {
  return make_tensor({1}, std::vector<double>{v}, requires_grad);
}

// Ordered record of executed operations. Replaying backward visits each
// recorded operation exactly once, in reverse execution order. A tape is
// owned by one logical thread.
class Tape {
 public:
  void record(std::function<void()> backward_fn) {
    if (recording_) nodes_.push_back(std::move(backward_fn));
  }

  bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }

  size_t size() const { return nodes_.size(); }

  void clear() { nodes_.clear(); }

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every
  // requires_grad tensor reachable from the loss. Grads add across fan-out.
  void backward(const TensorPtr& loss) {
    if (!loss || !loss->is_scalar())
      throw Error(ErrorKind::contract, "backward requires a scalar loss");
    loss->ensure_grad();
    loss->grad[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  }

 private:
  std::vector<std::function<void()>> nodes_;
  bool recording_ = true;
};

inline void backward(const TensorPtr& loss, Tape& tape) { tape.backward(loss); }

// Disables tape recording for the lifetime of the guard (inference paths).
class NoGradGuard {
 public:
  explicit NoGradGuard(Tape& tape) : tape_(tape), prev_(tape.recording()) {
    tape_.set_recording(false);
  }
  ~NoGradGuard() { tape_.set_recording(prev_); }

 private:
  Tape& tape_;
  bool prev_;
};

}  // namespace agcnn
