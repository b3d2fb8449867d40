#include "agcnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace agcnn {

namespace {

bool any_requires_grad(std::initializer_list<const TensorPtr*> ts) {
  for (const auto* t : ts)
    if (*t && (*t)->requires_grad) return true;
  return false;
}

void require_scalar(const TensorPtr& t, const char* what) {
  if (!t || !t->is_scalar())
    throw Error(ErrorKind::shape, std::string(what) + " must be a scalar tensor");
}

}  // namespace

TensorPtr conv1d_valid(Tape& tape, const TensorPtr& seq,
                       const TensorPtr& kernel, const TensorPtr& bias) {
  if (seq->shape.size() != 2 || kernel->shape.size() != 2)
    throw Error(ErrorKind::shape, "conv1d_valid expects [L x d] and [h x d]");
  require_scalar(bias, "conv1d_valid bias");
  const size_t L = seq->extent(0), d = seq->extent(1);
  const size_t h = kernel->extent(0);
  if (kernel->extent(1) != d)
    throw Error(ErrorKind::shape, "conv1d_valid kernel width does not match embedding dim");
  if (h < 1 || h > L)
    throw Error(ErrorKind::shape,
                "conv1d_valid window exceeds sequence: h=" + std::to_string(h) +
                    " L=" + std::to_string(L));

  const size_t out_len = L - h + 1;
  auto out = make_tensor({out_len});
  const double* s = seq->data.data();
  const double* k = kernel->data.data();
  const double b = bias->data[0];
  for (size_t i = 0; i < out_len; ++i) {
    double acc = b;
    const double* srow = s + i * d;
    for (size_t t = 0; t < h * d; ++t) acc += srow[t] * k[t];
    out->data[i] = acc;
  }

  if (any_requires_grad({&seq, &kernel, &bias})) {
    out->requires_grad = true;
    tape.record([seq, kernel, bias, out, L, d, h, out_len] {
      if (out->grad.empty()) return;
      double* sg = nullptr;
      double* kg = nullptr;
      if (seq->requires_grad) { seq->ensure_grad(); sg = seq->grad.data(); }
      if (kernel->requires_grad) { kernel->ensure_grad(); kg = kernel->grad.data(); }
      const double* s = seq->data.data();
      const double* k = kernel->data.data();
      double bias_acc = 0.0;
      for (size_t i = 0; i < out_len; ++i) {
        const double g = out->grad[i];
        if (g == 0.0) continue;
        bias_acc += g;
        const size_t base = i * d;
        if (sg)
          for (size_t t = 0; t < h * d; ++t) sg[base + t] += g * k[t];
        if (kg)
          for (size_t t = 0; t < h * d; ++t) kg[t] += g * s[base + t];
      }
      if (bias->requires_grad && bias_acc != 0.0) {
        bias->ensure_grad();
        bias->grad[0] += bias_acc;
      }
    });
  }
  return out;
}

TensorPtr conv1d_same_asym(Tape& tape, const TensorPtr& map,
                           const TensorPtr& kernel, const TensorPtr& bias) {
  if (map->shape.size() != 1 || kernel->shape.size() != 1)
    throw Error(ErrorKind::shape, "conv1d_same_asym expects 1-D map and kernel");
  require_scalar(bias, "conv1d_same_asym bias");
  const size_t L = map->extent(0);
  const size_t w = kernel->extent(0);
  const long pad_l = static_cast<long>((w - 1) / 2);

  auto out = make_tensor({L});
  const double* m = map->data.data();
  const double* k = kernel->data.data();
  const double b = bias->data[0];
  for (size_t i = 0; i < L; ++i) {
    double acc = b;
    for (size_t j = 0; j < w; ++j) {
      const long src = static_cast<long>(i + j) - pad_l;
      if (src >= 0 && src < static_cast<long>(L)) acc += m[src] * k[j];
    }
    out->data[i] = acc;
  }

  if (any_requires_grad({&map, &kernel, &bias})) {
    out->requires_grad = true;
    tape.record([map, kernel, bias, out, L, w, pad_l] {
      if (out->grad.empty()) return;
      double* mg = nullptr;
      double* kg = nullptr;
      if (map->requires_grad) { map->ensure_grad(); mg = map->grad.data(); }
      if (kernel->requires_grad) { kernel->ensure_grad(); kg = kernel->grad.data(); }
      const double* m = map->data.data();
      const double* k = kernel->data.data();
      double bias_acc = 0.0;
      for (size_t i = 0; i < L; ++i) {
        const double g = out->grad[i];
        if (g == 0.0) continue;
        bias_acc += g;
        for (size_t j = 0; j < w; ++j) {
          const long src = static_cast<long>(i + j) - pad_l;
          if (src < 0 || src >= static_cast<long>(L)) continue;
          if (mg) mg[src] += g * k[j];
          if (kg) kg[j] += g * m[src];
        }
      }
      if (bias->requires_grad && bias_acc != 0.0) {
        bias->ensure_grad();
        bias->grad[0] += bias_acc;
      }
    });
  }
  return out;
}

TensorPtr max_over_time(Tape& tape, const TensorPtr& map) {
  if (map->shape.size() != 1)
    throw Error(ErrorKind::shape, "max_over_time expects a 1-D map");
  size_t arg = 0;
  double best = map->data[0];
  for (size_t i = 1; i < map->size(); ++i) {
    if (map->data[i] > best) {  // strict: ties keep the first index
      best = map->data[i];
      arg = i;
    }
  }
  auto out = make_scalar(best);
  if (map->requires_grad) {
    out->requires_grad = true;
    tape.record([map, out, arg] {
      if (out->grad.empty()) return;
      map->ensure_grad();
      map->grad[arg] += out->grad[0];
    });
  }
  return out;
}

TensorPtr activate(Tape& tape, const Activation& act, const TensorPtr& x,
                   const TensorPtr& prelu_slope) {
  double slope = 0.0;
  if (act.kind == ActivationKind::prelu) {
    if (!prelu_slope)
      throw Error(ErrorKind::config, "prelu requires a slope parameter");
    require_scalar(prelu_slope, "prelu slope");
    slope = prelu_slope->data[0];
  }
  auto out = make_tensor(x->shape);
  for (size_t i = 0; i < x->size(); ++i)
    out->data[i] = activation_value(act, x->data[i], slope);

  if (x->requires_grad || (prelu_slope && prelu_slope->requires_grad)) {
    out->requires_grad = true;
    tape.record([act, x, prelu_slope, out, slope] {
      if (out->grad.empty()) return;
      if (x->requires_grad) {
        x->ensure_grad();
        for (size_t i = 0; i < x->size(); ++i)
          x->grad[i] += out->grad[i] * activation_deriv(act, x->data[i], slope);
      }
      if (prelu_slope && prelu_slope->requires_grad) {
        double acc = 0.0;
        for (size_t i = 0; i < x->size(); ++i)
          acc += out->grad[i] * activation_slope_deriv(act, x->data[i]);
        if (acc != 0.0) {
          prelu_slope->ensure_grad();
          prelu_slope->grad[0] += acc;
        }
      }
    });
  }
  return out;
}

TensorPtr elementwise_mul(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape)
    throw Error(ErrorKind::shape, "elementwise_mul shape mismatch");
  auto out = make_tensor(a->shape);
  for (size_t i = 0; i < a->size(); ++i) out->data[i] = a->data[i] * b->data[i];
  if (any_requires_grad({&a, &b})) {
    out->requires_grad = true;
    tape.record([a, b, out] {
      if (out->grad.empty()) return;
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < a->size(); ++i)
          a->grad[i] += out->grad[i] * b->data[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t i = 0; i < b->size(); ++i)
          b->grad[i] += out->grad[i] * a->data[i];
      }
    });
  }
  return out;
}

TensorPtr dense(Tape& tape, const TensorPtr& x, const TensorPtr& W,
                const TensorPtr& b) {
  if (x->shape.size() != 1 || W->shape.size() != 2 || b->shape.size() != 1)
    throw Error(ErrorKind::shape, "dense expects x [m], W [c x m], b [c]");
  const size_t m = x->extent(0);
  const size_t c = W->extent(0);
  if (W->extent(1) != m || b->extent(0) != c)
    throw Error(ErrorKind::shape, "dense extent mismatch");

  auto out = make_tensor({c});
  for (size_t r = 0; r < c; ++r) {
    double acc = b->data[r];
    const double* wr = W->data.data() + r * m;
    for (size_t j = 0; j < m; ++j) acc += wr[j] * x->data[j];
    out->data[r] = acc;
  }

  if (any_requires_grad({&x, &W, &b})) {
    out->requires_grad = true;
    tape.record([x, W, b, out, m, c] {
      if (out->grad.empty()) return;
      if (x->requires_grad) {
        x->ensure_grad();
        for (size_t r = 0; r < c; ++r) {
          const double g = out->grad[r];
          if (g == 0.0) continue;
          const double* wr = W->data.data() + r * m;
          for (size_t j = 0; j < m; ++j) x->grad[j] += g * wr[j];
        }
      }
      if (W->requires_grad) {
        W->ensure_grad();
        for (size_t r = 0; r < c; ++r) {
          const double g = out->grad[r];
          if (g == 0.0) continue;
          double* wg = W->grad.data() + r * m;
          for (size_t j = 0; j < m; ++j) wg[j] += g * x->data[j];
        }
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t r = 0; r < c; ++r) b->grad[r] += out->grad[r];
      }
    });
  }
  return out;
}

TensorPtr dropout(Tape& tape, const TensorPtr& x, double keep_rate, Rng& rng,
                  bool training) {
  if (!(keep_rate > 0.0 && keep_rate <= 1.0))
    throw Error(ErrorKind::config, "keep_rate must be in (0, 1]");
  if (!training || keep_rate == 1.0) return x;

  auto out = make_tensor(x->shape);
  std::vector<double> mask(x->size());
  const double scale = 1.0 / keep_rate;
  for (size_t i = 0; i < x->size(); ++i) {
    mask[i] = rng.next_double() < keep_rate ? scale : 0.0;
    out->data[i] = x->data[i] * mask[i];
  }
  if (x->requires_grad) {
    out->requires_grad = true;
    tape.record([x, out, mask = std::move(mask)] {
      if (out->grad.empty()) return;
      x->ensure_grad();
      for (size_t i = 0; i < x->size(); ++i)
        x->grad[i] += out->grad[i] * mask[i];
    });
  }
  return out;
}

TensorPtr softmax_xent(Tape& tape, const TensorPtr& logits, size_t label) {
  if (logits->shape.size() != 1)
    throw Error(ErrorKind::shape, "softmax_xent expects a 1-D logit vector");
  const size_t c = logits->extent(0);
  if (label >= c)
    throw Error(ErrorKind::contract, "label out of range: " + std::to_string(label));

  const double mx = *std::max_element(logits->data.begin(), logits->data.end());
  std::vector<double> probs(c);
  double z = 0.0;
  for (size_t i = 0; i < c; ++i) {
    probs[i] = std::exp(logits->data[i] - mx);
    z += probs[i];
  }
  for (size_t i = 0; i < c; ++i) probs[i] /= z;
  const double loss = std::log(z) - (logits->data[label] - mx);

  auto out = make_scalar(loss);
  if (logits->requires_grad) {
    out->requires_grad = true;
    tape.record([logits, out, label, probs = std::move(probs)] {
      if (out->grad.empty()) return;
      logits->ensure_grad();
      const double g = out->grad[0];
      for (size_t i = 0; i < logits->size(); ++i)
        logits->grad[i] += g * (probs[i] - (i == label ? 1.0 : 0.0));
    });
  }
  return out;
}

TensorPtr softmax(Tape& tape, const TensorPtr& logits) {
  if (logits->shape.size() != 1)
    throw Error(ErrorKind::shape, "softmax expects a 1-D logit vector");
  const size_t c = logits->extent(0);
  const double mx = *std::max_element(logits->data.begin(), logits->data.end());
  auto out = make_tensor({c});
  double z = 0.0;
  for (size_t i = 0; i < c; ++i) {
    out->data[i] = std::exp(logits->data[i] - mx);
    z += out->data[i];
  }
  for (size_t i = 0; i < c; ++i) out->data[i] /= z;

  if (logits->requires_grad) {
    out->requires_grad = true;
    tape.record([logits, out, c] {
      if (out->grad.empty()) return;
      logits->ensure_grad();
      double dot = 0.0;
      for (size_t i = 0; i < c; ++i) dot += out->grad[i] * out->data[i];
      for (size_t i = 0; i < c; ++i)
        logits->grad[i] += out->data[i] * (out->grad[i] - dot);
    });
  }
  return out;
}

TensorPtr lookup(Tape& tape, const TensorPtr& table, std::span<const int> ids) {
  if (table->shape.size() != 2)
    throw Error(ErrorKind::shape, "lookup expects a [V x d] table");
  const size_t V = table->extent(0), d = table->extent(1);
  if (ids.empty())
    throw Error(ErrorKind::contract, "lookup requires at least one id");
  auto out = make_tensor({ids.size(), d});
  for (size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || static_cast<size_t>(id) >= V)
      throw Error(ErrorKind::data, "token id out of vocabulary range: " + std::to_string(id));
    std::copy_n(table->data.begin() + id * d, d, out->data.begin() + i * d);
  }
  if (table->requires_grad) {
    out->requires_grad = true;
    std::vector<int> ids_copy(ids.begin(), ids.end());
    tape.record([table, out, d, ids = std::move(ids_copy)] {
      if (out->grad.empty()) return;
      table->ensure_grad();
      for (size_t i = 0; i < ids.size(); ++i) {
        double* dst = table->grad.data() + static_cast<size_t>(ids[i]) * d;
        const double* src = out->grad.data() + i * d;
        for (size_t j = 0; j < d; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

TensorPtr mean_stack(Tape& tape, std::span<const TensorPtr> xs) {
  if (xs.empty())
    throw Error(ErrorKind::contract, "mean_stack requires at least one tensor");
  for (const auto& x : xs)
    if (x->shape != xs[0]->shape)
      throw Error(ErrorKind::shape, "mean_stack shape mismatch");

  const size_t n = xs.size();
  auto out = make_tensor(xs[0]->shape);
  for (const auto& x : xs)
    for (size_t i = 0; i < x->size(); ++i) out->data[i] += x->data[i];
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : out->data) v *= inv;

  bool needs = false;
  for (const auto& x : xs) needs = needs || x->requires_grad;
  if (needs) {
    out->requires_grad = true;
    std::vector<TensorPtr> held(xs.begin(), xs.end());
    tape.record([out, inv, held = std::move(held)] {
      if (out->grad.empty()) return;
      for (const auto& x : held) {
        if (!x->requires_grad) continue;
        x->ensure_grad();
        for (size_t i = 0; i < x->size(); ++i)
          x->grad[i] += out->grad[i] * inv;
      }
    });
  }
  return out;
}

TensorPtr concat(Tape& tape, std::span<const TensorPtr> xs) {
  if (xs.empty())
    throw Error(ErrorKind::contract, "concat requires at least one tensor");
  size_t total = 0;
  for (const auto& x : xs) {
    if (x->shape.size() != 1)
      throw Error(ErrorKind::shape, "concat expects 1-D tensors");
    total += x->size();
  }
  auto out = make_tensor({total});
  size_t off = 0;
  for (const auto& x : xs) {
    std::copy(x->data.begin(), x->data.end(), out->data.begin() + off);
    off += x->size();
  }
  bool needs = false;
  for (const auto& x : xs) needs = needs || x->requires_grad;
  if (needs) {
    out->requires_grad = true;
    std::vector<TensorPtr> held(xs.begin(), xs.end());
    tape.record([out, held = std::move(held)] {
      if (out->grad.empty()) return;
      size_t off = 0;
      for (const auto& x : held) {
        if (x->requires_grad) {
          x->ensure_grad();
          for (size_t i = 0; i < x->size(); ++i)
            x->grad[i] += out->grad[off + i];
        }
        off += x->size();
      }
    });
  }
  return out;
}

TensorPtr sum(Tape& tape, const TensorPtr& x) {
  double acc = 0.0;
  for (double v : x->data) acc += v;
  auto out = make_scalar(acc);
  if (x->requires_grad) {
    out->requires_grad = true;
    tape.record([x, out] {
      if (out->grad.empty()) return;
      x->ensure_grad();
      for (size_t i = 0; i < x->size(); ++i) x->grad[i] += out->grad[0];
    });
  }
  return out;
}

}  // namespace agcnn
