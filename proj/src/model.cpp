#include "agcnn/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "agcnn/error.hpp"

namespace agcnn {

namespace {

double init_range(InitScheme scheme) {
  return scheme == InitScheme::agcnn ? 0.05 : 0.01;
}

std::string config_summary(const HyperParams& hp) {
  std::string windows;
  for (size_t w : hp.conv_windows)
    windows += (windows.empty() ? "" : ",") + std::to_string(w);
  return std::string("activation=") + activation_name(hp.activation) +
         " conv_windows=(" + windows + ") n_maps_conv=" +
         std::to_string(hp.n_maps_conv) + " lr=" +
         std::to_string(hp.learning_rate);
}

}  // namespace

std::vector<NamedParam> AgcnnModel::named_params() const {
  std::vector<NamedParam> out;
  out.push_back({"embedding", embedding});
  for (const auto& bank : conv_banks) {
    for (size_t i = 0; i < bank.kernels.size(); ++i) {
      const std::string tag = "conv_w" + std::to_string(bank.window) + "_" +
                              std::to_string(i);
      out.push_back({tag + "_k", bank.kernels[i]});
      out.push_back({tag + "_b", bank.biases[i]});
    }
  }
  for (const auto& bank : attn_banks) {
    for (size_t i = 0; i < bank.kernels.size(); ++i) {
      const std::string tag = "attn_w" + std::to_string(bank.window) + "_" +
                              std::to_string(i);
      out.push_back({tag + "_k", bank.kernels[i]});
      out.push_back({tag + "_b", bank.biases[i]});
    }
  }
  out.push_back({"dense_w", dense_w});
  out.push_back({"dense_b", dense_b});
  out.push_back({"prelu_slope", prelu_slope});
  return out;
}

std::vector<TensorPtr> AgcnnModel::trainable_params() const {
  std::vector<TensorPtr> out;
  for (const auto& np : named_params())
    if (np.tensor->requires_grad) out.push_back(np.tensor);
  return out;
}

AgcnnModel init_params(const HyperParams& hp, size_t vocab_size,
                       uint64_t seed) {
  hp.validate();
  if (vocab_size < 2)
    throw Error(ErrorKind::config,
                "vocabulary must hold the padding token plus at least one word");

  AgcnnModel model;
  model.hp = hp;
  model.vocab_size = vocab_size;
  model.rng = Rng(derive_seed(seed, 0xA11Du));

  Rng init(derive_seed(seed, 0x1417u));
  const size_t d = hp.embedding_dim;
  const double r = init_range(hp.init_scheme);

  model.embedding = make_tensor({vocab_size, d});
  if (hp.embedding_mode == EmbeddingMode::rand) {
    model.embedding->requires_grad = true;
    for (size_t row = 1; row < vocab_size; ++row)
      for (size_t j = 0; j < d; ++j)
        model.embedding->data[row * d + j] = init.uniform(-0.25, 0.25);
  }
  // row 0 (padding) stays all-zero in both modes

  for (size_t h : hp.conv_windows) {
    ConvBank bank;
    bank.window = h;
    for (size_t i = 0; i < hp.n_maps_conv; ++i) {
      auto k = make_tensor({h, d}, 0.0, true);
      for (double& v : k->data) v = init.uniform(-r, r);
      bank.kernels.push_back(std::move(k));
      bank.biases.push_back(make_scalar(0.0, true));
    }
    model.conv_banks.push_back(std::move(bank));
  }

  for (size_t w : hp.attn_windows) {
    AttnBank bank;
    bank.window = w;
    for (size_t i = 0; i < hp.n_maps_attn; ++i) {
      auto k = make_tensor({w}, 0.0, true);
      for (double& v : k->data) v = init.uniform(-r, r);
      bank.kernels.push_back(std::move(k));
      bank.biases.push_back(make_scalar(0.0, true));
    }
    model.attn_banks.push_back(std::move(bank));
  }

  const size_t m = hp.pooled_dim();
  const size_t c = static_cast<size_t>(hp.classes);
  model.dense_w = make_tensor({c, m}, 0.0, true);
  for (double& v : model.dense_w->data) v = init.uniform(-r, r);
  model.dense_b = make_tensor({c}, 0.0, true);
  model.prelu_slope = make_scalar(hp.prelu_init, true);
  return model;
}

void install_embeddings(AgcnnModel& model, const TensorPtr& matrix) {
  if (matrix->shape != model.embedding->shape)
    throw Error(ErrorKind::shape, "embedding matrix shape mismatch");
  model.embedding->data = matrix->data;
  const size_t d = model.hp.embedding_dim;
  std::fill_n(model.embedding->data.begin(), d, 0.0);  // padding row
}

namespace {

// One fused tape node covering the whole gate: every attention kernel's
// same-length convolution, the gate activation, the elementwise mean and
// the multiply. Same math as composing conv1d_same_asym / activate /
// mean_stack / elementwise_mul, but one node per feature map instead of
// dozens. Weight maps are recomputed in backward rather than stored.
struct GateRefs {
  std::vector<TensorPtr> kernels;
  std::vector<TensorPtr> biases;
};

void gate_conv(const double* f, size_t L, const double* k, size_t w, double b,
               double* wmap) {
  const long pad_l = static_cast<long>((w - 1) / 2);
  for (size_t i = 0; i < L; ++i) {
    const long lo = std::max<long>(0, pad_l - static_cast<long>(i));
    const long hi = std::min<long>(static_cast<long>(w),
                                   static_cast<long>(L + pad_l - i));
    double acc = b;
    const double* src = f + (static_cast<long>(i) - pad_l + lo);
    for (long j = lo; j < hi; ++j, ++src) acc += *src * k[j];
    wmap[i] = acc;
  }
}

double gate_conv_at(const double* f, size_t L, const double* k, size_t w,
                    double b, size_t i) {
  const long pad_l = static_cast<long>((w - 1) / 2);
  const long lo = std::max<long>(0, pad_l - static_cast<long>(i));
  const long hi = std::min<long>(static_cast<long>(w),
                                 static_cast<long>(L + pad_l - i));
  double acc = b;
  const double* src = f + (static_cast<long>(i) - pad_l + lo);
  for (long j = lo; j < hi; ++j, ++src) acc += *src * k[j];
  return acc;
}

}  // namespace

TensorPtr attention_gate(Tape& tape, const AgcnnModel& model,
                         const TensorPtr& featmap) {
  if (featmap->shape.size() != 1)
    throw Error(ErrorKind::shape, "attention_gate expects a 1-D feature map");
  const Activation act = model.hp.gate_activation_config();
  const bool learnable_slope = act.kind == ActivationKind::prelu;
  const double slope = model.prelu_slope->data[0];
  const size_t L = featmap->extent(0);

  auto refs = std::make_shared<GateRefs>();
  for (const auto& bank : model.attn_banks) {
    for (size_t i = 0; i < bank.kernels.size(); ++i) {
      refs->kernels.push_back(bank.kernels[i]);
      refs->biases.push_back(bank.biases[i]);
    }
  }
  const size_t n_kernels = refs->kernels.size();
  const double inv_n = 1.0 / static_cast<double>(n_kernels);

  std::vector<double> gate(L, 0.0);
  std::vector<double> wmap(L);
  for (size_t k = 0; k < n_kernels; ++k) {
    gate_conv(featmap->data.data(), L, refs->kernels[k]->data.data(),
              refs->kernels[k]->extent(0), refs->biases[k]->data[0],
              wmap.data());
    for (size_t i = 0; i < L; ++i)
      gate[i] += activation_value(act, wmap[i], slope);
  }
  for (double& g : gate) g *= inv_n;

  auto out = make_tensor({L});
  for (size_t i = 0; i < L; ++i) out->data[i] = gate[i] * featmap->data[i];

  bool needs = featmap->requires_grad ||
               (learnable_slope && model.prelu_slope->requires_grad);
  for (size_t k = 0; k < n_kernels && !needs; ++k)
    needs = refs->kernels[k]->requires_grad || refs->biases[k]->requires_grad;

  if (needs) {
    out->requires_grad = true;
    auto prelu_slope = model.prelu_slope;
    tape.record([featmap, out, refs, act, slope, prelu_slope, L, n_kernels,
                 inv_n, gate = std::move(gate)] {
      if (out->grad.empty()) return;
      const double* f = featmap->data.data();
      const double* u = out->grad.data();

      double* fg = nullptr;
      if (featmap->requires_grad) {
        featmap->ensure_grad();
        fg = featmap->grad.data();
        for (size_t i = 0; i < L; ++i) fg[i] += u[i] * gate[i];
      }

      // d(out)/d(gate) = featmap. Downstream of the gate sits max-over-time,
      // so the upstream gradient is usually nonzero at a single position;
      // walking only those positions avoids recomputing full weight maps.
      std::vector<size_t> nz;
      std::vector<double> up_gate;
      for (size_t i = 0; i < L; ++i) {
        const double up = u[i] * f[i] * inv_n;
        if (up != 0.0) {
          nz.push_back(i);
          up_gate.push_back(up);
        }
      }

      double slope_acc = 0.0;
      for (size_t k = 0; k < n_kernels && !nz.empty(); ++k) {
        const auto& kernel = refs->kernels[k];
        const auto& bias = refs->biases[k];
        const size_t w = kernel->extent(0);
        const long pad_l = static_cast<long>((w - 1) / 2);
        const double* kd = kernel->data.data();
        const double b = bias->data[0];

        double* kg = nullptr;
        if (kernel->requires_grad) {
          kernel->ensure_grad();
          kg = kernel->grad.data();
        }
        double bias_acc = 0.0;
        for (size_t t = 0; t < nz.size(); ++t) {
          const size_t i = nz[t];
          const double wmap_i = gate_conv_at(f, L, kd, w, b, i);
          const double dw = up_gate[t] * activation_deriv(act, wmap_i, slope);
          slope_acc += up_gate[t] * activation_slope_deriv(act, wmap_i);
          if (dw == 0.0) continue;
          bias_acc += dw;
          const long lo = std::max<long>(0, pad_l - static_cast<long>(i));
          const long hi = std::min<long>(static_cast<long>(w),
                                         static_cast<long>(L + pad_l - i));
          const long base = static_cast<long>(i) - pad_l;
          for (long j = lo; j < hi; ++j) {
            if (kg) kg[j] += dw * f[base + j];
            if (fg) fg[base + j] += dw * kd[j];
          }
        }
        if (bias->requires_grad && bias_acc != 0.0) {
          bias->ensure_grad();
          bias->grad[0] += bias_acc;
        }
      }
      if (act.kind == ActivationKind::prelu && prelu_slope->requires_grad &&
          slope_acc != 0.0) {
        prelu_slope->ensure_grad();
        prelu_slope->grad[0] += slope_acc;
      }
    });
  }
  return out;
}

TensorPtr forward_logits(Tape& tape, AgcnnModel& model,
                         std::span<const int> token_ids, bool training,
                         Rng& rng) {
  if (token_ids.size() < model.hp.max_window())
    throw Error(ErrorKind::contract,
                "sentence shorter than the largest window; pad it first");

  auto embedded = lookup(tape, model.embedding, token_ids);
  const Activation act = model.hp.activation_config();

  std::vector<TensorPtr> pooled;
  pooled.reserve(model.hp.pooled_dim());
  for (const auto& bank : model.conv_banks) {
    for (size_t i = 0; i < bank.kernels.size(); ++i) {
      auto fm = conv1d_valid(tape, embedded, bank.kernels[i], bank.biases[i]);
      fm = activate(tape, act, fm, model.prelu_slope);
      if (model.hp.use_attention) fm = attention_gate(tape, model, fm);
      pooled.push_back(max_over_time(tape, fm));
    }
  }
  auto features = concat(tape, pooled);
  features = dropout(tape, features, model.hp.keep_rate, rng, training);
  return dense(tape, features, model.dense_w, model.dense_b);
}

TensorPtr forward(Tape& tape, AgcnnModel& model,
                  std::span<const int> token_ids, bool training, Rng& rng) {
  return softmax(tape, forward_logits(tape, model, token_ids, training, rng));
}

std::vector<int> pad_tokens(std::span<const int> ids, size_t min_len) {
  std::vector<int> out(ids.begin(), ids.end());
  if (out.size() < min_len) out.resize(min_len, 0);
  return out;
}

double train_step(AgcnnModel& model, std::span<const EncodedExample> batch,
                  AdamState& adam) {
  if (batch.empty())
    throw Error(ErrorKind::contract, "train_step requires a non-empty batch");

  size_t max_len = model.hp.max_window();
  for (const auto& ex : batch) max_len = std::max(max_len, ex.token_ids.size());

  Tape tape;
  std::vector<TensorPtr> losses;
  losses.reserve(batch.size());
  for (const auto& ex : batch) {
    if (ex.label < 0 || ex.label >= model.hp.classes)
      throw Error(ErrorKind::contract, "label out of range in batch");
    const auto padded = pad_tokens(ex.token_ids, max_len);
    auto logits = forward_logits(tape, model, padded, true, model.rng);
    losses.push_back(softmax_xent(tape, logits, static_cast<size_t>(ex.label)));
  }
  auto batch_loss = mean_stack(tape, losses);
  const double loss = batch_loss->data[0];
  if (!std::isfinite(loss))
    throw Error(ErrorKind::divergence,
                "non-finite training loss under " + config_summary(model.hp));

  auto params = model.trainable_params();
  for (auto& p : params) p->zero_grad();
  tape.backward(batch_loss);

  // the padding row never moves
  if (model.embedding->requires_grad && !model.embedding->grad.empty())
    std::fill_n(model.embedding->grad.begin(), model.hp.embedding_dim, 0.0);

  if (adam.m.empty()) {
    adam.m.resize(params.size());
    adam.v.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      adam.m[i].assign(params[i]->size(), 0.0);
      adam.v[i].assign(params[i]->size(), 0.0);
    }
  }
  if (adam.m.size() != params.size())
    throw Error(ErrorKind::contract, "optimizer state does not match model");

  ++adam.step;
  const double lr = model.hp.learning_rate;
  const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step));
  const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    if (p.grad.empty()) continue;
    auto& m = adam.m[i];
    auto& v = adam.v[i];
    for (size_t j = 0; j < p.size(); ++j) {
      const double g = p.grad[j];
      m[j] = adam.beta1 * m[j] + (1.0 - adam.beta1) * g;
      v[j] = adam.beta2 * v[j] + (1.0 - adam.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p.data[j] -= lr * mhat / (std::sqrt(vhat) + adam.eps);
    }
  }

  if (model.hp.max_norm > 0.0) {
    const size_t m_dim = model.hp.pooled_dim();
    const size_t c = static_cast<size_t>(model.hp.classes);
    for (size_t r = 0; r < c; ++r) {
      double* row = model.dense_w->data.data() + r * m_dim;
      double norm = 0.0;
      for (size_t j = 0; j < m_dim; ++j) norm += row[j] * row[j];
      norm = std::sqrt(norm);
      if (norm > model.hp.max_norm) {
        const double scale = model.hp.max_norm / norm;
        for (size_t j = 0; j < m_dim; ++j) row[j] *= scale;
      }
    }
  }
  return loss;
}

std::vector<EpochStats> train(AgcnnModel& model,
                              std::span<const EncodedExample> examples,
                              size_t epochs) {
  if (examples.empty())
    throw Error(ErrorKind::contract, "train requires a non-empty dataset");
  if (epochs == 0) epochs = model.hp.epochs;

  AdamState adam;
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochStats> log;
  for (size_t epoch = 0; epoch < epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[model.rng.next_below(i)]);

    double loss_sum = 0.0;
    size_t batches = 0;
    std::vector<EncodedExample> batch;
    for (size_t start = 0; start < order.size();
         start += model.hp.batch_size) {
      batch.clear();
      const size_t end = std::min(order.size(), start + model.hp.batch_size);
      for (size_t i = start; i < end; ++i)
        batch.push_back(examples[order[i]]);
      loss_sum += train_step(model, batch, adam);
      ++batches;
    }
    const auto t1 = std::chrono::steady_clock::now();
    log.push_back({epoch, loss_sum / static_cast<double>(batches),
                   std::chrono::duration<double>(t1 - t0).count()});
  }
  return log;
}

double evaluate(AgcnnModel& model, std::span<const EncodedExample> slice) {
  if (slice.empty())
    throw Error(ErrorKind::contract, "evaluate requires a non-empty slice");
  size_t correct = 0;
  Rng unused(0);
  for (const auto& ex : slice) {
    if (ex.label < 0 || ex.label >= model.hp.classes)
      throw Error(ErrorKind::contract, "label out of range in evaluation slice");
    const auto padded = pad_tokens(ex.token_ids, model.hp.max_window());
    Tape tape;
    NoGradGuard guard(tape);
    auto logits = forward_logits(tape, model, padded, false, unused);
    size_t arg = 0;
    for (size_t i = 1; i < logits->size(); ++i)
      if (logits->data[i] > logits->data[arg]) arg = i;
    if (static_cast<int>(arg) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(slice.size());
}

}  // namespace agcnn
