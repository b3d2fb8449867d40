#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "agcnn/grad_check.hpp"
#include "agcnn/model.hpp"
#include "agcnn/sweep.hpp"
#include "model_test_helpers.hpp"

using namespace agcnn;
using namespace testing_support;

namespace {

HyperParams small_hp() {
  HyperParams hp;
  hp.conv_windows = {2, 3};
  hp.n_maps_conv = 4;
  hp.attn_windows = {1, 3};
  hp.n_maps_attn = 2;
  hp.embedding_dim = 6;
  hp.classes = 3;
  hp.keep_rate = 0.5;
  return hp;
}

std::vector<EncodedExample> random_examples(Rng& rng, size_t n, size_t vocab,
                                            int classes, size_t min_len,
                                            size_t max_len) {
  std::vector<EncodedExample> out;
  for (size_t i = 0; i < n; ++i) {
    EncodedExample ex;
    ex.label = static_cast<int>(i % classes);
    ex.token_ids =
        random_sentence(rng, min_len + rng.next_below(max_len - min_len + 1),
                        vocab);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

TEST_CASE("init_params is deterministic and shaped by the config") {
  auto hp = preset_baseline();
  hp.embedding_dim = 8;
  auto a = init_params(hp, 50, 123);
  auto b = init_params(hp, 50, 123);

  REQUIRE(a.conv_banks.size() == 1);
  CHECK(a.conv_banks[0].kernels.size() == 100);
  CHECK(a.conv_banks[0].kernels[0]->shape == std::vector<size_t>{3, 8});
  CHECK(a.attn_banks.size() == 1);
  CHECK(a.attn_banks[0].kernels.size() == 1);
  CHECK(a.dense_w->shape == std::vector<size_t>{2, 100});

  for (const auto& [name, t] : a.named_params()) {
    const auto other = b.named_params();
    bool found = false;
    for (const auto& [name2, t2] : other) {
      if (name2 != name) continue;
      found = true;
      CHECK(t->data == t2->data);
    }
    CHECK(found);
  }

  auto c = init_params(hp, 50, 124);
  CHECK(a.conv_banks[0].kernels[0]->data != c.conv_banks[0].kernels[0]->data);
}

TEST_CASE("init ranges and the zero padding row") {
  auto hp = small_hp();
  auto model = init_params(hp, 30, 7);
  for (size_t j = 0; j < hp.embedding_dim; ++j)
    CHECK(model.embedding->data[j] == 0.0);
  for (size_t i = hp.embedding_dim; i < model.embedding->size(); ++i) {
    CHECK(model.embedding->data[i] >= -0.25);
    CHECK(model.embedding->data[i] <= 0.25);
  }
  for (const auto& bank : model.conv_banks) {
    for (const auto& k : bank.kernels)
      for (double v : k->data) {
        CHECK(v >= -0.05);
        CHECK(v <= 0.05);
      }
    for (const auto& b : bank.biases) CHECK(b->data[0] == 0.0);
  }

  hp.init_scheme = InitScheme::legacy_cnn;
  auto legacy = init_params(hp, 30, 7);
  for (const auto& bank : legacy.conv_banks)
    for (const auto& k : bank.kernels)
      for (double v : k->data) {
        CHECK(v >= -0.01);
        CHECK(v <= 0.01);
      }
}

TEST_CASE("attention_gate closed forms") {
  auto hp = small_hp();
  hp.attn_windows = {1};
  hp.n_maps_attn = 1;
  hp.gate_activation = ActivationKind::relu;
  auto model = init_params(hp, 10, 3);

  SUBCASE("w=1 kernel u>0 squares the map") {
    const double u = 0.7;
    model.attn_banks[0].kernels[0]->data[0] = u;
    model.attn_banks[0].biases[0]->data[0] = 0.0;
    auto fm = make_tensor({4}, {0.5, 0.0, 2.0, 1.25});
    Tape tape;
    auto out = attention_gate(tape, model, fm);
    for (size_t i = 0; i < 4; ++i)
      CHECK(out->data[i] ==
            doctest::Approx(u * fm->data[i] * fm->data[i]).epsilon(1e-14));
  }

  SUBCASE("zero weights and biases zero the output for 0-fixing gates") {
    for (ActivationKind kind :
         {ActivationKind::relu, ActivationKind::nlrelu, ActivationKind::selu}) {
      model.hp.gate_activation = kind;
      model.attn_banks[0].kernels[0]->data[0] = 0.0;
      model.attn_banks[0].biases[0]->data[0] = 0.0;
      auto fm = make_tensor({3}, {1.0, 2.0, 3.0});
      Tape tape;
      auto out = attention_gate(tape, model, fm);
      for (double v : out->data) CHECK(v == 0.0);
    }
  }

  SUBCASE("identity gate reproduces the map exactly") {
    make_identity_gate(model);
    auto fm = make_tensor({5}, {0.1, -0.4, 2.0, 0.0, 1.0});
    Tape tape;
    auto out = attention_gate(tape, model, fm);
    CHECK(out->data == fm->data);
  }
}

TEST_CASE("attention_gate equals its composition from the public ops") {
  Rng rng(616);
  const ActivationKind gates[] = {ActivationKind::relu, ActivationKind::nlrelu,
                                  ActivationKind::selu, ActivationKind::elu,
                                  ActivationKind::lrelu, ActivationKind::prelu,
                                  ActivationKind::sigmoid,
                                  ActivationKind::softplus};
  for (int iter = 0; iter < 60; ++iter) {
    HyperParams hp = small_hp();
    hp.attn_windows = {1 + rng.next_below(2), 3 + rng.next_below(3)};
    hp.n_maps_attn = 1 + rng.next_below(3);
    hp.gate_activation = gates[iter % std::size(gates)];
    auto model = init_params(hp, 10, rng.next_u64());
    for (auto& bank : model.attn_banks)
      for (auto& b : bank.biases) b->data[0] = rng.uniform(-0.1, 0.1);

    const size_t L = 2 + rng.next_below(8);
    auto fm = make_tensor({L}, 0.0, true);
    for (double& v : fm->data) v = rng.uniform(-2, 2);
    auto fm2 = make_tensor({L}, fm->data, true);

    Tape fused_tape;
    auto fused = attention_gate(fused_tape, model, fm);

    // the same math spelled out with the public ops
    Tape composed_tape;
    const Activation act = model.hp.gate_activation_config();
    std::vector<TensorPtr> wmaps;
    for (const auto& bank : model.attn_banks)
      for (size_t i = 0; i < bank.kernels.size(); ++i) {
        auto w = conv1d_same_asym(composed_tape, fm2, bank.kernels[i],
                                  bank.biases[i]);
        wmaps.push_back(activate(composed_tape, act, w, model.prelu_slope));
      }
    auto gate = mean_stack(composed_tape, wmaps);
    auto composed = elementwise_mul(composed_tape, gate, fm2);

    REQUIRE(fused->size() == composed->size());
    for (size_t i = 0; i < L; ++i)
      CHECK(fused->data[i] == composed->data[i]);

    // gradients agree between the two routes
    auto mix = make_tensor({L});
    for (double& v : mix->data) v = rng.uniform(-1, 1);
    auto zero_all = [&](AgcnnModel& m) {
      for (auto& np : m.named_params()) np.tensor->zero_grad();
    };
    auto grad_at = [](const TensorPtr& t, size_t i) {
      return t->grad.empty() ? 0.0 : t->grad[i];
    };
    auto grads_of = [&](const TensorPtr& t) {
      std::vector<double> g(t->size());
      for (size_t i = 0; i < t->size(); ++i) g[i] = grad_at(t, i);
      return g;
    };

    zero_all(model);
    fm->zero_grad();
    auto fused_loss =
        sum(fused_tape, elementwise_mul(fused_tape, fused, mix));
    fused_tape.backward(fused_loss);
    std::vector<double> fused_fm_grad = grads_of(fm);
    std::vector<std::vector<double>> fused_param_grads;
    for (const auto& bank : model.attn_banks)
      for (size_t i = 0; i < bank.kernels.size(); ++i) {
        fused_param_grads.push_back(grads_of(bank.kernels[i]));
        fused_param_grads.push_back(grads_of(bank.biases[i]));
      }

    zero_all(model);
    auto composed_loss =
        sum(composed_tape, elementwise_mul(composed_tape, composed, mix));
    composed_tape.backward(composed_loss);

    for (size_t i = 0; i < L; ++i)
      CHECK(fused_fm_grad[i] == doctest::Approx(grad_at(fm2, i)).epsilon(1e-13));
    size_t p = 0;
    for (const auto& bank : model.attn_banks)
      for (size_t i = 0; i < bank.kernels.size(); ++i) {
        const auto& kg = fused_param_grads[p++];
        const auto& bg = fused_param_grads[p++];
        for (size_t j = 0; j < kg.size(); ++j)
          CHECK(kg[j] ==
                doctest::Approx(grad_at(bank.kernels[i], j)).epsilon(1e-13));
        CHECK(bg[0] ==
              doctest::Approx(grad_at(bank.biases[i], 0)).epsilon(1e-13));
      }
  }
}

TEST_CASE("forward emits a probability vector") {
  auto hp = small_hp();
  auto model = init_params(hp, 40, 9);
  Rng rng(5);
  Rng data_rng(6);
  for (int iter = 0; iter < 20; ++iter) {
    auto ids = random_sentence(data_rng, 3 + data_rng.next_below(8), 40);
    Tape tape;
    auto probs = forward(tape, model, ids, false, rng);
    REQUIRE(probs->size() == 3);
    double s = 0.0;
    for (double p : probs->data) {
      CHECK(p > 0.0);
      CHECK(p < 1.0);
      s += p;
    }
    CHECK(std::fabs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("forward rejects sentences shorter than the largest window") {
  auto hp = small_hp();  // max window 3
  auto model = init_params(hp, 20, 1);
  Rng rng(1);
  std::vector<int> two{1, 2};
  Tape tape;
  CHECK_THROWS_AS(forward(tape, model, two, false, rng), Error);
  // pad_tokens fixes it up
  auto padded = pad_tokens(two, hp.max_window());
  CHECK(padded == std::vector<int>{1, 2, 0});
  CHECK_NOTHROW(forward(tape, model, padded, false, rng));
}

TEST_CASE("gate-identity equivalence against the plain-CNN reference") {
  Rng rng(2718);
  const ActivationKind gates[] = {ActivationKind::relu, ActivationKind::nlrelu,
                                  ActivationKind::selu, ActivationKind::elu,
                                  ActivationKind::softplus};
  int sentences_checked = 0;
  for (int round = 0; round < 6; ++round) {
    HyperParams hp;
    hp.conv_windows = {1 + rng.next_below(2), 3 + rng.next_below(2)};
    hp.n_maps_conv = 1 + rng.next_below(5);
    hp.attn_windows = {1 + rng.next_below(3), 5 + rng.next_below(3)};
    hp.n_maps_attn = 1 + rng.next_below(3);
    hp.embedding_dim = 2 + rng.next_below(6);
    hp.classes = 2 + static_cast<int>(rng.next_below(3));
    hp.activation = gates[rng.next_below(std::size(gates))];
    hp.gate_activation = gates[rng.next_below(std::size(gates))];
    const size_t vocab = 20 + rng.next_below(30);

    auto model = init_params(hp, vocab, rng.next_u64());
    make_identity_gate(model);

    Rng unused(0);
    for (int s = 0; s < 10; ++s) {
      auto ids = random_sentence(
          rng, hp.max_window() + rng.next_below(8), vocab);
      Tape tape;
      NoGradGuard guard(tape);
      auto probs = forward(tape, model, ids, false, unused);
      const auto expect = reference_cnn_probs(model, ids);
      REQUIRE(probs->size() == expect.size());
      for (size_t i = 0; i < expect.size(); ++i)
        CHECK(std::fabs(probs->data[i] - expect[i]) < 1e-12);
      ++sentences_checked;
    }

    // attention disabled reproduces the same reference
    auto plain = model;
    plain.hp.use_attention = false;
    auto ids = random_sentence(rng, hp.max_window() + 3, vocab);
    Tape tape;
    NoGradGuard guard(tape);
    auto probs = forward(tape, plain, ids, false, unused);
    const auto expect = reference_cnn_probs(plain, ids);
    for (size_t i = 0; i < expect.size(); ++i)
      CHECK(std::fabs(probs->data[i] - expect[i]) < 1e-12);
  }
  CHECK(sentences_checked >= 50);
}

TEST_CASE("pooled width follows conv config and ignores attention config") {
  auto proposed = preset_proposed();
  proposed.embedding_dim = 4;
  auto model = init_params(proposed, 30, 1);
  CHECK(proposed.pooled_dim() == 1000);
  CHECK(model.dense_w->shape == std::vector<size_t>{2, 1000});

  auto wider_attn = proposed;
  wider_attn.attn_windows = {2, 4, 6, 8};
  wider_attn.n_maps_attn = 25;
  CHECK(wider_attn.pooled_dim() == 1000);
  auto model2 = init_params(wider_attn, 30, 1);
  CHECK(model2.dense_w->shape == model.dense_w->shape);

  auto baseline = preset_baseline();
  CHECK(baseline.pooled_dim() == 100);
}

TEST_CASE("full-model gradient matches finite differences on a 6-token sentence") {
  auto hp = preset_baseline();
  hp.embedding_dim = 8;
  hp.classes = 2;
  const size_t vocab = 12;
  auto model = init_params(hp, vocab, 4242);
  const std::vector<int> ids{3, 7, 1, 9, 4, 11};
  const size_t label = 1;
  const uint64_t mask_seed = 99;

  // Swaps the probe tensor into the parameter slot so the analytic
  // gradient lands on the tensor grad_check differentiates.
  auto check_param = [&](TensorPtr& slot) {
    auto f = [&](Tape& tape, const TensorPtr& x) {
      TensorPtr saved = slot;
      slot = x;
      Rng rng(mask_seed);  // fixed dropout mask per evaluation
      auto logits = forward_logits(tape, model, ids, true, rng);
      auto loss = softmax_xent(tape, logits, label);
      slot = saved;
      return loss;
    };
    auto probe = make_tensor(slot->shape, slot->data);
    return grad_check(f, probe, 1e-5);
  };

  CHECK(check_param(model.embedding) < 1e-4);
  CHECK(check_param(model.conv_banks[0].kernels[0]) < 1e-4);
  CHECK(check_param(model.conv_banks[0].biases[0]) < 1e-4);
  CHECK(check_param(model.attn_banks[0].kernels[0]) < 1e-4);
  CHECK(check_param(model.attn_banks[0].biases[0]) < 1e-4);
  CHECK(check_param(model.dense_w) < 1e-4);
  CHECK(check_param(model.dense_b) < 1e-4);
}

TEST_CASE("train_step with zero learning rate changes nothing") {
  auto hp = small_hp();
  hp.learning_rate = 0.0;
  auto model = init_params(hp, 25, 77);
  Rng rng(3);
  auto batch = random_examples(rng, 6, 25, hp.classes, 3, 8);
  const auto before = model.named_params();
  std::vector<std::vector<double>> snapshot;
  for (const auto& np : before) snapshot.push_back(np.tensor->data);

  AdamState adam;
  const double loss = train_step(model, batch, adam);
  CHECK(std::isfinite(loss));
  CHECK(loss > 0.0);
  const auto after = model.named_params();
  for (size_t i = 0; i < after.size(); ++i)
    CHECK(after[i].tensor->data == snapshot[i]);
}

TEST_CASE("repeated steps on one example drive the loss down") {
  auto hp = preset_baseline();
  hp.embedding_dim = 8;
  hp.classes = 2;
  auto model = init_params(hp, 10, 2025);
  std::vector<EncodedExample> batch{{1, {3, 1, 4, 1, 5}}};
  AdamState adam;
  std::vector<double> losses;
  for (int step = 0; step < 10; ++step)
    losses.push_back(train_step(model, batch, adam));
  for (size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] < losses[i - 1]);
}

TEST_CASE("identical seeds give bit-identical training trajectories") {
  auto hp = small_hp();
  hp.epochs = 2;
  Rng rng(9);
  auto data = random_examples(rng, 30, 25, hp.classes, 3, 9);

  auto run = [&] {
    auto model = init_params(hp, 25, 555);
    train(model, data);
    std::vector<std::vector<double>> out;
    for (const auto& np : model.named_params()) out.push_back(np.tensor->data);
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("static embeddings stay frozen through training") {
  auto hp = small_hp();
  hp.embedding_mode = EmbeddingMode::static_pretrained;
  hp.epochs = 2;
  auto model = init_params(hp, 25, 11);
  auto pretrained = make_tensor({25, hp.embedding_dim});
  Rng rng(12);
  for (size_t i = hp.embedding_dim; i < pretrained->size(); ++i)
    pretrained->data[i] = rng.uniform(-0.3, 0.3);
  install_embeddings(model, pretrained);

  const auto frozen = model.embedding->data;
  auto data = random_examples(rng, 40, 25, hp.classes, 3, 9);
  train(model, data);
  CHECK(model.embedding->data == frozen);

  // rand mode does move the embedding
  auto hp2 = small_hp();
  hp2.epochs = 2;
  auto model2 = init_params(hp2, 25, 11);
  const auto before = model2.embedding->data;
  train(model2, data);
  CHECK(model2.embedding->data != before);
  // but its padding row stays zero
  for (size_t j = 0; j < hp2.embedding_dim; ++j)
    CHECK(model2.embedding->data[j] == 0.0);
}

TEST_CASE("evaluate counts argmax hits") {
  auto hp = small_hp();
  hp.classes = 2;
  auto model = init_params(hp, 10, 1);
  // force class-1 wins: bias dominates
  std::fill(model.dense_w->data.begin(), model.dense_w->data.end(), 0.0);
  model.dense_b->data = {0.0, 5.0};

  std::vector<EncodedExample> all_one{{1, {1, 2, 3}}, {1, {4, 5, 6, 7}}};
  CHECK(evaluate(model, all_one) == 1.0);

  std::vector<EncodedExample> half{{1, {1, 2, 3}}, {0, {4, 5, 6}}};
  CHECK(evaluate(model, half) == 0.5);

  // tie in logits goes to the lowest class index
  model.dense_b->data = {0.0, 0.0};
  std::fill(model.embedding->data.begin(), model.embedding->data.end(), 0.0);
  std::vector<EncodedExample> tie{{0, {1, 2, 3}}};
  CHECK(evaluate(model, tie) == 1.0);

  CHECK_THROWS_AS(evaluate(model, std::vector<EncodedExample>{}), Error);
}

TEST_CASE("evaluate is invariant under slice permutation") {
  auto hp = small_hp();
  auto model = init_params(hp, 30, 17);
  Rng rng(44);
  auto data = random_examples(rng, 25, 30, hp.classes, 3, 9);
  const double base = evaluate(model, data);
  for (int iter = 0; iter < 5; ++iter) {
    for (size_t i = data.size(); i > 1; --i)
      std::swap(data[i - 1], data[rng.next_below(i)]);
    CHECK(evaluate(model, data) == base);
  }
}

TEST_CASE("untrained models sit at chance level") {
  double acc_sum = 0.0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    HyperParams hp;
    hp.conv_windows = {3};
    hp.n_maps_conv = 8;
    hp.attn_windows = {3};
    hp.n_maps_attn = 1;
    hp.embedding_dim = 8;
    hp.classes = 2;
    auto model = init_params(hp, 60, 9000 + seed);
    Rng rng(100 + seed);
    auto data = random_examples(rng, 1000, 60, 2, 3, 10);
    acc_sum += evaluate(model, data);
  }
  const double mean_acc = acc_sum / seeds;
  CHECK(mean_acc > 0.45);
  CHECK(mean_acc < 0.55);
}

TEST_CASE("max_norm caps dense weight rows after each update") {
  auto hp = small_hp();
  hp.max_norm = 0.01;
  auto model = init_params(hp, 25, 4);
  Rng rng(5);
  auto batch = random_examples(rng, 8, 25, hp.classes, 3, 8);
  AdamState adam;
  for (int step = 0; step < 3; ++step) train_step(model, batch, adam);
  const size_t m = hp.pooled_dim();
  for (int r = 0; r < hp.classes; ++r) {
    double norm = 0.0;
    for (size_t j = 0; j < m; ++j) {
      const double v = model.dense_w->data[r * m + j];
      norm += v * v;
    }
    CHECK(std::sqrt(norm) <= hp.max_norm + 1e-12);
  }
}

TEST_CASE("divergence is reported as such") {
  auto hp = small_hp();
  hp.activation = hp.gate_activation = ActivationKind::relu;
  auto model = init_params(hp, 25, 5);
  // a blown-up parameter state overflows the logits into NaN territory
  std::fill(model.embedding->data.begin(), model.embedding->data.end(), 1e200);
  for (auto& bank : model.conv_banks)
    for (auto& k : bank.kernels)
      std::fill(k->data.begin(), k->data.end(), 1e200);
  std::fill(model.dense_w->data.begin(), model.dense_w->data.end(), 1e200);

  Rng rng(6);
  auto batch = random_examples(rng, 4, 25, hp.classes, 3, 8);
  AdamState adam;
  bool saw_divergence = false;
  std::string message;
  try {
    train_step(model, batch, adam);
  } catch (const Error& e) {
    saw_divergence = e.kind() == ErrorKind::divergence;
    message = e.what();
  }
  CHECK(saw_divergence);
  // the error names the offending configuration
  CHECK(message.find("activation=relu") != std::string::npos);
}
