#include "doctest.h"

#include <cmath>

#include "agcnn/grad_check.hpp"
#include "agcnn/ops.hpp"
#include "agcnn/rng.hpp"

using namespace agcnn;

namespace {

constexpr double kTol = 1e-4;
constexpr double kEps = 1e-5;

TensorPtr random_tensor(Rng& rng, std::vector<size_t> shape, double lo = -2,
                        double hi = 2) {
  auto t = make_tensor(std::move(shape));
  for (double& v : t->data) v = rng.uniform(lo, hi);
  return t;
}

// Re-draws any coordinate within `margin` of a kink point.
void avoid_kinks(Rng& rng, TensorPtr& t, double margin = 1e-3) {
  for (double& v : t->data)
    while (std::fabs(v) < margin) v = rng.uniform(-2, 2);
}

}  // namespace

TEST_CASE("grad_check on a quadratic") {
  auto f = [](Tape& tape, const TensorPtr& x) {
    return sum(tape, elementwise_mul(tape, x, x));
  };
  auto x = make_tensor({2}, {1.0, 2.0});
  CHECK(grad_check(f, x, kEps) < 1e-7);
}

TEST_CASE("grad_check is near machine precision for linear f") {
  auto f = [](Tape& tape, const TensorPtr& x) { return sum(tape, x); };
  auto x = make_tensor({5}, {0.1, -0.2, 0.3, 7.0, -3.0});
  CHECK(grad_check(f, x, kEps) < 1e-10);
}

TEST_CASE("grad_check rejects non-deterministic and non-scalar f") {
  Rng shared(1);
  auto noisy = [&shared](Tape& tape, const TensorPtr& x) {
    return sum(tape, dropout(tape, x, 0.5, shared, true));
  };
  Rng fill(2);
  auto x = random_tensor(fill, {8});
  CHECK_THROWS_AS(grad_check(noisy, x, kEps), Error);

  auto vector_valued = [](Tape&, const TensorPtr& x) { return x; };
  CHECK_THROWS_AS(grad_check(vector_valued, x, kEps), Error);
  CHECK_THROWS_AS(grad_check([](Tape& t, const TensorPtr& x) { return sum(t, x); },
                             x, 0.0),
                  Error);
}

TEST_CASE("conv1d_valid gradients: seq, kernel and bias") {
  Rng rng(101);
  for (int iter = 0; iter < 100; ++iter) {
    const size_t d = 1 + rng.next_below(4);
    const size_t L = 2 + rng.next_below(6);
    const size_t h = 1 + rng.next_below(L > 4 ? 4 : L);
    auto seq = random_tensor(rng, {L, d});
    auto kernel = random_tensor(rng, {h, d});
    auto bias = make_scalar(rng.uniform(-1, 1));

    auto via_seq = [&](Tape& tape, const TensorPtr& x) {
      return sum(tape, conv1d_valid(tape, x, kernel, bias));
    };
    CHECK(grad_check(via_seq, seq, kEps) < kTol);

    auto via_kernel = [&](Tape& tape, const TensorPtr& k) {
      return sum(tape, conv1d_valid(tape, seq, k, bias));
    };
    CHECK(grad_check(via_kernel, kernel, kEps) < kTol);

    auto via_bias = [&](Tape& tape, const TensorPtr& b) {
      return sum(tape, conv1d_valid(tape, seq, kernel, b));
    };
    CHECK(grad_check(via_bias, bias, kEps) < kTol);
  }
}

TEST_CASE("conv1d_same_asym gradients") {
  Rng rng(102);
  for (int iter = 0; iter < 100; ++iter) {
    const size_t L = 1 + rng.next_below(8);
    const size_t w = 1 + rng.next_below(8);
    auto map = random_tensor(rng, {L});
    auto kernel = random_tensor(rng, {w});
    auto bias = make_scalar(rng.uniform(-1, 1));

    auto via_map = [&](Tape& tape, const TensorPtr& x) {
      return sum(tape, conv1d_same_asym(tape, x, kernel, bias));
    };
    CHECK(grad_check(via_map, map, kEps) < kTol);

    auto via_kernel = [&](Tape& tape, const TensorPtr& k) {
      return sum(tape, conv1d_same_asym(tape, map, k, bias));
    };
    CHECK(grad_check(via_kernel, kernel, kEps) < kTol);

    auto via_bias = [&](Tape& tape, const TensorPtr& b) {
      return sum(tape, conv1d_same_asym(tape, map, kernel, b));
    };
    CHECK(grad_check(via_bias, bias, kEps) < kTol);
  }
}

TEST_CASE("max_over_time gradient away from ties") {
  Rng rng(103);
  int done = 0;
  while (done < 100) {
    const size_t L = 1 + rng.next_below(8);
    auto map = random_tensor(rng, {L});
    // skip near-ties; the finite difference would straddle the switch
    double best = -1e9, second = -1e9;
    for (double v : map->data) {
      if (v > best) {
        second = best;
        best = v;
      } else if (v > second) {
        second = v;
      }
    }
    if (L > 1 && best - second < 1e-3) continue;
    auto f = [](Tape& tape, const TensorPtr& x) {
      return max_over_time(tape, x);
    };
    CHECK(grad_check(f, map, kEps) < kTol);
    ++done;
  }
}

TEST_CASE("activation gradients for all kinds, kinks excluded") {
  Rng rng(104);
  const ActivationKind kinds[] = {
      ActivationKind::relu,    ActivationKind::nlrelu,  ActivationKind::selu,
      ActivationKind::elu,     ActivationKind::lrelu,   ActivationKind::prelu,
      ActivationKind::sigmoid, ActivationKind::softplus};
  for (ActivationKind kind : kinds) {
    const Activation act{kind};
    auto slope = make_scalar(0.25);
    for (int iter = 0; iter < 100; ++iter) {
      auto x = random_tensor(rng, {1 + rng.next_below(8)});
      avoid_kinks(rng, x);
      auto f = [&](Tape& tape, const TensorPtr& in) {
        return sum(tape, activate(tape, act, in, slope));
      };
      CHECK(grad_check(f, x, kEps) < kTol);
    }
  }
}

TEST_CASE("prelu slope gradient") {
  Rng rng(105);
  for (int iter = 0; iter < 100; ++iter) {
    auto x = random_tensor(rng, {1 + rng.next_below(8)});
    avoid_kinks(rng, x);
    auto slope = make_scalar(rng.uniform(0.05, 0.5));
    auto f = [&](Tape& tape, const TensorPtr& s) {
      return sum(tape, activate(tape, {ActivationKind::prelu}, x, s));
    };
    CHECK(grad_check(f, slope, kEps) < kTol);
  }
}

TEST_CASE("elementwise_mul gradients") {
  Rng rng(106);
  for (int iter = 0; iter < 100; ++iter) {
    const size_t n = 1 + rng.next_below(8);
    auto a = random_tensor(rng, {n});
    auto b = random_tensor(rng, {n});
    auto f = [&](Tape& tape, const TensorPtr& x) {
      return sum(tape, elementwise_mul(tape, x, b));
    };
    CHECK(grad_check(f, a, kEps) < kTol);
    auto g = [&](Tape& tape, const TensorPtr& x) {
      return sum(tape, elementwise_mul(tape, a, x));
    };
    CHECK(grad_check(g, b, kEps) < kTol);
  }
}

TEST_CASE("dense gradients: x, W and b") {
  Rng rng(107);
  for (int iter = 0; iter < 100; ++iter) {
    const size_t m = 1 + rng.next_below(6);
    const size_t c = 2 + rng.next_below(4);
    auto x = random_tensor(rng, {m});
    auto W = random_tensor(rng, {c, m});
    auto b = random_tensor(rng, {c});
    // weight the rows so the gradient is not uniform
    auto mix = random_tensor(rng, {c});

    auto via_x = [&](Tape& tape, const TensorPtr& in) {
      return sum(tape, elementwise_mul(tape, dense(tape, in, W, b), mix));
    };
    CHECK(grad_check(via_x, x, kEps) < kTol);
    auto via_W = [&](Tape& tape, const TensorPtr& w) {
      return sum(tape, elementwise_mul(tape, dense(tape, x, w, b), mix));
    };
    CHECK(grad_check(via_W, W, kEps) < kTol);
    auto via_b = [&](Tape& tape, const TensorPtr& bb) {
      return sum(tape, elementwise_mul(tape, dense(tape, x, W, bb), mix));
    };
    CHECK(grad_check(via_b, b, kEps) < kTol);
  }
}

TEST_CASE("dropout gradient with a replayed mask") {
  // re-seeding per evaluation fixes the mask, making f deterministic
  for (int iter = 0; iter < 100; ++iter) {
    Rng outer(400 + iter);
    auto x = random_tensor(outer, {1 + outer.next_below(8)});
    const uint64_t mask_seed = outer.next_u64();
    auto f = [&](Tape& tape, const TensorPtr& in) {
      Rng rng(mask_seed);
      return sum(tape, dropout(tape, in, 0.5, rng, true));
    };
    CHECK(grad_check(f, x, kEps) < kTol);
  }
}

TEST_CASE("softmax_xent gradient") {
  Rng rng(108);
  for (int iter = 0; iter < 100; ++iter) {
    const size_t c = 2 + rng.next_below(6);
    auto logits = random_tensor(rng, {c}, -3, 3);
    const size_t label = rng.next_below(c);
    auto f = [&](Tape& tape, const TensorPtr& in) {
      return softmax_xent(tape, in, label);
    };
    CHECK(grad_check(f, logits, kEps) < kTol);
  }
}

TEST_CASE("softmax_xent analytic gradient equals softmax minus one-hot") {
  Rng rng(109);
  for (int iter = 0; iter < 50; ++iter) {
    const size_t c = 2 + rng.next_below(5);
    auto logits = random_tensor(rng, {c}, -5, 5);
    logits->requires_grad = true;
    const size_t label = rng.next_below(c);
    Tape tape;
    auto loss = softmax_xent(tape, logits, label);
    tape.backward(loss);

    Tape t2;
    auto p = softmax(t2, make_tensor(logits->shape, logits->data));
    for (size_t i = 0; i < c; ++i) {
      const double expect = p->data[i] - (i == label ? 1.0 : 0.0);
      CHECK(logits->grad[i] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("softmax gradient") {
  Rng rng(110);
  for (int iter = 0; iter < 100; ++iter) {
    const size_t c = 2 + rng.next_below(6);
    auto logits = random_tensor(rng, {c}, -3, 3);
    auto mix = random_tensor(rng, {c});
    auto f = [&](Tape& tape, const TensorPtr& in) {
      return sum(tape, elementwise_mul(tape, softmax(tape, in), mix));
    };
    CHECK(grad_check(f, logits, kEps) < kTol);
  }
}

TEST_CASE("lookup gradient scatters into rows") {
  Rng rng(111);
  for (int iter = 0; iter < 100; ++iter) {
    const size_t V = 3 + rng.next_below(5);
    const size_t d = 1 + rng.next_below(4);
    auto table = random_tensor(rng, {V, d});
    std::vector<int> ids;
    const size_t L = 1 + rng.next_below(6);
    for (size_t i = 0; i < L; ++i)
      ids.push_back(static_cast<int>(rng.next_below(V)));
    auto f = [&](Tape& tape, const TensorPtr& t) {
      return sum(tape, lookup(tape, t, ids));
    };
    CHECK(grad_check(f, table, kEps) < kTol);
  }
}

TEST_CASE("mean_stack and concat gradients") {
  Rng rng(112);
  for (int iter = 0; iter < 100; ++iter) {
    const size_t n = 1 + rng.next_below(6);
    auto a = random_tensor(rng, {n});
    auto b = random_tensor(rng, {n});
    auto f = [&](Tape& tape, const TensorPtr& x) {
      std::vector<TensorPtr> xs{x, b, x};  // fan-out through the stack
      auto m = mean_stack(tape, xs);
      std::vector<TensorPtr> cat{m, x};
      return sum(tape, concat(tape, cat));
    };
    CHECK(grad_check(f, a, kEps) < kTol);
  }
}

TEST_CASE("composed graph matches finite differences") {
  Rng rng(113);
  for (int iter = 0; iter < 30; ++iter) {
    const size_t L = 4 + rng.next_below(4);
    const size_t d = 2 + rng.next_below(3);
    auto seq = random_tensor(rng, {L, d});
    avoid_kinks(rng, seq);
    auto kernel = random_tensor(rng, {2, d});
    auto bias = make_scalar(0.1);
    auto gate_kernel = random_tensor(rng, {3});
    auto gate_bias = make_scalar(0.2);
    auto f = [&](Tape& tape, const TensorPtr& x) {
      auto fm = conv1d_valid(tape, x, kernel, bias);
      fm = activate(tape, {ActivationKind::selu}, fm);
      auto wmap = conv1d_same_asym(tape, fm, gate_kernel, gate_bias);
      auto gate = activate(tape, {ActivationKind::sigmoid}, wmap);
      auto gated = elementwise_mul(tape, gate, fm);
      return max_over_time(tape, gated);
    };
    // max pooling switches are possible; tolerate rare re-draws
    if (grad_check(f, seq, kEps) >= kTol) {
      for (double& v : seq->data) v = rng.uniform(-2, 2);
      avoid_kinks(rng, seq);
      CHECK(grad_check(f, seq, kEps) < kTol);
    }
  }
}
