#include <gtest/gtest.h>

#include <functional>

#include "spamgraph/autodiff.hpp"
#include "spamgraph/rng.hpp"

namespace spamgraph {
namespace {

Matrix<double> random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix<double> m(r, c);
  for (auto& v : m.flat()) v = rng.uniform(-1, 1);
  return m;
}

// Builds a scalar from the leaves on a fresh tape; compares every leaf
// gradient with central differences.
using Builder = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

void check_gradients(std::vector<Matrix<double>> leaves, const Builder& build) {
  Tape<double> tape;
  std::vector<Var> vars;
  for (const auto& m : leaves) vars.push_back(tape.parameter(m));
  const Var out = build(tape, vars);
  ASSERT_EQ(tape.value(out).size(), 1u);
  tape.backward(out);

  auto eval = [&] {
    Tape<double> t;
    std::vector<Var> v;
    for (const auto& m : leaves) v.push_back(t.parameter(m));
    return t.value(build(t, v))(0, 0);
  };
  const double h = 1e-6;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    const auto g = tape.grad(vars[l]);
    for (std::size_t k = 0; k < leaves[l].size(); ++k) {
      const double keep = leaves[l].data()[k];
      leaves[l].data()[k] = keep + h;
      const double up = eval();
      leaves[l].data()[k] = keep - h;
      const double down = eval();
      leaves[l].data()[k] = keep;
      EXPECT_NEAR(g.data()[k], (up - down) / (2 * h), 1e-6) << "leaf " << l << " entry " << k;
    }
  }
}

// Reduces any matrix to a scalar with fixed random weights so every entry
// carries a distinct adjoint.
Var weighted_sum(Tape<double>& t, Var x) {
  const auto& v = t.value(x);
  Rng rng(99);
  Matrix<double> w(v.cols(), 1);
  for (auto& e : w.flat()) e = rng.uniform(-1, 1);
  Matrix<double> ones(1, v.rows(), 1.0);
  return t.matmul(t.input(ones), t.matmul(x, t.input(w)));
}

TEST(Tape, Matmul) {
  Rng rng(1);
  check_gradients({random_matrix(rng, 3, 4), random_matrix(rng, 4, 2)},
                  [](Tape<double>& t, const std::vector<Var>& v) {
                    return weighted_sum(t, t.matmul(v[0], v[1]));
                  });
}

TEST(Tape, AddSubScaleAddRow) {
  Rng rng(2);
  check_gradients({random_matrix(rng, 3, 2), random_matrix(rng, 3, 2), random_matrix(rng, 1, 2)},
                  [](Tape<double>& t, const std::vector<Var>& v) {
                    const Var s = t.sub(t.add(v[0], t.scale(v[1], 3.0)), v[0]);
                    return weighted_sum(t, t.add_row(t.add(s, v[0]), v[2]));
                  });
}

TEST(Tape, PreluIncludingSlope) {
  Rng rng(3);
  check_gradients({random_matrix(rng, 4, 3), Matrix<double>(1, 1, 0.3)},
                  [](Tape<double>& t, const std::vector<Var>& v) {
                    return weighted_sum(t, t.prelu(v[0], v[1]));
                  });
}

TEST(Tape, Sigmoid) {
  Rng rng(4);
  check_gradients({random_matrix(rng, 3, 3)}, [](Tape<double>& t, const std::vector<Var>& v) {
    return weighted_sum(t, t.sigmoid(v[0]));
  });
}

TEST(Tape, GatherRowsWithRepeats) {
  Rng rng(5);
  check_gradients({random_matrix(rng, 3, 2)}, [](Tape<double>& t, const std::vector<Var>& v) {
    return weighted_sum(t, t.gather_rows(v[0], {2, 0, 2, 2, 1}));
  });
}

TEST(Tape, ConcatCols) {
  Rng rng(6);
  check_gradients({random_matrix(rng, 3, 2), random_matrix(rng, 3, 1), random_matrix(rng, 3, 3)},
                  [](Tape<double>& t, const std::vector<Var>& v) {
                    return weighted_sum(t, t.concat_cols({v[0], v[1], v[2]}));
                  });
}

TEST(Tape, GateBlend) {
  Rng rng(7);
  check_gradients({random_matrix(rng, 2, 3), random_matrix(rng, 2, 3), random_matrix(rng, 2, 3)},
                  [](Tape<double>& t, const std::vector<Var>& v) {
                    return weighted_sum(t, t.gate_blend(t.sigmoid(v[0]), v[1], v[2]));
                  });
}

TEST(Tape, GraphAttention) {
  Rng rng(8);
  // 4 nodes: 0-1, 1-2, 2-3 with self-loops.
  static const std::vector<std::uint64_t> offsets{0, 2, 5, 8, 10};
  static const std::vector<std::uint32_t> neighbors{0, 1, 0, 1, 2, 1, 2, 3, 2, 3};
  const CsrView csr{offsets, neighbors};
  for (double scale : {1.0, 0.5}) {
    check_gradients({random_matrix(rng, 4, 2), random_matrix(rng, 4, 2), random_matrix(rng, 4, 3)},
                    [&](Tape<double>& t, const std::vector<Var>& v) {
                      return weighted_sum(t, t.graph_attention(v[0], v[1], v[2], csr, scale));
                    });
  }
}

TEST(Tape, BceMean) {
  Rng rng(9);
  check_gradients({random_matrix(rng, 5, 1)}, [](Tape<double>& t, const std::vector<Var>& v) {
    return t.bce_mean(t.sigmoid(v[0]), {1, 0, 1, 0, 0}, {0, 1, 3}, 1e-7);
  });
}

TEST(Tape, BceClampBlocksGradient) {
  Tape<double> t;
  const Var p = t.parameter(Matrix<double>(2, 1, {1.0, 0.0}));
  const Var loss = t.bce_mean(p, {0, 1}, {0, 1}, 1e-7);
  t.backward(loss);
  EXPECT_NEAR(t.value(loss)(0, 0), -std::log(1e-7), 1e-6);
  const auto g = t.grad(p);
  EXPECT_EQ(g(0, 0), 0.0);
  EXPECT_EQ(g(1, 0), 0.0);
}

TEST(Tape, UnusedParameterHasZeroGrad) {
  Tape<double> t;
  const Var a = t.parameter(Matrix<double>(2, 2, 1.0));
  const Var unused = t.parameter(Matrix<double>(3, 1, 1.0));
  const Var s = weighted_sum(t, a);
  t.backward(s);
  const auto g = t.grad(unused);
  EXPECT_EQ(g.rows(), 3u);
  for (double v : g.flat()) EXPECT_EQ(v, 0.0);
}

TEST(Tape, ReuseAccumulatesAdjoints) {
  Rng rng(10);
  check_gradients({random_matrix(rng, 2, 2)}, [](Tape<double>& t, const std::vector<Var>& v) {
    return weighted_sum(t, t.matmul(v[0], v[0]));
  });
}

}  // namespace
}  // namespace spamgraph
