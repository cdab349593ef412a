#include <doctest.h>

#include "tomcat/nn/nn.hpp"

using namespace tomcat;

TEST_SUITE_BEGIN("nn");

namespace {

// Squared-error losses against fixed random targets drive the checks.
template <class Net, class ForwardFn>
double check_gradients(Net& net, nn::ParamRegistry<double>& reg, ForwardFn&& fwd) {
  return nn::max_grad_rel_error<double>(reg, [&] {
    reg.zero_grads();
    return fwd();
  });
}

}  // namespace

TEST_CASE("linear layer gradient matches central differences") {
  Rng rng(1);
  nn::Linear<double> lin(4, 3, rng);
  nn::ParamRegistry<double> reg;
  lin.reg(reg, "lin");
  MatX<double> X(4, 5), T(3, 5);
  rng.fill_normal(X);
  rng.fill_normal(T);
  double err = check_gradients(lin, reg, [&] {
    MatX<double> Y = lin.forward(X);
    MatX<double> diff = Y - T;
    lin.backward(X, 2.0 * diff);
    return diff.squaredNorm();
  });
  CHECK(err < 1e-6);
}

TEST_CASE("lstm gradient matches central differences, including masked steps") {
  Rng rng(2);
  const int in = 3, hidden = 4, T = 5, batch = 2;
  nn::Lstm<double> lstm(in, hidden, rng);
  nn::ParamRegistry<double> reg;
  lstm.reg(reg, "lstm");
  std::vector<MatX<double>> xs(T, MatX<double>(in, batch));
  for (auto& x : xs) rng.fill_normal(x);
  std::vector<VecX<double>> masks(T, VecX<double>::Ones(batch));
  masks[2](1) = 0;  // one carried-through step in lane 1
  masks[4](0) = 0;
  MatX<double> target(hidden, batch);
  rng.fill_normal(target);

  typename nn::Lstm<double>::Cache cache;
  double err = check_gradients(lstm, reg, [&] {
    MatX<double> h = lstm.forward(xs, masks, &cache);
    MatX<double> diff = h - target;
    lstm.backward(xs, cache, 2.0 * diff);
    return diff.squaredNorm();
  });
  CHECK(err < 1e-6);
}

TEST_CASE("conv1d gradient matches central differences") {
  Rng rng(3);
  nn::Conv1d<double> conv(3, 2, 5, rng);
  nn::ParamRegistry<double> reg;
  conv.reg(reg, "conv");
  MatX<double> X(3, 7), T(2, 7);
  rng.fill_normal(X);
  rng.fill_normal(T);
  MatX<double> col;
  double err = check_gradients(conv, reg, [&] {
    MatX<double> Y = conv.forward(X, &col);
    MatX<double> diff = Y - T;
    conv.backward(col, 2.0 * diff);
    return diff.squaredNorm();
  });
  CHECK(err < 1e-6);
}

TEST_CASE("conv1d same-padding matches a manual convolution") {
  Rng rng(4);
  nn::Conv1d<double> conv(1, 1, 3, rng);
  conv.W << 1.0, 2.0, 3.0;  // taps for offsets -1, 0, +1
  conv.b.setZero();
  MatX<double> X(1, 4);
  X << 1, 2, 3, 4;
  MatX<double> Y = conv.forward(X, nullptr);
  CHECK(Y(0, 0) == doctest::Approx(2 * 1 + 3 * 2));           // left edge zero-padded
  CHECK(Y(0, 1) == doctest::Approx(1 * 1 + 2 * 2 + 3 * 3));
  CHECK(Y(0, 3) == doctest::Approx(1 * 3 + 2 * 4));           // right edge zero-padded
}

TEST_CASE("adam minimizes a quadratic") {
  Rng rng(5);
  nn::Linear<double> lin(1, 1, rng);
  nn::ParamRegistry<double> reg;
  lin.reg(reg, "lin");
  nn::Adam<double> opt({0.05});
  opt.init(reg);
  MatX<double> X = MatX<double>::Ones(1, 1);
  for (int i = 0; i < 500; ++i) {
    reg.zero_grads();
    MatX<double> diff = lin.forward(X) - MatX<double>::Constant(1, 1, 3.0);
    lin.backward(X, 2.0 * diff);
    opt.step(reg);
  }
  CHECK(lin.forward(X)(0, 0) == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("softmax columns normalize and dropout masks scale correctly") {
  Rng rng(6);
  MatX<double> Z(4, 3);
  rng.fill_normal(Z);
  MatX<double> P = nn::softmax_cols(Z);
  for (int j = 0; j < 3; ++j) CHECK(P.col(j).sum() == doctest::Approx(1.0));
  CHECK(P.minCoeff() > 0);

  MatX<double> mask = nn::dropout_mask<double>(200, 200, 0.2, rng);
  double mean = mask.mean();
  CHECK(mean == doctest::Approx(1.0).epsilon(0.05));  // inverted dropout keeps the scale
  for (int i = 0; i < 10; ++i) {
    double v = mask(i, i);
    CHECK((v == 0.0 || v == doctest::Approx(1.25)));
  }
}

TEST_CASE("sinusoidal embeddings distinguish nearby steps") {
  VecX<double> a = nn::sinusoidal_embedding<double>(3, 16);
  VecX<double> b = nn::sinusoidal_embedding<double>(4, 16);
  CHECK((a - b).norm() > 1e-3);
  CHECK(a.array().abs().maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("rng streams are reproducible and serializable") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  uint64_t s = a.state();
  double x = a.normal();
  a.set_state(s);
  CHECK(a.normal() == x);
  // normals look standard
  Rng c(7);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double v = c.normal();
    sum += v;
    sq += v * v;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.05));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_SUITE_END();
