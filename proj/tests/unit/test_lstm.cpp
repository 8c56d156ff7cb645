// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "hfl/lstm.hpp"

using namespace hfl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Sequence {
  std::vector<MatrixXd> xs;
  std::vector<Eigen::RowVectorXd> mask;
};

// Column j is active for its last lengths[j] steps.
Sequence make_sequence(Eigen::Index in, const std::vector<int>& lengths, int steps, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Sequence s;
  const auto batch = static_cast<Eigen::Index>(lengths.size());
  for (int k = 0; k < steps; ++k) {
    MatrixXd x(in, batch);
    Eigen::RowVectorXd m(batch);
    for (Eigen::Index j = 0; j < batch; ++j) {
      const bool on = k >= steps - lengths[static_cast<std::size_t>(j)];
      m(j) = on ? 1.0 : 0.0;
      for (Eigen::Index i = 0; i < in; ++i) x(i, j) = on ? n(rng) : 0.0;
    }
    s.xs.push_back(x);
    s.mask.push_back(m);
  }
  return s;
}

}  // namespace

TEST(Lstm, ParameterCount) {
  const Lstm l(5, 7);
  EXPECT_EQ(l.parameter_count(), 4 * 7 * (5 + 7) + 4 * 7);
}

TEST(Lstm, InitForgetBiasIsOne) {
  const Lstm l(3, 4);
  VectorXd p(l.parameter_count());
  Rng rng(1);
  l.init(p.data(), rng);
  const VectorXd b = p.tail(16);
  EXPECT_EQ(b.segment(0, 4), VectorXd::Zero(4));
  EXPECT_EQ(b.segment(4, 4), VectorXd::Ones(4));
  EXPECT_LE(p.head(p.size() - 16).cwiseAbs().maxCoeff(), 0.5);
}

TEST(Lstm, SingleStepMatchesHandCell) {
  const Lstm l(2, 1);
  VectorXd p(l.parameter_count());
  // W is 4x3 column-major: rows i, f, g, o; columns x0, x1, h
  p << 0.1, 0.2, 0.3, 0.4,  //
      -0.1, 0.0, 0.5, 0.2,  //
      0.7, 0.1, -0.2, 0.3,  //
      0.05, 1.0, -0.05, 0.1;
  MatrixXd x(2, 1);
  x << 1.0, 2.0;
  const MatrixXd h = l.forward(p.data(), {x}, {Eigen::RowVectorXd::Ones(1)}, nullptr);
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double i = sig(0.1 - 0.2 + 0.05);
  const double g = std::tanh(0.3 + 1.0 + 0.0 - 0.05);
  const double o = sig(0.4 + 0.4 + 0.1);
  const double c = i * g;
  EXPECT_NEAR(h(0, 0), o * std::tanh(c), 1e-14);
}

TEST(Lstm, PaddedColumnsMatchUnpadded) {
  const Lstm l(3, 4);
  VectorXd p(l.parameter_count());
  Rng rng(2);
  l.init(p.data(), rng);
  const Sequence s = make_sequence(3, {5, 2}, 5, rng);
  const MatrixXd both = l.forward(p.data(), s.xs, s.mask, nullptr);
  // second column alone, as a 2-step sequence
  std::vector<MatrixXd> xs{s.xs[3].col(1), s.xs[4].col(1)};
  std::vector<Eigen::RowVectorXd> mask(2, Eigen::RowVectorXd::Ones(1));
  const MatrixXd alone = l.forward(p.data(), xs, mask, nullptr);
  EXPECT_NEAR((both.col(1) - alone.col(0)).cwiseAbs().maxCoeff(), 0.0, 1e-14);
}

TEST(Lstm, FastTanhAgreesWithStd) {
  Eigen::ArrayXXd z(1, 7);
  z << -800, -20, -1, 0, 0.5, 20, 800;
  const Eigen::ArrayXXd t = fast_tanh(z);
  for (Eigen::Index j = 0; j < z.cols(); ++j) EXPECT_NEAR(t(0, j), std::tanh(z(0, j)), 1e-15);
}

TEST(Lstm, GradientMatchesFiniteDifferences) {
  const Lstm l(3, 4);
  VectorXd p(l.parameter_count());
  Rng rng(3);
  l.init(p.data(), rng);
  const Sequence s = make_sequence(3, {4, 1, 3}, 4, rng);
  const MatrixXd r = MatrixXd::Random(4, 3);
  auto loss = [&](const VectorXd& q) { return l.forward(q.data(), s.xs, s.mask, nullptr).cwiseProduct(r).sum(); };

  Lstm::Tape tape;
  l.forward(p.data(), s.xs, s.mask, &tape);
  VectorXd grad = VectorXd::Zero(p.size());
  l.backward(p.data(), tape, r, grad.data());

  const double eps = 1e-6;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    VectorXd a = p, b = p;
    a(k) += eps;
    b(k) -= eps;
    const double fd = (loss(a) - loss(b)) / (2 * eps);
    EXPECT_NEAR(grad(k), fd, 1e-4 * std::max(1.0, std::abs(fd))) << "parameter " << k;
  }
}
