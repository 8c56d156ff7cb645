// SPDX-License-Identifier: Apache-2.0
#include "hfl/lstm.hpp"

#include <cmath>

#include "hfl/error.hpp"

namespace hfl {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;

ArrayXXd sigmoid(const ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }

ArrayXXd fast_tanh(const ArrayXXd& z) {
  // 1 - 2/(exp(2z)+1) stays finite for large |z|.
  return 1.0 - 2.0 / ((2.0 * z).min(700.0).exp() + 1.0);
}

namespace {

// Smallest column range holding every active column of a mask row.
std::pair<Index, Index> active_block(const Eigen::RowVectorXd& mask) {
  Index lo = 0;
  Index hi = mask.size();
  while (lo < hi && mask(lo) == 0.0) ++lo;
  while (hi > lo && mask(hi - 1) == 0.0) --hi;
  return {lo, hi - lo};
}

}  // namespace

Lstm::Lstm(Index inputs, Index hidden) : in_(inputs), h_(hidden) {
  if (inputs < 1 || hidden < 1) throw ConfigError("lstm: sizes must be >= 1");
}

void Lstm::init(double* params, Rng& rng) const {
  const double bound = 1.0 / std::sqrt(static_cast<double>(h_));
  std::uniform_real_distribution<double> u(-bound, bound);
  const Index nw = 4 * h_ * (in_ + h_);
  for (Index i = 0; i < nw; ++i) params[i] = u(rng);
  Eigen::Map<Eigen::VectorXd> b(params + nw, 4 * h_);
  b.setZero();
  b.segment(h_, h_).setOnes();
}

MatrixXd Lstm::forward(const double* params, const std::vector<MatrixXd>& xs,
                       const std::vector<Eigen::RowVectorXd>& mask, Tape* tape) const {
  if (xs.empty() || xs.size() != mask.size()) throw ContractViolation("lstm: sequence and mask lengths differ");
  const Index batch = xs.front().cols();
  Eigen::Map<const MatrixXd> w(params, 4 * h_, in_ + h_);
  Eigen::Map<const Eigen::VectorXd> b(params + 4 * h_ * (in_ + h_), 4 * h_);
  MatrixXd h = MatrixXd::Zero(h_, batch);
  MatrixXd c = MatrixXd::Zero(h_, batch);
  if (tape) {
    *tape = Tape{};
    tape->mask = mask;
  }
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (xs[k].rows() != in_ || xs[k].cols() != batch) throw ContractViolation("lstm: input shape mismatch");
    const auto [lo, n] = active_block(mask[k]);
    MatrixXd xh = MatrixXd::Zero(in_ + h_, batch);
    MatrixXd gates = MatrixXd::Zero(4 * h_, batch);
    MatrixXd c_next = MatrixXd::Zero(h_, batch);
    MatrixXd h_next = MatrixXd::Zero(h_, batch);
    if (n > 0) {
      auto xb = xh.middleCols(lo, n);
      xb.topRows(in_) = xs[k].middleCols(lo, n);
      xb.bottomRows(h_) = h.middleCols(lo, n);
      const MatrixXd z = (w * xb).colwise() + b;
      auto gb = gates.middleCols(lo, n);
      gb.topRows(2 * h_) = sigmoid(z.topRows(2 * h_).array()).matrix();
      gb.middleRows(2 * h_, h_) = fast_tanh(z.middleRows(2 * h_, h_).array()).matrix();
      gb.bottomRows(h_) = sigmoid(z.bottomRows(h_).array()).matrix();
      auto cb = c_next.middleCols(lo, n);
      cb = gb.middleRows(h_, h_).cwiseProduct(c.middleCols(lo, n)) +
           gb.topRows(h_).cwiseProduct(gb.middleRows(2 * h_, h_));
      cb.array().rowwise() *= mask[k].segment(lo, n).array();
      auto hb = h_next.middleCols(lo, n);
      hb = gb.bottomRows(h_).cwiseProduct(fast_tanh(cb.array()).matrix());
      hb.array().rowwise() *= mask[k].segment(lo, n).array();
    }
    if (tape) {
      tape->xh.push_back(std::move(xh));
      tape->c_prev.push_back(c);
      tape->gates.push_back(std::move(gates));
      tape->c.push_back(c_next);
    }
    c = std::move(c_next);
    h = std::move(h_next);
  }
  return h;
}

void Lstm::backward(const double* params, const Tape& tape, const MatrixXd& dh_final, double* grad) const {
  Eigen::Map<const MatrixXd> w(params, 4 * h_, in_ + h_);
  Eigen::Map<MatrixXd> gw(grad, 4 * h_, in_ + h_);
  Eigen::Map<Eigen::VectorXd> gb(grad + 4 * h_ * (in_ + h_), 4 * h_);
  MatrixXd dh = dh_final;
  MatrixXd dc = MatrixXd::Zero(h_, dh_final.cols());
  for (std::size_t k = tape.xh.size(); k-- > 0;) {
    const auto [lo, n] = active_block(tape.mask[k]);
    if (n == 0) {
      dh.setZero();
      dc.setZero();
      continue;
    }
    const auto m = tape.mask[k].segment(lo, n).array();
    const auto gates = tape.gates[k].middleCols(lo, n);
    const auto i = gates.topRows(h_).array();
    const auto f = gates.middleRows(h_, h_).array();
    const auto g = gates.middleRows(2 * h_, h_).array();
    const auto o = gates.bottomRows(h_).array();
    const ArrayXXd tc = fast_tanh(tape.c[k].middleCols(lo, n).array());
    ArrayXXd dhb = dh.middleCols(lo, n).array().rowwise() * m;
    ArrayXXd dcb = (dc.middleCols(lo, n).array() + dhb * o * (1.0 - tc.square())).rowwise() * m;
    MatrixXd dz(4 * h_, n);
    dz.topRows(h_) = (dcb * g * i * (1.0 - i)).matrix();
    dz.middleRows(h_, h_) = (dcb * tape.c_prev[k].middleCols(lo, n).array() * f * (1.0 - f)).matrix();
    dz.middleRows(2 * h_, h_) = (dcb * i * (1.0 - g.square())).matrix();
    dz.bottomRows(h_) = (dhb * tc * o * (1.0 - o)).matrix();
    gw.noalias() += dz * tape.xh[k].middleCols(lo, n).transpose();
    gb += dz.rowwise().sum();
    dh.setZero();
    dc.setZero();
    dh.middleCols(lo, n).noalias() = w.rightCols(h_).transpose() * dz;
    dc.middleCols(lo, n) = (dcb * f).matrix();
  }
}

}  // namespace hfl
