// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hfl/random.hpp"

namespace hfl {

/// Single-layer LSTM evaluated on a batch of left-padded sequences.
///
/// Parameters live in caller-owned flat storage laid out as the gate matrix
/// W = [W_x | W_h] (4h x (in + h), column-major, gates stacked i, f, g, o)
/// followed by the bias (4h). Column j of the batch is active at step k when
/// mask[k](j) is 1; active steps must form a suffix of the sequence so that
/// every sequence starts from the zero state. Work at each step is limited to
/// the column range spanning the active columns, so batches ordered by length
/// skip the padding.
class Lstm {
 public:
  Lstm(Eigen::Index inputs, Eigen::Index hidden);

  Eigen::Index inputs() const { return in_; }
  Eigen::Index hidden() const { return h_; }
  Eigen::Index parameter_count() const { return 4 * h_ * (in_ + h_) + 4 * h_; }

  /// Uniform(-1/sqrt(h), 1/sqrt(h)) weights, zero bias except forget gate = 1.
  void init(double* params, Rng& rng) const;

  struct Tape {
    std::vector<Eigen::MatrixXd> xh;      // [x; h_prev] per step
    std::vector<Eigen::MatrixXd> c_prev;
    std::vector<Eigen::MatrixXd> gates;   // activated i, f, g, o
    std::vector<Eigen::MatrixXd> c;
    std::vector<Eigen::RowVectorXd> mask;
  };

  /// Returns the final hidden state (h x batch). `tape` may be null.
  Eigen::MatrixXd forward(const double* params, const std::vector<Eigen::MatrixXd>& xs,
                          const std::vector<Eigen::RowVectorXd>& mask, Tape* tape) const;

  /// Accumulates dLoss/dparams into `grad` given dLoss/dh_final.
  void backward(const double* params, const Tape& tape, const Eigen::MatrixXd& dh_final, double* grad) const;

 private:
  Eigen::Index in_;
  Eigen::Index h_;
};

/// Logistic and hyperbolic tangent through the vectorized exponential.
Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z);
Eigen::ArrayXXd fast_tanh(const Eigen::ArrayXXd& z);

}  // namespace hfl
