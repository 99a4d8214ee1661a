// Copyright 2026 The SHGM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Factored low-rank projection of unfolded Hankel matrices.
//
// One sweep applies, in order,
//   U      <- mu (M + Lambda) V (I + mu V^T V)^-1
//   V      <- mu (M + Lambda)^T U (I + mu U^T U)^-1
//   Lambda <- M - U V^T + Lambda
//   X_LR   <- U V^T - Lambda
// with the multiplier carried from call to call. Inside the sampling loop M is
// re-derived from the data-consistent patch every step, which makes the carried
// multiplier act as a reflection about the low-rank set.

#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "shgm/error.hpp"
#include "shgm/hankel.hpp"
#include "shgm/rng.hpp"

namespace shgm {

struct AdmmConfig {
  int rank = 48;
  double mu = 1.0;
  int sweeps = 1;

  void Validate(Eigen::Index rows, Eigen::Index cols) const {
    detail::Require(rank >= 1 && rank <= std::min(rows, cols),
                    "ADMM rank " + std::to_string(rank) +
                        " must lie in [1, min(L, K)] for a " +
                        std::to_string(rows) + "x" + std::to_string(cols) +
                        " matrix");
    detail::Require(mu > 0.0 && std::isfinite(mu), "ADMM penalty must be > 0");
    detail::Require(sweeps >= 0, "ADMM sweep count must be >= 0");
  }
};

struct AdmmState {
  Eigen::MatrixXd U;   // L x r
  Eigen::MatrixXd V;   // K x r
  RowMatrix lambda;    // L x K
  AdmmConfig config;

  // Worst relative residual of the r x r solves in the last sweep, and how
  // many of them needed the 1e-12 ridge.
  double solve_residual = 0.0;
  int regularized_solves = 0;

  Eigen::Index rows() const { return U.rows(); }
  Eigen::Index cols() const { return V.rows(); }
  RowMatrix LowRank() const { return U * V.transpose(); }
};

// LMaFit-style start: orthonormal random U, least-squares V = M^T U, zero
// multiplier. No SVD.
inline AdmmState InitAdmmState(const RowMatrix& M, const AdmmConfig& cfg,
                               Rng& rng) {
  cfg.Validate(M.rows(), M.cols());
  detail::Require(M.allFinite(), "ADMM input contains non-finite values");
  Eigen::MatrixXd G(M.rows(), cfg.rank);
  for (Eigen::Index j = 0; j < G.cols(); ++j)
    for (Eigen::Index i = 0; i < G.rows(); ++i) G(i, j) = rng.Normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  AdmmState state;
  state.config = cfg;
  state.U = qr.householderQ() * Eigen::MatrixXd::Identity(M.rows(), cfg.rank);
  state.V = M.transpose() * state.U;
  state.lambda = RowMatrix::Zero(M.rows(), M.cols());
  return state;
}

namespace detail {

// Solves X (I + mu F^T F) = B for X, returning the relative residual.
inline Eigen::MatrixXd RidgeSolve(const Eigen::MatrixXd& B,
                                  const Eigen::MatrixXd& F, double mu,
                                  double& residual, int& regularized) {
  const Eigen::Index r = F.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(r, r);
  gram.noalias() += mu * (F.transpose() * F);
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    std::cerr << "shgm: singular " << r << "x" << r
              << " ADMM system, adding 1e-12 ridge\n";
    gram.diagonal().array() += 1e-12;
    llt.compute(gram);
    ++regularized;
  }
  Eigen::MatrixXd X = llt.solve(B.transpose()).transpose();
  const double scale = std::max(B.norm(), 1e-300);
  residual = std::max(residual, (X * gram - B).norm() / scale);
  return X;
}

}  // namespace detail

// Runs config.sweeps sweeps on M and returns X_LR. With sweeps == 0 the factors
// are untouched and X_LR = U V^T - Lambda of the incoming state.
inline RowMatrix AdmmSweep(AdmmState& state, const RowMatrix& M) {
  const AdmmConfig& cfg = state.config;
  detail::Require(M.rows() == state.rows() && M.cols() == state.cols() &&
                      state.lambda.rows() == M.rows() &&
                      state.lambda.cols() == M.cols(),
                  "ADMM state does not match the input matrix");
  state.solve_residual = 0.0;
  state.regularized_solves = 0;
  RowMatrix low_rank;
  for (int s = 0; s < cfg.sweeps; ++s) {
    const RowMatrix A = M + state.lambda;
    const Eigen::MatrixXd AV = cfg.mu * (A * state.V);
    state.U = detail::RidgeSolve(AV, state.V, cfg.mu, state.solve_residual,
                                 state.regularized_solves);
    const Eigen::MatrixXd AtU = cfg.mu * (A.transpose() * state.U);
    state.V = detail::RidgeSolve(AtU, state.U, cfg.mu, state.solve_residual,
                                 state.regularized_solves);
    low_rank.noalias() = state.U * state.V.transpose();
    state.lambda = A - low_rank;
  }
  if (cfg.sweeps == 0) low_rank = state.LowRank();
  RowMatrix x_lr = low_rank - state.lambda;
  if (!x_lr.allFinite())
    throw NumericalFailure("ADMM produced non-finite values");
  return x_lr;
}

// Unfolds the sampler state and runs the low-rank update on it.
inline HankelMatrix Project(const FoldedTensor& tensor,
                            const HankelLayout& layout, AdmmState& state) {
  const HankelMatrix M = Unfold(tensor, layout);
  return HankelMatrix{layout, AdmmSweep(state, M.data)};
}

}  // namespace shgm
