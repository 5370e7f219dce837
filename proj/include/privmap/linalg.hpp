// Copyright 2026 privmap contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "privmap/types.hpp"

namespace privmap {

// Relative singularity threshold for encoder matrices. A matrix A counts as
// invertible when |det A| > kDetEps * (max row norm)^n, which scales the
// check with the matrix instead of comparing det against an absolute zero.
inline constexpr double kDetEps = 1e-8;

inline double max_row_norm(const Eigen::MatrixXd& a) {
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

inline bool numerically_invertible(const Eigen::MatrixXd& a, double eps = kDetEps) {
  const double scale = max_row_norm(a);
  if (!(scale > 0.0) || !std::isfinite(scale)) return false;
  const double det = a.determinant();
  return std::isfinite(det) && std::abs(det) > eps * std::pow(scale, static_cast<double>(a.rows()));
}

// Unique symmetric positive-definite inverse square root, via spectral
// decomposition: M = V diag(l) V', result = V diag(1/sqrt(l)) V'.
inline Eigen::MatrixXd matrix_inv_sqrt(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw validation_error("matrix_inv_sqrt: matrix is not square");
  const double scale = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1e-300))
    throw validation_error("matrix_inv_sqrt: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw numeric_error("matrix_inv_sqrt: eigendecomposition failed");
  const Eigen::VectorXd evals = es.eigenvalues();
  const double lo = evals.minCoeff();
  const double hi = evals.maxCoeff();
  if (!(lo > 1e-12 * hi) || !(hi > 0.0))
    throw numeric_error("matrix_inv_sqrt: matrix is not positive definite "
                        "(smallest eigenvalue " + std::to_string(lo) + ")");
  return es.eigenvectors() * evals.cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace privmap
