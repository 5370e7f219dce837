// Copyright 2026 privmap contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "privmap/histogram.hpp"
#include "privmap/linalg.hpp"
#include "privmap/mapping.hpp"
#include "privmap/types.hpp"

namespace privmap {

struct FitReport {
  MappingFamily family = MappingFamily::affine;
  std::vector<std::size_t> class_sample_counts;
  std::vector<std::string> warnings;
};

struct FitResult {
  PrivacyMapping mapping;
  FitReport report;
};

namespace detail {

inline std::vector<Eigen::MatrixXd> per_class_matrices(const LabeledDataset& data) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(data.num_classes());
  for (std::size_t c = 0; c < data.num_classes(); ++c) {
    Eigen::MatrixXd m = data.class_matrix(static_cast<int>(c));
    if (m.rows() == 0)
      throw validation_error("class '" + data.class_names()[c] + "' has no records");
    out.push_back(std::move(m));
  }
  return out;
}

inline void require_positive(const Eigen::MatrixXd& pts, const std::string& cls) {
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    for (Eigen::Index d = 0; d < pts.cols(); ++d) {
      if (!(pts(i, d) > 0.0))
        throw validation_error("class '" + cls + "' has a non-positive value in dimension " +
                               std::to_string(d));
    }
  }
}

}  // namespace detail

// Per-class sample mean and unbiased covariance; the encoder whitens with the
// symmetric inverse square root of the class covariance.
inline FitResult fit_normal(const LabeledDataset& data) {
  const auto classes = detail::per_class_matrices(data);
  const int n = data.dimension();
  NormalWhiteningParams params;
  FitReport report{MappingFamily::normal_whitening, {}, {}};
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const Eigen::MatrixXd& pts = classes[c];
    const Eigen::Index nc = pts.rows();
    report.class_sample_counts.push_back(static_cast<std::size_t>(nc));
    if (nc < n + 1)
      throw numeric_error("class '" + data.class_names()[c] + "' has " + std::to_string(nc) +
                          " records; covariance needs at least " + std::to_string(n + 1));
    const Eigen::VectorXd mu = pts.colwise().mean();
    const Eigen::MatrixXd centered = pts.rowwise() - mu.transpose();
    const Eigen::MatrixXd sigma =
        centered.transpose() * centered / static_cast<double>(nc - 1);
    Eigen::MatrixXd w;
    try {
      w = matrix_inv_sqrt(sigma);
    } catch (const numeric_error& e) {
      throw numeric_error("class '" + data.class_names()[c] +
                          "': singular sample covariance (" + e.what() + ")");
    }
    // near-singular but above threshold: leave a trace for the caller
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    if (es.eigenvalues().minCoeff() < 1e-6 * es.eigenvalues().maxCoeff())
      report.warnings.push_back("class '" + data.class_names()[c] +
                                "': covariance is near singular");
    params.mean.push_back(mu);
    params.whitener.push_back(std::move(w));
    params.covariance.push_back(sigma);
  }
  return {PrivacyMapping{n, data.class_names(), std::move(params)}, std::move(report)};
}

// rate = 1 / sample mean, per class per dimension (exponential MLE).
inline FitResult fit_exponential(const LabeledDataset& data) {
  const auto classes = detail::per_class_matrices(data);
  ExponentialScaleParams params;
  FitReport report{MappingFamily::exponential_scale, {}, {}};
  for (std::size_t c = 0; c < classes.size(); ++c) {
    detail::require_positive(classes[c], data.class_names()[c]);
    report.class_sample_counts.push_back(static_cast<std::size_t>(classes[c].rows()));
    params.rate.push_back(classes[c].colwise().mean().cwiseInverse());
  }
  return {PrivacyMapping{data.dimension(), data.class_names(), std::move(params)},
          std::move(report)};
}

namespace detail {

// Profile log-likelihood of a gamma shape k shared across classes within one
// dimension, with each class scale at its conditional MLE mean/k:
//   sum_c [ (k-1) S_c - n_c k - n_c lgamma(k) - n_c k log(mean_c / k) ]
// where S_c is the class sum of log x.
inline double gamma_profile_loglik(double k, const std::vector<double>& log_sums,
                                   const std::vector<double>& means,
                                   const std::vector<double>& counts) {
  double ll = 0.0;
  for (std::size_t c = 0; c < means.size(); ++c) {
    ll += (k - 1.0) * log_sums[c] - counts[c] * k - counts[c] * std::lgamma(k) -
          counts[c] * k * std::log(means[c] / k);
  }
  return ll;
}

// Golden-section maximization over log k on [log 1e-3, log 1e3].
inline double fit_gamma_shape(const std::vector<double>& log_sums,
                              const std::vector<double>& means,
                              const std::vector<double>& counts) {
  constexpr double kGolden = 0.6180339887498949;
  constexpr int kMaxIter = 100;
  double lo = std::log(1e-3), hi = std::log(1e3);
  double x1 = hi - kGolden * (hi - lo);
  double x2 = lo + kGolden * (hi - lo);
  double f1 = gamma_profile_loglik(std::exp(x1), log_sums, means, counts);
  double f2 = gamma_profile_loglik(std::exp(x2), log_sums, means, counts);
  int iter = 0;
  while (hi - lo > 1e-10) {
    if (++iter > kMaxIter)
      throw numeric_error("gamma shape estimation did not converge in " +
                          std::to_string(kMaxIter) + " iterations");
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = gamma_profile_loglik(std::exp(x2), log_sums, means, counts);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = gamma_profile_loglik(std::exp(x1), log_sums, means, counts);
    }
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace detail

// Shape k is common to all classes (per dimension); scales are per class.
// With k fixed the scale MLE is mean/k; otherwise k comes from the pooled
// profile likelihood over all classes jointly.
inline FitResult fit_gamma(const LabeledDataset& data,
                           std::optional<double> shared_shape = std::nullopt) {
  if (shared_shape && !(*shared_shape > 0.0))
    throw validation_error("shared gamma shape must be positive");
  const auto classes = detail::per_class_matrices(data);
  const int n = data.dimension();
  GammaScaleParams params;
  params.shape.resize(n);
  FitReport report{MappingFamily::gamma_scale, {}, {}};
  for (std::size_t c = 0; c < classes.size(); ++c) {
    detail::require_positive(classes[c], data.class_names()[c]);
    report.class_sample_counts.push_back(static_cast<std::size_t>(classes[c].rows()));
  }
  std::vector<Eigen::VectorXd> scales(classes.size(), Eigen::VectorXd(n));
  for (int d = 0; d < n; ++d) {
    std::vector<double> log_sums, means, counts;
    for (const auto& pts : classes) {
      log_sums.push_back(pts.col(d).array().log().sum());
      means.push_back(pts.col(d).mean());
      counts.push_back(static_cast<double>(pts.rows()));
    }
    const double k =
        shared_shape ? *shared_shape : detail::fit_gamma_shape(log_sums, means, counts);
    params.shape[d] = k;
    for (std::size_t c = 0; c < classes.size(); ++c) scales[c][d] = means[c] / k;
  }
  params.scale = std::move(scales);
  return {PrivacyMapping{n, data.class_names(), std::move(params)}, std::move(report)};
}

// lower/upper = per-class per-dimension sample min/max; encode maps the
// observed span onto [0, 1].
inline FitResult fit_uniform(const LabeledDataset& data) {
  const auto classes = detail::per_class_matrices(data);
  UniformRescaleParams params;
  FitReport report{MappingFamily::uniform_rescale, {}, {}};
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const Eigen::MatrixXd& pts = classes[c];
    report.class_sample_counts.push_back(static_cast<std::size_t>(pts.rows()));
    Eigen::VectorXd lo = pts.colwise().minCoeff();
    Eigen::VectorXd hi = pts.colwise().maxCoeff();
    for (Eigen::Index d = 0; d < lo.size(); ++d) {
      if (!(hi[d] > lo[d]))
        throw validation_error("class '" + data.class_names()[c] + "' is degenerate in dimension " +
                               std::to_string(d) + " (min equals max)");
    }
    params.lower.push_back(std::move(lo));
    params.upper.push_back(std::move(hi));
  }
  return {PrivacyMapping{data.dimension(), data.class_names(), std::move(params)},
          std::move(report)};
}

// Empirical test that the class-conditional distributions coincide after
// encoding: max over class pairs of the total-variation distance between
// normalized class histograms on a common grid. 0 = identical, 1 = disjoint.
inline double standardization_check(const LabeledDataset& encoded, const Grid& grid) {
  if (encoded.num_classes() < 2)
    throw validation_error("standardization check needs at least two classes");
  const HistogramModel model = build_histogram(encoded, grid);
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    if (model.class_total(c) == 0)
      throw validation_error("class '" + encoded.class_names()[c] + "' has no records");
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < model.num_classes(); ++a) {
    for (std::size_t b = a + 1; b < model.num_classes(); ++b) {
      double tv = 0.0;
      for (std::size_t bin = 0; bin < model.bin_count(); ++bin)
        tv += std::abs(model.conditional(a, bin) - model.conditional(b, bin));
      worst = std::max(worst, 0.5 * tv);
    }
  }
  return worst;
}

inline double standardization_check(const LabeledDataset& encoded,
                                    const std::vector<int>& bins_per_dim) {
  return standardization_check(
      encoded, Grid::fit_to_points(encoded.feature_matrix(), bins_per_dim));
}

// Encode every record with its own class's encoder.
inline LabeledDataset encode_dataset(const PrivacyMapping& mapping, const LabeledDataset& data) {
  if (mapping.dimension != data.dimension())
    throw validation_error("mapping dimension does not match dataset dimension");
  if (mapping.class_names != data.class_names())
    throw validation_error("mapping and dataset disagree on classes");
  LabeledDataset out(data.dimension(), data.class_names(), data.dim_names());
  for (const auto& r : data.records())
    out.add(r.subject, r.class_id, encode(mapping, r.class_id, r.x));
  return out;
}

inline LabeledDataset decode_dataset(const PrivacyMapping& mapping, const LabeledDataset& data) {
  if (mapping.dimension != data.dimension())
    throw validation_error("mapping dimension does not match dataset dimension");
  if (mapping.class_names != data.class_names())
    throw validation_error("mapping and dataset disagree on classes");
  LabeledDataset out(data.dimension(), data.class_names(), data.dim_names());
  for (const auto& r : data.records())
    out.add(r.subject, r.class_id, decode(mapping, r.class_id, r.x));
  return out;
}

}  // namespace privmap
