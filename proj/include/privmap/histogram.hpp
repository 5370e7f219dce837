// Copyright 2026 privmap contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "privmap/types.hpp"

namespace privmap {

inline constexpr std::size_t kDefaultBinCap = 1'000'000;

// Product grid of per-dimension bin edges. Bins are half-open [e_i, e_{i+1})
// except the last, which is closed at the top. Lookup is done by comparing
// against the stored edges (never by arithmetic on widths) so that
// co-transforming points and edges preserves bin assignment.
class Grid {
 public:
  static Grid from_edges(std::vector<std::vector<double>> edges,
                         std::size_t bin_cap = kDefaultBinCap) {
    Grid g;
    if (edges.empty()) throw validation_error("grid needs at least one dimension");
    std::size_t total = 1;
    for (std::size_t d = 0; d < edges.size(); ++d) {
      const auto& e = edges[d];
      if (e.size() < 2)
        throw validation_error("grid dimension " + std::to_string(d) + " needs >= 2 edges");
      for (std::size_t i = 0; i + 1 < e.size(); ++i) {
        if (!(e[i] < e[i + 1]))
          throw validation_error("grid edges must be strictly increasing (dimension " +
                                 std::to_string(d) + ")");
      }
      if (!std::isfinite(e.front()) || !std::isfinite(e.back()))
        throw validation_error("grid edges must be finite");
      const std::size_t bins = e.size() - 1;
      if (total > bin_cap / bins)
        throw validation_error("grid exceeds bin cap of " + std::to_string(bin_cap));
      total *= bins;
    }
    g.edges_ = std::move(edges);
    g.total_bins_ = total;
    return g;
  }

  // Equal-width bins per dimension between lo and hi.
  static Grid equal_width(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                          const std::vector<int>& bins_per_dim,
                          std::size_t bin_cap = kDefaultBinCap) {
    if (lo.size() != hi.size() || static_cast<std::size_t>(lo.size()) != bins_per_dim.size())
      throw validation_error("grid bounds and bin counts disagree on dimension");
    std::vector<std::vector<double>> edges(bins_per_dim.size());
    for (std::size_t d = 0; d < bins_per_dim.size(); ++d) {
      const int b = bins_per_dim[d];
      if (b < 1) throw validation_error("bin count must be >= 1");
      double a = lo[static_cast<Eigen::Index>(d)];
      double z = hi[static_cast<Eigen::Index>(d)];
      if (!(a < z)) {  // degenerate range: widen so the single value is binnable
        a -= 0.5;
        z += 0.5;
      }
      edges[d].resize(static_cast<std::size_t>(b) + 1);
      for (int i = 0; i <= b; ++i)
        edges[d][static_cast<std::size_t>(i)] = a + (z - a) * static_cast<double>(i) / b;
      edges[d][static_cast<std::size_t>(b)] = z;  // exact top edge
    }
    return from_edges(std::move(edges), bin_cap);
  }

  // min/max of the data per dimension, equal-width bins.
  static Grid fit_to_points(const Eigen::MatrixXd& points, const std::vector<int>& bins_per_dim,
                            std::size_t bin_cap = kDefaultBinCap) {
    if (points.rows() == 0) throw validation_error("cannot fit a grid to an empty point set");
    return equal_width(points.colwise().minCoeff(), points.colwise().maxCoeff(), bins_per_dim,
                       bin_cap);
  }

  int dimension() const { return static_cast<int>(edges_.size()); }
  std::size_t bin_count() const { return total_bins_; }
  std::size_t bins_in_dim(std::size_t d) const { return edges_[d].size() - 1; }
  const std::vector<double>& edges(std::size_t d) const { return edges_[d]; }

  struct Location {
    std::size_t flat = 0;
    bool out_of_range = false;
  };

  // Flat row-major bin index; out-of-range coordinates are clamped into the
  // nearest edge bin and flagged.
  Location locate(const Eigen::VectorXd& x) const {
    Location loc;
    std::size_t flat = 0;
    for (std::size_t d = 0; d < edges_.size(); ++d) {
      const auto& e = edges_[d];
      const double v = x[static_cast<Eigen::Index>(d)];
      const std::size_t bins = e.size() - 1;
      std::size_t idx;
      if (v < e.front()) {
        idx = 0;
        loc.out_of_range = true;
      } else if (v > e.back()) {
        idx = bins - 1;
        loc.out_of_range = true;
      } else if (v == e.back()) {
        idx = bins - 1;  // closed last bin
      } else {
        idx = static_cast<std::size_t>(
                  std::upper_bound(e.begin(), e.end(), v) - e.begin()) - 1;
      }
      flat = flat * bins + idx;
    }
    loc.flat = flat;
    return loc;
  }

  bool operator==(const Grid& other) const { return edges_ == other.edges_; }

 private:
  std::vector<std::vector<double>> edges_;
  std::size_t total_bins_ = 0;
};

enum class OutOfRangePolicy { clamp, error };

// Binned class-conditional densities p(z|c) plus the class prior p(c).
// Counts are raw; optional Laplace smoothing is applied at normalization.
class HistogramModel {
 public:
  HistogramModel(Grid grid, std::vector<std::vector<std::uint64_t>> counts,
                 double laplace_alpha = 0.0, OutOfRangePolicy policy = OutOfRangePolicy::clamp,
                 std::uint64_t clamped = 0)
      : grid_(std::move(grid)),
        counts_(std::move(counts)),
        laplace_alpha_(laplace_alpha),
        policy_(policy),
        clamped_(clamped) {
    if (counts_.empty()) throw validation_error("histogram model needs at least one class");
    if (laplace_alpha_ < 0.0) throw validation_error("laplace alpha must be >= 0");
    class_totals_.resize(counts_.size());
    std::uint64_t grand = 0;
    for (std::size_t c = 0; c < counts_.size(); ++c) {
      if (counts_[c].size() != grid_.bin_count())
        throw validation_error("count array does not match grid bin count");
      std::uint64_t t = 0;
      for (auto v : counts_[c]) t += v;
      class_totals_[c] = t;
      grand += t;
    }
    if (grand == 0) throw validation_error("histogram model has no mass");
    prior_.resize(counts_.size());
    for (std::size_t c = 0; c < counts_.size(); ++c)
      prior_[c] = static_cast<double>(class_totals_[c]) / static_cast<double>(grand);
  }

  const Grid& grid() const { return grid_; }
  std::size_t num_classes() const { return counts_.size(); }
  std::size_t bin_count() const { return grid_.bin_count(); }
  const std::vector<double>& prior() const { return prior_; }
  const std::vector<std::vector<std::uint64_t>>& counts() const { return counts_; }
  std::uint64_t class_total(std::size_t c) const { return class_totals_[c]; }
  std::uint64_t clamped_points() const { return clamped_; }
  OutOfRangePolicy policy() const { return policy_; }
  double laplace_alpha() const { return laplace_alpha_; }

  // p(z = bin | c), with Laplace smoothing when configured.
  double conditional(std::size_t c, std::size_t bin) const {
    const double n = static_cast<double>(class_totals_[c]);
    const double b = static_cast<double>(grid_.bin_count());
    return (static_cast<double>(counts_[c][bin]) + laplace_alpha_) / (n + laplace_alpha_ * b);
  }

  // marginal p(z = bin) under the prior
  double marginal(std::size_t bin) const {
    double m = 0.0;
    for (std::size_t c = 0; c < counts_.size(); ++c) m += prior_[c] * conditional(c, bin);
    return m;
  }

 private:
  Grid grid_;
  std::vector<std::vector<std::uint64_t>> counts_;
  std::vector<std::uint64_t> class_totals_;
  std::vector<double> prior_;
  double laplace_alpha_;
  OutOfRangePolicy policy_;
  std::uint64_t clamped_;
};

inline HistogramModel build_histogram(const LabeledDataset& data, const Grid& grid,
                                      OutOfRangePolicy policy = OutOfRangePolicy::clamp,
                                      double laplace_alpha = 0.0) {
  if (grid.dimension() != data.dimension())
    throw validation_error("grid dimension does not match dataset dimension");
  std::vector<std::vector<std::uint64_t>> counts(
      data.num_classes(), std::vector<std::uint64_t>(grid.bin_count(), 0));
  std::uint64_t clamped = 0;
  for (const auto& r : data.records()) {
    const Grid::Location loc = grid.locate(r.x);
    if (loc.out_of_range) {
      if (policy == OutOfRangePolicy::error)
        throw validation_error("point outside the grid range");
      ++clamped;
    }
    ++counts[static_cast<std::size_t>(r.class_id)][loc.flat];
  }
  return HistogramModel(grid, std::move(counts), laplace_alpha, policy, clamped);
}

// I(Z,C) in bits over the binned model:
//   sum_c p(c) sum_b p(b|c) log2( p(b|c) / p(b) ),  0 log(.) = 0.
inline double mutual_information(const HistogramModel& model) {
  const std::size_t classes = model.num_classes();
  const std::size_t bins = model.bin_count();
  for (std::size_t c = 0; c < classes; ++c) {
    if (model.class_total(c) == 0)
      throw validation_error("class " + std::to_string(c) + " has no mass");
  }
  double mi = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double pz = model.marginal(b);
    if (pz <= 0.0) continue;
    for (std::size_t c = 0; c < classes; ++c) {
      const double pzc = model.conditional(c, b);
      if (pzc <= 0.0) continue;
      mi += model.prior()[c] * pzc * std::log2(pzc / pz);
    }
  }
  return mi;
}

// Adversary posterior p(c | z): conditional likelihood at z's bin times the
// prior, normalized. When every class puts zero mass on the bin, the prior
// is returned (observing z there carries no usable evidence).
inline Eigen::VectorXd posterior(const HistogramModel& model, const Eigen::VectorXd& z) {
  if (z.size() != model.grid().dimension())
    throw validation_error("point dimension does not match model grid");
  if (!all_finite(z)) throw validation_error("point has a non-finite coordinate");
  const std::size_t bin = model.grid().locate(z).flat;
  Eigen::VectorXd post(static_cast<Eigen::Index>(model.num_classes()));
  double total = 0.0;
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    const double v = model.conditional(c, bin) * model.prior()[c];
    post[static_cast<Eigen::Index>(c)] = v;
    total += v;
  }
  if (total <= 0.0) {
    for (std::size_t c = 0; c < model.num_classes(); ++c)
      post[static_cast<Eigen::Index>(c)] = model.prior()[c];
    return post;
  }
  return post / total;
}

// Kullback-Leibler divergence in bits; requires q to dominate p.
inline double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw validation_error("kl_divergence: length mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw validation_error("kl_divergence: negative probability");
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0)
      throw validation_error("kl_divergence: absolute continuity violated at index " +
                             std::to_string(i));
    kl += p[i] * std::log2(p[i] / q[i]);
  }
  return kl;
}

// E over the z-marginal of KL(posterior || prior). Algebraically identical
// to mutual_information; both are kept as independent routes and must agree
// to machine precision.
inline double expected_posterior_kl(const HistogramModel& model) {
  const std::size_t classes = model.num_classes();
  for (std::size_t c = 0; c < classes; ++c) {
    if (model.class_total(c) == 0)
      throw validation_error("class " + std::to_string(c) + " has no mass");
  }
  Eigen::VectorXd prior(static_cast<Eigen::Index>(classes));
  for (std::size_t c = 0; c < classes; ++c) prior[static_cast<Eigen::Index>(c)] = model.prior()[c];
  double total = 0.0;
  Eigen::VectorXd post(static_cast<Eigen::Index>(classes));
  for (std::size_t b = 0; b < model.bin_count(); ++b) {
    const double pz = model.marginal(b);
    if (pz <= 0.0) continue;
    for (std::size_t c = 0; c < classes; ++c)
      post[static_cast<Eigen::Index>(c)] = model.conditional(c, b) * model.prior()[c] / pz;
    total += pz * kl_divergence(post, prior);
  }
  return total;
}

}  // namespace privmap
