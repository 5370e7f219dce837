// Copyright 2026 privmap contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "privmap/histogram.hpp"
#include "privmap/rng.hpp"
#include "privmap/types.hpp"

namespace testhelp {

// Brute-force mutual information oracle: enumerate the joint p(c, bin) and
// sum p log2(p / (p_c p_b)). Independent of the HistogramModel arithmetic.
inline double mi_by_joint_enumeration(const privmap::HistogramModel& model) {
  const std::size_t classes = model.num_classes();
  const std::size_t bins = model.bin_count();
  std::vector<std::vector<double>> joint(classes, std::vector<double>(bins));
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t b = 0; b < bins; ++b)
      joint[c][b] = model.prior()[c] * model.conditional(c, b);
  }
  std::vector<double> pc(classes, 0.0), pb(bins, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t b = 0; b < bins; ++b) {
      pc[c] += joint[c][b];
      pb[b] += joint[c][b];
    }
  }
  double mi = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t b = 0; b < bins; ++b) {
      if (joint[c][b] > 0.0) mi += joint[c][b] * std::log2(joint[c][b] / (pc[c] * pb[b]));
    }
  }
  return mi;
}

// 1-D model over `bins` unit bins with the given per-class counts.
inline privmap::HistogramModel counts_model(std::vector<std::vector<std::uint64_t>> counts) {
  const std::size_t bins = counts.front().size();
  std::vector<double> edges;
  for (std::size_t i = 0; i <= bins; ++i) edges.push_back(static_cast<double>(i));
  return privmap::HistogramModel(privmap::Grid::from_edges({edges}), std::move(counts));
}

inline privmap::LabeledDataset one_dim_dataset(const std::vector<std::vector<double>>& per_class,
                                               std::vector<std::string> names = {}) {
  if (names.empty()) {
    for (std::size_t c = 0; c < per_class.size(); ++c) names.push_back("c" + std::to_string(c));
  }
  privmap::LabeledDataset data(1, names);
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    for (double v : per_class[c]) {
      Eigen::VectorXd x(1);
      x << v;
      data.add(std::nullopt, static_cast<int>(c), x);
    }
  }
  return data;
}

// Fresh temp directory for file-based tests.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    base_ = std::filesystem::temp_directory_path() /
            ("privmap_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(base_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(base_, ec);
  }
  std::string path(const std::string& name) const { return (base_ / name).string(); }

 private:
  std::filesystem::path base_;
};

}  // namespace testhelp
