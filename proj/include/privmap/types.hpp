// Copyright 2026 privmap contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace privmap {

// Raised for malformed inputs: bad files, bad configs, out-of-domain data.
// The CLI maps this to exit code 2.
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a computation fails numerically (singular covariance,
// non-convergence, ...). The CLI maps this to exit code 3.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Point = Eigen::VectorXd;

struct ClassLabel {
  int id = 0;
  std::string name;
};

inline bool all_finite(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
  }
  return true;
}

struct Record {
  std::optional<std::string> subject;
  int class_id = 0;
  Point x;
};

// Points with class labels (and optional subject ids). Immutable in spirit:
// records are only appended, each append is validated, and every consumer
// treats the dataset as read-only.
class LabeledDataset {
 public:
  LabeledDataset(int dimension, std::vector<std::string> class_names,
                 std::vector<std::string> dim_names = {})
      : dimension_(dimension),
        class_names_(std::move(class_names)),
        dim_names_(std::move(dim_names)) {
    if (dimension_ <= 0) throw validation_error("dataset dimension must be positive");
    if (class_names_.empty()) throw validation_error("dataset needs at least one class");
    for (std::size_t i = 0; i < class_names_.size(); ++i) {
      for (std::size_t j = i + 1; j < class_names_.size(); ++j) {
        if (class_names_[i] == class_names_[j])
          throw validation_error("duplicate class name '" + class_names_[i] + "'");
      }
    }
    if (dim_names_.empty()) {
      for (int d = 0; d < dimension_; ++d) dim_names_.push_back("x" + std::to_string(d));
    }
    if (static_cast<int>(dim_names_.size()) != dimension_)
      throw validation_error("dimension name count does not match dimension");
  }

  void add(std::optional<std::string> subject, int class_id, Point x) {
    if (x.size() != dimension_)
      throw validation_error("point has length " + std::to_string(x.size()) +
                             ", dataset dimension is " + std::to_string(dimension_));
    if (!all_finite(x)) throw validation_error("point has a non-finite coordinate");
    if (class_id < 0 || class_id >= static_cast<int>(class_names_.size()))
      throw validation_error("class id " + std::to_string(class_id) + " out of range");
    if (subject && subject->empty())
      throw validation_error("subject id present but empty");
    records_.push_back(Record{std::move(subject), class_id, std::move(x)});
  }

  int dimension() const { return dimension_; }
  std::size_t size() const { return records_.size(); }
  std::size_t num_classes() const { return class_names_.size(); }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::vector<std::string>& dim_names() const { return dim_names_; }
  const std::vector<Record>& records() const { return records_; }
  const Record& record(std::size_t i) const { return records_[i]; }

  int class_id(const std::string& name) const {
    for (std::size_t i = 0; i < class_names_.size(); ++i) {
      if (class_names_[i] == name) return static_cast<int>(i);
    }
    throw validation_error("unknown class name '" + name + "'");
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> n(class_names_.size(), 0);
    for (const auto& r : records_) ++n[static_cast<std::size_t>(r.class_id)];
    return n;
  }

  // Rows are the points of class c, in record order.
  Eigen::MatrixXd class_matrix(int c) const {
    std::size_t n = 0;
    for (const auto& r : records_) n += (r.class_id == c);
    Eigen::MatrixXd m(n, dimension_);
    Eigen::Index row = 0;
    for (const auto& r : records_) {
      if (r.class_id == c) m.row(row++) = r.x.transpose();
    }
    return m;
  }

  Eigen::MatrixXd feature_matrix() const {
    Eigen::MatrixXd m(records_.size(), dimension_);
    for (std::size_t i = 0; i < records_.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = records_[i].x.transpose();
    return m;
  }

 private:
  int dimension_;
  std::vector<std::string> class_names_;
  std::vector<std::string> dim_names_;
  std::vector<Record> records_;
};

}  // namespace privmap
