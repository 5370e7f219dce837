// Copyright 2026 privmap contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "privmap/rng.hpp"
#include "privmap/types.hpp"

namespace privmap {

enum class Gender { male, female };

struct BodyRecord {
  std::string subject;
  int age_months = 0;
  Gender gender = Gender::male;
  double bmi = 0.0;     // kg/m^2
  double weight = 0.0;  // kg
};

inline const std::vector<std::string>& weight_status_classes() {
  static const std::vector<std::string> names{"UW", "HW", "OW", "OB"};
  return names;
}

// 240 months: the oldest cohort member still classified with the youth
// percentile bands.
inline constexpr int kMaxCohortAgeMonths = 240;
inline constexpr std::size_t kMinGroupSize = 20;

struct LabelResult {
  LabeledDataset data;
  std::vector<std::string> warnings;
};

namespace detail {

// Percentile of each value within its group: (rank - 0.5) / n * 100, with
// tied values sharing their average rank.
inline std::vector<double> empirical_percentiles(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> pct(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mid_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    const double p = (mid_rank - 0.5) / static_cast<double>(n) * 100.0;
    for (std::size_t k = i; k <= j; ++k) pct[order[k]] = p;
    i = j + 1;
  }
  return pct;
}

inline int weight_status_from_percentile(double p) {
  if (p < 5.0) return 0;    // underweight
  if (p < 85.0) return 1;   // healthy weight
  if (p < 95.0) return 2;   // overweight
  return 3;                 // obese
}

}  // namespace detail

// Weight-status labeler: within each (age-in-years, gender) group, each
// record's BMI percentile decides its class per the standard bands
// (<5 UW, 5-85 HW, 85-95 OW, >=95 OB). Features are [bmi, weight].
// Records older than the cohort cutoff are dropped with a warning; small
// groups are labeled anyway but flagged.
inline LabelResult label_weight_status(const std::vector<BodyRecord>& records) {
  LabelResult result{LabeledDataset(2, weight_status_classes(), {"bmi", "weight"}), {}};

  std::vector<std::size_t> kept;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const BodyRecord& r = records[i];
    if (r.age_months < 0) throw validation_error("record " + std::to_string(i) + ": negative age");
    if (!(r.bmi > 0.0) || !std::isfinite(r.bmi))
      throw validation_error("record " + std::to_string(i) + ": bmi must be positive and finite");
    if (!(r.weight > 0.0) || !std::isfinite(r.weight))
      throw validation_error("record " + std::to_string(i) + ": weight must be positive and finite");
    if (r.age_months > kMaxCohortAgeMonths) {
      ++dropped;
      continue;
    }
    kept.push_back(i);
  }
  if (dropped > 0)
    result.warnings.push_back(std::to_string(dropped) + " record(s) above " +
                              std::to_string(kMaxCohortAgeMonths) + " months dropped");
  if (kept.empty()) throw validation_error("no records in the age cohort");

  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i : kept) {
    const BodyRecord& r = records[i];
    groups[{r.age_months / 12, r.gender == Gender::male ? 0 : 1}].push_back(i);
  }

  std::vector<int> label(records.size(), -1);
  for (const auto& [key, members] : groups) {
    if (members.size() < kMinGroupSize)
      result.warnings.push_back("group (age " + std::to_string(key.first) + "y, " +
                                (key.second == 0 ? "male" : "female") + "): only " +
                                std::to_string(members.size()) + " record(s)");
    std::vector<double> bmis;
    bmis.reserve(members.size());
    for (std::size_t i : members) bmis.push_back(records[i].bmi);
    const std::vector<double> pct = detail::empirical_percentiles(bmis);
    for (std::size_t k = 0; k < members.size(); ++k)
      label[members[k]] = detail::weight_status_from_percentile(pct[k]);
  }

  for (std::size_t i : kept) {
    Eigen::VectorXd x(2);
    x << records[i].bmi, records[i].weight;
    std::optional<std::string> subject;
    if (!records[i].subject.empty()) subject = records[i].subject;
    result.data.add(std::move(subject), label[i], std::move(x));
  }
  return result;
}

// Integer allocation of `total` units proportional to `quotas` (largest
// remainder; ties broken toward the lower index).
inline std::vector<std::size_t> largest_remainder(const std::vector<double>& quotas,
                                                  std::size_t total) {
  std::vector<std::size_t> alloc(quotas.size());
  std::vector<double> rem(quotas.size());
  double qsum = 0.0;
  for (double q : quotas) {
    if (q < 0.0 || !std::isfinite(q)) throw validation_error("quotas must be finite and >= 0");
    qsum += q;
  }
  if (!(qsum > 0.0)) throw validation_error("quotas must not all be zero");
  std::size_t used = 0;
  for (std::size_t i = 0; i < quotas.size(); ++i) {
    const double share = quotas[i] / qsum * static_cast<double>(total);
    alloc[i] = static_cast<std::size_t>(std::floor(share));
    rem[i] = share - std::floor(share);
    used += alloc[i];
  }
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; used < total; ++k, ++used) ++alloc[order[k % order.size()]];
  return alloc;
}

// Per-class generative model for synthetic cohorts. Gaussian classes may be
// correlated through a full covariance; gamma classes are per-dimension
// independent.
struct ClassGenSpec {
  enum class Dist { gaussian, gamma };
  std::string name;
  double proportion = 0.0;
  Dist dist = Dist::gaussian;
  Eigen::VectorXd mean;        // gaussian
  Eigen::MatrixXd covariance;  // gaussian
  Eigen::VectorXd shape;       // gamma, per dimension
  Eigen::VectorXd scale;       // gamma, per dimension
};

struct CohortSpec {
  int dimension = 0;
  std::vector<std::string> dim_names;
  std::vector<ClassGenSpec> classes;
};

inline LabeledDataset synth_cohort(const CohortSpec& spec, std::size_t n, std::uint64_t seed) {
  if (spec.dimension <= 0) throw validation_error("cohort dimension must be positive");
  if (spec.classes.empty()) throw validation_error("cohort needs at least one class");
  double psum = 0.0;
  std::vector<std::string> names;
  std::vector<double> props;
  for (const auto& c : spec.classes) {
    if (!(c.proportion >= 0.0)) throw validation_error("class proportions must be >= 0");
    psum += c.proportion;
    names.push_back(c.name);
    props.push_back(c.proportion);
  }
  if (std::abs(psum - 1.0) > 1e-6)
    throw validation_error("class proportions must sum to 1 (got " + std::to_string(psum) + ")");

  LabeledDataset out(spec.dimension, names, spec.dim_names);
  if (n == 0) return out;
  const std::vector<std::size_t> counts = largest_remainder(props, n);

  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const ClassGenSpec& g = spec.classes[c];
    Rng rng(seed, c);
    if (g.dist == ClassGenSpec::Dist::gaussian) {
      if (g.mean.size() != spec.dimension || g.covariance.rows() != spec.dimension ||
          g.covariance.cols() != spec.dimension)
        throw validation_error("class '" + g.name + "': gaussian parameters have wrong shape");
      Eigen::LLT<Eigen::MatrixXd> llt(g.covariance);
      if (llt.info() != Eigen::Success)
        throw validation_error("class '" + g.name + "': covariance is not positive definite");
      const Eigen::MatrixXd chol = llt.matrixL();
      for (std::size_t i = 0; i < counts[c]; ++i) {
        Eigen::VectorXd u(spec.dimension);
        for (int d = 0; d < spec.dimension; ++d) u[d] = rng.normal();
        out.add(std::nullopt, static_cast<int>(c), g.mean + chol * u);
      }
    } else {
      if (g.shape.size() != spec.dimension || g.scale.size() != spec.dimension)
        throw validation_error("class '" + g.name + "': gamma parameters have wrong shape");
      for (int d = 0; d < spec.dimension; ++d) {
        if (!(g.shape[d] > 0.0) || !(g.scale[d] > 0.0))
          throw validation_error("class '" + g.name + "': gamma parameters must be positive");
      }
      for (std::size_t i = 0; i < counts[c]; ++i) {
        Eigen::VectorXd x(spec.dimension);
        for (int d = 0; d < spec.dimension; ++d) x[d] = rng.gamma(g.shape[d], g.scale[d]);
        out.add(std::nullopt, static_cast<int>(c), std::move(x));
      }
    }
  }
  return out;
}

// BMI/weight-like 4-class cohort used as the built-in synthetic stand-in for
// the real survey data; proportions follow the survey's class imbalance.
inline CohortSpec default_weight_cohort() {
  CohortSpec spec;
  spec.dimension = 2;
  spec.dim_names = {"bmi", "weight"};
  const struct {
    const char* name;
    double prop, mu_bmi, mu_wt, sd_bmi, sd_wt, rho;
  } rows[] = {
      {"UW", 126.0 / 3355.0, 14.0, 36.0, 1.1, 7.5, 0.75},
      {"HW", 2147.0 / 3355.0, 18.5, 52.0, 2.4, 13.0, 0.80},
      {"OW", 570.0 / 3355.0, 26.0, 78.0, 2.6, 14.0, 0.80},
      {"OB", 512.0 / 3355.0, 33.0, 102.0, 4.0, 18.0, 0.75},
  };
  for (const auto& r : rows) {
    ClassGenSpec c;
    c.name = r.name;
    c.proportion = r.prop;
    c.dist = ClassGenSpec::Dist::gaussian;
    c.mean = Eigen::Vector2d(r.mu_bmi, r.mu_wt);
    c.covariance = Eigen::Matrix2d{{r.sd_bmi * r.sd_bmi, r.rho * r.sd_bmi * r.sd_wt},
                                   {r.rho * r.sd_bmi * r.sd_wt, r.sd_wt * r.sd_wt}};
    spec.classes.push_back(std::move(c));
  }
  return spec;
}

struct SplitResult {
  LabeledDataset train;
  LabeledDataset test;
};

// Stratified shuffle split, deterministic by seed. Per-class train sizes are
// allocated by largest remainder against round(fraction * N).
inline SplitResult split(const LabeledDataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw validation_error("train fraction must be in (0, 1)");
  const auto counts = data.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < 2)
      throw validation_error("class '" + data.class_names()[c] +
                             "' has fewer than 2 records; cannot split");
  }
  const std::size_t target =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(data.size())));
  std::vector<double> quotas(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c)
    quotas[c] = train_fraction * static_cast<double>(counts[c]);
  const std::vector<std::size_t> train_sizes = largest_remainder(quotas, target);

  // Shuffle record indices within each class, take the head as train.
  std::vector<bool> in_train(data.size(), false);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.record(i).class_id == static_cast<int>(c)) idx.push_back(i);
    }
    Rng rng(seed, c);
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rng.below(i)]);
    for (std::size_t k = 0; k < std::min(train_sizes[c], idx.size()); ++k) in_train[idx[k]] = true;
  }

  SplitResult result{LabeledDataset(data.dimension(), data.class_names(), data.dim_names()),
                     LabeledDataset(data.dimension(), data.class_names(), data.dim_names())};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Record& r = data.record(i);
    (in_train[i] ? result.train : result.test).add(r.subject, r.class_id, r.x);
  }
  return result;
}

}  // namespace privmap
