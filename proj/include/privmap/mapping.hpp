// Copyright 2026 privmap contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "privmap/linalg.hpp"
#include "privmap/types.hpp"

namespace privmap {

// A privacy mapping is a per-class injective encoder over the information
// space, with an exact left inverse for the recipient who knows the class.
// Five parameter families are supported; each stores one parameter set per
// class, indexed by class id.

enum class MappingFamily { normal_whitening, exponential_scale, gamma_scale, uniform_rescale, affine };

inline const char* family_name(MappingFamily f) {
  switch (f) {
    case MappingFamily::normal_whitening: return "normal";
    case MappingFamily::exponential_scale: return "exponential";
    case MappingFamily::gamma_scale: return "gamma";
    case MappingFamily::uniform_rescale: return "uniform";
    case MappingFamily::affine: return "affine";
  }
  return "?";
}

// z = W_c (x - mu_c); W_c is the symmetric inverse square root of Sigma_c.
// Sigma_c is kept for audit.
struct NormalWhiteningParams {
  std::vector<Eigen::VectorXd> mean;
  std::vector<Eigen::MatrixXd> whitener;
  std::vector<Eigen::MatrixXd> covariance;
};

// z = rate_c .* x, per dimension; domain x >= 0.
struct ExponentialScaleParams {
  std::vector<Eigen::VectorXd> rate;
};

// z = x ./ scale_c, per dimension; the shape is shared across classes.
struct GammaScaleParams {
  Eigen::VectorXd shape;
  std::vector<Eigen::VectorXd> scale;
};

// z = (x - lower_c) ./ (upper_c - lower_c); domain lower_c <= x <= upper_c.
struct UniformRescaleParams {
  std::vector<Eigen::VectorXd> lower;
  std::vector<Eigen::VectorXd> upper;
};

// z = A_c (x - b_c), det(A_c) != 0.
struct AffineParams {
  std::vector<Eigen::MatrixXd> transform;
  std::vector<Eigen::VectorXd> offset;
};

struct PrivacyMapping {
  int dimension = 0;
  std::vector<std::string> class_names;
  std::variant<NormalWhiteningParams, ExponentialScaleParams, GammaScaleParams,
               UniformRescaleParams, AffineParams>
      params;

  std::size_t num_classes() const { return class_names.size(); }

  MappingFamily family() const {
    switch (params.index()) {
      case 0: return MappingFamily::normal_whitening;
      case 1: return MappingFamily::exponential_scale;
      case 2: return MappingFamily::gamma_scale;
      case 3: return MappingFamily::uniform_rescale;
      default: return MappingFamily::affine;
    }
  }

  // Identity affine mapping: [R(c)](x) = x for every class.
  static PrivacyMapping identity(int dimension, std::vector<std::string> class_names) {
    AffineParams p;
    p.transform.assign(class_names.size(), Eigen::MatrixXd::Identity(dimension, dimension));
    p.offset.assign(class_names.size(), Eigen::VectorXd::Zero(dimension));
    return PrivacyMapping{dimension, std::move(class_names), std::move(p)};
  }
};

struct MappingViolation {
  int class_id = 0;
  std::string message;
};

namespace detail {

inline void check_class(const PrivacyMapping& m, int c) {
  if (c < 0 || c >= static_cast<int>(m.num_classes()))
    throw validation_error("class id " + std::to_string(c) + " out of range for mapping");
}

inline void check_point(const PrivacyMapping& m, const Eigen::VectorXd& x, const char* what) {
  if (x.size() != m.dimension)
    throw validation_error(std::string(what) + " has length " + std::to_string(x.size()) +
                           ", mapping dimension is " + std::to_string(m.dimension));
  if (!all_finite(x))
    throw validation_error(std::string(what) + " has a non-finite coordinate");
}

inline void require_nonnegative(const Eigen::VectorXd& x, const std::string& cls) {
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    if (x[d] < 0.0)
      throw validation_error("point out of domain for class '" + cls + "': coordinate " +
                             std::to_string(d) + " = " + std::to_string(x[d]) + " < 0");
  }
}

inline void require_positive_params(const Eigen::VectorXd& v, const std::string& cls,
                                    const char* what) {
  for (Eigen::Index d = 0; d < v.size(); ++d) {
    if (!(v[d] > 0.0) || !std::isfinite(v[d]))
      throw validation_error("class '" + cls + "': " + what + " must be positive in dimension " +
                             std::to_string(d));
  }
}

}  // namespace detail

// Sending transaction: z = [R(c)](x). Domain violations are hard errors;
// clamping would break injectivity and with it exact decodability.
inline Eigen::VectorXd encode(const PrivacyMapping& m, int class_id, const Eigen::VectorXd& x) {
  detail::check_class(m, class_id);
  detail::check_point(m, x, "point");
  const std::size_t c = static_cast<std::size_t>(class_id);
  const std::string& cls = m.class_names[c];

  if (const auto* p = std::get_if<NormalWhiteningParams>(&m.params)) {
    return p->whitener[c] * (x - p->mean[c]);
  }
  if (const auto* p = std::get_if<ExponentialScaleParams>(&m.params)) {
    detail::require_positive_params(p->rate[c], cls, "rate");
    detail::require_nonnegative(x, cls);
    return p->rate[c].cwiseProduct(x);
  }
  if (const auto* p = std::get_if<GammaScaleParams>(&m.params)) {
    detail::require_positive_params(p->scale[c], cls, "scale");
    detail::require_nonnegative(x, cls);
    return x.cwiseQuotient(p->scale[c]);
  }
  if (const auto* p = std::get_if<UniformRescaleParams>(&m.params)) {
    detail::require_positive_params(p->upper[c] - p->lower[c], cls, "span");
    for (Eigen::Index d = 0; d < x.size(); ++d) {
      if (x[d] < p->lower[c][d] || x[d] > p->upper[c][d])
        throw validation_error("point out of domain for class '" + cls + "': coordinate " +
                               std::to_string(d) + " = " + std::to_string(x[d]) +
                               " outside [" + std::to_string(p->lower[c][d]) + ", " +
                               std::to_string(p->upper[c][d]) + "]");
    }
    return (x - p->lower[c]).cwiseQuotient(p->upper[c] - p->lower[c]);
  }
  const auto& p = std::get<AffineParams>(m.params);
  return p.transform[c] * (x - p.offset[c]);
}

// Receiving transaction: x = [Rl(c)](z), the exact left inverse of encode.
inline Eigen::VectorXd decode(const PrivacyMapping& m, int class_id, const Eigen::VectorXd& z) {
  detail::check_class(m, class_id);
  detail::check_point(m, z, "encoded point");
  const std::size_t c = static_cast<std::size_t>(class_id);

  if (const auto* p = std::get_if<NormalWhiteningParams>(&m.params)) {
    if (!numerically_invertible(p->whitener[c]))
      throw numeric_error("whitener for class '" + m.class_names[c] + "' is singular");
    return p->whitener[c].partialPivLu().solve(z) + p->mean[c];
  }
  if (const auto* p = std::get_if<ExponentialScaleParams>(&m.params)) {
    detail::require_positive_params(p->rate[c], m.class_names[c], "rate");
    return z.cwiseQuotient(p->rate[c]);
  }
  if (const auto* p = std::get_if<GammaScaleParams>(&m.params)) {
    detail::require_positive_params(p->scale[c], m.class_names[c], "scale");
    return z.cwiseProduct(p->scale[c]);
  }
  if (const auto* p = std::get_if<UniformRescaleParams>(&m.params)) {
    detail::require_positive_params(p->upper[c] - p->lower[c], m.class_names[c], "span");
    return p->lower[c] + z.cwiseProduct(p->upper[c] - p->lower[c]);
  }
  const auto& p = std::get<AffineParams>(m.params);
  if (!numerically_invertible(p.transform[c]))
    throw numeric_error("transform for class '" + m.class_names[c] + "' is singular");
  return p.transform[c].partialPivLu().solve(z) + p.offset[c];
}

// Diagnostic check of the per-class injectivity invariants. Returns an empty
// list iff the mapping is usable; violations are reported, never thrown.
inline std::vector<MappingViolation> validate_mapping(const PrivacyMapping& m) {
  std::vector<MappingViolation> out;
  const auto bad = [&](std::size_t c, std::string msg) {
    out.push_back({static_cast<int>(c), "class '" + m.class_names[c] + "': " + std::move(msg)});
  };
  const auto expect_size = [&](std::size_t c, const Eigen::VectorXd& v, const char* name) {
    if (v.size() != m.dimension) {
      bad(c, std::string(name) + " has wrong length");
      return false;
    }
    return true;
  };

  if (m.dimension <= 0) {
    out.push_back({0, "mapping dimension must be positive"});
    return out;
  }
  const auto class_count_ok = [&](std::size_t have) {
    if (have != m.num_classes()) {
      out.push_back({0, "parameter sets for " + std::to_string(have) + " classes, mapping declares " +
                            std::to_string(m.num_classes())});
      return false;
    }
    return true;
  };

  if (const auto* p = std::get_if<NormalWhiteningParams>(&m.params)) {
    if (!class_count_ok(p->mean.size()) || !class_count_ok(p->whitener.size())) return out;
    for (std::size_t c = 0; c < m.num_classes(); ++c) {
      expect_size(c, p->mean[c], "mean");
      if (p->whitener[c].rows() != m.dimension || p->whitener[c].cols() != m.dimension)
        bad(c, "whitener has wrong shape");
      else if (!numerically_invertible(p->whitener[c]))
        bad(c, "whitener is numerically singular");
    }
  } else if (const auto* p = std::get_if<ExponentialScaleParams>(&m.params)) {
    if (!class_count_ok(p->rate.size())) return out;
    for (std::size_t c = 0; c < m.num_classes(); ++c) {
      if (!expect_size(c, p->rate[c], "rate")) continue;
      for (Eigen::Index d = 0; d < p->rate[c].size(); ++d) {
        if (!(p->rate[c][d] > 0.0)) bad(c, "rate must be positive in dimension " + std::to_string(d));
      }
    }
  } else if (const auto* p = std::get_if<GammaScaleParams>(&m.params)) {
    for (Eigen::Index d = 0; d < p->shape.size(); ++d) {
      if (!(p->shape[d] > 0.0))
        out.push_back({0, "shared shape must be positive in dimension " + std::to_string(d)});
    }
    if (!class_count_ok(p->scale.size())) return out;
    for (std::size_t c = 0; c < m.num_classes(); ++c) {
      if (!expect_size(c, p->scale[c], "scale")) continue;
      for (Eigen::Index d = 0; d < p->scale[c].size(); ++d) {
        if (!(p->scale[c][d] > 0.0)) bad(c, "scale must be positive in dimension " + std::to_string(d));
      }
    }
  } else if (const auto* p = std::get_if<UniformRescaleParams>(&m.params)) {
    if (!class_count_ok(p->lower.size()) || !class_count_ok(p->upper.size())) return out;
    for (std::size_t c = 0; c < m.num_classes(); ++c) {
      if (!expect_size(c, p->lower[c], "lower") || !expect_size(c, p->upper[c], "upper")) continue;
      for (Eigen::Index d = 0; d < p->lower[c].size(); ++d) {
        if (!(p->upper[c][d] - p->lower[c][d] > 0.0))
          bad(c, "upper must exceed lower in dimension " + std::to_string(d));
      }
    }
  } else {
    const auto& ap = std::get<AffineParams>(m.params);
    if (!class_count_ok(ap.transform.size()) || !class_count_ok(ap.offset.size())) return out;
    for (std::size_t c = 0; c < m.num_classes(); ++c) {
      if (ap.transform[c].rows() != m.dimension || ap.transform[c].cols() != m.dimension)
        bad(c, "transform has wrong shape");
      else if (!numerically_invertible(ap.transform[c]))
        bad(c, "singular transform");
      expect_size(c, ap.offset[c], "offset");
    }
  }
  return out;
}

}  // namespace privmap
