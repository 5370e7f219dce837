// Copyright 2026 privmap contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <charconv>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "privmap/adversary.hpp"
#include "privmap/dataprep.hpp"
#include "privmap/learner.hpp"
#include "privmap/mapping.hpp"
#include "privmap/types.hpp"

namespace privmap {

inline constexpr int kMappingFormatVersion = 1;
inline constexpr int kConfigFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

namespace io_detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& cell, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw validation_error("row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                           ": '" + cell + "' is not a number");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace io_detail

struct CsvSchema {
  bool require_class = true;
  // When set, class ids follow this order and unknown names are errors;
  // otherwise classes are numbered by first appearance.
  std::optional<std::vector<std::string>> class_order;
};

// CSV layout: header row; optional `subject_id` column, optional `class`
// column, then numeric feature columns ('.' decimal separator).
inline LabeledDataset parse_dataset_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in = io_detail::open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw validation_error("'" + path + "' is empty");
  const std::vector<std::string> header = io_detail::split_csv_line(line);

  std::size_t at = 0;
  const bool has_subject = at < header.size() && header[at] == "subject_id";
  if (has_subject) ++at;
  const bool has_class = at < header.size() && header[at] == "class";
  if (has_class) ++at;
  if (schema.require_class && !has_class)
    throw validation_error("'" + path + "': required column 'class' is missing");
  if (at >= header.size())
    throw validation_error("'" + path + "': no feature columns found");
  const std::vector<std::string> dim_names(header.begin() + static_cast<std::ptrdiff_t>(at),
                                           header.end());
  const std::size_t n_features = dim_names.size();

  struct Row {
    std::optional<std::string> subject;
    std::string cls;
    Eigen::VectorXd x;
  };
  std::vector<Row> rows;
  std::vector<std::string> class_names;
  if (schema.class_order) class_names = *schema.class_order;

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = io_detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw validation_error("row " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " cells, found " +
                             std::to_string(cells.size()));
    Row row;
    std::size_t col = 0;
    if (has_subject) row.subject = cells[col++];
    if (has_class) {
      row.cls = cells[col++];
      if (row.cls.empty())
        throw validation_error("row " + std::to_string(lineno) + ": empty class cell");
      if (schema.class_order) {
        bool known = false;
        for (const auto& name : class_names) known = known || name == row.cls;
        if (!known)
          throw validation_error("row " + std::to_string(lineno) + ": unknown class name '" +
                                 row.cls + "'");
      } else {
        bool known = false;
        for (const auto& name : class_names) known = known || name == row.cls;
        if (!known) class_names.push_back(row.cls);
      }
    }
    row.x.resize(static_cast<Eigen::Index>(n_features));
    for (std::size_t f = 0; f < n_features; ++f)
      row.x[static_cast<Eigen::Index>(f)] = io_detail::parse_double(cells[col + f], lineno, col + f);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw validation_error("'" + path + "' has no data rows");
  if (!has_class) class_names = {"all"};

  LabeledDataset data(static_cast<int>(n_features), class_names, dim_names);
  for (auto& row : rows) {
    int cid = 0;
    if (has_class) cid = data.class_id(row.cls);
    std::optional<std::string> subject;
    if (row.subject && !row.subject->empty()) subject = std::move(row.subject);
    data.add(std::move(subject), cid, std::move(row.x));
  }
  return data;
}

inline void write_dataset_csv(const std::string& path, const LabeledDataset& data) {
  std::ofstream out = io_detail::open_output(path);
  bool any_subject = false;
  for (const auto& r : data.records()) any_subject = any_subject || r.subject.has_value();
  if (any_subject) out << "subject_id,";
  out << "class";
  for (const auto& d : data.dim_names()) out << ',' << d;
  out << '\n';
  for (const auto& r : data.records()) {
    if (any_subject) out << (r.subject ? *r.subject : std::string{}) << ',';
    out << data.class_names()[static_cast<std::size_t>(r.class_id)];
    for (Eigen::Index d = 0; d < r.x.size(); ++d) out << ',' << io_detail::format_double(r.x[d]);
    out << '\n';
  }
  if (!out) throw validation_error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Mapping files (JSON). Parameters round-trip losslessly: numbers are emitted
// in shortest-round-trip decimal form, so parse(serialize(m)) reproduces
// bit-identical encode outputs.

namespace io_detail {

inline nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::VectorXd vec_from_json(const nlohmann::json& a, const std::string& what) {
  if (!a.is_array()) throw validation_error("mapping file: " + what + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw validation_error("mapping file: " + what + " must be numeric");
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  }
  return v;
}

inline Eigen::MatrixXd mat_from_json(const nlohmann::json& a, const std::string& what) {
  if (!a.is_array() || a.empty())
    throw validation_error("mapping file: " + what + " must be a non-empty array of rows");
  const std::size_t rows = a.size();
  const std::size_t cols = a[0].is_array() ? a[0].size() : 0;
  if (cols == 0) throw validation_error("mapping file: " + what + " rows must be arrays");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!a[i].is_array() || a[i].size() != cols)
      throw validation_error("mapping file: " + what + " is ragged");
    for (std::size_t j = 0; j < cols; ++j) {
      if (!a[i][j].is_number())
        throw validation_error("mapping file: " + what + " must be numeric");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i][j].get<double>();
    }
  }
  return m;
}

}  // namespace io_detail

inline nlohmann::json mapping_to_json(const PrivacyMapping& m) {
  using io_detail::mat_to_json;
  using io_detail::vec_to_json;
  nlohmann::json j;
  j["format_version"] = kMappingFormatVersion;
  j["family"] = family_name(m.family());
  j["dimension"] = m.dimension;
  j["classes"] = m.class_names;
  nlohmann::json per_class = nlohmann::json::array();
  if (const auto* p = std::get_if<NormalWhiteningParams>(&m.params)) {
    for (std::size_t c = 0; c < m.num_classes(); ++c) {
      per_class.push_back({{"mean", vec_to_json(p->mean[c])},
                           {"whitener", mat_to_json(p->whitener[c])},
                           {"covariance", mat_to_json(p->covariance[c])}});
    }
  } else if (const auto* p = std::get_if<ExponentialScaleParams>(&m.params)) {
    for (std::size_t c = 0; c < m.num_classes(); ++c)
      per_class.push_back({{"rate", vec_to_json(p->rate[c])}});
  } else if (const auto* p = std::get_if<GammaScaleParams>(&m.params)) {
    j["shape"] = vec_to_json(p->shape);
    for (std::size_t c = 0; c < m.num_classes(); ++c)
      per_class.push_back({{"scale", vec_to_json(p->scale[c])}});
  } else if (const auto* p = std::get_if<UniformRescaleParams>(&m.params)) {
    for (std::size_t c = 0; c < m.num_classes(); ++c)
      per_class.push_back({{"lower", vec_to_json(p->lower[c])},
                           {"upper", vec_to_json(p->upper[c])}});
  } else {
    const auto& ap = std::get<AffineParams>(m.params);
    for (std::size_t c = 0; c < m.num_classes(); ++c)
      per_class.push_back({{"A", mat_to_json(ap.transform[c])},
                           {"b", vec_to_json(ap.offset[c])}});
  }
  j["per_class"] = std::move(per_class);
  return j;
}

inline PrivacyMapping mapping_from_json(const nlohmann::json& j) {
  using io_detail::mat_from_json;
  using io_detail::vec_from_json;
  if (!j.is_object()) throw validation_error("mapping file: not a JSON object");
  if (!j.contains("format_version") || !j["format_version"].is_number_integer())
    throw validation_error("mapping file: missing format_version");
  if (j["format_version"].get<int>() != kMappingFormatVersion)
    throw validation_error("mapping file: unsupported format_version " +
                           j["format_version"].dump());
  for (const char* key : {"family", "dimension", "classes", "per_class"}) {
    if (!j.contains(key))
      throw validation_error(std::string("mapping file: missing '") + key + "'");
  }
  PrivacyMapping m;
  m.dimension = j["dimension"].get<int>();
  m.class_names = j["classes"].get<std::vector<std::string>>();
  const std::string family = j["family"].get<std::string>();
  const auto& pc = j["per_class"];
  if (!pc.is_array() || pc.size() != m.class_names.size())
    throw validation_error("mapping file: per_class must list one entry per class");

  if (family == "normal") {
    NormalWhiteningParams p;
    for (const auto& e : pc) {
      p.mean.push_back(vec_from_json(e.at("mean"), "mean"));
      p.whitener.push_back(mat_from_json(e.at("whitener"), "whitener"));
      p.covariance.push_back(e.contains("covariance")
                                 ? mat_from_json(e.at("covariance"), "covariance")
                                 : Eigen::MatrixXd::Zero(m.dimension, m.dimension).eval());
    }
    m.params = std::move(p);
  } else if (family == "exponential") {
    ExponentialScaleParams p;
    for (const auto& e : pc) p.rate.push_back(vec_from_json(e.at("rate"), "rate"));
    m.params = std::move(p);
  } else if (family == "gamma") {
    GammaScaleParams p;
    if (!j.contains("shape")) throw validation_error("mapping file: gamma family needs 'shape'");
    p.shape = vec_from_json(j["shape"], "shape");
    for (const auto& e : pc) p.scale.push_back(vec_from_json(e.at("scale"), "scale"));
    m.params = std::move(p);
  } else if (family == "uniform") {
    UniformRescaleParams p;
    for (const auto& e : pc) {
      p.lower.push_back(vec_from_json(e.at("lower"), "lower"));
      p.upper.push_back(vec_from_json(e.at("upper"), "upper"));
    }
    m.params = std::move(p);
  } else if (family == "affine") {
    AffineParams p;
    for (const auto& e : pc) {
      p.transform.push_back(mat_from_json(e.at("A"), "A"));
      p.offset.push_back(vec_from_json(e.at("b"), "b"));
    }
    m.params = std::move(p);
  } else {
    throw validation_error("mapping file: unknown family '" + family + "'");
  }
  return m;
}

inline void save_mapping(const std::string& path, const PrivacyMapping& m) {
  std::ofstream out = io_detail::open_output(path);
  out << mapping_to_json(m).dump(2) << '\n';
  if (!out) throw validation_error("failed writing '" + path + "'");
}

inline PrivacyMapping load_mapping(const std::string& path) {
  std::ifstream in = io_detail::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw validation_error("'" + path + "': " + e.what());
  }
  return mapping_from_json(j);
}

// ---------------------------------------------------------------------------
// Run configuration.

struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::vector<int> bins;  // per dimension
  std::string gauge_class;
  double train_fraction = 0.4086438152011923;  // 1371/3355
  double laplace_alpha = 0.0;
  GAConfig ga;
  int classifier_folds = 10;
  RbfScorerConfig scorer;
  std::optional<CohortSpec> synth;
  std::optional<std::size_t> synth_n;

  std::uint64_t require_seed(const std::string& command) const {
    if (!seed) throw validation_error("'" + command + "' requires a seed in the config");
    return *seed;
  }
};

inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw validation_error("config: not a JSON object");
  if (j.contains("format_version") && j["format_version"].get<int>() != kConfigFormatVersion)
    throw validation_error("config: unsupported format_version");
  RunConfig cfg;
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("bins")) {
    if (j["bins"].is_number_integer())
      cfg.bins = {j["bins"].get<int>()};
    else
      cfg.bins = j["bins"].get<std::vector<int>>();
  }
  if (j.contains("gauge_class")) cfg.gauge_class = j["gauge_class"].get<std::string>();
  if (j.contains("train_fraction")) cfg.train_fraction = j["train_fraction"].get<double>();
  if (j.contains("laplace_alpha")) cfg.laplace_alpha = j["laplace_alpha"].get<double>();
  if (j.contains("ga")) {
    const auto& g = j["ga"];
    if (g.contains("population")) cfg.ga.population = g["population"].get<int>();
    if (g.contains("generations")) cfg.ga.generations = g["generations"].get<int>();
    if (g.contains("crossover_rate")) cfg.ga.crossover_rate = g["crossover_rate"].get<double>();
    if (g.contains("mutation_rate")) cfg.ga.mutation_rate = g["mutation_rate"].get<double>();
    if (g.contains("mutation_scale")) cfg.ga.mutation_scale = g["mutation_scale"].get<double>();
    if (g.contains("elitism")) cfg.ga.elitism = g["elitism"].get<int>();
    if (g.contains("local_refine")) cfg.ga.local_refine = g["local_refine"].get<bool>();
    if (g.contains("refine_iterations"))
      cfg.ga.refine_iterations = g["refine_iterations"].get<int>();
  }
  if (j.contains("classifier")) {
    const auto& c = j["classifier"];
    if (c.contains("folds")) cfg.classifier_folds = c["folds"].get<int>();
    if (c.contains("centers")) cfg.scorer.centers = c["centers"].get<int>();
    if (c.contains("kmeans_iterations"))
      cfg.scorer.kmeans_iterations = c["kmeans_iterations"].get<int>();
    if (c.contains("gamma_multipliers"))
      cfg.scorer.gamma_multipliers = c["gamma_multipliers"].get<std::vector<double>>();
    if (c.contains("ridge_grid")) cfg.scorer.ridge_grid = c["ridge_grid"].get<std::vector<double>>();
    if (c.contains("cv_newton_iterations"))
      cfg.scorer.cv_newton_iterations = c["cv_newton_iterations"].get<int>();
    if (c.contains("final_newton_iterations"))
      cfg.scorer.final_newton_iterations = c["final_newton_iterations"].get<int>();
  }
  if (j.contains("synth")) {
    const auto& s = j["synth"];
    if (s.is_string() && s.get<std::string>() == "default_weight_cohort") {
      cfg.synth = default_weight_cohort();
      cfg.synth_n = 3355;
    } else {
      CohortSpec spec;
      spec.dim_names = s.at("dimensions").get<std::vector<std::string>>();
      spec.dimension = static_cast<int>(spec.dim_names.size());
      for (const auto& e : s.at("classes")) {
        ClassGenSpec c;
        c.name = e.at("name").get<std::string>();
        c.proportion = e.at("proportion").get<double>();
        const std::string dist = e.value("dist", std::string("gaussian"));
        if (dist == "gaussian") {
          c.dist = ClassGenSpec::Dist::gaussian;
          c.mean = io_detail::vec_from_json(e.at("mean"), "mean");
          c.covariance = io_detail::mat_from_json(e.at("cov"), "cov");
        } else if (dist == "gamma") {
          c.dist = ClassGenSpec::Dist::gamma;
          c.shape = io_detail::vec_from_json(e.at("shape"), "shape");
          c.scale = io_detail::vec_from_json(e.at("scale"), "scale");
        } else {
          throw validation_error("config: unknown synth dist '" + dist + "'");
        }
        spec.classes.push_back(std::move(c));
      }
      cfg.synth = std::move(spec);
      if (s.contains("n")) cfg.synth_n = s["n"].get<std::size_t>();
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in = io_detail::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw validation_error("'" + path + "': " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error("'" + path + "': " + e.what());
  }
}

// Bins for a dataset: per-dimension counts from the config, broadcast when a
// single count is given, default 10 per dimension.
inline std::vector<int> bins_for(const RunConfig& cfg, int dimension) {
  if (cfg.bins.empty()) return std::vector<int>(static_cast<std::size_t>(dimension), 10);
  if (cfg.bins.size() == 1)
    return std::vector<int>(static_cast<std::size_t>(dimension), cfg.bins.front());
  if (cfg.bins.size() != static_cast<std::size_t>(dimension))
    throw validation_error("config: 'bins' must have one entry per dimension");
  return cfg.bins;
}

// ---------------------------------------------------------------------------
// Evaluation report.

struct EvalSide {
  ConfusionMatrix confusion{1};
  double accuracy = 0.0;
  double mi_bits = 0.0;
  double bayes_attack = 0.0;
};

struct EvalReport {
  std::vector<std::string> classes;
  double majority_baseline = 0.0;
  EvalSide before;
  EvalSide after;
};

inline nlohmann::json report_to_json(const EvalReport& r) {
  const auto side = [](const EvalSide& s) {
    nlohmann::json confusion = nlohmann::json::array();
    for (Eigen::Index i = 0; i < s.confusion.counts().rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < s.confusion.counts().cols(); ++j)
        row.push_back(s.confusion.counts()(i, j));
      confusion.push_back(std::move(row));
    }
    return nlohmann::json{{"confusion_predicted_by_truth", std::move(confusion)},
                          {"accuracy", s.accuracy},
                          {"mi_bits", s.mi_bits},
                          {"bayes_attack_accuracy", s.bayes_attack}};
  };
  return nlohmann::json{{"format_version", kReportFormatVersion},
                        {"classes", r.classes},
                        {"majority_baseline", r.majority_baseline},
                        {"before", side(r.before)},
                        {"after", side(r.after)}};
}

}  // namespace privmap
