// Copyright 2026 privmap contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "privmap/adversary.hpp"
#include "privmap/closed_form.hpp"
#include "privmap/dataprep.hpp"
#include "privmap/io.hpp"
#include "privmap/learner.hpp"
#include "privmap/types.hpp"

namespace privmap {

namespace cli_detail {

inline std::vector<BodyRecord> parse_body_csv(const std::string& path) {
  std::ifstream in = io_detail::open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw validation_error("'" + path + "' is empty");
  const std::vector<std::string> header = io_detail::split_csv_line(line);
  const auto col_of = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto subject_col = col_of("subject_id");
  const auto age_col = col_of("age_months");
  const auto gender_col = col_of("gender");
  const auto bmi_col = col_of("bmi");
  const auto weight_col = col_of("weight");
  for (const auto& [name, col] : {std::pair{"age_months", age_col}, {"gender", gender_col},
                                  {"bmi", bmi_col}, {"weight", weight_col}}) {
    if (!col) throw validation_error("'" + path + "': required column '" + name + "' is missing");
  }

  std::vector<BodyRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = io_detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw validation_error("row " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " cells, found " +
                             std::to_string(cells.size()));
    BodyRecord r;
    if (subject_col) r.subject = cells[*subject_col];
    r.age_months = static_cast<int>(io_detail::parse_double(cells[*age_col], lineno, *age_col));
    std::string g = cells[*gender_col];
    std::transform(g.begin(), g.end(), g.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (g == "male" || g == "m" || g == "1") {
      r.gender = Gender::male;
    } else if (g == "female" || g == "f" || g == "2") {
      r.gender = Gender::female;
    } else {
      throw validation_error("row " + std::to_string(lineno) + ": unknown gender '" + g + "'");
    }
    r.bmi = io_detail::parse_double(cells[*bmi_col], lineno, *bmi_col);
    r.weight = io_detail::parse_double(cells[*weight_col], lineno, *weight_col);
    records.push_back(std::move(r));
  }
  return records;
}

inline PrivacyMapping load_valid_mapping(const std::string& path) {
  PrivacyMapping m = load_mapping(path);
  const auto violations = validate_mapping(m);
  if (!violations.empty()) {
    std::string msg = "mapping '" + path + "' fails validation:";
    for (const auto& v : violations) msg += "\n  " + v.message;
    throw validation_error(msg);
  }
  return m;
}

// One half of the evaluation report. The histogram model uses the learning
// z-grid rule (equal-width bins between the training data's min and max).
inline EvalSide eval_side(const LabeledDataset& train, const LabeledDataset& test,
                          const RunConfig& cfg, std::uint64_t seed) {
  EvalSide side;
  const VoteClassifier clf =
      train_vote_classifier(train, cfg.classifier_folds, seed, cfg.scorer);
  side.confusion = evaluate(clf, test);
  side.accuracy = side.confusion.accuracy();
  const std::vector<int> bins = bins_for(cfg, train.dimension());
  const Grid grid = Grid::fit_to_points(train.feature_matrix(), bins);
  const HistogramModel model =
      build_histogram(train, grid, OutOfRangePolicy::clamp, cfg.laplace_alpha);
  side.mi_bits = mutual_information(model);
  side.bayes_attack = bayes_attack_accuracy(model, test);
  return side;
}

}  // namespace cli_detail

inline int cli_run(int argc, const char* const* argv) {
  CLI::App app{"per-class privacy encoders: learn mappings that hide a private class "
               "while staying exactly decodable for recipients who know it"};
  app.require_subcommand(1);

  // label
  auto* label_cmd = app.add_subcommand(
      "label", "label body records (bmi, weight) with weight-status classes by BMI percentile");
  std::string label_in, label_out;
  label_cmd->add_option("input", label_in, "body records CSV")->required();
  label_cmd->add_option("output", label_out, "labeled dataset CSV")->required();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic labeled cohort");
  std::string synth_cfg_path, synth_out;
  synth_cmd->add_option("config", synth_cfg_path, "config JSON with a 'synth' section and seed")
      ->required();
  synth_cmd->add_option("output", synth_out, "output CSV")->required();

  // split
  auto* split_cmd = app.add_subcommand("split", "stratified train/test split");
  std::string split_in, split_train, split_test;
  double split_fraction = 0.0;
  std::uint64_t split_seed = 0;
  split_cmd->add_option("input", split_in, "labeled dataset CSV")->required();
  split_cmd->add_option("--fraction", split_fraction, "train fraction in (0,1)")->required();
  split_cmd->add_option("--seed", split_seed, "rng seed")->required();
  split_cmd->add_option("train", split_train, "train CSV")->required();
  split_cmd->add_option("test", split_test, "test CSV")->required();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit a closed-form mapping family");
  std::string fit_family, fit_in, fit_out;
  double fit_shape = 0.0;
  fit_cmd->add_option("--family", fit_family, "normal|exp|gamma|uniform")->required();
  fit_cmd->add_option("--shape", fit_shape, "fixed shared shape for the gamma family");
  fit_cmd->add_option("train", fit_in, "labeled dataset CSV")->required();
  fit_cmd->add_option("mapping", fit_out, "output mapping JSON")->required();

  // learn
  auto* learn_cmd = app.add_subcommand("learn", "learn an affine mapping by MI minimization");
  std::string learn_cfg_path, learn_in, learn_out;
  learn_cmd->add_option("--config", learn_cfg_path, "config JSON")->required();
  learn_cmd->add_option("train", learn_in, "labeled dataset CSV")->required();
  learn_cmd->add_option("mapping", learn_out, "output mapping JSON")->required();

  // encode / decode
  auto* encode_cmd = app.add_subcommand("encode", "encode a labeled dataset with a mapping");
  auto* decode_cmd = app.add_subcommand("decode", "decode a labeled dataset with a mapping");
  std::string enc_mapping, enc_in, enc_out, dec_mapping, dec_in, dec_out;
  encode_cmd->add_option("--mapping", enc_mapping, "mapping JSON")->required();
  encode_cmd->add_option("input", enc_in, "input CSV (class column required)")->required();
  encode_cmd->add_option("output", enc_out, "output CSV")->required();
  decode_cmd->add_option("--mapping", dec_mapping, "mapping JSON")->required();
  decode_cmd->add_option("input", dec_in, "input CSV (class column required)")->required();
  decode_cmd->add_option("output", dec_out, "output CSV")->required();

  // eval
  auto* eval_cmd = app.add_subcommand(
      "eval", "adversary evaluation before/after privatization, written as a JSON report");
  std::string eval_mapping, eval_train, eval_test, eval_report, eval_cfg_path;
  std::uint64_t eval_seed = 0;
  bool eval_seed_set = false;
  eval_cmd->add_option("--mapping", eval_mapping, "mapping JSON")->required();
  eval_cmd->add_option("train", eval_train, "train CSV")->required();
  eval_cmd->add_option("test", eval_test, "test CSV")->required();
  eval_cmd->add_option("--report", eval_report, "output report JSON")->required();
  eval_cmd->add_option("--config", eval_cfg_path, "config JSON");
  eval_cmd->add_option("--seed", eval_seed, "rng seed (overrides config)")
      ->each([&](const std::string&) { eval_seed_set = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*label_cmd) {
      const auto records = cli_detail::parse_body_csv(label_in);
      LabelResult result = label_weight_status(records);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      write_dataset_csv(label_out, result.data);
      std::cout << "labeled " << result.data.size() << " record(s) into "
                << result.data.num_classes() << " classes\n";
    } else if (*synth_cmd) {
      const RunConfig cfg = load_config(synth_cfg_path);
      if (!cfg.synth) throw validation_error("config has no 'synth' section");
      const std::size_t n = cfg.synth_n.value_or(3355);
      const LabeledDataset data = synth_cohort(*cfg.synth, n, cfg.require_seed("synth"));
      write_dataset_csv(synth_out, data);
      std::cout << "wrote " << data.size() << " record(s)\n";
    } else if (*split_cmd) {
      const LabeledDataset data = parse_dataset_csv(split_in);
      const SplitResult parts = split(data, split_fraction, split_seed);
      write_dataset_csv(split_train, parts.train);
      write_dataset_csv(split_test, parts.test);
      std::cout << "train " << parts.train.size() << " / test " << parts.test.size() << '\n';
    } else if (*fit_cmd) {
      const LabeledDataset data = parse_dataset_csv(fit_in);
      FitResult fit;
      if (fit_family == "normal") {
        fit = fit_normal(data);
      } else if (fit_family == "exp" || fit_family == "exponential") {
        fit = fit_exponential(data);
      } else if (fit_family == "gamma") {
        fit = fit_gamma(data, fit_shape > 0.0 ? std::optional<double>(fit_shape) : std::nullopt);
      } else if (fit_family == "uniform") {
        fit = fit_uniform(data);
      } else {
        throw validation_error("unknown family '" + fit_family + "'");
      }
      for (const auto& w : fit.report.warnings) std::cerr << "warning: " << w << '\n';
      save_mapping(fit_out, fit.mapping);
      std::cout << "fitted " << family_name(fit.mapping.family()) << " mapping for "
                << fit.mapping.num_classes() << " classes\n";
    } else if (*learn_cmd) {
      const RunConfig cfg = load_config(learn_cfg_path);
      const LabeledDataset data = parse_dataset_csv(learn_in);
      AffineSearchSpace space;
      space.dimension = data.dimension();
      space.class_names = data.class_names();
      space.gauge_class = cfg.gauge_class.empty() ? 0 : data.class_id(cfg.gauge_class);
      GAConfig ga = cfg.ga;
      ga.seed = cfg.require_seed("learn");
      const std::vector<int> bins = bins_for(cfg, data.dimension());
      const LearnResult result =
          learn(data, space, ga, bins, [](int gen, double best) {
            std::cout << "generation " << gen << " best " << io_detail::format_double(best)
                      << " bits\n";
          });
      save_mapping(learn_out, result.mapping);
      std::cout << "final " << io_detail::format_double(result.trace.back()) << " bits\n";
    } else if (*encode_cmd) {
      const PrivacyMapping mapping = cli_detail::load_valid_mapping(enc_mapping);
      CsvSchema schema;
      schema.class_order = mapping.class_names;
      const LabeledDataset data = parse_dataset_csv(enc_in, schema);
      write_dataset_csv(enc_out, encode_dataset(mapping, data));
      std::cout << "encoded " << data.size() << " record(s)\n";
    } else if (*decode_cmd) {
      const PrivacyMapping mapping = cli_detail::load_valid_mapping(dec_mapping);
      CsvSchema schema;
      schema.class_order = mapping.class_names;
      const LabeledDataset data = parse_dataset_csv(dec_in, schema);
      write_dataset_csv(dec_out, decode_dataset(mapping, data));
      std::cout << "decoded " << data.size() << " record(s)\n";
    } else if (*eval_cmd) {
      const PrivacyMapping mapping = cli_detail::load_valid_mapping(eval_mapping);
      RunConfig cfg;
      if (!eval_cfg_path.empty()) cfg = load_config(eval_cfg_path);
      if (eval_seed_set) cfg.seed = eval_seed;
      const std::uint64_t seed = cfg.require_seed("eval");
      CsvSchema schema;
      schema.class_order = mapping.class_names;
      const LabeledDataset train = parse_dataset_csv(eval_train, schema);
      const LabeledDataset test = parse_dataset_csv(eval_test, schema);

      EvalReport report;
      report.classes = train.class_names();
      report.majority_baseline = majority_baseline(test);
      report.before = cli_detail::eval_side(train, test, cfg, seed);
      report.after = cli_detail::eval_side(encode_dataset(mapping, train),
                                           encode_dataset(mapping, test), cfg, seed);

      std::ofstream out = io_detail::open_output(eval_report);
      out << report_to_json(report).dump(2) << '\n';
      if (!out) throw validation_error("failed writing '" + eval_report + "'");

      std::cout << "majority baseline  " << io_detail::format_double(report.majority_baseline)
                << '\n'
                << "accuracy  before " << io_detail::format_double(report.before.accuracy)
                << "  after " << io_detail::format_double(report.after.accuracy) << '\n'
                << "mi (bits) before " << io_detail::format_double(report.before.mi_bits)
                << "  after " << io_detail::format_double(report.after.mi_bits) << '\n'
                << "map attack before " << io_detail::format_double(report.before.bayes_attack)
                << "  after " << io_detail::format_double(report.after.bayes_attack) << '\n';
    }
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace privmap
