// Copyright 2026 privmap contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "privmap/closed_form.hpp"
#include "privmap/histogram.hpp"
#include "privmap/mapping.hpp"
#include "privmap/rng.hpp"
#include "privmap/types.hpp"

namespace privmap {

// Search space for learned mappings: one affine encoder (A_c, b_c) per class,
// z = A_c (x - b_c), with one designated gauge class pinned to the identity.
// Pinning removes the freedom where composing every encoder with a common
// invertible affine map leaves the objective unchanged.
struct AffineSearchSpace {
  int dimension = 0;
  std::vector<std::string> class_names;
  int gauge_class = 0;

  std::size_t num_classes() const { return class_names.size(); }
  std::size_t genes_per_class() const {
    return static_cast<std::size_t>(dimension) * dimension + dimension;
  }
  std::size_t genome_length() const {
    return (num_classes() - 1) * genes_per_class();
  }

  void validate() const {
    if (dimension <= 0) throw validation_error("search space dimension must be positive");
    if (class_names.empty()) throw validation_error("search space needs classes");
    if (gauge_class < 0 || gauge_class >= static_cast<int>(class_names.size()))
      throw validation_error("gauge class is not in the class list");
  }
};

// Flat real vector holding (A_c, b_c) for every non-gauge class, row-major,
// in class-id order.
using CandidateGenome = Eigen::VectorXd;

struct GAConfig {
  int population = 60;
  int generations = 100;
  double crossover_rate = 0.7;
  double mutation_rate = 0.15;
  double mutation_scale = 0.2;  // multiplied by the per-gene data scale
  int elitism = 2;
  std::uint64_t seed = 0;
  bool local_refine = false;
  int refine_iterations = 200;

  void validate() const {
    if (population < 2) throw validation_error("ga: population must be >= 2");
    if (generations < 1) throw validation_error("ga: generations must be >= 1");
    if (crossover_rate < 0.0 || crossover_rate > 1.0)
      throw validation_error("ga: crossover rate must be in [0,1]");
    if (mutation_rate < 0.0 || mutation_rate > 1.0)
      throw validation_error("ga: mutation rate must be in [0,1]");
    if (!(mutation_scale > 0.0)) throw validation_error("ga: mutation scale must be > 0");
    if (elitism < 0 || elitism > population)
      throw validation_error("ga: elitism must be in [0, population]");
  }
};

inline constexpr double kInvalidFitness = std::numeric_limits<double>::infinity();

inline PrivacyMapping genome_to_mapping(const CandidateGenome& genome,
                                        const AffineSearchSpace& space) {
  space.validate();
  if (static_cast<std::size_t>(genome.size()) != space.genome_length())
    throw validation_error("genome length " + std::to_string(genome.size()) +
                           " does not match search space (" +
                           std::to_string(space.genome_length()) + ")");
  const int n = space.dimension;
  AffineParams params;
  params.transform.assign(space.num_classes(), Eigen::MatrixXd::Identity(n, n));
  params.offset.assign(space.num_classes(), Eigen::VectorXd::Zero(n));
  std::size_t at = 0;
  for (std::size_t c = 0; c < space.num_classes(); ++c) {
    if (static_cast<int>(c) == space.gauge_class) continue;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = genome[static_cast<Eigen::Index>(at++)];
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = genome[static_cast<Eigen::Index>(at++)];
    params.transform[c] = std::move(a);
    params.offset[c] = std::move(b);
  }
  return PrivacyMapping{n, space.class_names, std::move(params)};
}

// The z-grid used during learning: equal-width bins per dimension between the
// encoded sample min and max, recomputed for every candidate.
inline Grid learning_grid(const Eigen::MatrixXd& encoded, const std::vector<int>& bins_per_dim) {
  return Grid::fit_to_points(encoded, bins_per_dim);
}

// GA fitness: mutual information of the encoded data under the candidate's
// mapping. Genomes that decode to a non-injective mapping get +inf.
inline double fitness(const CandidateGenome& genome, const AffineSearchSpace& space,
                      const LabeledDataset& data, const std::vector<int>& bins_per_dim) {
  const PrivacyMapping mapping = genome_to_mapping(genome, space);
  const auto& params = std::get<AffineParams>(mapping.params);
  for (std::size_t c = 0; c < mapping.num_classes(); ++c) {
    if (!numerically_invertible(params.transform[c])) return kInvalidFitness;
  }
  Eigen::MatrixXd encoded(data.size(), data.dimension());
  Eigen::Index row = 0;
  for (const auto& r : data.records()) {
    const std::size_t c = static_cast<std::size_t>(r.class_id);
    encoded.row(row++) = (params.transform[c] * (r.x - params.offset[c])).transpose();
  }
  if (!encoded.allFinite()) return kInvalidFitness;
  const Grid grid = learning_grid(encoded, bins_per_dim);
  std::vector<std::vector<std::uint64_t>> counts(
      data.num_classes(), std::vector<std::uint64_t>(grid.bin_count(), 0));
  row = 0;
  for (const auto& r : data.records())
    ++counts[static_cast<std::size_t>(r.class_id)][grid.locate(encoded.row(row++)).flat];
  return mutual_information(HistogramModel(grid, std::move(counts)));
}

namespace ga_detail {

// Minimization-to-selection transform: weight = 1 / (fitness + 0.01).
// Invalid (+inf) candidates get zero weight.
inline std::vector<double> selection_weights(const std::vector<double>& fit) {
  std::vector<double> w(fit.size());
  for (std::size_t i = 0; i < fit.size(); ++i)
    w[i] = std::isfinite(fit[i]) ? 1.0 / (fit[i] + 0.01) : 0.0;
  return w;
}

inline std::size_t sample_index(const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) return rng.below(weights.size());  // all invalid: uniform
  double r = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    r -= weights[i];
    if (r < 0.0) return i;
  }
  return weights.size() - 1;
}

// Indices of the population sorted by fitness ascending, ties by index.
inline std::vector<std::size_t> rank_by_fitness(const std::vector<double>& fit) {
  std::vector<std::size_t> order(fit.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fit[a] < fit[b]; });
  return order;
}

// One generation: elites copied unchanged, the rest bred by
// fitness-proportional selection, uniform gene-wise crossover and per-gene
// Gaussian mutation.
inline std::vector<CandidateGenome> evolve(const std::vector<CandidateGenome>& pop,
                                           const std::vector<double>& fit, const GAConfig& cfg,
                                           const Eigen::VectorXd& sigma_per_gene, Rng& rng) {
  const std::vector<double> weights = selection_weights(fit);
  const std::vector<std::size_t> order = rank_by_fitness(fit);
  std::vector<CandidateGenome> next;
  next.reserve(pop.size());
  for (int e = 0; e < cfg.elitism && next.size() < pop.size(); ++e)
    next.push_back(pop[order[static_cast<std::size_t>(e)]]);
  while (next.size() < pop.size()) {
    CandidateGenome child = pop[sample_index(weights, rng)];
    if (rng.uniform() < cfg.crossover_rate) {
      const CandidateGenome& other = pop[sample_index(weights, rng)];
      for (Eigen::Index g = 0; g < child.size(); ++g) {
        if (rng.uniform() < 0.5) child[g] = other[g];
      }
    }
    for (Eigen::Index g = 0; g < child.size(); ++g) {
      if (rng.uniform() < cfg.mutation_rate) child[g] += rng.normal(0.0, sigma_per_gene[g]);
    }
    next.push_back(std::move(child));
  }
  return next;
}

// Derivative-free local refinement (Nelder-Mead) from the GA's best genome.
// The histogram objective is piecewise constant, so gradients are useless.
inline CandidateGenome nelder_mead(const CandidateGenome& start,
                                   const std::function<double(const CandidateGenome&)>& f,
                                   const Eigen::VectorXd& step, int max_iterations) {
  const Eigen::Index n = start.size();
  if (n == 0) return start;
  std::vector<CandidateGenome> simplex;
  simplex.push_back(start);
  for (Eigen::Index i = 0; i < n; ++i) {
    CandidateGenome v = start;
    v[i] += step[i];
    simplex.push_back(std::move(v));
  }
  std::vector<double> val(simplex.size());
  for (std::size_t i = 0; i < simplex.size(); ++i) val[i] = f(simplex[i]);

  for (int iter = 0; iter < max_iterations; ++iter) {
    const auto order = rank_by_fitness(val);
    std::vector<CandidateGenome> sorted;
    std::vector<double> sorted_val;
    for (auto idx : order) {
      sorted.push_back(simplex[idx]);
      sorted_val.push_back(val[idx]);
    }
    simplex = std::move(sorted);
    val = std::move(sorted_val);

    CandidateGenome centroid = CandidateGenome::Zero(n);
    for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i];
    centroid /= static_cast<double>(simplex.size() - 1);

    const CandidateGenome& worst = simplex.back();
    CandidateGenome reflected = centroid + (centroid - worst);
    const double fr = f(reflected);
    if (fr < val.front()) {
      CandidateGenome expanded = centroid + 2.0 * (centroid - worst);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex.back() = std::move(expanded);
        val.back() = fe;
      } else {
        simplex.back() = std::move(reflected);
        val.back() = fr;
      }
    } else if (fr < val[val.size() - 2]) {
      simplex.back() = std::move(reflected);
      val.back() = fr;
    } else {
      CandidateGenome contracted = centroid + 0.5 * (worst - centroid);
      const double fc = f(contracted);
      if (fc < val.back()) {
        simplex.back() = std::move(contracted);
        val.back() = fc;
      } else {
        for (std::size_t i = 1; i < simplex.size(); ++i) {
          simplex[i] = simplex.front() + 0.5 * (simplex[i] - simplex.front());
          val[i] = f(simplex[i]);
        }
      }
    }
  }
  const auto order = rank_by_fitness(val);
  return simplex[order.front()];
}

}  // namespace ga_detail

struct LearnResult {
  PrivacyMapping mapping;
  std::vector<double> trace;  // best fitness so far, one entry per generation
  CandidateGenome best_genome;
};

// Minimize histogram MI over the affine space with a genetic algorithm.
// Fully deterministic for a fixed (data, space, cfg) triple.
inline LearnResult learn(const LabeledDataset& data, const AffineSearchSpace& space,
                         const GAConfig& cfg, const std::vector<int>& bins_per_dim,
                         const std::function<void(int, double)>& on_generation = {}) {
  space.validate();
  cfg.validate();
  if (space.class_names != data.class_names())
    throw validation_error("search space and dataset disagree on classes");
  if (space.dimension != data.dimension())
    throw validation_error("search space and dataset disagree on dimension");
  if (bins_per_dim.size() != static_cast<std::size_t>(data.dimension()))
    throw validation_error("need one bin count per dimension");
  const auto counts = data.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0)
      throw validation_error("class '" + data.class_names()[c] + "' has no records");
  }

  // A single class is private by construction: every genome scores zero.
  if (data.num_classes() == 1) {
    return {PrivacyMapping::identity(space.dimension, space.class_names), {0.0},
            CandidateGenome::Zero(0)};
  }

  const int n = space.dimension;
  const std::size_t genome_len = space.genome_length();
  const std::size_t genes_per_class = space.genes_per_class();

  // Per-gene scales: O(1) for transform entries, per-dimension data spread
  // for offsets (offsets live in data units).
  Eigen::MatrixXd features = data.feature_matrix();
  Eigen::VectorXd feat_mean = features.colwise().mean();
  Eigen::VectorXd feat_sd(n);
  for (int d = 0; d < n; ++d) {
    const double var =
        (features.col(d).array() - feat_mean[d]).square().sum() /
        std::max<double>(1.0, static_cast<double>(features.rows()) - 1.0);
    feat_sd[d] = std::sqrt(std::max(var, 1e-12));
  }
  Eigen::VectorXd sigma_per_gene(genome_len);
  {
    std::size_t at = 0;
    for (std::size_t c = 0; c + 1 < space.num_classes(); ++c) {
      (void)c;
      for (int i = 0; i < n * n; ++i) sigma_per_gene[static_cast<Eigen::Index>(at++)] = cfg.mutation_scale;
      for (int d = 0; d < n; ++d)
        sigma_per_gene[static_cast<Eigen::Index>(at++)] = cfg.mutation_scale * feat_sd[d];
    }
  }

  std::vector<Eigen::VectorXd> class_means(space.num_classes());
  for (std::size_t c = 0; c < space.num_classes(); ++c)
    class_means[c] = data.class_matrix(static_cast<int>(c)).colwise().mean();
  const Eigen::VectorXd& gauge_mean = class_means[static_cast<std::size_t>(space.gauge_class)];

  const auto eval = [&](const CandidateGenome& g) { return fitness(g, space, data, bins_per_dim); };

  // Candidate 0 is the do-nothing genome (A = I, b = 0): its fitness is the
  // MI of the raw data, so the learner can never return something worse.
  const auto identity_genome = [&]() {
    CandidateGenome g = CandidateGenome::Zero(static_cast<Eigen::Index>(genome_len));
    std::size_t at = 0;
    for (std::size_t c = 0; c + 1 < space.num_classes(); ++c) {
      (void)c;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g[static_cast<Eigen::Index>(at++)] = (i == j) ? 1.0 : 0.0;
      at += static_cast<std::size_t>(n);
    }
    return g;
  };

  Rng init_rng(cfg.seed, 0);
  const auto random_init = [&]() {
    CandidateGenome g(static_cast<Eigen::Index>(genome_len));
    std::size_t slot = 0;
    for (std::size_t c = 0; c < space.num_classes(); ++c) {
      if (static_cast<int>(c) == space.gauge_class) continue;
      const std::size_t base = slot * genes_per_class;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          g[static_cast<Eigen::Index>(base + static_cast<std::size_t>(i * n + j))] =
              ((i == j) ? 1.0 : 0.0) + init_rng.normal(0.0, 0.1);
      for (int d = 0; d < n; ++d)
        g[static_cast<Eigen::Index>(base + static_cast<std::size_t>(n * n + d))] =
            class_means[c][d] - gauge_mean[d];
      ++slot;
    }
    return g;
  };

  const auto genome_valid = [&](const CandidateGenome& g) {
    const PrivacyMapping m = genome_to_mapping(g, space);
    for (const auto& a : std::get<AffineParams>(m.params).transform) {
      if (!numerically_invertible(a)) return false;
    }
    return true;
  };

  std::vector<CandidateGenome> pop;
  pop.reserve(static_cast<std::size_t>(cfg.population));
  pop.push_back(identity_genome());
  std::size_t valid = genome_valid(pop.front()) ? 1 : 0;
  while (pop.size() < static_cast<std::size_t>(cfg.population)) {
    CandidateGenome g;
    bool ok = false;
    for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
      g = random_init();
      ok = genome_valid(g);
    }
    if (ok) ++valid;
    pop.push_back(std::move(g));  // invalid stragglers carry +inf fitness
  }
  if (valid == 0) throw validation_error("ga: no valid candidate after 20 initialization attempts");

  std::vector<double> fit(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) fit[i] = eval(pop[i]);

  std::size_t best_idx =
      static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
  CandidateGenome best = pop[best_idx];
  double best_fit = fit[best_idx];
  std::vector<double> trace{best_fit};
  if (on_generation) on_generation(0, best_fit);

  Rng evolve_rng(cfg.seed, 1);
  for (int gen = 1; gen <= cfg.generations; ++gen) {
    pop = ga_detail::evolve(pop, fit, cfg, sigma_per_gene, evolve_rng);
    for (std::size_t i = 0; i < pop.size(); ++i) fit[i] = eval(pop[i]);
    best_idx = static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
    if (fit[best_idx] < best_fit) {
      best_fit = fit[best_idx];
      best = pop[best_idx];
    }
    trace.push_back(best_fit);
    if (on_generation) on_generation(gen, best_fit);
  }

  if (cfg.local_refine && genome_len > 0) {
    const CandidateGenome refined =
        ga_detail::nelder_mead(best, eval, 0.25 * sigma_per_gene, cfg.refine_iterations);
    const double refined_fit = eval(refined);
    if (refined_fit < best_fit) {
      best = refined;
      best_fit = refined_fit;
      trace.push_back(best_fit);
    }
  }

  return {genome_to_mapping(best, space), std::move(trace), std::move(best)};
}

}  // namespace privmap
