// Copyright 2026 privmap contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "privmap/histogram.hpp"
#include "privmap/rng.hpp"
#include "privmap/types.hpp"

namespace privmap {

// Rows are the predicted class, columns the ground truth.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t k)
      : counts_(Eigen::MatrixX<std::int64_t>::Zero(static_cast<Eigen::Index>(k),
                                                   static_cast<Eigen::Index>(k))) {}
  explicit ConfusionMatrix(Eigen::MatrixX<std::int64_t> counts) : counts_(std::move(counts)) {
    if (counts_.rows() != counts_.cols())
      throw validation_error("confusion matrix must be square");
    if ((counts_.array() < 0).any())
      throw validation_error("confusion matrix counts must be non-negative");
  }

  void record(int predicted, int truth) {
    ++counts_(predicted, truth);
  }

  std::size_t num_classes() const { return static_cast<std::size_t>(counts_.rows()); }
  std::int64_t at(int predicted, int truth) const { return counts_(predicted, truth); }
  const Eigen::MatrixX<std::int64_t>& counts() const { return counts_; }

  std::int64_t total() const { return counts_.sum(); }

  double accuracy() const { return accuracy(total()); }

  // trace(M) / N with an explicit test-set cardinality. Published matrices
  // sometimes drop a few cells; their stated accuracy still divides by the
  // full test-set size.
  double accuracy(std::int64_t test_set_size) const {
    if (test_set_size <= 0) throw validation_error("confusion matrix is empty");
    return static_cast<double>(counts_.diagonal().sum()) / static_cast<double>(test_set_size);
  }

  // Share of the most frequent ground-truth class.
  double majority_share() const {
    const std::int64_t n = total();
    if (n == 0) throw validation_error("confusion matrix is empty");
    return static_cast<double>(counts_.colwise().sum().maxCoeff()) / static_cast<double>(n);
  }

 private:
  Eigen::MatrixX<std::int64_t> counts_;
};

struct RbfScorerConfig {
  int centers = 100;
  int kmeans_iterations = 25;
  std::vector<double> gamma_multipliers{0.25, 1.0, 4.0};
  std::vector<double> ridge_grid{1e-4, 1e-2, 1.0};
  int cv_newton_iterations = 12;
  int final_newton_iterations = 40;
};

namespace detail {

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// k-means++ seeding followed by Lloyd iterations; empty clusters keep their
// previous center.
inline Eigen::MatrixXd kmeans_centers(const Eigen::MatrixXd& pts, int k, int iterations,
                                      Rng& rng) {
  const Eigen::Index n = pts.rows();
  const int m = std::min<int>(k, static_cast<int>(n));
  Eigen::MatrixXd centers(m, pts.cols());
  Eigen::VectorXd dist2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());

  centers.row(0) = pts.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  for (int c = 1; c < m; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = (pts.row(i) - centers.row(c - 1)).squaredNorm();
      if (d < dist2[i]) dist2[i] = d;
    }
    const double total = dist2.sum();
    if (total <= 0.0) {
      centers.row(c) = pts.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
      continue;
    }
    double r = rng.uniform() * total;
    Eigen::Index pick = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      r -= dist2[i];
      if (r < 0.0) {
        pick = i;
        break;
      }
    }
    centers.row(c) = pts.row(pick);
  }

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < iterations; ++it) {
    bool moved = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < m; ++c) {
        const double d = (pts.row(i) - centers.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        moved = true;
      }
    }
    if (!moved && it > 0) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(m, pts.cols());
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += pts.row(i);
      cnt[assign[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (int c = 0; c < m; ++c) {
      if (cnt[c] > 0.0) centers.row(c) = sums.row(c) / cnt[c];
    }
  }
  return centers;
}

// phi(x) = [1, exp(-gamma ||x - c_j||^2) ...]
inline Eigen::MatrixXd rbf_features(const Eigen::MatrixXd& pts, const Eigen::MatrixXd& centers,
                                    double gamma) {
  Eigen::MatrixXd phi(pts.rows(), centers.rows() + 1);
  phi.col(0).setOnes();
  for (Eigen::Index j = 0; j < centers.rows(); ++j) {
    phi.col(j + 1) =
        (-gamma * (pts.rowwise() - centers.row(j)).rowwise().squaredNorm()).array().exp();
  }
  return phi;
}

// L2-regularized logistic regression by damped Newton steps (intercept not
// penalized). Deterministic: fixed iteration budget, no sampling.
inline Eigen::VectorXd fit_logistic(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                                    double ridge, int max_iterations) {
  const Eigen::Index p = phi.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, ridge);
  penalty[0] = 0.0;

  const auto objective = [&](const Eigen::VectorXd& wv) {
    const Eigen::VectorXd t = phi * wv;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      // log(1 + exp(t)) - y t, written to avoid overflow
      nll += std::max(t[i], 0.0) + std::log1p(std::exp(-std::abs(t[i]))) - y[i] * t[i];
    }
    return nll + 0.5 * (penalty.array() * wv.array().square()).sum();
  };

  double obj = objective(w);
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd t = phi * w;
    Eigen::VectorXd p_hat(t.size()), s(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double pi = sigmoid(t[i]);
      p_hat[i] = pi;
      s[i] = std::max(pi * (1.0 - pi), 1e-10);
    }
    const Eigen::VectorXd grad = phi.transpose() * (p_hat - y) + penalty.asDiagonal() * w;
    if (grad.lpNorm<Eigen::Infinity>() < 1e-9 * static_cast<double>(y.size())) break;
    Eigen::MatrixXd hess = phi.transpose() * s.asDiagonal() * phi;
    hess.diagonal() += penalty;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    double alpha = 1.0;
    Eigen::VectorXd w_next = w - alpha * step;
    double obj_next = objective(w_next);
    int halvings = 0;
    while (obj_next > obj && halvings < 20) {
      alpha *= 0.5;
      w_next = w - alpha * step;
      obj_next = objective(w_next);
      ++halvings;
    }
    if (obj_next > obj) break;
    w = w_next;
    obj = obj_next;
  }
  return w;
}

}  // namespace detail

// Ordered ensemble of k-1 binary scorers over ordinal classes. Scorer i
// treats classes {0..i} as positive; a point's class is the number of
// scorers that vote negative.
class VoteClassifier {
 public:
  struct Scorer {
    double gamma = 0.0;
    Eigen::VectorXd weights;
  };

  VoteClassifier(std::size_t num_classes, Eigen::VectorXd feat_mean, Eigen::VectorXd feat_sd,
                 Eigen::MatrixXd centers, std::vector<Scorer> scorers)
      : num_classes_(num_classes),
        feat_mean_(std::move(feat_mean)),
        feat_sd_(std::move(feat_sd)),
        centers_(std::move(centers)),
        scorers_(std::move(scorers)) {
    if (scorers_.size() + 1 != num_classes_)
      throw validation_error("vote classifier needs exactly k-1 scorers for k classes");
  }

  std::size_t num_classes() const { return num_classes_; }

  // Monotone ordinal rule; inconsistent vote patterns resolve by the
  // negative-vote count.
  static int class_from_votes(const std::vector<bool>& positive_votes) {
    int negatives = 0;
    for (bool v : positive_votes) negatives += v ? 0 : 1;
    return negatives;
  }

  std::vector<bool> votes(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd z = standardize(x);
    std::vector<bool> out;
    out.reserve(scorers_.size());
    for (const auto& s : scorers_) {
      double t = s.weights[0];
      for (Eigen::Index j = 0; j < centers_.rows(); ++j) {
        t += s.weights[j + 1] *
             std::exp(-s.gamma * (z.transpose() - centers_.row(j)).squaredNorm());
      }
      out.push_back(t >= 0.0);  // sigmoid(t) >= 0.5
    }
    return out;
  }

  int classify(const Eigen::VectorXd& x) const {
    const int c = class_from_votes(votes(x));
    return std::clamp(c, 0, static_cast<int>(num_classes_) - 1);
  }

 private:
  Eigen::VectorXd standardize(const Eigen::VectorXd& x) const {
    return (x - feat_mean_).cwiseQuotient(feat_sd_);
  }

  std::size_t num_classes_;
  Eigen::VectorXd feat_mean_, feat_sd_;
  Eigen::MatrixXd centers_;  // in standardized space
  std::vector<Scorer> scorers_;
};

// Trains the k-1 ordinal scorers. RBF bandwidth and ridge strength are picked
// per scorer by `folds`-fold cross-validation on accuracy over a fixed grid;
// everything is deterministic for a fixed seed.
inline VoteClassifier train_vote_classifier(const LabeledDataset& train, int folds,
                                            std::uint64_t seed,
                                            const RbfScorerConfig& cfg = {}) {
  const std::size_t k = train.num_classes();
  if (k < 2) throw validation_error("vote classifier needs at least two classes");
  if (folds < 2) throw validation_error("cross-validation needs at least 2 folds");
  const auto class_counts = train.class_counts();
  for (std::size_t c = 0; c < k; ++c) {
    if (class_counts[c] == 0)
      throw validation_error("class '" + train.class_names()[c] + "' has no training records");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(train.size());
  if (n < folds) throw validation_error("fewer records than folds");

  // standardize features
  Eigen::MatrixXd x = train.feature_matrix();
  const Eigen::VectorXd mean = x.colwise().mean();
  Eigen::VectorXd sd(x.cols());
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    const double var = (x.col(d).array() - mean[d]).square().sum() /
                       std::max<double>(1.0, static_cast<double>(n - 1));
    sd[d] = std::sqrt(std::max(var, 1e-12));
  }
  const Eigen::MatrixXd xs = (x.rowwise() - mean.transpose()).array().rowwise() /
                             sd.transpose().array();

  Rng rng(seed, 17);
  const Eigen::MatrixXd centers = detail::kmeans_centers(xs, cfg.centers, cfg.kmeans_iterations, rng);

  // base bandwidth from the median pairwise distance between centers
  std::vector<double> d2;
  for (Eigen::Index a = 0; a < centers.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < centers.rows(); ++b)
      d2.push_back((centers.row(a) - centers.row(b)).squaredNorm());
  }
  double base_gamma = 1.0;
  if (!d2.empty()) {
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2), d2.end());
    const double med = d2[d2.size() / 2];
    if (med > 0.0) base_gamma = 1.0 / med;
  }

  // deterministic shuffled fold assignment
  std::vector<std::size_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < perm.size(); ++i) fold_of[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));

  // feature matrices are label-independent: compute once per gamma and share
  // across scorers and folds
  std::vector<double> gammas;
  for (double mult : cfg.gamma_multipliers) gammas.push_back(mult * base_gamma);
  std::vector<Eigen::MatrixXd> phi_by_gamma;
  phi_by_gamma.reserve(gammas.size());
  for (double g : gammas) phi_by_gamma.push_back(detail::rbf_features(xs, centers, g));

  std::vector<VoteClassifier::Scorer> scorers;
  for (std::size_t s = 0; s + 1 < k; ++s) {
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i)
      y[i] = train.record(static_cast<std::size_t>(i)).class_id <= static_cast<int>(s) ? 1.0 : 0.0;
    if (y.sum() == 0.0 || y.sum() == static_cast<double>(n))
      throw validation_error("binary split " + std::to_string(s) + " has an empty side");

    double best_score = -1.0;
    std::size_t best_g = 0;
    double best_ridge = cfg.ridge_grid.front();
    for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
      for (double ridge : cfg.ridge_grid) {
        std::size_t hits = 0;
        for (int f = 0; f < folds; ++f) {
          std::vector<Eigen::Index> tr, va;
          for (Eigen::Index i = 0; i < n; ++i)
            (fold_of[static_cast<std::size_t>(i)] == f ? va : tr).push_back(i);
          if (tr.empty() || va.empty()) continue;
          Eigen::MatrixXd phi_tr(static_cast<Eigen::Index>(tr.size()), phi_by_gamma[gi].cols());
          Eigen::VectorXd y_tr(static_cast<Eigen::Index>(tr.size()));
          for (std::size_t i = 0; i < tr.size(); ++i) {
            phi_tr.row(static_cast<Eigen::Index>(i)) = phi_by_gamma[gi].row(tr[i]);
            y_tr[static_cast<Eigen::Index>(i)] = y[tr[i]];
          }
          const Eigen::VectorXd w =
              detail::fit_logistic(phi_tr, y_tr, ridge, cfg.cv_newton_iterations);
          for (Eigen::Index i : va) {
            const bool pos = phi_by_gamma[gi].row(i).dot(w) >= 0.0;
            if (pos == (y[i] > 0.5)) ++hits;
          }
        }
        const double score = static_cast<double>(hits) / static_cast<double>(n);
        if (score > best_score) {
          best_score = score;
          best_g = gi;
          best_ridge = ridge;
        }
      }
    }

    const Eigen::VectorXd w = detail::fit_logistic(phi_by_gamma[best_g], y, best_ridge,
                                                   cfg.final_newton_iterations);
    scorers.push_back({gammas[best_g], w});
  }

  return VoteClassifier(k, mean, sd, centers, std::move(scorers));
}

inline ConfusionMatrix evaluate(const VoteClassifier& clf, const LabeledDataset& test) {
  if (test.size() == 0) throw validation_error("test set is empty");
  if (test.num_classes() != clf.num_classes())
    throw validation_error("classifier and test set disagree on class count");
  ConfusionMatrix m(clf.num_classes());
  for (const auto& r : test.records()) m.record(clf.classify(r.x), r.class_id);
  return m;
}

// Accuracy of the constant classifier that always predicts the most frequent
// class; the floor that privatization drives an adversary toward.
inline double majority_baseline(const LabeledDataset& test) {
  if (test.size() == 0) throw validation_error("test set is empty");
  const auto counts = test.class_counts();
  const std::size_t top = *std::max_element(counts.begin(), counts.end());
  return static_cast<double>(top) / static_cast<double>(test.size());
}

// MAP attack: fraction of test points whose argmax posterior matches the true
// class. Ties break toward the lower class index.
inline double bayes_attack_accuracy(const HistogramModel& model, const LabeledDataset& test) {
  if (test.size() == 0) throw validation_error("test set is empty");
  if (model.num_classes() != test.num_classes())
    throw validation_error("model and test set disagree on class count");
  std::size_t hits = 0;
  for (const auto& r : test.records()) {
    const Eigen::VectorXd post = posterior(model, r.x);
    int arg = 0;
    for (Eigen::Index c = 1; c < post.size(); ++c) {
      if (post[c] > post[arg]) arg = static_cast<int>(c);
    }
    if (arg == r.class_id) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

}  // namespace privmap
