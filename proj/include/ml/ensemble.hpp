#pragma once

#include <functional>
#include <memory>
#include <string>

#include "ml/matrix.hpp"
#include "ml/rng.hpp"
#include "ml/tree.hpp"

namespace ml {

struct BootstrapSample {
    std::vector<std::size_t> in_bag;  // n draws with replacement
    std::vector<std::size_t> oob;     // ascending complement
};

BootstrapSample bootstrap_sample(std::size_t n, Rng& rng);

using Predictor = std::function<double(std::span<const double>)>;

struct BaseLearnerSpec {
    std::string name;
    std::function<Predictor(const Matrix&, const Vector&)> fit;
};

enum class EnsembleTask { regression, classification };

struct BaggingModel {
    EnsembleTask task = EnsembleTask::regression;
    std::vector<Predictor> learners;
    std::vector<BootstrapSample> samples;
    /// OOB mean squared error (regression) or OOB accuracy (classification).
    double oob_score = 0.0;
    /// Rows that were in-bag for every learner and so never evaluated.
    std::size_t oob_skipped = 0;

    double predict(std::span<const double> x) const;
};

/// Learners train independently on their bootstrap samples (in parallel, with
/// per-learner derived seeds). bootstrap = false trains every learner on the
/// full sample.
BaggingModel fit_bagging(const Matrix& x, const Vector& y, const BaseLearnerSpec& base,
                         std::size_t n_estimators, EnsembleTask task, Rng& rng,
                         bool bootstrap = true);

struct RandomForestModel {
    TreeTask task = TreeTask::classification;
    std::vector<std::unique_ptr<TreeNode>> trees;
    std::vector<std::string> feature_names;
    std::vector<std::string> y_vocab;  // classification

    double predict_value(std::span<const double> x) const;  // regression mean
    std::string predict_label(std::span<const double> x) const;  // majority vote
};

/// Bagged trees with a per-split uniform feature subset; trees are unpruned
/// and depth-unlimited unless the options say otherwise.
RandomForestModel fit_random_forest(const Matrix& x, const Vector& y, std::size_t n_estimators,
                                    std::size_t max_features, TreeOptions tree_options, Rng& rng,
                                    TreeTask task = TreeTask::regression, bool bootstrap = true);

struct FeatureImportance {
    std::vector<std::string> names;
    Vector scores;  // non-negative, sum to 1
};

FeatureImportance mdi_importance(const RandomForestModel& forest);

struct Stump {
    std::size_t feature = 0;
    double threshold = 0.0;
    double left_value = -1.0;   // prediction when x[feature] < threshold
    double right_value = 1.0;

    double predict(std::span<const double> x) const {
        return x[feature] < threshold ? left_value : right_value;
    }
};

/// Best weighted-gini split over all features and midpoint thresholds, with
/// weighted-majority leaves; AdaBoost's weak learner.
Stump fit_stump_weighted(const Matrix& x, const Vector& y, const Vector& weights);

struct AdaBoostModel {
    std::vector<Stump> stumps;
    Vector stump_weights;
    /// Instance-weight snapshots per round (round 0 = uniform start).
    std::vector<Vector> weight_history;

    double decision_value(std::span<const double> x) const;
    int predict(std::span<const double> x) const;  // -1 or +1
};

AdaBoostModel fit_adaboost(const Matrix& x, const Vector& y, std::size_t n_estimators, Rng& rng);

struct GBoostOptions {
    TreeOptions tree;
    double learning_rate = 0.1;
    /// L2 shrinkage on leaf values: leaf = sum(residual) / (n_leaf + lambda).
    double leaf_lambda = 0.0;
    /// When > 0, each tree sees only this many randomly chosen features.
    std::size_t features_per_tree = 0;
    std::uint64_t seed = 0;
};

struct GBoostModel {
    double f0 = 0.0;
    double learning_rate = 0.1;
    std::vector<std::unique_ptr<TreeNode>> trees;
    std::vector<std::vector<std::size_t>> tree_features;  // column map per tree
    std::vector<std::string> feature_names;

    double predict(std::span<const double> x) const;
    /// Prediction using only the first t trees.
    double predict_staged(std::span<const double> x, std::size_t t) const;
};

/// Squared-error gradient boosting: F0 = mean(y), each round fits a
/// regression tree to the current residuals.
GBoostModel fit_gradient_boosting(const Matrix& x, const Vector& y, std::size_t n_estimators,
                                  const GBoostOptions& options);

FeatureImportance mdi_importance(const GBoostModel& model);

/// Non-negative least squares min ||A c - b||^2, c >= 0, by coordinate
/// descent with clamping; converges to the KKT point of the convex problem.
Vector nnls(const Matrix& a, const Vector& b, std::size_t max_iter = 10000, double tol = 1e-12);

struct StackingModel {
    std::vector<Predictor> first_level;  // refit on the full training set
    std::vector<std::string> names;
    Vector coefficients;  // non-negative
    double oof_mse_stack = 0.0;
    Vector oof_mse_each;

    double predict(std::span<const double> x) const;
};

/// Out-of-fold first-level predictions form the meta features; the meta
/// learner is non-negative least squares.
StackingModel fit_stacking(const std::vector<BaseLearnerSpec>& first_level_specs, const Matrix& x,
                           const Vector& y, std::size_t k_folds, Rng& rng);

}  // namespace ml
