#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ml/matrix.hpp"

namespace ml {

double mse(const Vector& y, const Vector& y_pred);
double rmse(const Vector& y, const Vector& y_pred);
/// 100 * rmse / mean(y). Requires mean(y) != 0.
double nrmse_percent(const Vector& y, const Vector& y_pred);
/// 1 - SS_res / SS_tot. Requires y non-constant.
double r2(const Vector& y, const Vector& y_pred);

/// Binary confusion counts; labels must be 0 or 1.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fn + fp + tn; }
};

ConfusionMatrix confusion(const std::vector<int>& y, const std::vector<int>& y_pred);
/// TP/(TP+FP); throws when TP+FP = 0.
double precision(const ConfusionMatrix& c);
/// TP/(TP+FN); throws when TP+FN = 0.
double recall(const ConfusionMatrix& c);
/// Harmonic mean of precision and recall.
double f1(const ConfusionMatrix& c);

/// k x k count table, rows = actual, cols = predicted, labels in [0, k).
Matrix confusion_multiclass(const std::vector<int>& y, const std::vector<int>& y_pred, int k);
/// One-vs-rest per-class precision/recall.
Vector precision_per_class(const Matrix& counts);
Vector recall_per_class(const Matrix& counts);

using DistanceFn = std::function<double(std::span<const double>, std::span<const double>)>;

double euclidean(std::span<const double> a, std::span<const double> b);

/// Mean silhouette coefficient: per point, (b - a)/max(a, b) with a the mean
/// intra-cluster distance (self excluded) and b the smallest mean distance to
/// another cluster. Points in singleton clusters contribute 0.
double silhouette_score(const Matrix& points, const std::vector<int>& labels,
                        const DistanceFn& distance = euclidean);

}  // namespace ml
