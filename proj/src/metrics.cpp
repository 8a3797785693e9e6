#include "ml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace ml {

namespace {
void require_same_size(const Vector& y, const Vector& y_pred) {
    if (y.size() != y_pred.size() || y.empty()) {
        throw std::invalid_argument("metrics: length mismatch or empty input");
    }
}
}  // namespace

double mse(const Vector& y, const Vector& y_pred) {
    require_same_size(y, y_pred);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - y_pred[i];
        s += d * d;
    }
    return s / static_cast<double>(y.size());
}

double rmse(const Vector& y, const Vector& y_pred) { return std::sqrt(mse(y, y_pred)); }

double nrmse_percent(const Vector& y, const Vector& y_pred) {
    require_same_size(y, y_pred);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    if (mean == 0.0) throw std::invalid_argument("nrmse_percent: mean(y) is zero");
    return 100.0 * rmse(y, y_pred) / mean;
}

double r2(const Vector& y, const Vector& y_pred) {
    require_same_size(y, y_pred);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - y_pred[i]) * (y[i] - y_pred[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0.0) throw std::invalid_argument("r2: y has zero variance");
    return 1.0 - ss_res / ss_tot;
}

ConfusionMatrix confusion(const std::vector<int>& y, const std::vector<int>& y_pred) {
    if (y.size() != y_pred.size() || y.empty()) {
        throw std::invalid_argument("confusion: length mismatch or empty input");
    }
    ConfusionMatrix c;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0 && y[i] != 1) throw std::invalid_argument("confusion: labels must be 0/1");
        if (y_pred[i] != 0 && y_pred[i] != 1) {
            throw std::invalid_argument("confusion: predictions must be 0/1");
        }
        if (y[i] == 1) {
            (y_pred[i] == 1 ? c.tp : c.fn)++;
        } else {
            (y_pred[i] == 1 ? c.fp : c.tn)++;
        }
    }
    return c;
}

double precision(const ConfusionMatrix& c) {
    if (c.tp + c.fp == 0) throw std::invalid_argument("precision: no positive predictions");
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall(const ConfusionMatrix& c) {
    if (c.tp + c.fn == 0) throw std::invalid_argument("recall: no positive examples");
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double f1(const ConfusionMatrix& c) {
    const double p = precision(c);
    const double r = recall(c);
    if (p + r == 0.0) throw std::invalid_argument("f1: precision and recall both zero");
    return 2.0 / (1.0 / p + 1.0 / r);
}

Matrix confusion_multiclass(const std::vector<int>& y, const std::vector<int>& y_pred, int k) {
    if (y.size() != y_pred.size() || y.empty()) {
        throw std::invalid_argument("confusion_multiclass: length mismatch or empty input");
    }
    Matrix counts(static_cast<std::size_t>(k), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0 || y[i] >= k || y_pred[i] < 0 || y_pred[i] >= k) {
            throw std::invalid_argument("confusion_multiclass: label out of range");
        }
        counts(static_cast<std::size_t>(y[i]), static_cast<std::size_t>(y_pred[i])) += 1.0;
    }
    return counts;
}

Vector precision_per_class(const Matrix& counts) {
    Vector out(counts.cols());
    for (std::size_t j = 0; j < counts.cols(); ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < counts.rows(); ++i) col += counts(i, j);
        if (col == 0.0) throw std::invalid_argument("precision_per_class: class never predicted");
        out[j] = counts(j, j) / col;
    }
    return out;
}

Vector recall_per_class(const Matrix& counts) {
    Vector out(counts.rows());
    for (std::size_t i = 0; i < counts.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < counts.cols(); ++j) row += counts(i, j);
        if (row == 0.0) throw std::invalid_argument("recall_per_class: class has no examples");
        out[i] = counts(i, i) / row;
    }
    return out;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(sq_dist(a, b));
}

double silhouette_score(const Matrix& points, const std::vector<int>& labels,
                        const DistanceFn& distance) {
    const std::size_t n = points.rows();
    if (labels.size() != n || n == 0) {
        throw std::invalid_argument("silhouette_score: labels/points mismatch");
    }
    std::map<int, std::size_t> cluster_size;
    for (int l : labels) cluster_size[l]++;
    if (cluster_size.size() < 2) {
        throw std::invalid_argument("silhouette_score: needs at least 2 clusters");
    }

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (cluster_size[labels[i]] < 2) continue;  // singleton contributes 0
        std::map<int, double> dist_sum;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            dist_sum[labels[j]] += distance(points.row(i), points.row(j));
        }
        const double a = dist_sum[labels[i]] / static_cast<double>(cluster_size[labels[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [cl, sum] : dist_sum) {
            if (cl == labels[i]) continue;
            b = std::min(b, sum / static_cast<double>(cluster_size[cl]));
        }
        const double m = std::max(a, b);
        total += m > 0.0 ? (b - a) / m : 0.0;
    }
    return total / static_cast<double>(n);
}

}  // namespace ml
