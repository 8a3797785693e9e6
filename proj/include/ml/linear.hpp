#pragma once

#include "ml/matrix.hpp"

namespace ml {

struct LinearModel {
    Vector weights;  // one per feature
    double bias = 0.0;

    double predict(std::span<const double> x) const;
    Vector predict(const Matrix& x) const;

    /// Sigmoid of the linear score; only meaningful for logistic fits.
    double predict_proba(std::span<const double> x) const;
    /// Thresholds predict_proba at 0.5 (probability >= 0.5 maps to 1).
    int predict_class(std::span<const double> x) const;
};

enum class PenaltyKind { none, ridge, lasso };

struct RegPenalty {
    PenaltyKind kind = PenaltyKind::none;
    double alpha = 0.0;
};

/// Least squares via the pseudoinverse of the bias-augmented data matrix;
/// rank-deficient inputs get the minimum-norm solution.
LinearModel fit_ols(const Matrix& x, const Vector& y);

/// Closed-form ridge solution with the bias left unpenalized.
LinearModel fit_ridge(const Matrix& x, const Vector& y, double alpha);

struct LassoResult {
    LinearModel model;
    bool converged = false;
    std::size_t iterations = 0;
    double final_gap = 0.0;  // max coordinate change of the last sweep
};

/// Cyclic coordinate descent with soft thresholding; bias unpenalized.
/// Callers are expected to standardize features first.
LassoResult fit_lasso(const Matrix& x, const Vector& y, double alpha,
                      std::size_t max_iter = 10000, double tol = 1e-10);

/// Appends per-feature powers x, x^2, ..., x^degree (no cross terms).
Matrix polynomial_features(const Matrix& x, std::size_t degree);

struct LogisticResult {
    LinearModel model;
    Vector loss_history;  // mean cross-entropy per epoch
};

/// Full-batch gradient descent on the mean cross-entropy; labels in {0,1}.
LogisticResult fit_logistic(const Matrix& x, const Vector& y, double lr, std::size_t epochs);

/// Mean cross-entropy loss of a parameter vector (bias first) on (x, y).
double logistic_loss(const Matrix& x, const Vector& y, const Vector& params);

double sigmoid(double x);

}  // namespace ml
