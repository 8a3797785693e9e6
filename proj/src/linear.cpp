#include "ml/linear.hpp"

#include <cmath>
#include <stdexcept>

#include "ml/svd.hpp"

namespace ml {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double LinearModel::predict(std::span<const double> x) const {
    if (x.size() != weights.size()) throw std::invalid_argument("LinearModel: feature count");
    return bias + dot(weights, x);
}

Vector LinearModel::predict(const Matrix& x) const {
    Vector out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(x.row(i));
    return out;
}

double LinearModel::predict_proba(std::span<const double> x) const {
    return sigmoid(predict(x));
}

int LinearModel::predict_class(std::span<const double> x) const {
    return predict_proba(x) >= 0.5 ? 1 : 0;
}

namespace {

Matrix augment_ones(const Matrix& x) {
    Matrix out(x.rows(), x.cols() + 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        out(i, 0) = 1.0;
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j + 1) = x(i, j);
    }
    return out;
}

LinearModel from_params(const Vector& params) {
    LinearModel m;
    m.bias = params[0];
    m.weights.assign(params.begin() + 1, params.end());
    return m;
}

}  // namespace

LinearModel fit_ols(const Matrix& x, const Vector& y) {
    if (x.rows() == 0 || x.rows() != y.size()) throw std::invalid_argument("fit_ols: bad shapes");
    const Matrix xa = augment_ones(x);
    const Vector params = matvec(pseudoinverse(xa), y);
    return from_params(params);
}

LinearModel fit_ridge(const Matrix& x, const Vector& y, double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("fit_ridge: alpha must be >= 0");
    if (x.rows() == 0 || x.rows() != y.size()) throw std::invalid_argument("fit_ridge: bad shapes");
    const Matrix xa = augment_ones(x);
    Matrix gram = matmul(transpose(xa), xa);
    for (std::size_t j = 1; j < gram.cols(); ++j) gram(j, j) += alpha;  // bias unpenalized
    const Vector rhs = vecmat(y, xa);
    const Vector params = matvec(pseudoinverse(gram), rhs);
    return from_params(params);
}

LassoResult fit_lasso(const Matrix& x, const Vector& y, double alpha, std::size_t max_iter,
                      double tol) {
    if (alpha < 0.0) throw std::invalid_argument("fit_lasso: alpha must be >= 0");
    if (x.rows() == 0 || x.rows() != y.size()) throw std::invalid_argument("fit_lasso: bad shapes");
    const std::size_t n = x.rows(), p = x.cols();

    Vector col_sq(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) col_sq[j] += x(i, j) * x(i, j);
    }

    Vector w(p, 0.0);
    double bias = 0.0;
    Vector resid = y;  // y - bias - X w, maintained incrementally

    LassoResult out;
    for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
        double max_change = 0.0;

        // Unpenalized intercept: mean of the bias-free residual.
        double mean_r = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean_r += resid[i];
        mean_r /= static_cast<double>(n);
        bias += mean_r;
        for (std::size_t i = 0; i < n; ++i) resid[i] -= mean_r;
        max_change = std::max(max_change, std::fabs(mean_r));

        for (std::size_t j = 0; j < p; ++j) {
            if (col_sq[j] == 0.0) continue;
            double rho = 0.0;
            for (std::size_t i = 0; i < n; ++i) rho += x(i, j) * resid[i];
            rho += col_sq[j] * w[j];
            // Objective ||Xw - y||^2 + alpha sum|w|: soft threshold at alpha/2.
            double wj = 0.0;
            const double thr = alpha / 2.0;
            if (rho > thr) {
                wj = (rho - thr) / col_sq[j];
            } else if (rho < -thr) {
                wj = (rho + thr) / col_sq[j];
            }
            const double delta = wj - w[j];
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i) resid[i] -= delta * x(i, j);
                w[j] = wj;
            }
            max_change = std::max(max_change, std::fabs(delta));
        }
        out.final_gap = max_change;
        if (max_change < tol) {
            out.converged = true;
            break;
        }
    }
    out.model.weights = std::move(w);
    out.model.bias = bias;
    return out;
}

Matrix polynomial_features(const Matrix& x, std::size_t degree) {
    if (degree < 1) throw std::invalid_argument("polynomial_features: degree must be >= 1");
    Matrix out(x.rows(), x.cols() * degree);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::size_t c = 0;
        for (std::size_t j = 0; j < x.cols(); ++j) {
            double pow_v = 1.0;
            for (std::size_t d = 1; d <= degree; ++d) {
                pow_v *= x(i, j);
                out(i, c++) = pow_v;
            }
        }
    }
    return out;
}

double logistic_loss(const Matrix& x, const Vector& y, const Vector& params) {
    const std::size_t n = x.rows();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = params[0];
        for (std::size_t j = 0; j < x.cols(); ++j) z += params[j + 1] * x(i, j);
        // -[y log p + (1-y) log(1-p)] in a numerically stable form:
        // log(1+exp(z)) - y z
        const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        loss += softplus - y[i] * z;
    }
    return loss / static_cast<double>(n);
}

LogisticResult fit_logistic(const Matrix& x, const Vector& y, double lr, std::size_t epochs) {
    if (lr <= 0.0) throw std::invalid_argument("fit_logistic: lr must be > 0");
    if (x.rows() == 0 || x.rows() != y.size()) {
        throw std::invalid_argument("fit_logistic: bad shapes");
    }
    for (double v : y) {
        if (v != 0.0 && v != 1.0) throw std::invalid_argument("fit_logistic: labels must be 0/1");
    }
    const std::size_t n = x.rows(), p = x.cols();
    Vector params(p + 1, 0.0);
    LogisticResult out;
    out.loss_history.reserve(epochs);
    Vector grad(p + 1);
    for (std::size_t e = 0; e < epochs; ++e) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double z = params[0];
            for (std::size_t j = 0; j < p; ++j) z += params[j + 1] * x(i, j);
            const double err = sigmoid(z) - y[i];
            grad[0] += err;
            for (std::size_t j = 0; j < p; ++j) grad[j + 1] += err * x(i, j);
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < params.size(); ++j) params[j] -= lr * grad[j] * inv_n;
        out.loss_history.push_back(logistic_loss(x, y, params));
    }
    out.model.bias = params[0];
    out.model.weights.assign(params.begin() + 1, params.end());
    return out;
}

}  // namespace ml
