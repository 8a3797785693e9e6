#include "ml/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace ml {

Kernel Kernel::make_polynomial(double gamma, double coef0, int degree) {
    if (gamma <= 0.0) throw std::invalid_argument("polynomial kernel: gamma must be > 0");
    if (degree < 1) throw std::invalid_argument("polynomial kernel: degree must be >= 1");
    return {KernelKind::polynomial, gamma, coef0, degree};
}

Kernel Kernel::make_rbf(double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("rbf kernel: gamma must be > 0");
    return {KernelKind::rbf, gamma, 0.0, 1};
}

double kernel_eval(const Kernel& k, std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("kernel_eval: dimension mismatch");
    switch (k.kind) {
        case KernelKind::linear:
            return dot(a, b);
        case KernelKind::polynomial: {
            const double base = k.gamma * dot(a, b) + k.coef0;
            double out = 1.0;
            for (int i = 0; i < k.degree; ++i) out *= base;
            return out;
        }
        case KernelKind::rbf:
            return std::exp(-k.gamma * sq_dist(a, b));
    }
    throw std::logic_error("kernel_eval: unknown kind");
}

namespace serial {

Matrix kernel_matrix(const Kernel& k, const Matrix& x) {
    Matrix out(x.rows(), x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = kernel_eval(k, x.row(i), x.row(j));
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

}  // namespace serial

Matrix kernel_matrix(const Kernel& k, const Matrix& x) {
    Matrix out(x.rows(), x.rows());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(dynamic, 16) if (n > 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        for (std::size_t j = 0; j <= ui; ++j) {
            out(ui, j) = kernel_eval(k, x.row(ui), x.row(j));
        }
    }
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < i; ++j) out(j, i) = out(i, j);
    }
    return out;
}

Matrix kernel_matrix(const Kernel& k, const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.rows());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) if (n > 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            out(static_cast<std::size_t>(i), j) = kernel_eval(k, a.row(static_cast<std::size_t>(i)), b.row(j));
        }
    }
    return out;
}

}  // namespace ml
