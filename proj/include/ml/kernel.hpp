#pragma once

#include <span>

#include "ml/matrix.hpp"

namespace ml {

enum class KernelKind { linear, polynomial, rbf };

struct Kernel {
    KernelKind kind = KernelKind::linear;
    double gamma = 1.0;  // polynomial and rbf
    double coef0 = 0.0;  // polynomial "r"
    int degree = 3;      // polynomial "d"

    static Kernel make_linear() { return {KernelKind::linear, 1.0, 0.0, 1}; }
    static Kernel make_polynomial(double gamma, double coef0, int degree);
    static Kernel make_rbf(double gamma);
};

/// linear: a.b; polynomial: (gamma a.b + r)^d; rbf: exp(-gamma ||a-b||^2).
double kernel_eval(const Kernel& k, std::span<const double> a, std::span<const double> b);

namespace serial {
Matrix kernel_matrix(const Kernel& k, const Matrix& x);
}

/// Full Gram matrix of the rows of x; rows are filled in parallel.
Matrix kernel_matrix(const Kernel& k, const Matrix& x);

/// Cross Gram matrix between the rows of a and the rows of b, (na x nb).
Matrix kernel_matrix(const Kernel& k, const Matrix& a, const Matrix& b);

}  // namespace ml
