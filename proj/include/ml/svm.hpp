#pragma once

#include <cstdint>

#include "ml/kernel.hpp"
#include "ml/matrix.hpp"

namespace ml {

/// max(0, 1 - z); the subgradient used at z = 1 is 0.
double hinge_loss(double z);

/// Two common soft-margin conventions place C on opposite terms; both are
/// exposed so either can be evaluated or optimized.
enum class PrimalObjective {
    /// C ||w||^2 + (1/D) sum hinge(y_i (w.x_i - b))
    margin_weighted,
    /// 0.5 ||w||^2 + C sum hinge(y_i (w.x_i - b))
    slack_weighted,
};

struct SvmModel {
    // Primal form: decision = w.x - b.
    bool is_dual = false;
    Vector w;
    double b = 0.0;
    double c = 1.0;

    // Dual form: decision = sum_i alpha_i y_i K(sv_i, x) + b.
    Kernel kernel = Kernel::make_linear();
    Matrix support_vectors;
    Vector alpha;  // one per support vector
    Vector sv_y;

    double decision_value(std::span<const double> x) const;
    int predict(std::span<const double> x) const;  // -1 or +1
};

double svm_primal_objective(const SvmModel& m, const Matrix& x, const Vector& y,
                            PrimalObjective objective);

/// Subgradient descent with a decaying step and an objective safeguard (a step
/// that raises the objective is retried at half length). objective_trace, when
/// given, receives the objective value after every epoch.
SvmModel fit_svm_primal(const Matrix& x, const Vector& y, double c, std::size_t epochs, double lr,
                        PrimalObjective objective = PrimalObjective::margin_weighted,
                        Vector* objective_trace = nullptr);

struct SvmDualResult {
    SvmModel model;
    bool converged = false;
    double max_kkt_violation = 0.0;
    std::size_t passes = 0;
};

/// SMO-style pairwise coordinate ascent on the dual. The first violator is
/// found by scanning; the partner index is drawn from a seeded generator.
SvmDualResult fit_svm_dual(const Matrix& x, const Vector& y, double c, const Kernel& kernel,
                           std::size_t max_passes = 200, double tol = 1e-5,
                           std::uint64_t seed = 0);

/// Epsilon-insensitive linear SVR: 0.5 ||w||^2 + C sum max(0, |w.x - b - y| - eps).
SvmModel fit_svr_linear(const Matrix& x, const Vector& y, double c, double epsilon,
                        std::size_t epochs, double lr);

double svr_objective(const SvmModel& m, const Matrix& x, const Vector& y, double epsilon);

}  // namespace ml
