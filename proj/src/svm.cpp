#include "ml/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ml/rng.hpp"

namespace ml {

double hinge_loss(double z) { return std::max(0.0, 1.0 - z); }

double SvmModel::decision_value(std::span<const double> x) const {
    if (!is_dual) return dot(w, x) - b;
    double f = b;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        f += alpha[i] * sv_y[i] * kernel_eval(kernel, support_vectors.row(i), x);
    }
    return f;
}

int SvmModel::predict(std::span<const double> x) const {
    return decision_value(x) >= 0.0 ? 1 : -1;
}

namespace {

void require_binary_pm1(const Vector& y) {
    for (double v : y) {
        if (v != 1.0 && v != -1.0) {
            throw std::invalid_argument("svm: labels must be -1 or +1");
        }
    }
}

}  // namespace

double svm_primal_objective(const SvmModel& m, const Matrix& x, const Vector& y,
                            PrimalObjective objective) {
    const std::size_t n = x.rows();
    double hinge_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        hinge_sum += hinge_loss(y[i] * (dot(m.w, x.row(i)) - m.b));
    }
    const double wsq = dot(m.w, m.w);
    if (objective == PrimalObjective::margin_weighted) {
        return m.c * wsq + hinge_sum / static_cast<double>(n);
    }
    return 0.5 * wsq + m.c * hinge_sum;
}

SvmModel fit_svm_primal(const Matrix& x, const Vector& y, double c, std::size_t epochs, double lr,
                        PrimalObjective objective, Vector* objective_trace) {
    if (c <= 0.0) throw std::invalid_argument("fit_svm_primal: C must be > 0");
    require_binary_pm1(y);
    const std::size_t n = x.rows(), p = x.cols();

    SvmModel m;
    m.w.assign(p, 0.0);
    m.b = 0.0;
    m.c = c;

    Vector grad_w(p);
    double obj = svm_primal_objective(m, x, y, objective);
    for (std::size_t e = 0; e < epochs; ++e) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        double grad_b = 0.0;
        const double viol_scale = objective == PrimalObjective::margin_weighted
                                      ? 1.0 / static_cast<double>(n)
                                      : c;
        for (std::size_t i = 0; i < n; ++i) {
            if (y[i] * (dot(m.w, x.row(i)) - m.b) < 1.0) {
                for (std::size_t j = 0; j < p; ++j) grad_w[j] -= viol_scale * y[i] * x(i, j);
                grad_b += viol_scale * y[i];
            }
        }
        const double w_scale = objective == PrimalObjective::margin_weighted ? 2.0 * c : 1.0;
        for (std::size_t j = 0; j < p; ++j) grad_w[j] += w_scale * m.w[j];

        // Decaying step; retry at half length if the objective would rise so
        // the reported objective trace is non-increasing.
        double step = lr / (1.0 + static_cast<double>(e) / 50.0);
        for (int tries = 0; tries < 30; ++tries) {
            SvmModel cand = m;
            for (std::size_t j = 0; j < p; ++j) cand.w[j] -= step * grad_w[j];
            cand.b -= step * grad_b;
            const double cand_obj = svm_primal_objective(cand, x, y, objective);
            if (cand_obj <= obj) {
                m = std::move(cand);
                obj = cand_obj;
                break;
            }
            step *= 0.5;
        }
        if (objective_trace) objective_trace->push_back(obj);
    }
    return m;
}

double svr_objective(const SvmModel& m, const Matrix& x, const Vector& y, double epsilon) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        loss += std::max(0.0, std::fabs(dot(m.w, x.row(i)) - m.b - y[i]) - epsilon);
    }
    return 0.5 * dot(m.w, m.w) + m.c * loss;
}

SvmModel fit_svr_linear(const Matrix& x, const Vector& y, double c, double epsilon,
                        std::size_t epochs, double lr) {
    if (c <= 0.0 || epsilon < 0.0) throw std::invalid_argument("fit_svr_linear: bad C or epsilon");
    const std::size_t n = x.rows(), p = x.cols();
    SvmModel m;
    m.w.assign(p, 0.0);
    m.b = 0.0;
    m.c = c;

    Vector grad_w(p);
    double obj = svr_objective(m, x, y, epsilon);
    for (std::size_t e = 0; e < epochs; ++e) {
        grad_w = m.w;  // from 0.5||w||^2
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = dot(m.w, x.row(i)) - m.b - y[i];
            if (std::fabs(r) > epsilon) {
                const double s = c * (r > 0.0 ? 1.0 : -1.0);
                for (std::size_t j = 0; j < p; ++j) grad_w[j] += s * x(i, j);
                grad_b -= s;
            }
        }
        double step = lr / (1.0 + static_cast<double>(e) / 50.0);
        for (int tries = 0; tries < 30; ++tries) {
            SvmModel cand = m;
            for (std::size_t j = 0; j < p; ++j) cand.w[j] -= step * grad_w[j];
            cand.b -= step * grad_b;
            const double cand_obj = svr_objective(cand, x, y, epsilon);
            if (cand_obj <= obj) {
                m = std::move(cand);
                obj = cand_obj;
                break;
            }
            step *= 0.5;
        }
    }
    return m;
}

namespace {

double kkt_violation(double alpha, double c, double yf) {
    if (alpha <= 1e-12) return std::max(0.0, 1.0 - yf);
    if (alpha >= c - 1e-12) return std::max(0.0, yf - 1.0);
    return std::fabs(yf - 1.0);
}

}  // namespace

SvmDualResult fit_svm_dual(const Matrix& x, const Vector& y, double c, const Kernel& kernel,
                           std::size_t max_passes, double tol, std::uint64_t seed) {
    if (c <= 0.0) throw std::invalid_argument("fit_svm_dual: C must be > 0");
    require_binary_pm1(y);
    const std::size_t n = x.rows();
    const Matrix k = kernel_matrix(kernel, x);

    Vector alpha(n, 0.0);
    double b = 0.0;
    Rng rng(seed);

    auto decision = [&](std::size_t i) {
        double f = b;
        for (std::size_t j = 0; j < n; ++j) {
            if (alpha[j] > 0.0) f += alpha[j] * y[j] * k(i, j);
        }
        return f;
    };

    SvmDualResult out;
    std::size_t quiet = 0;
    while (out.passes < max_passes && quiet < 2) {
        ++out.passes;
        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ei = decision(i) - y[i];
            const double ri = ei * y[i];
            const bool violates = (ri < -tol && alpha[i] < c) || (ri > tol && alpha[i] > 0.0);
            if (!violates) continue;

            std::size_t j = rng.index(n - 1);
            if (j >= i) ++j;
            const double ej = decision(j) - y[j];

            double lo, hi;
            if (y[i] != y[j]) {
                lo = std::max(0.0, alpha[j] - alpha[i]);
                hi = std::min(c, c + alpha[j] - alpha[i]);
            } else {
                lo = std::max(0.0, alpha[i] + alpha[j] - c);
                hi = std::min(c, alpha[i] + alpha[j]);
            }
            if (lo >= hi) continue;
            const double eta = 2.0 * k(i, j) - k(i, i) - k(j, j);
            if (eta >= 0.0) continue;

            double aj = alpha[j] - y[j] * (ei - ej) / eta;
            aj = std::clamp(aj, lo, hi);
            if (std::fabs(aj - alpha[j]) < 1e-12) continue;
            const double ai = alpha[i] + y[i] * y[j] * (alpha[j] - aj);

            const double b1 = b - ei - y[i] * (ai - alpha[i]) * k(i, i) -
                              y[j] * (aj - alpha[j]) * k(i, j);
            const double b2 = b - ej - y[i] * (ai - alpha[i]) * k(i, j) -
                              y[j] * (aj - alpha[j]) * k(j, j);
            alpha[i] = ai;
            alpha[j] = aj;
            if (ai > 0.0 && ai < c) {
                b = b1;
            } else if (aj > 0.0 && aj < c) {
                b = b2;
            } else {
                b = 0.5 * (b1 + b2);
            }
            ++changed;
        }
        quiet = changed == 0 ? quiet + 1 : 0;
    }

    // Recover the intercept from margin support vectors; fall back to the
    // midpoint of the interval the bound constraints allow.
    Vector g(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (alpha[j] > 0.0) s += alpha[j] * y[j] * k(i, j);
        }
        g[i] = s;
    }
    double b_sum = 0.0;
    std::size_t b_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 1e-8 && alpha[i] < c - 1e-8) {
            b_sum += y[i] - g[i];
            ++b_count;
        }
    }
    if (b_count > 0) {
        b = b_sum / static_cast<double>(b_count);
    } else {
        // Bounds: alpha=0 requires y(g+b) >= 1; alpha=C requires y(g+b) <= 1.
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double bound = y[i] - g[i];
            const bool at_upper = alpha[i] >= c - 1e-8;
            if ((alpha[i] <= 1e-8 && y[i] > 0.0) || (at_upper && y[i] < 0.0)) {
                lo = std::max(lo, bound);
            } else {
                hi = std::min(hi, bound);
            }
        }
        if (std::isfinite(lo) && std::isfinite(hi)) {
            b = 0.5 * (lo + hi);
        } else if (std::isfinite(lo)) {
            b = lo;
        } else if (std::isfinite(hi)) {
            b = hi;
        }
    }

    double max_viol = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        max_viol = std::max(max_viol, kkt_violation(alpha[i], c, y[i] * (g[i] + b)));
    }
    out.max_kkt_violation = max_viol;
    out.converged = quiet >= 2;

    SvmModel& m = out.model;
    m.is_dual = true;
    m.kernel = kernel;
    m.c = c;
    m.b = b;
    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 1e-10) sv.push_back(i);
    }
    m.support_vectors = Matrix(sv.size(), x.cols());
    m.alpha.resize(sv.size());
    m.sv_y.resize(sv.size());
    for (std::size_t r = 0; r < sv.size(); ++r) {
        for (std::size_t cidx = 0; cidx < x.cols(); ++cidx) {
            m.support_vectors(r, cidx) = x(sv[r], cidx);
        }
        m.alpha[r] = alpha[sv[r]];
        m.sv_y[r] = y[sv[r]];
    }
    return out;
}

}  // namespace ml
