#include "ml/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ml {

namespace {

// One-sided Jacobi: orthogonalize the columns of u in place, accumulating the
// rotations into v. On exit u = U * diag(sigma), v = V.
void jacobi_orthogonalize(Matrix& u, Matrix& v) {
    const std::size_t m = u.rows(), n = u.cols();
    const double tol = 1e-14;
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += u(i, p) * u(i, p);
                    beta += u(i, q) * u(i, q);
                    gamma += u(i, p) * u(i, q);
                }
                if (std::fabs(gamma) <= tol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double up = u(i, p), uq = u(i, q);
                    u(i, p) = c * up - s * uq;
                    u(i, q) = s * up + c * uq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }
}

}  // namespace

SvdResult svd(const Matrix& a) {
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("svd: empty matrix");
    if (a.rows() < a.cols()) {
        SvdResult t = svd(transpose(a));
        return {std::move(t.v), std::move(t.sigma), std::move(t.u)};
    }
    Matrix u = a;
    Matrix v = Matrix::identity(a.cols());
    jacobi_orthogonalize(u, v);

    const std::size_t n = a.cols();
    Vector sigma(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < u.rows(); ++i) s += u(i, j) * u(i, j);
        sigma[j] = std::sqrt(s);
    }
    // Sort descending, normalize columns of u.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });
    Matrix us(u.rows(), n), vs(v.rows(), n);
    Vector ss(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        ss[j] = sigma[src];
        const double inv = sigma[src] > 0.0 ? 1.0 / sigma[src] : 0.0;
        for (std::size_t i = 0; i < u.rows(); ++i) us(i, j) = u(i, src) * inv;
        for (std::size_t i = 0; i < v.rows(); ++i) vs(i, j) = v(i, src);
    }
    return {std::move(us), std::move(ss), std::move(vs)};
}

Matrix pseudoinverse(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) {
        throw std::invalid_argument("pseudoinverse: empty matrix");
    }
    SvdResult d = svd(m);
    const double smax = d.sigma.empty() ? 0.0 : d.sigma.front();
    const double cut = 1e-12 * smax;
    // pinv = V * diag(1/sigma) * U^T
    Matrix vs = d.v;
    for (std::size_t j = 0; j < d.sigma.size(); ++j) {
        const double inv = d.sigma[j] > cut && d.sigma[j] > 0.0 ? 1.0 / d.sigma[j] : 0.0;
        for (std::size_t i = 0; i < vs.rows(); ++i) vs(i, j) *= inv;
    }
    return matmul(vs, transpose(d.u));
}

EigResult eig_sym(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("eig_sym: not square");
    const std::size_t n = a.rows();
    Matrix d = a;
    Matrix v = Matrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += d(p, q) * d(p, q);
        if (off < 1e-24) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(d(p, q)) < 1e-300) continue;
                const double theta = (d(q, q) - d(p, p)) / (2.0 * d(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double dip = d(i, p), diq = d(i, q);
                    d(i, p) = c * dip - s * diq;
                    d(i, q) = s * dip + c * diq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double dpi = d(p, i), dqi = d(q, i);
                    d(p, i) = c * dpi - s * dqi;
                    d(q, i) = s * dpi + c * dqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return d(x, x) > d(y, y); });
    EigResult out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = d(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

Matrix cholesky(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("cholesky: not square");
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0) throw std::runtime_error("cholesky: matrix not SPD");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

Vector cholesky_solve(const Matrix& l, const Vector& b) {
    const std::size_t n = l.rows();
    Vector y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

}  // namespace ml
