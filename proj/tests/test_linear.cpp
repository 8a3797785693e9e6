#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ml/linear.hpp"
#include "ml/rng.hpp"
#include "ml/synth.hpp"

using namespace ml;

namespace {

Matrix column(const Vector& v) {
    Matrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
}

}  // namespace

TEST_CASE("ols recovers an exact line") {
    const Matrix x = column({0.0, 1.0, 2.0});
    const Vector y{1.0, 3.0, 5.0};  // y = 2x + 1
    const LinearModel m = fit_ols(x, y);
    CHECK(m.bias == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.weights[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("ols on constant targets") {
    const Matrix x = column({0.0, 1.0, 2.0, 3.0});
    const Vector y{4.0, 4.0, 4.0, 4.0};
    const LinearModel m = fit_ols(x, y);
    CHECK(m.bias == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(m.weights[0] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("ols with a duplicated feature column still predicts exactly") {
    Matrix x(4, 2);
    const Vector base{0.0, 1.0, 2.0, 3.0};
    for (std::size_t i = 0; i < 4; ++i) x(i, 0) = x(i, 1) = base[i];
    const Vector y{1.0, 3.0, 5.0, 7.0};
    const LinearModel m = fit_ols(x, y);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(m.predict(x.row(i)) == doctest::Approx(y[i]).epsilon(1e-8));
    }
}

TEST_CASE("ols residual is orthogonal to every augmented column") {
    Rng rng(13);
    Matrix x(30, 4);
    Vector y(30);
    for (std::size_t i = 0; i < 30; ++i) {
        for (std::size_t j = 0; j < 4; ++j) x(i, j) = rng.uniform(-2.0, 2.0);
        y[i] = rng.uniform(-5.0, 5.0);
    }
    const LinearModel m = fit_ols(x, y);
    Vector r(30);
    for (std::size_t i = 0; i < 30; ++i) r[i] = y[i] - m.predict(x.row(i));
    double bias_dot = 0.0;
    for (double v : r) bias_dot += v;
    CHECK(std::fabs(bias_dot) < 1e-8);
    for (std::size_t j = 0; j < 4; ++j) {
        double d = 0.0;
        for (std::size_t i = 0; i < 30; ++i) d += x(i, j) * r[i];
        CHECK(std::fabs(d) < 1e-8);
    }
}

TEST_CASE("ridge reduces to ols at alpha 0 and shrinks toward the mean") {
    const Matrix x = column({0.0, 1.0, 2.0, 3.0});
    const Vector y{1.0, 3.0, 5.0, 7.0};  // y = 2x + 1, mean 4
    const LinearModel ols = fit_ols(x, y);
    const LinearModel r0 = fit_ridge(x, y, 0.0);
    CHECK(r0.bias == doctest::Approx(ols.bias).epsilon(1e-8));
    CHECK(r0.weights[0] == doctest::Approx(ols.weights[0]).epsilon(1e-8));

    const LinearModel big = fit_ridge(x, y, 1e8);
    CHECK(std::fabs(big.weights[0]) < 1e-4);
    CHECK(big.bias == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("ridge weight norm is non-increasing in alpha") {
    Rng rng(19);
    Matrix x(40, 3);
    Vector y(40);
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
        y[i] = 2.0 * x(i, 0) - x(i, 1) + 0.5 * x(i, 2) + rng.normal(0.0, 0.1);
    }
    double prev = 1e300;
    for (double alpha : {0.0, 1.0, 10.0, 100.0}) {
        const LinearModel m = fit_ridge(x, y, alpha);
        const double norm = norm2(m.weights);
        CHECK(norm <= prev + 1e-12);
        prev = norm;
    }
}

TEST_CASE("lasso matches ols at alpha 0 and zeroes everything for large alpha") {
    Rng rng(3);
    Matrix x(50, 2);
    Vector y(50);
    for (std::size_t i = 0; i < 50; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y[i] = 1.5 * x(i, 0) - 0.5 * x(i, 1) + rng.normal(0.0, 0.05);
    }
    const LinearModel ols = fit_ols(x, y);
    const LassoResult l0 = fit_lasso(x, y, 0.0);
    CHECK(l0.converged);
    CHECK(l0.model.bias == doctest::Approx(ols.bias).epsilon(1e-6));
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(l0.model.weights[j] == doctest::Approx(ols.weights[j]).epsilon(1e-6));
    }

    const LassoResult big = fit_lasso(x, y, 1e6);
    for (double w : big.model.weights) CHECK(w == 0.0);
}

TEST_CASE("lasso zeroes an irrelevant feature while the informative one survives") {
    // Orthogonal design so each coordinate has a closed-form soft threshold.
    const std::size_t n = 8;
    Matrix x(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = (i % 2 == 0) ? 1.0 : -1.0;
        x(i, 1) = (i % 4 < 2) ? 1.0 : -1.0;
    }
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = 2.0 * x(i, 0) + 0.05 * x(i, 1);

    const double alpha = 1.6;
    const LassoResult l = fit_lasso(x, y, alpha);

    // Independent 1-D soft-threshold oracle: w_j = S(x_j.y, alpha/2)/||x_j||^2.
    auto soft = [&](std::size_t j) {
        double rho = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rho += x(i, j) * y[i];
            sq += x(i, j) * x(i, j);
        }
        const double thr = alpha / 2.0;
        if (rho > thr) return (rho - thr) / sq;
        if (rho < -thr) return (rho + thr) / sq;
        return 0.0;
    };
    CHECK(l.model.weights[0] == doctest::Approx(soft(0)).epsilon(1e-9));
    CHECK(l.model.weights[1] == doctest::Approx(soft(1)).epsilon(1e-9));
    CHECK(l.model.weights[1] == 0.0);
    CHECK(l.model.weights[0] > 1.0);
}

TEST_CASE("polynomial feature expansion") {
    const Matrix x = column({2.0});
    const Matrix same = polynomial_features(x, 1);
    CHECK(same.cols() == 1);
    CHECK(same(0, 0) == 2.0);

    const Matrix cubed = polynomial_features(x, 3);
    CHECK(cubed.cols() == 3);
    CHECK(cubed(0, 0) == 2.0);
    CHECK(cubed(0, 1) == 4.0);
    CHECK(cubed(0, 2) == 8.0);

    CHECK_THROWS(polynomial_features(x, 0));
}

TEST_CASE("degree-2 fit recovers the quadratic generator coefficients") {
    const Dataset d = synth_quadratic(60, 11, 0.0);
    Matrix x(60, 1);
    for (std::size_t i = 0; i < 60; ++i) x(i, 0) = d.column("x").num[i];
    const Vector y = d.column("y").num;
    const Matrix feats = polynomial_features(x, 2);
    const LinearModel m = fit_ols(feats, y);
    CHECK(m.bias == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(m.weights[0] == doctest::Approx(-0.3).epsilon(1e-6));
    CHECK(m.weights[1] == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("logistic regression basics") {
    LinearModel zero;
    zero.weights = {0.0, 0.0};
    zero.bias = 0.0;
    const Vector any{3.0, -2.0};
    CHECK(zero.predict_proba(any) == doctest::Approx(0.5));

    // Linearly separable 1-D data.
    const Matrix x = column({-3.0, -2.0, -1.0, 1.0, 2.0, 3.0});
    const Vector y{0.0, 0.0, 0.0, 1.0, 1.0, 1.0};
    const LogisticResult r = fit_logistic(x, y, 0.5, 2000);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(r.model.predict_class(x.row(i)) == static_cast<int>(y[i]));
    }

    CHECK_THROWS(fit_logistic(x, {0.0, 1.0, 2.0, 0.0, 1.0, 0.0}, 0.1, 10));
    CHECK_THROWS(fit_logistic(x, y, -0.1, 10));
}

TEST_CASE("logistic loss is non-increasing at small learning rate") {
    Rng rng(41);
    Matrix x(40, 2);
    Vector y(40);
    for (std::size_t i = 0; i < 40; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y[i] = x(i, 0) + 0.5 * x(i, 1) + rng.normal(0.0, 0.3) > 0.0 ? 1.0 : 0.0;
    }
    const LogisticResult r = fit_logistic(x, y, 0.01, 300);
    for (std::size_t e = 1; e < r.loss_history.size(); ++e) {
        CHECK(r.loss_history[e] <= r.loss_history[e - 1] + 1e-12);
    }
}

TEST_CASE("logistic analytic gradient matches central finite differences") {
    Rng rng(43);
    Matrix x(12, 3);
    Vector y(12);
    for (std::size_t i = 0; i < 12; ++i) {
        for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
        y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
    }
    Vector params{0.3, -0.2, 0.5, 0.1};

    // Analytic gradient of the mean cross-entropy.
    Vector grad(4, 0.0);
    for (std::size_t i = 0; i < 12; ++i) {
        double z = params[0];
        for (std::size_t j = 0; j < 3; ++j) z += params[j + 1] * x(i, j);
        const double err = sigmoid(z) - y[i];
        grad[0] += err;
        for (std::size_t j = 0; j < 3; ++j) grad[j + 1] += err * x(i, j);
    }
    for (double& g : grad) g /= 12.0;

    const double h = 1e-6;
    for (std::size_t k = 0; k < 4; ++k) {
        Vector plus = params, minus = params;
        plus[k] += h;
        minus[k] -= h;
        const double fd = (logistic_loss(x, y, plus) - logistic_loss(x, y, minus)) / (2.0 * h);
        CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("predict_class is invariant under reciprocal rescaling of weights and inputs") {
    LinearModel m;
    m.weights = {1.2, -0.7};
    m.bias = 0.3;
    LinearModel scaled;
    scaled.weights = {1.2 * 5.0, -0.7 * 5.0};
    scaled.bias = 0.3;
    Rng rng(47);
    for (int i = 0; i < 50; ++i) {
        const Vector x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
        const Vector x_over_k{x[0] / 5.0, x[1] / 5.0};
        CHECK(m.predict_class(x) == scaled.predict_class(x_over_k));
    }
}
