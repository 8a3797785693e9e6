#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ml/rng.hpp"
#include "ml/svm.hpp"

using namespace ml;

TEST_CASE("kernel evaluation golden cases") {
    const Vector a{1.0, 2.0}, b{3.0, 4.0};
    CHECK(kernel_eval(Kernel::make_rbf(0.5), a, a) == doctest::Approx(1.0));
    CHECK(kernel_eval(Kernel::make_polynomial(1.0, 0.0, 2), a, b) == doctest::Approx(121.0));
    const Vector e1{1.0, 0.0}, e2{0.0, 1.0};
    CHECK(kernel_eval(Kernel::make_linear(), e1, e2) == 0.0);
    CHECK_THROWS(kernel_eval(Kernel::make_linear(), a, Vector{1.0}));
}

TEST_CASE("second-degree kernel equals the explicit feature map on 100 random pairs") {
    Rng rng(55);
    const Kernel poly2 = Kernel::make_polynomial(1.0, 0.0, 2);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector a{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        const Vector b{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        const Vector phi_a{a[0] * a[0], std::sqrt(2.0) * a[0] * a[1], a[1] * a[1]};
        const Vector phi_b{b[0] * b[0], std::sqrt(2.0) * b[0] * b[1], b[1] * b[1]};
        CHECK(std::fabs(kernel_eval(poly2, a, b) - dot(phi_a, phi_b)) < 1e-10);
    }
}

TEST_CASE("kernel matrices are symmetric with unit rbf diagonal; parallel == serial") {
    Rng rng(66);
    Matrix x(70, 3);
    for (auto& v : x.data()) v = rng.uniform(-1.0, 1.0);
    const Kernel k = Kernel::make_rbf(0.7);
    const Matrix g = kernel_matrix(k, x);
    CHECK(max_abs_diff(g, transpose(g)) == 0.0);
    for (std::size_t i = 0; i < 70; ++i) CHECK(g(i, i) == doctest::Approx(1.0));
    CHECK(max_abs_diff(g, serial::kernel_matrix(k, x)) == 0.0);
}

TEST_CASE("hinge loss") {
    CHECK(hinge_loss(2.0) == 0.0);
    CHECK(hinge_loss(0.0) == 1.0);
    CHECK(hinge_loss(-1.0) == 2.0);
}

TEST_CASE("primal svm separates two 1-D points") {
    const Matrix x{{-2.0}, {2.0}};
    const Vector y{-1.0, 1.0};
    const SvmModel m = fit_svm_primal(x, y, 1.0, 300, 0.1);
    CHECK(m.predict(x.row(0)) == -1);
    CHECK(m.predict(x.row(1)) == 1);
    // Decision boundary b/w crosses strictly inside (-2, 2).
    REQUIRE(m.w[0] != 0.0);
    const double crossing = m.b / m.w[0];
    CHECK(crossing > -2.0);
    CHECK(crossing < 2.0);
}

TEST_CASE("primal svm with very large C reaches full accuracy on separable data") {
    Rng rng(8);
    Matrix x(40, 2);
    Vector y(40);
    for (std::size_t i = 0; i < 40; ++i) {
        const double cls = i < 20 ? -1.0 : 1.0;
        x(i, 0) = cls * 2.0 + rng.uniform(-0.5, 0.5);
        x(i, 1) = rng.uniform(-1.0, 1.0);
        y[i] = cls;
    }
    // Under the slack_weighted objective a large C punishes violations hard.
    const SvmModel m = fit_svm_primal(x, y, 1000.0, 500, 0.01, PrimalObjective::slack_weighted);
    for (std::size_t i = 0; i < 40; ++i) CHECK(m.predict(x.row(i)) == (y[i] > 0 ? 1 : -1));
}

TEST_CASE("primal svm objective is non-increasing under the decaying schedule") {
    Rng rng(9);
    Matrix x(30, 2);
    Vector y(30);
    for (std::size_t i = 0; i < 30; ++i) {
        const double cls = i % 2 == 0 ? -1.0 : 1.0;
        x(i, 0) = cls + rng.uniform(-1.2, 1.2);
        x(i, 1) = rng.uniform(-1.0, 1.0);
        y[i] = cls;
    }
    Vector trace;
    fit_svm_primal(x, y, 0.5, 200, 0.05, PrimalObjective::margin_weighted, &trace);
    REQUIRE(trace.size() == 200);
    for (std::size_t e = 1; e < trace.size(); ++e) CHECK(trace[e] <= trace[e - 1] + 1e-12);
}

TEST_CASE("small C sacrifices a mislabeled outlier") {
    // Clean clusters at -2 and +2 plus one mislabeled point at +3. No 1-D
    // linear rule gets both the positive cluster and the outlier right, and
    // at C = 0.5 violating just the outlier (objective 0.5 + 4C) beats
    // predicting the majority class everywhere (6C).
    const Matrix x{{-2.0}, {-1.8}, {-2.2}, {1.8}, {2.0}, {2.2}, {3.0}};
    const Vector y{-1.0, -1.0, -1.0, 1.0, 1.0, 1.0, -1.0};
    const SvmModel m = fit_svm_primal(x, y, 0.5, 5000, 0.5, PrimalObjective::slack_weighted);
    for (std::size_t i = 0; i < 6; ++i) CHECK(m.predict(x.row(i)) == (y[i] > 0 ? 1 : -1));
    CHECK(m.predict(x.row(6)) == 1);  // outlier stays violated

    // Brute-force check: no (w, b) on a grid beats the returned objective.
    const double obj = svm_primal_objective(m, x, y, PrimalObjective::slack_weighted);
    double best_grid = 1e300;
    for (double w = -3.0; w <= 3.0; w += 0.05) {
        for (double b = -3.0; b <= 3.0; b += 0.05) {
            SvmModel g;
            g.w = {w};
            g.b = b;
            g.c = 0.5;
            best_grid = std::min(best_grid,
                                 svm_primal_objective(g, x, y, PrimalObjective::slack_weighted));
        }
    }
    CHECK(obj <= best_grid + 5e-3);
}

TEST_CASE("dual svm with a linear kernel agrees with the primal on separable data") {
    Rng rng(12);
    Matrix x(30, 2);
    Vector y(30);
    for (std::size_t i = 0; i < 30; ++i) {
        const double cls = i < 15 ? -1.0 : 1.0;
        x(i, 0) = cls * 1.5 + rng.uniform(-0.4, 0.4);
        x(i, 1) = rng.uniform(-1.0, 1.0);
        y[i] = cls;
    }
    const SvmModel primal = fit_svm_primal(x, y, 100.0, 400, 0.01,
                                           PrimalObjective::slack_weighted);
    const SvmDualResult dual = fit_svm_dual(x, y, 10.0, Kernel::make_linear());
    for (std::size_t i = 0; i < 30; ++i) {
        CHECK(dual.model.predict(x.row(i)) == primal.predict(x.row(i)));
    }
}

TEST_CASE("dual feasibility holds at convergence") {
    Rng rng(13);
    Matrix x(24, 2);
    Vector y(24);
    for (std::size_t i = 0; i < 24; ++i) {
        const double cls = i % 2 == 0 ? -1.0 : 1.0;
        x(i, 0) = cls + rng.uniform(-1.5, 1.5);
        x(i, 1) = rng.uniform(-1.0, 1.0);
        y[i] = cls;
    }
    const double c = 2.0;
    const SvmDualResult r = fit_svm_dual(x, y, c, Kernel::make_rbf(0.8));
    double sum_ay = 0.0;
    for (std::size_t i = 0; i < r.model.alpha.size(); ++i) {
        CHECK(r.model.alpha[i] >= 0.0);
        CHECK(r.model.alpha[i] <= c + 1e-12);
        sum_ay += r.model.alpha[i] * r.model.sv_y[i];
    }
    CHECK(std::fabs(sum_ay) < 1e-6);
}

TEST_CASE("xor becomes separable with the degree-2 polynomial kernel") {
    const Matrix x{{1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0}, {-1.0, 1.0}};
    const Vector y{1.0, 1.0, -1.0, -1.0};
    const SvmDualResult r = fit_svm_dual(x, y, 10.0, Kernel::make_polynomial(1.0, 0.0, 2));
    for (std::size_t i = 0; i < 4; ++i) CHECK(r.model.predict(x.row(i)) == (y[i] > 0 ? 1 : -1));

    // A quadratic separator exists: the explicit map's middle feature
    // sqrt(2) x1 x2 is +sqrt(2) for one class and -sqrt(2) for the other.
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK((x(i, 0) * x(i, 1) > 0.0) == (y[i] > 0.0));
    }
}

TEST_CASE("large-gamma rbf memorizes any consistent labeling") {
    Rng rng(14);
    Matrix x(16, 2);
    Vector y(16);
    for (std::size_t i = 0; i < 16; ++i) {
        x(i, 0) = rng.uniform(-2.0, 2.0);
        x(i, 1) = rng.uniform(-2.0, 2.0);
        y[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    }
    const SvmDualResult r = fit_svm_dual(x, y, 100.0, Kernel::make_rbf(50.0));
    for (std::size_t i = 0; i < 16; ++i) CHECK(r.model.predict(x.row(i)) == (y[i] > 0 ? 1 : -1));
}

TEST_CASE("svr stays within a wide epsilon tube on a noiseless line") {
    Matrix x(10, 1);
    Vector y(10);
    for (std::size_t i = 0; i < 10; ++i) {
        x(i, 0) = static_cast<double>(i) / 3.0;
        y[i] = 0.8 * x(i, 0) + 0.5;
    }
    const SvmModel m = fit_svr_linear(x, y, 5.0, 2.0, 400, 0.05);
    for (std::size_t i = 0; i < 10; ++i){
        CHECK(std::fabs(m.decision_value(x.row(i)) - y[i]) <= 2.0 + 1e-9);
    }
    CHECK(svr_objective(m, x, y, 2.0) <= 0.5 + 1e-6);  // loss term must be ~0
}

TEST_CASE("svr with epsilon 0 on y = x recovers slope 1") {
    Matrix x(21, 1);
    Vector y(21);
    for (std::size_t i = 0; i < 21; ++i) {
        x(i, 0) = -1.0 + static_cast<double>(i) / 10.0;
        y[i] = x(i, 0);
    }
    const SvmModel m = fit_svr_linear(x, y, 50.0, 0.0, 2000, 0.02);

    // Brute-force objective scan over slope (intercept 0 by symmetry).
    double best_slope = 0.0, best_obj = 1e300;
    for (double w = -0.5; w <= 1.6; w += 0.002) {
        SvmModel g;
        g.w = {w};
        g.b = 0.0;
        g.c = 50.0;
        const double obj = svr_objective(g, x, y, 0.0);
        if (obj < best_obj) {
            best_obj = obj;
            best_slope = w;
        }
    }
    CHECK(best_slope == doctest::Approx(1.0).epsilon(0.01));
    CHECK(m.w[0] == doctest::Approx(1.0).epsilon(0.05));
    CHECK(svr_objective(m, x, y, 0.0) <= best_obj + 0.05);
}

TEST_CASE("svr on constant targets predicts the constant") {
    Matrix x(8, 1);
    Vector y(8, 3.5);
    for (std::size_t i = 0; i < 8; ++i) x(i, 0) = static_cast<double>(i);
    const SvmModel m = fit_svr_linear(x, y, 10.0, 0.0, 1500, 0.05);
    CHECK(std::fabs(m.w[0]) < 0.05);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(m.decision_value(x.row(i)) == doctest::Approx(3.5).epsilon(0.05));
    }
}
