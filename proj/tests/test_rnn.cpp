#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ml/nn/rnn.hpp"

using namespace ml;

TEST_CASE("simple rnn step golden recursion") {
    RnnCell cell;
    cell.kind = RnnKind::simple;
    cell.input_size = 1;
    cell.hidden_size = 1;
    cell.wx = Matrix{{1.0}};
    cell.wy = Matrix{{1.0}};
    cell.b = {0.0};

    const Matrix inputs{{1.0}, {0.0}};
    const Matrix out = run_sequence(cell, inputs);
    CHECK(out(0, 0) == doctest::Approx(std::tanh(1.0)).epsilon(1e-12));
    CHECK(out(1, 0) == doctest::Approx(std::tanh(std::tanh(1.0))).epsilon(1e-12));
    CHECK(out(0, 0) == doctest::Approx(0.7616).epsilon(1e-4));
    CHECK(out(1, 0) == doctest::Approx(0.6420).epsilon(1e-4));
}

TEST_CASE("zero-weight cells produce the analytic fixed points") {
    Rng rng(1);
    RnnCell simple = RnnCell::create(RnnKind::simple, 2, 3, rng);
    for (Matrix* m : simple.matrices()) {
        for (auto& v : m->data()) v = 0.0;
    }
    const Vector y = simple_rnn_step(simple, Vector{1.0, -1.0}, Vector{0.5, 0.5, 0.5});
    for (double v : y) CHECK(v == 0.0);

    // Wy = 0 reduces the simple cell to a dense layer on x.
    RnnCell dense_like = RnnCell::create(RnnKind::simple, 2, 3, rng);
    for (auto& v : dense_like.wy.data()) v = 0.0;
    const Vector a = simple_rnn_step(dense_like, Vector{0.3, 0.7}, Vector{9.0, -9.0, 4.0});
    const Vector b = simple_rnn_step(dense_like, Vector{0.3, 0.7}, Vector{0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == b[i]);

    // All-zero LSTM: f = i = o = 0.5, g = 0, c' = 0.5 c, h' = 0.5 tanh(0.5 c).
    RnnCell lstm = RnnCell::create(RnnKind::lstm, 2, 3, rng);
    for (Matrix* m : lstm.matrices()) {
        for (auto& v : m->data()) v = 0.0;
    }
    RnnState st = RnnState::zero(lstm);
    st.c = {0.8, -0.4, 0.2};
    const LstmGates g = lstm_step_full(lstm, Vector{1.0, 2.0}, st);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(g.f[j] == 0.5);
        CHECK(g.i[j] == 0.5);
        CHECK(g.o[j] == 0.5);
        CHECK(g.g[j] == 0.0);
        CHECK(g.c[j] == doctest::Approx(0.5 * st.c[j]).epsilon(1e-12));
        CHECK(g.h[j] == doctest::Approx(0.5 * std::tanh(0.5 * st.c[j])).epsilon(1e-12));
    }

    // All-zero GRU: h' = 0.5 h.
    RnnCell gru = RnnCell::create(RnnKind::gru, 2, 3, rng);
    for (Matrix* m : gru.matrices()) {
        for (auto& v : m->data()) v = 0.0;
    }
    const Vector h_prev{0.6, -0.2, 0.1};
    const Vector h = gru_step(gru, Vector{1.0, 2.0}, h_prev);
    for (std::size_t j = 0; j < 3; ++j) CHECK(h[j] == doctest::Approx(0.5 * h_prev[j]));
}

TEST_CASE("saturated lstm gates give perfect memory") {
    Rng rng(3);
    RnnCell cell = RnnCell::create(RnnKind::lstm, 1, 2, rng);
    for (auto& v : cell.bf) v = 20.0;   // forget gate saturated open
    for (auto& v : cell.bi) v = -20.0;  // input gate saturated closed
    RnnState st = RnnState::zero(cell);
    st.c = {0.7, -0.3};
    const Vector c_before = st.c;
    for (int t = 0; t < 5; ++t) lstm_step(cell, Vector{0.4}, st);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(std::fabs(st.c[j] - c_before[j]) < 1e-6 * 5);
    }
}

TEST_CASE("lstm gates stay in range and the state stays bounded") {
    Rng rng(5);
    RnnCell cell = RnnCell::create(RnnKind::lstm, 2, 3, rng);
    RnnState st = RnnState::zero(cell);
    for (int t = 0; t < 50; ++t) {
        const Vector x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
        const Vector c_prev = st.c;
        const LstmGates g = lstm_step_full(cell, x, st);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(g.f[j] > 0.0);
            CHECK(g.f[j] < 1.0);
            CHECK(g.i[j] > 0.0);
            CHECK(g.i[j] < 1.0);
            CHECK(g.o[j] > 0.0);
            CHECK(g.o[j] < 1.0);
            CHECK(std::fabs(g.c[j]) <= std::fabs(c_prev[j]) + 1.0 + 1e-12);
        }
        st.c = g.c;
        st.h = g.h;
    }
}

TEST_CASE("gru update-gate limits") {
    Rng rng(7);
    RnnCell cell = RnnCell::create(RnnKind::gru, 1, 2, rng);
    const Vector h_prev{0.4, -0.6};

    RnnCell hold = cell;
    for (auto& v : hold.bz) v = 20.0;  // z ~ 1 keeps the previous state
    const Vector kept = gru_step(hold, Vector{0.9}, h_prev);
    for (std::size_t j = 0; j < 2; ++j) CHECK(kept[j] == doctest::Approx(h_prev[j]).epsilon(1e-6));

    RnnCell replace = cell;
    for (auto& v : replace.bz) v = -20.0;  // z ~ 0 replaces with the gating unit
    const GruGates g = gru_step_full(replace, Vector{0.9}, h_prev);
    for (std::size_t j = 0; j < 2; ++j) CHECK(g.h[j] == doctest::Approx(g.g[j]).epsilon(1e-6));
}

TEST_CASE("run_sequence basics") {
    Rng rng(9);
    const RnnCell cell = RnnCell::create(RnnKind::gru, 2, 4, rng);

    const Matrix one_step{{0.3, -0.8}};
    const Matrix out1 = run_sequence(cell, one_step);
    const Vector direct = gru_step(cell, Vector{0.3, -0.8}, Vector(4, 0.0));
    for (std::size_t j = 0; j < 4; ++j) CHECK(out1(0, j) == direct[j]);

    // y(T) depends on x(1).
    Matrix seq(5, 2);
    for (auto& v : seq.data()) v = rng.uniform(-1.0, 1.0);
    Matrix perturbed = seq;
    perturbed(0, 0) += 0.25;
    const Matrix a = run_sequence(cell, seq);
    const Matrix b = run_sequence(cell, perturbed);
    double diff = 0.0;
    for (std::size_t j = 0; j < 4; ++j) diff = std::max(diff, std::fabs(a(4, j) - b(4, j)));
    CHECK(diff > 1e-8);

    // Identical batch rows give identical outputs.
    const std::vector<Matrix> batch{seq, seq, seq};
    const std::vector<Matrix> outs = run_sequence_batch(cell, batch);
    CHECK(max_abs_diff(outs[0], outs[1]) == 0.0);
    CHECK(max_abs_diff(outs[0], outs[2]) == 0.0);

    CHECK_THROWS(run_sequence(cell, Matrix(0, 2)));
    CHECK_THROWS(run_sequence(cell, Matrix(3, 5)));
}

namespace {

void check_bptt_gradient(RnnKind kind, std::size_t hidden, std::size_t T,
                         std::size_t loss_window, double tol) {
    Rng rng(11);
    RnnRegressor model = RnnRegressor::create(kind, 2, hidden, 1, rng);
    std::vector<Matrix> seqs(2, Matrix(T, 2));
    std::vector<Matrix> targets(2, Matrix(T, 1));
    for (auto& s : seqs) {
        for (auto& v : s.data()) v = rng.uniform(-1.0, 1.0);
    }
    for (auto& t : targets) {
        for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
    }

    RnnCell cg = model.cell.zeros_like();
    Matrix gw(model.w_head.rows(), model.w_head.cols());
    Vector gb(model.b_head.size(), 0.0);
    bptt_gradients(model, seqs, targets, loss_window, cg, gw, gb);

    const double h = 1e-6;
    auto fd_check = [&](double* param, double analytic) {
        const double saved = *param;
        *param = saved + h;
        const double lp = bptt_loss(model, seqs, targets, loss_window);
        *param = saved - h;
        const double lm = bptt_loss(model, seqs, targets, loss_window);
        *param = saved;
        const double fd = (lp - lm) / (2.0 * h);
        CHECK(analytic == doctest::Approx(fd).epsilon(tol));
    };

    auto params_m = model.cell.matrices();
    auto grads_m = cg.matrices();
    for (std::size_t m = 0; m < params_m.size(); ++m) {
        for (std::size_t e = 0; e < params_m[m]->size(); ++e) {
            fd_check(&params_m[m]->data()[e], grads_m[m]->data()[e]);
        }
    }
    auto params_v = model.cell.vectors();
    auto grads_v = cg.vectors();
    for (std::size_t m = 0; m < params_v.size(); ++m) {
        for (std::size_t e = 0; e < params_v[m]->size(); ++e) {
            fd_check(&(*params_v[m])[e], (*grads_v[m])[e]);
        }
    }
    for (std::size_t e = 0; e < model.w_head.size(); ++e) {
        fd_check(&model.w_head.data()[e], gw.data()[e]);
    }
    for (std::size_t e = 0; e < model.b_head.size(); ++e) fd_check(&model.b_head[e], gb[e]);
}

}  // namespace

TEST_CASE("bptt gradients match finite differences for every cell kind") {
    check_bptt_gradient(RnnKind::simple, 3, 5, 3, 1e-4);
    check_bptt_gradient(RnnKind::lstm, 1, 5, 5, 1e-4);
    check_bptt_gradient(RnnKind::lstm, 2, 4, 2, 1e-4);
    check_bptt_gradient(RnnKind::gru, 2, 5, 3, 1e-4);
}

TEST_CASE("bptt on a length-1 sequence equals dense backprop") {
    Rng rng(13);
    RnnRegressor model = RnnRegressor::create(RnnKind::simple, 2, 3, 1, rng);
    const std::vector<Matrix> seqs{Matrix{{0.4, -0.7}}};
    const std::vector<Matrix> targets{Matrix{{0.9}}};

    RnnCell cg = model.cell.zeros_like();
    Matrix gw(3, 1);
    Vector gb(1, 0.0);
    bptt_gradients(model, seqs, targets, 1, cg, gw, gb);

    // Dense equivalent: out = tanh(x Wx + b) W_head + b_head (Wy sees zeros).
    const Vector x{0.4, -0.7};
    Vector z(3, 0.0);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 3; ++j) z[j] += x[i] * model.cell.wx(i, j);
    }
    for (std::size_t j = 0; j < 3; ++j) z[j] += model.cell.b[j];
    Vector hvec(3);
    for (std::size_t j = 0; j < 3; ++j) hvec[j] = std::tanh(z[j]);
    double out = model.b_head[0];
    for (std::size_t j = 0; j < 3; ++j) out += hvec[j] * model.w_head(j, 0);
    const double dout = 2.0 * (out - 0.9);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(gw(j, 0) == doctest::Approx(dout * hvec[j]).epsilon(1e-12));
        const double dz = dout * model.w_head(j, 0) * (1.0 - hvec[j] * hvec[j]);
        CHECK(cg.b[j] == doctest::Approx(dz).epsilon(1e-12));
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(cg.wx(i, j) == doctest::Approx(dz * x[i]).epsilon(1e-12));
        }
    }
    // The recurrent matrix sees a zero previous state, so its gradient is 0.
    for (double v : cg.wy.data()) CHECK(v == 0.0);
}

TEST_CASE("a small gru learns the one-step delay task") {
    Rng rng(15);
    const std::size_t T = 6;
    std::vector<Matrix> seqs, targets;
    for (int s = 0; s < 24; ++s) {
        Matrix x(T, 1), y(T, 1);
        double prev = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            x(t, 0) = rng.uniform(-1.0, 1.0);
            y(t, 0) = prev;  // y(t) = x(t-1)
            prev = x(t, 0);
        }
        seqs.push_back(std::move(x));
        targets.push_back(std::move(y));
    }
    Rng model_rng(16);
    RnnRegressor model = RnnRegressor::create(RnnKind::gru, 1, 4, 1, model_rng);
    TrainConfig cfg;
    cfg.lr = 0.02;
    cfg.epochs = 400;
    cfg.batch_size = 24;
    cfg.seed = 17;
    // Skip t = 0, whose target is the undefined "previous" input.
    const FitReport r = bptt_train(model, seqs, targets, T - 1, cfg);
    CHECK(r.loss_history.back() / static_cast<double>(T - 1) < 1e-3);
}

TEST_CASE("full window equals summing all step losses") {
    Rng rng(19);
    RnnRegressor model = RnnRegressor::create(RnnKind::simple, 1, 2, 1, rng);
    const std::vector<Matrix> seqs{Matrix{{0.1}, {0.5}, {-0.2}}};
    const std::vector<Matrix> targets{Matrix{{0.0}, {1.0}, {0.5}}};
    const Matrix out = model.predict_sequence(seqs[0]);
    double manual = 0.0;
    for (std::size_t t = 0; t < 3; ++t) {
        manual += (out(t, 0) - targets[0](t, 0)) * (out(t, 0) - targets[0](t, 0));
    }
    CHECK(bptt_loss(model, seqs, targets, 3) == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("gradient clipping bounds the update norm during training") {
    Rng rng(21);
    RnnRegressor model = RnnRegressor::create(RnnKind::simple, 1, 3, 1, rng);
    std::vector<Matrix> seqs{Matrix{{2.0}, {-2.0}, {2.0}, {-2.0}}};
    std::vector<Matrix> targets{Matrix{{5.0}, {-5.0}, {5.0}, {-5.0}}};

    RnnCell cg = model.cell.zeros_like();
    Matrix gw(3, 1);
    Vector gb(1, 0.0);
    bptt_gradients(model, seqs, targets, 4, cg, gw, gb);
    double norm_sq = 0.0;
    for (Matrix* m : cg.matrices()) {
        for (double v : m->data()) norm_sq += v * v;
    }
    for (Vector* v : cg.vectors()) {
        for (double x : *v) norm_sq += x * x;
    }
    for (double v : gw.data()) norm_sq += v * v;
    for (double v : gb) norm_sq += v * v;
    REQUIRE(std::sqrt(norm_sq) > 1.0);  // clipping is actually engaged below

    std::vector<ParamBlock> blocks;
    auto ms = cg.matrices();
    for (Matrix* m : ms) blocks.push_back({m->data().data(), m->data().data(), m->size()});
    const double norm = clip_gradient_blocks(blocks, 1.0);
    CHECK(norm > 0.0);
    double after = 0.0;
    for (Matrix* m : ms) {
        for (double v : m->data()) after += v * v;
    }
    CHECK(std::sqrt(after) <= 1.0 + 1e-9);
}

TEST_CASE("bidirectional merging") {
    Rng rng(23);
    const RnnCell cell = RnnCell::create(RnnKind::gru, 1, 3, rng);

    // Identical cells on a palindromic input give a palindromic merge.
    const Matrix palindrome{{0.4}, {-0.9}, {0.4}};
    const Matrix merged = bidirectional(cell, cell, palindrome);
    CHECK(merged.rows() == palindrome.rows());
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(merged(0, j) == doctest::Approx(merged(2, j)).epsilon(1e-12));
    }

    // A zero backward cell halves the forward output.
    RnnCell zero = RnnCell::create(RnnKind::gru, 1, 3, rng);
    for (Matrix* m : zero.matrices()) {
        for (auto& v : m->data()) v = 0.0;
    }
    const Matrix seq{{0.2}, {0.7}, {-0.3}, {0.9}};
    const Matrix fwd = run_sequence(cell, seq);
    const Matrix both = bidirectional(cell, zero, seq);
    for (std::size_t t = 0; t < 4; ++t) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(both(t, j) == doctest::Approx(0.5 * fwd(t, j)).epsilon(1e-12));
        }
    }

    RnnCell other = RnnCell::create(RnnKind::gru, 1, 2, rng);
    CHECK_THROWS(bidirectional(cell, other, seq));

    const Vector geo = bidirectional_merge_proba({0.9, 0.4}, {0.4, 0.9});
    CHECK(geo[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(geo[1] == doctest::Approx(0.6).epsilon(1e-12));
}
