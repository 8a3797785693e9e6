#include "ml/nn/rnn.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ml/linear.hpp"
#include "ml/nn/activations.hpp"

namespace ml {

namespace {

// z = x W_x + h W_h + b for row vectors.
Vector affine(std::span<const double> x, const Matrix& wx, std::span<const double> h,
              const Matrix& wh, const Vector& b) {
    Vector z(b);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        for (std::size_t j = 0; j < wx.cols(); ++j) z[j] += xi * wx(i, j);
    }
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double hi = h[i];
        for (std::size_t j = 0; j < wh.cols(); ++j) z[j] += hi * wh(i, j);
    }
    return z;
}

void map_sigmoid(Vector& v) {
    for (double& x : v) x = sigmoid(x);
}

void map_tanh(Vector& v) {
    for (double& x : v) x = std::tanh(x);
}

// outer-product accumulation: grad += col(a) row(b)
void add_outer(Matrix& grad, std::span<const double> a, const Vector& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) grad(i, j) += a[i] * b[j];
    }
}

void add_vec(Vector& grad, const Vector& d) {
    for (std::size_t i = 0; i < d.size(); ++i) grad[i] += d[i];
}

// accum += d W^T  (d row vector through the transpose of W)
void add_back(Vector& accum, const Vector& d, const Matrix& w) {
    for (std::size_t i = 0; i < w.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < w.cols(); ++j) s += w(i, j) * d[j];
        accum[i] += s;
    }
}

}  // namespace

RnnCell RnnCell::create(RnnKind kind, std::size_t input_size, std::size_t hidden_size, Rng& rng) {
    RnnCell c;
    c.kind = kind;
    c.input_size = input_size;
    c.hidden_size = hidden_size;
    auto wx_init = [&] { return glorot_init(input_size, hidden_size, rng); };
    auto wh_init = [&] { return glorot_init(hidden_size, hidden_size, rng); };
    switch (kind) {
        case RnnKind::simple:
            c.wx = wx_init();
            c.wy = wh_init();
            c.b.assign(hidden_size, 0.0);
            break;
        case RnnKind::lstm:
            c.wxf = wx_init();
            c.whf = wh_init();
            c.bf.assign(hidden_size, 0.0);
            c.wxi = wx_init();
            c.whi = wh_init();
            c.bi.assign(hidden_size, 0.0);
            c.wxo = wx_init();
            c.who = wh_init();
            c.bo.assign(hidden_size, 0.0);
            c.wxg = wx_init();
            c.whg = wh_init();
            c.bg.assign(hidden_size, 0.0);
            break;
        case RnnKind::gru:
            c.wxr = wx_init();
            c.whr = wh_init();
            c.br.assign(hidden_size, 0.0);
            c.wxz = wx_init();
            c.whz = wh_init();
            c.bz.assign(hidden_size, 0.0);
            c.wxg = wx_init();
            c.whg = wh_init();
            c.bg.assign(hidden_size, 0.0);
            break;
    }
    return c;
}

RnnCell RnnCell::zeros_like() const {
    RnnCell z = *this;
    for (Matrix* m : z.matrices()) {
        for (auto& v : m->data()) v = 0.0;
    }
    for (Vector* v : z.vectors()) v->assign(v->size(), 0.0);
    return z;
}

std::vector<Matrix*> RnnCell::matrices() {
    switch (kind) {
        case RnnKind::simple:
            return {&wx, &wy};
        case RnnKind::lstm:
            return {&wxf, &whf, &wxi, &whi, &wxo, &who, &wxg, &whg};
        case RnnKind::gru:
            return {&wxr, &whr, &wxz, &whz, &wxg, &whg};
    }
    throw std::logic_error("RnnCell::matrices");
}

std::vector<Vector*> RnnCell::vectors() {
    switch (kind) {
        case RnnKind::simple:
            return {&b};
        case RnnKind::lstm:
            return {&bf, &bi, &bo, &bg};
        case RnnKind::gru:
            return {&br, &bz, &bg};
    }
    throw std::logic_error("RnnCell::vectors");
}

RnnState RnnState::zero(const RnnCell& cell) {
    RnnState s;
    s.h.assign(cell.hidden_size, 0.0);
    if (cell.kind == RnnKind::lstm) s.c.assign(cell.hidden_size, 0.0);
    return s;
}

Vector simple_rnn_step(const RnnCell& cell, std::span<const double> x_t,
                       std::span<const double> y_prev) {
    if (x_t.size() != cell.input_size || y_prev.size() != cell.hidden_size) {
        throw std::invalid_argument("simple_rnn_step: shape mismatch");
    }
    Vector y = affine(x_t, cell.wx, y_prev, cell.wy, cell.b);
    map_tanh(y);
    return y;
}

LstmGates lstm_step_full(const RnnCell& cell, std::span<const double> x_t,
                         const RnnState& state) {
    if (x_t.size() != cell.input_size || state.h.size() != cell.hidden_size) {
        throw std::invalid_argument("lstm_step: shape mismatch");
    }
    LstmGates g;
    g.f = affine(x_t, cell.wxf, state.h, cell.whf, cell.bf);
    map_sigmoid(g.f);
    g.i = affine(x_t, cell.wxi, state.h, cell.whi, cell.bi);
    map_sigmoid(g.i);
    g.o = affine(x_t, cell.wxo, state.h, cell.who, cell.bo);
    map_sigmoid(g.o);
    g.g = affine(x_t, cell.wxg, state.h, cell.whg, cell.bg);
    map_tanh(g.g);
    g.c.resize(cell.hidden_size);
    g.tanh_c.resize(cell.hidden_size);
    g.h.resize(cell.hidden_size);
    for (std::size_t j = 0; j < cell.hidden_size; ++j) {
        g.c[j] = g.f[j] * state.c[j] + g.i[j] * g.g[j];
        g.tanh_c[j] = std::tanh(g.c[j]);
        g.h[j] = g.o[j] * g.tanh_c[j];
    }
    return g;
}

Vector lstm_step(const RnnCell& cell, std::span<const double> x_t, RnnState& state) {
    const LstmGates g = lstm_step_full(cell, x_t, state);
    state.c = g.c;
    state.h = g.h;
    return g.h;
}

GruGates gru_step_full(const RnnCell& cell, std::span<const double> x_t,
                       std::span<const double> h_prev) {
    if (x_t.size() != cell.input_size || h_prev.size() != cell.hidden_size) {
        throw std::invalid_argument("gru_step: shape mismatch");
    }
    GruGates g;
    g.r = affine(x_t, cell.wxr, h_prev, cell.whr, cell.br);
    map_sigmoid(g.r);
    g.z = affine(x_t, cell.wxz, h_prev, cell.whz, cell.bz);
    map_sigmoid(g.z);
    Vector rh(cell.hidden_size);
    for (std::size_t j = 0; j < cell.hidden_size; ++j) rh[j] = g.r[j] * h_prev[j];
    g.g = affine(x_t, cell.wxg, rh, cell.whg, cell.bg);
    map_tanh(g.g);
    g.h.resize(cell.hidden_size);
    for (std::size_t j = 0; j < cell.hidden_size; ++j) {
        g.h[j] = g.z[j] * h_prev[j] + (1.0 - g.z[j]) * g.g[j];
    }
    return g;
}

Vector gru_step(const RnnCell& cell, std::span<const double> x_t,
                std::span<const double> h_prev) {
    return gru_step_full(cell, x_t, h_prev).h;
}

Matrix run_sequence(const RnnCell& cell, const Matrix& inputs) {
    if (inputs.rows() == 0) throw std::invalid_argument("run_sequence: empty sequence");
    if (inputs.cols() != cell.input_size) {
        throw std::invalid_argument("run_sequence: input width mismatch");
    }
    Matrix out(inputs.rows(), cell.hidden_size);
    RnnState state = RnnState::zero(cell);
    for (std::size_t t = 0; t < inputs.rows(); ++t) {
        Vector y;
        switch (cell.kind) {
            case RnnKind::simple:
                y = simple_rnn_step(cell, inputs.row(t), state.h);
                state.h = y;
                break;
            case RnnKind::lstm:
                y = lstm_step(cell, inputs.row(t), state);
                break;
            case RnnKind::gru:
                y = gru_step(cell, inputs.row(t), state.h);
                state.h = y;
                break;
        }
        for (std::size_t j = 0; j < cell.hidden_size; ++j) out(t, j) = y[j];
    }
    return out;
}

std::vector<Matrix> run_sequence_batch(const RnnCell& cell, const std::vector<Matrix>& batch) {
    std::vector<Matrix> out(batch.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(static) if (n > 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = run_sequence(cell, batch[static_cast<std::size_t>(i)]);
    }
    return out;
}

RnnRegressor RnnRegressor::create(RnnKind kind, std::size_t input_size, std::size_t hidden_size,
                                  std::size_t outputs, Rng& rng) {
    RnnRegressor m;
    m.cell = RnnCell::create(kind, input_size, hidden_size, rng);
    m.w_head = glorot_init(hidden_size, outputs, rng);
    m.b_head.assign(outputs, 0.0);
    return m;
}

Matrix RnnRegressor::predict_sequence(const Matrix& inputs) const {
    const Matrix hidden = run_sequence(cell, inputs);
    Matrix out(inputs.rows(), w_head.cols());
    for (std::size_t t = 0; t < hidden.rows(); ++t) {
        for (std::size_t k = 0; k < w_head.cols(); ++k) {
            double s = b_head[k];
            for (std::size_t j = 0; j < w_head.rows(); ++j) s += hidden(t, j) * w_head(j, k);
            out(t, k) = s;
        }
    }
    return out;
}

double bptt_loss(const RnnRegressor& model, const std::vector<Matrix>& sequences,
                 const std::vector<Matrix>& targets, std::size_t loss_window) {
    double total = 0.0;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        const Matrix out = model.predict_sequence(sequences[s]);
        const std::size_t T = out.rows();
        const std::size_t start = T - std::min(loss_window, T);
        for (std::size_t t = start; t < T; ++t) {
            for (std::size_t k = 0; k < out.cols(); ++k) {
                const double e = out(t, k) - targets[s](t, k);
                total += e * e;
            }
        }
    }
    return total / static_cast<double>(sequences.size());
}

namespace {

// Per-sequence BPTT for each cell kind; dh flows backward through time and
// every weight gradient sums over all steps.
void bptt_sequence(const RnnRegressor& model, const Matrix& x, const Matrix& target,
                   std::size_t loss_window, double scale, RnnCell& gc, Matrix& gw_head,
                   Vector& gb_head) {
    const RnnCell& cell = model.cell;
    const std::size_t T = x.rows(), H = cell.hidden_size;
    const std::size_t start = T - std::min(loss_window, T);

    // Forward cache.
    std::vector<Vector> hs(T + 1, Vector(H, 0.0));
    std::vector<LstmGates> lstm_cache(cell.kind == RnnKind::lstm ? T : 0);
    std::vector<GruGates> gru_cache(cell.kind == RnnKind::gru ? T : 0);
    std::vector<Vector> cs(cell.kind == RnnKind::lstm ? T + 1 : 0, Vector(H, 0.0));
    for (std::size_t t = 0; t < T; ++t) {
        switch (cell.kind) {
            case RnnKind::simple:
                hs[t + 1] = simple_rnn_step(cell, x.row(t), hs[t]);
                break;
            case RnnKind::lstm: {
                RnnState st{hs[t], cs[t]};
                lstm_cache[t] = lstm_step_full(cell, x.row(t), st);
                hs[t + 1] = lstm_cache[t].h;
                cs[t + 1] = lstm_cache[t].c;
                break;
            }
            case RnnKind::gru:
                gru_cache[t] = gru_step_full(cell, x.row(t), hs[t]);
                hs[t + 1] = gru_cache[t].h;
                break;
        }
    }

    Vector dh(H, 0.0);
    Vector dc(cell.kind == RnnKind::lstm ? H : 0, 0.0);
    for (std::size_t ti = T; ti-- > 0;) {
        // Head contribution at this step.
        if (ti >= start) {
            Vector dout(model.w_head.cols());
            for (std::size_t k = 0; k < dout.size(); ++k) {
                double s = model.b_head[k];
                for (std::size_t j = 0; j < H; ++j) s += hs[ti + 1][j] * model.w_head(j, k);
                dout[k] = 2.0 * (s - target(ti, k)) * scale;
            }
            add_outer(gw_head, hs[ti + 1], dout);
            add_vec(gb_head, dout);
            add_back(dh, dout, model.w_head);
        }

        switch (cell.kind) {
            case RnnKind::simple: {
                Vector dz(H);
                for (std::size_t j = 0; j < H; ++j) {
                    dz[j] = dh[j] * (1.0 - hs[ti + 1][j] * hs[ti + 1][j]);
                }
                add_outer(gc.wx, x.row(ti), dz);
                add_outer(gc.wy, hs[ti], dz);
                add_vec(gc.b, dz);
                Vector dh_prev(H, 0.0);
                add_back(dh_prev, dz, cell.wy);
                dh = std::move(dh_prev);
                break;
            }
            case RnnKind::lstm: {
                const LstmGates& g = lstm_cache[ti];
                Vector dzf(H), dzi(H), dzo(H), dzg(H), dh_prev(H, 0.0), dc_prev(H);
                for (std::size_t j = 0; j < H; ++j) {
                    const double d_o = dh[j] * g.tanh_c[j];
                    const double dct = dc[j] + dh[j] * g.o[j] * (1.0 - g.tanh_c[j] * g.tanh_c[j]);
                    const double d_f = dct * cs[ti][j];
                    const double d_i = dct * g.g[j];
                    const double d_g = dct * g.i[j];
                    dc_prev[j] = dct * g.f[j];
                    dzf[j] = d_f * g.f[j] * (1.0 - g.f[j]);
                    dzi[j] = d_i * g.i[j] * (1.0 - g.i[j]);
                    dzo[j] = d_o * g.o[j] * (1.0 - g.o[j]);
                    dzg[j] = d_g * (1.0 - g.g[j] * g.g[j]);
                }
                add_outer(gc.wxf, x.row(ti), dzf);
                add_outer(gc.whf, hs[ti], dzf);
                add_vec(gc.bf, dzf);
                add_outer(gc.wxi, x.row(ti), dzi);
                add_outer(gc.whi, hs[ti], dzi);
                add_vec(gc.bi, dzi);
                add_outer(gc.wxo, x.row(ti), dzo);
                add_outer(gc.who, hs[ti], dzo);
                add_vec(gc.bo, dzo);
                add_outer(gc.wxg, x.row(ti), dzg);
                add_outer(gc.whg, hs[ti], dzg);
                add_vec(gc.bg, dzg);
                add_back(dh_prev, dzf, cell.whf);
                add_back(dh_prev, dzi, cell.whi);
                add_back(dh_prev, dzo, cell.who);
                add_back(dh_prev, dzg, cell.whg);
                dh = std::move(dh_prev);
                dc = std::move(dc_prev);
                break;
            }
            case RnnKind::gru: {
                const GruGates& g = gru_cache[ti];
                Vector dzr(H), dzz(H), dzg(H), dh_prev(H, 0.0);
                Vector d_rh(H, 0.0);
                for (std::size_t j = 0; j < H; ++j) {
                    const double d_z = dh[j] * (hs[ti][j] - g.g[j]);
                    const double d_g = dh[j] * (1.0 - g.z[j]);
                    dh_prev[j] = dh[j] * g.z[j];
                    dzz[j] = d_z * g.z[j] * (1.0 - g.z[j]);
                    dzg[j] = d_g * (1.0 - g.g[j] * g.g[j]);
                }
                Vector rh(H);
                for (std::size_t j = 0; j < H; ++j) rh[j] = g.r[j] * hs[ti][j];
                add_outer(gc.wxg, x.row(ti), dzg);
                add_outer(gc.whg, rh, dzg);
                add_vec(gc.bg, dzg);
                add_back(d_rh, dzg, cell.whg);
                for (std::size_t j = 0; j < H; ++j) {
                    const double d_r = d_rh[j] * hs[ti][j];
                    dh_prev[j] += d_rh[j] * g.r[j];
                    dzr[j] = d_r * g.r[j] * (1.0 - g.r[j]);
                }
                add_outer(gc.wxr, x.row(ti), dzr);
                add_outer(gc.whr, hs[ti], dzr);
                add_vec(gc.br, dzr);
                add_outer(gc.wxz, x.row(ti), dzz);
                add_outer(gc.whz, hs[ti], dzz);
                add_vec(gc.bz, dzz);
                add_back(dh_prev, dzr, cell.whr);
                add_back(dh_prev, dzz, cell.whz);
                dh = std::move(dh_prev);
                break;
            }
        }
    }
}

}  // namespace

double bptt_gradients(const RnnRegressor& model, const std::vector<Matrix>& sequences,
                      const std::vector<Matrix>& targets, std::size_t loss_window,
                      RnnCell& cell_grads, Matrix& head_w_grads, Vector& head_b_grads) {
    const double scale = 1.0 / static_cast<double>(sequences.size());
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        bptt_sequence(model, sequences[s], targets[s], loss_window, scale, cell_grads,
                      head_w_grads, head_b_grads);
    }
    return bptt_loss(model, sequences, targets, loss_window);
}

FitReport bptt_train(RnnRegressor& model, const std::vector<Matrix>& sequences,
                     const std::vector<Matrix>& targets, std::size_t loss_window,
                     const TrainConfig& config) {
    config.validate();
    if (sequences.empty() || sequences.size() != targets.size()) {
        throw std::invalid_argument("bptt_train: bad batch");
    }
    for (const auto& s : sequences) {
        if (s.rows() != sequences.front().rows()) {
            throw std::invalid_argument("bptt_train: ragged sequences rejected");
        }
        if (loss_window > s.rows()) throw std::invalid_argument("bptt_train: window too long");
    }

    RnnCell cell_grads = model.cell.zeros_like();
    Matrix gw_head(model.w_head.rows(), model.w_head.cols());
    Vector gb_head(model.b_head.size(), 0.0);

    std::vector<ParamBlock> blocks;
    {
        auto params_m = model.cell.matrices();
        auto grads_m = cell_grads.matrices();
        for (std::size_t i = 0; i < params_m.size(); ++i) {
            blocks.push_back({params_m[i]->data().data(), grads_m[i]->data().data(),
                              params_m[i]->size()});
        }
        auto params_v = model.cell.vectors();
        auto grads_v = cell_grads.vectors();
        for (std::size_t i = 0; i < params_v.size(); ++i) {
            blocks.push_back({params_v[i]->data(), grads_v[i]->data(), params_v[i]->size()});
        }
        blocks.push_back({model.w_head.data().data(), gw_head.data().data(), model.w_head.size()});
        blocks.push_back({model.b_head.data(), gb_head.data(), model.b_head.size()});
    }
    Optimizer opt(config, blocks);
    Rng rng(config.seed);

    FitReport report;
    report.seed = config.seed;
    const std::size_t n = sequences.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::min(config.batch_size, n);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (batch < n) rng.shuffle(order);
        for (std::size_t startb = 0; startb < n; startb += batch) {
            const std::size_t stop = std::min(n, startb + batch);
            const double scale = 1.0 / static_cast<double>(stop - startb);
            for (std::size_t bi = startb; bi < stop; ++bi) {
                bptt_sequence(model, sequences[order[bi]], targets[order[bi]], loss_window, scale,
                              cell_grads, gw_head, gb_head);
            }
            opt.step(blocks);
        }
        const double loss = bptt_loss(model, sequences, targets, loss_window);
        report.loss_history.push_back(loss);
        if (!std::isfinite(loss)) {
            report.metrics["diverged"] = 1.0;
            break;
        }
    }
    report.metrics["final_loss"] = report.loss_history.empty() ? 0.0 : report.loss_history.back();
    return report;
}

Matrix bidirectional(const RnnCell& forward_cell, const RnnCell& backward_cell,
                     const Matrix& inputs) {
    if (forward_cell.hidden_size != backward_cell.hidden_size) {
        throw std::invalid_argument("bidirectional: hidden sizes differ");
    }
    const std::size_t T = inputs.rows();
    Matrix reversed(T, inputs.cols());
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t j = 0; j < inputs.cols(); ++j) reversed(t, j) = inputs(T - 1 - t, j);
    }
    const Matrix fwd = run_sequence(forward_cell, inputs);
    const Matrix bwd = run_sequence(backward_cell, reversed);
    Matrix out(T, forward_cell.hidden_size);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            out(t, j) = 0.5 * (fwd(t, j) + bwd(T - 1 - t, j));
        }
    }
    return out;
}

Vector bidirectional_merge_proba(const Vector& p_forward, const Vector& p_backward) {
    if (p_forward.size() != p_backward.size()) {
        throw std::invalid_argument("bidirectional_merge_proba: size mismatch");
    }
    Vector out(p_forward.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::exp(0.5 * (std::log(p_forward[i]) + std::log(p_backward[i])));
    }
    return out;
}

}  // namespace ml
