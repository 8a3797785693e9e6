#pragma once

#include "ml/matrix.hpp"
#include "ml/nn/optimizer.hpp"
#include "ml/rng.hpp"

namespace ml {

enum class RnnKind { simple, lstm, gru };

/// Weight layout follows the gate equations: per gate an input matrix
/// (input_size x hidden), a recurrent matrix (hidden x hidden) and a bias.
/// The gru gating unit reuses the wxg/whg/bg fields.
struct RnnCell {
    RnnKind kind = RnnKind::simple;
    std::size_t input_size = 0;
    std::size_t hidden_size = 0;

    Matrix wx, wy;
    Vector b;

    Matrix wxf, whf;
    Vector bf;
    Matrix wxi, whi;
    Vector bi;
    Matrix wxo, who;
    Vector bo;
    Matrix wxg, whg;
    Vector bg;

    Matrix wxr, whr;
    Vector br;
    Matrix wxz, whz;
    Vector bz;

    static RnnCell create(RnnKind kind, std::size_t input_size, std::size_t hidden_size, Rng& rng);
    /// Same shapes, all zeros; used as a gradient accumulator.
    RnnCell zeros_like() const;

    std::vector<Matrix*> matrices();
    std::vector<Vector*> vectors();
};

struct RnnState {
    Vector h;  // short-term state, zero at t = 0
    Vector c;  // long-term state (lstm only), zero at t = 0

    static RnnState zero(const RnnCell& cell);
};

/// y(t) = tanh(x Wx + y(t-1) Wy + b).
Vector simple_rnn_step(const RnnCell& cell, std::span<const double> x_t,
                       std::span<const double> y_prev);

struct LstmGates {
    Vector f, i, o, g, c, tanh_c, h;
};

/// Gate order: forget and input select the surviving memory, the output gate
/// filters tanh of the new long-term state.
LstmGates lstm_step_full(const RnnCell& cell, std::span<const double> x_t, const RnnState& state);
Vector lstm_step(const RnnCell& cell, std::span<const double> x_t, RnnState& state);

struct GruGates {
    Vector r, z, g, h;
};

GruGates gru_step_full(const RnnCell& cell, std::span<const double> x_t,
                       std::span<const double> h_prev);
Vector gru_step(const RnnCell& cell, std::span<const double> x_t, std::span<const double> h_prev);

/// Runs the cell over inputs (T x input_size) from a zero initial state and
/// returns the per-step outputs (T x hidden_size).
Matrix run_sequence(const RnnCell& cell, const Matrix& inputs);
/// Batch rows are independent sequences; processed in parallel.
std::vector<Matrix> run_sequence_batch(const RnnCell& cell, const std::vector<Matrix>& batch);

/// Recurrent cell with a linear read-out head.
struct RnnRegressor {
    RnnCell cell;
    Matrix w_head;  // hidden x outputs
    Vector b_head;

    static RnnRegressor create(RnnKind kind, std::size_t input_size, std::size_t hidden_size,
                               std::size_t outputs, Rng& rng);
    Matrix predict_sequence(const Matrix& inputs) const;  // T x outputs
};

/// Mean over sequences of the summed squared error on the last loss_window
/// steps.
double bptt_loss(const RnnRegressor& model, const std::vector<Matrix>& sequences,
                 const std::vector<Matrix>& targets, std::size_t loss_window);

/// Backpropagation through time: gradients are accumulated across all time
/// steps of the unrolled recurrence (shared weights) and the loss covers the
/// last loss_window outputs. Gradient clipping and the optimizer come from
/// the config.
FitReport bptt_train(RnnRegressor& model, const std::vector<Matrix>& sequences,
                     const std::vector<Matrix>& targets, std::size_t loss_window,
                     const TrainConfig& config);

/// Test hook: accumulates the gradient of bptt_loss into grad buffers shaped
/// like the model; returns the loss.
double bptt_gradients(const RnnRegressor& model, const std::vector<Matrix>& sequences,
                      const std::vector<Matrix>& targets, std::size_t loss_window,
                      RnnCell& cell_grads, Matrix& head_w_grads, Vector& head_b_grads);

/// The backward cell runs on the time-reversed sequence; per-step outputs are
/// arithmetically averaged (regression merging).
Matrix bidirectional(const RnnCell& forward_cell, const RnnCell& backward_cell,
                     const Matrix& inputs);

/// Classification merging: geometric mean, i.e. the arithmetic mean of the
/// log probabilities.
Vector bidirectional_merge_proba(const Vector& p_forward, const Vector& p_backward);

}  // namespace ml
