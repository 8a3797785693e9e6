#pragma once

#include "ml/matrix.hpp"
#include "ml/nn/activations.hpp"
#include "ml/nn/optimizer.hpp"
#include "ml/rng.hpp"

namespace ml {

struct DenseLayer {
    Matrix w;  // in x out
    Vector b;  // out (threshold form stores T = -b)
    Activation act = Activation::sigmoid;
};

/// Plain multilayer perceptron over dense layers. The loss everywhere is the
/// per-sample sum of squared output errors, averaged over the batch.
class Mlp {
public:
    Mlp() = default;
    /// sizes = {inputs, hidden..., outputs}; weights are Glorot-initialized.
    Mlp(const std::vector<std::size_t>& sizes, const std::vector<Activation>& acts, Rng& rng);
    explicit Mlp(std::vector<DenseLayer> layers);

    struct Trace {
        std::vector<Vector> pre;  // z per layer
        std::vector<Vector> act;  // act[0] = input, act[l+1] = layer l output
    };

    Trace forward(std::span<const double> x) const;
    Vector predict(std::span<const double> x) const;

    /// Accumulates d(loss)/d(params) for one (x, target) pair into the
    /// gradient buffers; returns the sample loss sum_k (d_k - c_k)^2.
    /// layer_masks, when non-null, applies dropout masks to the input and
    /// hidden activations (one mask per non-output layer boundary).
    double accumulate_gradients(std::span<const double> x, std::span<const double> target,
                                const std::vector<Vector>* layer_masks = nullptr);

    FitReport train(const Matrix& x, const Matrix& targets, const TrainConfig& config);

    double loss(const Matrix& x, const Matrix& targets) const;

    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<ParamBlock> param_blocks();

private:
    std::vector<DenseLayer> layers_;
    std::vector<Matrix> grad_w_;
    std::vector<Vector> grad_b_;
    void ensure_grads();
};

/// Three-layer fault-diagnosis network in threshold form: the input layer
/// applies a sigmoid to (l_i - T1_i), then two dense sigmoid layers subtract
/// their own thresholds. Kept exactly in the worked-example shape so the
/// golden numbers stay pinned.
struct ThresholdNet {
    Matrix v;   // input -> hidden, v(i, j)
    Matrix w;   // hidden -> output, w(j, k)
    Vector t1;  // input thresholds
    Vector t2;  // hidden thresholds
    Vector t3;  // output thresholds

    struct Forward {
        Vector a;  // input-layer outputs
        Vector b;  // hidden-layer outputs
        Vector c;  // output-layer outputs
    };

    struct Errors {
        Vector output;  // c_k (1 - c_k)(d_k - c_k)
        Vector hidden;  // b_j (1 - b_j) sum_k w_jk eps_k, with pre-update w
    };

    Forward forward(std::span<const double> input) const;
    Errors errors(const Forward& f, std::span<const double> target) const;

    /// One training step with the frozen update ordering: output weights,
    /// output thresholds, hidden weights (using the pre-update output
    /// weights), hidden thresholds. Thresholds move opposite the error term
    /// (the descent direction; ascent never converges on the fault pattern).
    Errors step(std::span<const double> input, std::span<const double> target, double lr);

    /// Repeats step until every |d_k - c_k| < tol; returns iterations used,
    /// or max_iter when the tolerance was not reached.
    std::size_t train_until(std::span<const double> input, std::span<const double> target,
                            double lr, double tol, std::size_t max_iter);

    /// The equivalent bias-form dense stack (identity first layer, b = -T).
    Mlp to_bias_form() const;
};

/// Step-1 matrices of the worked example.
ThresholdNet worked_example_net();

/// Per-feature batch normalization with running statistics for inference.
class BatchNorm {
public:
    explicit BatchNorm(std::size_t features, double momentum = 0.9, double eps = 1e-5);

    /// Training mode normalizes with batch statistics (batch size >= 2) and
    /// updates the running estimates; inference uses the running statistics.
    Matrix forward(const Matrix& batch, bool training);

    /// Backward pass through the most recent training-mode forward.
    Matrix backward(const Matrix& grad_out);

    Vector gamma, beta;
    Vector running_mean, running_var;
    Vector grad_gamma, grad_beta;
    double momentum;
    double eps;

private:
    Matrix last_x_hat_;
    Vector last_var_;
};

}  // namespace ml
