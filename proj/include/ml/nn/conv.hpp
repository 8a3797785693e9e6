#pragma once

#include <memory>

#include "ml/matrix.hpp"
#include "ml/nn/mlp.hpp"
#include "ml/nn/optimizer.hpp"

namespace ml {

struct Conv1dSpec {
    Vector kernel;
    std::size_t stride = 1;
    std::size_t padding = 0;  // zero columns added on each side
};

/// Cross-correlation: out[j] = sum_m kernel[m] * padded[j*stride + m];
/// output length = floor((L_pad - k)/stride) + 1.
Vector conv1d(const Vector& input, const Conv1dSpec& spec);

struct Conv2dSpec {
    std::vector<Matrix> kernels;  // one per filter
    std::size_t stride = 1;
    std::size_t padding = 0;  // symmetric zero padding
};

/// Valid cross-correlation per filter over a single-channel input.
std::vector<Matrix> conv2d(const Matrix& input, const Conv2dSpec& spec);

enum class PoolKind { max, average };

/// Non-overlapping by default (stride 0 means stride = window); no
/// activation is applied to pooled outputs.
Vector pool1d(const Vector& input, std::size_t window, PoolKind kind, std::size_t stride = 0);
Matrix pool2d(const Matrix& input, std::size_t window, PoolKind kind, std::size_t stride = 0);

/// Filter-major, then row-major concatenation.
Vector flatten(const std::vector<Matrix>& feature_maps);

/// Trainable CNN for single-channel image regression: convolution blocks
/// (conv + optional max-pool + optional batch norm, ReLU activations), then
/// dense ReLU layers with optional dropout and a linear output.
struct CnnArchitecture {
    struct ConvBlock {
        std::size_t filters = 8;
        std::size_t kernel = 3;       // square kernel
        std::size_t pool_window = 2;  // 0 or 1 disables pooling
        bool batch_norm = false;
    };
    std::vector<ConvBlock> conv_blocks;
    std::vector<std::size_t> dense_sizes;  // hidden widths
    double dense_dropout = 0.0;
};

using Image = std::vector<Matrix>;  // channel list

class CnnRegressor {
public:
    /// Validates shapes layer by layer; throws with a shape trace when a
    /// kernel or pool no longer fits.
    CnnRegressor(std::size_t input_h, std::size_t input_w, const CnnArchitecture& arch, Rng& rng);

    double predict(const Matrix& image) const;
    FitReport fit(const std::vector<Matrix>& images, const Vector& targets,
                  const TrainConfig& config);

    /// Test hook: gradient of the mean squared error over the batch,
    /// accumulated into the internal buffers; returns the loss.
    double compute_gradients(const std::vector<Matrix>& images, const Vector& targets);
    std::vector<ParamBlock> param_blocks();

    const CnnArchitecture& architecture() const { return arch_; }
    std::size_t flat_size() const { return flat_size_; }

    struct ConvBlockParams {
        std::vector<std::vector<Matrix>> kernels;  // [out_channel][in_channel]
        Vector bias;
        std::vector<std::vector<Matrix>> grad_kernels;
        Vector grad_bias;
        std::unique_ptr<BatchNorm> bn;
        std::size_t in_h = 0, in_w = 0, out_h = 0, out_w = 0;
        std::size_t pooled_h = 0, pooled_w = 0;
        std::size_t in_channels = 1;
    };

    std::vector<ConvBlockParams>& conv_blocks() { return blocks_; }
    std::vector<DenseLayer>& dense() { return dense_; }

private:
    CnnArchitecture arch_;
    std::size_t input_h_ = 0, input_w_ = 0;
    std::size_t flat_size_ = 0;
    std::vector<ConvBlockParams> blocks_;
    std::vector<DenseLayer> dense_;
    std::vector<Matrix> dense_grad_w_;
    std::vector<Vector> dense_grad_b_;

    struct BatchCache;
    double forward_backward(const std::vector<Matrix>& images, const Vector& targets,
                            bool training, Rng* dropout_rng);
};

}  // namespace ml
