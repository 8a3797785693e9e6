#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ml/matrix.hpp"
#include "ml/rng.hpp"

namespace ml {

enum class OptimizerKind { sgd, momentum, adam };

struct TrainConfig {
    double lr = 0.001;
    double momentum = 0.4;
    double weight_decay = 0.0;     // lambda on sum of squared weights
    double dropout = 0.0;          // p in [0, 1)
    double clip_threshold = 0.0;   // 0 disables norm clipping
    OptimizerKind optimizer = OptimizerKind::adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t batch_size = 32;
    std::size_t epochs = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

struct FitReport {
    Vector loss_history;
    std::map<std::string, double> metrics;
    std::uint64_t seed = 0;
};

/// One trainable tensor (parameters and their gradient accumulator).
struct ParamBlock {
    double* params = nullptr;
    double* grads = nullptr;
    std::size_t size = 0;
};

/// Per-block optimizer state; adam keeps first/second moments, momentum keeps
/// the previous update.
class Optimizer {
public:
    Optimizer(const TrainConfig& config, const std::vector<ParamBlock>& blocks);

    /// Applies one update from the accumulated gradients, clearing them.
    /// Norm clipping, when enabled, rescales the concatenated gradient.
    void step(std::vector<ParamBlock>& blocks);

private:
    TrainConfig config_;
    std::vector<Vector> m1_;
    std::vector<Vector> m2_;
    std::size_t t_ = 0;
};

/// Standard bias-corrected Adam update for a single tensor; t counts updates
/// starting at 1.
void adam_update(Vector& params, const Vector& grads, Vector& m1, Vector& m2, std::size_t t,
                 double lr, double beta1, double beta2, double eps);

/// Norm clipping: rescales g to norm c when ||g|| > c.
Vector clip_gradient(const Vector& g, double c);
/// In-place variant over parameter blocks; returns the pre-clip global norm.
double clip_gradient_blocks(std::vector<ParamBlock>& blocks, double c);

/// Normal draws with mean 0 and variance 2/(fan_in + fan_out).
Matrix glorot_init(std::size_t fan_in, std::size_t fan_out, Rng& rng);

enum class DropoutMode { training, inference };

/// Inverted dropout: in training units are zeroed with probability p and the
/// survivors scaled by 1/(1-p); inference is the identity.
Vector dropout_mask(std::size_t size, double p, Rng& rng, DropoutMode mode);
void apply_mask(std::span<double> values, const Vector& mask);

}  // namespace ml
