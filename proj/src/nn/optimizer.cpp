#include "ml/nn/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace ml {

void TrainConfig::validate() const {
    if (lr <= 0.0) throw std::invalid_argument("TrainConfig: lr must be > 0");
    if (momentum < 0.0 || momentum > 1.0) {
        throw std::invalid_argument("TrainConfig: momentum must be in [0, 1]");
    }
    if (dropout < 0.0 || dropout >= 1.0) {
        throw std::invalid_argument("TrainConfig: dropout must be in [0, 1)");
    }
    if (weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
    if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
        throw std::invalid_argument("TrainConfig: adam betas must be in [0, 1)");
    }
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
}

Optimizer::Optimizer(const TrainConfig& config, const std::vector<ParamBlock>& blocks)
    : config_(config) {
    config_.validate();
    if (config_.optimizer != OptimizerKind::sgd) {
        for (const auto& b : blocks) {
            m1_.emplace_back(b.size, 0.0);
            if (config_.optimizer == OptimizerKind::adam) m2_.emplace_back(b.size, 0.0);
        }
    }
}

void Optimizer::step(std::vector<ParamBlock>& blocks) {
    if (config_.clip_threshold > 0.0) {
        clip_gradient_blocks(blocks, config_.clip_threshold);
    }
    ++t_;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        ParamBlock& b = blocks[bi];
        switch (config_.optimizer) {
            case OptimizerKind::sgd:
                for (std::size_t i = 0; i < b.size; ++i) b.params[i] -= config_.lr * b.grads[i];
                break;
            case OptimizerKind::momentum:
                for (std::size_t i = 0; i < b.size; ++i) {
                    const double update =
                        -config_.lr * b.grads[i] + config_.momentum * m1_[bi][i];
                    b.params[i] += update;
                    m1_[bi][i] = update;
                }
                break;
            case OptimizerKind::adam: {
                const double bc1 = 1.0 - std::pow(config_.adam_beta1, static_cast<double>(t_));
                const double bc2 = 1.0 - std::pow(config_.adam_beta2, static_cast<double>(t_));
                for (std::size_t i = 0; i < b.size; ++i) {
                    m1_[bi][i] = config_.adam_beta1 * m1_[bi][i] +
                                 (1.0 - config_.adam_beta1) * b.grads[i];
                    m2_[bi][i] = config_.adam_beta2 * m2_[bi][i] +
                                 (1.0 - config_.adam_beta2) * b.grads[i] * b.grads[i];
                    const double mhat = m1_[bi][i] / bc1;
                    const double vhat = m2_[bi][i] / bc2;
                    b.params[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.adam_eps);
                }
                break;
            }
        }
        for (std::size_t i = 0; i < b.size; ++i) b.grads[i] = 0.0;
    }
}

void adam_update(Vector& params, const Vector& grads, Vector& m1, Vector& m2, std::size_t t,
                 double lr, double beta1, double beta2, double eps) {
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw std::invalid_argument("adam_update: betas must be in [0, 1)");
    }
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m1[i] = beta1 * m1[i] + (1.0 - beta1) * grads[i];
        m2[i] = beta2 * m2[i] + (1.0 - beta2) * grads[i] * grads[i];
        params[i] -= lr * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + eps);
    }
}

Vector clip_gradient(const Vector& g, double c) {
    if (c <= 0.0) throw std::invalid_argument("clip_gradient: threshold must be > 0");
    const double norm = norm2(g);
    if (norm <= c) return g;
    Vector out(g.size());
    const double scale = c / norm;
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] * scale;
    return out;
}

double clip_gradient_blocks(std::vector<ParamBlock>& blocks, double c) {
    if (c <= 0.0) throw std::invalid_argument("clip_gradient_blocks: threshold must be > 0");
    double sq = 0.0;
    for (const auto& b : blocks) {
        for (std::size_t i = 0; i < b.size; ++i) sq += b.grads[i] * b.grads[i];
    }
    const double norm = std::sqrt(sq);
    if (norm > c) {
        const double scale = c / norm;
        for (auto& b : blocks) {
            for (std::size_t i = 0; i < b.size; ++i) b.grads[i] *= scale;
        }
    }
    return norm;
}

Matrix glorot_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("glorot_init: fans must be >= 1");
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(fan_in, fan_out);
    for (auto& v : m.data()) v = rng.normal(0.0, sd);
    return m;
}

Vector dropout_mask(std::size_t size, double p, Rng& rng, DropoutMode mode) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout_mask: p must be in [0, 1)");
    Vector mask(size, 1.0);
    if (mode == DropoutMode::inference || p == 0.0) return mask;
    const double keep_scale = 1.0 / (1.0 - p);
    for (auto& v : mask) v = rng.uniform() < p ? 0.0 : keep_scale;
    return mask;
}

void apply_mask(std::span<double> values, const Vector& mask) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] *= mask[i];
}

}  // namespace ml
