#include "ml/nn/mlp.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ml {

Mlp::Mlp(const std::vector<std::size_t>& sizes, const std::vector<Activation>& acts, Rng& rng) {
    if (sizes.size() < 2 || acts.size() != sizes.size() - 1) {
        throw std::invalid_argument("Mlp: need n sizes and n-1 activations");
    }
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        DenseLayer layer;
        layer.w = glorot_init(sizes[l], sizes[l + 1], rng);
        layer.b.assign(sizes[l + 1], 0.0);
        layer.act = acts[l];
        layers_.push_back(std::move(layer));
    }
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {}

Mlp::Trace Mlp::forward(std::span<const double> x) const {
    Trace t;
    t.act.emplace_back(x.begin(), x.end());
    for (const auto& layer : layers_) {
        const Vector& in = t.act.back();
        if (in.size() != layer.w.rows()) throw std::invalid_argument("Mlp: dimension mismatch");
        Vector z(layer.w.cols());
        for (std::size_t j = 0; j < layer.w.cols(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < layer.w.rows(); ++i) s += in[i] * layer.w(i, j);
            z[j] = s + layer.b[j];
        }
        Vector a(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) a[j] = activate(layer.act, z[j]);
        t.pre.push_back(std::move(z));
        t.act.push_back(std::move(a));
    }
    return t;
}

Vector Mlp::predict(std::span<const double> x) const { return forward(x).act.back(); }

void Mlp::ensure_grads() {
    if (grad_w_.size() == layers_.size()) return;
    grad_w_.clear();
    grad_b_.clear();
    for (const auto& layer : layers_) {
        grad_w_.emplace_back(layer.w.rows(), layer.w.cols());
        grad_b_.emplace_back(layer.b.size(), 0.0);
    }
}

double Mlp::accumulate_gradients(std::span<const double> x, std::span<const double> target,
                                 const std::vector<Vector>* layer_masks) {
    ensure_grads();
    Trace t = forward(x);
    if (layer_masks) {
        // Recompute the forward pass with masked activations.
        t.act[0].assign(x.begin(), x.end());
        apply_mask(t.act[0], (*layer_masks)[0]);
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& layer = layers_[l];
            for (std::size_t j = 0; j < layer.w.cols(); ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < layer.w.rows(); ++i) {
                    s += t.act[l][i] * layer.w(i, j);
                }
                t.pre[l][j] = s + layer.b[j];
                t.act[l + 1][j] = activate(layer.act, t.pre[l][j]);
            }
            if (l + 1 < layers_.size()) apply_mask(t.act[l + 1], (*layer_masks)[l + 1]);
        }
    }

    const Vector& out = t.act.back();
    double loss = 0.0;
    Vector delta(out.size());  // d(loss)/d(pre-activation of current layer)
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double err = out[k] - target[k];
        loss += err * err;
        delta[k] = 2.0 * err * activate_deriv(layers_.back().act, t.pre.back()[k]);
    }

    for (std::size_t li = layers_.size(); li-- > 0;) {
        const auto& layer = layers_[li];
        const Vector& in = t.act[li];
        for (std::size_t j = 0; j < layer.w.cols(); ++j) {
            grad_b_[li][j] += delta[j];
            for (std::size_t i = 0; i < layer.w.rows(); ++i) {
                grad_w_[li](i, j) += in[i] * delta[j];
            }
        }
        if (li == 0) break;
        Vector prev(layer.w.rows(), 0.0);
        for (std::size_t i = 0; i < layer.w.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < layer.w.cols(); ++j) s += layer.w(i, j) * delta[j];
            if (layer_masks) s *= (*layer_masks)[li][i];
            prev[i] = s * activate_deriv(layers_[li - 1].act, t.pre[li - 1][i]);
        }
        delta = std::move(prev);
    }
    return loss;
}

double Mlp::loss(const Matrix& x, const Matrix& targets) const {
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const Vector out = predict(x.row(i));
        for (std::size_t k = 0; k < out.size(); ++k) {
            const double err = out[k] - targets(i, k);
            total += err * err;
        }
    }
    return total / static_cast<double>(x.rows());
}

std::vector<ParamBlock> Mlp::param_blocks() {
    ensure_grads();
    std::vector<ParamBlock> blocks;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        blocks.push_back({layers_[l].w.data().data(), grad_w_[l].data().data(),
                          layers_[l].w.size()});
        blocks.push_back({layers_[l].b.data(), grad_b_[l].data(), layers_[l].b.size()});
    }
    return blocks;
}

FitReport Mlp::train(const Matrix& x, const Matrix& targets, const TrainConfig& config) {
    config.validate();
    if (x.rows() != targets.rows() || x.rows() == 0) {
        throw std::invalid_argument("Mlp::train: shape mismatch or empty input");
    }
    ensure_grads();
    std::vector<ParamBlock> blocks = param_blocks();
    Optimizer opt(config, blocks);
    Rng rng(config.seed);

    FitReport report;
    report.seed = config.seed;
    const std::size_t n = x.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.batch_size < n) rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            for (std::size_t idx = start; idx < stop; ++idx) {
                const std::size_t i = order[idx];
                if (config.dropout > 0.0) {
                    std::vector<Vector> masks;
                    masks.push_back(dropout_mask(layers_.front().w.rows(), config.dropout, rng,
                                                 DropoutMode::training));
                    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
                        masks.push_back(dropout_mask(layers_[l].w.cols(), config.dropout, rng,
                                                     DropoutMode::training));
                    }
                    epoch_loss += accumulate_gradients(x.row(i), targets.row(i), &masks);
                } else {
                    epoch_loss += accumulate_gradients(x.row(i), targets.row(i));
                }
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (std::size_t l = 0; l < layers_.size(); ++l) {
                for (auto& g : grad_w_[l].data()) g *= inv;
                for (auto& g : grad_b_[l]) g *= inv;
                if (config.weight_decay > 0.0) {
                    // d/dw of lambda sum w^2 is exactly 2 lambda w.
                    for (std::size_t e = 0; e < layers_[l].w.size(); ++e) {
                        grad_w_[l].data()[e] += 2.0 * config.weight_decay * layers_[l].w.data()[e];
                    }
                }
            }
            opt.step(blocks);
        }
        epoch_loss /= static_cast<double>(n);
        report.loss_history.push_back(epoch_loss);
        if (!std::isfinite(epoch_loss)) {
            report.metrics["diverged"] = 1.0;
            break;
        }
    }
    report.metrics["final_loss"] = report.loss_history.empty() ? 0.0 : report.loss_history.back();
    return report;
}

ThresholdNet::Forward ThresholdNet::forward(std::span<const double> input) const {
    Forward f;
    f.a.resize(t1.size());
    for (std::size_t i = 0; i < t1.size(); ++i) {
        f.a[i] = activate(Activation::sigmoid, input[i] - t1[i]);
    }
    f.b.resize(t2.size());
    for (std::size_t j = 0; j < t2.size(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < f.a.size(); ++i) s += v(i, j) * f.a[i];
        f.b[j] = activate(Activation::sigmoid, s + -t2[j]);
    }
    f.c.resize(t3.size());
    for (std::size_t k = 0; k < t3.size(); ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < f.b.size(); ++j) s += w(j, k) * f.b[j];
        f.c[k] = activate(Activation::sigmoid, s + -t3[k]);
    }
    return f;
}

ThresholdNet::Errors ThresholdNet::errors(const Forward& f, std::span<const double> target) const {
    Errors e;
    e.output.resize(f.c.size());
    for (std::size_t k = 0; k < f.c.size(); ++k) {
        e.output[k] = f.c[k] * (1.0 - f.c[k]) * (target[k] - f.c[k]);
    }
    e.hidden.resize(f.b.size());
    for (std::size_t j = 0; j < f.b.size(); ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < f.c.size(); ++k) s += w(j, k) * e.output[k];
        e.hidden[j] = f.b[j] * (1.0 - f.b[j]) * s;
    }
    return e;
}

ThresholdNet::Errors ThresholdNet::step(std::span<const double> input,
                                        std::span<const double> target, double lr) {
    const Forward f = forward(input);
    const Errors e = errors(f, target);  // hidden errors use the pre-update w
    for (std::size_t j = 0; j < f.b.size(); ++j) {
        for (std::size_t k = 0; k < f.c.size(); ++k) w(j, k) += lr * f.b[j] * e.output[k];
    }
    for (std::size_t k = 0; k < f.c.size(); ++k) t3[k] -= lr * e.output[k];
    for (std::size_t i = 0; i < f.a.size(); ++i) {
        for (std::size_t j = 0; j < f.b.size(); ++j) v(i, j) += lr * f.a[i] * e.hidden[j];
    }
    for (std::size_t j = 0; j < f.b.size(); ++j) t2[j] -= lr * e.hidden[j];
    return e;
}

std::size_t ThresholdNet::train_until(std::span<const double> input,
                                      std::span<const double> target, double lr, double tol,
                                      std::size_t max_iter) {
    for (std::size_t it = 1; it <= max_iter; ++it) {
        const Forward f = forward(input);
        bool done = true;
        for (std::size_t k = 0; k < f.c.size(); ++k) {
            if (std::fabs(target[k] - f.c[k]) >= tol) done = false;
        }
        if (done) return it;
        step(input, target, lr);
    }
    return max_iter;
}

Mlp ThresholdNet::to_bias_form() const {
    std::vector<DenseLayer> layers(3);
    layers[0].w = Matrix::identity(t1.size());
    layers[0].b.resize(t1.size());
    for (std::size_t i = 0; i < t1.size(); ++i) layers[0].b[i] = -t1[i];
    layers[0].act = Activation::sigmoid;
    layers[1].w = v;
    layers[1].b.resize(t2.size());
    for (std::size_t j = 0; j < t2.size(); ++j) layers[1].b[j] = -t2[j];
    layers[1].act = Activation::sigmoid;
    layers[2].w = w;
    layers[2].b.resize(t3.size());
    for (std::size_t k = 0; k < t3.size(); ++k) layers[2].b[k] = -t3[k];
    layers[2].act = Activation::sigmoid;
    return Mlp(std::move(layers));
}

ThresholdNet worked_example_net() {
    ThresholdNet net;
    net.v = Matrix{{-1.0, -0.5, 0.5}, {1.0, 0.0, -0.5}, {0.5, -0.5, 0.5}};
    net.w = Matrix{{-1.0, -0.5, 0.5}, {1.0, 0.0, 0.5}, {0.5, -0.5, 0.5}};
    net.t1 = {0.0, 0.0, 0.0};
    net.t2 = {0.5, 0.0, -0.5};
    net.t3 = {0.0, 0.5, -0.5};
    return net;
}

BatchNorm::BatchNorm(std::size_t features, double momentum_, double eps_)
    : gamma(features, 1.0),
      beta(features, 0.0),
      running_mean(features, 0.0),
      running_var(features, 1.0),
      grad_gamma(features, 0.0),
      grad_beta(features, 0.0),
      momentum(momentum_),
      eps(eps_) {}

Matrix BatchNorm::forward(const Matrix& batch, bool training) {
    const std::size_t n = batch.rows(), f = batch.cols();
    if (f != gamma.size()) throw std::invalid_argument("BatchNorm: feature count mismatch");
    Matrix out(n, f);
    if (!training) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < f; ++j) {
                const double x_hat =
                    (batch(i, j) - running_mean[j]) / std::sqrt(running_var[j] + eps);
                out(i, j) = gamma[j] * x_hat + beta[j];
            }
        }
        return out;
    }
    if (n < 2) throw std::invalid_argument("BatchNorm: training needs batch size >= 2");
    last_x_hat_ = Matrix(n, f);
    last_var_.assign(f, 0.0);
    for (std::size_t j = 0; j < f; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += batch(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            var += (batch(i, j) - mean) * (batch(i, j) - mean);
        }
        var /= static_cast<double>(n);
        last_var_[j] = var;
        running_mean[j] = momentum * running_mean[j] + (1.0 - momentum) * mean;
        running_var[j] = momentum * running_var[j] + (1.0 - momentum) * var;
        const double inv_sd = 1.0 / std::sqrt(var + eps);
        for (std::size_t i = 0; i < n; ++i) {
            last_x_hat_(i, j) = (batch(i, j) - mean) * inv_sd;
            out(i, j) = gamma[j] * last_x_hat_(i, j) + beta[j];
        }
    }
    return out;
}

Matrix BatchNorm::backward(const Matrix& grad_out) {
    const std::size_t n = grad_out.rows(), f = grad_out.cols();
    if (last_x_hat_.rows() != n) throw std::logic_error("BatchNorm: no cached forward");
    Matrix grad_in(n, f);
    for (std::size_t j = 0; j < f; ++j) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum_dy += grad_out(i, j);
            sum_dy_xhat += grad_out(i, j) * last_x_hat_(i, j);
        }
        grad_beta[j] += sum_dy;
        grad_gamma[j] += sum_dy_xhat;
        const double inv_sd = 1.0 / std::sqrt(last_var_[j] + eps);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            grad_in(i, j) = gamma[j] * inv_sd *
                            (grad_out(i, j) - inv_n * sum_dy -
                             last_x_hat_(i, j) * inv_n * sum_dy_xhat);
        }
    }
    return grad_in;
}

}  // namespace ml
