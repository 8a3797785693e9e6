#include "ml/nn/conv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ml {

Vector conv1d(const Vector& input, const Conv1dSpec& spec) {
    if (spec.stride < 1) throw std::invalid_argument("conv1d: stride must be >= 1");
    if (spec.kernel.empty()) throw std::invalid_argument("conv1d: empty kernel");
    const std::size_t padded = input.size() + 2 * spec.padding;
    if (spec.kernel.size() > padded) {
        throw std::invalid_argument("conv1d: kernel larger than padded input");
    }
    const std::size_t out_len = (padded - spec.kernel.size()) / spec.stride + 1;
    Vector out(out_len, 0.0);
    for (std::size_t j = 0; j < out_len; ++j) {
        double s = 0.0;
        for (std::size_t m = 0; m < spec.kernel.size(); ++m) {
            const std::size_t p = j * spec.stride + m;  // position in padded input
            if (p < spec.padding || p >= spec.padding + input.size()) continue;
            s += spec.kernel[m] * input[p - spec.padding];
        }
        out[j] = s;
    }
    return out;
}

namespace {

// Valid cross-correlation of a zero-padded input with one kernel.
Matrix corr2d(const Matrix& input, const Matrix& kernel, std::size_t stride,
              std::size_t padding) {
    const std::size_t ph = input.rows() + 2 * padding;
    const std::size_t pw = input.cols() + 2 * padding;
    if (kernel.rows() > ph || kernel.cols() > pw) {
        throw std::invalid_argument("conv2d: kernel larger than padded input");
    }
    const std::size_t oh = (ph - kernel.rows()) / stride + 1;
    const std::size_t ow = (pw - kernel.cols()) / stride + 1;
    Matrix out(oh, ow);
    for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
            double s = 0.0;
            for (std::size_t a = 0; a < kernel.rows(); ++a) {
                for (std::size_t b = 0; b < kernel.cols(); ++b) {
                    const std::size_t pi = i * stride + a;
                    const std::size_t pj = j * stride + b;
                    if (pi < padding || pj < padding || pi >= padding + input.rows() ||
                        pj >= padding + input.cols()) {
                        continue;
                    }
                    s += kernel(a, b) * input(pi - padding, pj - padding);
                }
            }
            out(i, j) = s;
        }
    }
    return out;
}

}  // namespace

std::vector<Matrix> conv2d(const Matrix& input, const Conv2dSpec& spec) {
    if (spec.stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    if (spec.kernels.empty()) throw std::invalid_argument("conv2d: no kernels");
    std::vector<Matrix> out(spec.kernels.size());
    const std::ptrdiff_t nf = static_cast<std::ptrdiff_t>(spec.kernels.size());
#pragma omp parallel for schedule(static) if (nf > 2)
    for (std::ptrdiff_t f = 0; f < nf; ++f) {
        out[static_cast<std::size_t>(f)] =
            corr2d(input, spec.kernels[static_cast<std::size_t>(f)], spec.stride, spec.padding);
    }
    return out;
}

Vector pool1d(const Vector& input, std::size_t window, PoolKind kind, std::size_t stride) {
    if (window < 1 || window > input.size()) throw std::invalid_argument("pool1d: bad window");
    if (stride == 0) stride = window;
    const std::size_t out_len = (input.size() - window) / stride + 1;
    Vector out(out_len);
    for (std::size_t j = 0; j < out_len; ++j) {
        if (kind == PoolKind::max) {
            double m = input[j * stride];
            for (std::size_t k = 1; k < window; ++k) m = std::max(m, input[j * stride + k]);
            out[j] = m;
        } else {
            double s = 0.0;
            for (std::size_t k = 0; k < window; ++k) s += input[j * stride + k];
            out[j] = s / static_cast<double>(window);
        }
    }
    return out;
}

Matrix pool2d(const Matrix& input, std::size_t window, PoolKind kind, std::size_t stride) {
    if (window < 1 || window > input.rows() || window > input.cols()) {
        throw std::invalid_argument("pool2d: bad window");
    }
    if (stride == 0) stride = window;
    const std::size_t oh = (input.rows() - window) / stride + 1;
    const std::size_t ow = (input.cols() - window) / stride + 1;
    Matrix out(oh, ow);
    for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
            if (kind == PoolKind::max) {
                double m = input(i * stride, j * stride);
                for (std::size_t a = 0; a < window; ++a) {
                    for (std::size_t b = 0; b < window; ++b) {
                        m = std::max(m, input(i * stride + a, j * stride + b));
                    }
                }
                out(i, j) = m;
            } else {
                double s = 0.0;
                for (std::size_t a = 0; a < window; ++a) {
                    for (std::size_t b = 0; b < window; ++b) {
                        s += input(i * stride + a, j * stride + b);
                    }
                }
                out(i, j) = s / static_cast<double>(window * window);
            }
        }
    }
    return out;
}

Vector flatten(const std::vector<Matrix>& feature_maps) {
    Vector out;
    for (const auto& m : feature_maps) out.insert(out.end(), m.data().begin(), m.data().end());
    return out;
}

CnnRegressor::CnnRegressor(std::size_t input_h, std::size_t input_w, const CnnArchitecture& arch,
                           Rng& rng)
    : arch_(arch), input_h_(input_h), input_w_(input_w) {
    std::size_t h = input_h, w = input_w, channels = 1;
    std::ostringstream trace;
    trace << "input " << h << "x" << w << "x" << channels;
    for (const auto& spec : arch.conv_blocks) {
        ConvBlockParams block;
        block.in_channels = channels;
        block.in_h = h;
        block.in_w = w;
        if (spec.kernel > h || spec.kernel > w) {
            throw std::invalid_argument("CnnRegressor: kernel " + std::to_string(spec.kernel) +
                                        " does not fit after " + trace.str());
        }
        h = h - spec.kernel + 1;
        w = w - spec.kernel + 1;
        block.out_h = h;
        block.out_w = w;
        trace << " -> conv" << spec.kernel << "x" << spec.kernel << " " << h << "x" << w << "x"
              << spec.filters;
        if (spec.pool_window > 1) {
            if (spec.pool_window > h || spec.pool_window > w) {
                throw std::invalid_argument("CnnRegressor: pool window " +
                                            std::to_string(spec.pool_window) +
                                            " does not fit after " + trace.str());
            }
            h /= spec.pool_window;
            w /= spec.pool_window;
            trace << " -> pool " << h << "x" << w;
        }
        block.pooled_h = h;
        block.pooled_w = w;
        const double fan_scale =
            std::sqrt(2.0 / static_cast<double>(spec.kernel * spec.kernel * channels));
        block.kernels.resize(spec.filters);
        block.grad_kernels.resize(spec.filters);
        for (std::size_t oc = 0; oc < spec.filters; ++oc) {
            for (std::size_t ic = 0; ic < channels; ++ic) {
                Matrix k(spec.kernel, spec.kernel);
                for (auto& v : k.data()) v = rng.normal(0.0, fan_scale);
                block.kernels[oc].push_back(std::move(k));
                block.grad_kernels[oc].emplace_back(spec.kernel, spec.kernel);
            }
        }
        block.bias.assign(spec.filters, 0.0);
        block.grad_bias.assign(spec.filters, 0.0);
        if (spec.batch_norm) block.bn = std::make_unique<BatchNorm>(spec.filters);
        blocks_.push_back(std::move(block));
        channels = spec.filters;
    }
    flat_size_ = h * w * channels;
    if (flat_size_ == 0) throw std::invalid_argument("CnnRegressor: empty feature map");

    std::size_t in = flat_size_;
    for (std::size_t width : arch.dense_sizes) {
        DenseLayer layer;
        layer.w = glorot_init(in, width, rng);
        layer.b.assign(width, 0.0);
        layer.act = Activation::relu;
        dense_.push_back(std::move(layer));
        in = width;
    }
    DenseLayer out_layer;
    out_layer.w = glorot_init(in, 1, rng);
    out_layer.b.assign(1, 0.0);
    out_layer.act = Activation::linear;
    dense_.push_back(std::move(out_layer));
    for (const auto& l : dense_) {
        dense_grad_w_.emplace_back(l.w.rows(), l.w.cols());
        dense_grad_b_.emplace_back(l.b.size(), 0.0);
    }
}

namespace {

Image conv_block_forward(const CnnRegressor::ConvBlockParams& block, const Image& in,
                         std::vector<Matrix>* pre_relu) {
    const std::size_t filters = block.kernels.size();
    Image out(filters);
    for (std::size_t oc = 0; oc < filters; ++oc) {
        Matrix z(block.out_h, block.out_w);
        for (std::size_t ic = 0; ic < block.in_channels; ++ic) {
            const Matrix c = corr2d(in[ic], block.kernels[oc][ic], 1, 0);
            for (std::size_t e = 0; e < z.size(); ++e) z.data()[e] += c.data()[e];
        }
        for (auto& v : z.data()) v += block.bias[oc];
        if (pre_relu) (*pre_relu)[oc] = z;
        for (auto& v : z.data()) v = v < 0.0 ? 0.0 : v;
        out[oc] = std::move(z);
    }
    return out;
}

}  // namespace

double CnnRegressor::predict(const Matrix& image) const {
    if (image.rows() != input_h_ || image.cols() != input_w_) {
        throw std::invalid_argument("CnnRegressor::predict: image shape mismatch");
    }
    Image current{image};
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        const auto& block = blocks_[bi];
        const auto& spec = arch_.conv_blocks[bi];
        Image mapped = conv_block_forward(block, current, nullptr);
        if (spec.pool_window > 1) {
            for (auto& ch : mapped) ch = pool2d(ch, spec.pool_window, PoolKind::max);
        }
        if (block.bn) {
            // Inference-mode normalization from the running statistics.
            for (std::size_t c = 0; c < mapped.size(); ++c) {
                const double inv_sd = 1.0 / std::sqrt(block.bn->running_var[c] + block.bn->eps);
                for (auto& v : mapped[c].data()) {
                    v = block.bn->gamma[c] * (v - block.bn->running_mean[c]) * inv_sd +
                        block.bn->beta[c];
                }
            }
        }
        current = std::move(mapped);
    }
    Vector x = flatten(current);
    for (const auto& layer : dense_) {
        Vector z(layer.w.cols());
        for (std::size_t j = 0; j < layer.w.cols(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < layer.w.rows(); ++i) s += x[i] * layer.w(i, j);
            z[j] = activate(layer.act, s + layer.b[j]);
        }
        x = std::move(z);
    }
    return x[0];
}

struct CnnRegressor::BatchCache {
    // Per block: inputs, pre-relu maps, post-activation maps (after pool/bn).
    std::vector<std::vector<Image>> inputs;
    std::vector<std::vector<std::vector<Matrix>>> pre_relu;
    std::vector<std::vector<Image>> post_relu;   // after relu, before pool
    std::vector<Matrix> dense_pre;               // per layer, batch x width
    std::vector<Matrix> dense_act;               // dense_act[0] = flattened input
    std::vector<Matrix> dense_masks;             // dropout masks per hidden layer
};

double CnnRegressor::forward_backward(const std::vector<Matrix>& images, const Vector& targets,
                                      bool training, Rng* dropout_rng) {
    const std::size_t B = images.size();
    BatchCache cache;
    cache.inputs.resize(blocks_.size());
    cache.pre_relu.resize(blocks_.size());
    cache.post_relu.resize(blocks_.size());

    std::vector<Image> current(B);
    for (std::size_t s = 0; s < B; ++s) current[s] = {images[s]};

    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        auto& block = blocks_[bi];
        const auto& spec = arch_.conv_blocks[bi];
        cache.inputs[bi] = current;
        cache.pre_relu[bi].assign(B, std::vector<Matrix>(block.kernels.size()));
        cache.post_relu[bi].resize(B);
        std::vector<Image> next(B);
        for (std::size_t s = 0; s < B; ++s) {
            Image mapped = conv_block_forward(block, current[s], &cache.pre_relu[bi][s]);
            cache.post_relu[bi][s] = mapped;
            if (spec.pool_window > 1) {
                for (auto& ch : mapped) ch = pool2d(ch, spec.pool_window, PoolKind::max);
            }
            next[s] = std::move(mapped);
        }
        if (block.bn) {
            const std::size_t spatial = block.pooled_h * block.pooled_w;
            Matrix rows(B * spatial, block.kernels.size());
            for (std::size_t s = 0; s < B; ++s) {
                for (std::size_t c = 0; c < next[s].size(); ++c) {
                    for (std::size_t e = 0; e < spatial; ++e) {
                        rows(s * spatial + e, c) = next[s][c].data()[e];
                    }
                }
            }
            const Matrix normed = block.bn->forward(rows, training);
            for (std::size_t s = 0; s < B; ++s) {
                for (std::size_t c = 0; c < next[s].size(); ++c) {
                    for (std::size_t e = 0; e < spatial; ++e) {
                        next[s][c].data()[e] = normed(s * spatial + e, c);
                    }
                }
            }
        }
        current = std::move(next);
    }

    // Dense head.
    Matrix x(B, flat_size_);
    for (std::size_t s = 0; s < B; ++s) {
        const Vector flat = flatten(current[s]);
        for (std::size_t e = 0; e < flat.size(); ++e) x(s, e) = flat[e];
    }
    cache.dense_act.push_back(x);
    for (std::size_t li = 0; li < dense_.size(); ++li) {
        const auto& layer = dense_[li];
        const Matrix& in = cache.dense_act.back();
        Matrix pre(B, layer.w.cols());
        Matrix act(B, layer.w.cols());
        for (std::size_t s = 0; s < B; ++s) {
            for (std::size_t j = 0; j < layer.w.cols(); ++j) {
                double sum = 0.0;
                for (std::size_t i = 0; i < layer.w.rows(); ++i) sum += in(s, i) * layer.w(i, j);
                pre(s, j) = sum + layer.b[j];
                act(s, j) = activate(layer.act, pre(s, j));
            }
        }
        if (training && arch_.dense_dropout > 0.0 && li + 1 < dense_.size()) {
            Matrix mask(B, layer.w.cols());
            for (std::size_t s = 0; s < B; ++s) {
                const Vector m = dropout_mask(layer.w.cols(), arch_.dense_dropout, *dropout_rng,
                                              DropoutMode::training);
                for (std::size_t j = 0; j < m.size(); ++j) {
                    mask(s, j) = m[j];
                    act(s, j) *= m[j];
                }
            }
            cache.dense_masks.push_back(std::move(mask));
        } else if (li + 1 < dense_.size()) {
            Matrix mask(B, layer.w.cols());
            for (auto& v : mask.data()) v = 1.0;
            cache.dense_masks.push_back(std::move(mask));
        }
        cache.dense_pre.push_back(std::move(pre));
        cache.dense_act.push_back(std::move(act));
    }

    double loss = 0.0;
    const Matrix& preds = cache.dense_act.back();
    for (std::size_t s = 0; s < B; ++s) {
        const double e = preds(s, 0) - targets[s];
        loss += e * e;
    }
    loss /= static_cast<double>(B);
    if (!training) return loss;

    // Backward through the dense head.
    Matrix delta(B, 1);
    for (std::size_t s = 0; s < B; ++s) {
        delta(s, 0) = 2.0 * (preds(s, 0) - targets[s]) / static_cast<double>(B);
    }
    for (std::size_t li = dense_.size(); li-- > 0;) {
        const auto& layer = dense_[li];
        Matrix d_pre(B, layer.w.cols());
        for (std::size_t s = 0; s < B; ++s) {
            for (std::size_t j = 0; j < layer.w.cols(); ++j) {
                d_pre(s, j) = delta(s, j) * activate_deriv(layer.act, cache.dense_pre[li](s, j));
            }
        }
        const Matrix& in = cache.dense_act[li];
        for (std::size_t s = 0; s < B; ++s) {
            for (std::size_t j = 0; j < layer.w.cols(); ++j) {
                dense_grad_b_[li][j] += d_pre(s, j);
                for (std::size_t i = 0; i < layer.w.rows(); ++i) {
                    dense_grad_w_[li](i, j) += in(s, i) * d_pre(s, j);
                }
            }
        }
        if (li == 0) {
            delta = Matrix(B, flat_size_);
            for (std::size_t s = 0; s < B; ++s) {
                for (std::size_t i = 0; i < flat_size_; ++i) {
                    double sum = 0.0;
                    for (std::size_t j = 0; j < layer.w.cols(); ++j) {
                        sum += layer.w(i, j) * d_pre(s, j);
                    }
                    delta(s, i) = sum;
                }
            }
            break;
        }
        Matrix d_in(B, layer.w.rows());
        for (std::size_t s = 0; s < B; ++s) {
            for (std::size_t i = 0; i < layer.w.rows(); ++i) {
                double sum = 0.0;
                for (std::size_t j = 0; j < layer.w.cols(); ++j) {
                    sum += layer.w(i, j) * d_pre(s, j);
                }
                d_in(s, i) = sum * cache.dense_masks[li - 1](s, i);
            }
        }
        delta = std::move(d_in);
    }

    // Reshape the flattened gradient back into per-sample channel images.
    std::vector<Image> d_img(B);
    {
        const auto& last = blocks_.back();
        const std::size_t spatial = last.pooled_h * last.pooled_w;
        for (std::size_t s = 0; s < B; ++s) {
            d_img[s].resize(last.kernels.size());
            for (std::size_t c = 0; c < last.kernels.size(); ++c) {
                Matrix g(last.pooled_h, last.pooled_w);
                for (std::size_t e = 0; e < spatial; ++e) g.data()[e] = delta(s, c * spatial + e);
                d_img[s][c] = std::move(g);
            }
        }
    }

    for (std::size_t bi = blocks_.size(); bi-- > 0;) {
        auto& block = blocks_[bi];
        const auto& spec = arch_.conv_blocks[bi];
        const std::size_t spatial = block.pooled_h * block.pooled_w;

        if (block.bn) {
            Matrix rows(B * spatial, block.kernels.size());
            for (std::size_t s = 0; s < B; ++s) {
                for (std::size_t c = 0; c < block.kernels.size(); ++c) {
                    for (std::size_t e = 0; e < spatial; ++e) {
                        rows(s * spatial + e, c) = d_img[s][c].data()[e];
                    }
                }
            }
            const Matrix back = block.bn->backward(rows);
            for (std::size_t s = 0; s < B; ++s) {
                for (std::size_t c = 0; c < block.kernels.size(); ++c) {
                    for (std::size_t e = 0; e < spatial; ++e) {
                        d_img[s][c].data()[e] = back(s * spatial + e, c);
                    }
                }
            }
        }

        // Pool backward (max: route to the argmax), then relu, then conv.
        std::vector<Image> d_prev(B);
        for (std::size_t s = 0; s < B; ++s) {
            Image d_act(block.kernels.size());
            for (std::size_t c = 0; c < block.kernels.size(); ++c) {
                if (spec.pool_window > 1) {
                    const Matrix& act = cache.post_relu[bi][s][c];
                    Matrix g(block.out_h, block.out_w);
                    const std::size_t win = spec.pool_window;
                    for (std::size_t i = 0; i < block.pooled_h; ++i) {
                        for (std::size_t j = 0; j < block.pooled_w; ++j) {
                            std::size_t ai = i * win, aj = j * win;
                            for (std::size_t a = 0; a < win; ++a) {
                                for (std::size_t b = 0; b < win; ++b) {
                                    if (act(i * win + a, j * win + b) > act(ai, aj)) {
                                        ai = i * win + a;
                                        aj = j * win + b;
                                    }
                                }
                            }
                            g(ai, aj) += d_img[s][c](i, j);
                        }
                    }
                    d_act[c] = std::move(g);
                } else {
                    d_act[c] = d_img[s][c];
                }
                // Relu gate.
                const Matrix& pre = cache.pre_relu[bi][s][c];
                for (std::size_t e = 0; e < d_act[c].size(); ++e) {
                    if (pre.data()[e] < 0.0) d_act[c].data()[e] = 0.0;
                }
            }
            // Conv backward.
            d_prev[s].assign(block.in_channels, Matrix(block.in_h, block.in_w));
            for (std::size_t oc = 0; oc < block.kernels.size(); ++oc) {
                const Matrix& dz = d_act[oc];
                double bias_sum = 0.0;
                for (double v : dz.data()) bias_sum += v;
                block.grad_bias[oc] += bias_sum;
                for (std::size_t ic = 0; ic < block.in_channels; ++ic) {
                    const Matrix& in = cache.inputs[bi][s][ic];
                    Matrix& gk = block.grad_kernels[oc][ic];
                    const std::size_t kk = gk.rows();
                    for (std::size_t a = 0; a < kk; ++a) {
                        for (std::size_t b = 0; b < kk; ++b) {
                            double sum = 0.0;
                            for (std::size_t i = 0; i < dz.rows(); ++i) {
                                for (std::size_t j = 0; j < dz.cols(); ++j) {
                                    sum += in(i + a, j + b) * dz(i, j);
                                }
                            }
                            gk(a, b) += sum;
                        }
                    }
                    Matrix& din = d_prev[s][ic];
                    const Matrix& k = block.kernels[oc][ic];
                    for (std::size_t i = 0; i < dz.rows(); ++i) {
                        for (std::size_t j = 0; j < dz.cols(); ++j) {
                            const double d = dz(i, j);
                            for (std::size_t a = 0; a < kk; ++a) {
                                for (std::size_t b = 0; b < kk; ++b) {
                                    din(i + a, j + b) += k(a, b) * d;
                                }
                            }
                        }
                    }
                }
            }
        }
        d_img = std::move(d_prev);
    }
    return loss;
}

double CnnRegressor::compute_gradients(const std::vector<Matrix>& images, const Vector& targets) {
    Rng rng(0);
    return forward_backward(images, targets, true, &rng);
}

std::vector<ParamBlock> CnnRegressor::param_blocks() {
    std::vector<ParamBlock> blocks;
    for (auto& b : blocks_) {
        for (std::size_t oc = 0; oc < b.kernels.size(); ++oc) {
            for (std::size_t ic = 0; ic < b.kernels[oc].size(); ++ic) {
                blocks.push_back({b.kernels[oc][ic].data().data(),
                                  b.grad_kernels[oc][ic].data().data(),
                                  b.kernels[oc][ic].size()});
            }
        }
        blocks.push_back({b.bias.data(), b.grad_bias.data(), b.bias.size()});
        if (b.bn) {
            blocks.push_back({b.bn->gamma.data(), b.bn->grad_gamma.data(), b.bn->gamma.size()});
            blocks.push_back({b.bn->beta.data(), b.bn->grad_beta.data(), b.bn->beta.size()});
        }
    }
    for (std::size_t l = 0; l < dense_.size(); ++l) {
        blocks.push_back({dense_[l].w.data().data(), dense_grad_w_[l].data().data(),
                          dense_[l].w.size()});
        blocks.push_back({dense_[l].b.data(), dense_grad_b_[l].data(), dense_[l].b.size()});
    }
    return blocks;
}

FitReport CnnRegressor::fit(const std::vector<Matrix>& images, const Vector& targets,
                            const TrainConfig& config) {
    config.validate();
    if (images.empty() || images.size() != targets.size()) {
        throw std::invalid_argument("CnnRegressor::fit: bad batch");
    }
    std::vector<ParamBlock> blocks = param_blocks();
    Optimizer opt(config, blocks);
    Rng rng(config.seed);
    Rng dropout_rng = rng.derive(1);

    FitReport report;
    report.seed = config.seed;
    const std::size_t n = images.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::min(config.batch_size, n);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (batch < n) rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            std::vector<Matrix> chunk;
            Vector chunk_y;
            for (std::size_t i = start; i < stop; ++i) {
                chunk.push_back(images[order[i]]);
                chunk_y.push_back(targets[order[i]]);
            }
            bool has_bn = false;
            for (const auto& b : blocks_) has_bn |= b.bn != nullptr;
            if (has_bn && chunk.size() < 2) continue;  // batch norm needs >= 2 rows
            epoch_loss += forward_backward(chunk, chunk_y, true, &dropout_rng);
            ++batches;
            opt.step(blocks);
        }
        epoch_loss /= std::max<std::size_t>(1, batches);
        report.loss_history.push_back(epoch_loss);
        if (!std::isfinite(epoch_loss)) {
            report.metrics["diverged"] = 1.0;
            break;
        }
    }
    report.metrics["final_loss"] = report.loss_history.empty() ? 0.0 : report.loss_history.back();
    return report;
}

}  // namespace ml
