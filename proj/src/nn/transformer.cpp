#include "ml/nn/transformer.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ml {

Vector softmax(const Vector& v) {
    double max_v = -std::numeric_limits<double>::infinity();
    for (double x : v) max_v = std::max(max_v, x);
    Vector out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - max_v);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

Matrix softmax_rows(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const Vector row(m.row(i).begin(), m.row(i).end());
        const Vector s = softmax(row);
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = s[j];
    }
    return out;
}

Matrix positional_encoding(std::size_t seq_len, std::size_t d_model) {
    if (d_model % 2 != 0) throw std::invalid_argument("positional_encoding: d_model must be even");
    Matrix pe(seq_len, d_model);
    for (std::size_t pos = 0; pos < seq_len; ++pos) {
        for (std::size_t i = 0; i < d_model / 2; ++i) {
            const double denom =
                std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(d_model));
            pe(pos, 2 * i) = std::sin(static_cast<double>(pos) / denom);
            pe(pos, 2 * i + 1) = std::cos(static_cast<double>(pos) / denom);
        }
    }
    return pe;
}

namespace {
constexpr double kMaskedLogit = -1e30;
}

Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                            const Matrix* mask) {
    if (q.cols() != k.cols() || k.rows() != v.rows()) {
        throw std::invalid_argument("scaled_dot_attention: incompatible shapes");
    }
    if (mask && (mask->rows() != q.rows() || mask->cols() != k.rows())) {
        throw std::invalid_argument("scaled_dot_attention: mask shape mismatch");
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Matrix logits = matmul(q, transpose(k));
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            logits(i, j) *= scale;
            if (mask && (*mask)(i, j) == 0.0) logits(i, j) = kMaskedLogit;
        }
    }
    return matmul(softmax_rows(logits), v);
}

AttentionHeads AttentionHeads::create(std::size_t heads, std::size_t d_model, Rng& rng) {
    if (heads < 1 || d_model % heads != 0) {
        throw std::invalid_argument("AttentionHeads: d_model must be divisible by head count");
    }
    const std::size_t d_k = d_model / heads;
    AttentionHeads a;
    for (std::size_t h = 0; h < heads; ++h) {
        a.wq.push_back(glorot_init(d_model, d_k, rng));
        a.wk.push_back(glorot_init(d_model, d_k, rng));
        a.wv.push_back(glorot_init(d_model, d_k, rng));
    }
    a.wo = glorot_init(heads * d_k, d_model, rng);
    return a;
}

Matrix multi_head_attention(const AttentionHeads& heads, const Matrix& q_in, const Matrix& k_in,
                            const Matrix& v_in, const Matrix* mask) {
    const std::size_t h = heads.head_count();
    const std::size_t d_v = heads.wv.front().cols();
    Matrix concat(q_in.rows(), h * d_v);
    for (std::size_t i = 0; i < h; ++i) {
        const Matrix head = scaled_dot_attention(matmul(q_in, heads.wq[i]),
                                                 matmul(k_in, heads.wk[i]),
                                                 matmul(v_in, heads.wv[i]), mask);
        for (std::size_t r = 0; r < head.rows(); ++r) {
            for (std::size_t c = 0; c < d_v; ++c) concat(r, i * d_v + c) = head(r, c);
        }
    }
    return matmul(concat, heads.wo);
}

Matrix position_wise_ffn(const Matrix& x, const Matrix& w1, const Vector& b1, const Matrix& w2,
                         const Vector& b2) {
    Matrix hidden = matmul(x, w1);
    for (std::size_t i = 0; i < hidden.rows(); ++i) {
        for (std::size_t j = 0; j < hidden.cols(); ++j) {
            hidden(i, j) = std::max(0.0, hidden(i, j) + b1[j]);
        }
    }
    Matrix out = matmul(hidden, w2);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += b2[j];
    }
    return out;
}

Matrix layer_norm(const Matrix& x, const Vector& gamma, const Vector& beta, double eps) {
    if (x.cols() != gamma.size() || x.cols() != beta.size() || x.cols() < 2) {
        throw std::invalid_argument("layer_norm: bad feature dimension");
    }
    Matrix out(x.rows(), x.cols());
    const double d = static_cast<double>(x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) mean += x(i, j);
        mean /= d;
        double var = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) var += (x(i, j) - mean) * (x(i, j) - mean);
        var /= d;
        const double inv_sd = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < x.cols(); ++j) {
            out(i, j) = gamma[j] * (x(i, j) - mean) * inv_sd + beta[j];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cached forward/backward building blocks for training.
// ---------------------------------------------------------------------------

namespace {

struct LnCache {
    Matrix x_hat;
    Vector inv_sd;
};

Matrix ln_forward(const Matrix& x, const LayerNormParams& p, LnCache& cache, double eps = 1e-5) {
    const double d = static_cast<double>(x.cols());
    cache.x_hat = Matrix(x.rows(), x.cols());
    cache.inv_sd.assign(x.rows(), 0.0);
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) mean += x(i, j);
        mean /= d;
        double var = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) var += (x(i, j) - mean) * (x(i, j) - mean);
        var /= d;
        cache.inv_sd[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < x.cols(); ++j) {
            cache.x_hat(i, j) = (x(i, j) - mean) * cache.inv_sd[i];
            out(i, j) = p.gamma[j] * cache.x_hat(i, j) + p.beta[j];
        }
    }
    return out;
}

Matrix ln_backward(const Matrix& d_out, const LayerNormParams& p, LayerNormParams& grads,
                   const LnCache& cache) {
    const std::size_t n = d_out.rows(), dim = d_out.cols();
    Matrix dx(n, dim);
    const double d = static_cast<double>(dim);
    for (std::size_t i = 0; i < n; ++i) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            grads.beta[j] += d_out(i, j);
            grads.gamma[j] += d_out(i, j) * cache.x_hat(i, j);
            const double g = d_out(i, j) * p.gamma[j];
            sum_g += g;
            sum_gx += g * cache.x_hat(i, j);
        }
        for (std::size_t j = 0; j < dim; ++j) {
            const double g = d_out(i, j) * p.gamma[j];
            dx(i, j) = cache.inv_sd[i] * (g - sum_g / d - cache.x_hat(i, j) * sum_gx / d);
        }
    }
    return dx;
}

struct HeadCache {
    Matrix q, k, v, s;  // projected inputs and softmax weights
};

struct MhaCache {
    std::vector<HeadCache> heads;
    Matrix concat;
};

Matrix mha_forward(const AttentionHeads& p, const Matrix& q_in, const Matrix& k_in,
                   const Matrix& v_in, const Matrix* mask, MhaCache& cache) {
    const std::size_t h = p.head_count();
    const std::size_t d_v = p.wv.front().cols();
    cache.heads.resize(h);
    cache.concat = Matrix(q_in.rows(), h * d_v);
    for (std::size_t i = 0; i < h; ++i) {
        HeadCache& hc = cache.heads[i];
        hc.q = matmul(q_in, p.wq[i]);
        hc.k = matmul(k_in, p.wk[i]);
        hc.v = matmul(v_in, p.wv[i]);
        const double scale = 1.0 / std::sqrt(static_cast<double>(hc.q.cols()));
        Matrix logits = matmul(hc.q, transpose(hc.k));
        for (std::size_t r = 0; r < logits.rows(); ++r) {
            for (std::size_t c = 0; c < logits.cols(); ++c) {
                logits(r, c) *= scale;
                if (mask && (*mask)(r, c) == 0.0) logits(r, c) = kMaskedLogit;
            }
        }
        hc.s = softmax_rows(logits);
        const Matrix head = matmul(hc.s, hc.v);
        for (std::size_t r = 0; r < head.rows(); ++r) {
            for (std::size_t c = 0; c < d_v; ++c) cache.concat(r, i * d_v + c) = head(r, c);
        }
    }
    return matmul(cache.concat, p.wo);
}

struct MhaInputGrads {
    Matrix dq_in, dk_in, dv_in;
};

MhaInputGrads mha_backward(const AttentionHeads& p, AttentionHeads& grads, const Matrix& q_in,
                           const Matrix& k_in, const Matrix& v_in, const MhaCache& cache,
                           const Matrix& d_out) {
    const std::size_t h = p.head_count();
    const std::size_t d_v = p.wv.front().cols();

    // Output projection.
    const Matrix d_concat = matmul(d_out, transpose(p.wo));
    {
        const Matrix g = matmul(transpose(cache.concat), d_out);
        for (std::size_t e = 0; e < g.size(); ++e) grads.wo.data()[e] += g.data()[e];
    }

    MhaInputGrads out;
    out.dq_in = Matrix(q_in.rows(), q_in.cols());
    out.dk_in = Matrix(k_in.rows(), k_in.cols());
    out.dv_in = Matrix(v_in.rows(), v_in.cols());

    for (std::size_t i = 0; i < h; ++i) {
        const HeadCache& hc = cache.heads[i];
        Matrix d_head(q_in.rows(), d_v);
        for (std::size_t r = 0; r < d_head.rows(); ++r) {
            for (std::size_t c = 0; c < d_v; ++c) d_head(r, c) = d_concat(r, i * d_v + c);
        }
        const Matrix d_v_proj = matmul(transpose(hc.s), d_head);
        const Matrix d_s = matmul(d_head, transpose(hc.v));
        // Softmax backward per row: dz = s * (ds - <ds, s>).
        Matrix d_z(d_s.rows(), d_s.cols());
        for (std::size_t r = 0; r < d_s.rows(); ++r) {
            double inner = 0.0;
            for (std::size_t c = 0; c < d_s.cols(); ++c) inner += d_s(r, c) * hc.s(r, c);
            for (std::size_t c = 0; c < d_s.cols(); ++c) {
                d_z(r, c) = hc.s(r, c) * (d_s(r, c) - inner);
            }
        }
        const double scale = 1.0 / std::sqrt(static_cast<double>(hc.q.cols()));
        const Matrix d_q_proj = ml::scale(matmul(d_z, hc.k), scale);
        const Matrix d_k_proj = ml::scale(matmul(transpose(d_z), hc.q), scale);

        // Projections back to the inputs.
        {
            const Matrix g = matmul(transpose(q_in), d_q_proj);
            for (std::size_t e = 0; e < g.size(); ++e) grads.wq[i].data()[e] += g.data()[e];
            const Matrix d = matmul(d_q_proj, transpose(p.wq[i]));
            for (std::size_t e = 0; e < d.size(); ++e) out.dq_in.data()[e] += d.data()[e];
        }
        {
            const Matrix g = matmul(transpose(k_in), d_k_proj);
            for (std::size_t e = 0; e < g.size(); ++e) grads.wk[i].data()[e] += g.data()[e];
            const Matrix d = matmul(d_k_proj, transpose(p.wk[i]));
            for (std::size_t e = 0; e < d.size(); ++e) out.dk_in.data()[e] += d.data()[e];
        }
        {
            const Matrix g = matmul(transpose(v_in), d_v_proj);
            for (std::size_t e = 0; e < g.size(); ++e) grads.wv[i].data()[e] += g.data()[e];
            const Matrix d = matmul(d_v_proj, transpose(p.wv[i]));
            for (std::size_t e = 0; e < d.size(); ++e) out.dv_in.data()[e] += d.data()[e];
        }
    }
    return out;
}

struct FfnCache {
    Matrix in;
    Matrix pre;  // x w1 + b1 before relu
};

Matrix ffn_forward(const FfnParams& p, const Matrix& x, FfnCache& cache) {
    cache.in = x;
    cache.pre = matmul(x, p.w1);
    for (std::size_t i = 0; i < cache.pre.rows(); ++i) {
        for (std::size_t j = 0; j < cache.pre.cols(); ++j) cache.pre(i, j) += p.b1[j];
    }
    Matrix hidden = cache.pre;
    for (auto& v : hidden.data()) v = std::max(0.0, v);
    Matrix out = matmul(hidden, p.w2);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += p.b2[j];
    }
    return out;
}

Matrix ffn_backward(const FfnParams& p, FfnParams& grads, const FfnCache& cache,
                    const Matrix& d_out) {
    Matrix hidden = cache.pre;
    for (auto& v : hidden.data()) v = std::max(0.0, v);
    {
        const Matrix g = matmul(transpose(hidden), d_out);
        for (std::size_t e = 0; e < g.size(); ++e) grads.w2.data()[e] += g.data()[e];
        for (std::size_t i = 0; i < d_out.rows(); ++i) {
            for (std::size_t j = 0; j < d_out.cols(); ++j) grads.b2[j] += d_out(i, j);
        }
    }
    Matrix d_hidden = matmul(d_out, transpose(p.w2));
    for (std::size_t e = 0; e < d_hidden.size(); ++e) {
        if (cache.pre.data()[e] <= 0.0) d_hidden.data()[e] = 0.0;
    }
    {
        const Matrix g = matmul(transpose(cache.in), d_hidden);
        for (std::size_t e = 0; e < g.size(); ++e) grads.w1.data()[e] += g.data()[e];
        for (std::size_t i = 0; i < d_hidden.rows(); ++i) {
            for (std::size_t j = 0; j < d_hidden.cols(); ++j) grads.b1[j] += d_hidden(i, j);
        }
    }
    return matmul(d_hidden, transpose(p.w1));
}

Matrix causal_mask(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) m(i, j) = 1.0;
    }
    return m;
}

void add_into(Matrix& dst, const Matrix& src) {
    for (std::size_t e = 0; e < dst.size(); ++e) dst.data()[e] += src.data()[e];
}

struct EncoderLayerCache {
    Matrix input;
    MhaCache mha;
    Matrix sum1, ln1_out;
    LnCache ln1;
    FfnCache ffn;
    Matrix sum2;
    LnCache ln2;
};

struct DecoderLayerCache {
    Matrix input;
    MhaCache self_mha;
    Matrix sum1, ln1_out;
    LnCache ln1;
    MhaCache cross_mha;
    Matrix sum2, ln2_out;
    LnCache ln2;
    FfnCache ffn;
    Matrix sum3;
    LnCache ln3;
};

}  // namespace

ToyTransformer::ToyTransformer(const TransformerConfig& config, Rng& rng) : config_(config) {
    if (config.d_model % 2 != 0) {
        throw std::invalid_argument("ToyTransformer: d_model must be even");
    }
    src_embed_ = glorot_init(config.vocab, config.d_model, rng);
    tgt_embed_ = glorot_init(config.vocab, config.d_model, rng);
    for (std::size_t l = 0; l < config.layers; ++l) {
        EncoderLayerParams enc;
        enc.self_attn = AttentionHeads::create(config.heads, config.d_model, rng);
        enc.ffn = {glorot_init(config.d_model, config.d_ff, rng), Vector(config.d_ff, 0.0),
                   glorot_init(config.d_ff, config.d_model, rng), Vector(config.d_model, 0.0)};
        enc.ln1 = LayerNormParams(config.d_model);
        enc.ln2 = LayerNormParams(config.d_model);
        encoder_.push_back(std::move(enc));

        DecoderLayerParams dec;
        dec.self_attn = AttentionHeads::create(config.heads, config.d_model, rng);
        dec.cross_attn = AttentionHeads::create(config.heads, config.d_model, rng);
        dec.ffn = {glorot_init(config.d_model, config.d_ff, rng), Vector(config.d_ff, 0.0),
                   glorot_init(config.d_ff, config.d_model, rng), Vector(config.d_model, 0.0)};
        dec.ln1 = LayerNormParams(config.d_model);
        dec.ln2 = LayerNormParams(config.d_model);
        dec.ln3 = LayerNormParams(config.d_model);
        decoder_.push_back(std::move(dec));
    }
    w_out_ = glorot_init(config.d_model, config.vocab, rng);
    b_out_.assign(config.vocab, 0.0);

    // Gradient mirrors.
    auto zero_heads = [&](const AttentionHeads& a) {
        AttentionHeads z = a;
        for (auto& m : z.wq) m = Matrix(m.rows(), m.cols());
        for (auto& m : z.wk) m = Matrix(m.rows(), m.cols());
        for (auto& m : z.wv) m = Matrix(m.rows(), m.cols());
        z.wo = Matrix(z.wo.rows(), z.wo.cols());
        return z;
    };
    g_src_embed_ = Matrix(config.vocab, config.d_model);
    g_tgt_embed_ = Matrix(config.vocab, config.d_model);
    for (std::size_t l = 0; l < config.layers; ++l) {
        EncoderLayerParams genc;
        genc.self_attn = zero_heads(encoder_[l].self_attn);
        genc.ffn = {Matrix(config.d_model, config.d_ff), Vector(config.d_ff, 0.0),
                    Matrix(config.d_ff, config.d_model), Vector(config.d_model, 0.0)};
        genc.ln1 = LayerNormParams(config.d_model);
        genc.ln2 = LayerNormParams(config.d_model);
        for (auto& v : genc.ln1.gamma) v = 0.0;
        for (auto& v : genc.ln2.gamma) v = 0.0;
        g_encoder_.push_back(std::move(genc));

        DecoderLayerParams gdec;
        gdec.self_attn = zero_heads(decoder_[l].self_attn);
        gdec.cross_attn = zero_heads(decoder_[l].cross_attn);
        gdec.ffn = {Matrix(config.d_model, config.d_ff), Vector(config.d_ff, 0.0),
                    Matrix(config.d_ff, config.d_model), Vector(config.d_model, 0.0)};
        gdec.ln1 = LayerNormParams(config.d_model);
        gdec.ln2 = LayerNormParams(config.d_model);
        gdec.ln3 = LayerNormParams(config.d_model);
        for (auto& v : gdec.ln1.gamma) v = 0.0;
        for (auto& v : gdec.ln2.gamma) v = 0.0;
        for (auto& v : gdec.ln3.gamma) v = 0.0;
        g_decoder_.push_back(std::move(gdec));
    }
    g_w_out_ = Matrix(config.d_model, config.vocab);
    g_b_out_.assign(config.vocab, 0.0);
}

Matrix ToyTransformer::embed(const Matrix& table, const std::vector<int>& tokens) const {
    Matrix out(tokens.size(), config_.d_model);
    const Matrix pe = positional_encoding(tokens.size(), config_.d_model);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (tokens[t] < 0 || static_cast<std::size_t>(tokens[t]) >= config_.vocab) {
            throw std::invalid_argument("ToyTransformer: token out of range");
        }
        for (std::size_t j = 0; j < config_.d_model; ++j) {
            out(t, j) = table(static_cast<std::size_t>(tokens[t]), j) + pe(t, j);
        }
    }
    return out;
}

Matrix ToyTransformer::encode_embedded(const Matrix& embedded) const {
    Matrix x = embedded;
    for (const auto& layer : encoder_) {
        const Matrix attn = multi_head_attention(layer.self_attn, x, x, x);
        x = layer_norm(add(x, attn), layer.ln1.gamma, layer.ln1.beta);
        const Matrix f = position_wise_ffn(x, layer.ffn.w1, layer.ffn.b1, layer.ffn.w2,
                                           layer.ffn.b2);
        x = layer_norm(add(x, f), layer.ln2.gamma, layer.ln2.beta);
    }
    return x;
}

Matrix ToyTransformer::encode(const std::vector<int>& src) const {
    return encode_embedded(embed(src_embed_, src));
}

Matrix ToyTransformer::decode_logits(const std::vector<int>& tgt_in, const Matrix& memory) const {
    Matrix y = embed(tgt_embed_, tgt_in);
    const Matrix mask = causal_mask(tgt_in.size());
    for (const auto& layer : decoder_) {
        const Matrix self = multi_head_attention(layer.self_attn, y, y, y, &mask);
        y = layer_norm(add(y, self), layer.ln1.gamma, layer.ln1.beta);
        const Matrix cross = multi_head_attention(layer.cross_attn, y, memory, memory);
        y = layer_norm(add(y, cross), layer.ln2.gamma, layer.ln2.beta);
        const Matrix f = position_wise_ffn(y, layer.ffn.w1, layer.ffn.b1, layer.ffn.w2,
                                           layer.ffn.b2);
        y = layer_norm(add(y, f), layer.ln3.gamma, layer.ln3.beta);
    }
    Matrix logits = matmul(y, w_out_);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        for (std::size_t j = 0; j < logits.cols(); ++j) logits(i, j) += b_out_[j];
    }
    return logits;
}

Matrix ToyTransformer::decoder_self_attention(const std::vector<int>& tgt_in) const {
    const Matrix y = embed(tgt_embed_, tgt_in);
    const Matrix mask = causal_mask(tgt_in.size());
    return multi_head_attention(decoder_.front().self_attn, y, y, y, &mask);
}

double ToyTransformer::loss(const std::vector<int>& src, const std::vector<int>& tgt_in,
                            const std::vector<int>& tgt_out) const {
    const Matrix logits = decode_logits(tgt_in, encode(src));
    double total = 0.0;
    for (std::size_t t = 0; t < tgt_out.size(); ++t) {
        const Vector row(logits.row(t).begin(), logits.row(t).end());
        const Vector p = softmax(row);
        total -= std::log(std::max(p[static_cast<std::size_t>(tgt_out[t])], 1e-300));
    }
    return total / static_cast<double>(tgt_out.size());
}

double ToyTransformer::accumulate_gradients(const std::vector<int>& src,
                                            const std::vector<int>& tgt_in,
                                            const std::vector<int>& tgt_out) {
    // Forward with caches.
    const Matrix src_x0 = embed(src_embed_, src);
    std::vector<EncoderLayerCache> enc_cache(encoder_.size());
    Matrix x = src_x0;
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
        EncoderLayerCache& c = enc_cache[l];
        c.input = x;
        const Matrix attn = mha_forward(encoder_[l].self_attn, x, x, x, nullptr, c.mha);
        c.sum1 = add(x, attn);
        c.ln1_out = ln_forward(c.sum1, encoder_[l].ln1, c.ln1);
        const Matrix f = ffn_forward(encoder_[l].ffn, c.ln1_out, c.ffn);
        c.sum2 = add(c.ln1_out, f);
        x = ln_forward(c.sum2, encoder_[l].ln2, c.ln2);
    }
    const Matrix memory = x;

    const Matrix tgt_x0 = embed(tgt_embed_, tgt_in);
    const Matrix mask = causal_mask(tgt_in.size());
    std::vector<DecoderLayerCache> dec_cache(decoder_.size());
    Matrix y = tgt_x0;
    for (std::size_t l = 0; l < decoder_.size(); ++l) {
        DecoderLayerCache& c = dec_cache[l];
        c.input = y;
        const Matrix self = mha_forward(decoder_[l].self_attn, y, y, y, &mask, c.self_mha);
        c.sum1 = add(y, self);
        c.ln1_out = ln_forward(c.sum1, decoder_[l].ln1, c.ln1);
        const Matrix cross =
            mha_forward(decoder_[l].cross_attn, c.ln1_out, memory, memory, nullptr, c.cross_mha);
        c.sum2 = add(c.ln1_out, cross);
        c.ln2_out = ln_forward(c.sum2, decoder_[l].ln2, c.ln2);
        const Matrix f = ffn_forward(decoder_[l].ffn, c.ln2_out, c.ffn);
        c.sum3 = add(c.ln2_out, f);
        y = ln_forward(c.sum3, decoder_[l].ln3, c.ln3);
    }

    Matrix logits = matmul(y, w_out_);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        for (std::size_t j = 0; j < logits.cols(); ++j) logits(i, j) += b_out_[j];
    }

    const double inv_t = 1.0 / static_cast<double>(tgt_out.size());
    double loss_total = 0.0;
    Matrix d_logits(logits.rows(), logits.cols());
    for (std::size_t t = 0; t < tgt_out.size(); ++t) {
        const Vector row(logits.row(t).begin(), logits.row(t).end());
        const Vector p = softmax(row);
        loss_total -= std::log(std::max(p[static_cast<std::size_t>(tgt_out[t])], 1e-300));
        for (std::size_t j = 0; j < p.size(); ++j) {
            d_logits(t, j) = (p[j] - (static_cast<std::size_t>(tgt_out[t]) == j ? 1.0 : 0.0)) *
                             inv_t;
        }
    }

    // Output projection backward.
    add_into(g_w_out_, matmul(transpose(y), d_logits));
    for (std::size_t i = 0; i < d_logits.rows(); ++i) {
        for (std::size_t j = 0; j < d_logits.cols(); ++j) g_b_out_[j] += d_logits(i, j);
    }
    Matrix dy = matmul(d_logits, transpose(w_out_));
    Matrix d_memory(memory.rows(), memory.cols());

    for (std::size_t l = decoder_.size(); l-- > 0;) {
        DecoderLayerCache& c = dec_cache[l];
        const Matrix d_sum3 = ln_backward(dy, decoder_[l].ln3, g_decoder_[l].ln3, c.ln3);
        Matrix d_ln2_out = d_sum3;
        add_into(d_ln2_out, ffn_backward(decoder_[l].ffn, g_decoder_[l].ffn, c.ffn, d_sum3));
        const Matrix d_sum2 = ln_backward(d_ln2_out, decoder_[l].ln2, g_decoder_[l].ln2, c.ln2);
        Matrix d_ln1_out = d_sum2;
        const MhaInputGrads cross_grads =
            mha_backward(decoder_[l].cross_attn, g_decoder_[l].cross_attn, c.ln1_out, memory,
                         memory, c.cross_mha, d_sum2);
        add_into(d_ln1_out, cross_grads.dq_in);
        add_into(d_memory, cross_grads.dk_in);
        add_into(d_memory, cross_grads.dv_in);
        const Matrix d_sum1 = ln_backward(d_ln1_out, decoder_[l].ln1, g_decoder_[l].ln1, c.ln1);
        Matrix d_in = d_sum1;
        const MhaInputGrads self_grads = mha_backward(
            decoder_[l].self_attn, g_decoder_[l].self_attn, c.input, c.input, c.input,
            c.self_mha, d_sum1);
        add_into(d_in, self_grads.dq_in);
        add_into(d_in, self_grads.dk_in);
        add_into(d_in, self_grads.dv_in);
        dy = std::move(d_in);
    }
    for (std::size_t t = 0; t < tgt_in.size(); ++t) {
        for (std::size_t j = 0; j < config_.d_model; ++j) {
            g_tgt_embed_(static_cast<std::size_t>(tgt_in[t]), j) += dy(t, j);
        }
    }

    Matrix dx = std::move(d_memory);
    for (std::size_t l = encoder_.size(); l-- > 0;) {
        EncoderLayerCache& c = enc_cache[l];
        const Matrix d_sum2 = ln_backward(dx, encoder_[l].ln2, g_encoder_[l].ln2, c.ln2);
        Matrix d_ln1_out = d_sum2;
        add_into(d_ln1_out, ffn_backward(encoder_[l].ffn, g_encoder_[l].ffn, c.ffn, d_sum2));
        const Matrix d_sum1 = ln_backward(d_ln1_out, encoder_[l].ln1, g_encoder_[l].ln1, c.ln1);
        Matrix d_in = d_sum1;
        const MhaInputGrads self_grads = mha_backward(
            encoder_[l].self_attn, g_encoder_[l].self_attn, c.input, c.input, c.input, c.mha,
            d_sum1);
        add_into(d_in, self_grads.dq_in);
        add_into(d_in, self_grads.dk_in);
        add_into(d_in, self_grads.dv_in);
        dx = std::move(d_in);
    }
    for (std::size_t t = 0; t < src.size(); ++t) {
        for (std::size_t j = 0; j < config_.d_model; ++j) {
            g_src_embed_(static_cast<std::size_t>(src[t]), j) += dx(t, j);
        }
    }
    return loss_total * inv_t;
}

std::vector<int> ToyTransformer::greedy_decode(const std::vector<int>& src, std::size_t out_len,
                                               int start_token) const {
    const Matrix memory = encode(src);
    std::vector<int> tgt_in{start_token};
    std::vector<int> out;
    for (std::size_t t = 0; t < out_len; ++t) {
        const Matrix logits = decode_logits(tgt_in, memory);
        const std::size_t last = logits.rows() - 1;
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j) {
            if (logits(last, j) > logits(last, best)) best = j;
        }
        out.push_back(static_cast<int>(best));
        tgt_in.push_back(static_cast<int>(best));
    }
    return out;
}

namespace {

void collect_heads(AttentionHeads& p, AttentionHeads& g, std::vector<ParamBlock>& blocks) {
    for (std::size_t i = 0; i < p.wq.size(); ++i) {
        blocks.push_back({p.wq[i].data().data(), g.wq[i].data().data(), p.wq[i].size()});
        blocks.push_back({p.wk[i].data().data(), g.wk[i].data().data(), p.wk[i].size()});
        blocks.push_back({p.wv[i].data().data(), g.wv[i].data().data(), p.wv[i].size()});
    }
    blocks.push_back({p.wo.data().data(), g.wo.data().data(), p.wo.size()});
}

void collect_ffn(FfnParams& p, FfnParams& g, std::vector<ParamBlock>& blocks) {
    blocks.push_back({p.w1.data().data(), g.w1.data().data(), p.w1.size()});
    blocks.push_back({p.b1.data(), g.b1.data(), p.b1.size()});
    blocks.push_back({p.w2.data().data(), g.w2.data().data(), p.w2.size()});
    blocks.push_back({p.b2.data(), g.b2.data(), p.b2.size()});
}

void collect_ln(LayerNormParams& p, LayerNormParams& g, std::vector<ParamBlock>& blocks) {
    blocks.push_back({p.gamma.data(), g.gamma.data(), p.gamma.size()});
    blocks.push_back({p.beta.data(), g.beta.data(), p.beta.size()});
}

}  // namespace

std::vector<ParamBlock> ToyTransformer::param_blocks() {
    std::vector<ParamBlock> blocks;
    blocks.push_back({src_embed_.data().data(), g_src_embed_.data().data(), src_embed_.size()});
    blocks.push_back({tgt_embed_.data().data(), g_tgt_embed_.data().data(), tgt_embed_.size()});
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
        collect_heads(encoder_[l].self_attn, g_encoder_[l].self_attn, blocks);
        collect_ffn(encoder_[l].ffn, g_encoder_[l].ffn, blocks);
        collect_ln(encoder_[l].ln1, g_encoder_[l].ln1, blocks);
        collect_ln(encoder_[l].ln2, g_encoder_[l].ln2, blocks);
    }
    for (std::size_t l = 0; l < decoder_.size(); ++l) {
        collect_heads(decoder_[l].self_attn, g_decoder_[l].self_attn, blocks);
        collect_heads(decoder_[l].cross_attn, g_decoder_[l].cross_attn, blocks);
        collect_ffn(decoder_[l].ffn, g_decoder_[l].ffn, blocks);
        collect_ln(decoder_[l].ln1, g_decoder_[l].ln1, blocks);
        collect_ln(decoder_[l].ln2, g_decoder_[l].ln2, blocks);
        collect_ln(decoder_[l].ln3, g_decoder_[l].ln3, blocks);
    }
    blocks.push_back({w_out_.data().data(), g_w_out_.data().data(), w_out_.size()});
    blocks.push_back({b_out_.data(), g_b_out_.data(), b_out_.size()});
    return blocks;
}

FitReport ToyTransformer::train(const std::vector<Example>& examples, const TrainConfig& config) {
    config.validate();
    if (examples.empty()) throw std::invalid_argument("ToyTransformer::train: no examples");
    std::vector<ParamBlock> blocks = param_blocks();
    Optimizer opt(config, blocks);
    Rng rng(config.seed);

    FitReport report;
    report.seed = config.seed;
    const std::size_t n = examples.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::min(config.batch_size, n);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            for (std::size_t i = start; i < stop; ++i) {
                const Example& ex = examples[order[i]];
                epoch_loss += accumulate_gradients(ex.src, ex.tgt_in, ex.tgt_out);
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (auto& b : blocks) {
                for (std::size_t e = 0; e < b.size; ++e) b.grads[e] *= inv;
            }
            opt.step(blocks);
        }
        report.loss_history.push_back(epoch_loss / static_cast<double>(n));
        if (!std::isfinite(report.loss_history.back())) {
            report.metrics["diverged"] = 1.0;
            break;
        }
    }
    report.metrics["final_loss"] = report.loss_history.empty() ? 0.0 : report.loss_history.back();
    return report;
}

}  // namespace ml
