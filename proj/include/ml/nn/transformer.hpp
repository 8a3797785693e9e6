#pragma once

#include <optional>

#include "ml/matrix.hpp"
#include "ml/nn/optimizer.hpp"
#include "ml/rng.hpp"

namespace ml {

/// Row softmax with max subtraction.
Vector softmax(const Vector& v);
Matrix softmax_rows(const Matrix& m);

/// PE(pos, 2i) = sin(pos/10000^{2i/d}), PE(pos, 2i+1) = cos(same). d_model
/// must be even.
Matrix positional_encoding(std::size_t seq_len, std::size_t d_model);

/// softmax(Q K^T / sqrt(d_k) + mask) V. mask entries are 1 for allowed and 0
/// for blocked key positions (blocked logits go to -inf).
Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                            const Matrix* mask = nullptr);

struct AttentionHeads {
    std::vector<Matrix> wq, wk, wv;  // per head, d_model x d_k / d_v
    Matrix wo;                       // h*d_v x d_model

    static AttentionHeads create(std::size_t heads, std::size_t d_model, Rng& rng);
    std::size_t head_count() const { return wq.size(); }
};

/// head_i = Attention(Q Wq_i, K Wk_i, V Wv_i); concatenated then projected.
Matrix multi_head_attention(const AttentionHeads& heads, const Matrix& q_in, const Matrix& k_in,
                            const Matrix& v_in, const Matrix* mask = nullptr);

/// max(0, x W1 + b1) W2 + b2, applied identically at every position.
Matrix position_wise_ffn(const Matrix& x, const Matrix& w1, const Vector& b1, const Matrix& w2,
                         const Vector& b2);

/// Per-row normalization over features, then gamma * x_hat + beta.
Matrix layer_norm(const Matrix& x, const Vector& gamma, const Vector& beta, double eps = 1e-5);

struct LayerNormParams {
    Vector gamma, beta;
    explicit LayerNormParams(std::size_t d = 0) : gamma(d, 1.0), beta(d, 0.0) {}
};

struct FfnParams {
    Matrix w1;
    Vector b1;
    Matrix w2;
    Vector b2;
};

struct EncoderLayerParams {
    AttentionHeads self_attn;
    FfnParams ffn;
    LayerNormParams ln1, ln2;
};

struct DecoderLayerParams {
    AttentionHeads self_attn;
    AttentionHeads cross_attn;
    FfnParams ffn;
    LayerNormParams ln1, ln2, ln3;
};

struct TransformerConfig {
    std::size_t vocab = 12;    // includes the start token
    std::size_t d_model = 16;
    std::size_t heads = 2;
    std::size_t layers = 2;
    std::size_t d_ff = 32;
    std::size_t max_len = 16;
};

/// Post-norm encoder-decoder with learned token embeddings, trained with
/// teacher forcing and token-level cross entropy.
class ToyTransformer {
public:
    ToyTransformer(const TransformerConfig& config, Rng& rng);

    /// Encoder output for a source token sequence.
    Matrix encode(const std::vector<int>& src) const;
    /// Encoder stack applied to already-embedded rows (test hook; N layers).
    Matrix encode_embedded(const Matrix& embedded) const;

    /// Decoder forward over teacher-forced inputs; returns logits per
    /// position.
    Matrix decode_logits(const std::vector<int>& tgt_in, const Matrix& memory) const;
    /// Decoder self-attention output (pre cross-attention) per position, for
    /// the causality check.
    Matrix decoder_self_attention(const std::vector<int>& tgt_in) const;

    double loss(const std::vector<int>& src, const std::vector<int>& tgt_in,
                const std::vector<int>& tgt_out) const;

    /// Accumulates gradients for one (src, tgt) pair; returns the sample loss.
    double accumulate_gradients(const std::vector<int>& src, const std::vector<int>& tgt_in,
                                const std::vector<int>& tgt_out);

    std::vector<int> greedy_decode(const std::vector<int>& src, std::size_t out_len,
                                   int start_token) const;

    struct Example {
        std::vector<int> src, tgt_in, tgt_out;
    };
    FitReport train(const std::vector<Example>& examples, const TrainConfig& config);

    std::vector<ParamBlock> param_blocks();
    const TransformerConfig& config() const { return config_; }

private:
    TransformerConfig config_;
    Matrix src_embed_, tgt_embed_;  // vocab x d_model
    std::vector<EncoderLayerParams> encoder_;
    std::vector<DecoderLayerParams> decoder_;
    Matrix w_out_;  // d_model x vocab
    Vector b_out_;

    // Gradient mirrors, same shapes.
    Matrix g_src_embed_, g_tgt_embed_;
    std::vector<EncoderLayerParams> g_encoder_;
    std::vector<DecoderLayerParams> g_decoder_;
    Matrix g_w_out_;
    Vector g_b_out_;

    Matrix embed(const Matrix& table, const std::vector<int>& tokens) const;
};

}  // namespace ml
