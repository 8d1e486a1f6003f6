#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "spontts/numerics/ops.hpp"

namespace spontts {

template <typename Scalar>
Tensor<Scalar> sinusoidal_positions(Eigen::Index length, Eigen::Index dim) {
    Tensor<Scalar> table(length, dim);
    for (Eigen::Index pos = 0; pos < length; ++pos) {
        for (Eigen::Index i = 0; i < dim; ++i) {
            const double rate = std::pow(10000.0, -2.0 * static_cast<double>(i / 2) / static_cast<double>(dim));
            const double angle = static_cast<double>(pos) * rate;
            table(pos, i) = static_cast<Scalar>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
        }
    }
    return table;
}

template <typename Scalar>
Tensor<Scalar> random_normal(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Tensor<Scalar> out(rows, cols);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        out.data()[i] = static_cast<Scalar>(dist(rng));
    }
    return out;
}

template <typename Scalar>
struct AttentionWeights {
    Parameter<Scalar>* wq = nullptr;
    Parameter<Scalar>* bq = nullptr;
    Parameter<Scalar>* wk = nullptr;
    Parameter<Scalar>* bk = nullptr;
    Parameter<Scalar>* wv = nullptr;
    Parameter<Scalar>* bv = nullptr;
    Parameter<Scalar>* wo = nullptr;
    Parameter<Scalar>* bo = nullptr;
};

// Convolutional feed-forward: conv(width) -> ReLU -> conv(1).
template <typename Scalar>
struct FeedForwardWeights {
    Parameter<Scalar>* w1 = nullptr;
    Parameter<Scalar>* b1 = nullptr;
    Parameter<Scalar>* w2 = nullptr;
    Parameter<Scalar>* b2 = nullptr;
};

// Layer norm whose gamma and beta are affine functions of a condition vector.
template <typename Scalar>
struct ConditionalNormWeights {
    Parameter<Scalar>* scale_weight = nullptr;
    Parameter<Scalar>* scale_bias = nullptr;
    Parameter<Scalar>* shift_weight = nullptr;
    Parameter<Scalar>* shift_bias = nullptr;
};

template <typename Scalar>
struct TransformerBlockWeights {
    AttentionWeights<Scalar> attention;
    ConditionalNormWeights<Scalar> norm1;
    FeedForwardWeights<Scalar> ffn;
    ConditionalNormWeights<Scalar> norm2;
};

struct TransformerBlockShape {
    Eigen::Index hidden = 32;
    Eigen::Index condition = 32;
    Eigen::Index filter = 64;
    Eigen::Index kernel = 3;
    int heads = 2;
    double dropout = 0.1;
};

// Registers one block's parameters. Projection weights live under `prefix`,
// the conditional-norm generators under `norm_prefix`, so speaker adaptation
// can select every generator with a single name prefix.
template <typename Scalar>
TransformerBlockWeights<Scalar> register_transformer_block(ParameterSet<Scalar>& params, const std::string& prefix,
                                                           const std::string& norm_prefix,
                                                           const TransformerBlockShape& shape, std::mt19937_64& rng) {
    require(shape.kernel % 2 == 1, ErrorKind::Config, "feed-forward kernel must be odd");
    require(shape.heads >= 1 && shape.hidden % shape.heads == 0, ErrorKind::Config,
            "hidden size must be divisible by the attention heads");
    const auto h = shape.hidden;
    const double proj_std = 1.0 / std::sqrt(static_cast<double>(h));
    auto weight = [&](const std::string& name, Eigen::Index r, Eigen::Index c, double stddev) {
        return &params.add(name, random_normal<Scalar>(r, c, stddev, rng));
    };
    auto zeros = [&](const std::string& name, Eigen::Index c) {
        return &params.add(name, Tensor<Scalar>::Zero(1, c));
    };
    TransformerBlockWeights<Scalar> w;
    w.attention.wq = weight(prefix + ".attention.wq", h, h, proj_std);
    w.attention.bq = zeros(prefix + ".attention.bq", h);
    w.attention.wk = weight(prefix + ".attention.wk", h, h, proj_std);
    w.attention.bk = zeros(prefix + ".attention.bk", h);
    w.attention.wv = weight(prefix + ".attention.wv", h, h, proj_std);
    w.attention.bv = zeros(prefix + ".attention.bv", h);
    w.attention.wo = weight(prefix + ".attention.wo", h, h, proj_std);
    w.attention.bo = zeros(prefix + ".attention.bo", h);
    w.ffn.w1 = weight(prefix + ".ffn.w1", shape.kernel * h, shape.filter,
                      1.0 / std::sqrt(static_cast<double>(shape.kernel * h)));
    w.ffn.b1 = zeros(prefix + ".ffn.b1", shape.filter);
    w.ffn.w2 = weight(prefix + ".ffn.w2", shape.filter, h, 1.0 / std::sqrt(static_cast<double>(shape.filter)));
    w.ffn.b2 = zeros(prefix + ".ffn.b2", h);

    const double cond_std = 0.1 / std::sqrt(static_cast<double>(shape.condition));
    auto norm = [&](const std::string& base) {
        ConditionalNormWeights<Scalar> n;
        n.scale_weight = weight(base + ".scale_weight", shape.condition, h, cond_std);
        n.scale_bias = &params.add(base + ".scale_bias", Tensor<Scalar>::Ones(1, h));
        n.shift_weight = weight(base + ".shift_weight", shape.condition, h, cond_std);
        n.shift_bias = zeros(base + ".shift_bias", h);
        return n;
    };
    w.norm1 = norm(norm_prefix + ".norm1");
    w.norm2 = norm(norm_prefix + ".norm2");
    return w;
}

template <typename Scalar>
Var<Scalar> conditional_layer_norm(Var<Scalar> x, Var<Scalar> condition, const ConditionalNormWeights<Scalar>& w) {
    auto& tape = x.tape();
    Var<Scalar> gamma = linear(condition, tape.parameter(*w.scale_weight), tape.parameter(*w.scale_bias));
    Var<Scalar> beta = linear(condition, tape.parameter(*w.shift_weight), tape.parameter(*w.shift_bias));
    return layer_norm(x, gamma, beta);
}

// Multi-head scaled dot-product self-attention. When `probabilities` is given,
// each head's [len x len] attention matrix is appended to it.
template <typename Scalar>
Var<Scalar> multi_head_attention(Var<Scalar> x, const AttentionWeights<Scalar>& w, int heads,
                                 std::vector<Tensor<Scalar>>* probabilities = nullptr) {
    auto& tape = x.tape();
    const Eigen::Index hidden = x.cols();
    require(hidden % heads == 0, ErrorKind::Dimension, "hidden size not divisible by heads");
    const Eigen::Index head_dim = hidden / heads;
    Var<Scalar> q = linear(x, tape.parameter(*w.wq), tape.parameter(*w.bq));
    Var<Scalar> k = linear(x, tape.parameter(*w.wk), tape.parameter(*w.bk));
    Var<Scalar> v = linear(x, tape.parameter(*w.wv), tape.parameter(*w.bv));
    const Scalar inv_sqrt = Scalar(1.0 / std::sqrt(static_cast<double>(head_dim)));
    std::vector<Var<Scalar>> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        Var<Scalar> qh = slice_cols(q, h * head_dim, head_dim);
        Var<Scalar> kh = slice_cols(k, h * head_dim, head_dim);
        Var<Scalar> vh = slice_cols(v, h * head_dim, head_dim);
        Var<Scalar> p = softmax_rows(scale(matmul(qh, transpose(kh)), inv_sqrt));
        if (probabilities != nullptr) {
            probabilities->push_back(p.value());
        }
        outs.push_back(matmul(p, vh));
    }
    return linear(concat_cols(outs), tape.parameter(*w.wo), tape.parameter(*w.bo));
}

// Feed-forward Transformer block: attention and convolutional FFN sublayers,
// each wrapped in residual + conditional layer norm. Length preserving.
template <typename Scalar>
Var<Scalar> transformer_ffn_block(Var<Scalar> x, const TransformerBlockWeights<Scalar>& w, Var<Scalar> condition,
                                  int heads, double dropout_rate,
                                  std::vector<Tensor<Scalar>>* attention_probabilities = nullptr) {
    require(x.cols() == w.attention.wq->value.rows(), ErrorKind::Dimension,
            "block expects hidden " + std::to_string(w.attention.wq->value.rows()) + ", got " +
                std::to_string(x.cols()));
    if (x.rows() == 0) {
        return x;
    }
    auto& tape = x.tape();
    Var<Scalar> attn = dropout(multi_head_attention(x, w.attention, heads, attention_probabilities), dropout_rate);
    Var<Scalar> h1 = conditional_layer_norm(add(x, attn), condition, w.norm1);
    Var<Scalar> inner = relu(conv1d_same(h1, tape.parameter(*w.ffn.w1), tape.parameter(*w.ffn.b1)));
    Var<Scalar> ffn = dropout(linear(inner, tape.parameter(*w.ffn.w2), tape.parameter(*w.ffn.b2)), dropout_rate);
    return conditional_layer_norm(add(h1, ffn), condition, w.norm2);
}

}  // namespace spontts
