#pragma once

#include <cmath>
#include <random>
#include <string>

#include "spontts/numerics/layers.hpp"

namespace spontts {

// Two conv(k) -> ReLU -> layer norm -> dropout stages, then a linear head.
template <typename Scalar>
struct PredictorWeights {
    Parameter<Scalar>* conv1_weight = nullptr;
    Parameter<Scalar>* conv1_bias = nullptr;
    Parameter<Scalar>* norm1_gamma = nullptr;
    Parameter<Scalar>* norm1_beta = nullptr;
    Parameter<Scalar>* conv2_weight = nullptr;
    Parameter<Scalar>* conv2_bias = nullptr;
    Parameter<Scalar>* norm2_gamma = nullptr;
    Parameter<Scalar>* norm2_beta = nullptr;
    Parameter<Scalar>* linear_weight = nullptr;
    Parameter<Scalar>* linear_bias = nullptr;
};

inline constexpr const char* kPredictorParts[] = {"conv1.weight", "conv1.bias", "norm1.gamma", "norm1.beta",
                                                  "conv2.weight", "conv2.bias", "norm2.gamma", "norm2.beta",
                                                  "linear.weight", "linear.bias"};

template <typename Scalar>
void register_predictor(ParameterSet<Scalar>& params, const std::string& prefix, Eigen::Index input,
                        Eigen::Index channels, Eigen::Index kernel, Eigen::Index output, bool zero_head,
                        std::mt19937_64& rng) {
    require(kernel % 2 == 1, ErrorKind::Config, "predictor kernel must be odd");
    auto conv_std = [&](Eigen::Index fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };
    params.add(prefix + ".conv1.weight", random_normal<Scalar>(kernel * input, channels, conv_std(kernel * input), rng));
    params.add(prefix + ".conv1.bias", Tensor<Scalar>::Zero(1, channels));
    params.add(prefix + ".norm1.gamma", Tensor<Scalar>::Ones(1, channels));
    params.add(prefix + ".norm1.beta", Tensor<Scalar>::Zero(1, channels));
    params.add(prefix + ".conv2.weight",
               random_normal<Scalar>(kernel * channels, channels, conv_std(kernel * channels), rng));
    params.add(prefix + ".conv2.bias", Tensor<Scalar>::Zero(1, channels));
    params.add(prefix + ".norm2.gamma", Tensor<Scalar>::Ones(1, channels));
    params.add(prefix + ".norm2.beta", Tensor<Scalar>::Zero(1, channels));
    params.add(prefix + ".linear.weight", zero_head ? Tensor<Scalar>(Tensor<Scalar>::Zero(channels, output))
                                                    : random_normal<Scalar>(channels, output, conv_std(channels), rng));
    params.add(prefix + ".linear.bias", Tensor<Scalar>::Zero(1, output));
}

template <typename Scalar>
PredictorWeights<Scalar> bind_predictor(ParameterSet<Scalar>& params, const std::string& prefix) {
    PredictorWeights<Scalar> w;
    Parameter<Scalar>** slots[] = {&w.conv1_weight, &w.conv1_bias, &w.norm1_gamma,   &w.norm1_beta,
                                   &w.conv2_weight, &w.conv2_bias, &w.norm2_gamma,   &w.norm2_beta,
                                   &w.linear_weight, &w.linear_bias};
    for (std::size_t i = 0; i < std::size(kPredictorParts); ++i) {
        *slots[i] = &params.at(prefix + "." + kPredictorParts[i]);
    }
    return w;
}

template <typename Scalar>
Var<Scalar> predictor_forward(Var<Scalar> x, const PredictorWeights<Scalar>& w, double dropout_rate) {
    auto& tape = x.tape();
    auto p = [&](Parameter<Scalar>* param) { return tape.parameter(*param); };
    Var<Scalar> h = relu(conv1d_same(x, p(w.conv1_weight), p(w.conv1_bias)));
    h = dropout(layer_norm(h, p(w.norm1_gamma), p(w.norm1_beta)), dropout_rate);
    h = relu(conv1d_same(h, p(w.conv2_weight), p(w.conv2_bias)));
    h = dropout(layer_norm(h, p(w.norm2_gamma), p(w.norm2_beta)), dropout_rate);
    return linear(h, p(w.linear_weight), p(w.linear_bias));
}

}  // namespace spontts
