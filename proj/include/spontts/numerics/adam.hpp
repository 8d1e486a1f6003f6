#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "spontts/numerics/tensor.hpp"

namespace spontts {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double epsilon = 1e-9;
};

template <typename Scalar>
struct AdamMoments {
    Tensor<Scalar> m;
    Tensor<Scalar> v;
};

// First/second moment estimates keyed by parameter name, plus the shared
// step counter used for bias correction.
template <typename Scalar>
struct AdamState {
    AdamConfig config;
    std::int64_t step_count = 0;
    std::map<std::string, AdamMoments<Scalar>> moments;
};

// One Adam update over `params`. Gradients are read, not cleared.
template <typename Scalar>
void adam_step(std::span<Parameter<Scalar>* const> params, AdamState<Scalar>& state) {
    for (const Parameter<Scalar>* p : params) {
        auto it = state.moments.find(p->name);
        if (it != state.moments.end()) {
            require(it->second.m.rows() == p->value.rows() && it->second.m.cols() == p->value.cols() &&
                        it->second.v.rows() == p->value.rows() && it->second.v.cols() == p->value.cols(),
                    ErrorKind::State, "optimizer state shape differs from parameter " + p->name);
        }
        require(p->grad.rows() == p->value.rows() && p->grad.cols() == p->value.cols(), ErrorKind::State,
                "gradient shape differs from parameter " + p->name);
    }
    state.step_count += 1;
    const auto& c = state.config;
    const double t = static_cast<double>(state.step_count);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);
    const Scalar b1 = Scalar(c.beta1), b2 = Scalar(c.beta2);
    for (Parameter<Scalar>* p : params) {
        auto [it, inserted] = state.moments.try_emplace(p->name);
        if (inserted) {
            it->second.m = Tensor<Scalar>::Zero(p->value.rows(), p->value.cols());
            it->second.v = Tensor<Scalar>::Zero(p->value.rows(), p->value.cols());
        }
        auto& mo = it->second;
        mo.m = b1 * mo.m + (Scalar(1) - b1) * p->grad;
        mo.v = b2 * mo.v + (Scalar(1) - b2) * p->grad.cwiseProduct(p->grad);
        const Scalar step = Scalar(c.learning_rate / correction1);
        const Scalar v_scale = Scalar(1.0 / correction2);
        p->value.array() -= step * mo.m.array() / ((mo.v.array() * v_scale).sqrt() + Scalar(c.epsilon));
    }
}

}  // namespace spontts
