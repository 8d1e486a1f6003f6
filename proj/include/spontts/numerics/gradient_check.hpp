#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include "spontts/numerics/tape.hpp"

namespace spontts {

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    Eigen::Index worst_index = -1;
    int probes = 0;
};

// Denominator floor for relative error, so coordinates whose true gradient
// is numerically zero are judged on absolute error instead.
inline constexpr double kGradientCheckFloor = 1e-5;

using DoubleForward = std::function<Var<double>(Tape<double>&)>;

// Backprop gradients vs central finite differences on `probe_count` randomly
// chosen coordinates across `params`. Runs in 64-bit only.
inline GradientCheckResult gradient_check(const DoubleForward& forward, ParameterSet<double>& params,
                                          int probe_count, double fd_epsilon, std::uint64_t seed = 7) {
    params.zero_grad();
    {
        Tape<double> tape;
        tape.backprop(forward(tape));
    }
    auto all = params.all();
    require(!all.empty(), ErrorKind::State, "gradient check over an empty parameter set");
    const Eigen::Index total = params.scalar_count();

    auto loss_at = [&]() {
        Tape<double> tape;
        return forward(tape).value()(0, 0);
    };

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, total - 1);
    GradientCheckResult result;
    for (int probe = 0; probe < probe_count; ++probe) {
        Eigen::Index flat = pick(rng);
        Parameter<double>* p = nullptr;
        for (auto* candidate : all) {
            if (flat < candidate->size()) {
                p = candidate;
                break;
            }
            flat -= candidate->size();
        }
        double& coord = p->value.data()[flat];
        const double saved = coord;
        coord = saved + fd_epsilon;
        const double up = loss_at();
        coord = saved - fd_epsilon;
        const double down = loss_at();
        coord = saved;
        const double numeric = (up - down) / (2.0 * fd_epsilon);
        const double analytic = p->grad.data()[flat];
        const double denom = std::max({std::abs(numeric), std::abs(analytic), kGradientCheckFloor});
        const double err = std::abs(numeric - analytic) / denom;
        ++result.probes;
        if (err > result.max_relative_error || result.worst_index < 0) {
            result.max_relative_error = std::max(err, result.max_relative_error);
            result.worst_parameter = p->name;
            result.worst_index = flat;
        }
    }
    return result;
}

}  // namespace spontts
