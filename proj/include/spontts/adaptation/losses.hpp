#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "spontts/corpus/phonemes.hpp"
#include "spontts/numerics/ops.hpp"

namespace spontts {

// L = -y0 log s0 - sigma * sum_{i=1,2} yi log si for one position, with the
// labelled probability floored at 1e-12.
template <typename Scalar>
Scalar weighted_ce_loss(const RowVector<Scalar>& probs, FpTag label, Scalar sigma) {
    require(sigma > Scalar(0), ErrorKind::Config, "sigma must be positive");
    require(probs.size() == 3, ErrorKind::Dimension, "FP probabilities must have three entries");
    const int k = static_cast<int>(label);
    const Scalar p = std::max(probs[k], Scalar(kProbabilityFloor));
    return -(label == FpTag::None ? Scalar(1) : sigma) * std::log(p);
}

// Mean of the per-position weighted cross entropy over the rows of `probs`.
template <typename Scalar>
Var<Scalar> weighted_ce_loss(Var<Scalar> probs, std::span<const FpTag> labels, Scalar sigma) {
    require(sigma > Scalar(0), ErrorKind::Config, "sigma must be positive");
    require(probs.cols() == 3, ErrorKind::Dimension, "FP probabilities must have three columns");
    std::vector<int> ids;
    std::vector<Scalar> weights;
    for (FpTag t : labels) {
        ids.push_back(static_cast<int>(t));
        weights.push_back(t == FpTag::None ? Scalar(1) : sigma);
    }
    return weighted_nll(probs, std::span<const int>(ids), std::span<const Scalar>(weights));
}

}  // namespace spontts
