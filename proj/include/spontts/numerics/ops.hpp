#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spontts/numerics/tape.hpp"

// Differentiable operations over Tape-recorded values. Each function computes
// its forward value eagerly and registers the matching vector-Jacobian
// product.
namespace spontts {

namespace detail {
inline std::string shape_str(Eigen::Index r, Eigen::Index c) {
    return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
}
}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
    require(a.cols() == b.rows(), ErrorKind::Dimension,
            "matmul inner dimensions differ: " + detail::shape_str(a.rows(), a.cols()) + " x " +
                detail::shape_str(b.rows(), b.cols()));
    Tensor<Scalar> out = a.value() * b.value();
    auto& tape = a.tape();
    const std::size_t ia = a.id(), ib = b.id();
    std::size_t self = tape.size();
    return tape.record(std::move(out), {a, b}, [ia, ib, self](Tape<Scalar>& t) {
        const auto& g = t.grad(self);
        t.accumulate(ia, g * t.value(ib).transpose());
        t.accumulate(ib, t.value(ia).transpose() * g);
    });
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Dimension,
            "add shape mismatch: " + detail::shape_str(a.rows(), a.cols()) + " vs " +
                detail::shape_str(b.rows(), b.cols()));
    auto& tape = a.tape();
    const std::size_t ia = a.id(), ib = b.id(), self = tape.size();
    return tape.record(a.value() + b.value(), {a, b}, [ia, ib, self](Tape<Scalar>& t) {
        t.accumulate(ia, t.grad(self));
        t.accumulate(ib, t.grad(self));
    });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Dimension, "sub shape mismatch");
    auto& tape = a.tape();
    const std::size_t ia = a.id(), ib = b.id(), self = tape.size();
    return tape.record(a.value() - b.value(), {a, b}, [ia, ib, self](Tape<Scalar>& t) {
        t.accumulate(ia, t.grad(self));
        t.accumulate(ib, -t.grad(self));
    });
}

template <typename Scalar>
Var<Scalar> hadamard(Var<Scalar> a, Var<Scalar> b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Dimension, "hadamard shape mismatch");
    auto& tape = a.tape();
    const std::size_t ia = a.id(), ib = b.id(), self = tape.size();
    return tape.record(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib, self](Tape<Scalar>& t) {
        t.accumulate(ia, t.grad(self).cwiseProduct(t.value(ib)));
        t.accumulate(ib, t.grad(self).cwiseProduct(t.value(ia)));
    });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar factor) {
    auto& tape = a.tape();
    const std::size_t ia = a.id(), self = tape.size();
    return tape.record(a.value() * factor, {a},
                       [ia, self, factor](Tape<Scalar>& t) { t.accumulate(ia, t.grad(self) * factor); });
}

// a[m x n] + row[1 x n] broadcast over rows.
template <typename Scalar>
Var<Scalar> add_row(Var<Scalar> a, Var<Scalar> row) {
    require(row.rows() == 1 && row.cols() == a.cols(), ErrorKind::Dimension,
            "add_row expects a [1x" + std::to_string(a.cols()) + "] row, got " +
                detail::shape_str(row.rows(), row.cols()));
    Tensor<Scalar> out = a.value();
    out.rowwise() += row.value().row(0);
    auto& tape = a.tape();
    const std::size_t ia = a.id(), ir = row.id(), self = tape.size();
    return tape.record(std::move(out), {a, row}, [ia, ir, self](Tape<Scalar>& t) {
        t.accumulate(ia, t.grad(self));
        t.accumulate(ir, t.grad(self).colwise().sum());
    });
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> a) {
    auto& tape = a.tape();
    const std::size_t ia = a.id(), self = tape.size();
    return tape.record(a.value().cwiseMax(Scalar(0)), {a}, [ia, self](Tape<Scalar>& t) {
        t.accumulate(ia, (t.value(ia).array() > Scalar(0)).select(t.grad(self).array(), Scalar(0)).matrix());
    });
}

template <typename Scalar>
Tensor<Scalar> softmax_rows_value(const Tensor<Scalar>& x) {
    Tensor<Scalar> y(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Scalar mx = x.row(r).maxCoeff();
        y.row(r) = (x.row(r).array() - mx).exp().matrix();
        y.row(r) /= y.row(r).sum();
    }
    return y;
}

// Softmax over the last axis, max-subtracted.
template <typename Scalar>
Var<Scalar> softmax_rows(Var<Scalar> a) {
    require(a.cols() >= 1, ErrorKind::Dimension, "softmax needs at least one class");
    auto& tape = a.tape();
    const std::size_t ia = a.id(), self = tape.size();
    return tape.record(softmax_rows_value(a.value()), {a}, [ia, self](Tape<Scalar>& t) {
        const auto& y = t.value(self);
        const auto& g = t.grad(self);
        Tensor<Scalar> dot = g.cwiseProduct(y).rowwise().sum();
        Tensor<Scalar> gx = y.cwiseProduct(g - dot.replicate(1, g.cols()));
        t.accumulate(ia, gx);
    });
}

inline constexpr double kLayerNormEpsilon = 1e-5;

// Per-row normalisation over the feature axis followed by gamma/beta, both
// [1 x d] so conditional (generated) scales flow through the same op.
template <typename Scalar>
Var<Scalar> layer_norm(Var<Scalar> x, Var<Scalar> gamma, Var<Scalar> beta) {
    const Eigen::Index d = x.cols();
    require(d >= 1, ErrorKind::Dimension, "layer_norm needs d >= 1");
    require(gamma.rows() == 1 && gamma.cols() == d && beta.rows() == 1 && beta.cols() == d,
            ErrorKind::Dimension, "layer_norm gamma/beta must be [1x" + std::to_string(d) + "]");
    const auto& xv = x.value();
    Tensor<Scalar> xhat(xv.rows(), d);
    Tensor<Scalar> inv_std(xv.rows(), 1);
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
        const Scalar mean = xv.row(r).mean();
        const Scalar var = (xv.row(r).array() - mean).square().mean();
        inv_std(r, 0) = Scalar(1) / std::sqrt(var + Scalar(kLayerNormEpsilon));
        xhat.row(r) = (xv.row(r).array() - mean).matrix() * inv_std(r, 0);
    }
    Tensor<Scalar> out = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
    out.rowwise() += beta.value().row(0);

    auto& tape = x.tape();
    const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id(), self = tape.size();
    return tape.record(std::move(out), {x, gamma, beta},
                       [ix, ig, ib, self, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<Scalar>& t) {
                           const auto& g = t.grad(self);
                           t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
                           t.accumulate(ib, g.colwise().sum());
                           if (!t.requires_grad(ix)) {
                               return;
                           }
                           Tensor<Scalar> gxhat = (g.array().rowwise() * t.value(ig).row(0).array()).matrix();
                           Tensor<Scalar> gx(g.rows(), g.cols());
                           for (Eigen::Index r = 0; r < g.rows(); ++r) {
                               const Scalar m1 = gxhat.row(r).mean();
                               const Scalar m2 = gxhat.row(r).cwiseProduct(xhat.row(r)).mean();
                               gx.row(r) = ((gxhat.row(r).array() - m1) - xhat.row(r).array() * m2).matrix() *
                                           inv_std(r, 0);
                           }
                           t.accumulate(ix, gx);
                       });
}

// Zero-padded sliding windows: row t holds x[t-k/2 .. t+k/2] flattened, so a
// "same" convolution becomes one matmul against a [(k*c_in) x c_out] kernel.
template <typename Scalar>
Var<Scalar> im2col_same(Var<Scalar> x, Eigen::Index width) {
    require(width >= 1 && width % 2 == 1, ErrorKind::Config,
            "convolution width must be odd, got " + std::to_string(width));
    const Eigen::Index len = x.rows(), cin = x.cols(), half = width / 2;
    Tensor<Scalar> cols = Tensor<Scalar>::Zero(len, width * cin);
    const auto& xv = x.value();
    for (Eigen::Index t = 0; t < len; ++t) {
        for (Eigen::Index j = 0; j < width; ++j) {
            const Eigen::Index src = t + j - half;
            if (src >= 0 && src < len) {
                cols.block(t, j * cin, 1, cin) = xv.row(src);
            }
        }
    }
    auto& tape = x.tape();
    const std::size_t ix = x.id(), self = tape.size();
    return tape.record(std::move(cols), {x}, [ix, self, width, half, len, cin](Tape<Scalar>& t) {
        if (!t.requires_grad(ix)) {
            return;
        }
        const auto& g = t.grad(self);
        Tensor<Scalar> gx = Tensor<Scalar>::Zero(len, cin);
        for (Eigen::Index r = 0; r < len; ++r) {
            for (Eigen::Index j = 0; j < width; ++j) {
                const Eigen::Index src = r + j - half;
                if (src >= 0 && src < len) {
                    gx.row(src) += g.block(r, j * cin, 1, cin);
                }
            }
        }
        t.accumulate(ix, gx);
    });
}

// Cross-correlation along the sequence axis with output length == input length.
// kernel: [(width * c_in) x c_out], tap-major; bias: [1 x c_out].
template <typename Scalar>
Var<Scalar> conv1d_same(Var<Scalar> x, Var<Scalar> kernel, Var<Scalar> bias) {
    const Eigen::Index cin = x.cols();
    require(cin >= 1 && kernel.rows() % cin == 0, ErrorKind::Dimension,
            "conv kernel rows " + std::to_string(kernel.rows()) + " not a multiple of c_in " + std::to_string(cin));
    const Eigen::Index width = kernel.rows() / cin;
    return add_row(matmul(im2col_same(x, width), kernel), bias);
}

template <typename Scalar>
Var<Scalar> linear(Var<Scalar> x, Var<Scalar> weight, Var<Scalar> bias) {
    return add_row(matmul(x, weight), bias);
}

template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> a) {
    auto& tape = a.tape();
    const std::size_t ia = a.id(), self = tape.size();
    return tape.record(a.value().transpose(), {a},
                       [ia, self](Tape<Scalar>& t) { t.accumulate(ia, t.grad(self).transpose()); });
}

template <typename Scalar>
Var<Scalar> slice_cols(Var<Scalar> a, Eigen::Index start, Eigen::Index count) {
    require(start >= 0 && count >= 0 && start + count <= a.cols(), ErrorKind::Dimension, "slice_cols out of range");
    auto& tape = a.tape();
    const std::size_t ia = a.id(), self = tape.size();
    const Eigen::Index rows = a.rows(), cols = a.cols();
    return tape.record(a.value().middleCols(start, count), {a}, [=](Tape<Scalar>& t) {
        if (!t.requires_grad(ia)) {
            return;
        }
        Tensor<Scalar> g = Tensor<Scalar>::Zero(rows, cols);
        g.middleCols(start, count) = t.grad(self);
        t.accumulate(ia, g);
    });
}

template <typename Scalar>
Var<Scalar> concat_cols(const std::vector<Var<Scalar>>& parts) {
    require(!parts.empty(), ErrorKind::Dimension, "concat_cols of nothing");
    const Eigen::Index rows = parts.front().rows();
    Eigen::Index total = 0;
    for (const auto& p : parts) {
        require(p.rows() == rows, ErrorKind::Dimension, "concat_cols row mismatch");
        total += p.cols();
    }
    Tensor<Scalar> out(rows, total);
    std::vector<std::pair<std::size_t, Eigen::Index>> spans;
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.middleCols(at, p.cols()) = p.value();
        spans.emplace_back(p.id(), at);
        at += p.cols();
    }
    auto& tape = parts.front().tape();
    const std::size_t self = tape.size();
    return tape.record(std::move(out), parts, [spans, self](Tape<Scalar>& t) {
        for (const auto& [id, offset] : spans) {
            t.accumulate(id, t.grad(self).middleCols(offset, t.value(id).cols()));
        }
    });
}

template <typename Scalar>
Var<Scalar> gather_rows(Var<Scalar> table, std::span<const int> ids) {
    Tensor<Scalar> out(static_cast<Eigen::Index>(ids.size()), table.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        require(ids[i] >= 0 && ids[i] < table.rows(), ErrorKind::Vocabulary,
                "row index " + std::to_string(ids[i]) + " outside table of " + std::to_string(table.rows()));
        out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
    }
    auto& tape = table.tape();
    const std::size_t it = table.id(), self = tape.size();
    std::vector<int> idx(ids.begin(), ids.end());
    const Eigen::Index rows = table.rows(), cols = table.cols();
    return tape.record(std::move(out), {table}, [it, self, idx = std::move(idx), rows, cols](Tape<Scalar>& t) {
        Tensor<Scalar> g = Tensor<Scalar>::Zero(rows, cols);
        const auto& go = t.grad(self);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            g.row(idx[i]) += go.row(static_cast<Eigen::Index>(i));
        }
        t.accumulate(it, g);
    });
}

template <typename Scalar>
Var<Scalar> mean_rows(Var<Scalar> a) {
    require(a.rows() >= 1, ErrorKind::Dimension, "mean_rows of an empty matrix");
    auto& tape = a.tape();
    const std::size_t ia = a.id(), self = tape.size();
    const Eigen::Index rows = a.rows();
    return tape.record(a.value().colwise().mean(), {a}, [ia, self, rows](Tape<Scalar>& t) {
        t.accumulate(ia, t.grad(self).replicate(rows, 1) / Scalar(rows));
    });
}

// Row i of the input repeated counts[i] times, in order.
template <typename Scalar>
Var<Scalar> repeat_rows(Var<Scalar> a, std::span<const int> counts) {
    require(static_cast<Eigen::Index>(counts.size()) == a.rows(), ErrorKind::Dimension,
            "repeat_rows needs one count per row");
    std::vector<int> source;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        require(counts[i] >= 0, ErrorKind::Contract, "negative repeat count " + std::to_string(counts[i]));
        source.insert(source.end(), static_cast<std::size_t>(counts[i]), static_cast<int>(i));
    }
    Tensor<Scalar> out(static_cast<Eigen::Index>(source.size()), a.cols());
    for (std::size_t f = 0; f < source.size(); ++f) {
        out.row(static_cast<Eigen::Index>(f)) = a.value().row(source[f]);
    }
    auto& tape = a.tape();
    const std::size_t ia = a.id(), self = tape.size();
    const Eigen::Index rows = a.rows(), cols = a.cols();
    return tape.record(std::move(out), {a}, [ia, self, source = std::move(source), rows, cols](Tape<Scalar>& t) {
        Tensor<Scalar> g = Tensor<Scalar>::Zero(rows, cols);
        const auto& go = t.grad(self);
        for (std::size_t f = 0; f < source.size(); ++f) {
            g.row(source[f]) += go.row(static_cast<Eigen::Index>(f));
        }
        t.accumulate(ia, g);
    });
}

struct RowSource {
    bool from_second;
    Eigen::Index row;
};

// Builds a matrix whose rows are picked from `first` or `second` by `plan`.
template <typename Scalar>
Var<Scalar> interleave_rows(Var<Scalar> first, Var<Scalar> second, std::vector<RowSource> plan) {
    require(first.cols() == second.cols(), ErrorKind::Dimension, "interleave_rows column mismatch");
    Tensor<Scalar> out(static_cast<Eigen::Index>(plan.size()), first.cols());
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& src = plan[i].from_second ? second.value() : first.value();
        require(plan[i].row >= 0 && plan[i].row < src.rows(), ErrorKind::Dimension, "interleave_rows index");
        out.row(static_cast<Eigen::Index>(i)) = src.row(plan[i].row);
    }
    auto& tape = first.tape();
    const std::size_t i1 = first.id(), i2 = second.id(), self = tape.size();
    return tape.record(std::move(out), {first, second}, [i1, i2, self, plan = std::move(plan)](Tape<Scalar>& t) {
        Tensor<Scalar> g1 = Tensor<Scalar>::Zero(t.value(i1).rows(), t.value(i1).cols());
        Tensor<Scalar> g2 = Tensor<Scalar>::Zero(t.value(i2).rows(), t.value(i2).cols());
        const auto& go = t.grad(self);
        for (std::size_t i = 0; i < plan.size(); ++i) {
            (plan[i].from_second ? g2 : g1).row(plan[i].row) += go.row(static_cast<Eigen::Index>(i));
        }
        t.accumulate(i1, g1);
        t.accumulate(i2, g2);
    });
}

template <typename Scalar>
Var<Scalar> sum_all(Var<Scalar> a) {
    auto& tape = a.tape();
    const std::size_t ia = a.id(), self = tape.size();
    Tensor<Scalar> out(1, 1);
    out(0, 0) = a.value().sum();
    const Eigen::Index rows = a.rows(), cols = a.cols();
    return tape.record(std::move(out), {a}, [ia, self, rows, cols](Tape<Scalar>& t) {
        t.accumulate(ia, Tensor<Scalar>::Constant(rows, cols, t.grad(self)(0, 0)));
    });
}

// Mean absolute error against a constant target; an empty input yields 0.
template <typename Scalar>
Var<Scalar> l1_loss(Var<Scalar> pred, const Tensor<Scalar>& target) {
    require(pred.rows() == target.rows() && pred.cols() == target.cols(), ErrorKind::Dimension,
            "l1 target shape " + detail::shape_str(target.rows(), target.cols()) + " vs prediction " +
                detail::shape_str(pred.rows(), pred.cols()));
    const Scalar n = std::max<Scalar>(Scalar(1), Scalar(pred.value().size()));
    Tensor<Scalar> diff = pred.value() - target;
    Tensor<Scalar> out(1, 1);
    out(0, 0) = diff.cwiseAbs().sum() / n;
    auto& tape = pred.tape();
    const std::size_t ip = pred.id(), self = tape.size();
    return tape.record(std::move(out), {pred}, [ip, self, n, diff = std::move(diff)](Tape<Scalar>& t) {
        const Scalar g = t.grad(self)(0, 0) / n;
        t.accumulate(ip, diff.unaryExpr([g](Scalar v) {
            return v > Scalar(0) ? g : (v < Scalar(0) ? -g : Scalar(0));
        }));
    });
}

// Mean of mask * (pred - target)^2 over masked entries; no masked entries -> 0.
template <typename Scalar>
Var<Scalar> masked_mse(Var<Scalar> pred, const Tensor<Scalar>& target, const Tensor<Scalar>& mask) {
    require(pred.rows() == target.rows() && pred.cols() == target.cols() && mask.rows() == target.rows() &&
                mask.cols() == target.cols(),
            ErrorKind::Dimension, "masked_mse shape mismatch");
    const Scalar n = mask.sum();
    Tensor<Scalar> diff = (pred.value() - target).cwiseProduct(mask);
    Tensor<Scalar> out(1, 1);
    out(0, 0) = n > Scalar(0) ? diff.squaredNorm() / n : Scalar(0);
    auto& tape = pred.tape();
    const std::size_t ip = pred.id(), self = tape.size();
    return tape.record(std::move(out), {pred}, [ip, self, n, diff = std::move(diff)](Tape<Scalar>& t) {
        if (n > Scalar(0)) {
            t.accumulate(ip, diff * (Scalar(2) * t.grad(self)(0, 0) / n));
        }
    });
}

template <typename Scalar>
Var<Scalar> mse_loss(Var<Scalar> pred, const Tensor<Scalar>& target) {
    return masked_mse(pred, target, Tensor<Scalar>(Tensor<Scalar>::Ones(target.rows(), target.cols())));
}

inline constexpr double kProbabilityFloor = 1e-12;

// (1/n) * sum_i -weights[i] * log(max(probs[i, labels[i]], 1e-12)).
template <typename Scalar>
Var<Scalar> weighted_nll(Var<Scalar> probs, std::span<const int> labels, std::span<const Scalar> weights) {
    require(static_cast<Eigen::Index>(labels.size()) == probs.rows() && labels.size() == weights.size(),
            ErrorKind::Dimension, "weighted_nll needs one label and weight per row");
    const Scalar n = std::max<Scalar>(Scalar(1), Scalar(labels.size()));
    Tensor<Scalar> out = Tensor<Scalar>::Zero(1, 1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        require(labels[i] >= 0 && labels[i] < probs.cols(), ErrorKind::Data, "label outside class range");
        const Scalar p = std::max(probs.value()(static_cast<Eigen::Index>(i), labels[i]), Scalar(kProbabilityFloor));
        out(0, 0) -= weights[i] * std::log(p);
    }
    out(0, 0) /= n;
    auto& tape = probs.tape();
    const std::size_t ip = probs.id(), self = tape.size();
    std::vector<int> lab(labels.begin(), labels.end());
    std::vector<Scalar> w(weights.begin(), weights.end());
    return tape.record(std::move(out), {probs}, [ip, self, n, lab = std::move(lab), w = std::move(w)](Tape<Scalar>& t) {
        const auto& pv = t.value(ip);
        Tensor<Scalar> g = Tensor<Scalar>::Zero(pv.rows(), pv.cols());
        const Scalar go = t.grad(self)(0, 0) / n;
        for (std::size_t i = 0; i < lab.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            const Scalar p = pv(r, lab[i]);
            if (p > Scalar(kProbabilityFloor)) {
                g(r, lab[i]) = -go * w[i] / p;
            }
        }
        t.accumulate(ip, g);
    });
}

// Inverted dropout; identity outside training mode.
template <typename Scalar>
Var<Scalar> dropout(Var<Scalar> x, double rate) {
    auto& tape = x.tape();
    if (!tape.training() || rate <= 0.0) {
        return x;
    }
    require(rate < 1.0, ErrorKind::Config, "dropout rate must be < 1");
    std::bernoulli_distribution keep(1.0 - rate);
    const Scalar inv = Scalar(1.0 / (1.0 - rate));
    Tensor<Scalar> mask(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
        mask.data()[i] = keep(tape.rng()) ? inv : Scalar(0);
    }
    Tensor<Scalar> out = x.value().cwiseProduct(mask);
    const std::size_t ix = x.id(), self = tape.size();
    return tape.record(std::move(out), {x}, [ix, self, mask = std::move(mask)](Tape<Scalar>& t) {
        t.accumulate(ix, t.grad(self).cwiseProduct(mask));
    });
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) {
    return add(a, b);
}

template <typename Scalar>
Var<Scalar> operator-(Var<Scalar> a, Var<Scalar> b) {
    return sub(a, b);
}

}  // namespace spontts
