#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <unordered_map>
#include <vector>

#include "spontts/numerics/tensor.hpp"

namespace spontts {

template <typename Scalar>
class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
template <typename Scalar>
class Var {
public:
    Var() = default;
    Var(Tape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Tensor<Scalar>& value() const { return tape_->value(id_); }
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    Tape<Scalar>& tape() const { return *tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape<Scalar>* tape_ = nullptr;
    std::size_t id_ = 0;
};

// Reverse-mode recording of one forward computation.
//
// Nodes are appended in evaluation order, so a reverse sweep over the node
// list is a valid topological order. Parameters enter the graph as leaves;
// backprop() sums leaf gradients into Parameter::grad, which means repeated
// calls accumulate.
template <typename Scalar>
class Tape {
public:
    using Mat = Tensor<Scalar>;
    using Backward = std::function<void(Tape&)>;

    explicit Tape(bool training = false, std::uint64_t seed = 0) : training_(training), rng_(seed) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool training() const { return training_; }
    std::mt19937_64& rng() { return rng_; }

    Var<Scalar> constant(Mat value) {
        nodes_.push_back(Node{std::move(value), Mat{}, nullptr, nullptr, false});
        return Var<Scalar>(this, nodes_.size() - 1);
    }

    Var<Scalar> parameter(Parameter<Scalar>& p) {
        auto it = param_nodes_.find(&p);
        if (it != param_nodes_.end()) {
            return Var<Scalar>(this, it->second);
        }
        nodes_.push_back(Node{p.value, Mat{}, nullptr, &p, true});
        param_nodes_.emplace(&p, nodes_.size() - 1);
        return Var<Scalar>(this, nodes_.size() - 1);
    }

    // Appends an interior node. The backward closure is kept only when some
    // input needs a gradient.
    Var<Scalar> record(Mat value, std::initializer_list<Var<Scalar>> inputs, Backward backward) {
        bool needs = false;
        for (const auto& in : inputs) {
            require(in.valid() && &in.tape() == this, ErrorKind::State, "variable belongs to another tape");
            needs = needs || nodes_[in.id()].requires_grad;
        }
        nodes_.push_back(Node{std::move(value), Mat{}, needs ? std::move(backward) : nullptr, nullptr, needs});
        return Var<Scalar>(this, nodes_.size() - 1);
    }

    Var<Scalar> record(Mat value, const std::vector<Var<Scalar>>& inputs, Backward backward) {
        bool needs = false;
        for (const auto& in : inputs) {
            require(in.valid() && &in.tape() == this, ErrorKind::State, "variable belongs to another tape");
            needs = needs || nodes_[in.id()].requires_grad;
        }
        nodes_.push_back(Node{std::move(value), Mat{}, needs ? std::move(backward) : nullptr, nullptr, needs});
        return Var<Scalar>(this, nodes_.size() - 1);
    }

    const Mat& value(std::size_t id) const { return nodes_[id].value; }
    const Mat& grad(std::size_t id) const { return nodes_[id].grad; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    template <typename Expr>
    void accumulate(std::size_t id, const Expr& contribution) {
        Node& node = nodes_[id];
        if (node.requires_grad) {
            node.grad += contribution;
        }
    }

    // Gradient of a 1x1 loss with respect to every parameter leaf reached.
    void backprop(Var<Scalar> loss) {
        require(!nodes_.empty(), ErrorKind::State, "backprop requested before any forward pass");
        require(loss.valid() && &loss.tape() == this && loss.id() < nodes_.size(), ErrorKind::State,
                "loss is not recorded on this tape");
        require(loss.rows() == 1 && loss.cols() == 1, ErrorKind::Dimension, "loss must be a scalar");

        for (std::size_t i = 0; i <= loss.id(); ++i) {
            Node& node = nodes_[i];
            if (node.requires_grad) {
                node.grad.setZero(node.value.rows(), node.value.cols());
            }
        }
        if (!nodes_[loss.id()].requires_grad) {
            return;
        }
        nodes_[loss.id()].grad(0, 0) = Scalar(1);
        for (std::size_t i = loss.id() + 1; i-- > 0;) {
            if (nodes_[i].backward) {
                nodes_[i].backward(*this);
            }
        }
        for (std::size_t i = 0; i <= loss.id(); ++i) {
            Node& node = nodes_[i];
            if (node.param != nullptr) {
                node.param->grad += node.grad;
            }
        }
    }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Mat value;
        Mat grad;
        Backward backward;
        Parameter<Scalar>* param;
        bool requires_grad;
    };

    bool training_;
    std::mt19937_64 rng_;
    std::vector<Node> nodes_;
    std::unordered_map<const Parameter<Scalar>*, std::size_t> param_nodes_;
};

}  // namespace spontts
