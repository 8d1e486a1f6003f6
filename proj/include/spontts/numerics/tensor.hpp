#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spontts/error.hpp"

namespace spontts {

// Every tensor in the model is at most rank 2 (sequence x features), so a
// row-major dense matrix doubles as the flat row-major storage.
template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
struct Parameter {
    std::string name;
    Tensor<Scalar> value;
    Tensor<Scalar> grad;

    Parameter(std::string n, Tensor<Scalar> v)
        : name(std::move(n)), value(std::move(v)), grad(Tensor<Scalar>::Zero(value.rows(), value.cols())) {}

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
    Eigen::Index size() const { return value.size(); }
};

inline bool has_prefix(std::string_view name, std::string_view prefix) {
    return name.substr(0, prefix.size()) == prefix;
}

// Ordered collection of uniquely named parameters. Addresses are stable for
// the lifetime of the set, so graph nodes may hold raw pointers into it.
template <typename Scalar>
class ParameterSet {
public:
    ParameterSet() = default;
    ParameterSet(const ParameterSet& other) { *this = other; }
    ParameterSet& operator=(const ParameterSet& other) {
        if (this != &other) {
            params_.clear();
            index_.clear();
            for (const auto& p : other.params_) {
                add(p->name, p->value).grad = p->grad;
            }
        }
        return *this;
    }
    ParameterSet(ParameterSet&&) noexcept = default;
    ParameterSet& operator=(ParameterSet&&) noexcept = default;

    Parameter<Scalar>& add(const std::string& name, Tensor<Scalar> init) {
        require(!index_.contains(name), ErrorKind::State, "duplicate parameter name: " + name);
        require(init.rows() >= 1 && init.cols() >= 1, ErrorKind::Dimension,
                "parameter " + name + " must have non-empty shape");
        params_.push_back(std::make_unique<Parameter<Scalar>>(name, std::move(init)));
        index_.emplace(name, params_.size() - 1);
        return *params_.back();
    }

    bool contains(std::string_view name) const { return index_.contains(std::string(name)); }

    Parameter<Scalar>& at(std::string_view name) {
        auto it = index_.find(std::string(name));
        require(it != index_.end(), ErrorKind::State, "unknown parameter: " + std::string(name));
        return *params_[it->second];
    }
    const Parameter<Scalar>& at(std::string_view name) const {
        auto it = index_.find(std::string(name));
        require(it != index_.end(), ErrorKind::State, "unknown parameter: " + std::string(name));
        return *params_[it->second];
    }

    std::vector<Parameter<Scalar>*> with_prefixes(std::span<const std::string> prefixes) {
        std::vector<Parameter<Scalar>*> out;
        for (auto& p : params_) {
            bool hit = std::any_of(prefixes.begin(), prefixes.end(),
                                   [&](const std::string& pre) { return has_prefix(p->name, pre); });
            if (hit) {
                out.push_back(p.get());
            }
        }
        return out;
    }

    std::vector<Parameter<Scalar>*> all() {
        std::vector<Parameter<Scalar>*> out;
        out.reserve(params_.size());
        for (auto& p : params_) {
            out.push_back(p.get());
        }
        return out;
    }
    std::vector<const Parameter<Scalar>*> all() const {
        std::vector<const Parameter<Scalar>*> out;
        out.reserve(params_.size());
        for (const auto& p : params_) {
            out.push_back(p.get());
        }
        return out;
    }

    void zero_grad() {
        for (auto& p : params_) {
            p->zero_grad();
        }
    }

    std::size_t size() const { return params_.size(); }

    Eigen::Index scalar_count() const {
        Eigen::Index n = 0;
        for (const auto& p : params_) {
            n += p->size();
        }
        return n;
    }

    template <typename Other>
    ParameterSet<Other> cast() const {
        ParameterSet<Other> out;
        for (const auto& p : params_) {
            out.add(p->name, p->value.template cast<Other>());
        }
        return out;
    }

private:
    std::vector<std::unique_ptr<Parameter<Scalar>>> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace spontts
