#include "kidc/tensor.hpp"

#include <cmath>
#include <utility>

#include "kidc/errors.hpp"

namespace kidc::num {

std::size_t shape_product(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> dims)
    : dims_(std::move(dims)), values_(shape_product(dims_), 0.0) {
    for (std::size_t d : dims_) {
        if (d == 0) throw InvalidInput("tensor extent must be positive, got shape " + shape_str());
    }
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
    for (std::size_t d : dims_) {
        if (d == 0) throw InvalidInput("tensor extent must be positive, got shape " + shape_str());
    }
    if (shape_product(dims_) != values_.size()) {
        throw InvalidInput("tensor shape " + shape_str() + " does not match value count " +
                           std::to_string(values_.size()));
    }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vec(std::vector<double> v) {
    std::size_t n = v.size();
    return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

bool Tensor::all_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double v) {
    for (double& x : values_) x = v;
}

std::string Tensor::shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(dims_[i]);
    }
    s += "]";
    return s;
}

}  // namespace kidc::num
