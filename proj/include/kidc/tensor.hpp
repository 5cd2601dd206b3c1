#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace kidc::num {

// Dense row-major tensor of doubles. Rank 1 = vector, rank 2 = matrix,
// rank 3 = conv kernel stack. Value semantics throughout; moving between
// threads is safe because there is no shared state.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims);  // zero-filled
    Tensor(std::vector<std::size_t> dims, std::vector<double> values);

    static Tensor scalar(double v);
    static Tensor vec(std::vector<double> v);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t rank() const { return dims_.size(); }
    std::size_t size() const { return values_.size(); }
    std::size_t dim(std::size_t i) const { return dims_[i]; }
    std::size_t rows() const { return dims_.at(0); }
    std::size_t cols() const { return dims_.at(1); }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& at(std::size_t r, std::size_t c) { return values_[r * dims_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * dims_[1] + c]; }

    bool is_scalar() const { return values_.size() == 1 && rank() <= 1; }
    bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }
    bool all_finite() const;

    void fill(double v);

    // "[2x3]" — used in shape-mismatch diagnostics.
    std::string shape_str() const;

private:
    std::vector<std::size_t> dims_;
    std::vector<double> values_;
};

std::size_t shape_product(const std::vector<std::size_t>& dims);

}  // namespace kidc::num
