#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "chfuq/common/error.hpp"

namespace chfuq::engine {

/// Dense row-major matrix of 64-bit floats. Rank <= 2: vectors are 1xC or
/// Nx1, scalars are 1x1. This is the only numeric container the engine and
/// the networks operate on.
class Array {
public:
    Array() = default;

    Array(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), v_(rows * cols, 0.0) {}

    Array(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), v_(std::move(values)) {
        if (v_.size() != rows_ * cols_)
            CHFUQ_THROW(Error, "array: %zu values for %zux%zu shape", v_.size(), rows_, cols_);
    }

    static Array scalar(double v) { return Array(1, 1, {v}); }
    static Array row(std::vector<double> v) {
        const std::size_t n = v.size();
        return Array(1, n, std::move(v));
    }
    static Array column(std::vector<double> v) {
        const std::size_t n = v.size();
        return Array(n, 1, std::move(v));
    }
    static Array full(std::size_t rows, std::size_t cols, double fill) {
        Array a(rows, cols);
        for (double& x : a.v_) x = fill;
        return a;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return v_.size(); }
    bool same_shape(const Array& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool is_scalar() const { return rows_ == 1 && cols_ == 1; }

    double& at(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    std::span<const double> values() const { return v_; }
    std::span<double> values() { return v_; }

    /// Scalar payload of a 1x1 array.
    double item() const {
        if (!is_scalar()) CHFUQ_THROW(Error, "array: item() on %zux%zu, want 1x1", rows_, cols_);
        return v_[0];
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> v_;
};

inline std::string shape_str(const Array& a) {
    return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

}  // namespace chfuq::engine
