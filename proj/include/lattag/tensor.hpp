#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "lattag/errors.hpp"

namespace lattag {

// Dense row-major tensor. Shape is dynamic; rank 1-3 is what the model uses.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(count(shape_), T(0)) {}

    Tensor(std::initializer_list<std::size_t> shape)
        : shape_(shape), data_(count(shape_), T(0)) {}

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t rows() const { return shape_.size() > 0 ? shape_[0] : 0; }
    std::size_t cols() const { return shape_.size() > 1 ? shape_[1] : 0; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    T& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    T* row(std::size_t i) { return data_.data() + i * shape_[1]; }
    const T* row(std::size_t i) const { return data_.data() + i * shape_[1]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

    std::string shape_string() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

private:
    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }

    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

template <typename T>
inline void require_shape(const Tensor<T>& t, std::initializer_list<std::size_t> shape,
                          const char* what) {
    if (t.shape() != std::vector<std::size_t>(shape)) {
        Tensor<T> expected{std::vector<std::size_t>(shape)};
        throw ShapeMismatch(std::string(what) + ": got " + t.shape_string() + ", expected " +
                            expected.shape_string());
    }
}

} // namespace lattag
