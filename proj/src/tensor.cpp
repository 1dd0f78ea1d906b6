#include "galmad/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "galmad/error.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace galmad {

std::string to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
        throw DimensionError("tensor shape " + to_string(shape_) + " needs " +
                             std::to_string(shape_size(shape_)) + " elements, got " +
                             std::to_string(data_.size()));
    }
}

Tensor Tensor::vector(std::vector<double> v) {
    Shape s{v.size()};
    return Tensor(std::move(s), std::move(v));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw RankError("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape_));
    }
    return shape_[axis];
}

std::size_t Tensor::rows() const {
    if (shape_.empty()) return 1;
    return data_.size() / (shape_.back() ? shape_.back() : 1);
}

std::size_t Tensor::cols() const { return shape_.empty() ? 1 : shape_.back(); }

double& Tensor::at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
double Tensor::at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
double& Tensor::at(std::size_t i, std::size_t j, std::size_t l) {
    return data_[(i * shape_[1] + j) * shape_[2] + l];
}
double Tensor::at(std::size_t i, std::size_t j, std::size_t l) const {
    return data_[(i * shape_[1] + j) * shape_[2] + l];
}

double Tensor::item() const {
    if (data_.size() != 1) throw RankError("item() on tensor of shape " + to_string(shape_));
    return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const& {
    Tensor copy = *this;
    return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
    if (shape_size(shape) != data_.size()) {
        throw DimensionError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    }
    shape_ = std::move(shape);
    return std::move(*this);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void tune_allocator() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 32 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace galmad
