#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace galmad {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major array of doubles.
///
/// A rank-0 tensor (empty shape) holds a single scalar. Tensors are plain
/// values: copying copies the buffer.
class Tensor {
public:
    Tensor() : data_(1, 0.0) {}
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }
    static Tensor vector(std::vector<double> v);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t axis) const;

    /// Rows and columns when viewed as a matrix: the last axis is the column
    /// axis and all leading axes are folded into rows.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::vector<double>& buffer() { return data_; }
    const std::vector<double>& buffer() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t i, std::size_t j);
    double at(std::size_t i, std::size_t j) const;
    double& at(std::size_t i, std::size_t j, std::size_t l);
    double at(std::size_t i, std::size_t j, std::size_t l) const;

    double item() const;

    Tensor reshaped(Shape shape) const&;
    Tensor reshaped(Shape shape) &&;

    void fill(double v);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

// Keeps freed tensor storage in the heap instead of returning it to the OS.
// Repeated forward passes otherwise spend most of their time in page faults.
// A no-op outside glibc.
void tune_allocator();

}  // namespace galmad
