#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hsnn {

// Dense row-major tensor of 64-bit reals. The last axis is fastest-varying.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, double fill);
    Tensor(std::vector<int> shape, std::vector<double> data);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // Reinterprets the contents under a new shape with equal element count.
    Tensor reshaped(std::vector<int> shape) const;

    void fill(double v);

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

// Integer tensor produced by quantization; accumulation is done in 64 bits.
struct QuantTensor {
    std::vector<int> shape;
    std::vector<std::int32_t> data;

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
};

std::int64_t shape_volume(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

}  // namespace hsnn
