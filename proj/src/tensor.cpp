#include "hsnn/tensor.hpp"

#include <algorithm>

#include "hsnn/error.hpp"

namespace hsnn {

std::int64_t shape_volume(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int e : shape) {
        if (e <= 0) throw_config("tensor extent must be positive, got " + std::to_string(e));
        n *= e;
    }
    return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(shape_volume(shape_)), 0.0);
}

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(shape_volume(shape_)), fill);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_volume(shape_) != static_cast<std::int64_t>(data_.size())) {
        throw_config("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
    if (shape_volume(shape) != size()) {
        throw_config("reshape from " + shape_to_string(shape_) + " to " + shape_to_string(shape) +
                     " changes the element count");
    }
    return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return "config";
        case ErrorKind::input: return "input";
        case ErrorKind::io: return "io";
        case ErrorKind::run: return "run";
        case ErrorKind::internal: return "internal";
    }
    return "unknown";
}

}  // namespace hsnn
