#include "clrun/tensor.hpp"

#include <cmath>

namespace clrun {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (const std::size_t e : shape) n *= e;
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        throw ShapeError("tensor data length does not match shape product");
    }
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw ShapeError("rows() requires a rank-2 tensor");
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw ShapeError("cols() requires a rank-2 tensor");
    return shape_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
    return data_[r * cols() + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
}

Tensor Tensor::row(std::size_t r) const {
    const std::size_t w = cols();
    Tensor out({w});
    for (std::size_t c = 0; c < w; ++c) out[c] = data_[r * w + c];
    return out;
}

bool Tensor::all_finite() const {
    for (const double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace clrun
