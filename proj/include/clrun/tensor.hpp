#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace clrun {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a meta-loss (or any training loss) goes non-finite. Carries the
// inner-step index at which the divergence was detected (-1 if not inside an
// inner loop).
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& what, int step = -1)
        : std::runtime_error(what), step_index(step) {}
    int step_index;
};

// Dense row-major tensor of doubles. Shape is a list of extents; data length
// always equals the product of the extents.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t d) const { return shape_.at(d); }
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // 2-D accessors
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    // copies row r of a 2-D tensor into a rank-1 tensor
    Tensor row(std::size_t r) const;

    bool all_finite() const;
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool operator==(const Tensor& o) const = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

}  // namespace clrun
