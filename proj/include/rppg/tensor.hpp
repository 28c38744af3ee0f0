#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace rppg {

using Shape = std::vector<int64_t>;

// Dense row-major N-d tensor of doubles with an optional gradient buffer.
// The currency of all network math; small by design, no views, no strides.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, double value);

    const Shape& shape() const { return shape_; }
    size_t rank() const { return shape_.size(); }
    int64_t dim(size_t axis) const { return shape_[axis]; }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // Multi-index access for the common ranks.
    double& operator()(int64_t a, int64_t b, int64_t c) {
        return data_[static_cast<size_t>((a * shape_[1] + b) * shape_[2] + c)];
    }
    double operator()(int64_t a, int64_t b, int64_t c) const {
        return data_[static_cast<size_t>((a * shape_[1] + b) * shape_[2] + c)];
    }
    double& operator()(int64_t a, int64_t b, int64_t c, int64_t d) {
        return data_[static_cast<size_t>(((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d)];
    }
    double operator()(int64_t a, int64_t b, int64_t c, int64_t d) const {
        return data_[static_cast<size_t>(((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d)];
    }
    double& operator()(int64_t a, int64_t b, int64_t c, int64_t d, int64_t e) {
        return data_[static_cast<size_t>(
            (((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d) * shape_[4] + e)];
    }
    double operator()(int64_t a, int64_t b, int64_t c, int64_t d, int64_t e) const {
        return data_[static_cast<size_t>(
            (((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d) * shape_[4] + e)];
    }

    // Optional same-shape gradient buffer.
    bool has_grad() const { return !grad_.empty(); }
    void ensure_grad();
    void zero_grad();
    void drop_grad() { grad_.clear(); grad_.shrink_to_fit(); }
    double* grad() { return grad_.data(); }
    const double* grad() const { return grad_.data(); }
    std::vector<double>& grad_values() { return grad_; }
    const std::vector<double>& grad_values() const { return grad_; }

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

  private:
    Shape shape_;
    std::vector<double> data_;
    std::vector<double> grad_;
};

int64_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

}  // namespace rppg
