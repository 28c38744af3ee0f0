#include "rppg/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace rppg {

int64_t shape_numel(const Shape& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream out;
    out << "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ",";
        out << shape[i];
    }
    out << ")";
    return out.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
    for (int64_t d : shape_) {
        if (d <= 0) throw std::invalid_argument("Tensor: non-positive dim in " + shape_to_string(shape_));
    }
    data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
    for (int64_t d : shape_) {
        if (d <= 0) throw std::invalid_argument("Tensor: non-positive dim in " + shape_to_string(shape_));
    }
    if (shape_numel(shape_) != static_cast<int64_t>(data_.size())) {
        throw std::invalid_argument("Tensor: value count " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::full(Shape shape, double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

void Tensor::ensure_grad() {
    if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0);
}

void Tensor::zero_grad() {
    if (grad_.empty()) grad_.assign(data_.size(), 0.0);
    else std::fill(grad_.begin(), grad_.end(), 0.0);
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace rppg
