#include "simulmt/array.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace simulmt {

namespace {
std::size_t checked_volume(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("array dimension must be positive, got " + shape_string(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}
}  // namespace

Array::Array(std::vector<int> shape) : shape_(std::move(shape)), data_(checked_volume(shape_), 0.0) {}

Array::Array(std::vector<int> shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
    if (checked_volume(shape_) != data_.size())
        throw std::invalid_argument("array shape " + shape_string(shape_) + " does not match value count");
}

Array Array::vec(std::vector<double> values) {
    std::vector<int> shape{static_cast<int>(values.size())};
    return Array(std::move(shape), std::move(values));
}

double& Array::at(int i, int j) {
    return data_[static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) + static_cast<std::size_t>(j)];
}

double Array::at(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) + static_cast<std::size_t>(j)];
}

void Array::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Array::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string shape_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ")";
    return os.str();
}

void require_finite(const Array& a, const std::string& what) {
    if (!a.all_finite()) throw std::runtime_error("non-finite values in " + what);
}

void require_shape(const Array& a, const std::vector<int>& shape, const std::string& what) {
    if (a.shape() != shape)
        throw std::runtime_error("shape mismatch in " + what + ": expected " + shape_string(shape) + ", got " +
                                 shape_string(a.shape()));
}

}  // namespace simulmt
