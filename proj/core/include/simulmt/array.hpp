#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace simulmt {

/// Dense row-major array of doubles. Rank 1 and 2 cover everything the
/// model family needs; shapes are immutable after construction.
class Array {
public:
    Array() = default;
    explicit Array(std::vector<int> shape);
    Array(std::vector<int> shape, std::vector<double> values);

    static Array zeros(std::vector<int> shape) { return Array(std::move(shape)); }
    static Array vec(std::vector<double> values);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(int i, int j);
    double at(int i, int j) const;

    void fill(double v);
    bool same_shape(const Array& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    bool operator==(const Array& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

std::string shape_string(const std::vector<int>& shape);

/// Throws std::runtime_error naming `what` if any value is NaN or Inf.
void require_finite(const Array& a, const std::string& what);
void require_shape(const Array& a, const std::vector<int>& shape, const std::string& what);

}  // namespace simulmt
