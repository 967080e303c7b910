#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dae {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles with an optional gradient accumulator.
///
/// Scalars have shape {1}; vectors {n}; matrices {rows, cols}. The gradient
/// buffer is allocated on first use and always matches the data length.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor filled(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                         bool requires_grad = false);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t rank() const noexcept { return shape_.size(); }

    /// Leading extent; 1 for scalars.
    std::size_t rows() const noexcept { return shape_.empty() ? 1 : shape_.front(); }
    /// Trailing extent for matrices, 1 otherwise.
    std::size_t cols() const noexcept { return shape_.size() == 2 ? shape_[1] : 1; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& values() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Scalar value; throws unless size() == 1.
    double item() const;

    bool requires_grad() const noexcept { return requires_grad_; }
    void set_requires_grad(bool flag) noexcept { requires_grad_ = flag; }

    bool has_grad() const noexcept { return grad_.has_value(); }
    std::span<const double> grad() const;
    /// Gradient buffer, allocated (zero-filled) on first access.
    std::vector<double>& grad_buffer();
    void zero_grad();

    bool all_finite() const noexcept;

private:
    Shape shape_{1};
    std::vector<double> data_ = std::vector<double>(1, 0.0);
    bool requires_grad_ = false;
    std::optional<std::vector<double>> grad_;
};

}  // namespace dae
