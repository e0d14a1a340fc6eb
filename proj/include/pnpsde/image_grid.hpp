#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pnpsde {

/// Two-dimensional real-valued grayscale signal, row-major.
///
/// Values are nominally in [0, 1] but are not clamped; iterates of the solver
/// may leave that range. Construction from caller-supplied data rejects
/// non-finite entries.
class ImageGrid {
public:
    ImageGrid() = default;
    ImageGrid(std::size_t height, std::size_t width, double fill = 0.0);
    ImageGrid(std::size_t height, std::size_t width, std::vector<double> data);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double operator()(std::size_t row, std::size_t col) const noexcept {
        return data_[row * width_ + col];
    }
    double& operator()(std::size_t row, std::size_t col) noexcept {
        return data_[row * width_ + col];
    }
    double operator[](std::size_t i) const noexcept { return data_[i]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }

    std::span<const double> values() const noexcept { return data_; }
    std::span<double> values() noexcept { return data_; }

    bool same_shape(const ImageGrid& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    ImageGrid& operator+=(const ImageGrid& rhs);
    ImageGrid& operator-=(const ImageGrid& rhs);
    ImageGrid& operator*=(double s) noexcept;

    friend ImageGrid operator+(ImageGrid lhs, const ImageGrid& rhs) { return lhs += rhs; }
    friend ImageGrid operator-(ImageGrid lhs, const ImageGrid& rhs) { return lhs -= rhs; }
    friend ImageGrid operator*(ImageGrid lhs, double s) noexcept { return lhs *= s; }
    friend ImageGrid operator*(double s, ImageGrid rhs) noexcept { return rhs *= s; }

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

    double l2_norm() const noexcept;
    double sup_norm() const noexcept;
    double sum() const noexcept;
    double mean() const noexcept;
    bool all_finite() const noexcept;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> data_;
};

double dot(const ImageGrid& a, const ImageGrid& b);

/// Throws DimensionError unless a and b have identical shape.
void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* context);

}  // namespace pnpsde
