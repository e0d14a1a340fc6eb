#include "pnpsde/image_grid.hpp"

#include "pnpsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pnpsde {

ImageGrid::ImageGrid(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(height * width, fill) {
    if (height == 0 || width == 0) {
        throw DimensionError("image dimensions must be positive");
    }
    if (!std::isfinite(fill)) {
        throw NumericalError("image fill value is not finite");
    }
}

ImageGrid::ImageGrid(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
    if (height == 0 || width == 0) {
        throw DimensionError("image dimensions must be positive");
    }
    if (data_.size() != height * width) {
        throw DimensionError("image data length " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(height) + "x" +
                             std::to_string(width));
    }
    if (!all_finite()) {
        throw NumericalError("image data contains non-finite values");
    }
}

ImageGrid& ImageGrid::operator+=(const ImageGrid& rhs) {
    require_same_shape(*this, rhs, "image addition");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
    return *this;
}

ImageGrid& ImageGrid::operator-=(const ImageGrid& rhs) {
    require_same_shape(*this, rhs, "image subtraction");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
    return *this;
}

ImageGrid& ImageGrid::operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
}

double ImageGrid::l2_norm() const noexcept {
    double acc = 0.0;
    for (double v : data_) acc += v * v;
    return std::sqrt(acc);
}

double ImageGrid::sup_norm() const noexcept {
    double m = 0.0;
    for (double v : data_) {
        if (std::isnan(v)) return v;
        m = std::max(m, std::abs(v));
    }
    return m;
}

double ImageGrid::sum() const noexcept {
    double acc = 0.0;
    for (double v : data_) acc += v;
    return acc;
}

double ImageGrid::mean() const noexcept {
    return data_.empty() ? 0.0 : sum() / static_cast<double>(data_.size());
}

bool ImageGrid::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double dot(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "dot product");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* context) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(context) + ": shape " + std::to_string(a.height()) +
                             "x" + std::to_string(a.width()) + " vs " +
                             std::to_string(b.height()) + "x" + std::to_string(b.width()));
    }
}

}  // namespace pnpsde
