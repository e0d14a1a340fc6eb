#pragma once

#include "pnpsde/image_grid.hpp"
#include "pnpsde/random_source.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace pnpsde {

enum class OperatorKind { identity, mask, convolution, downsample };

std::string_view to_string(OperatorKind kind) noexcept;

struct Shape {
    std::size_t height = 0;
    std::size_t width = 0;
    friend bool operator==(const Shape&, const Shape&) = default;
};

/// Linear measurement operator M with adjoint.
///
/// - identity:    Mx = x
/// - mask:        Mx = m .* x for a fixed binary mask m (input shape = mask shape)
/// - convolution: circular convolution with a small kernel centred at
///                (kh/2, kw/2); boundaries are periodic
/// - downsample:  mean over non-overlapping factor x factor blocks
class MeasurementOp {
public:
    static MeasurementOp identity();
    /// `mask` entries must be 0 or 1.
    static MeasurementOp mask(const ImageGrid& mask);
    /// Random mask keeping each pixel with probability `keep`.
    static MeasurementOp random_mask(std::size_t height, std::size_t width, double keep,
                                     RandomSource& rng);
    static MeasurementOp convolution(ImageGrid kernel);
    static MeasurementOp downsample(std::size_t factor);

    OperatorKind kind() const noexcept { return kind_; }
    const ImageGrid& mask_grid() const noexcept { return mask_; }
    const ImageGrid& kernel() const noexcept { return kernel_; }
    std::size_t factor() const noexcept { return factor_; }

    /// Output shape for an input of the given shape; throws DimensionError when
    /// the input is not admissible.
    Shape output_shape(Shape input) const;

    ImageGrid apply(const ImageGrid& x) const;
    ImageGrid adjoint(const ImageGrid& z) const;

private:
    explicit MeasurementOp(OperatorKind kind) : kind_(kind) {}

    OperatorKind kind_;
    ImageGrid mask_;
    ImageGrid kernel_;
    std::size_t factor_ = 1;
};

/// y = Mx + eps, eps ~ N(0, noiseSigma^2 I).
struct Observation {
    ImageGrid y;
    MeasurementOp op = MeasurementOp::identity();
    double noiseSigma = 0.0;
};

Observation degrade(const MeasurementOp& op, const ImageGrid& x, double sigma, RandomSource& rng);

/// argmin_x ||y - Mx||^2 / 2 + ||x - v||^2 / (2 lambda^2), solved in closed form
/// for every operator kind.
ImageGrid prox_fidelity(const Observation& obs, const ImageGrid& v, double lambda);

/// Back-projection used to seed the iteration: M^T y, except downsample which
/// replicates each measurement over its block.
ImageGrid initial_estimate(const Observation& obs);

/// Centred (2r+1)x(2r+1) Gaussian blur kernel normalised to unit sum.
ImageGrid gaussian_kernel(std::size_t radius, double stddev);
/// Centred (2r+1)x(2r+1) box kernel normalised to unit sum.
ImageGrid box_kernel(std::size_t radius);

}  // namespace pnpsde
