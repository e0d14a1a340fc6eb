#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace pnpsde::detail {

using ComplexGrid = std::vector<std::complex<double>>;

// Unnormalised 2-D DFT of a row-major height x width array (FFTW backend).
// The inverse transform is scaled by 1/(height*width).
ComplexGrid fft2(const ComplexGrid& in, std::size_t height, std::size_t width);
ComplexGrid ifft2(const ComplexGrid& in, std::size_t height, std::size_t width);

}  // namespace pnpsde::detail
