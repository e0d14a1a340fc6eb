#include "fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace pnpsde::detail {

namespace {

// FFTW planning is not thread-safe; execution on a private plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

ComplexGrid transform(const ComplexGrid& in, std::size_t height, std::size_t width, int sign) {
    ComplexGrid out(in.size());
    ComplexGrid work(in);
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_2d(static_cast<int>(height), static_cast<int>(width),
                                reinterpret_cast<fftw_complex*>(work.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

}  // namespace

ComplexGrid fft2(const ComplexGrid& in, std::size_t height, std::size_t width) {
    return transform(in, height, width, FFTW_FORWARD);
}

ComplexGrid ifft2(const ComplexGrid& in, std::size_t height, std::size_t width) {
    ComplexGrid out = transform(in, height, width, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(height * width);
    for (auto& c : out) c *= scale;
    return out;
}

}  // namespace pnpsde::detail
