#include "wtv/detail/fft.hpp"

#include <fftw3.h>

#include <mutex>

#include "wtv/errors.hpp"

namespace wtv::detail {

namespace {
// The FFTW planner is not re-entrant; execution of a finished plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

void dft_inplace(std::vector<std::complex<double>>& data, std::span<const std::size_t> shape, int sign) {
    std::vector<int> dims(shape.begin(), shape.end());
    std::size_t total = 1;
    for (auto s : shape) total *= s;
    if (total != data.size()) fail_precondition("dft: data size does not match shape");

    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan = nullptr;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), buf, buf,
                             sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    if (plan == nullptr) throw NumericalError("dft: FFTW could not create a plan");
    fftw_execute(plan);
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
}

}  // namespace wtv::detail
