#pragma once

#include <complex>
#include <span>
#include <vector>

namespace wtv::detail {

/// In-place unnormalized multidimensional DFT over row-major data:
/// out[j] = sum_k in[k] * exp(sign * 2*pi*i * <j, k/n>), sign = +1 or -1.
void dft_inplace(std::vector<std::complex<double>>& data, std::span<const std::size_t> shape, int sign);

}  // namespace wtv::detail
