#pragma once

#include <complex>
#include <cstddef>

// Minimal radix-2 complex FFT used by the circulant preconditioner. Sizes
// must be powers of two. Forward is unnormalized; inverse divides by the
// length, so inverse(forward(x)) == x up to roundoff.

namespace stablehomog {

bool is_power_of_two(std::size_t n);

void fft_inplace(std::complex<double>* a, std::size_t n, bool inverse);

// d-dimensional separable transform on a row-major array with equal side
// lengths (side^d elements, last axis fastest).
void fft_nd(std::complex<double>* a, std::size_t side, int d, bool inverse);

}  // namespace stablehomog
