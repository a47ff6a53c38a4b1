#include "stablehomog/fft.hpp"

#include <cmath>
#include <vector>

#include "stablehomog/errors.hpp"

namespace stablehomog {

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_inplace(std::complex<double>* a, std::size_t n, bool inverse) {
    if (!is_power_of_two(n)) throw domain_error("fft: length must be a power of two");
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double pi = 4.0 * std::atan(1.0);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                std::complex<double> u = a[i + j];
                std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        double inv = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) a[i] *= inv;
    }
}

void fft_nd(std::complex<double>* a, std::size_t side, int d, bool inverse) {
    if (d < 1 || d > 3) throw domain_error("fft_nd: d must be 1, 2 or 3");
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= side;
    std::vector<std::complex<double>> line(side);
    // Transform along each axis; stride pattern derived from row-major layout.
    for (int axis = d - 1; axis >= 0; --axis) {
        std::size_t stride = 1;
        for (int i = axis + 1; i < d; ++i) stride *= side;
        std::size_t block = stride * side;
        for (std::size_t base = 0; base < total; base += block) {
            for (std::size_t off = 0; off < stride; ++off) {
                if (stride == 1) {
                    fft_inplace(a + base, side, inverse);
                    continue;
                }
                for (std::size_t i = 0; i < side; ++i)
                    line[i] = a[base + off + i * stride];
                fft_inplace(line.data(), side, inverse);
                for (std::size_t i = 0; i < side; ++i)
                    a[base + off + i * stride] = line[i];
            }
        }
    }
}

}  // namespace stablehomog
