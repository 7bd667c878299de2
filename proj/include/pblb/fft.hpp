#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace pblb::fft {

using cdouble = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Iterative radix-2 Cooley-Tukey, unnormalized. inverse=true uses e^{+i...}.
inline void transform(cdouble* a, std::size_t n, bool inverse) {
    if (!is_power_of_two(n)) throw std::invalid_argument("fft: length must be a power of two");
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double pi = 3.14159265358979323846;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const cdouble wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cdouble w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                cdouble u = a[i + j];
                cdouble v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

/// 3D transform of an n^3 cube stored row-major with index (ix*n + iy)*n + iz.
inline void transform3d(cdouble* a, std::size_t n, bool inverse) {
    std::vector<cdouble> scratch(n);
    const std::size_t n2 = n * n;
    // z lines are contiguous
    for (std::size_t ix = 0; ix < n; ++ix)
        for (std::size_t iy = 0; iy < n; ++iy) transform(a + (ix * n + iy) * n, n, inverse);
    // y lines, stride n
    for (std::size_t ix = 0; ix < n; ++ix)
        for (std::size_t iz = 0; iz < n; ++iz) {
            cdouble* base = a + ix * n2 + iz;
            for (std::size_t iy = 0; iy < n; ++iy) scratch[iy] = base[iy * n];
            transform(scratch.data(), n, inverse);
            for (std::size_t iy = 0; iy < n; ++iy) base[iy * n] = scratch[iy];
        }
    // x lines, stride n^2
    for (std::size_t iy = 0; iy < n; ++iy)
        for (std::size_t iz = 0; iz < n; ++iz) {
            cdouble* base = a + iy * n + iz;
            for (std::size_t ix = 0; ix < n; ++ix) scratch[ix] = base[ix * n2];
            transform(scratch.data(), n, inverse);
            for (std::size_t ix = 0; ix < n; ++ix) base[ix * n2] = scratch[ix];
        }
}

}  // namespace pblb::fft
