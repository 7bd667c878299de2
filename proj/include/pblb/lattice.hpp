#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace pblb {

/// Periodic Fourier lattice on the torus [0,2pi]^3. Wavevectors are integer
/// triples k with -N/2 < k_i <= N/2; the Stokes eigenvalue of mode k is |k|^2,
/// so lambda_1 = 1.
struct WaveLattice {
    int n = 0;                     // modes per axis, even power of two
    double dealias_cut = 2.0 / 3.0;

    WaveLattice() = default;
    explicit WaveLattice(int n_per_axis, double cut = 2.0 / 3.0)
        : n(n_per_axis), dealias_cut(cut) {
        if (n < 4 || n % 2 != 0 || (n & (n - 1)) != 0)
            throw std::invalid_argument("WaveLattice: N must be an even power of two >= 4");
        if (!(dealias_cut > 0.0 && dealias_cut <= 1.0))
            throw std::invalid_argument("WaveLattice: dealias_cut must be in (0,1]");
    }

    std::size_t size() const { return static_cast<std::size_t>(n) * n * n; }

    /// FFT index -> signed wavenumber.
    int wavenumber(int idx) const { return idx <= n / 2 ? idx : idx - n; }
    /// Signed wavenumber -> FFT index.
    int fft_index(int k) const { return k >= 0 ? k : k + n; }

    std::size_t flat(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(ix) * n + iy) * n + iz;
    }

    /// Largest |k_i| kept by the dealias mask. Chosen as floor(cut*N/2) so
    /// that products of two retained modes never alias back into the band.
    /// The Nyquist plane |k_i| = N/2 is always excluded: -N/2 aliases to +N/2,
    /// so those modes cannot carry a consistent Hermitian pairing.
    int dealias_limit() const {
        const int lim = static_cast<int>(std::floor(dealias_cut * (n / 2) + 1e-9));
        return std::min(lim, n / 2 - 1);
    }

    bool has_nyquist(int kx, int ky, int kz) const {
        const int ny = n / 2;
        return kx == ny || ky == ny || kz == ny;
    }

    bool retained(int kx, int ky, int kz) const {
        const int lim = dealias_limit();
        return std::abs(kx) <= lim && std::abs(ky) <= lim && std::abs(kz) <= lim;
    }

    /// Largest Stokes eigenvalue among retained modes.
    double lambda_max() const {
        const double lim = dealias_limit();
        return 3.0 * lim * lim;
    }

    bool operator==(const WaveLattice& o) const {
        return n == o.n && dealias_cut == o.dealias_cut;
    }
    bool operator!=(const WaveLattice& o) const { return !(*this == o); }
};

inline void require_same_lattice(const WaveLattice& a, const WaveLattice& b) {
    if (a != b) throw std::invalid_argument("lattice mismatch");
}

}  // namespace pblb
