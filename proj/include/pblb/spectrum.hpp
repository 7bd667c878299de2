#pragma once

#include <algorithm>
#include <vector>

#include "pblb/lattice.hpp"

namespace pblb {

/// Sorted Stokes eigenvalues |k|^2 of the retained lattice, with multiplicity:
/// every nonzero retained wavevector contributes two divergence-free
/// polarizations.
inline std::vector<double> stokes_spectrum(const WaveLattice& lat, std::size_t count = 0) {
    std::vector<double> ev;
    const int lim = lat.dealias_limit();
    for (int kx = -lim; kx <= lim; ++kx)
        for (int ky = -lim; ky <= lim; ++ky)
            for (int kz = -lim; kz <= lim; ++kz) {
                if (kx == 0 && ky == 0 && kz == 0) continue;
                const double k2 = double(kx) * kx + double(ky) * ky + double(kz) * kz;
                ev.push_back(k2);
                ev.push_back(k2);
            }
    std::sort(ev.begin(), ev.end());
    if (count > 0 && ev.size() > count) ev.resize(count);
    return ev;
}

/// Weyl-type lattice-counting constant: min over n of (sum of n smallest
/// eigenvalues)/n^2, the torus analogue of the pi*n^2/|Omega| lower bound.
inline double weyl_lower_constant(const WaveLattice& lat) {
    const std::vector<double> ev = stokes_spectrum(lat);
    double best = 1e300, partial = 0.0;
    for (std::size_t n = 1; n <= ev.size(); ++n) {
        partial += ev[n - 1];
        best = std::min(best, partial / double(n * n));
    }
    return best;
}

}  // namespace pblb
