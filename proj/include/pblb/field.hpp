#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "pblb/lattice.hpp"

namespace pblb {

using cdouble = std::complex<double>;

/// Divergence-free, zero-mean velocity field stored as Fourier coefficients
/// uhat(k) for all lattice modes (full cube, component-major). Normalization
/// is unitary in the sense |u|^2 = sum_k |uhat(k)|^2, i.e. the physical field
/// is u(x) = (2pi)^{-3/2} sum_k uhat(k) e^{i k.x}.
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(const WaveLattice& lat)
        : lattice_(lat), c_(3 * lat.size(), cdouble(0.0, 0.0)) {}

    const WaveLattice& lattice() const { return lattice_; }
    bool empty() const { return c_.empty(); }

    cdouble& at(int comp, int ix, int iy, int iz) {
        return c_[comp * lattice_.size() + lattice_.flat(ix, iy, iz)];
    }
    const cdouble& at(int comp, int ix, int iy, int iz) const {
        return c_[comp * lattice_.size() + lattice_.flat(ix, iy, iz)];
    }
    cdouble* component(int comp) { return c_.data() + comp * lattice_.size(); }
    const cdouble* component(int comp) const { return c_.data() + comp * lattice_.size(); }

    std::vector<cdouble>& raw() { return c_; }
    const std::vector<cdouble>& raw() const { return c_; }

    SpectralField& operator+=(const SpectralField& o) {
        require_same_lattice(lattice_, o.lattice_);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o) {
        require_same_lattice(lattice_, o.lattice_);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    SpectralField& operator*=(double s) {
        for (auto& v : c_) v *= s;
        return *this;
    }
    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

    void axpy(double a, const SpectralField& x) {
        require_same_lattice(lattice_, x.lattice_);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += a * x.c_[i];
    }

    /// Visit every mode: fn(comp, flat_index, kx, ky, kz).
    template <typename Fn>
    void for_each_mode(Fn&& fn) const {
        const int n = lattice_.n;
        for (int ix = 0; ix < n; ++ix) {
            const int kx = lattice_.wavenumber(ix);
            for (int iy = 0; iy < n; ++iy) {
                const int ky = lattice_.wavenumber(iy);
                for (int iz = 0; iz < n; ++iz) {
                    const int kz = lattice_.wavenumber(iz);
                    fn(lattice_.flat(ix, iy, iz), kx, ky, kz);
                }
            }
        }
    }

private:
    WaveLattice lattice_;
    std::vector<cdouble> c_;
};

/// uhat(-k) <- conj pairing enforced exactly: both members of each pair are
/// replaced by (uhat(k) + conj(uhat(-k)))/2. Self-paired modes become real.
inline void hermitian_symmetrize(SpectralField& u) {
    const WaveLattice& lat = u.lattice();
    const int n = lat.n;
    for (int comp = 0; comp < 3; ++comp) {
        cdouble* a = u.component(comp);
        for (int ix = 0; ix < n; ++ix) {
            const int jx = (n - ix) % n;
            for (int iy = 0; iy < n; ++iy) {
                const int jy = (n - iy) % n;
                for (int iz = 0; iz < n; ++iz) {
                    const int jz = (n - iz) % n;
                    const std::size_t p = lat.flat(ix, iy, iz);
                    const std::size_t q = lat.flat(jx, jy, jz);
                    if (q < p) continue;
                    const cdouble avg = 0.5 * (a[p] + std::conj(a[q]));
                    a[p] = avg;
                    a[q] = std::conj(avg);
                }
            }
        }
    }
}

/// Helmholtz-Leray projection: uhat <- uhat - k (k.uhat)/|k|^2, zero mean.
/// Idempotent; annihilates gradients; contraction in the l2 norm.
inline SpectralField leray_project(SpectralField raw) {
    SpectralField& u = raw;
    std::array<cdouble*, 3> a = {u.component(0), u.component(1), u.component(2)};
    u.for_each_mode([&](std::size_t i, int kx, int ky, int kz) {
        const double k2 = double(kx) * kx + double(ky) * ky + double(kz) * kz;
        if (k2 == 0.0 || u.lattice().has_nyquist(kx, ky, kz)) {
            a[0][i] = a[1][i] = a[2][i] = 0.0;
            return;
        }
        const cdouble kdot = (double(kx) * a[0][i] + double(ky) * a[1][i] + double(kz) * a[2][i]) / k2;
        a[0][i] -= double(kx) * kdot;
        a[1][i] -= double(ky) * kdot;
        a[2][i] -= double(kz) * kdot;
    });
    return raw;
}

/// Fractional Stokes power: uhat(k) *= |k|^{2s}. A^0 = identity.
inline SpectralField stokes_apply(const SpectralField& u, double s) {
    if (s < -1.0 || s > 2.0) throw std::invalid_argument("stokes_apply: s must be in [-1,2]");
    SpectralField out = u;
    std::array<cdouble*, 3> a = {out.component(0), out.component(1), out.component(2)};
    out.for_each_mode([&](std::size_t i, int kx, int ky, int kz) {
        const double k2 = double(kx) * kx + double(ky) * ky + double(kz) * kz;
        double f;
        if (s == 0.0) f = 1.0;
        else if (k2 == 0.0) f = 0.0;
        else if (s == 1.0) f = k2;
        else f = std::pow(k2, s);
        a[0][i] *= f;
        a[1][i] *= f;
        a[2][i] *= f;
    });
    return out;
}

/// Zero all modes outside the dealias band.
inline void apply_dealias_mask(SpectralField& u) {
    std::array<cdouble*, 3> a = {u.component(0), u.component(1), u.component(2)};
    u.for_each_mode([&](std::size_t i, int kx, int ky, int kz) {
        if (!u.lattice().retained(kx, ky, kz)) a[0][i] = a[1][i] = a[2][i] = 0.0;
    });
}

/// H inner product (u,v) = Re sum_k uhat(k).conj(vhat(k)).
inline double inner_h(const SpectralField& u, const SpectralField& v) {
    require_same_lattice(u.lattice(), v.lattice());
    double s = 0.0;
    const auto& a = u.raw();
    const auto& b = v.raw();
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    return s;
}

/// V inner product ((u,v)) = sum_k |k|^2 uhat.conj(vhat) (real part).
inline double inner_v(const SpectralField& u, const SpectralField& v) {
    require_same_lattice(u.lattice(), v.lattice());
    double s = 0.0;
    for (int comp = 0; comp < 3; ++comp) {
        const cdouble* a = u.component(comp);
        const cdouble* b = v.component(comp);
        u.for_each_mode([&](std::size_t i, int kx, int ky, int kz) {
            const double k2 = double(kx) * kx + double(ky) * ky + double(kz) * kz;
            s += k2 * (a[i].real() * b[i].real() + a[i].imag() * b[i].imag());
        });
    }
    return s;
}

/// |A^{s/2} u| = (sum_k |k|^{2s} |uhat|^2)^{1/2}. s=0 is the H norm,
/// s=1 the V seminorm, s=-1 the V' norm of a zero-mean field.
inline double h_frac_norm(const SpectralField& u, double s) {
    double acc = 0.0;
    for (int comp = 0; comp < 3; ++comp) {
        const cdouble* a = u.component(comp);
        u.for_each_mode([&](std::size_t i, int kx, int ky, int kz) {
            const double k2 = double(kx) * kx + double(ky) * ky + double(kz) * kz;
            const double m2 = std::norm(a[i]);
            if (m2 == 0.0) return;
            double f;
            if (s == 0.0) f = 1.0;
            else if (k2 == 0.0) return;  // zero-mean fields carry nothing at k=0
            else if (s == 1.0) f = k2;
            else if (s == -1.0) f = 1.0 / k2;
            else f = std::pow(k2, s);
            acc += f * m2;
        });
    }
    return std::sqrt(acc);
}

inline double norm_l2(const SpectralField& u) { return h_frac_norm(u, 0.0); }
inline double norm_h1(const SpectralField& u) { return h_frac_norm(u, 1.0); }
inline double norm_v_dual(const SpectralField& u) { return h_frac_norm(u, -1.0); }
inline double norm_frac14(const SpectralField& u) { return h_frac_norm(u, 0.5); }

struct InvariantReport {
    double mean_mode = 0.0;        // |uhat(0)|
    double max_divergence = 0.0;   // max |k.uhat| / scale
    double max_asymmetry = 0.0;    // max |uhat(k) - conj(uhat(-k))| / scale
    bool ok(double tol = 1e-12) const {
        return mean_mode <= tol && max_divergence <= tol && max_asymmetry <= tol;
    }
};

/// Structural invariants, reported relative to the field's max amplitude.
inline InvariantReport check_invariants(const SpectralField& u) {
    InvariantReport rep;
    double scale = 0.0;
    for (const auto& v : u.raw()) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return rep;
    const WaveLattice& lat = u.lattice();
    const int n = lat.n;
    std::array<const cdouble*, 3> a = {u.component(0), u.component(1), u.component(2)};
    rep.mean_mode = std::hypot(std::hypot(std::abs(a[0][0]), std::abs(a[1][0])), std::abs(a[2][0])) / scale;
    for (int ix = 0; ix < n; ++ix) {
        const int kx = lat.wavenumber(ix), jx = (n - ix) % n;
        for (int iy = 0; iy < n; ++iy) {
            const int ky = lat.wavenumber(iy), jy = (n - iy) % n;
            for (int iz = 0; iz < n; ++iz) {
                const int kz = lat.wavenumber(iz), jz = (n - iz) % n;
                const std::size_t p = lat.flat(ix, iy, iz);
                const std::size_t q = lat.flat(jx, jy, jz);
                const cdouble div = double(kx) * a[0][p] + double(ky) * a[1][p] + double(kz) * a[2][p];
                const double kmag = std::sqrt(double(kx) * kx + double(ky) * ky + double(kz) * kz);
                if (kmag > 0.0) rep.max_divergence = std::max(rep.max_divergence, std::abs(div) / (kmag * scale));
                for (int c = 0; c < 3; ++c)
                    rep.max_asymmetry = std::max(rep.max_asymmetry, std::abs(a[c][p] - std::conj(a[c][q])) / scale);
            }
        }
    }
    return rep;
}

inline void assert_invariants(const SpectralField& u, double tol = 1e-12) {
    if (!check_invariants(u).ok(tol)) throw std::runtime_error("SpectralField invariant violation");
}

}  // namespace pblb
