#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pblb/field.hpp"

namespace pblb {

/// Binary snapshot format: magic "PBLB", u32 version, u32 lattice size N,
/// then 3*N^3 complex coefficients as little-endian f64 (re, im) pairs in
/// component-major, row-major mode order.
inline constexpr std::uint32_t kSnapshotVersion = 1;

namespace detail {
inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("snapshot: truncated header");
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}
inline void put_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}
inline double get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw std::runtime_error("snapshot: truncated payload");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= std::uint64_t(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}
}  // namespace detail

inline void save_snapshot(const SpectralField& u, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("snapshot: cannot open " + path + " for writing");
    os.write("PBLB", 4);
    detail::put_u32(os, kSnapshotVersion);
    detail::put_u32(os, std::uint32_t(u.lattice().n));
    for (const cdouble& c : u.raw()) {
        detail::put_f64(os, c.real());
        detail::put_f64(os, c.imag());
    }
    if (!os) throw std::runtime_error("snapshot: write failed for " + path);
}

inline SpectralField load_snapshot(const std::string& path, double dealias_cut = 2.0 / 3.0) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("snapshot: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "PBLB", 4) != 0)
        throw std::runtime_error("snapshot: bad magic in " + path);
    const std::uint32_t version = detail::get_u32(is);
    if (version != kSnapshotVersion)
        throw std::runtime_error("snapshot: unsupported version in " + path);
    const std::uint32_t n = detail::get_u32(is);
    if (n < 2 || n > 1024) throw std::runtime_error("snapshot: implausible lattice size");
    WaveLattice lat(int(n), dealias_cut);
    SpectralField u(lat);
    for (cdouble& c : u.raw()) {
        const double re = detail::get_f64(is);
        const double im = detail::get_f64(is);
        c = cdouble(re, im);
    }
    is.peek();
    if (!is.eof()) throw std::runtime_error("snapshot: trailing bytes in " + path);
    return u;
}

}  // namespace pblb
