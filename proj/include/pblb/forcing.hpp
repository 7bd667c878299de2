#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pblb/field.hpp"

namespace pblb {

enum class ForcingNorm { v_dual, h };

/// Catalog of closed-form forcings f(x,t). Restricting to this catalog keeps
/// the tempered integrals int_{-inf}^t e^{mu s} ||f(s)||^2 ds exact (or an
/// explicit documented bound), so absorbing-radius checks are sharp.
class ForcingSpec {
public:
    enum class Kind { zero, steady, tempered_exp, quasi_periodic, eps_scaled };

    static ForcingSpec zero() { return ForcingSpec(Kind::zero); }

    static ForcingSpec steady(SpectralField g) {
        ForcingSpec f(Kind::steady);
        f.g_ = std::move(g);
        return f;
    }

    /// f(t) = e^{sigma t} g, sigma > 0 (tempered in the past).
    static ForcingSpec tempered_exp(double sigma, SpectralField g) {
        if (!(sigma > 0.0)) throw std::invalid_argument("tempered_exp: sigma must be > 0");
        ForcingSpec f(Kind::tempered_exp);
        f.sigma_ = sigma;
        f.g_ = std::move(g);
        return f;
    }

    /// f(t) = sum_i cos(omega_i t) g_i.
    static ForcingSpec quasi_periodic(std::vector<double> omegas, std::vector<SpectralField> gs) {
        if (omegas.empty() || omegas.size() != gs.size())
            throw std::invalid_argument("quasi_periodic: omega/g lists must be nonempty and equal length");
        ForcingSpec f(Kind::quasi_periodic);
        f.omegas_ = std::move(omegas);
        f.gs_ = std::move(gs);
        return f;
    }

    /// f = eps * inner, the perturbation family of the semicontinuity runs.
    static ForcingSpec eps_scaled(double eps, ForcingSpec inner) {
        ForcingSpec f(Kind::eps_scaled);
        f.eps_ = eps;
        f.inner_ = std::make_shared<ForcingSpec>(std::move(inner));
        return f;
    }

    Kind kind() const { return kind_; }
    bool is_zero() const {
        if (kind_ == Kind::zero) return true;
        if (kind_ == Kind::eps_scaled) return eps_ == 0.0 || inner_->is_zero();
        return false;
    }
    double eps() const { return eps_; }
    double sigma() const { return sigma_; }
    const ForcingSpec& inner() const { return *inner_; }
    const SpectralField& amplitude_field() const { return g_; }

    SpectralField eval(double t, const WaveLattice& lat) const {
        switch (kind_) {
            case Kind::zero: return SpectralField(lat);
            case Kind::steady: return g_;
            case Kind::tempered_exp: return std::exp(sigma_ * t) * SpectralField(g_);
            case Kind::quasi_periodic: {
                SpectralField f(lat);
                for (std::size_t i = 0; i < gs_.size(); ++i) f.axpy(std::cos(omegas_[i] * t), gs_[i]);
                return f;
            }
            case Kind::eps_scaled: {
                SpectralField f = inner_->eval(t, lat);
                f *= eps_;
                return f;
            }
        }
        return SpectralField(lat);
    }

    /// ||f(t)||^2 in the requested norm, exact at the given instant.
    double norm_sq(double t, ForcingNorm which, const WaveLattice& lat) const {
        if (kind_ == Kind::zero) return 0.0;
        if (kind_ == Kind::steady) return base_norm_sq(g_, which);
        if (kind_ == Kind::tempered_exp) return std::exp(2.0 * sigma_ * t) * base_norm_sq(g_, which);
        if (kind_ == Kind::eps_scaled) return eps_ * eps_ * inner_->norm_sq(t, which, lat);
        const SpectralField f = eval(t, lat);
        const double n = (which == ForcingNorm::v_dual) ? norm_v_dual(f) : norm_l2(f);
        return n * n;
    }

    /// sup_{s <= t} ||f(s)||^2. For quasi_periodic this is the triangle-
    /// inequality bound (sum_i ||g_i||)^2.
    double sup_norm_sq(double t, ForcingNorm which) const {
        switch (kind_) {
            case Kind::zero: return 0.0;
            case Kind::steady: return base_norm_sq(g_, which);
            case Kind::tempered_exp: return std::exp(2.0 * sigma_ * t) * base_norm_sq(g_, which);
            case Kind::quasi_periodic: {
                double s = 0.0;
                for (const auto& g : gs_) s += std::sqrt(base_norm_sq(g, which));
                return s * s;
            }
            case Kind::eps_scaled: return eps_ * eps_ * inner_->sup_norm_sq(t, which);
        }
        return 0.0;
    }

    /// int_{-inf}^t e^{mu s} ||f(s)||^2 ds. Exact for zero/steady/tempered_exp;
    /// for quasi_periodic the bounded-average form e^{mu t} * sup ||f||^2 / mu.
    double tempered_integral(double mu, double t, ForcingNorm which) const {
        if (!(mu > 0.0)) throw std::invalid_argument("tempered_integral: mu must be > 0");
        switch (kind_) {
            case Kind::zero: return 0.0;
            case Kind::steady: return base_norm_sq(g_, which) * std::exp(mu * t) / mu;
            case Kind::tempered_exp:
                return base_norm_sq(g_, which) * std::exp((mu + 2.0 * sigma_) * t) / (mu + 2.0 * sigma_);
            case Kind::quasi_periodic: return sup_norm_sq(t, which) * std::exp(mu * t) / mu;
            case Kind::eps_scaled: return eps_ * eps_ * inner_->tempered_integral(mu, t, which);
        }
        return 0.0;
    }

    /// e^{-mu t} * tempered_integral = int_{-inf}^t e^{-mu(t-s)} ||f||^2 ds,
    /// evaluated without the overflow-prone intermediate e^{mu t}.
    double discounted_integral(double mu, double t, ForcingNorm which) const {
        if (!(mu > 0.0)) throw std::invalid_argument("discounted_integral: mu must be > 0");
        switch (kind_) {
            case Kind::zero: return 0.0;
            case Kind::steady: return base_norm_sq(g_, which) / mu;
            case Kind::tempered_exp:
                return base_norm_sq(g_, which) * std::exp(2.0 * sigma_ * t) / (mu + 2.0 * sigma_);
            case Kind::quasi_periodic: return sup_norm_sq(t, which) / mu;
            case Kind::eps_scaled: return eps_ * eps_ * inner_->discounted_integral(mu, t, which);
        }
        return 0.0;
    }

    /// (1/W) int_{t-W}^t ||f(s)||^2 ds. Closed form except quasi_periodic,
    /// which uses composite Simpson on a fixed 512-panel grid.
    double window_average_sq(double t, double window, ForcingNorm which, const WaveLattice& lat) const {
        if (!(window > 0.0)) throw std::invalid_argument("window_average_sq: window must be > 0");
        switch (kind_) {
            case Kind::zero: return 0.0;
            case Kind::steady: return base_norm_sq(g_, which);
            case Kind::tempered_exp: {
                const double b = base_norm_sq(g_, which);
                return b * (std::exp(2.0 * sigma_ * t) - std::exp(2.0 * sigma_ * (t - window))) /
                       (2.0 * sigma_ * window);
            }
            case Kind::quasi_periodic: {
                const int panels = 512;
                const double h = window / panels;
                double acc = norm_sq(t - window, which, lat) + norm_sq(t, which, lat);
                for (int i = 1; i < panels; ++i)
                    acc += (i % 2 == 1 ? 4.0 : 2.0) * norm_sq(t - window + i * h, which, lat);
                return acc * h / 3.0 / window;
            }
            case Kind::eps_scaled:
                return eps_ * eps_ * inner_->window_average_sq(t, window, which, lat);
        }
        return 0.0;
    }

private:
    explicit ForcingSpec(Kind k) : kind_(k) {}

    static double base_norm_sq(const SpectralField& g, ForcingNorm which) {
        const double n = (which == ForcingNorm::v_dual) ? norm_v_dual(g) : norm_l2(g);
        return n * n;
    }

    Kind kind_;
    SpectralField g_;
    double sigma_ = 0.0;
    std::vector<double> omegas_;
    std::vector<SpectralField> gs_;
    double eps_ = 0.0;
    std::shared_ptr<ForcingSpec> inner_;
};

}  // namespace pblb
