#pragma once

// Dimensionless medium parameters, input pulse, simulation grid.
//
// Units: time in units of the input pulse duration T, depth in units of the
// medium length L. Every closed form in the library is written in terms of
//   c1 = (alpha L / 2) * gamma T * (Omega0/Delta)^2
// (the kernel coupling) plus the detuning phase and the control envelope.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zeropi/special_functions.hpp"

namespace zeropi {

using cplx = std::complex<double>;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MediumConfig {
    double gamma_T = 7.2;              // gamma * T
    double delta_over_gamma = 20.0;    // Delta / gamma
    double omega0_over_delta = 0.1;    // Omega0 / Delta (cw reference level)
    double alpha_L = 3.5;              // resonant optical depth
    double raman_detuning_T = 0.0;     // delta_R * T, any sign
    double ct_over_L = 2000.0;         // pulse length over medium length
    double k_L = 0.0;                  // linear absorption depth (oracle only)
    double gamma0_T = 0.0;             // Raman coherence damping (oracle only)

    /// Throws ConfigError if any field is non-finite or a non-negative field is < 0.
    void validate() const {
        auto check = [](double v, const char* name, bool signed_ok) {
            if (!std::isfinite(v)) throw ConfigError(std::string(name) + " must be finite");
            if (!signed_ok && v < 0.0) throw ConfigError(std::string(name) + " must be >= 0");
        };
        check(gamma_T, "gamma_T", false);
        check(delta_over_gamma, "delta_over_gamma", false);
        check(omega0_over_delta, "omega0_over_delta", false);
        check(alpha_L, "alpha_L", false);
        check(raman_detuning_T, "raman_detuning_T", true);
        check(ct_over_L, "ct_over_L", false);
        check(k_L, "k_L", false);
        check(gamma0_T, "gamma0_T", false);
    }
};

struct DerivedCouplings {
    double c1 = 0.0;            // kernel coupling (alpha L/2) gamma T (Omega0/Delta)^2
    double gamma_pump_T = 0.0;  // optical pumping Gamma T = (gamma T/2)(Omega0/Delta)^2
    double alpha_L = 0.0;
    double stark_T = 0.0;       // |Omega0|^2/Delta * T
};

inline DerivedCouplings derive_couplings(const MediumConfig& cfg) {
    cfg.validate();
    const double r2 = cfg.omega0_over_delta * cfg.omega0_over_delta;
    DerivedCouplings d;
    d.c1 = 0.5 * cfg.alpha_L * cfg.gamma_T * r2;
    d.gamma_pump_T = 0.5 * cfg.gamma_T * r2;
    d.alpha_L = cfg.alpha_L;
    d.stark_T = cfg.gamma_T * cfg.delta_over_gamma * r2;
    return d;
}

/// alpha L that produces a requested coupling c1 at fixed gamma T and Omega0/Delta.
inline double alpha_L_for_coupling(double c1, double gamma_T, double omega0_over_delta) {
    const double denom = 0.5 * gamma_T * omega0_over_delta * omega0_over_delta;
    if (!(denom > 0.0)) throw ConfigError("alpha_L_for_coupling: zero control or gamma");
    return c1 / denom;
}

inline constexpr double kRegimeThreshold = 0.5;
inline constexpr double kRegimeAdvisory = 0.1;

struct RegimeOptions {
    double threshold = kRegimeThreshold;
    /// Set when the scenario assumes cw control at zero total two-photon detuning.
    bool cw_zero_detuning = false;
    /// Total two-photon detuning actually applied (delta_tot * T).
    double delta_tot_T = 0.0;
};

/// One message per violated "much less than" condition of the far-detuned,
/// lossless regime. Never throws.
inline std::vector<std::string> check_regime(const MediumConfig& cfg, const RegimeOptions& opt = {}) {
    std::vector<std::string> warnings;
    const double thr = opt.threshold;
    const double r2 = cfg.omega0_over_delta * cfg.omega0_over_delta;
    const double pump = 0.5 * cfg.gamma_T * r2;
    if (cfg.k_L >= thr) {
        warnings.push_back("absorption: k_L = " + std::to_string(cfg.k_L) + " is not << 1");
    }
    if (pump >= thr) {
        warnings.push_back("optical pumping: Gamma T = " + std::to_string(pump) + " is not << 1");
    }
    if (cfg.omega0_over_delta >= thr) {
        warnings.push_back("far-detuned: Omega0/Delta = " + std::to_string(cfg.omega0_over_delta) +
                           " is not << 1");
    }
    const double gamma_over_delta =
        cfg.delta_over_gamma > 0.0 ? 1.0 / cfg.delta_over_gamma : INFINITY;
    if (gamma_over_delta >= thr) {
        warnings.push_back("far-detuned: gamma/Delta = " + std::to_string(gamma_over_delta) +
                           " is not << 1");
    }
    if (opt.cw_zero_detuning && std::fabs(opt.delta_tot_T) >= 1.0) {
        warnings.push_back("two-photon detuning: |delta_tot T| = " +
                           std::to_string(std::fabs(opt.delta_tot_T)) + " is not << 1");
    }
    return warnings;
}

// ---------------------------------------------------------------------------

struct SimulationGrid {
    double tau_min = -5.0;
    double tau_max = 40.0;
    std::size_t n_tau = 4501;
    std::vector<double> z_fractions{1.0};

    void validate() const {
        if (!(tau_max > tau_min)) throw ConfigError("grid: tau_max must exceed tau_min");
        if (n_tau < 2) throw ConfigError("grid: n_tau must be >= 2");
        for (double z : z_fractions) {
            if (!(z >= 0.0 && z <= 1.0)) throw ConfigError("grid: z_fractions must lie in [0,1]");
        }
    }
    double step() const { return (tau_max - tau_min) / static_cast<double>(n_tau - 1); }
    double tau(std::size_t i) const {
        return i + 1 == n_tau ? tau_max : tau_min + step() * static_cast<double>(i);
    }
    std::vector<double> taus() const {
        std::vector<double> t(n_tau);
        for (std::size_t i = 0; i < n_tau; ++i) t[i] = tau(i);
        return t;
    }
};

/// Single-photon input profile f(tau), normalized to int |f|^2 dtau = 1.
struct InputPulse {
    enum class Shape { gaussian, custom };

    Shape shape = Shape::gaussian;
    double center = 0.0;
    double width = 1.0;            // f ~ exp(-((tau - center)/width)^2)
    std::vector<cplx> samples;     // custom shape, one sample per grid point

    static InputPulse gaussian(double center = 0.0, double width = 1.0) {
        InputPulse p;
        p.center = center;
        p.width = width;
        return p;
    }
    static InputPulse custom(std::vector<cplx> s) {
        InputPulse p;
        p.shape = Shape::custom;
        p.samples = std::move(s);
        return p;
    }

    /// Analytic value for the Gaussian shape (already normalized).
    double gaussian_value(double tau) const {
        const double amp = std::pow(2.0 / std::numbers::pi, 0.25) / std::sqrt(width);
        const double u = (tau - center) / width;
        return amp * std::exp(-u * u);
    }

    /// Samples on the grid. Custom samples are rescaled to unit norm.
    std::vector<cplx> sample(const SimulationGrid& grid) const {
        std::vector<cplx> f(grid.n_tau);
        if (shape == Shape::gaussian) {
            if (!(width > 0.0)) throw ConfigError("pulse: width must be > 0");
            for (std::size_t i = 0; i < grid.n_tau; ++i) f[i] = gaussian_value(grid.tau(i));
            return f;
        }
        if (samples.size() != grid.n_tau) {
            throw ConfigError("pulse: custom samples must match grid n_tau");
        }
        std::vector<double> mod2(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) mod2[i] = std::norm(samples[i]);
        const double norm2 = integrate_sampled<double>(mod2, grid.step()).value;
        if (!(norm2 > 0.0)) throw ConfigError("pulse: custom samples have zero norm");
        const double s = 1.0 / std::sqrt(norm2);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = samples[i] * s;
        return f;
    }

    /// True when |f| at both window edges is below rel_tol * max|f|.
    bool supported_in(const SimulationGrid& grid, double rel_tol = 1e-8) const {
        const auto f = sample(grid);
        double peak = 0.0;
        for (const auto& v : f) peak = std::max(peak, std::abs(v));
        return std::abs(f.front()) < rel_tol * peak && std::abs(f.back()) < rel_tol * peak;
    }
};

}  // namespace zeropi
