#pragma once

// Pulse area and its decay law, trapped excitation, photon number, the loss
// diagnostic and ringing-time measures.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "zeropi/control_field.hpp"
#include "zeropi/core_model.hpp"
#include "zeropi/propagator.hpp"
#include "zeropi/signal.hpp"
#include "zeropi/special_functions.hpp"

namespace zeropi {

// ---------------------------------------------------------------------------
// Pulse area
// ---------------------------------------------------------------------------

struct AreaRecord {
    double zeta = 0.0;
    double theta_window = 0.0;   // int Re Phi over the grid
    double theta0 = 0.0;         // int Re f over the grid
    double theta_theory = 0.0;   // theta0 exp(-alpha L zeta)
    double tail_estimate = 0.0;  // rough size of the area beyond the window
    double n_photons = 0.0;      // int |Phi|^2 from the same run
    bool gamma_damped = false;
    std::vector<std::string> warnings;

    double ratio() const { return theta0 != 0.0 ? theta_window / theta0 : 0.0; }
};

inline double real_integral(std::span<const cplx> v, double h) {
    std::vector<double> re(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) re[i] = v[i].real();
    return integrate_sampled<double>(re, h).value;
}

/// Integral of Re Phi over [a, b], restricted to the grid samples inside it.
inline double windowed_area(const TimeSeries& ts, double a, double b) {
    if (ts.tau.size() < 2) return 0.0;
    const double h = ts.tau[1] - ts.tau[0];
    const double eps = 1e-9 * h;
    std::vector<double> re;
    for (std::size_t i = 0; i < ts.tau.size(); ++i) {
        if (ts.tau[i] >= a - eps && ts.tau[i] <= b + eps) re.push_back(ts.values[i].real());
    }
    return integrate_sampled<double>(re, h).value;
}

/// Window end that captures the damped area to about 1e-3 of its limit:
/// the tail behaves like 2 alpha L zeta K1 exp(-Gamma tau) / Gamma.
inline double damped_area_tau_max(const MediumConfig& cfg, double zeta, double tau_start = 0.0) {
    const auto c = derive_couplings(cfg);
    if (!(c.gamma_pump_T > 0.0)) throw ConfigError("damped area: optical pumping rate is zero");
    const double a = cfg.alpha_L * zeta;
    return tau_start + (a + std::log(1000.0 * a + 1.0)) / c.gamma_pump_T + 10.0;
}

inline double photon_integral(const TimeSeries& ts) {
    if (ts.tau.size() < 2) return 0.0;
    return moments(ts.tau, intensity(ts)).norm;
}

/// Area of the output at depth zeta for cw control at zero two-photon detuning.
inline AreaRecord pulse_area(const MediumConfig& cfg, const InputPulse& pulse, const SimulationGrid& grid,
                             double zeta, bool damped, const PropagationOptions& base = {}) {
    if (cfg.raman_detuning_T != 0.0) throw ConfigError("pulse_area: requires zero two-photon detuning");
    PropagationOptions opt = base;
    opt.damped = damped;
    const KernelProblem p(cfg, ControlSchedule::cw(cfg.omega0_over_delta, true), pulse, grid);
    const auto ts = propagate_field(p, zeta, opt);
    const double h = grid.step();

    AreaRecord r;
    r.zeta = zeta;
    r.gamma_damped = damped;
    r.theta0 = real_integral(p.f, h);
    r.theta_window = real_integral(ts.values, h);
    r.theta_theory = r.theta0 * std::exp(-cfg.alpha_L * zeta);
    r.n_photons = photon_integral(ts);

    const double end = std::fabs(ts.values.back().real());
    const double gamma = p.couplings.gamma_pump_T;
    if (damped && gamma > 0.0) {
        r.tail_estimate = end / gamma;
    } else {
        r.tail_estimate = end * (grid.tau_max - grid.tau_min);
    }
    if (r.tail_estimate > 0.01 * std::fabs(r.theta0)) {
        r.warnings.push_back("pulse_area: window too short, tail estimate " + std::to_string(r.tail_estimate) +
                             " exceeds 1% of the input area");
    }
    if (!ts.converged) r.warnings.push_back("pulse_area: quadrature did not reach tolerance");
    return r;
}

/// Depth density of trapped excitation, c1 theta^2 in internal units. It is
/// the photon flux lost per unit depth: d/dzeta int |Phi|^2 = -c1 theta^2.
inline double stored_population(const MediumConfig& cfg, const AreaRecord& area) {
    return derive_couplings(cfg).c1 * area.theta_window * area.theta_window;
}

// ---------------------------------------------------------------------------
// Photon number and losses
// ---------------------------------------------------------------------------

struct PhotonCount {
    double value = 0.0;
    double tail_ratio = 0.0;   // intensity near the window end over the peak
    std::vector<std::string> warnings;
};

inline constexpr double kTailThreshold = 1e-4;

inline PhotonCount photon_number(const TimeSeries& ts) {
    PhotonCount pc;
    if (ts.tau.size() < 2) return pc;
    const auto I = intensity(ts);
    pc.value = moments(ts.tau, I).norm;
    const double peak = *std::max_element(I.begin(), I.end());
    const std::size_t tail = std::max<std::size_t>(2, I.size() / 50);
    const double end = *std::max_element(I.end() - static_cast<std::ptrdiff_t>(tail), I.end());
    pc.tail_ratio = peak > 0.0 ? end / peak : 0.0;
    if (pc.tail_ratio > kTailThreshold) {
        pc.warnings.push_back("photon_number: intensity at window end is " + std::to_string(pc.tail_ratio) +
                              " of peak; the count is truncated");
    }
    return pc;
}

struct LossRecord {
    double n_in = 1.0;
    double n_out = 0.0;               // NaN unless supplied
    double loss_closed = 0.0;         // (pi/4)(cT/L) gamma T (Omega0/Delta)^2 (1 - e^{-2 alpha L})
    double loss_reference = 0.0;      // (cT/L) gamma T (Omega0/Delta)^2
    double limit_ratio = 0.0;         // loss_closed / loss_reference for alpha L -> infinity
    std::vector<double> trapped_profile;
    std::vector<std::string> warnings;
};

inline double loss_closed_form(double ct_over_L, double gamma_T, double omega0_over_delta, double alpha_L) {
    const double r2 = omega0_over_delta * omega0_over_delta;
    return 0.25 * std::numbers::pi * ct_over_L * gamma_T * r2 * (-std::expm1(-2.0 * alpha_L));
}

inline LossRecord loss_diagnostic(const MediumConfig& cfg, double n_out = NAN) {
    cfg.validate();
    LossRecord r;
    r.n_out = n_out;
    const double r2 = cfg.omega0_over_delta * cfg.omega0_over_delta;
    r.loss_closed = loss_closed_form(cfg.ct_over_L, cfg.gamma_T, cfg.omega0_over_delta, cfg.alpha_L);
    r.loss_reference = cfg.ct_over_L * cfg.gamma_T * r2;
    if (r.loss_reference > 0.0) {
        const double far = loss_closed_form(cfg.ct_over_L, cfg.gamma_T, cfg.omega0_over_delta, 1e3);
        r.limit_ratio = far / r.loss_reference;
    }
    if (r.loss_closed > 1.0) {
        r.warnings.push_back("loss diagnostic exceeds unity (" + std::to_string(r.loss_closed) +
                             "); the weak-loss regime does not hold for these parameters");
    }
    return r;
}

// ---------------------------------------------------------------------------
// Ringing
// ---------------------------------------------------------------------------

inline double estimate_T_out(const MediumConfig& cfg) {
    return 20.0 * std::cbrt(derive_couplings(cfg).c1);
}

/// Last time the intensity envelope exceeds threshold * max, measured from
/// input_center. The envelope interpolates linearly between local maxima;
/// beyond the last maximum the raw falling edge is used.
inline double ringing_duration(const TimeSeries& ts, double threshold = 0.05, double input_center = 0.0) {
    const auto I = intensity(ts);
    if (I.size() < 3) return 0.0;
    const double level = threshold * *std::max_element(I.begin(), I.end());
    const auto peaks = local_maxima(I);
    std::size_t last = peaks.size();
    for (std::size_t k = 0; k < peaks.size(); ++k) {
        if (I[peaks[k]] >= level) last = k;
    }
    if (last == peaks.size()) return 0.0;
    const std::size_t i = peaks[last];
    if (last + 1 < peaks.size()) {
        const std::size_t j = peaks[last + 1];
        const double frac = (I[i] - level) / (I[i] - I[j]);
        return ts.tau[i] + frac * (ts.tau[j] - ts.tau[i]) - input_center;
    }
    std::size_t k = i;
    while (k + 1 < I.size() && I[k + 1] >= level) ++k;
    if (k + 1 < I.size()) {
        const double frac = (I[k] - level) / (I[k] - I[k + 1]);
        return ts.tau[k] + frac * (ts.tau[k + 1] - ts.tau[k]) - input_center;
    }
    return ts.tau[k] - input_center;
}

/// First n positive zeros of J2, located by scanning and bisection.
inline std::vector<double> bessel_j2_zeros(std::size_t n) {
    std::vector<double> z;
    double a = 0.5;
    double fa = bessel_j2(a);
    while (z.size() < n) {
        const double b = a + 0.1;
        const double fb = bessel_j2(b);
        if (fa * fb < 0.0) {
            double lo = a, hi = b, flo = fa;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = bessel_j2(mid);
                if (flo * fm <= 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            z.push_back(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    return z;
}

/// Times of the maxima of K1^2(psi0(tau, tau_ref)) with psi0 = 2 sqrt(c1 zeta (tau - tau_ref)).
/// K1' = -J2/x, so the maxima sit at the zeros of J2.
inline std::vector<double> kernel_peak_times(double c1, double zeta, double tau_ref, std::size_t count) {
    std::vector<double> t;
    if (!(c1 * zeta > 0.0)) return t;
    for (double x : bessel_j2_zeros(count)) t.push_back(tau_ref + x * x / (4.0 * c1 * zeta));
    return t;
}

}  // namespace zeropi
