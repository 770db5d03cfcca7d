#pragma once

// Closed-form propagation of the single-photon wave function through the
// Raman medium:
//
//   Phi(zeta, tau) = f(tau) - 2 c1 zeta w(tau) int_{tau_min}^{tau} dtau'
//                    f(tau') w(tau') K1(psi) exp[-i (D(tau) - D(tau'))]
//
// with w = Omega_c / Omega0, psi = 2 sqrt(c1 zeta (W(tau) - W(tau'))) and
// K1(x) = J1(x)/x. The atomic coherence uses the bracket 2 K1 - J2 instead.
// Rows are independent; each is a Simpson sum over the support of the input.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "zeropi/control_field.hpp"
#include "zeropi/core_model.hpp"
#include "zeropi/signal.hpp"
#include "zeropi/special_functions.hpp"

namespace zeropi {

struct TimeSeries {
    double zeta = 0.0;
    std::vector<double> tau;
    std::vector<cplx> values;
    double quad_error = 0.0;   // max Richardson estimate over rows, in units of values
    bool converged = true;
};

struct PropagationOptions {
    /// Insert exp(-Gamma (tau - tau')) into the kernel (pulse-area regularization).
    bool damped = false;
    /// Rows are flagged non-converged when the estimate exceeds quad_tol * max|f|.
    double quad_tol = 1e-6;
};

/// Everything the kernel sums need, precomputed once per (cfg, schedule, pulse, grid).
struct KernelProblem {
    SimulationGrid grid;
    DerivedCouplings couplings;
    ControlDrive drive;
    CumulativeTables tables;
    std::vector<cplx> f;
    std::size_t support_lo = 0;
    std::size_t support_hi = 0;
    bool stationary = false;
    bool has_phase = false;
    double f_max = 0.0;

    /// `separated_energy` drops cross terms between control components in W
    /// (mode decomposition of a readout train).
    KernelProblem(const MediumConfig& cfg, const ControlSchedule& schedule, const InputPulse& pulse,
                  const SimulationGrid& g, bool separated_energy = false)
        : grid(g), couplings(derive_couplings(cfg)), drive(cfg, schedule, separated_energy) {
        grid.validate();
        tables = build_tables(drive, grid);
        f = pulse.sample(grid);
        for (const auto& v : f) f_max = std::max(f_max, std::abs(v));
        const double floor = 1e-18 * f_max;
        support_lo = f.size();
        support_hi = 0;
        for (std::size_t j = 0; j < f.size(); ++j) {
            if (std::abs(f[j]) > floor) {
                support_lo = std::min(support_lo, j);
                support_hi = j;
            }
        }
        stationary = drive.stationary();
        for (std::size_t i = 0; i < f.size() && !has_phase; ++i) {
            has_phase = tables.D[i] != 0.0 || tables.phi[i] != 0.0;
        }
    }

    double h() const { return grid.step(); }
};

namespace detail {

struct RowSums {
    std::vector<cplx> value;
    std::vector<double> error;
};

/// R_i = int_{tau_min}^{tau_i} g(tau') K(psi_i(tau')) e^{-i phase} e^{-Gamma (tau_i - tau')} dtau'
/// for every grid row i; g must vanish outside [support_lo, support_hi].
template <class Kernel>
RowSums volterra_rows(const KernelProblem& p, std::span<const cplx> g, double zeta, Kernel&& kernel,
                      double damping) {
    const std::size_t n = p.grid.n_tau;
    const double h = p.h();
    const double c1z = p.couplings.c1 * zeta;
    RowSums out{std::vector<cplx>(n), std::vector<double>(n, 0.0)};
    if (p.support_lo > p.support_hi) return out;

    // Stationary control: the kernel depends on the lag only.
    std::vector<cplx> lag;
    if (p.stationary) {
        lag.resize(n);
        for (std::size_t m = 0; m < n; ++m) {
            const double u = p.tables.W[m];  // equals m h (+ rounding) for unit envelope
            const double du = p.tables.tau[m] - p.tables.tau[0];
            const double psi = 2.0 * std::sqrt(std::max(0.0, c1z * u));
            cplx k = kernel(psi);
            if (p.has_phase) k *= std::polar(1.0, -(p.tables.D[m] - p.tables.D[0]));
            if (damping > 0.0) k *= std::exp(-damping * du);
            lag[m] = k;
        }
    }

    auto term = [&](std::size_t i, std::size_t j) -> cplx {
        if (p.stationary) return g[j] * lag[i - j];
        const double dw = p.tables.W[i] - p.tables.W[j];
        const double psi = 2.0 * std::sqrt(std::max(0.0, c1z * dw));
        cplx k = kernel(psi);
        if (p.has_phase) k *= std::polar(1.0, -p.tables.kernel_phase(i, j));
        if (damping > 0.0) k *= std::exp(-damping * (p.tables.tau[i] - p.tables.tau[j]));
        return g[j] * k;
    };

#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 32)
#endif
    for (std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(p.support_lo);
         ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        if (i == 0) continue;
        const std::size_t j_end = std::min(i, p.support_hi);
        const bool estimate = (i % 4 == 0);
        cplx fine{};
        cplx coarse{};
        for (std::size_t j = p.support_lo; j <= j_end; ++j) {
            const cplx t = term(i, j);
            fine += simpson_weight(j, i) * t;
            if (estimate && j % 2 == 0) coarse += 2.0 * simpson_weight(j / 2, i / 2) * t;
        }
        out.value[i] = fine * h;
        if (estimate) out.error[i] = std::abs(fine - coarse) * h / 15.0;
    }
    return out;
}

inline void check_zeta(double zeta) {
    if (!(zeta >= 0.0 && zeta <= 1.0)) throw ConfigError("zeta must lie in [0,1]");
}

}  // namespace detail

/// Photon wave function Phi(zeta, tau) on the grid.
inline TimeSeries propagate_field(const KernelProblem& p, double zeta, const PropagationOptions& opt = {}) {
    detail::check_zeta(zeta);
    const std::size_t n = p.grid.n_tau;
    TimeSeries ts;
    ts.zeta = zeta;
    ts.tau = p.tables.tau;
    ts.values = p.f;
    const double pref = 2.0 * p.couplings.c1 * zeta;
    if (pref == 0.0) return ts;

    std::vector<cplx> g(n);
    for (std::size_t j = 0; j < n; ++j) g[j] = p.f[j] * p.tables.omega[j];
    const double damping = opt.damped ? p.couplings.gamma_pump_T : 0.0;
    const auto rows = detail::volterra_rows(p, g, zeta, [](double x) { return cplx(kernel_k1(x)); }, damping);
    for (std::size_t i = 0; i < n; ++i) {
        ts.values[i] -= pref * p.tables.omega[i] * rows.value[i];
        ts.quad_error = std::max(ts.quad_error, pref * std::fabs(p.tables.omega[i]) * rows.error[i]);
    }
    ts.converged = ts.quad_error <= opt.quad_tol * p.f_max;
    return ts;
}

inline TimeSeries propagate_field(const MediumConfig& cfg, const ControlSchedule& schedule,
                                  const InputPulse& pulse, const SimulationGrid& grid, double zeta,
                                  const PropagationOptions& opt = {}) {
    return propagate_field(KernelProblem(cfg, schedule, pulse, grid), zeta, opt);
}

inline std::vector<double> intensity(const TimeSeries& ts) {
    std::vector<double> out(ts.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::norm(ts.values[i]);
    return out;
}

/// Dimensionless coherence bracket integral
///   int dtau' f w [2 K1(psi) - J2(psi)] exp[-i (D(tau) - D(tau'))],
/// i.e. rho_21 divided by i g Omega0/Delta. Real for real f, w and zero detuning.
inline TimeSeries coherence(const KernelProblem& p, double zeta, const PropagationOptions& opt = {}) {
    detail::check_zeta(zeta);
    const std::size_t n = p.grid.n_tau;
    std::vector<cplx> g(n);
    for (std::size_t j = 0; j < n; ++j) g[j] = p.f[j] * p.tables.omega[j];
    const double damping = opt.damped ? p.couplings.gamma_pump_T : 0.0;
    auto rows = detail::volterra_rows(p, g, zeta, [](double x) { return cplx(kernel_retrieval(x)); }, damping);
    TimeSeries ts;
    ts.zeta = zeta;
    ts.tau = p.tables.tau;
    ts.values = std::move(rows.value);
    ts.quad_error = *std::max_element(rows.error.begin(), rows.error.end());
    ts.converged = ts.quad_error <= opt.quad_tol * std::max(1.0, p.f_max);
    return ts;
}

inline TimeSeries coherence(const MediumConfig& cfg, const ControlSchedule& schedule, const InputPulse& pulse,
                            const SimulationGrid& grid, double zeta, const PropagationOptions& opt = {}) {
    return coherence(KernelProblem(cfg, schedule, pulse, grid), zeta, opt);
}

// ---------------------------------------------------------------------------

struct DispersionResult {
    double delta_T = 0.0;
    TimeSeries output;        // zeta = 1
    double centroid_delay = 0.0;
    std::size_t peak_count = 0;   // local maxima above 5% of the global maximum
    double variance_ratio = 1.0;  // second moment of |Phi|^2 over that of |f|^2
};

inline constexpr double kPeakFloor = 0.05;

/// Output at zeta = 1 for each constant total detuning (cw control at the
/// reference level, Stark shift absorbed into delta).
inline std::vector<DispersionResult> dispersion_scan(const MediumConfig& cfg, const InputPulse& pulse,
                                                     const SimulationGrid& grid,
                                                     std::span<const double> delta_T_values,
                                                     const PropagationOptions& opt = {}) {
    std::vector<DispersionResult> out;
    const auto input = intensity(TimeSeries{0.0, grid.taus(), pulse.sample(grid)});
    const auto in_m = moments(grid.taus(), input);
    for (double d : delta_T_values) {
        MediumConfig c = cfg;
        c.raman_detuning_T = d;
        DispersionResult r;
        r.delta_T = d;
        r.output = propagate_field(c, ControlSchedule::cw(cfg.omega0_over_delta, true), pulse, grid, 1.0, opt);
        const auto I = intensity(r.output);
        const auto m = moments(r.output.tau, I);
        r.centroid_delay = m.centroid - in_m.centroid;
        r.variance_ratio = in_m.variance > 0.0 ? m.variance / in_m.variance : 0.0;
        r.peak_count = local_maxima(I, kPeakFloor).size();
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace zeropi
