#pragma once

// Storage followed by a train of readout pulses. The stored part of the
// photon is released mode by mode:
//
//   Phi_0 = f - 2 c1 zeta f0(tau - tau0) I(tau)
//   Phi_i =   - 2 c1 zeta (Omega_i/Omega0) f_i(tau - tau_i) I(tau)
//
// where I(tau) = int f(tau') f0(tau' - tau0) K1(psi(tau, tau')) dtau'.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "zeropi/control_field.hpp"
#include "zeropi/core_model.hpp"
#include "zeropi/propagator.hpp"
#include "zeropi/signal.hpp"

namespace zeropi {

struct TemporalMode {
    std::size_t index = 0;
    std::vector<cplx> profile;
    double r = 0.0;
    double n = 0.0;
    int sign = 1;
    double window_lo = 0.0;
    double window_hi = 0.0;
    double leakage = 0.0;   // max |Phi_i| outside its window over max |Phi_i|
};

struct OutputState {
    std::vector<double> tau;
    std::vector<TemporalMode> modes;
    std::vector<cplx> full;              // direct propagation of the whole schedule
    double total = 0.0;                  // sum of n_i
    double decomposition_error = 0.0;    // max |sum Phi_i - full| / max |full|
    std::vector<std::vector<double>> overlaps;
    std::vector<std::string> warnings;
};

struct TimebinOptions {
    double zeta = 1.0;
    double separation_factor = kDefaultSeparationFactor;
    bool allow_overlap = false;   // skip the separation check (diagnostic runs only)
};

inline void require_storage_schedule(const ControlSchedule& s) {
    if (!s.switch_off) throw ConfigError("timebins: schedule needs a switch-off");
}

/// I(zeta, tau) on the grid for a schedule with a switch-off.
inline TimeSeries storage_integral(const KernelProblem& p, double zeta) {
    const auto& schedule = p.drive.schedule();
    require_storage_schedule(schedule);
    detail::check_zeta(zeta);
    const double cw = p.drive.reference() > 0.0 ? schedule.cw_level / p.drive.reference() : 0.0;
    std::vector<cplx> g(p.f.size());
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = p.f[j] * cw * schedule.switch_factor(p.tables.tau[j]);
    auto rows = detail::volterra_rows(p, g, zeta, [](double x) { return cplx(kernel_k1(x)); }, 0.0);
    TimeSeries ts;
    ts.zeta = zeta;
    ts.tau = p.tables.tau;
    ts.values = std::move(rows.value);
    ts.quad_error = *std::max_element(rows.error.begin(), rows.error.end());
    return ts;
}

inline TimeSeries storage_integral(const MediumConfig& cfg, const InputPulse& pulse, const ControlSchedule& schedule,
                                   const SimulationGrid& grid, double zeta) {
    require_storage_schedule(schedule);
    return storage_integral(KernelProblem(cfg, schedule, pulse, grid, true), zeta);
}

inline constexpr double kReadoutPhaseAdvisory = kRegimeThreshold;

/// Mode profiles at depth opt.zeta. Throws ConfigError when the readout train
/// violates ordering or separation (unless allow_overlap is set).
inline OutputState mode_profiles(const MediumConfig& cfg, const InputPulse& pulse, const ControlSchedule& schedule,
                                 const SimulationGrid& grid, const TimebinOptions& opt = {}) {
    require_storage_schedule(schedule);
    const auto bad = schedule.violations(opt.separation_factor);
    if (!bad.empty() && !opt.allow_overlap) {
        std::string msg = "timebins: modes are ill-defined:";
        for (const auto& b : bad) msg += " " + b + ";";
        throw ConfigError(msg);
    }
    OutputState st;
    for (const auto& b : bad) st.warnings.push_back(b);

    const auto c = derive_couplings(cfg);
    const double ref = cfg.omega0_over_delta;
    for (std::size_t i = 0; i < schedule.readout.size(); ++i) {
        const auto& p = schedule.readout[i];
        // Stark phase accumulated across one readout pulse, (Omega_i/Delta)^2 Delta T_i.
        const double stark = p.amp * p.amp * cfg.delta_over_gamma * cfg.gamma_T * p.T;
        if (stark >= kReadoutPhaseAdvisory) {
            st.warnings.push_back("readout " + std::to_string(i + 1) + ": Omega_i^2 T_i / Delta = " +
                                  std::to_string(stark) + " is not small");
        }
    }

    // Modes assume non-overlapping control pulses; the decomposition error
    // below measures the cross terms this drops.
    const KernelProblem kp(cfg, schedule, pulse, grid, true);
    const auto I = storage_integral(kp, opt.zeta);
    st.tau = kp.tables.tau;
    const std::size_t n = st.tau.size();
    const double pref = 2.0 * c.c1 * opt.zeta;
    const double cw = ref > 0.0 ? schedule.cw_level / ref : 0.0;

    TemporalMode m0;
    m0.index = 0;
    m0.profile.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        m0.profile[k] = kp.f[k] - pref * cw * schedule.switch_factor(st.tau[k]) * I.values[k];
    }
    st.modes.push_back(std::move(m0));
    for (std::size_t i = 0; i < schedule.readout.size(); ++i) {
        TemporalMode m;
        m.index = i + 1;
        const double amp = ref > 0.0 ? schedule.readout[i].amp / ref : 0.0;
        m.sign = schedule.readout[i].amp < 0.0 ? -1 : 1;
        m.profile.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            m.profile[k] = -pref * amp * schedule.readout_shape(i, st.tau[k]) * I.values[k];
        }
        st.modes.push_back(std::move(m));
    }

    // Midpoint partition of the window between successive mode centres.
    std::vector<double> centres{pulse.shape == InputPulse::Shape::gaussian ? pulse.center : schedule.switch_off->tau0};
    for (const auto& p : schedule.readout) centres.push_back(p.tau);
    for (std::size_t i = 0; i < st.modes.size(); ++i) {
        auto& m = st.modes[i];
        m.window_lo = i == 0 ? grid.tau_min : 0.5 * (centres[i - 1] + centres[i]);
        m.window_hi = i + 1 == st.modes.size() ? grid.tau_max : 0.5 * (centres[i] + centres[i + 1]);
        double inside = 0.0, outside = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double a = std::abs(m.profile[k]);
            if (st.tau[k] >= m.window_lo && st.tau[k] <= m.window_hi) {
                inside = std::max(inside, a);
            } else {
                outside = std::max(outside, a);
            }
        }
        const double peak = std::max(inside, outside);
        m.leakage = peak > 0.0 ? outside / peak : 0.0;
    }

    st.full = propagate_field(KernelProblem(cfg, schedule, pulse, grid), opt.zeta).values;
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        cplx sum{};
        for (const auto& m : st.modes) sum += m.profile[k];
        err = std::max(err, std::abs(sum - st.full[k]));
        scale = std::max(scale, std::abs(st.full[k]));
    }
    st.decomposition_error = scale > 0.0 ? err / scale : err;
    return st;
}

inline constexpr double kNormalizationWarning = 0.05;

/// Fills r_i = sqrt(int |Phi_i|^2), n_i = r_i^2 and the total.
inline OutputState mode_amplitudes(OutputState st) {
    st.total = 0.0;
    for (auto& m : st.modes) {
        std::vector<double> I(m.profile.size());
        for (std::size_t k = 0; k < I.size(); ++k) I[k] = std::norm(m.profile[k]);
        m.n = moments(st.tau, I).norm;
        m.r = std::sqrt(std::max(0.0, m.n));
        st.total += m.n;
    }
    if (std::fabs(st.total - 1.0) > kNormalizationWarning) {
        st.warnings.push_back("sum of mode occupations is " + std::to_string(st.total) +
                              "; losses or window truncation");
    }
    return st;
}

struct OverlapReport {
    std::vector<std::vector<double>> matrix;
    double max_off_diagonal = 0.0;
    bool pass = true;
};

inline constexpr double kOverlapTolerance = 1e-3;

/// Normalized overlaps |<Phi_i, Phi_j>| / (|Phi_i| |Phi_j|).
inline OverlapReport check_orthogonality(const OutputState& st, double eps = kOverlapTolerance) {
    const std::size_t m = st.modes.size();
    OverlapReport rep;
    rep.matrix.assign(m, std::vector<double>(m, 0.0));
    if (st.tau.size() < 2) return rep;
    const double h = st.tau[1] - st.tau[0];
    std::vector<double> norms(m);
    std::vector<cplx> buf(st.tau.size());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = std::norm(st.modes[i].profile[k]);
        norms[i] = std::sqrt(integrate_sampled<cplx>(buf, h).value.real());
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (norms[i] == 0.0 || norms[j] == 0.0) continue;
            for (std::size_t k = 0; k < buf.size(); ++k) {
                buf[k] = std::conj(st.modes[i].profile[k]) * st.modes[j].profile[k];
            }
            rep.matrix[i][j] = std::abs(integrate_sampled<cplx>(buf, h).value) / (norms[i] * norms[j]);
            if (i != j) rep.max_off_diagonal = std::max(rep.max_off_diagonal, rep.matrix[i][j]);
        }
    }
    rep.pass = rep.max_off_diagonal < eps;
    return rep;
}

inline OutputState analyze_timebins(const MediumConfig& cfg, const InputPulse& pulse,
                                    const ControlSchedule& schedule, const SimulationGrid& grid,
                                    const TimebinOptions& opt = {}) {
    auto st = mode_amplitudes(mode_profiles(cfg, pulse, schedule, grid, opt));
    st.overlaps = check_orthogonality(st).matrix;
    return st;
}

struct EqualizeResult {
    double amp_first = 0.0;   // Omega_i / Delta found for the first readout of the pair
    double ratio = 0.0;       // amp_first / amp_second
    double n_first = 0.0;
    double n_second = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Bisection on the amplitude of readout `first` (0-based) so that its
/// occupation matches readout first+1 within tol. The second amplitude is kept.
inline EqualizeResult equalize_readouts(const MediumConfig& cfg, const InputPulse& pulse, ControlSchedule schedule,
                                        const SimulationGrid& grid, std::size_t first = 0, double tol = 1e-3,
                                        const TimebinOptions& opt = {}) {
    if (first + 1 >= schedule.readout.size()) throw ConfigError("equalize_readouts: need a following readout");
    const double second = schedule.readout[first + 1].amp;
    const double sgn = schedule.readout[first].amp < 0.0 ? -1.0 : 1.0;
    EqualizeResult res;
    auto eval = [&](double a) {
        schedule.readout[first].amp = sgn * a;
        const auto st = mode_amplitudes(mode_profiles(cfg, pulse, schedule, grid, opt));
        res.n_first = st.modes[first + 1].n;
        res.n_second = st.modes[first + 2].n;
        return res.n_first - res.n_second;
    };
    double lo = 0.0;
    double hi = std::fabs(second) > 0.0 ? std::fabs(second) : cfg.omega0_over_delta;
    int expand = 0;
    while (eval(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++expand > 12) return res;
    }
    for (res.iterations = 0; res.iterations < 60; ++res.iterations) {
        const double mid = 0.5 * (lo + hi);
        const double d = eval(mid);
        res.amp_first = sgn * mid;
        if (std::fabs(d) <= tol) {
            res.converged = true;
            break;
        }
        (d < 0.0 ? lo : hi) = mid;
    }
    res.ratio = second != 0.0 ? res.amp_first / second : 0.0;
    return res;
}

}  // namespace zeropi
