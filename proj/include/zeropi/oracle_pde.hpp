#pragma once

// Brute-force integrator of the linearized field / spin-wave equations in
// scaled variables, used as an independent reference for the closed forms:
//
//   dPhi/dzeta = i sqrt(c1) w(tau) s - kL Phi
//   ds/dtau    = -i delta(tau) s + i sqrt(c1) w(tau) Phi - (Gamma w^2 + gamma0 T) s
//
// with Phi(0, tau) = f(tau) and s(zeta, tau_min) = 0. The entrance slice
// s(0, .) is itself driven by f. The zeta step is the trapezoid rule; its
// implicit half is eliminated analytically, Phi_{k+1} = P + Q s_{k+1}, which
// leaves a linear ODE in tau for s_{k+1} that is integrated with classical
// RK4. Previous-slice values at half steps come from 4-point cubic
// interpolation; w and delta are evaluated analytically.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "zeropi/control_field.hpp"
#include "zeropi/core_model.hpp"

namespace zeropi {

struct OracleGrid {
    double tau_min = -5.0;
    double tau_max = 40.0;
    std::size_t n_tau = 4501;
    std::size_t n_zeta = 101;   // samples in zeta, including 0 and 1
    std::size_t store_every = 0;   // keep every k-th zeta row; 0 keeps only zeta = 0 and 1

    double dtau() const { return (tau_max - tau_min) / static_cast<double>(n_tau - 1); }
    double dzeta() const { return 1.0 / static_cast<double>(n_zeta - 1); }
    double tau(std::size_t i) const {
        return i + 1 == n_tau ? tau_max : tau_min + dtau() * static_cast<double>(i);
    }
};

struct OracleField {
    std::vector<double> tau;
    std::vector<double> zeta;                 // depths of the stored rows
    std::vector<std::vector<cplx>> phi;       // phi[row][tau]
    std::vector<std::vector<cplx>> s;
    std::vector<double> zeta_all;             // every marching depth
    std::vector<cplx> s_edge;                 // s(zeta, tau_max) at every marching depth

    const std::vector<cplx>& output() const { return phi.back(); }
};

struct OracleOptions {
    bool with_losses = false;
};

namespace detail {

/// Cubic interpolation of y at i + 1/2.
inline cplx half_point(const std::vector<cplx>& y, std::size_t i) {
    const std::size_t n = y.size();
    if (n < 4) return 0.5 * (y[i] + y[i + 1]);
    if (i == 0) return (5.0 * y[0] + 15.0 * y[1] - 5.0 * y[2] + y[3]) / 16.0;
    if (i + 2 >= n) {
        return (y[n - 4] - 5.0 * y[n - 3] + 15.0 * y[n - 2] + 5.0 * y[n - 1]) / 16.0;
    }
    return (-y[i - 1] + 9.0 * y[i] + 9.0 * y[i + 1] - y[i + 2]) / 16.0;
}

inline double max_abs_delta(const ControlDrive& drive, const OracleGrid& g) {
    double m = 0.0;
    for (std::size_t i = 0; i < g.n_tau; ++i) m = std::max(m, std::fabs(drive.delta(g.tau(i))));
    return m;
}

}  // namespace detail

/// Throws ConfigError when the grid does not resolve the fastest scale.
inline void check_oracle_resolution(const ControlDrive& drive, const OracleGrid& g) {
    if (!(g.tau_max > g.tau_min) || g.n_tau < 4) throw ConfigError("oracle: invalid tau grid");
    if (g.n_zeta < 2) throw ConfigError("oracle: need at least two zeta samples");
    const double slack = 1.0 + 1e-9;
    const double dmax = detail::max_abs_delta(drive, g);
    double limit = 0.01;
    if (dmax > 0.0) limit = std::min(limit, 1.0 / (10.0 * dmax));
    if (g.dtau() > limit * slack) {
        throw ConfigError("oracle: dtau = " + std::to_string(g.dtau()) + " exceeds resolution limit " +
                          std::to_string(limit));
    }
    if (g.dzeta() > 0.01 * slack) {
        throw ConfigError("oracle: dzeta = " + std::to_string(g.dzeta()) + " exceeds 0.01");
    }
}

inline OracleField integrate_oracle(const MediumConfig& cfg, const ControlSchedule& schedule,
                                    const InputPulse& pulse, const OracleGrid& g, const OracleOptions& opt = {}) {
    const ControlDrive drive(cfg, schedule);
    check_oracle_resolution(drive, g);
    const auto c = derive_couplings(cfg);
    const double sc1 = std::sqrt(c.c1);
    const double kL = opt.with_losses ? cfg.k_L : 0.0;
    const double gamma_s = opt.with_losses ? c.gamma_pump_T : 0.0;
    const double gamma0 = opt.with_losses ? cfg.gamma0_T : 0.0;
    const std::size_t n = g.n_tau;
    const double h = g.dtau();
    const double dz = g.dzeta();
    const cplx I(0.0, 1.0);

    SimulationGrid sg{g.tau_min, g.tau_max, g.n_tau, {}};
    OracleField out;
    out.tau = sg.taus();

    // Control samples at full and half points.
    std::vector<double> w(n), d(n), wh(n - 1), dh(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = drive.omega(out.tau[i]);
        d[i] = drive.delta(out.tau[i]);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double t = 0.5 * (out.tau[i] + out.tau[i + 1]);
        wh[i] = drive.omega(t);
        dh[i] = drive.delta(t);
    }

    std::vector<cplx> phi = pulse.sample(sg);
    std::vector<cplx> s(n, cplx{});
    // Entrance slice: s(0, tau) driven by Phi = f.
    {
        auto rhs0 = [&](cplx sv, double wv, double dv, cplx ph) {
            return (-I * dv - (gamma_s * wv * wv + gamma0)) * sv + I * sc1 * wv * ph;
        };
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const cplx fm = detail::half_point(phi, i);
            const cplx y = s[i];
            const cplx k1 = rhs0(y, w[i], d[i], phi[i]);
            const cplx k2 = rhs0(y + 0.5 * h * k1, wh[i], dh[i], fm);
            const cplx k3 = rhs0(y + 0.5 * h * k2, wh[i], dh[i], fm);
            const cplx k4 = rhs0(y + h * k3, w[i + 1], d[i + 1], phi[i + 1]);
            s[i + 1] = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    auto store = [&](double z) {
        out.zeta.push_back(z);
        out.phi.push_back(phi);
        out.s.push_back(s);
    };
    store(0.0);
    out.zeta_all.push_back(0.0);
    out.s_edge.push_back(s.back());

    const double beta = 1.0 / (1.0 + 0.5 * dz * kL);
    const double keep = 1.0 - 0.5 * dz * kL;
    auto P_at = [&](cplx ph, cplx sk, double wv) { return beta * (keep * ph + 0.5 * dz * I * sc1 * wv * sk); };
    auto Q_at = [&](double wv) { return beta * 0.5 * dz * I * sc1 * wv; };
    auto rhs = [&](cplx sv, double wv, double dv, cplx P) {
        const cplx a = -I * dv - (gamma_s * wv * wv + gamma0) + I * sc1 * wv * Q_at(wv);
        return a * sv + I * sc1 * wv * P;
    };

    std::vector<cplx> next_s(n);
    for (std::size_t k = 1; k < g.n_zeta; ++k) {
        next_s[0] = cplx{};
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const cplx P0 = P_at(phi[i], s[i], w[i]);
            const cplx P1 = P_at(phi[i + 1], s[i + 1], w[i + 1]);
            const cplx Pm = P_at(detail::half_point(phi, i), detail::half_point(s, i), wh[i]);
            const cplx y = next_s[i];
            const cplx k1 = rhs(y, w[i], d[i], P0);
            const cplx k2 = rhs(y + 0.5 * h * k1, wh[i], dh[i], Pm);
            const cplx k3 = rhs(y + 0.5 * h * k2, wh[i], dh[i], Pm);
            const cplx k4 = rhs(y + h * k3, w[i + 1], d[i + 1], P1);
            next_s[i + 1] = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        for (std::size_t i = 0; i < n; ++i) {
            phi[i] = P_at(phi[i], s[i], w[i]) + Q_at(w[i]) * next_s[i];
            s[i] = next_s[i];
            if (!std::isfinite(phi[i].real()) || !std::isfinite(phi[i].imag()) || !std::isfinite(s[i].real()) ||
                !std::isfinite(s[i].imag())) {
                throw NumericalError("oracle: non-finite value at zeta step " + std::to_string(k) +
                                     ", tau = " + std::to_string(out.tau[i]));
            }
        }
        const double z = k + 1 == g.n_zeta ? 1.0 : dz * static_cast<double>(k);
        out.zeta_all.push_back(z);
        out.s_edge.push_back(s.back());
        if (k + 1 == g.n_zeta || (g.store_every > 0 && k % g.store_every == 0)) store(z);
    }
    return out;
}

// ---------------------------------------------------------------------------

struct ConvergenceRow {
    std::size_t level = 0;
    double dtau = 0.0;
    double dzeta = 0.0;
    double error = 0.0;        // max |Phi_level - extrapolant| on the coarse grid
    double difference = 0.0;   // max |Phi_level - Phi_{level+1}| on the coarse grid
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double observed_order = 0.0;   // log2 of successive difference ratios (last pair)
    bool monotone = true;
    bool exact = false;            // all differences at rounding level
    std::vector<std::string> warnings;
};

/// Halves dtau and dzeta together at each level and compares Phi(1, .) on
/// the coarse grid. The extrapolant assumes second order.
inline ConvergenceTable convergence_study(const MediumConfig& cfg, const ControlSchedule& schedule,
                                          const InputPulse& pulse, const OracleGrid& coarse, std::size_t levels = 3) {
    if (levels < 3) throw ConfigError("convergence_study: need at least three levels");
    std::vector<std::vector<cplx>> out;
    ConvergenceTable tab;
    for (std::size_t l = 0; l < levels; ++l) {
        OracleGrid g = coarse;
        const std::size_t f = std::size_t{1} << l;
        g.n_tau = (coarse.n_tau - 1) * f + 1;
        g.n_zeta = (coarse.n_zeta - 1) * f + 1;
        g.store_every = 0;
        const auto field = integrate_oracle(cfg, schedule, pulse, g);
        std::vector<cplx> sub(coarse.n_tau);
        for (std::size_t i = 0; i < coarse.n_tau; ++i) sub[i] = field.output()[i * f];
        out.push_back(std::move(sub));
        tab.rows.push_back({l, g.dtau(), g.dzeta(), 0.0, 0.0});
    }
    auto maxdiff = [](const std::vector<cplx>& a, const std::vector<cplx>& b) {
        double m = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
        return m;
    };
    std::vector<cplx> extrap(coarse.n_tau);
    const auto& fine = out[levels - 1];
    const auto& prev = out[levels - 2];
    for (std::size_t i = 0; i < extrap.size(); ++i) extrap[i] = fine[i] + (fine[i] - prev[i]) / 3.0;
    double scale = 0.0;
    for (const auto& v : out[0]) scale = std::max(scale, std::abs(v));
    for (std::size_t l = 0; l < levels; ++l) {
        tab.rows[l].error = maxdiff(out[l], extrap);
        if (l + 1 < levels) tab.rows[l].difference = maxdiff(out[l], out[l + 1]);
    }
    const double floor = 1e-13 * std::max(1.0, scale);
    tab.exact = true;
    for (std::size_t l = 0; l + 1 < levels; ++l) tab.exact = tab.exact && tab.rows[l].difference <= floor;
    for (std::size_t l = 0; l + 2 < levels; ++l) {
        if (tab.rows[l + 1].difference > tab.rows[l].difference) tab.monotone = false;
    }
    if (!tab.exact) {
        const double a = tab.rows[levels - 3].difference;
        const double b = tab.rows[levels - 2].difference;
        tab.observed_order = b > 0.0 ? std::log2(a / b) : INFINITY;
        if (!tab.monotone) tab.warnings.push_back("convergence_study: error decay is not monotone");
    }
    return tab;
}

// ---------------------------------------------------------------------------

/// Binary dump: little-endian uint64 n_zeta, uint64 n_tau, then phi and s as
/// row-major (re, im) float64 pairs, phi first.
inline void write_oracle_dump(const std::string& path, const OracleField& field) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("oracle dump: cannot open " + path);
    auto put_u64 = [&](std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
        os.write(reinterpret_cast<const char*>(b), 8);
    };
    auto put_f64 = [&](double x) { put_u64(std::bit_cast<std::uint64_t>(x)); };
    put_u64(field.phi.size());
    put_u64(field.tau.size());
    for (const auto* grid : {&field.phi, &field.s}) {
        for (const auto& row : *grid) {
            for (const auto& v : row) {
                put_f64(v.real());
                put_f64(v.imag());
            }
        }
    }
    if (!os) throw NumericalError("oracle dump: write failed for " + path);
}

}  // namespace zeropi
