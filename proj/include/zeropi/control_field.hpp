#pragma once

// Control Rabi-frequency envelope Omega_c(tau)/Delta: a cw level, an optional
// tanh switch-off, and a train of signed Gaussian readout pulses. Also the
// cumulative tables the kernel needs: control energy W and detuning phase D.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "zeropi/core_model.hpp"

namespace zeropi {

struct SwitchOff {
    double tau0 = 0.0;  // centre of the fall
    double T0 = 1.5;    // fall time
};

struct ReadoutPulse {
    double tau = 0.0;   // centre
    double T = 1.0;     // duration, shape exp(-(tau - centre)^2 / T^2)
    double amp = 0.0;   // signed Omega_i / Delta; the sign is the readout phase
};

inline constexpr double kDefaultSeparationFactor = 2.0;

struct ControlSchedule {
    double cw_level = 0.0;                 // Omega0 / Delta before any switch-off
    std::optional<SwitchOff> switch_off;
    std::vector<ReadoutPulse> readout;
    std::function<double(double)> phase;   // optional phi(tau); empty means 0
    bool absorb_stark = false;             // true: delta_tot = delta_R only

    static ControlSchedule cw(double level, bool absorb_stark = true) {
        ControlSchedule s;
        s.cw_level = level;
        s.absorb_stark = absorb_stark;
        return s;
    }

    bool is_constant() const { return !switch_off && readout.empty() && !phase; }

    /// 1/2 [tanh(-(tau - tau0)/T0) + 1], or 1 without a switch-off.
    double switch_factor(double tau) const {
        if (!switch_off) return 1.0;
        return 0.5 * (std::tanh(-(tau - switch_off->tau0) / switch_off->T0) + 1.0);
    }

    double readout_shape(std::size_t i, double tau) const {
        const auto& p = readout[i];
        const double u = (tau - p.tau) / p.T;
        return std::exp(-u * u);
    }

    double omega_at(double tau) const {
        double v = cw_level * switch_factor(tau);
        for (std::size_t i = 0; i < readout.size(); ++i) v += readout[i].amp * readout_shape(i, tau);
        return v;
    }

    double phase_at(double tau) const { return phase ? phase(tau) : 0.0; }

    /// Sum of the squared components without their cross terms, the energy
    /// of a train whose pulses do not overlap.
    double separated_energy(double tau) const {
        const double base = cw_level * switch_factor(tau);
        double e = base * base;
        for (std::size_t i = 0; i < readout.size(); ++i) {
            const double v = readout[i].amp * readout_shape(i, tau);
            e += v * v;
        }
        return e;
    }

    /// Ordering and separation violations of the readout train (empty when valid).
    std::vector<std::string> violations(double separation_factor = kDefaultSeparationFactor) const {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < readout.size(); ++i) {
            const auto& p = readout[i];
            if (!(p.T > 0.0) || !std::isfinite(p.tau) || !std::isfinite(p.amp)) {
                out.push_back("readout " + std::to_string(i + 1) + ": invalid parameters");
                continue;
            }
            const double prev = i == 0 ? (switch_off ? switch_off->tau0 : -INFINITY) : readout[i - 1].tau;
            if (!(p.tau > prev)) {
                out.push_back("readout " + std::to_string(i + 1) + ": not after its predecessor");
            }
            if (i > 0) {
                const auto& q = readout[i - 1];
                if (p.tau - q.tau < separation_factor * (p.T + q.T)) {
                    out.push_back("readouts " + std::to_string(i) + "," + std::to_string(i + 1) +
                                  ": separation below " + std::to_string(separation_factor) +
                                  " x (T_i + T_i+1)");
                }
            }
        }
        if (switch_off && !(switch_off->T0 > 0.0)) out.push_back("switch-off: T0 must be > 0");
        return out;
    }
};

/// Schedule bound to a medium: the envelope normalized to the reference level
/// Omega0 (cfg.omega0_over_delta) and the total two-photon detuning.
class ControlDrive {
public:
    /// With `separated` the energy omits cross terms between schedule components.
    ControlDrive(const MediumConfig& cfg, ControlSchedule schedule, bool separated = false)
        : schedule_(std::move(schedule)),
          separated_(separated),
          reference_(cfg.omega0_over_delta),
          raman_T_(cfg.raman_detuning_T),
          stark_T_(derive_couplings(cfg).stark_T) {}

    const ControlSchedule& schedule() const { return schedule_; }
    double reference() const { return reference_; }

    /// Omega_c(tau) / Omega0; zero when the reference level is zero.
    double omega(double tau) const {
        return reference_ > 0.0 ? schedule_.omega_at(tau) / reference_ : 0.0;
    }

    /// |Omega_c(tau) / Omega0|^2.
    double energy(double tau) const {
        if (!(reference_ > 0.0)) return 0.0;
        if (separated_) return schedule_.separated_energy(tau) / (reference_ * reference_);
        const double w = omega(tau);
        return w * w;
    }

    /// delta_tot(tau) * T = delta_R T + (Stark term unless absorbed).
    double delta(double tau) const {
        if (schedule_.absorb_stark) return raman_T_;
        return raman_T_ + stark_T_ * energy(tau);
    }

    double phase(double tau) const { return schedule_.phase_at(tau); }

    /// Constant envelope at the reference level with constant detuning; the
    /// kernel then depends on tau - tau' only.
    bool stationary() const {
        return schedule_.is_constant() && schedule_.cw_level == reference_ && reference_ > 0.0;
    }

private:
    ControlSchedule schedule_;
    bool separated_;
    double reference_;
    double raman_T_;
    double stark_T_;
};

struct CumulativeTables {
    std::vector<double> tau;
    std::vector<double> omega;   // Omega_c / Omega0 on the grid
    std::vector<double> W;       // int_{tau_min}^{tau} omega^2 dx
    std::vector<double> D;       // int_{tau_min}^{tau} delta_tot T dx
    std::vector<double> phi;     // control phase samples

    /// Total kernel phase between samples i and j (i >= j):
    /// (D_i - D_j) - (phi_i - phi_j).
    double kernel_phase(std::size_t i, std::size_t j) const {
        return (D[i] - D[j]) - (phi[i] - phi[j]);
    }
};

/// Cumulative control energy and detuning phase. Each interval is closed with
/// Simpson's rule using the analytic midpoint value of the schedule.
inline CumulativeTables build_tables(const ControlDrive& drive, const std::vector<double>& tau) {
    if (tau.size() < 2) throw ConfigError("build_tables: need at least two grid points");
    for (std::size_t i = 1; i < tau.size(); ++i) {
        if (!(tau[i] > tau[i - 1])) throw ConfigError("build_tables: grid must be strictly increasing");
    }
    CumulativeTables t;
    const std::size_t n = tau.size();
    t.tau = tau;
    t.omega.resize(n);
    t.W.assign(n, 0.0);
    t.D.assign(n, 0.0);
    t.phi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.omega[i] = drive.omega(tau[i]);
        t.phi[i] = drive.phase(tau[i]);
    }
    double d_prev = drive.delta(tau[0]);
    for (std::size_t i = 1; i < n; ++i) {
        const double h = tau[i] - tau[i - 1];
        const double mid = 0.5 * (tau[i] + tau[i - 1]);
        t.W[i] = t.W[i - 1] + h / 6.0 * (drive.energy(tau[i - 1]) + 4.0 * drive.energy(mid) + drive.energy(tau[i]));
        const double d1 = drive.delta(tau[i]);
        t.D[i] = t.D[i - 1] + h / 6.0 * (d_prev + 4.0 * drive.delta(mid) + d1);
        d_prev = d1;
    }
    return t;
}

inline CumulativeTables build_tables(const ControlDrive& drive, const SimulationGrid& grid) {
    grid.validate();
    return build_tables(drive, grid.taus());
}

}  // namespace zeropi
