#pragma once

// Batch runners behind the command-line front end. Each runner writes CSV
// files plus summary.json into an output directory and returns a report
// whose checks decide the exit status. Named scenarios carry embedded
// default configurations; a config file may override any key.

#include <cmath>
#include <filesystem>
#include <algorithm>
#include <fstream>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"

#include "zeropi/control_field.hpp"
#include "zeropi/core_model.hpp"
#include "zeropi/io.hpp"
#include "zeropi/observables.hpp"
#include "zeropi/oracle_pde.hpp"
#include "zeropi/propagator.hpp"
#include "zeropi/timebins.hpp"

namespace zeropi {

using json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitTolerance = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;
    std::string requirement;
};

struct RunOptions {
    double tol = 1e-3;          // oracle / compare tolerance (relative to max|f| for oracle runs)
    bool with_losses = false;   // oracle loss terms
};

struct RunReport {
    json summary = json::object();
    std::vector<Check> checks;
    std::vector<std::string> files;
    std::vector<std::string> warnings;
    bool numerical_failure = false;

    void check(std::string name, bool pass, double value, std::string requirement) {
        checks.push_back({std::move(name), pass, value, std::move(requirement)});
    }
    void warn(const std::vector<std::string>& w) { warnings.insert(warnings.end(), w.begin(), w.end()); }
    bool all_pass() const {
        for (const auto& c : checks) {
            if (!c.pass) return false;
        }
        return true;
    }
    int exit_code() const {
        if (numerical_failure) return kExitNumerical;
        return all_pass() ? kExitOk : kExitTolerance;
    }
};

inline json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::string zeta_tag(double z) { return fmt(z); }

/// Writes summary.json (config echo, results, warnings, checks) into `out`.
inline void write_summary(const std::filesystem::path& out, const std::string& command, const RunConfig& rc,
                          RunReport& rep) {
    json doc;
    doc["command"] = command;
    const auto c = derive_couplings(rc.medium);
    doc["config"] = {{"gamma_T", rc.medium.gamma_T},
                     {"delta_over_gamma", rc.medium.delta_over_gamma},
                     {"omega0_over_delta", rc.medium.omega0_over_delta},
                     {"alpha_L", rc.medium.alpha_L},
                     {"raman_detuning_T", rc.medium.raman_detuning_T},
                     {"ct_over_L", rc.medium.ct_over_L},
                     {"k_L", rc.medium.k_L},
                     {"gamma0_T", rc.medium.gamma0_T},
                     {"c1", c.c1},
                     {"gamma_pump_T", c.gamma_pump_T},
                     {"stark_T", c.stark_T},
                     {"tau_min", rc.grid.tau_min},
                     {"tau_max", rc.grid.tau_max},
                     {"n_tau", rc.grid.n_tau}};
    doc["results"] = rep.summary;
    doc["warnings"] = rep.warnings;
    json checks = json::array();
    for (const auto& ch : rep.checks) {
        checks.push_back({{"name", ch.name}, {"pass", ch.pass}, {"value", jnum(ch.value)},
                          {"requirement", ch.requirement}});
    }
    doc["checks"] = checks;
    doc["files"] = rep.files;
    doc["exit_code"] = rep.exit_code();
    std::ofstream os(out / "summary.json", std::ios::binary);
    if (!os) throw ConfigError("cannot write " + (out / "summary.json").string());
    os << doc.dump(2) << '\n';
}

inline std::filesystem::path prepare_out(const std::filesystem::path& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec || !std::filesystem::is_directory(out)) throw ConfigError("cannot create output directory " + out.string());
    return out;
}

inline std::vector<std::string> regime_warnings(const RunConfig& rc) {
    RegimeOptions ro;
    ro.cw_zero_detuning = rc.control.is_constant();
    ro.delta_tot_T = ControlDrive(rc.medium, rc.control).delta(rc.grid.tau_min);
    auto w = check_regime(rc.medium, ro);
    if (!rc.pulse.supported_in(rc.grid)) w.push_back("input pulse is not contained in the window (|f| >= 1e-8 max at an edge)");
    return w;
}

// ---------------------------------------------------------------------------
// Subcommand runners
// ---------------------------------------------------------------------------

/// Field and coherence at every requested depth.
inline RunReport run_propagate(const RunConfig& rc, const std::filesystem::path& out_dir) {
    const auto out = prepare_out(out_dir);
    RunReport rep;
    rep.warn(regime_warnings(rc));
    const KernelProblem kp(rc.medium, rc.control, rc.pulse, rc.grid);
    PropagationOptions opt;
    opt.damped = rc.damped;
    json rows = json::array();
    for (double z : rc.grid.z_fractions) {
        const auto ts = propagate_field(kp, z, opt);
        const auto coh = coherence(kp, z, opt);
        const std::string tag = zeta_tag(z);
        write_field_csv(out / ("field_zeta_" + tag + ".csv"), ts);
        write_coherence_csv(out / ("coherence_zeta_" + tag + ".csv"), coh);
        rep.files.push_back("field_zeta_" + tag + ".csv");
        rep.files.push_back("coherence_zeta_" + tag + ".csv");
        const auto pc = photon_number(ts);
        rep.warn(pc.warnings);
        if (!ts.converged) {
            rep.numerical_failure = true;
            rep.warnings.push_back("quadrature did not converge at zeta = " + tag);
        }
        rows.push_back({{"zeta", z},
                        {"photon_number", pc.value},
                        {"tail_ratio", pc.tail_ratio},
                        {"area_window", real_integral(ts.values, rc.grid.step())},
                        {"quad_error", ts.quad_error},
                        {"converged", ts.converged}});
    }
    rep.summary["depths"] = rows;
    const auto loss = loss_diagnostic(rc.medium);
    rep.warn(loss.warnings);
    rep.summary["loss_diagnostic"] = {{"loss", loss.loss_closed},
                                      {"loss_reference", loss.loss_reference},
                                      {"limit_ratio", loss.limit_ratio}};
    return rep;
}

inline SimulationGrid extend_for_damped_area(const RunConfig& rc, const MediumConfig& m, double zeta_max) {
    SimulationGrid g = rc.grid;
    const double h = g.step();
    const double need = damped_area_tau_max(m, zeta_max, rc.pulse.center);
    if (need > g.tau_max) {
        const auto steps = static_cast<std::size_t>(std::ceil((need - g.tau_min) / h));
        g.n_tau = steps + 1;
        g.tau_max = g.tau_min + h * static_cast<double>(steps);
    }
    return g;
}

/// Area at each depth; with `damped` the window is extended until the damped
/// tail is negligible and the decay law is checked.
inline RunReport run_area_scan(const RunConfig& rc, const std::filesystem::path& out_dir) {
    const auto out = prepare_out(out_dir);
    RunReport rep;
    rep.warn(regime_warnings(rc));
    double zmax = 0.0;
    for (double z : rc.grid.z_fractions) zmax = std::max(zmax, z);

    auto sweep = [&](const MediumConfig& m, const std::string& file, bool write) {
        const SimulationGrid g = rc.damped ? extend_for_damped_area(rc, m, zmax) : rc.grid;
        std::vector<AreaRecord> recs;
        std::unique_ptr<CsvWriter> w;
        if (write) w = std::make_unique<CsvWriter>(out / file, "zeta,theta_window,theta_theory,rho22,n_photons");
        for (double z : rc.grid.z_fractions) {
            auto r = pulse_area(m, rc.pulse, g, z, rc.damped);
            rep.warn(r.warnings);
            if (w) w->row({z, r.theta_window, r.theta_theory, stored_population(m, r), r.n_photons});
            recs.push_back(std::move(r));
        }
        if (write) rep.files.push_back(file);
        return std::make_pair(g, recs);
    };

    const auto [grid, recs] = sweep(rc.medium, "area.csv", true);
    json rows = json::array();
    for (const auto& r : recs) {
        const double expect = std::exp(-rc.medium.alpha_L * r.zeta);
        rows.push_back({{"zeta", r.zeta},
                        {"alpha_L_zeta", rc.medium.alpha_L * r.zeta},
                        {"ratio", r.ratio()},
                        {"expected", expect},
                        {"rho22", stored_population(rc.medium, r)},
                        {"n_photons", r.n_photons}});
        if (rc.damped) {
            rep.check("area_theorem_zeta_" + zeta_tag(r.zeta), std::fabs(r.ratio() / expect - 1.0) <= 0.01,
                      r.ratio() / expect - 1.0, "|ratio / exp(-alpha L zeta) - 1| <= 1%");
        }
    }
    rep.summary["window_tau_max"] = grid.tau_max;
    rep.summary["damped"] = rc.damped;
    rep.summary["records"] = rows;

    if (!rc.area_omega_values.empty()) {
        json block = json::array();
        for (double r : rc.area_omega_values) {
            MediumConfig m = rc.medium;
            m.omega0_over_delta = r;
            const auto [g2, rs] = sweep(m, "area_omega_" + fmt(r) + ".csv", true);
            json one = {{"omega0_over_delta", r}, {"window_tau_max", g2.tau_max}};
            json ratios = json::array();
            for (std::size_t i = 0; i < rs.size(); ++i) {
                ratios.push_back(rs[i].ratio());
                if (rc.damped) {
                    const double ref = recs[i].ratio();
                    const double dev = ref != 0.0 ? rs[i].ratio() / ref - 1.0 : rs[i].ratio();
                    rep.check("gamma_cancellation_omega_" + fmt(r) + "_zeta_" + zeta_tag(rs[i].zeta),
                              std::fabs(dev) <= 0.01, dev, "ratio independent of Omega0/Delta within 1%");
                }
            }
            one["ratios"] = ratios;
            block.push_back(one);
        }
        rep.summary["gamma_cancellation"] = block;
    }
    return rep;
}

inline RunReport run_dispersion(const RunConfig& rc, const std::filesystem::path& out_dir,
                                std::vector<DispersionResult>* keep = nullptr) {
    const auto out = prepare_out(out_dir);
    RunReport rep;
    rep.warn(regime_warnings(rc));
    const auto res = dispersion_scan(rc.medium, rc.pulse, rc.grid, rc.dispersion_values);
    json rows = json::array();
    for (const auto& r : res) {
        const std::string file = "dispersion_delta_" + fmt(r.delta_T) + ".csv";
        write_field_csv(out / file, r.output);
        rep.files.push_back(file);
        if (!r.output.converged) rep.numerical_failure = true;
        rows.push_back({{"delta_T", r.delta_T},
                        {"centroid_delay", r.centroid_delay},
                        {"peak_count", r.peak_count},
                        {"variance_ratio", r.variance_ratio},
                        {"photon_number", photon_integral(r.output)}});
    }
    rep.summary["detunings"] = rows;
    if (keep) *keep = res;
    return rep;
}

inline json state_json(const OutputState& st, const ControlSchedule& sch) {
    json modes = json::array();
    for (const auto& m : st.modes) {
        json one = {{"i", m.index}, {"r", m.r}, {"n", m.n}, {"sign", m.sign},
                    {"window", {m.window_lo, m.window_hi}}, {"leakage", m.leakage}};
        if (m.index > 0) {
            const auto& p = sch.readout[m.index - 1];
            one["tau_i"] = p.tau;
            one["T_i"] = p.T;
            one["amp_i"] = p.amp;
        }
        modes.push_back(one);
    }
    return {{"modes", modes},
            {"total", st.total},
            {"decomposition_error", st.decomposition_error},
            {"overlaps", st.overlaps}};
}

inline void write_state_files(const std::filesystem::path& out, const std::string& prefix, const OutputState& st,
                              const ControlSchedule& sch, RunReport& rep) {
    for (const auto& m : st.modes) {
        const std::string file = prefix + "mode_" + std::to_string(m.index) + ".csv";
        write_mode_csv(out / file, st.tau, m.profile);
        rep.files.push_back(file);
    }
    const std::string full = prefix + "full.csv";
    write_field_csv(out / full, st.tau, st.full);
    rep.files.push_back(full);
    const std::string state = prefix + "state.csv";
    CsvWriter w(out / state, "i,tau_i,T_i,amp_i,r_i,n_i,sign");
    for (const auto& m : st.modes) {
        double tau_i = NAN, T_i = NAN, amp_i = NAN;
        if (m.index > 0) {
            const auto& p = sch.readout[m.index - 1];
            tau_i = p.tau;
            T_i = p.T;
            amp_i = p.amp;
        } else if (sch.switch_off) {
            tau_i = sch.switch_off->tau0;
            T_i = sch.switch_off->T0;
            amp_i = sch.cw_level;
        }
        w.raw_row(std::to_string(m.index) + "," + fmt(tau_i) + "," + fmt(T_i) + "," + fmt(amp_i) + "," +
                  fmt(m.r) + "," + fmt(m.n) + "," + std::to_string(m.sign));
    }
    rep.files.push_back(state);
}

inline RunReport run_timebins(const RunConfig& rc, const std::filesystem::path& out_dir, OutputState* keep = nullptr) {
    const auto out = prepare_out(out_dir);
    RunReport rep;
    rep.warn(check_regime(rc.medium, {}));
    TimebinOptions opt;
    opt.separation_factor = rc.separation_factor;
    const auto st = analyze_timebins(rc.medium, rc.pulse, rc.control, rc.grid, opt);
    rep.warn(st.warnings);
    write_state_files(out, "", st, rc.control, rep);
    rep.summary["state"] = state_json(st, rc.control);
    rep.summary["max_overlap"] = check_orthogonality(st).max_off_diagonal;
    if (keep) *keep = st;
    return rep;
}

/// Closed form at zeta = 1 against the PDE oracle on the same tau grid.
/// With losses the reference is the damped kernel times exp(-kL), exact for
/// cw control and gamma0 = 0.
struct OracleComparison {
    double max_diff = 0.0;
    double f_max = 0.0;
    TimeSeries kernel;
    OracleField oracle;
};

inline OracleComparison compare_with_oracle(const RunConfig& rc, bool with_losses) {
    OracleComparison cmp;
    PropagationOptions opt;
    opt.damped = with_losses;
    const KernelProblem kp(rc.medium, rc.control, rc.pulse, rc.grid);
    cmp.f_max = kp.f_max;
    cmp.kernel = propagate_field(kp, 1.0, opt);
    if (with_losses) {
        for (auto& v : cmp.kernel.values) v *= std::exp(-rc.medium.k_L);
    }
    OracleGrid og{rc.grid.tau_min, rc.grid.tau_max, rc.grid.n_tau, rc.oracle_n_zeta, 0};
    cmp.oracle = integrate_oracle(rc.medium, rc.control, rc.pulse, og, {with_losses});
    for (std::size_t i = 0; i < cmp.kernel.values.size(); ++i) {
        cmp.max_diff = std::max(cmp.max_diff, std::abs(cmp.kernel.values[i] - cmp.oracle.output()[i]));
    }
    return cmp;
}

inline json convergence_json(const ConvergenceTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        rows.push_back({{"level", r.level}, {"dtau", r.dtau}, {"dzeta", r.dzeta}, {"error", r.error},
                        {"difference", r.difference}});
    }
    return {{"rows", rows}, {"observed_order", jnum(t.observed_order)}, {"monotone", t.monotone}, {"exact", t.exact}};
}

inline constexpr double kMinOracleOrder = 1.8;

inline void add_convergence_check(RunReport& rep, const std::string& name, const ConvergenceTable& t) {
    const bool ok = t.exact || (t.observed_order >= kMinOracleOrder && t.monotone);
    rep.check(name, ok, t.exact ? 2.0 : t.observed_order, "observed order >= 1.8 with monotone decay");
    rep.warn(t.warnings);
}

inline RunReport run_oracle_compare(const RunConfig& rc, const std::filesystem::path& out_dir, const RunOptions& ro,
                                    const std::string& prefix = "", bool convergence = false) {
    const auto out = prepare_out(out_dir);
    RunReport rep;
    rep.warn(regime_warnings(rc));
    if (ro.with_losses && (!rc.control.is_constant() || rc.medium.gamma0_T != 0.0)) {
        rep.warnings.push_back("with losses the closed-form reference is exact only for cw control and gamma0 = 0");
    }
    const auto cmp = compare_with_oracle(rc, ro.with_losses);
    write_field_csv(out / (prefix + "kernel.csv"), cmp.kernel);
    write_field_csv(out / (prefix + "oracle.csv"), cmp.oracle.tau, cmp.oracle.output());
    write_oracle_dump((out / (prefix + "oracle.bin")).string(), cmp.oracle);
    rep.files.push_back(prefix + "kernel.csv");
    rep.files.push_back(prefix + "oracle.csv");
    rep.files.push_back(prefix + "oracle.bin");
    const double rel = cmp.max_diff / cmp.f_max;
    rep.summary["max_diff"] = cmp.max_diff;
    rep.summary["max_diff_over_max_f"] = rel;
    rep.summary["n_zeta"] = rc.oracle_n_zeta;
    rep.check(prefix + "kernel_vs_oracle", rel <= ro.tol, rel, "max |Phi_kernel - Phi_oracle| <= tol * max|f|");
    if (convergence) {
        OracleGrid og{rc.grid.tau_min, rc.grid.tau_max, rc.grid.n_tau, rc.oracle_n_zeta, 0};
        const auto t = convergence_study(rc.medium, rc.control, rc.pulse, og, 3);
        rep.summary["convergence"] = convergence_json(t);
        add_convergence_check(rep, prefix + "oracle_order", t);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Named scenarios
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"fig2_ringing", "fig3_intensity", "fig4_dispersion",
                                                "fig5_timebins", "fig6_phase",     "area_sweep",
                                                "oracle_compare", "custom"};
    return names;
}

/// gamma T = 7.2 maps T = 200 ns with gamma = 2 pi x 5.75 MHz (Rb D1).
inline RunConfig ringing_defaults() {
    RunConfig rc;
    rc.medium.gamma_T = 7.2;
    rc.medium.delta_over_gamma = 20.0;
    rc.medium.omega0_over_delta = 0.1;
    rc.c1 = 5.0;   // group delay c1 / delta^2 = 0.2 T at delta T = 5
    rc.control = ControlSchedule::cw(0.1, true);
    rc.pulse = InputPulse::gaussian(0.0, 1.0);
    rc.grid = {-5.0, 40.0, 4501, {0.25, 0.5, 1.0}};
    rc.finalize();
    return rc;
}

inline RunConfig timebin_defaults() {
    RunConfig rc;
    rc.medium.omega0_over_delta = 0.05;
    rc.c1 = 1.25;
    rc.control.cw_level = 0.05;
    rc.cw_level_set = true;
    rc.control.switch_off = SwitchOff{-1.5, 1.5};
    const double Ti = 1.0 / std::numbers::sqrt2;
    rc.control.readout = {{4.0, Ti, 0.05}, {7.0, Ti, 0.05}};
    rc.control.absorb_stark = true;
    rc.pulse = InputPulse::gaussian(0.0, 1.0);
    rc.grid = {-5.0, 12.0, 1701, {1.0}};
    rc.finalize();
    return rc;
}

inline RunConfig scenario_defaults(const std::string& name) {
    if (name == "fig2_ringing" || name == "oracle_compare") {
        auto rc = ringing_defaults();
        if (name == "oracle_compare") rc.grid.z_fractions = {1.0};
        return rc;
    }
    if (name == "fig3_intensity") {
        auto rc = ringing_defaults();
        rc.c1 = 0.125;   // 20 c1^(1/3) = 10 T
        rc.grid = {-5.0, 480.0, 9701, {1.0}};
        rc.finalize();
        return rc;
    }
    if (name == "fig4_dispersion") {
        auto rc = ringing_defaults();
        rc.grid.z_fractions = {1.0};
        rc.dispersion_values = {5.0, 2.0, 1.0};
        return rc;
    }
    if (name == "fig5_timebins" || name == "fig6_phase") return timebin_defaults();
    if (name == "area_sweep") {
        RunConfig rc;
        rc.medium.alpha_L = 5.0;
        rc.medium.omega0_over_delta = 0.1;
        rc.control = ControlSchedule::cw(0.1, true);
        rc.damped = true;
        rc.grid = {-6.0, 40.0, 921, {0.0, 0.02, 0.1, 0.2, 0.4, 1.0}};
        rc.area_omega_values = {0.05, 0.2};
        rc.finalize();
        return rc;
    }
    if (name == "custom") {
        RunConfig rc;
        rc.finalize();
        return rc;
    }
    throw ConfigError("unknown scenario '" + name + "'");
}

// Scenario-specific analyses ------------------------------------------------

/// Photon number at zeta = 1 against 1 - int_0^1 c1 theta(zeta)^2 dzeta, with
/// theta the windowed area. The area collapses within a small depth, so the
/// integral is taken in u with zeta = u^2 on `n` points (odd, for Simpson).
struct PhotonBalance {
    double n_out = 0.0;
    double trapped = 0.0;
    double n_in = 0.0;
};

inline PhotonBalance photon_balance(const KernelProblem& kp, std::size_t n = 41) {
    if (n < 3 || n % 2 == 0) throw ConfigError("photon_balance: need an odd number >= 3 of depths");
    std::vector<double> dens(n);
    const double h = kp.h();
    const double du = 1.0 / static_cast<double>(n - 1);
    PhotonBalance b;
    for (std::size_t k = 0; k < n; ++k) {
        const double u = k + 1 == n ? 1.0 : du * static_cast<double>(k);
        const auto ts = propagate_field(kp, u * u);
        // Complex area, so detuned or phase-modulated runs are covered too.
        const cplx area = integrate_sampled<cplx>(ts.values, h).value;
        dens[k] = 2.0 * u * kp.couplings.c1 * std::norm(area);
        if (k == 0) b.n_in = photon_integral(ts);
        if (k + 1 == n) b.n_out = photon_integral(ts);
    }
    b.trapped = integrate_sampled<double>(dens, du).value;
    return b;
}

inline RunReport run_fig2(const RunConfig& rc, const std::filesystem::path& out) {
    auto rep = run_propagate(rc, out);
    const KernelProblem kp(rc.medium, rc.control, rc.pulse, rc.grid);
    const auto ts = propagate_field(kp, 1.0);
    const auto coh = coherence(kp, 1.0);
    const double theta0 = real_integral(kp.f, rc.grid.step());

    const double ratio = windowed_area(ts, -2.0, 30.0) / theta0;
    rep.summary["window_area_ratio"] = ratio;
    rep.check("window_area_ratio", ratio < 0.0 && std::fabs(ratio / -0.083 - 1.0) <= 0.5, ratio,
              "negative and within 50% of -0.083 over [-2, 30]");

    const double measured = ringing_duration(ts, 0.05, rc.pulse.center);
    const double estimate = estimate_T_out(rc.medium);
    rep.summary["ringing_duration"] = measured;
    rep.summary["ringing_estimate"] = estimate;
    rep.check("ringing_duration_ratio", measured / estimate >= 0.5 && measured / estimate <= 2.0, measured / estimate,
              "measured / estimate in [0.5, 2]");

    // Zero crossings of Re Phi against extrema of |coherence|.
    std::vector<double> mag(coh.values.size());
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(coh.values[i]);
    const auto ext = local_maxima(mag, 1e-3);
    std::size_t matched = 0, crossings = 0;
    const double h = rc.grid.step();
    const double floor = 1e-3 * kp.f_max;
    for (std::size_t i = 0; i + 1 < ts.values.size(); ++i) {
        const double a = ts.values[i].real(), b = ts.values[i + 1].real();
        if (a * b < 0.0 && std::max(std::fabs(a), std::fabs(b)) > 0.0 && mag[i] > floor) {
            ++crossings;
            const double t0 = ts.tau[i] - a * h / (b - a);
            for (auto k : ext) {
                if (std::fabs(ts.tau[k] - t0) <= h) {
                    ++matched;
                    break;
                }
            }
        }
    }
    rep.summary["coherence_extrema_at_crossings"] = {{"crossings", crossings}, {"matched", matched}};
    rep.check("coherence_extrema_at_zero_crossings", crossings > 0 && matched == crossings,
              static_cast<double>(matched), "every zero crossing of Re Phi within one step of a |coherence| extremum");

    const auto bal = photon_balance(kp);
    rep.summary["photon_balance"] = {{"n_in", bal.n_in}, {"n_out", bal.n_out}, {"trapped", bal.trapped}};
    rep.check("photon_number_input", std::fabs(bal.n_in - 1.0) <= 1e-6, bal.n_in - 1.0, "|n(0) - 1| <= 1e-6");
    const double dev = bal.n_out / (1.0 - bal.trapped) - 1.0;
    rep.check("photon_balance", std::fabs(dev) <= 0.01, dev, "n(1) = 1 - depth-integrated trapped flux within 1%");
    const auto loss = loss_diagnostic(rc.medium, bal.n_out);
    rep.check("loss_limit_ratio", std::fabs(loss.limit_ratio - std::numbers::pi / 4.0) <= 1e-6,
              loss.limit_ratio, "alpha L -> infinity ratio equals pi/4 within 1e-6");
    return rep;
}

struct RingingAnalysis {
    double spike_tau = 0.0;
    std::vector<double> retrieval_tau;
    std::vector<double> retrieval_height;
    std::vector<double> predicted_tau;
    std::size_t matched = 0;
    bool decreasing = true;
    double duration = 0.0;
    double estimate = 0.0;
};

/// Peaks after the first node of K1 (psi0 = j_{1,1}) are retrieval peaks;
/// each must sit within one grid step of a maximum of K1^2(psi0).
inline RingingAnalysis analyze_ringing(const TimeSeries& ts, double c1, double zeta, double center) {
    RingingAnalysis ra;
    const auto I = intensity(ts);
    const auto peaks = local_maxima(I);
    const auto top = std::max_element(I.begin(), I.end()) - I.begin();
    ra.spike_tau = ts.tau[static_cast<std::size_t>(top)];
    const double j11 = 3.8317059702075123;
    const double first_node = center + j11 * j11 / (4.0 * c1 * zeta);
    for (double t : kernel_peak_times(c1, zeta, center, 64)) {
        if (t > ts.tau.back()) break;
        ra.predicted_tau.push_back(t);
    }
    const double h = ts.tau[1] - ts.tau[0];
    for (auto k : peaks) {
        if (ts.tau[k] <= first_node) continue;
        ra.retrieval_tau.push_back(ts.tau[k]);
        ra.retrieval_height.push_back(I[k]);
        for (double t : ra.predicted_tau) {
            if (std::fabs(t - ts.tau[k]) <= h) {
                ++ra.matched;
                break;
            }
        }
    }
    for (std::size_t i = 1; i < ra.retrieval_height.size(); ++i) {
        if (ra.retrieval_height[i] >= ra.retrieval_height[i - 1]) ra.decreasing = false;
    }
    ra.duration = ringing_duration(ts, 0.05, center);
    ra.estimate = 20.0 * std::cbrt(c1);
    return ra;
}

inline RunReport run_fig3(const RunConfig& rc, const std::filesystem::path& out_dir) {
    const auto out = prepare_out(out_dir);
    RunReport rep;
    rep.warn(regime_warnings(rc));
    const KernelProblem kp(rc.medium, rc.control, rc.pulse, rc.grid);
    const auto ts = propagate_field(kp, 1.0);
    write_field_csv(out / "intensity_zeta_1.csv", ts);
    rep.files.push_back("intensity_zeta_1.csv");
    if (!ts.converged) rep.numerical_failure = true;

    const auto ra = analyze_ringing(ts, kp.couplings.c1, 1.0, rc.pulse.center);
    rep.summary["ringing"] = {{"spike_tau", ra.spike_tau},
                              {"retrieval_tau", ra.retrieval_tau},
                              {"retrieval_height", ra.retrieval_height},
                              {"predicted_tau", ra.predicted_tau},
                              {"duration", ra.duration},
                              {"estimate", ra.estimate}};
    const double h = rc.grid.step();
    rep.check("leading_spike", std::fabs(ra.spike_tau - rc.pulse.center) <= h, ra.spike_tau,
              "global maximum within one step of the input centre");
    rep.check("retrieval_peaks", ra.retrieval_tau.size() >= 4 && ra.decreasing,
              static_cast<double>(ra.retrieval_tau.size()), ">= 4 retrieval peaks with decreasing height");
    rep.check("retrieval_peak_positions", ra.matched == ra.retrieval_tau.size() && ra.matched > 0,
              static_cast<double>(ra.matched), "every retrieval peak within one step of a K1^2 maximum");
    rep.check("ringing_duration", ra.duration / ra.estimate >= 0.5 && ra.duration / ra.estimate <= 2.0,
              ra.duration / ra.estimate, "5% duration within a factor 2 of 20 c1^(1/3)");

    // Scale pair: (zeta = 1/4, Omega0) against (zeta = 1, Omega0 / 2).
    MediumConfig half = rc.medium;
    half.omega0_over_delta = 0.5 * rc.medium.omega0_over_delta;
    const auto a = propagate_field(kp, 0.25);
    const auto b = propagate_field(half, ControlSchedule::cw(half.omega0_over_delta, true), rc.pulse, rc.grid, 1.0);
    write_field_csv(out / "scale_pair_a.csv", a);
    write_field_csv(out / "scale_pair_b.csv", b);
    rep.files.push_back("scale_pair_a.csv");
    rep.files.push_back("scale_pair_b.csv");
    const auto Ia = intensity(a), Ib = intensity(b);
    double d = 0.0;
    for (std::size_t i = 0; i < Ia.size(); ++i) d = std::max(d, std::fabs(Ia[i] - Ib[i]));
    rep.summary["scale_pair_max_diff"] = d;
    rep.check("scale_invariance", d <= 1e-8, d, "max |I_a - I_b| <= 1e-8");
    return rep;
}

inline RunReport run_fig4(const RunConfig& rc, const std::filesystem::path& out) {
    std::vector<DispersionResult> res;
    auto rep = run_dispersion(rc, out, &res);
    for (const auto& r : res) {
        const std::string tag = fmt(r.delta_T);
        if (r.delta_T == 5.0) {
            rep.check("slow_photon_delay_delta_5", std::fabs(r.centroid_delay - 0.2) <= 0.05, r.centroid_delay,
                      "centroid delay 0.2 +- 0.05");
            rep.check("slow_photon_shape_delta_5", r.peak_count == 1 && std::fabs(r.variance_ratio - 1.0) < 0.1,
                      r.variance_ratio - 1.0, "single peak, second-moment change < 10%");
        } else if (r.delta_T == 2.0) {
            rep.check("two_peaks_delta_2", r.peak_count == 2, static_cast<double>(r.peak_count),
                      "exactly 2 maxima above 5%");
        } else if (r.delta_T == 1.0) {
            rep.check("ringing_delta_1", r.peak_count >= 3, static_cast<double>(r.peak_count),
                      ">= 3 maxima above 5%");
        }
    }
    return rep;
}

inline RunReport run_fig5(const RunConfig& rc, const std::filesystem::path& out) {
    OutputState st;
    auto rep = run_timebins(rc, out, &st);
    rep.check("mode_normalization", std::fabs(st.total - 1.0) <= 0.02, st.total, "sum n_i = 1 +- 0.02");
    const auto ov = check_orthogonality(st);
    rep.check("mode_orthogonality", ov.pass, ov.max_off_diagonal, "all overlaps < 1e-3");
    rep.check("mode_decomposition", st.decomposition_error < 1e-3, st.decomposition_error,
              "sum of modes reproduces direct propagation to < 1e-3");

    // Equal-intensity design with the second readout at 1.2 Omega0.
    ControlSchedule sch = rc.control;
    if (sch.readout.size() >= 2) {
        sch.readout[1].amp = 1.2 * rc.medium.omega0_over_delta;
        TimebinOptions opt;
        opt.separation_factor = rc.separation_factor;
        const auto eq = equalize_readouts(rc.medium, rc.pulse, sch, rc.grid, 0, 1e-3, opt);
        rep.summary["equalize"] = {{"amp_second", sch.readout[1].amp},
                                   {"amp_first", eq.amp_first},
                                   {"ratio_first_to_second", eq.ratio},
                                   {"ratio_first_to_omega0", eq.amp_first / rc.medium.omega0_over_delta},
                                   {"n_first", eq.n_first},
                                   {"n_second", eq.n_second},
                                   {"iterations", eq.iterations},
                                   {"converged", eq.converged}};
        rep.check("equalize_readouts", eq.converged, eq.n_first - eq.n_second, "|n1 - n2| <= 1e-3");
    }
    return rep;
}

inline RunReport run_fig6(const RunConfig& rc, const std::filesystem::path& out_dir) {
    const auto out = prepare_out(out_dir);
    RunReport rep;
    if (rc.control.readout.size() < 2) throw ConfigError("fig6_phase: need at least two readout pulses");
    TimebinOptions opt;
    opt.separation_factor = rc.separation_factor;
    ControlSchedule same = rc.control;
    ControlSchedule flip = rc.control;
    flip.readout[1].amp = -flip.readout[1].amp;
    const auto a = analyze_timebins(rc.medium, rc.pulse, same, rc.grid, opt);
    const auto b = analyze_timebins(rc.medium, rc.pulse, flip, rc.grid, opt);
    write_state_files(out, "same_", a, same, rep);
    write_state_files(out, "opposite_", b, flip, rep);
    rep.summary["same"] = state_json(a, same);
    rep.summary["opposite"] = state_json(b, flip);
    double re_sum = 0.0, mag = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < a.tau.size(); ++k) {
        const cplx p = a.modes[2].profile[k], q = b.modes[2].profile[k];
        re_sum = std::max(re_sum, std::fabs(p.real() + q.real()));
        mag = std::max(mag, std::fabs(std::abs(p) - std::abs(q)));
        scale = std::max(scale, std::abs(p));
    }
    const double dn = std::fabs(a.modes[2].n - b.modes[2].n);
    rep.summary["sign_flip"] = {{"max_re_sum", re_sum}, {"max_abs_diff", mag}, {"n2_diff", dn}};
    rep.check("phase_flip_real_parts", re_sum <= 1e-9 * scale, re_sum, "Re Phi_2 flips sign to 1e-9");
    rep.check("phase_flip_modulus", mag <= 1e-9 * scale && dn <= 1e-9 * std::max(1e-300, a.modes[2].n), mag,
              "|Phi_2| and n_2 unchanged");
    return rep;
}

inline void merge(RunReport& into, RunReport part, const std::string& key) {
    into.summary[key] = part.summary;
    for (auto& c : part.checks) into.checks.push_back(std::move(c));
    for (auto& f : part.files) into.files.push_back(std::move(f));
    for (auto& w : part.warnings) into.warnings.push_back(std::move(w));
    into.numerical_failure = into.numerical_failure || part.numerical_failure;
}

/// Closed form against the oracle for the cw, detuned and readout-train cases.
inline RunReport run_oracle_scenario(const RunConfig& rc, const std::filesystem::path& out, const RunOptions& ro) {
    RunReport rep;
    merge(rep, run_oracle_compare(rc, out, ro, "cw_", true), "cw");
    for (double d : rc.dispersion_values) {
        RunConfig r = rc;
        r.medium.raman_detuning_T = d;
        merge(rep, run_oracle_compare(r, out, ro, "delta_" + fmt(d) + "_"), "delta_" + fmt(d));
    }
    RunConfig tb = timebin_defaults();
    merge(rep, run_oracle_compare(tb, out, ro, "readout_", true), "readout");
    return rep;
}

/// Runs a named scenario; `overrides` (config text) is applied on top of its defaults.
inline RunReport run_scenario(const std::string& name, const std::filesystem::path& out, const RunOptions& ro,
                              const std::string& overrides = {}, const std::string& source = "config") {
    if (name == "custom" && overrides.empty()) throw ConfigError("scenario custom needs --config");
    const RunConfig rc = apply_config_text(overrides, scenario_defaults(name), source);
    RunReport rep;
    if (name == "fig2_ringing") rep = run_fig2(rc, out);
    else if (name == "fig3_intensity") rep = run_fig3(rc, out);
    else if (name == "fig4_dispersion") rep = run_fig4(rc, out);
    else if (name == "fig5_timebins") rep = run_fig5(rc, out);
    else if (name == "fig6_phase") rep = run_fig6(rc, out);
    else if (name == "area_sweep") rep = run_area_scan(rc, out);
    else if (name == "oracle_compare") rep = run_oracle_scenario(rc, out, ro);
    else rep = run_propagate(rc, out);
    write_summary(out, "run " + name, rc, rep);
    return rep;
}

}  // namespace zeropi
