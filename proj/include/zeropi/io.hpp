#pragma once

// Flat key = value configuration files, CSV emission and comparison.
//
//   # comment
//   gamma_T = 7.2
//   z_fractions = [0.25, 0.5, 1]
//   control.readout = [(4, 0.7071, 0.05), (7, 0.7071, 0.05)]

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "zeropi/control_field.hpp"
#include "zeropi/core_model.hpp"
#include "zeropi/propagator.hpp"

namespace zeropi {

struct RunConfig {
    MediumConfig medium;
    ControlSchedule control;
    InputPulse pulse;
    SimulationGrid grid;
    bool damped = false;
    std::vector<double> dispersion_values{5.0, 2.0, 1.0};
    std::vector<double> area_omega_values;   // extra Omega0/Delta values for the cancellation sweep
    std::size_t oracle_n_zeta = 201;
    double separation_factor = kDefaultSeparationFactor;
    std::optional<double> c1;                // when set, alpha_L is derived from it
    bool cw_level_set = false;

    /// Re-derives dependent fields after edits: alpha_L from c1 and the cw
    /// level from Omega0/Delta when not given explicitly.
    void finalize() {
        if (c1) medium.alpha_L = alpha_L_for_coupling(*c1, medium.gamma_T, medium.omega0_over_delta);
        if (!cw_level_set) control.cw_level = medium.omega0_over_delta;
        medium.validate();
        grid.validate();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

class LineError {
public:
    LineError(std::string source, std::size_t line) : source_(std::move(source)), line_(line) {}
    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(source_ + ":" + std::to_string(line_) + ": " + msg);
    }

private:
    std::string source_;
    std::size_t line_;
};

inline double parse_number(const std::string& text, const LineError& err) {
    const std::string t = trim(text);
    if (t.empty()) err.fail("expected a number");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE) err.fail("invalid number '" + t + "'");
    if (!std::isfinite(v)) err.fail("number must be finite: '" + t + "'");
    return v;
}

inline std::size_t parse_count(const std::string& text, const LineError& err) {
    const double v = parse_number(text, err);
    if (v < 0.0 || v != std::floor(v) || v > 1e9) err.fail("expected a non-negative integer, got '" + text + "'");
    return static_cast<std::size_t>(v);
}

inline bool parse_bool(const std::string& text, const LineError& err) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    err.fail("expected a boolean, got '" + t + "'");
}

inline std::string strip_brackets(const std::string& text, char open, char close, const LineError& err) {
    const std::string t = trim(text);
    if (t.size() < 2 || t.front() != open || t.back() != close) {
        err.fail(std::string("expected a list in ") + open + close);
    }
    return t.substr(1, t.size() - 2);
}

inline std::vector<double> parse_list(const std::string& text, const LineError& err) {
    const std::string body = trim(strip_brackets(text, '[', ']', err));
    std::vector<double> out;
    if (body.empty()) return out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(item, err));
    return out;
}

inline std::vector<ReadoutPulse> parse_readout(const std::string& text, const LineError& err) {
    const std::string body = trim(strip_brackets(text, '[', ']', err));
    std::vector<ReadoutPulse> out;
    std::size_t pos = 0;
    while (pos < body.size()) {
        const auto open = body.find('(', pos);
        if (open == std::string::npos) {
            if (!trim(body.substr(pos)).empty()) err.fail("readout entries must be (tau, T, amp) tuples");
            break;
        }
        const std::string gap = trim(body.substr(pos, open - pos));
        if (!(gap.empty() || gap == ",")) err.fail("unexpected text '" + gap + "' in readout list");
        const auto close = body.find(')', open);
        if (close == std::string::npos) err.fail("unterminated readout tuple");
        const auto v = parse_list("[" + body.substr(open + 1, close - open - 1) + "]", err);
        if (v.size() != 3) err.fail("readout tuple needs exactly three values (tau, T, amp)");
        out.push_back({v[0], v[1], v[2]});
        pos = close + 1;
    }
    return out;
}

}  // namespace detail

/// Applies key = value lines on top of `base`. Unknown or repeated keys and
/// malformed values throw ConfigError with "source:line: message".
inline RunConfig apply_config_text(const std::string& text, RunConfig base, const std::string& source = "config") {
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    std::set<std::string> seen;
    std::optional<double> switch_tau0, switch_T0;
    bool alpha_given = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const detail::LineError err(source, line_no);
        const auto hash = raw.find('#');
        const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) err.fail("expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty()) err.fail("empty key");
        if (!seen.insert(key).second) err.fail("duplicate key '" + key + "'");
        auto num = [&] { return detail::parse_number(val, err); };
        auto& m = base.medium;
        if (key == "gamma_T") m.gamma_T = num();
        else if (key == "delta_over_gamma") m.delta_over_gamma = num();
        else if (key == "omega0_over_delta") m.omega0_over_delta = num();
        else if (key == "alpha_L") { m.alpha_L = num(); alpha_given = true; base.c1.reset(); }
        else if (key == "c1") base.c1 = num();
        else if (key == "raman_detuning_T") m.raman_detuning_T = num();
        else if (key == "ct_over_L") m.ct_over_L = num();
        else if (key == "k_L") m.k_L = num();
        else if (key == "gamma0_T") m.gamma0_T = num();
        else if (key == "tau_min") base.grid.tau_min = num();
        else if (key == "tau_max") base.grid.tau_max = num();
        else if (key == "n_tau") base.grid.n_tau = detail::parse_count(val, err);
        else if (key == "z_fractions") base.grid.z_fractions = detail::parse_list(val, err);
        else if (key == "control.cw_level") { base.control.cw_level = num(); base.cw_level_set = true; }
        else if (key == "control.switch_tau0") switch_tau0 = num();
        else if (key == "control.switch_T0") switch_T0 = num();
        else if (key == "control.readout") base.control.readout = detail::parse_readout(val, err);
        else if (key == "control.absorb_stark") base.control.absorb_stark = detail::parse_bool(val, err);
        else if (key == "control.separation_factor") base.separation_factor = num();
        else if (key == "pulse.center") base.pulse.center = num();
        else if (key == "pulse.width") base.pulse.width = num();
        else if (key == "damped") base.damped = detail::parse_bool(val, err);
        else if (key == "dispersion.values") base.dispersion_values = detail::parse_list(val, err);
        else if (key == "area.omega_values") base.area_omega_values = detail::parse_list(val, err);
        else if (key == "oracle.n_zeta") base.oracle_n_zeta = detail::parse_count(val, err);
        else err.fail("unknown key '" + key + "'");
    }
    if (alpha_given && seen.count("c1")) throw ConfigError(source + ": give either alpha_L or c1, not both");
    if (switch_tau0 || switch_T0) {
        SwitchOff so = base.control.switch_off.value_or(SwitchOff{});
        if (switch_tau0) so.tau0 = *switch_tau0;
        if (switch_T0) so.T0 = *switch_T0;
        base.control.switch_off = so;
    }
    try {
        base.finalize();
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return base;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
    return apply_config_text(read_text_file(path), std::move(base), path);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string fmt(double v) {
    if (v == 0.0) v = 0.0;   // drop negative zero so output bytes are stable
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& header) : os_(path, std::ios::binary) {
        if (!os_) throw ConfigError("cannot write " + path.string());
        os_ << header << '\n';
    }
    void row(std::initializer_list<double> values) {
        bool first = true;
        for (double v : values) {
            if (!first) os_ << ',';
            os_ << fmt(v);
            first = false;
        }
        os_ << '\n';
    }
    void raw_row(const std::string& line) { os_ << line << '\n'; }

private:
    std::ofstream os_;
};

inline void write_field_csv(const std::filesystem::path& path, const TimeSeries& ts) {
    CsvWriter w(path, "tau_over_T,re_phi,im_phi,intensity");
    for (std::size_t i = 0; i < ts.tau.size(); ++i) {
        w.row({ts.tau[i], ts.values[i].real(), ts.values[i].imag(), std::norm(ts.values[i])});
    }
}

inline void write_field_csv(const std::filesystem::path& path, const std::vector<double>& tau,
                            const std::vector<cplx>& values) {
    TimeSeries ts;
    ts.tau = tau;
    ts.values = values;
    write_field_csv(path, ts);
}

inline void write_coherence_csv(const std::filesystem::path& path, const TimeSeries& ts) {
    CsvWriter w(path, "tau_over_T,re_coherence,im_coherence");
    for (std::size_t i = 0; i < ts.tau.size(); ++i) w.row({ts.tau[i], ts.values[i].real(), ts.values[i].imag()});
}

inline void write_mode_csv(const std::filesystem::path& path, const std::vector<double>& tau,
                           const std::vector<cplx>& profile) {
    CsvWriter w(path, "tau_over_T,re_phi_i,im_phi_i");
    for (std::size_t i = 0; i < tau.size(); ++i) w.row({tau[i], profile[i].real(), profile[i].imag()});
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(is, line)) throw ConfigError(path + ": empty file");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(detail::trim(cell));
    }
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const detail::LineError err(path, line_no);
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(detail::parse_number(cell, err));
        if (row.size() != t.header.size()) err.fail("column count does not match the header");
        t.rows.push_back(std::move(row));
    }
    return t;
}

struct CompareReport {
    double max_abs = 0.0;
    double l2 = 0.0;          // sqrt(h * sum of squared differences), h from the first column
    double max_rel = 0.0;     // max_abs over the largest |value| in file A
    std::size_t rows = 0;
};

/// Compares every column after the first (the time axis) of two CSV files.
/// Throws ConfigError when headers, lengths or time axes differ.
inline CompareReport compare_tables(const CsvTable& a, const CsvTable& b) {
    if (a.header != b.header) throw ConfigError("compare: headers differ");
    if (a.rows.size() != b.rows.size()) throw ConfigError("compare: row counts differ");
    CompareReport r;
    r.rows = a.rows.size();
    double scale = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const double ta = a.rows[i][0], tb = b.rows[i][0];
        if (std::fabs(ta - tb) > 1e-9 * std::max(1.0, std::fabs(ta))) {
            throw ConfigError("compare: grids differ at row " + std::to_string(i + 1));
        }
        for (std::size_t j = 1; j < a.header.size(); ++j) {
            const double d = std::fabs(a.rows[i][j] - b.rows[i][j]);
            r.max_abs = std::max(r.max_abs, d);
            scale = std::max(scale, std::fabs(a.rows[i][j]));
            sum2 += d * d;
        }
    }
    const double h = a.rows.size() > 1 ? std::fabs(a.rows[1][0] - a.rows[0][0]) : 1.0;
    r.l2 = std::sqrt(h * sum2);
    r.max_rel = scale > 0.0 ? r.max_abs / scale : r.max_abs;
    return r;
}

inline CompareReport compare_files(const std::string& a, const std::string& b) {
    return compare_tables(read_csv(a), read_csv(b));
}

}  // namespace zeropi
