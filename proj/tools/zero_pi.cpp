#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "zeropi/zeropi.hpp"

namespace {

using namespace zeropi;

struct Args {
    std::string config;
    std::string out;
    double tol = 1e-3;
    bool with_losses = false;
    std::string scenario;
    std::string file_a, file_b;
    std::string norm = "max";
};

RunConfig load_or_default(const Args& a) {
    if (a.config.empty()) {
        RunConfig rc;
        rc.finalize();
        return rc;
    }
    return load_config(a.config);
}

int report(const RunReport& rep) {
    for (const auto& w : rep.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    for (const auto& c : rep.checks) {
        std::printf("%s %s value=%s (%s)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), fmt(c.value).c_str(),
                    c.requirement.c_str());
    }
    if (rep.numerical_failure) std::printf("numerical failure, see summary.json\n");
    return rep.exit_code();
}

int run_command(const std::string& cmd, const Args& a) {
    RunOptions ro;
    ro.tol = a.tol;
    ro.with_losses = a.with_losses;
    const std::filesystem::path out(a.out);
    if (cmd == "run") {
        const std::string text = a.config.empty() ? std::string() : read_text_file(a.config);
        return report(run_scenario(a.scenario, out, ro, text, a.config.empty() ? "config" : a.config));
    }
    if (cmd == "compare") {
        const auto r = compare_files(a.file_a, a.file_b);
        const double metric = a.norm == "l2" ? r.l2 : a.norm == "rel" ? r.max_rel : r.max_abs;
        std::printf("rows=%zu max_abs=%s l2=%s max_rel=%s\n", r.rows, fmt(r.max_abs).c_str(), fmt(r.l2).c_str(),
                    fmt(r.max_rel).c_str());
        const bool pass = metric <= a.tol;
        std::printf("%s %s=%s tol=%s\n", pass ? "PASS" : "FAIL", a.norm.c_str(), fmt(metric).c_str(),
                    fmt(a.tol).c_str());
        return pass ? kExitOk : kExitTolerance;
    }
    const RunConfig rc = load_or_default(a);
    RunReport rep;
    if (cmd == "propagate") rep = run_propagate(rc, out);
    else if (cmd == "area-scan") rep = run_area_scan(rc, out);
    else if (cmd == "dispersion-scan") rep = run_dispersion(rc, out);
    else if (cmd == "timebins") rep = run_timebins(rc, out);
    else rep = run_oracle_compare(rc, out, ro, "", true);
    write_summary(out, cmd, rc, rep);
    return report(rep);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single-photon propagation through a far-detuned Raman medium"};
    app.require_subcommand(1);
    Args a;

    auto common = [&](CLI::App* s, bool needs_config) {
        auto* opt = s->add_option("--config", a.config, "key = value configuration file");
        if (needs_config) opt->required();
        s->add_option("--out", a.out, "output directory")->required();
        s->add_option("--tol", a.tol, "tolerance for pass/fail checks")->check(CLI::PositiveNumber);
        s->add_flag("--with-losses", a.with_losses, "include k_L and gamma0 terms in the oracle");
    };
    common(app.add_subcommand("propagate", "field and coherence at each depth"), true);
    common(app.add_subcommand("area-scan", "pulse area against depth"), true);
    common(app.add_subcommand("dispersion-scan", "output shape against two-photon detuning"), true);
    common(app.add_subcommand("timebins", "temporal modes of a readout train"), true);
    common(app.add_subcommand("oracle-compare", "closed form against the PDE integrator"), true);
    auto* run = app.add_subcommand("run", "named scenario with embedded defaults");
    run->add_option("scenario", a.scenario, "scenario name")->required()->check(CLI::IsMember(scenario_names()));
    common(run, false);
    auto* cmp = app.add_subcommand("compare", "max / L2 difference of two CSV files");
    cmp->add_option("file_a", a.file_a)->required();
    cmp->add_option("file_b", a.file_b)->required();
    cmp->add_option("--tol", a.tol, "pass threshold")->check(CLI::NonNegativeNumber);
    cmp->add_option("--norm", a.norm, "max, l2 or rel")->check(CLI::IsMember({"max", "l2", "rel"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        return run_command(app.get_subcommands().front()->get_name(), a);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
}
