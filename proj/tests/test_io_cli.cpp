#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "zeropi/io.hpp"
#include "zeropi/scenarios.hpp"

using namespace zeropi;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
    try {
        apply_config_text(text, RunConfig{}, "cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("zeropi_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream os(p);
    os << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int cli(const std::string& args) {
    const std::string cmd = std::string(ZEROPI_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesEveryKey) {
    const std::string text = R"(# full config
gamma_T = 6
delta_over_gamma = 30
omega0_over_delta = 0.2
alpha_L = 12
raman_detuning_T = -1.5
ct_over_L = 100
k_L = 0.01
gamma0_T = 0.02
tau_min = -4
tau_max = 12   # trailing comment
n_tau = 1601
z_fractions = [0.5, 1]
control.cw_level = 0.1
control.switch_tau0 = -1
control.switch_T0 = 2
control.readout = [(4, 0.5, 0.05), (8, 0.5, -0.05)]
control.absorb_stark = false
control.separation_factor = 1.5
pulse.center = 0.5
pulse.width = 0.8
damped = yes
dispersion.values = [3]
area.omega_values = []
oracle.n_zeta = 301
)";
    const auto rc = apply_config_text(text, RunConfig{});
    EXPECT_EQ(rc.medium.gamma_T, 6.0);
    EXPECT_EQ(rc.medium.delta_over_gamma, 30.0);
    EXPECT_EQ(rc.medium.omega0_over_delta, 0.2);
    EXPECT_EQ(rc.medium.alpha_L, 12.0);
    EXPECT_EQ(rc.medium.raman_detuning_T, -1.5);
    EXPECT_EQ(rc.medium.ct_over_L, 100.0);
    EXPECT_EQ(rc.medium.k_L, 0.01);
    EXPECT_EQ(rc.medium.gamma0_T, 0.02);
    EXPECT_EQ(rc.grid.tau_min, -4.0);
    EXPECT_EQ(rc.grid.tau_max, 12.0);
    EXPECT_EQ(rc.grid.n_tau, 1601u);
    EXPECT_EQ(rc.grid.z_fractions, (std::vector<double>{0.5, 1.0}));
    EXPECT_EQ(rc.control.cw_level, 0.1);
    ASSERT_TRUE(rc.control.switch_off);
    EXPECT_EQ(rc.control.switch_off->tau0, -1.0);
    EXPECT_EQ(rc.control.switch_off->T0, 2.0);
    ASSERT_EQ(rc.control.readout.size(), 2u);
    EXPECT_EQ(rc.control.readout[1].amp, -0.05);
    EXPECT_FALSE(rc.control.absorb_stark);
    EXPECT_EQ(rc.separation_factor, 1.5);
    EXPECT_EQ(rc.pulse.center, 0.5);
    EXPECT_EQ(rc.pulse.width, 0.8);
    EXPECT_TRUE(rc.damped);
    EXPECT_EQ(rc.dispersion_values, std::vector<double>{3.0});
    EXPECT_TRUE(rc.area_omega_values.empty());
    EXPECT_EQ(rc.oracle_n_zeta, 301u);
}

TEST(Config, CouplingKeyFixesDepth) {
    const auto rc = apply_config_text("omega0_over_delta = 0.1\nc1 = 5\n", RunConfig{});
    EXPECT_NEAR(derive_couplings(rc.medium).c1, 5.0, 1e-12);
    EXPECT_EQ(rc.control.cw_level, 0.1);
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_NE(error_of("gamma_T = 1\n\nbogus = 3\n").find("cfg:3: unknown key 'bogus'"), std::string::npos);
    EXPECT_NE(error_of("gamma_T = 1\ngamma_T = 2\n").find("cfg:2: duplicate key"), std::string::npos);
    EXPECT_NE(error_of("alpha_L = 1e\n").find("cfg:1: invalid number"), std::string::npos);
    EXPECT_NE(error_of("n_tau = 10.5\n").find("cfg:1:"), std::string::npos);
    EXPECT_NE(error_of("just text\n").find("cfg:1: expected 'key = value'"), std::string::npos);
    EXPECT_NE(error_of("z_fractions = 0.5, 1\n").find("cfg:1:"), std::string::npos);
    EXPECT_NE(error_of("control.readout = [(1, 2)]\n").find("cfg:1: readout tuple"), std::string::npos);
    EXPECT_NE(error_of("damped = maybe\n").find("cfg:1: expected a boolean"), std::string::npos);
    EXPECT_NE(error_of("alpha_L = 1\nc1 = 2\n").find("either alpha_L or c1"), std::string::npos);
    EXPECT_NE(error_of("alpha_L = -2\n").find("alpha_L must be >= 0"), std::string::npos);
    EXPECT_NE(error_of("tau_max = -10\n").find("tau_max must exceed"), std::string::npos);
}

TEST(Csv, FormatIsStable) {
    EXPECT_EQ(fmt(-0.0), "0");
    EXPECT_EQ(fmt(0.1), "0.1");
    EXPECT_EQ(fmt(1.0 / 3.0), "0.333333333333");
}

TEST(Csv, RoundTripAndCompare) {
    const auto dir = scratch("csv");
    SimulationGrid g{-3.0, 3.0, 61, {}};
    TimeSeries ts{0.0, g.taus(), InputPulse::gaussian().sample(g)};
    write_field_csv(dir / "a.csv", ts);
    write_field_csv(dir / "b.csv", ts);
    const auto t = read_csv((dir / "a.csv").string());
    EXPECT_EQ(t.header, (std::vector<std::string>{"tau_over_T", "re_phi", "im_phi", "intensity"}));
    ASSERT_EQ(t.rows.size(), 61u);
    EXPECT_NEAR(t.rows[30][1], ts.values[30].real(), 1e-12);
    const auto same = compare_files((dir / "a.csv").string(), (dir / "b.csv").string());
    EXPECT_EQ(same.max_abs, 0.0);
    EXPECT_EQ(same.l2, 0.0);

    ts.values[10] += 0.5;
    write_field_csv(dir / "c.csv", ts);
    const auto diff = compare_files((dir / "a.csv").string(), (dir / "c.csv").string());
    EXPECT_GT(diff.max_abs, 0.4);

    SimulationGrid shifted{-2.0, 4.0, 61, {}};
    write_field_csv(dir / "d.csv", TimeSeries{0.0, shifted.taus(), ts.values});
    EXPECT_THROW(compare_files((dir / "a.csv").string(), (dir / "d.csv").string()), ConfigError);
    write_coherence_csv(dir / "e.csv", ts);
    EXPECT_THROW(compare_files((dir / "a.csv").string(), (dir / "e.csv").string()), ConfigError);
}

TEST(Scenarios, DefaultsValidate) {
    for (const auto& name : scenario_names()) EXPECT_NO_THROW(scenario_defaults(name)) << name;
    EXPECT_THROW(scenario_defaults("nope"), ConfigError);
    EXPECT_NEAR(derive_couplings(scenario_defaults("fig2_ringing").medium).c1, 5.0, 1e-12);
    EXPECT_NEAR(derive_couplings(scenario_defaults("fig3_intensity").medium).c1, 0.125, 1e-12);
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch("cli");
    write_file(dir / "bad.cfg", "gamma_T = 7.2\nwhat = 1\n");
    EXPECT_EQ(cli("propagate --config " + (dir / "bad.cfg").string() + " --out " + (dir / "o1").string()), 2);
    EXPECT_EQ(cli("run not_a_scenario --out " + (dir / "o2").string()), 2);
    EXPECT_EQ(cli("propagate --out " + (dir / "o3").string()), 2);   // --config is required

    write_file(dir / "ok.cfg", "c1 = 1\ntau_min = -5\ntau_max = 10\nn_tau = 1501\nz_fractions = [0.5, 1]\n");
    EXPECT_EQ(cli("propagate --config " + (dir / "ok.cfg").string() + " --out " + (dir / "p").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "p" / "field_zeta_1.csv"));
    EXPECT_TRUE(fs::exists(dir / "p" / "coherence_zeta_0.5.csv"));
    EXPECT_TRUE(fs::exists(dir / "p" / "summary.json"));

    const auto f1 = (dir / "p" / "field_zeta_1.csv").string();
    const auto f2 = (dir / "p" / "field_zeta_0.5.csv").string();
    EXPECT_EQ(cli("compare " + f1 + " " + f1), 0);
    EXPECT_EQ(cli("compare " + f1 + " " + f2 + " --tol 1e-12"), 1);
    EXPECT_EQ(cli("compare " + f1 + " " + f2 + " --tol 10 --norm l2"), 0);

    write_file(dir / "blowup.cfg", "alpha_L = 1e308\ntau_min = -5\ntau_max = 5\nn_tau = 1001\noracle.n_zeta = 101\n");
    EXPECT_EQ(cli("oracle-compare --config " + (dir / "blowup.cfg").string() + " --out " + (dir / "nf").string()), 3);
}

TEST(Cli, CustomScenarioWithoutCouplingReproducesInput) {
    const auto dir = scratch("custom");
    write_file(dir / "c0.cfg", "alpha_L = 0\ntau_min = -5\ntau_max = 5\nn_tau = 1001\n");
    ASSERT_EQ(cli("run custom --config " + (dir / "c0.cfg").string() + " --out " + (dir / "o").string()), 0);
    const auto t = read_csv((dir / "o" / "field_zeta_1.csv").string());
    const SimulationGrid g{-5.0, 5.0, 1001, {}};
    const auto f = InputPulse::gaussian().sample(g);
    for (std::size_t i = 0; i < f.size(); ++i) {
        EXPECT_EQ(fmt(t.rows[i][1]), fmt(f[i].real()));
        EXPECT_EQ(t.rows[i][2], 0.0);
    }
    EXPECT_EQ(cli("run custom --out " + (dir / "o2").string()), 2);   // custom needs a config
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
    const auto dir = scratch("determinism");
    ASSERT_EQ(cli("run fig4_dispersion --out " + (dir / "a").string()), 0);
    ASSERT_EQ(cli("run fig4_dispersion --out " + (dir / "b").string()), 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        ++files;
        EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / e.path().filename())) << e.path();
    }
    EXPECT_EQ(files, 4u);   // three detunings plus summary.json
}
