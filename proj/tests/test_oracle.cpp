#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "zeropi/oracle_pde.hpp"
#include "zeropi/propagator.hpp"

using namespace zeropi;

namespace {

MediumConfig with_coupling(double c1, double r = 0.1) {
    MediumConfig m;
    m.omega0_over_delta = r;
    m.alpha_L = alpha_L_for_coupling(c1, m.gamma_T, r);
    return m;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST(Oracle, DecoupledMediumPassesInputThrough) {
    MediumConfig m;
    m.alpha_L = 0.0;
    const OracleGrid g{-5.0, 10.0, 1501, 101, 10};
    const auto f = integrate_oracle(m, ControlSchedule::cw(0.1), InputPulse::gaussian(), g);
    const auto in = InputPulse::gaussian().sample({-5.0, 10.0, 1501, {}});
    ASSERT_EQ(f.phi.size(), 11u);
    for (std::size_t r = 0; r < f.phi.size(); ++r) {
        EXPECT_EQ(max_diff(f.phi[r], in), 0.0);
        for (const auto& v : f.s[r]) EXPECT_EQ(v, cplx{});
    }
}

TEST(Oracle, ResolutionGuard) {
    MediumConfig m = with_coupling(1.0);
    EXPECT_THROW(integrate_oracle(m, ControlSchedule::cw(0.1), InputPulse::gaussian(), {-5.0, 10.0, 751, 101, 0}),
                 ConfigError);
    EXPECT_THROW(integrate_oracle(m, ControlSchedule::cw(0.1), InputPulse::gaussian(), {-5.0, 10.0, 1501, 51, 0}),
                 ConfigError);
    m.raman_detuning_T = 20.0;   // needs dtau <= 1/200
    EXPECT_THROW(integrate_oracle(m, ControlSchedule::cw(0.1), InputPulse::gaussian(), {-5.0, 10.0, 1501, 101, 0}),
                 ConfigError);
}

TEST(Oracle, OverflowIsReportedAsNumericalFailure) {
    MediumConfig m;
    m.alpha_L = 1e308;
    EXPECT_THROW(integrate_oracle(m, ControlSchedule::cw(0.1), InputPulse::gaussian(), {-5.0, 5.0, 1001, 101, 0}),
                 NumericalError);
}

TEST(Oracle, AgreesWithClosedForm) {
    const auto m = with_coupling(2.0);
    const SimulationGrid sg{-5.0, 20.0, 2501, {}};
    const auto kernel = propagate_field(m, ControlSchedule::cw(0.1), InputPulse::gaussian(), sg, 1.0);
    const auto f = integrate_oracle(m, ControlSchedule::cw(0.1), InputPulse::gaussian(), {-5.0, 20.0, 2501, 201, 0});
    EXPECT_LT(max_diff(kernel.values, f.output()), 1e-3 * std::pow(2.0 / std::numbers::pi, 0.25));
}

TEST(Oracle, AgreesWithClosedFormUnderDetuningAndStorage) {
    auto m = with_coupling(1.25, 0.05);
    auto s = ControlSchedule::cw(0.05);
    s.switch_off = SwitchOff{-1.5, 1.5};
    s.readout = {{4.0, 0.7071067811865476, 0.08}};
    m.raman_detuning_T = 1.5;
    const SimulationGrid sg{-5.0, 8.0, 1301, {}};
    const auto kernel = propagate_field(m, s, InputPulse::gaussian(), sg, 1.0);
    const auto f = integrate_oracle(m, s, InputPulse::gaussian(), {-5.0, 8.0, 1301, 101, 0});
    EXPECT_LT(max_diff(kernel.values, f.output()), 1e-3 * std::pow(2.0 / std::numbers::pi, 0.25));
}

TEST(Oracle, LossesMatchDampedKernelTimesAbsorption) {
    auto m = with_coupling(1.0);
    m.k_L = 0.3;
    const SimulationGrid sg{-5.0, 20.0, 2501, {}};
    PropagationOptions opt;
    opt.damped = true;
    auto kernel = propagate_field(m, ControlSchedule::cw(0.1), InputPulse::gaussian(), sg, 1.0, opt);
    for (auto& v : kernel.values) v *= std::exp(-m.k_L);
    const auto f =
        integrate_oracle(m, ControlSchedule::cw(0.1), InputPulse::gaussian(), {-5.0, 20.0, 2501, 201, 0}, {true});
    EXPECT_LT(max_diff(kernel.values, f.output()), 1e-3 * std::pow(2.0 / std::numbers::pi, 0.25));
}

TEST(Oracle, ImaginaryCoherenceAtResonance) {
    const auto f = integrate_oracle(with_coupling(3.0), ControlSchedule::cw(0.1), InputPulse::gaussian(),
                                    {-5.0, 15.0, 2001, 101, 0});
    double re = 0.0, im = 0.0;
    for (const auto& v : f.s.back()) {
        re = std::max(re, std::fabs(v.real()));
        im = std::max(im, std::fabs(v.imag()));
    }
    EXPECT_LT(re, 1e-8 * im);
}

TEST(Oracle, LosslessPhotonBudget) {
    // Photons leaving through the window end plus excitation left in the
    // medium at the window end account for the input photon.
    const double c1 = 1.0;
    const OracleGrid g{-5.0, 20.0, 2501, 801, 0};
    const auto f = integrate_oracle(with_coupling(c1), ControlSchedule::cw(0.1), InputPulse::gaussian(), g);
    std::vector<double> out(f.tau.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::norm(f.output()[i]);
    std::vector<double> edge(f.s_edge.size());
    for (std::size_t k = 0; k < edge.size(); ++k) edge[k] = std::norm(f.s_edge[k]);
    const double n_out = integrate_sampled<double>(out, g.dtau()).value;
    const double left = integrate_sampled<double>(edge, g.dzeta()).value;
    EXPECT_NEAR(n_out + left, 1.0, 0.01);
}

TEST(Oracle, SecondOrderSelfConvergence) {
    const auto t = convergence_study(with_coupling(2.0), ControlSchedule::cw(0.1), InputPulse::gaussian(),
                                     {-5.0, 15.0, 2001, 101, 0}, 3);
    ASSERT_EQ(t.rows.size(), 3u);
    EXPECT_TRUE(t.monotone);
    EXPECT_FALSE(t.exact);
    EXPECT_NEAR(t.observed_order, 2.0, 0.3);
    EXPECT_GT(t.rows[0].error, t.rows[2].error);
}

TEST(Oracle, DecoupledConvergenceIsExact) {
    MediumConfig m;
    m.alpha_L = 0.0;
    const auto t = convergence_study(m, ControlSchedule::cw(0.1), InputPulse::gaussian(), {-5.0, 5.0, 1001, 101, 0});
    EXPECT_TRUE(t.exact);
    EXPECT_THROW(convergence_study(m, ControlSchedule::cw(0.1), InputPulse::gaussian(), {-5.0, 5.0, 1001, 101, 0}, 2),
                 ConfigError);
}

TEST(Oracle, DumpLayout) {
    const OracleGrid g{-5.0, 5.0, 1001, 101, 50};
    const auto f = integrate_oracle(with_coupling(1.0), ControlSchedule::cw(0.1), InputPulse::gaussian(), g);
    const auto path = std::filesystem::temp_directory_path() / "zeropi_dump_test.bin";
    write_oracle_dump(path.string(), f);
    std::ifstream is(path, std::ios::binary);
    auto u64 = [&] {
        unsigned char b[8];
        is.read(reinterpret_cast<char*>(b), 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    };
    const auto rows = u64();
    const auto cols = u64();
    EXPECT_EQ(rows, 3u);   // zeta = 0, 0.5, 1
    EXPECT_EQ(cols, 1001u);
    EXPECT_EQ(std::filesystem::file_size(path), 16u + 2u * rows * cols * 16u);
    // Last phi row, sample 500 (tau = 0).
    is.seekg(16 + static_cast<std::streamoff>(((rows - 1) * cols + 500) * 16));
    const double re = std::bit_cast<double>(u64());
    const double im = std::bit_cast<double>(u64());
    EXPECT_EQ(re, f.output()[500].real());
    EXPECT_EQ(im, f.output()[500].imag());
    std::filesystem::remove(path);
}
