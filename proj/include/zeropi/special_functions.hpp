#pragma once

// Bessel functions of the first kind (orders 0, 1, 2), the regularized
// propagation kernels built from them, and the quadrature drivers used by
// every integral in the library.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace zeropi {

namespace detail {

/// Below this argument the power series is summed in extended precision,
/// above it the Hankel asymptotic expansion is used.
inline constexpr double kSeriesCrossover = 17.0;

/// Sum_k (-1)^k (x/2)^(2k) / (k! (k+n)!)  -- i.e. J_n(x) / (x/2)^n.
inline long double bessel_series_scaled(int n, long double x) {
    const long double q = 0.25L * x * x;
    long double nfact = 1.0L;
    for (int k = 2; k <= n; ++k) nfact *= k;
    long double term = 1.0L / nfact;
    long double sum = term;
    for (int k = 1; k < 200; ++k) {
        term *= -q / (static_cast<long double>(k) * static_cast<long double>(k + n));
        sum += term;
        if (std::fabs(term) < 1e-22L * std::fabs(sum) && k > 2) break;
    }
    return sum;
}

inline long double bessel_hankel(int n, long double x) {
    const long double mu = 4.0L * n * n;
    const long double eight_x = 8.0L * x;
    long double p = 1.0L;
    long double q = 0.0L;
    long double term = 1.0L;
    long double prev = 1e300L;
    for (int k = 1; k < 60; ++k) {
        const long double odd = 2.0L * k - 1.0L;
        term *= (mu - odd * odd) / (static_cast<long double>(k) * eight_x);
        const long double mag = std::fabs(term);
        if (mag > prev) break;  // asymptotic series starts diverging
        prev = mag;
        switch (k % 4) {
            case 1: q += term; break;
            case 2: p -= term; break;
            case 3: q -= term; break;
            default: p += term; break;
        }
        if (mag < 1e-20L) break;
    }
    const long double chi =
        x - (0.5L * n + 0.25L) * std::numbers::pi_v<long double>;
    return std::sqrt(2.0L / (std::numbers::pi_v<long double> * x)) *
           (p * std::cos(chi) - q * std::sin(chi));
}

inline void require_bessel_arg(double x) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
        throw std::domain_error("bessel: argument must be finite and >= 0");
    }
}

inline double bessel_jn(int n, double x) {
    require_bessel_arg(x);
    if (x < kSeriesCrossover) {
        const long double xl = x;
        long double scale = 1.0L;
        for (int k = 0; k < n; ++k) scale *= 0.5L * xl;
        return static_cast<double>(scale * bessel_series_scaled(n, xl));
    }
    return static_cast<double>(bessel_hankel(n, x));
}

}  // namespace detail

inline double bessel_j0(double x) { return detail::bessel_jn(0, x); }
inline double bessel_j1(double x) { return detail::bessel_jn(1, x); }
inline double bessel_j2(double x) { return detail::bessel_jn(2, x); }

/// J1(x)/x with the removable singularity resolved; K1(0) = 1/2 exactly.
inline double kernel_k1(double x) {
    if (!(x >= 0.0)) throw std::domain_error("kernel_k1: argument must be >= 0");
    if (x < detail::kSeriesCrossover) {
        const long double xl = x;
        return static_cast<double>(0.5L * detail::bessel_series_scaled(1, xl));
    }
    return static_cast<double>(detail::bessel_hankel(1, x) / x);
}

/// 2 J1(x)/x - J2(x), the bracket of the atomic-coherence kernel. Equals 1 at 0.
inline double kernel_retrieval(double x) {
    if (!(x >= 0.0)) throw std::domain_error("kernel_retrieval: argument must be >= 0");
    if (x < detail::kSeriesCrossover) {
        const long double xl = x;
        const long double k1 = 0.5L * detail::bessel_series_scaled(1, xl);
        const long double j2 = 0.25L * xl * xl * detail::bessel_series_scaled(2, xl);
        return static_cast<double>(2.0L * k1 - j2);
    }
    const long double xl = x;
    return static_cast<double>(2.0L * detail::bessel_hankel(1, xl) / xl -
                               detail::bessel_hankel(2, xl));
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

template <class T>
struct QuadratureResult {
    T value{};
    double error = 0.0;
    bool converged = true;
};

/// Composite Simpson weight of sample j when integrating samples [0, last]
/// on a uniform grid of unit spacing. An odd number of intervals closes with
/// the 3/8 rule on the final three.
inline double simpson_weight(std::size_t j, std::size_t last) {
    if (last == 0) return 0.0;
    if (last == 1) return 0.5;
    const bool odd = (last % 2) == 1;
    const std::size_t simpson_end = odd ? last - 3 : last;
    if (odd && j >= simpson_end) {
        const std::size_t local = j - simpson_end;
        double w = (local == 0 || local == 3) ? 3.0 / 8.0 : 9.0 / 8.0;
        if (local == 0 && simpson_end > 0) w += 1.0 / 3.0;
        return w;
    }
    if (j == 0 || j == simpson_end) return 1.0 / 3.0;
    return (j % 2 == 1) ? 4.0 / 3.0 : 2.0 / 3.0;
}

/// Full weight vector for samples [0, last] (unit spacing).
inline std::vector<double> simpson_weights(std::size_t last) {
    std::vector<double> w(last + 1);
    for (std::size_t j = 0; j <= last; ++j) w[j] = simpson_weight(j, last);
    return w;
}

/// Integrates uniformly spaced samples with composite Simpson. The error
/// estimate is the Richardson difference against the same rule on every
/// other sample, (S_h - S_2h) / 15, available when the sample count allows a
/// coarse Simpson pass; otherwise it falls back to |S_h - trapezoid|.
template <class T>
QuadratureResult<T> integrate_sampled(std::span<const T> samples, double h) {
    QuadratureResult<T> out;
    const std::size_t n = samples.size();
    if (n < 2) return out;
    const std::size_t last = n - 1;
    T fine{};
    for (std::size_t j = 0; j <= last; ++j) fine += simpson_weight(j, last) * samples[j];
    fine *= h;
    out.value = fine;
    if (last % 4 == 0 && last >= 4) {
        const std::size_t coarse_last = last / 2;
        T coarse{};
        for (std::size_t j = 0; j <= coarse_last; ++j) {
            coarse += simpson_weight(j, coarse_last) * samples[2 * j];
        }
        coarse *= 2.0 * h;
        out.error = std::abs(fine - coarse) / 15.0;
    } else {
        T trap = 0.5 * (samples.front() + samples.back());
        for (std::size_t j = 1; j < last; ++j) trap += samples[j];
        trap *= h;
        out.error = std::abs(fine - trap);
    }
    return out;
}

/// Adaptive driver for a callable integrand: composite Simpson on 2^k
/// panels, doubling until the Richardson estimate drops below
/// rel_tol * |value| (or abs_floor), or max_depth doublings are spent.
/// Non-convergence is reported through the result, never thrown.
template <class F>
auto integrate(F&& f, double a, double b, double rel_tol = 1e-6, int max_depth = 20,
               double abs_floor = 1e-300) {
    using T = decltype(f(a));
    QuadratureResult<T> out;
    if (a == b) return out;
    std::size_t panels = 16;
    std::vector<T> samples(panels + 1);
    double h = (b - a) / static_cast<double>(panels);
    for (std::size_t j = 0; j <= panels; ++j) samples[j] = f(a + h * static_cast<double>(j));
    auto simpson = [&](const std::vector<T>& s, double step) {
        T acc{};
        const std::size_t last = s.size() - 1;
        for (std::size_t j = 0; j <= last; ++j) acc += simpson_weight(j, last) * s[j];
        return acc * step;
    };
    T previous = simpson(samples, h);
    for (int depth = 0; depth < max_depth; ++depth) {
        std::vector<T> refined(2 * panels + 1);
        for (std::size_t j = 0; j <= panels; ++j) refined[2 * j] = samples[j];
        const double hh = 0.5 * h;
        for (std::size_t j = 0; j < panels; ++j) {
            refined[2 * j + 1] = f(a + hh * static_cast<double>(2 * j + 1));
        }
        samples = std::move(refined);
        panels *= 2;
        h = hh;
        const T current = simpson(samples, h);
        const double err = std::abs(current - previous) / 15.0;
        out.value = current + (current - previous) / 15.0;
        out.error = err;
        if (err <= rel_tol * std::abs(current) || err <= abs_floor) {
            out.converged = true;
            return out;
        }
        previous = current;
    }
    out.converged = false;
    return out;
}

}  // namespace zeropi
