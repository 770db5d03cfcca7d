#pragma once

// Small helpers over sampled real signals: local maxima, moments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "zeropi/special_functions.hpp"

namespace zeropi {

/// Indices of strict-left / non-strict-right local maxima whose value exceeds
/// rel_floor * max(y). End points are never reported.
inline std::vector<std::size_t> local_maxima(std::span<const double> y, double rel_floor = 0.0) {
    std::vector<std::size_t> idx;
    if (y.size() < 3) return idx;
    const double peak = *std::max_element(y.begin(), y.end());
    const double floor = rel_floor * peak;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > floor) idx.push_back(i);
    }
    return idx;
}

struct Moments {
    double norm = 0.0;      // int y
    double centroid = 0.0;  // int t y / int y
    double variance = 0.0;  // int (t - centroid)^2 y / int y
};

inline Moments moments(std::span<const double> t, std::span<const double> y) {
    Moments m;
    if (t.size() < 2) return m;
    const double h = t[1] - t[0];
    std::vector<double> buf(y.begin(), y.end());
    m.norm = integrate_sampled<double>(buf, h).value;
    if (m.norm == 0.0) return m;
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = t[i] * y[i];
    m.centroid = integrate_sampled<double>(buf, h).value / m.norm;
    for (std::size_t i = 0; i < buf.size(); ++i) {
        const double d = t[i] - m.centroid;
        buf[i] = d * d * y[i];
    }
    m.variance = integrate_sampled<double>(buf, h).value / m.norm;
    return m;
}

}  // namespace zeropi
