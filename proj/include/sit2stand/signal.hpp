// Copyright 2026 The sit2stand Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace sit2stand::signal {

/// Finite-difference weights for derivatives 0..max_order at `x0` from the
/// given nodes (Fornberg 1988). Result is indexed [order][node].
inline std::vector<std::vector<double>> fd_weights(double x0, std::span<const double> nodes,
                                                   int max_order)
{
    const int n = static_cast<int>(nodes.size());
    std::vector<std::vector<double>> c(max_order + 1, std::vector<double>(n, 0.0));
    c[0][0] = 1.0;
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, max_order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

/// First and second derivatives of `y(t)`. Interior points use the 3-point
/// stencil (exact for quadratics on any grid); the two endpoints use a
/// 4-point one-sided stencil. Requires at least 4 samples.
inline void derivatives(std::span<const double> t, std::span<const double> y,
                        std::span<double> dy, std::span<double> ddy)
{
    const std::size_t n = t.size();
    if (n < 4) throw std::invalid_argument("derivatives: need at least 4 samples");
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t lo;
        std::size_t count;
        if (i == 0) {
            lo = 0;
            count = 4;
        } else if (i == n - 1) {
            lo = n - 4;
            count = 4;
        } else {
            lo = i - 1;
            count = 3;
        }
        const auto w = fd_weights(t[i], t.subspan(lo, count), 2);
        double d1 = 0.0, d2 = 0.0;
        for (std::size_t k = 0; k < count; ++k) {
            d1 += w[1][k] * y[lo + k];
            d2 += w[2][k] * y[lo + k];
        }
        dy[i] = d1;
        ddy[i] = d2;
    }
}

/// Second-order Butterworth low-pass, bilinear transform with prewarping.
struct Biquad {
    std::array<double, 3> b{};
    std::array<double, 3> a{}; // a[0] == 1

    static Biquad butterworth_lowpass(double cutoff_hz, double sample_hz)
    {
        if (!(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * sample_hz))
            throw std::invalid_argument("butterworth: cutoff must be in (0, fs/2)");
        const double k = std::tan(std::numbers::pi * cutoff_hz / sample_hz);
        const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k * k);
        Biquad q;
        q.b = {k * k * norm, 2.0 * k * k * norm, k * k * norm};
        q.a = {1.0, 2.0 * (k * k - 1.0) * norm, (1.0 - std::numbers::sqrt2 * k + k * k) * norm};
        return q;
    }

    /// Direct-form II transposed pass, started in the steady state for a
    /// constant input equal to x[0].
    std::vector<double> run(std::span<const double> x) const
    {
        std::vector<double> y(x.size());
        if (x.empty()) return y;
        double z2 = (b[2] - a[2]) * x[0];
        double z1 = (b[1] - a[1]) * x[0] + z2;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double out = b[0] * x[i] + z1;
            z1 = b[1] * x[i] - a[1] * out + z2;
            z2 = b[2] * x[i] - a[2] * out;
            y[i] = out;
        }
        return y;
    }
};

/// Zero-phase (forward-backward) low-pass with odd-reflection padding at both
/// ends. The chord through the end samples is removed before filtering and
/// added back afterwards, so straight lines pass through unchanged. Signals
/// too short to pad are returned unchanged.
inline std::vector<double> filtfilt_lowpass(std::span<const double> x_in, double cutoff_hz,
                                            double sample_hz)
{
    const std::size_t n = x_in.size();
    const std::size_t pad = std::min<std::size_t>(n > 0 ? n - 1 : 0, 15);
    if (n < 4 || pad == 0) return {x_in.begin(), x_in.end()};
    const auto q = Biquad::butterworth_lowpass(cutoff_hz, sample_hz);

    const double x0 = x_in[0];
    const double slope = (x_in[n - 1] - x_in[0]) / static_cast<double>(n - 1);
    auto chord = [&](std::size_t i) { return x0 + slope * static_cast<double>(i); };
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = x_in[i] - chord(i);

    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    auto fwd = q.run(ext);
    std::reverse(fwd.begin(), fwd.end());
    auto bwd = q.run(fwd);
    std::reverse(bwd.begin(), bwd.end());
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = bwd[pad + i] + chord(i);
    return y;
}

/// Piecewise-linear interpolation of (t, y) at `at`; clamps outside the span.
inline double interp_linear(std::span<const double> t, std::span<const double> y, double at)
{
    if (t.empty()) throw std::invalid_argument("interp_linear: empty series");
    if (at <= t.front()) return y.front();
    if (at >= t.back()) return y.back();
    const auto it = std::upper_bound(t.begin(), t.end(), at);
    const std::size_t hi = static_cast<std::size_t>(it - t.begin());
    const std::size_t lo = hi - 1;
    const double w = (at - t[lo]) / (t[hi] - t[lo]);
    return y[lo] + w * (y[hi] - y[lo]);
}

/// Trapezoidal integral of y over [t0, t1], with linear interpolation at
/// window ends that fall between samples.
inline double trapezoid(std::span<const double> t, std::span<const double> y, double t0, double t1)
{
    if (t1 <= t0) return 0.0;
    double sum = 0.0;
    double prev_t = t0;
    double prev_y = interp_linear(t, y, t0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] <= t0) continue;
        if (t[i] >= t1) break;
        sum += 0.5 * (prev_y + y[i]) * (t[i] - prev_t);
        prev_t = t[i];
        prev_y = y[i];
    }
    const double end_y = interp_linear(t, y, t1);
    sum += 0.5 * (prev_y + end_y) * (t1 - prev_t);
    return sum;
}

/// Minimum-jerk (quintic) blend s(x) on [0, 1] with its first two derivatives.
struct MinJerk {
    double s, ds, dds;

    static MinJerk at(double x)
    {
        if (x <= 0.0) return {0.0, 0.0, 0.0};
        if (x >= 1.0) return {1.0, 0.0, 0.0};
        const double x2 = x * x, x3 = x2 * x;
        return {10.0 * x3 - 15.0 * x2 * x2 + 6.0 * x3 * x2,
                30.0 * x2 - 60.0 * x3 + 30.0 * x2 * x2,
                60.0 * x - 180.0 * x2 + 120.0 * x3};
    }
};

} // namespace sit2stand::signal
