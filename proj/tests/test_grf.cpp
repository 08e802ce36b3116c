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

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sit2stand/grf.hpp"

using namespace sit2stand;

namespace {

// Piecewise-linear force: 500 N to 0.4 s, 600 N at lift-off (0.5 s), 900 N
// peak at 0.8 s, 866 N (body weight) from 1.5 s. Seat load drops to zero at
// lift-off.
double fixture_force(double t)
{
    if (t <= 0.4) return 500.0;
    if (t <= 0.5) return 500.0 + 1000.0 * (t - 0.4);
    if (t <= 0.8) return 600.0 + 1000.0 * (t - 0.5);
    if (t <= 1.5) return 900.0 - 34.0 * (t - 0.8) / 0.7;
    return 866.0;
}

GrfProfile fixture(double rate = 1000.0, double duration = 2.5)
{
    GrfProfile g;
    g.body_weight = 866.0;
    std::vector<double> seat;
    const int n = static_cast<int>(std::lround(duration * rate));
    for (int i = 0; i <= n; ++i) {
        const double t = i / rate;
        g.t.push_back(t);
        g.fz.push_back(fixture_force(t));
        seat.push_back(t < 0.5 ? 366.0 : 0.0);
    }
    g.seat_fz = seat;
    return g;
}

// First grid time after the peak from which the force stays inside the band.
double oracle_end(const GrfProfile& g, double band)
{
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.t[i] > 0.8 && std::abs(fixture_force(g.t[i]) - 866.0) <= band * 866.0) return g.t[i];
    return NAN;
}

} // namespace

TEST(Grf, LiftoffAtSeatThresholdCrossing)
{
    const auto ev = detect_events(fixture());
    EXPECT_EQ(ev.t_start, 0.0);
    EXPECT_NEAR(ev.t_liftoff, 0.5, 1e-12);
    EXPECT_NEAR(ev.t_peak, 0.8, 1e-12);
    EXPECT_NEAR(ev.t_end, oracle_end(fixture(), 0.02), 1e-12);
}

TEST(Grf, PiecewiseLinearFixtureDefaultBand)
{
    const auto g = fixture();
    const auto p = extract_parameters(g, detect_events(g));
    const double te = oracle_end(g, 0.02);
    EXPECT_NEAR(p.F1, 600.0, 1e-9);
    EXPECT_NEAR(p.F2, 900.0, 1e-9);
    EXPECT_NEAR(p.T1, 0.5, 1e-9);
    EXPECT_NEAR(p.T2, 0.3, 1e-9);
    EXPECT_NEAR(p.T3, te - 0.8, 1e-9);
    EXPECT_NEAR(p.P1, 500.0 * 0.4 + 550.0 * 0.1, 1e-9);
    EXPECT_NEAR(p.P2, 225.0, 1e-9);
    EXPECT_NEAR(p.P3, 0.5 * (900.0 + fixture_force(te)) * (te - 0.8), 1e-9);
    EXPECT_NEAR(p.V1, 1000.0, 1e-9);
    EXPECT_NEAR(p.V2, -34.0 / 0.7, 1e-9);
    EXPECT_NEAR(p.F1_pct_bw(), 100.0 * 600.0 / 866.0, 1e-9);
}

TEST(Grf, PiecewiseLinearFixtureTightBandRecoversFullSettle)
{
    const auto g = fixture();
    EventConfig cfg;
    cfg.settle_band = 1e-6;
    const auto p = extract_parameters(g, detect_events(g, cfg));
    EXPECT_NEAR(p.T3, 0.7, 1e-9);
    EXPECT_NEAR(p.P3, 0.5 * (900.0 + 866.0) * 0.7, 1e-9);
    EXPECT_NEAR(p.V2, -34.0 / 0.7, 1e-9);
}

TEST(Grf, ConsistencyIdentities)
{
    for (double band : {0.02, 0.01, 1e-6}) {
        const auto g = fixture();
        EventConfig cfg;
        cfg.settle_band = band;
        const auto ev = detect_events(g, cfg);
        const auto p = extract_parameters(g, ev);
        EXPECT_NEAR(p.T1 + p.T2 + p.T3, ev.t_end - ev.t_start, 1e-12);
        const double total = signal::trapezoid(g.t, g.fz, ev.t_start, ev.t_end);
        EXPECT_NEAR(p.P1 + p.P2 + p.P3, total, 1e-9);
    }
}

TEST(Grf, ConstantWindowImpulse)
{
    GrfProfile g;
    g.body_weight = 700;
    for (int i = 0; i <= 100; ++i) {
        g.t.push_back(i * 0.01);
        g.fz.push_back(700.0);
    }
    EXPECT_NEAR(signal::trapezoid(g.t, g.fz, 0.13, 0.71), 700.0 * 0.58, 1e-9);
}

TEST(Grf, ConstantBodyWeightIsIncomplete)
{
    GrfProfile g;
    g.body_weight = 800.0;
    for (int i = 0; i <= 300; ++i) {
        g.t.push_back(i * 0.01);
        g.fz.push_back(800.0);
    }
    EXPECT_THROW(detect_events(g), IncompleteMovement);
    g.seat_fz = std::vector<double>(g.t.size(), 0.0);
    EXPECT_THROW(detect_events(g), IncompleteMovement);
}

TEST(Grf, FootOnlyLiftoffHeuristic)
{
    auto g = fixture();
    g.seat_fz.reset();
    const auto ev = detect_events(g);
    // Baseline 500 N; threshold 500 + 0.9 * 366 = 829.4 N, crossed on the rise.
    EXPECT_NEAR(ev.t_liftoff, 0.730, 1e-12);
    EXPECT_NEAR(ev.t_peak, 0.8, 1e-12);
}

TEST(Grf, ShortProfileRejected)
{
    GrfProfile g;
    g.body_weight = 800;
    for (int i = 0; i < 50; ++i) {
        g.t.push_back(i * 0.01);
        g.fz.push_back(800);
    }
    EXPECT_THROW(detect_events(g), ValidationError);
}

TEST(Grf, ZeroDurationWindowGivesNan)
{
    const auto g = fixture();
    StsEvents ev{0.0, 0.5, 0.5, 1.5};
    const auto p = extract_parameters(g, ev);
    EXPECT_TRUE(std::isnan(p.V1));
    EXPECT_FALSE(p.notes.empty());
    ev = {0.0, 0.5, 0.8, 0.8};
    EXPECT_TRUE(std::isnan(extract_parameters(g, ev).V2));
    ev = {0.0, 0.9, 0.8, 1.0};
    EXPECT_THROW(extract_parameters(g, ev), ValidationError);
}

TEST(Grf, TimeShiftInvariance)
{
    oracle::Gen gen(31);
    const auto g = fixture();
    const auto base = extract_parameters(g, detect_events(g));
    for (int k = 0; k < 20; ++k) {
        auto s = g;
        const double d = gen.uniform(-5, 50);
        for (auto& t : s.t) t += d;
        const auto p = extract_parameters(s, detect_events(s));
        const auto a = parameter_values(base), b = parameter_values(p);
        for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-6 * std::max(1.0, std::abs(a[i])));
    }
}

TEST(Grf, ForceScaleEquivariance)
{
    oracle::Gen gen(32);
    const auto g = fixture();
    const auto base = extract_parameters(g, detect_events(g));
    for (int k = 0; k < 20; ++k) {
        const double s = gen.uniform(0.3, 3.0);
        auto h = g;
        h.body_weight *= s;
        for (auto& f : h.fz) f *= s;
        for (auto& f : *h.seat_fz) f *= s;
        const auto p = extract_parameters(h, detect_events(h));
        EXPECT_NEAR(p.F1, s * base.F1, 1e-9 * s * base.F1);
        EXPECT_NEAR(p.F2, s * base.F2, 1e-9 * s * base.F2);
        EXPECT_NEAR(p.P1, s * base.P1, 1e-9 * s * base.P1);
        EXPECT_NEAR(p.P3, s * base.P3, 1e-9 * s * base.P3);
        EXPECT_NEAR(p.V1, s * base.V1, 1e-9 * s * std::abs(base.V1));
        EXPECT_NEAR(p.V2, s * base.V2, 1e-9 * s * std::abs(base.V2));
        EXPECT_EQ(p.T1, base.T1);
        EXPECT_EQ(p.T2, base.T2);
        EXPECT_EQ(p.T3, base.T3);
    }
}

TEST(Grf, SampleRateIndependenceOnBandLimitedProfile)
{
    auto make = [](double rate) {
        GrfProfile g;
        g.body_weight = 800.0;
        std::vector<double> seat;
        for (int i = 0; i <= static_cast<int>(std::lround(3.0 * rate)); ++i) {
            const double t = i / rate;
            double f = 800.0;
            if (t < 0.9) f = 400.0 + 400.0 * signal::MinJerk::at(t / 0.9).s;
            else if (t < 2.1) f = 800.0 + 240.0 * std::pow(std::sin(std::numbers::pi * (t - 0.9) / 1.2), 2);
            g.t.push_back(t);
            g.fz.push_back(f);
            seat.push_back(t < 0.9 ? 400.0 * (1.0 - signal::MinJerk::at(t / 0.9).s) + 5.0 : 0.0);
        }
        g.seat_fz = seat;
        return g;
    };
    const auto ref = make(1000.0);
    const auto a = parameter_values(extract_parameters(ref, detect_events(ref)));
    for (double rate : {200.0, 250.0, 500.0}) {
        const auto g = make(rate);
        const auto b = parameter_values(extract_parameters(g, detect_events(g)));
        for (std::size_t i = 0; i < a.size(); ++i)
            EXPECT_LT(std::abs(b[i] - a[i]), 0.01 * std::abs(a[i])) << kParameterNames[i] << " at " << rate << " Hz";
    }
}

TEST(Grf, TrialStatistics)
{
    GrfParameters a, b;
    a.body_weight = b.body_weight = 800;
    a.F2 = 900;
    b.F2 = 1000;
    const std::vector<GrfParameters> two{a, b};
    const auto s = trial_statistics(two);
    EXPECT_NEAR(s["F2"].mean, 950.0, 1e-12);
    EXPECT_NEAR(s["F2"].sd, 70.71067811865476, 1e-9);
    EXPECT_EQ(s.n, 2u);

    const std::vector<GrfParameters> six(6, a);
    const auto s6 = trial_statistics(six);
    for (const auto& st : s6.stats) EXPECT_EQ(st.sd, 0.0);
    EXPECT_EQ(s6.n, 6u);

    const std::vector<GrfParameters> one{a};
    const auto s1 = trial_statistics(one);
    EXPECT_TRUE(s1.single_trial);
    EXPECT_EQ(s1["F2"].mean, 900.0);
    EXPECT_EQ(s1["F2"].sd, 0.0);

    EXPECT_THROW(trial_statistics(std::vector<GrfParameters>{}), ValidationError);
}

TEST(Grf, CsvInputChecks)
{
    std::ostringstream out;
    write_grf_csv(out, fixture());
    {
        std::istringstream in(out.str());
        const auto r = read_grf_csv(in, 0.0, "fixture.csv");
        EXPECT_NEAR(r.profile.body_weight, 866.0, 1e-9);
        EXPECT_TRUE(r.profile.seat_fz.has_value());
    }
    {
        std::istringstream in("t,fz\n0,800\n0.05,800\n0.1,800\n");
        EXPECT_THROW(read_grf_csv(in, 800.0), ValidationError);
    }
    {
        std::istringstream in("t,force\n0,800\n0.005,800\n");
        EXPECT_THROW(read_grf_csv(in, 800.0), ValidationError);
    }
}

TEST(Grf, ParameterTableRoundTrip)
{
    const auto g = fixture();
    const std::vector<GrfParameters> one{extract_parameters(g, detect_events(g))};
    const auto rows = parameter_rows("control", trial_statistics(one));
    std::stringstream ss;
    write_parameter_csv(ss, rows);
    const auto back = read_parameter_csv(ss, "p.csv");
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(back[i].param, rows[i].param);
        EXPECT_EQ(back[i].mean, rows[i].mean);
    }
    std::istringstream bad("param,mean\nF1,2\n");
    EXPECT_THROW(read_parameter_csv(bad, "bad.csv"), ValidationError);
}
