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
#include "sit2stand/control.hpp"
#include "sit2stand/grf.hpp"

using namespace sit2stand;

namespace {

struct Runs {
    Scenario sc;
    AnthropometricModel m;
    EpisodeLog control, assisted;
};

const Runs& reference_runs()
{
    static const Runs r = [] {
        Runs x;
        x.m = x.sc.model();
        x.control = run_episode(x.m, x.sc, false);
        x.assisted = run_episode(x.m, x.sc, true);
        return x;
    }();
    return r;
}

PoseTrajectory hold_pose(const JointAngles& q, double t0, double duration, double rate = 100.0)
{
    PoseTrajectory w;
    for (int i = 0; i <= static_cast<int>(std::lround(duration * rate)); ++i) {
        w.timestamps.push_back(t0 + i / rate);
        w.frames.push_back(q);
    }
    return differentiate(w);
}

JointAngles seated_pose()
{
    JointAngles q;
    q.ankle = std::numbers::pi - 0.1745;
    q.knee = 0.5 * std::numbers::pi;
    q.trunk_abs = 0.0;
    q.hip = q.chain_hip();
    return q;
}

} // namespace

TEST(Plant, FirstOrderStepReaches63PercentAtTimeConstant)
{
    const PlantConfig cfg;
    PlantState s;
    CaneCommand c;
    c.setpoint = cfg.max_pressure;
    const double dt = 0.001;
    const int steps = static_cast<int>(std::lround(cfg.time_constant / dt));
    for (int i = 0; i < steps; ++i) s = plant_step(s, c, dt, cfg);
    const double frac = s.pressure / cfg.max_pressure;
    EXPECT_NEAR(frac, 1.0 - std::exp(-1.0), 0.01);
    EXPECT_NEAR(s.axial_force, s.pressure * cfg.area(), 0.0);
}

TEST(Plant, SetpointAtCurrentPressureIsAFixedPoint)
{
    PlantState s;
    s.pressure = 0.31e6;
    s.axial_force = s.pressure * PlantConfig{}.area();
    CaneCommand c;
    c.setpoint = s.pressure;
    const auto n = plant_step(s, c, 0.01);
    EXPECT_EQ(n.pressure, s.pressure);
    EXPECT_EQ(n.axial_force, s.axial_force);
    EXPECT_EQ(n.stroke, s.stroke);
}

TEST(Plant, StrokeIsPinnedAndFlagged)
{
    const auto n = plant_step(PlantState{}, CaneCommand{}, 0.01, {}, 0.7);
    EXPECT_EQ(n.stroke, 0.5);
    EXPECT_TRUE(n.stroke_saturated);
    const auto m = plant_step(n, CaneCommand{}, 0.01, {}, 0.2);
    EXPECT_EQ(m.stroke, 0.2);
    EXPECT_FALSE(m.stroke_saturated);
    EXPECT_EQ(plant_step(n, CaneCommand{}, 0.01, {}, -0.1).stroke, 0.0);
}

TEST(Plant, RejectsBadTimeStep)
{
    EXPECT_THROW(plant_step(PlantState{}, CaneCommand{}, 0.0), ValidationError);
    EXPECT_THROW(plant_step(PlantState{}, CaneCommand{}, 0.06), ValidationError);
    CaneController c({}, {});
    EXPECT_THROW(c.step(PlantState{}, 100.0, -1.0), ValidationError);
}

TEST(Plant, PhysicalLimitsHoldUnderRandomCommands)
{
    oracle::Gen gen(55);
    const PlantConfig cfg;
    PlantState s;
    for (int i = 0; i < 10000; ++i) {
        CaneCommand c;
        c.setpoint = gen.uniform(-1e6, 2e6);
        s = plant_step(s, c, gen.uniform(1e-4, 0.05), cfg, gen.uniform(-0.3, 0.9));
        ASSERT_GE(s.pressure, 0.0);
        ASSERT_LE(s.pressure, cfg.max_pressure);
        ASSERT_GE(s.stroke, 0.0);
        ASSERT_LE(s.stroke, cfg.max_stroke);
        ASSERT_EQ(s.axial_force, s.pressure * cfg.area());
    }
}

TEST(Controller, ZeroErrorHoldsPressure)
{
    const PlantConfig plant;
    CaneController c({}, plant);
    PlantState s;
    s.pressure = 0.4e6;
    s.axial_force = s.pressure * plant.area();
    const auto cmd = c.step(s, s.axial_force, 0.01);
    EXPECT_NEAR(cmd.setpoint, s.pressure, 1e-9 * s.pressure);
    EXPECT_FALSE(cmd.saturated);
    EXPECT_EQ(c.integral(), 0.0);
}

TEST(Controller, LargeDemandSaturatesAtCylinderLimit)
{
    const PlantConfig plant;
    EXPECT_NEAR(plant.max_force(), std::numbers::pi * 0.016 * 0.016 * 0.8e6, 1e-9);
    EXPECT_NEAR(plant.max_force(), 643.4, 0.05);
    CaneController c({}, plant);
    PlantState s;
    for (int i = 0; i < 300; ++i) {
        const auto cmd = c.step(s, 1000.0, 0.01);
        EXPECT_LE(cmd.setpoint, plant.max_pressure);
        EXPECT_TRUE(cmd.saturated);
        s = plant_step(s, cmd, 0.01, plant);
    }
    EXPECT_NEAR(s.axial_force, 643.4, 0.5);
    // Anti-windup: the integral stayed bounded while clamped.
    EXPECT_LT(c.integral(), 1000.0 * 0.01 * 5);
}

TEST(Controller, ZeroGainRelaxesMonotonically)
{
    ControllerConfig cfg;
    cfg.kp = 0;
    cfg.ki = 0;
    const PlantConfig plant;
    CaneController c(cfg, plant);
    PlantState s;
    s.pressure = 0.7e6;
    s.axial_force = s.pressure * plant.area();
    const double desired = 150.0;
    double prev_gap = std::abs(s.axial_force - desired);
    double setpoint = -1;
    for (int i = 0; i < 200; ++i) {
        const auto cmd = c.step(s, desired, 0.01);
        if (setpoint >= 0) {
            ASSERT_EQ(cmd.setpoint, setpoint);
        }
        setpoint = cmd.setpoint;
        s = plant_step(s, cmd, 0.01, plant);
        const double gap = std::abs(s.axial_force - desired);
        ASSERT_LE(gap, prev_gap);
        ASSERT_GE(s.axial_force, desired - 1e-9);
        prev_gap = gap;
    }
    EXPECT_LT(prev_gap, 1e-6);
}

TEST(Controller, DesiredForceSchedule)
{
    const ControllerConfig cfg;
    const double bw = 800;
    EXPECT_EQ(desired_cane_force(cfg, bw, 1.0, std::nullopt, 0.0), 0.0);
    EXPECT_NEAR(desired_cane_force(cfg, bw, 5.0, 0.0, 0.0), 0.52 * bw, 1e-12);
    EXPECT_EQ(desired_cane_force(cfg, bw, 5.0, 0.0, 0.9), 0.0);
    auto capped = cfg;
    capped.max_force = 100.0;
    EXPECT_EQ(desired_cane_force(capped, bw, 5.0, 0.0, 0.0), 100.0);
}

TEST(Intent, SeatedStillWindowGivesNoEvent)
{
    WindowedIntent wi;
    EXPECT_FALSE(wi.detect_intent(hold_pose(seated_pose(), 0.0, 1.0)));
    EXPECT_FALSE(wi.detect_intent(hold_pose(seated_pose(), 1.0, 1.0)));
}

TEST(Intent, ShortWindowGivesNoEvent)
{
    WindowedIntent wi;
    EXPECT_FALSE(wi.detect_intent(hold_pose(JointAngles{}, 0.0, 0.4)));
}

TEST(Intent, OnsetNearFlexionPhaseStart)
{
    const auto& r = reference_runs();
    const auto traj = generate_sts_trajectory(r.m, r.sc.timings, 100.0, r.sc.profile);
    PoseTrajectory prefix;
    for (std::size_t i = 0; i < traj.size() && traj.timestamps[i] <= r.sc.timings.flexion + 1e-9; ++i) {
        prefix.timestamps.push_back(traj.timestamps[i]);
        prefix.frames.push_back(traj.frames[i]);
        prefix.velocities.push_back(traj.velocities[i]);
        prefix.accelerations.push_back(traj.accelerations[i]);
    }
    WindowedIntent wi;
    const auto ev = wi.detect_intent(prefix);
    ASSERT_TRUE(ev);
    EXPECT_EQ(ev->kind, IntentKind::sts_onset);
    EXPECT_LE(ev->timestamp, 0.3);
    EXPECT_GE(ev->detected_at - ev->timestamp, ControllerConfig{}.onset_sustain - 1e-9);
}

TEST(Intent, StandingStillCompletesOnce)
{
    WindowedIntent wi;
    const auto first = wi.detect_intent(hold_pose(JointAngles{}, 0.0, 1.0));
    ASSERT_TRUE(first);
    EXPECT_EQ(first->kind, IntentKind::sts_complete);
    for (int k = 1; k < 5; ++k) EXPECT_FALSE(wi.detect_intent(hold_pose(JointAngles{}, k * 1.0, 1.0)));
}

TEST(Intent, SittingBackAborts)
{
    // Trunk flexes to 0.6 rad and returns while the knees stay bent.
    PoseTrajectory w;
    for (int i = 0; i <= 300; ++i) {
        const double t = i / 100.0;
        JointAngles q = seated_pose();
        q.trunk_abs = 0.6 * std::pow(std::sin(std::numbers::pi * std::min(t, 2.0) / 2.0), 2);
        q.hip = q.chain_hip();
        w.timestamps.push_back(t);
        w.frames.push_back(q);
    }
    w = differentiate(w);
    IntentDetector d;
    std::vector<IntentEvent> evs;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (auto e = d.observe(w.timestamps[i], w.frames[i], w.velocities[i])) evs.push_back(*e);
    ASSERT_EQ(evs.size(), 2u);
    EXPECT_EQ(evs[0].kind, IntentKind::sts_onset);
    EXPECT_EQ(evs[1].kind, IntentKind::abort);
    EXPECT_LT(evs[0].detected_at, evs[1].detected_at);
}

TEST(Intent, TimeoutAborts)
{
    ControllerConfig cfg;
    cfg.abort_timeout = 1.0;
    IntentDetector d(cfg);
    JointAngles q = seated_pose(), dq{0.5, 0, 0, 0};
    std::vector<IntentEvent> evs;
    for (int i = 0; i <= 300; ++i) {
        const double t = i / 100.0;
        q.trunk_abs = i < 30 ? 0.005 * i : 0.15;
        if (i >= 30) dq.trunk_abs = 0.0;
        if (auto e = d.observe(t, q, dq)) evs.push_back(*e);
    }
    ASSERT_EQ(evs.size(), 2u);
    EXPECT_EQ(evs[1].kind, IntentKind::abort);
    EXPECT_NEAR(evs[1].detected_at - evs[0].detected_at, 1.01, 1e-9);
}

TEST(Episode, AssistOffMatchesInverseDynamics)
{
    const auto& r = reference_runs();
    const auto traj = generate_sts_trajectory(r.m, r.sc.timings, r.sc.control_rate, r.sc.profile);
    InverseDynamicsOptions opt;
    for (double t : traj.timestamps) opt.seat.emplace_back(0.0, seat_force(r.sc, r.m.body_weight(), t));
    const auto frames = inverse_dynamics(traj, {}, r.m, opt);
    ASSERT_EQ(frames.size(), r.control.rows.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        ASSERT_EQ(r.control.rows[i].cane_fz, 0.0);
        ASSERT_EQ(r.control.rows[i].plant.axial_force, 0.0);
        ASSERT_NEAR(r.control.rows[i].loads.F_g.y(), frames[i].loads.F_g.y(), 1e-9);
        ASSERT_NEAR(r.control.rows[i].loads.tau_knee, frames[i].loads.tau_knee, 1e-9);
    }
    EXPECT_EQ(r.control.cane_work, 0.0);
}

TEST(Episode, PairedRunsShareKinematics)
{
    const auto& r = reference_runs();
    ASSERT_EQ(r.control.rows.size(), r.assisted.rows.size());
    for (std::size_t i = 0; i < r.control.rows.size(); ++i)
        ASSERT_EQ(r.control.rows[i].q.as_array(), r.assisted.rows[i].q.as_array());
}

TEST(Episode, CanePeakNearTargetFraction)
{
    const auto& r = reference_runs();
    double peak = 0;
    for (const auto& row : r.assisted.rows) peak = std::max(peak, row.cane_fz);
    const double frac = peak / r.m.body_weight();
    EXPECT_GE(frac, 0.45);
    EXPECT_LE(frac, 0.60);
}

TEST(Episode, OvershootOnlyWithoutAssistance)
{
    const auto& r = reference_runs();
    const double bw = r.m.body_weight();
    double control_max = 0, assisted_max = 0;
    for (const auto& row : r.control.rows) control_max = std::max(control_max, row.loads.F_g.y());
    for (const auto& row : r.assisted.rows) assisted_max = std::max(assisted_max, row.loads.F_g.y());
    EXPECT_GT(control_max, 1.05 * bw);
    EXPECT_LE(assisted_max, 1.005 * bw);
}

TEST(Episode, TrackingDuringMomentumTransfer)
{
    const auto& r = reference_runs();
    const double target = r.sc.controller.target_fraction * r.m.body_weight();
    const double t0 = r.sc.timings.seat_off(), t1 = t0 + r.sc.timings.liftoff;
    double worst = 0;
    int n = 0;
    for (const auto& row : r.assisted.rows) {
        if (row.t < t0 || row.t > t1) continue;
        worst = std::max(worst, std::abs(row.plant.axial_force - row.command.desired_force));
        ++n;
    }
    ASSERT_GT(n, 10);
    EXPECT_LT(worst / target, 0.05);
}

TEST(Episode, PhysicalLimitsAndEnergy)
{
    const auto& r = reference_runs();
    const PlantConfig& p = r.sc.plant;
    bool saturated = false;
    for (const auto& row : r.assisted.rows) {
        ASSERT_GE(row.plant.pressure, 0.0);
        ASSERT_LE(row.plant.pressure, p.max_pressure);
        ASSERT_GE(row.plant.stroke, 0.0);
        ASSERT_LE(row.plant.stroke, p.max_stroke);
        ASSERT_EQ(row.plant.axial_force, row.plant.pressure * p.area());
        saturated = saturated || row.plant.stroke_saturated;
    }
    EXPECT_TRUE(std::isfinite(r.assisted.cane_work));
    EXPECT_GT(r.assisted.cane_work, 0.0);
    // The reference hip rise exceeds the cylinder travel.
    EXPECT_TRUE(saturated);
}

TEST(Episode, EventsOrdered)
{
    for (const auto* log : {&reference_runs().control, &reference_runs().assisted}) {
        ASSERT_EQ(log->events.size(), 2u);
        EXPECT_EQ(log->events[0].kind, IntentKind::sts_onset);
        EXPECT_EQ(log->events[1].kind, IntentKind::sts_complete);
        EXPECT_LT(log->events[0].detected_at, log->events[1].detected_at);
        EXPECT_LE(log->events[1].timestamp, log->events[1].detected_at);
    }
}

TEST(Episode, Deterministic)
{
    const auto& r = reference_runs();
    std::ostringstream a, b;
    write_episode_csv(a, r.assisted);
    write_episode_csv(b, run_episode(r.m, r.sc, true));
    EXPECT_EQ(a.str(), b.str());
}

TEST(Episode, AssistanceLowersGrfParameters)
{
    const auto& r = reference_runs();
    const auto gc = r.control.grf(), ga = r.assisted.grf();
    const auto ec = detect_events(gc);
    const auto pc = extract_parameters(gc, ec);
    const auto pa = extract_parameters(ga, detect_events(ga));
    EXPECT_LT(pa.F2, pc.F2);
    EXPECT_LT(pa.V1, pc.V1);
    // Unassisted peak falls between seat-off and the end of momentum transfer.
    EXPECT_GT(ec.t_peak, ec.t_liftoff);
    EXPECT_LE(ec.t_peak, r.sc.timings.seat_off() + r.sc.timings.liftoff + 1e-9);
}

TEST(Scenario, ErrorsNameTheLine)
{
    const auto cfg = KeyValueConfig::parse_string("subject.mass = 80\n\nplant.bore = -1\n", "s.cfg");
    try {
        Scenario::from_config(cfg);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("s.cfg:3"), std::string::npos) << e.what();
        EXPECT_EQ(e.field(), "plant.bore");
    }
    EXPECT_THROW(Scenario::from_config(KeyValueConfig::parse_string("plant.colour = red\n")), ValidationError);
    try {
        Scenario::from_config(KeyValueConfig::parse_string("chair.height = 3\n", "c.cfg"));
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("unreachable"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("c.cfg:1"), std::string::npos) << e.what();
    }
}

TEST(Scenario, ResolvedViewRoundTrips)
{
    Scenario s;
    s.controller.kp = 3.5;
    s.subject.sex = Sex::female;
    std::string text;
    for (const auto& [k, v] : s.resolved()) text += k + " = " + v + "\n";
    const auto back = Scenario::from_config(KeyValueConfig::parse_string(text));
    EXPECT_EQ(back.resolved(), s.resolved());
}
