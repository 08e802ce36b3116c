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

// Closed-loop cane assistance: intent detection on the angle stream, a PI
// force controller with feedforward, and a pneumatic cylinder plant.
// The human motion is prescribed; assistance only redistributes support
// between the cane and the feet.

#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "sit2stand/anthro.hpp"
#include "sit2stand/dynamics.hpp"
#include "sit2stand/error.hpp"
#include "sit2stand/grf.hpp"
#include "sit2stand/kinematics.hpp"
#include "sit2stand/signal.hpp"
#include "sit2stand/text.hpp"

namespace sit2stand {

struct PlantConfig {
    double bore_diameter = 0.032;  // m
    double max_pressure = 0.8e6;   // Pa
    double max_stroke = 0.5;       // m
    double time_constant = 0.08;   // s, pressure lag
    double slew_rate = 20e6;       // Pa/s

    double area() const { return std::numbers::pi * 0.25 * bore_diameter * bore_diameter; }
    double max_force() const { return max_pressure * area(); }

    void validate() const
    {
        if (!(bore_diameter > 0)) throw ValidationError("plant.bore must be > 0", "plant.bore");
        if (!(max_pressure > 0))
            throw ValidationError("plant.max_pressure must be > 0", "plant.max_pressure");
        if (!(max_stroke > 0)) throw ValidationError("plant.max_stroke must be > 0", "plant.max_stroke");
        if (!(time_constant > 0)) throw ValidationError("plant.tau must be > 0", "plant.tau");
        if (!(slew_rate > 0)) throw ValidationError("plant.slew_rate must be > 0", "plant.slew_rate");
    }
};

struct PlantState {
    double pressure = 0.0;    // Pa
    double stroke = 0.0;      // m
    double axial_force = 0.0; // N
    bool stroke_saturated = false;
};

struct CaneCommand {
    double setpoint = 0.0;      // Pa, within [0, max_pressure]
    double desired_force = 0.0; // N
    bool saturated = false;     // the PI output was clamped
};

inline void check_dt(double dt)
{
    if (!(dt > 0.0 && dt <= 0.05))
        throw ValidationError("time step must be in (0, 0.05] s, got " + format_double(dt), "dt");
}

/// First-order pressure lag toward the setpoint (exact discretisation),
/// rate-limited by the slew limit. The stroke follows `stroke_demand` when
/// given and is pinned to [0, max_stroke].
inline PlantState plant_step(const PlantState& s, const CaneCommand& cmd, double dt,
                             const PlantConfig& cfg = {},
                             std::optional<double> stroke_demand = std::nullopt)
{
    check_dt(dt);
    const double target = std::clamp(cmd.setpoint, 0.0, cfg.max_pressure);
    double dp = (target - s.pressure) * (1.0 - std::exp(-dt / cfg.time_constant));
    const double slew = cfg.slew_rate * dt;
    dp = std::clamp(dp, -slew, slew);

    PlantState n = s;
    n.pressure = std::clamp(s.pressure + dp, 0.0, cfg.max_pressure);
    if (stroke_demand) {
        n.stroke = std::clamp(*stroke_demand, 0.0, cfg.max_stroke);
        n.stroke_saturated = *stroke_demand < 0.0 || *stroke_demand > cfg.max_stroke;
    }
    n.axial_force = n.pressure * cfg.area();
    return n;
}

struct ControllerConfig {
    double kp = 2.0;                // force-error gain, dimensionless
    double ki = 20.0;               // 1/s
    double target_fraction = 0.52;  // of body weight
    double ramp_in = 0.9;           // s from detected onset to full target
    double ramp_out_start = 0.05;   // hip-rise progress where the force starts to decay
    double ramp_out_end = 0.6;      // hip-rise progress where it reaches zero
    double max_force = std::numeric_limits<double>::infinity(); // N, safety cap on the demand

    double onset_rate = 0.3;        // rad/s trunk flexion velocity
    double onset_sustain = 0.2;     // s
    double seated_knee_max = 2.094; // rad (120 deg)
    double upright_tolerance = 0.1745; // rad (10 deg)
    double quiet_rate = 0.1;        // rad/s
    double quiet_duration = 0.3;    // s
    double abort_timeout = 6.0;     // s after onset without completion

    void validate() const
    {
        if (!(kp >= 0)) throw ValidationError("controller.kp must be >= 0", "controller.kp");
        if (!(ki >= 0)) throw ValidationError("controller.ki must be >= 0", "controller.ki");
        if (!(target_fraction >= 0 && target_fraction <= 1))
            throw ValidationError("controller.target_fraction must be in [0, 1]",
                                  "controller.target_fraction");
        if (!(ramp_in > 0)) throw ValidationError("controller.ramp_in must be > 0", "controller.ramp_in");
        if (!(ramp_out_start >= 0 && ramp_out_end > ramp_out_start && ramp_out_end <= 1.5))
            throw ValidationError("controller.ramp_out_start/end must satisfy 0 <= start < end",
                                  "controller.ramp_out_end");
        if (!(max_force > 0)) throw ValidationError("controller.max_force must be > 0", "controller.max_force");
        if (!(onset_rate > 0)) throw ValidationError("controller.onset_rate must be > 0", "controller.onset_rate");
        if (!(onset_sustain >= 0))
            throw ValidationError("controller.onset_sustain must be >= 0", "controller.onset_sustain");
        if (!(quiet_duration >= 0))
            throw ValidationError("controller.quiet_duration must be >= 0", "controller.quiet_duration");
        if (!(abort_timeout > 0))
            throw ValidationError("controller.abort_timeout must be > 0", "controller.abort_timeout");
    }
};

enum class IntentKind { sts_onset, sts_complete, abort };

inline std::string_view to_string(IntentKind k)
{
    switch (k) {
    case IntentKind::sts_onset: return "sts_onset";
    case IntentKind::sts_complete: return "sts_complete";
    case IntentKind::abort: return "abort";
    }
    return "?";
}

struct IntentEvent {
    double timestamp = 0.0;   // start of the qualifying run
    double detected_at = 0.0; // sample at which it fired
    IntentKind kind = IntentKind::sts_onset;
};

/// Threshold detector on the angle stream. Onset: trunk flexion velocity
/// above the threshold for the sustain time from a seated posture.
/// Complete: upright and quiet for the quiet duration; fires once until the
/// subject is seated again. Abort: timeout after onset, or the trunk returns
/// upright while still seated.
class IntentDetector {
public:
    explicit IntentDetector(ControllerConfig cfg = {}) : cfg_(cfg) {}

    std::optional<IntentEvent> observe(double t, const JointAngles& q, const JointAngles& dq)
    {
        last_t_ = t;
        const double tol = cfg_.upright_tolerance;
        const bool seated = q.knee <= cfg_.seated_knee_max;
        const bool upright = std::abs(q.trunk_abs) <= tol && q.knee >= std::numbers::pi - tol &&
                             q.hip >= std::numbers::pi - tol;
        const bool quiet = std::abs(dq.trunk_abs) <= cfg_.quiet_rate &&
                           std::abs(dq.hip) <= cfg_.quiet_rate && std::abs(dq.knee) <= cfg_.quiet_rate &&
                           std::abs(dq.ankle) <= cfg_.quiet_rate;

        if (state_ == State::done && seated) state_ = State::idle;

        quiet_since_ = upright && quiet ? quiet_since_.value_or(t) : std::optional<double>{};
        const bool settled = quiet_since_ && t - *quiet_since_ >= cfg_.quiet_duration - 1e-9;

        switch (state_) {
        case State::idle: {
            if (settled) {
                state_ = State::done;
                return IntentEvent{*quiet_since_, t, IntentKind::sts_complete};
            }
            const bool flexing = seated && dq.trunk_abs > cfg_.onset_rate;
            if (!flexing) {
                flex_since_ = kNone;
                return std::nullopt;
            }
            const double start = std::isnan(flex_since_) ? t : flex_since_;
            flex_since_ = start;
            if (t - start >= cfg_.onset_sustain - 1e-9) {
                state_ = State::rising;
                onset_detected_ = t;
                max_trunk_ = q.trunk_abs;
                flex_since_ = kNone;
                return IntentEvent{start, t, IntentKind::sts_onset};
            }
            return std::nullopt;
        }
        case State::rising: {
            max_trunk_ = std::max(max_trunk_, q.trunk_abs);
            if (settled) {
                state_ = State::done;
                return IntentEvent{*quiet_since_, t, IntentKind::sts_complete};
            }
            const bool sat_back = seated && max_trunk_ > 2.0 * tol && q.trunk_abs <= tol;
            if (sat_back || t - onset_detected_ > cfg_.abort_timeout) {
                state_ = State::idle;
                return IntentEvent{t, t, IntentKind::abort};
            }
            return std::nullopt;
        }
        case State::done: return std::nullopt;
        }
        return std::nullopt;
    }

    std::optional<double> last_time() const { return last_t_; }
    bool rising() const { return state_ == State::rising; }

private:
    enum class State { idle, rising, done };
    ControllerConfig cfg_;
    State state_ = State::idle;
    static constexpr double kNone = std::numeric_limits<double>::quiet_NaN();
    double flex_since_ = kNone; // start of the current flexion run
    std::optional<double> quiet_since_;
    std::optional<double> last_t_;
    double onset_detected_ = 0.0;
    double max_trunk_ = 0.0;
};

/// Feeds the samples of `window` newer than the detector's last sample and
/// returns at most one event per call; later events wait for the next call.
/// Windows shorter than 0.5 s return no event.
class WindowedIntent {
public:
    explicit WindowedIntent(ControllerConfig cfg = {}) : det_(cfg) {}

    std::optional<IntentEvent> detect_intent(const PoseTrajectory& window)
    {
        if (!pending_.empty()) return pop();
        if (window.size() < 2 || window.duration() < 0.5 - 1e-9) return std::nullopt;
        const PoseTrajectory w = window.has_derivatives() ? window : differentiate(window);
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (det_.last_time() && w.timestamps[i] <= *det_.last_time()) continue;
            if (auto ev = det_.observe(w.timestamps[i], w.frames[i], w.velocities[i])) pending_.push_back(*ev);
        }
        if (pending_.empty()) return std::nullopt;
        return pop();
    }

private:
    IntentEvent pop()
    {
        const IntentEvent e = pending_.front();
        pending_.pop_front();
        return e;
    }
    IntentDetector det_;
    std::deque<IntentEvent> pending_;
};

/// Desired cane force: ramps in from the detected onset and decays with hip
/// rise, so the cane unloads before knee-hip extension ends.
inline double desired_cane_force(const ControllerConfig& cfg, double body_weight, double t,
                                 std::optional<double> onset, double hip_progress)
{
    if (!onset) return 0.0;
    const double in = signal::MinJerk::at((t - *onset) / cfg.ramp_in).s;
    const double out = signal::MinJerk::at((hip_progress - cfg.ramp_out_start) /
                                           (cfg.ramp_out_end - cfg.ramp_out_start)).s;
    return std::min(cfg.max_force, cfg.target_fraction * body_weight * in * (1.0 - out));
}

/// PI force control with feedforward:
///   setpoint = (F_des + kp e + ki integral(e)) / A,  e = F_des - F
/// clamped to the pressure range; the integral is frozen while the clamp
/// is active and the error would push further into it.
class CaneController {
public:
    CaneController(ControllerConfig cfg, PlantConfig plant) : cfg_(cfg), plant_(plant) {}

    CaneCommand step(const PlantState& s, double desired_force, double dt)
    {
        check_dt(dt);
        const double area = plant_.area();
        const double e = desired_force - s.axial_force;
        const double raw = (desired_force + cfg_.kp * e + cfg_.ki * integral_) / area;
        CaneCommand c;
        c.desired_force = desired_force;
        c.setpoint = std::clamp(raw, 0.0, plant_.max_pressure);
        c.saturated = c.setpoint != raw;
        const bool winding = (raw > plant_.max_pressure && e > 0) || (raw < 0 && e < 0);
        if (!winding) integral_ += e * dt;
        return c;
    }

    /// Controller step driven by the pose: tracks the onset from intent
    /// events and the hip rise from the chain pose.
    CaneCommand step(const PlantState& s, const ChainPose& pose, const AnthropometricModel& m,
                     double t, double dt)
    {
        if (!seat_hip_) seat_hip_ = pose.hip.y();
        const double seat_hip = seat_hip_.value_or(pose.hip.y());
        const double span = m.standing_hip_height() - seat_hip;
        const double progress = span > 1e-9 ? (pose.hip.y() - seat_hip) / span : 1.0;
        return step(s, desired_cane_force(cfg_, m.body_weight(), t, onset_, progress), dt);
    }

    void notify(const IntentEvent& ev)
    {
        if (ev.kind == IntentKind::sts_onset) onset_ = ev.detected_at;
        if (ev.kind == IntentKind::abort) {
            onset_.reset();
            integral_ = 0.0;
        }
    }

    double integral() const { return integral_; }
    std::optional<double> onset() const { return onset_; }

private:
    ControllerConfig cfg_;
    PlantConfig plant_;
    double integral_ = 0.0;
    std::optional<double> onset_;
    std::optional<double> seat_hip_;
};

/// Everything needed to run one episode. Parsed from a flat key-value file.
struct Scenario {
    std::string name = "reference";
    Subject subject = reference_subject();
    std::optional<AnthroTable> table; // anthropometric override
    StsProfile profile{0.40, 0.1745, 0.3142, 0.6981, 1.0};
    PhaseTimings timings;
    bool assist = true;
    bool paired = true;
    ControllerConfig controller;
    PlantConfig plant;
    double control_rate = 100.0;  // Hz
    double cane_tilt = 0.0;       // rad forward of vertical
    double cane_attach = 0.6;     // fraction of HAT length above the hip
    double seat_share = 0.6;      // initial seat load, fraction of body weight

    AnthropometricModel model() const
    {
        return scale_anthropometrics(subject, table ? *table : default_table(subject.sex));
    }

    static std::vector<std::string> keys()
    {
        return {"scenario.name",         "subject.height",        "subject.mass",
                "subject.sex",           "chair.height",          "profile.initial_shank_tilt",
                "profile.peak_shank_tilt", "profile.peak_trunk_flexion", "phase.flexion",
                "phase.liftoff",         "phase.extension",       "phase.hold",
                "assist",                "paired",                "controller.kp",
                "controller.ki",         "controller.target_fraction", "controller.ramp_in",
                "controller.ramp_out_start", "controller.ramp_out_end", "controller.max_force",
                "controller.onset_rate", "controller.onset_sustain", "plant.bore",
                "plant.max_pressure",    "plant.max_stroke",      "plant.tau",
                "plant.slew_rate",       "control.rate",          "cane.tilt",
                "cane.attach_fraction",  "seat.initial_share"};
    }

    void validate() const
    {
        try {
            subject.validate();
        } catch (const ValidationError& e) {
            throw ValidationError(e.what(), "subject." + e.field());
        }
        timings.validate();
        controller.validate();
        plant.validate();
        if (!(control_rate >= 20.0 && control_rate <= 10000.0))
            throw ValidationError("control.rate must be in [20, 10000] Hz", "control.rate");
        if (!(profile.hold >= 0.0)) throw ValidationError("phase.hold must be >= 0", "phase.hold");
        if (!(cane_attach >= 0.0 && cane_attach <= 1.0))
            throw ValidationError("cane.attach_fraction must be in [0, 1]", "cane.attach_fraction");
        if (!(std::abs(cane_tilt) < 0.5 * std::numbers::pi))
            throw ValidationError("cane.tilt must be within (-pi/2, pi/2)", "cane.tilt");
        if (!(seat_share >= 0.0 && seat_share <= 1.0))
            throw ValidationError("seat.initial_share must be in [0, 1]", "seat.initial_share");
        if (!(profile.chair_height > 0.0))
            throw ValidationError("chair.height must be > 0", "chair.height");
        seated_thigh_dir(model(), profile);
    }

    /// Reads a scenario; validation failures name the offending line.
    static Scenario from_config(const KeyValueConfig& cfg, std::optional<AnthroTable> table = std::nullopt)
    {
        cfg.require_known(keys());
        Scenario s;
        s.table = std::move(table);
        s.name = cfg.get_string("scenario.name", s.name);
        s.subject.height = cfg.get_double("subject.height", s.subject.height);
        s.subject.mass = cfg.get_double("subject.mass", s.subject.mass);
        try {
            if (cfg.has("subject.sex")) s.subject.sex = parse_sex(cfg.get_string("subject.sex", "male"));
        } catch (const ValidationError& e) {
            throw ValidationError(cfg.location("subject.sex") + ": " + e.what(), "subject.sex");
        }
        auto& p = s.profile;
        p.chair_height = cfg.get_double("chair.height", p.chair_height);
        p.initial_shank_tilt = cfg.get_double("profile.initial_shank_tilt", p.initial_shank_tilt);
        p.peak_shank_tilt = cfg.get_double("profile.peak_shank_tilt", p.peak_shank_tilt);
        p.peak_trunk_flexion = cfg.get_double("profile.peak_trunk_flexion", p.peak_trunk_flexion);
        p.hold = cfg.get_double("phase.hold", p.hold);
        s.timings.flexion = cfg.get_double("phase.flexion", s.timings.flexion);
        s.timings.liftoff = cfg.get_double("phase.liftoff", s.timings.liftoff);
        s.timings.extension = cfg.get_double("phase.extension", s.timings.extension);
        s.assist = cfg.get_bool("assist", s.assist);
        s.paired = cfg.get_bool("paired", s.paired);
        auto& c = s.controller;
        c.kp = cfg.get_double("controller.kp", c.kp);
        c.ki = cfg.get_double("controller.ki", c.ki);
        c.target_fraction = cfg.get_double("controller.target_fraction", c.target_fraction);
        c.ramp_in = cfg.get_double("controller.ramp_in", c.ramp_in);
        c.ramp_out_start = cfg.get_double("controller.ramp_out_start", c.ramp_out_start);
        c.ramp_out_end = cfg.get_double("controller.ramp_out_end", c.ramp_out_end);
        if (cfg.get_string("controller.max_force", "") != "none")
            c.max_force = cfg.get_double("controller.max_force", c.max_force);
        c.onset_rate = cfg.get_double("controller.onset_rate", c.onset_rate);
        c.onset_sustain = cfg.get_double("controller.onset_sustain", c.onset_sustain);
        auto& pl = s.plant;
        pl.bore_diameter = cfg.get_double("plant.bore", pl.bore_diameter);
        pl.max_pressure = cfg.get_double("plant.max_pressure", pl.max_pressure);
        pl.max_stroke = cfg.get_double("plant.max_stroke", pl.max_stroke);
        pl.time_constant = cfg.get_double("plant.tau", pl.time_constant);
        pl.slew_rate = cfg.get_double("plant.slew_rate", pl.slew_rate);
        s.control_rate = cfg.get_double("control.rate", s.control_rate);
        s.cane_tilt = cfg.get_double("cane.tilt", s.cane_tilt);
        s.cane_attach = cfg.get_double("cane.attach_fraction", s.cane_attach);
        s.seat_share = cfg.get_double("seat.initial_share", s.seat_share);
        try {
            s.validate();
        } catch (const ValidationError& e) {
            if (!e.field().empty() && cfg.has(e.field()))
                throw ValidationError(cfg.location(e.field()) + ": " + e.what(), e.field());
            throw;
        }
        return s;
    }

    /// Fully resolved key-value view, in key order, for manifests.
    std::vector<std::pair<std::string, std::string>> resolved() const
    {
        const auto f = format_double;
        return {{"scenario.name", name},
                {"subject.height", f(subject.height)},
                {"subject.mass", f(subject.mass)},
                {"subject.sex", std::string(to_string(subject.sex))},
                {"chair.height", f(profile.chair_height)},
                {"profile.initial_shank_tilt", f(profile.initial_shank_tilt)},
                {"profile.peak_shank_tilt", f(profile.peak_shank_tilt)},
                {"profile.peak_trunk_flexion", f(profile.peak_trunk_flexion)},
                {"phase.flexion", f(timings.flexion)},
                {"phase.liftoff", f(timings.liftoff)},
                {"phase.extension", f(timings.extension)},
                {"phase.hold", f(profile.hold)},
                {"assist", assist ? "true" : "false"},
                {"paired", paired ? "true" : "false"},
                {"controller.kp", f(controller.kp)},
                {"controller.ki", f(controller.ki)},
                {"controller.target_fraction", f(controller.target_fraction)},
                {"controller.ramp_in", f(controller.ramp_in)},
                {"controller.ramp_out_start", f(controller.ramp_out_start)},
                {"controller.ramp_out_end", f(controller.ramp_out_end)},
                {"controller.max_force", std::isinf(controller.max_force) ? "none" : f(controller.max_force)},
                {"controller.onset_rate", f(controller.onset_rate)},
                {"controller.onset_sustain", f(controller.onset_sustain)},
                {"plant.bore", f(plant.bore_diameter)},
                {"plant.max_pressure", f(plant.max_pressure)},
                {"plant.max_stroke", f(plant.max_stroke)},
                {"plant.tau", f(plant.time_constant)},
                {"plant.slew_rate", f(plant.slew_rate)},
                {"control.rate", f(control_rate)},
                {"cane.tilt", f(cane_tilt)},
                {"cane.attach_fraction", f(cane_attach)},
                {"seat.initial_share", f(seat_share)}};
    }
};

/// Seat reaction under the hip: the initial share of body weight unloads
/// smoothly over the flexion phase and is zero from seat-off on.
inline double seat_force(const Scenario& s, double body_weight, double t)
{
    const double t1 = s.timings.seat_off();
    if (t >= t1) return 0.0;
    return s.seat_share * body_weight * (1.0 - signal::MinJerk::at(t / t1).s);
}

struct EpisodeRow {
    double t = 0.0;
    JointAngles q;
    PlantState plant;
    CaneCommand command;
    double seat_fz = 0.0;
    double cane_fz = 0.0;
    SegmentLoads loads;
};

struct EpisodeLog {
    std::string condition;
    double body_weight = 0.0;
    std::vector<EpisodeRow> rows;
    std::vector<IntentEvent> events;
    double cane_work = 0.0; // J, integral of force times stroke rate

    GrfProfile grf() const
    {
        GrfProfile g;
        g.body_weight = body_weight;
        std::vector<double> seat, cane;
        for (const auto& r : rows) {
            g.t.push_back(r.t);
            g.fz.push_back(r.loads.F_g.y());
            seat.push_back(r.seat_fz);
            cane.push_back(r.cane_fz);
        }
        g.seat_fz = std::move(seat);
        g.cane_fz = std::move(cane);
        return g;
    }

    std::vector<DynamicsFrame> dynamics_frames() const
    {
        std::vector<DynamicsFrame> out;
        for (const auto& r : rows) {
            DynamicsFrame f;
            f.t = r.t;
            f.loads = r.loads;
            out.push_back(f);
        }
        return out;
    }
};

/// Runs one episode on the scenario's prescribed trajectory. `assist`
/// switches the cane on; the kinematics are identical either way.
inline EpisodeLog run_episode(const AnthropometricModel& m, const Scenario& sc, bool assist)
{
    sc.validate();
    const double dt = 1.0 / sc.control_rate;
    const PoseTrajectory traj = generate_sts_trajectory(m, sc.timings, sc.control_rate, sc.profile);
    const double bw = m.body_weight();

    EpisodeLog log;
    log.condition = assist ? "assisted" : "control";
    log.body_weight = bw;
    log.rows.reserve(traj.size());

    IntentDetector detector(sc.controller);
    CaneController controller(sc.controller, sc.plant);
    PlantState plant;
    const double hip0 = forward_kinematics(traj.frames.front(), m).hip.y();

    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double t = traj.timestamps[k];
        const ChainPose pose = chain_pose(traj.frames[k], traj.velocities[k], traj.accelerations[k], m);
        if (auto ev = detector.observe(t, traj.frames[k], traj.velocities[k])) {
            log.events.push_back(*ev);
            controller.notify(*ev);
        }

        EpisodeRow row;
        row.t = t;
        row.q = traj.frames[k];
        row.plant = plant;
        row.seat_fz = seat_force(sc, bw, t);
        const CaneForce cane = CaneForce::axial(plant.axial_force, sc.cane_tilt, sc.cane_attach);
        row.cane_fz = cane.force().y();
        row.loads = solve_frame(pose, cane, m, Vec2(0.0, row.seat_fz));

        CaneCommand cmd;
        if (assist) cmd = controller.step(plant, pose, m, t, dt);
        row.command = cmd;
        log.rows.push_back(row);

        const std::size_t next = std::min(k + 1, traj.size() - 1);
        const double demand = forward_kinematics(traj.frames[next], m).hip.y() - hip0;
        const PlantState after = plant_step(plant, cmd, dt, sc.plant, demand);
        log.cane_work += plant.axial_force * (after.stroke - plant.stroke);
        plant = after;
    }
    return log;
}

inline void write_episode_csv(std::ostream& out, const EpisodeLog& log)
{
    out << "t,trunk,hip,knee,ankle,seat_fz,desired_force,setpoint,pressure,stroke,stroke_saturated,"
           "cane_force,fz,fx,mc,tau_hip,tau_knee,tau_ankle\n";
    for (const auto& r : log.rows) {
        const std::array<double, 18> row{r.t,
                                         r.q.trunk_abs,
                                         r.q.hip,
                                         r.q.knee,
                                         r.q.ankle,
                                         r.seat_fz,
                                         r.command.desired_force,
                                         r.command.setpoint,
                                         r.plant.pressure,
                                         r.plant.stroke,
                                         r.plant.stroke_saturated ? 1.0 : 0.0,
                                         r.plant.axial_force,
                                         r.loads.F_g.y(),
                                         r.loads.F_g.x(),
                                         r.loads.M_c,
                                         r.loads.tau_hip,
                                         r.loads.tau_knee,
                                         r.loads.tau_ankle};
        write_csv_row(out, row);
    }
}

} // namespace sit2stand
