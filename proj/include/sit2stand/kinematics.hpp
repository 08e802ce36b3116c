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

// Four-link sagittal chain: foot (fixed), shank, thigh, HAT.
//
// Frame: x forward, z up, floor at z = 0, ankle joint C at (0, ankle_height).
// Angle conventions:
//   - ankle, knee, hip are inter-segment angles, pi when fully extended;
//   - ankle = pi - (forward tilt of the shank from vertical), i.e. the foot
//     is flat and the shank leans forward as the ankle angle drops;
//   - trunk_abs is the HAT tilt from vertical, positive leaning forward.
// Positions are built from ankle, knee and trunk_abs. The hip angle is then
// implied (hip = pi - trunk_abs + knee - ankle); see JointAngles::chain_hip.

#pragma once

#include <array>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sit2stand/anthro.hpp"
#include "sit2stand/error.hpp"
#include "sit2stand/signal.hpp"
#include "sit2stand/text.hpp"

namespace sit2stand {

using Vec2 = Eigen::Vector2d;

/// z-component of the planar cross product; positive is counter-clockwise
/// when x points right and z points up.
inline double cross2(const Vec2& r, const Vec2& f) { return r.x() * f.y() - r.y() * f.x(); }

/// Unit vector tilted `angle` from vertical toward +x.
inline Vec2 tilt_dir(double angle) { return {std::sin(angle), std::cos(angle)}; }
inline Vec2 tilt_dir_deriv(double angle) { return {std::cos(angle), -std::sin(angle)}; }

struct JointAngles {
    double trunk_abs = 0.0;
    double hip = std::numbers::pi;
    double knee = std::numbers::pi;
    double ankle = std::numbers::pi;

    static constexpr std::size_t size() { return 4; }
    std::array<double, 4> as_array() const { return {trunk_abs, hip, knee, ankle}; }
    static JointAngles from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }

    double shank_tilt() const { return std::numbers::pi - ankle; }
    double thigh_dir() const { return knee - ankle; }
    double chain_hip() const { return std::numbers::pi - trunk_abs + knee - ankle; }

    bool finite() const
    {
        return std::isfinite(trunk_abs) && std::isfinite(hip) && std::isfinite(knee) &&
               std::isfinite(ankle);
    }

    /// Inter-segment angles lie in (0, pi]; pi (full extension) is allowed.
    void validate() const
    {
        constexpr double tol = 1e-9;
        if (!finite()) throw ValidationError("joint angles must be finite", "angles");
        for (auto [name, v] : {std::pair{"hip", hip}, {"knee", knee}, {"ankle", ankle}})
            if (!(v > 0.0 && v <= std::numbers::pi + tol))
                throw ValidationError(std::string(name) + " angle must be in (0, pi], got " +
                                          format_double(v),
                                      name);
    }
};

/// Time series of joint angles with first and second derivatives.
struct PoseTrajectory {
    std::vector<double> timestamps;
    std::vector<JointAngles> frames;
    std::vector<JointAngles> velocities;
    std::vector<JointAngles> accelerations;

    std::size_t size() const { return frames.size(); }
    bool has_derivatives() const
    {
        return velocities.size() == frames.size() && accelerations.size() == frames.size();
    }
    double duration() const { return timestamps.empty() ? 0.0 : timestamps.back() - timestamps.front(); }

    void validate() const
    {
        if (timestamps.size() != frames.size())
            throw ValidationError("trajectory: timestamps and frames differ in length");
        if (!velocities.empty() && velocities.size() != frames.size())
            throw ValidationError("trajectory: velocity length mismatch");
        if (!accelerations.empty() && accelerations.size() != frames.size())
            throw ValidationError("trajectory: acceleration length mismatch");
        for (std::size_t i = 1; i < timestamps.size(); ++i)
            if (!(timestamps[i] > timestamps[i - 1]))
                throw ValidationError("trajectory: timestamps must be strictly increasing (row " +
                                      std::to_string(i + 1) + ")");
    }
};

struct ChainPose {
    Vec2 ankle{0, 0};  // C
    Vec2 knee{0, 0};   // B
    Vec2 hip{0, 0};    // A
    Vec2 head_top{0, 0};
    Vec2 g_hat{0, 0};   // G1
    Vec2 g_thigh{0, 0}; // G2
    Vec2 g_shank{0, 0}; // G3
    Vec2 g_foot{0, 0};  // G4
    double trunk_abs = 0.0;
    Vec2 hat_accel{0, 0};    // acceleration of G1, m/s^2
    double trunk_accel = 0.0; // d2(trunk_abs)/dt2; CCW angular acceleration is its negative

    Vec2 AG1() const { return g_hat - hip; }
    Vec2 BG2() const { return g_thigh - knee; }
    Vec2 CG3() const { return g_shank - ankle; }
    Vec2 CG4() const { return g_foot - ankle; }
    Vec2 BA() const { return hip - knee; }
    Vec2 CB() const { return knee - ankle; }

    /// Point on the HAT `fraction` of its length above the hip, shifted
    /// `lateral` metres perpendicular to the trunk (forward positive).
    Vec2 hat_point(double fraction, double lateral, double hat_length) const
    {
        const Vec2 axis = tilt_dir(trunk_abs);
        const Vec2 normal = tilt_dir_deriv(trunk_abs);
        return hip + fraction * hat_length * axis + lateral * normal;
    }
};

/// Pose plus HAT COM acceleration from angle rates. Lower-limb segment
/// accelerations are not computed; the dynamics treats them as quasi-static.
inline ChainPose chain_pose(const JointAngles& q, const JointAngles& dq, const JointAngles& ddq,
                            const AnthropometricModel& m)
{
    ChainPose p;
    const double phi_s = q.shank_tilt();
    const double phi_t = q.thigh_dir();
    const double theta = q.trunk_abs;

    const Vec2 us = tilt_dir(phi_s);
    const Vec2 ut = tilt_dir(phi_t);
    const Vec2 uh = tilt_dir(theta);

    p.ankle = Vec2(0.0, m.foot_geometry.ankle_height);
    p.knee = p.ankle + m.shank.length * us;
    p.hip = p.knee + m.thigh.length * ut;
    p.head_top = p.hip + m.hat.length * uh;
    p.g_hat = p.hip + m.hat.com_distance() * uh;
    p.g_thigh = p.hip - m.thigh.com_distance() * ut;
    p.g_shank = p.knee - m.shank.com_distance() * us;
    p.g_foot = Vec2(-m.foot_geometry.ankle_from_heel + m.foot.com_distance(),
                    0.5 * m.foot_geometry.ankle_height);
    p.trunk_abs = theta;

    // d/dt [L u(phi)] = L phi' u'(phi); d2/dt2 = L (phi'' u' - phi'^2 u)
    auto accel = [](double len, double phi, double dphi, double ddphi) -> Vec2 {
        return len * (ddphi * tilt_dir_deriv(phi) - dphi * dphi * tilt_dir(phi));
    };
    const double dphi_s = -dq.ankle, ddphi_s = -ddq.ankle;
    const double dphi_t = dq.knee - dq.ankle, ddphi_t = ddq.knee - ddq.ankle;
    p.hat_accel = accel(m.shank.length, phi_s, dphi_s, ddphi_s) +
                  accel(m.thigh.length, phi_t, dphi_t, ddphi_t) +
                  accel(m.hat.com_distance(), theta, dq.trunk_abs, ddq.trunk_abs);
    p.trunk_accel = ddq.trunk_abs;
    return p;
}

/// Static pose (zero rates).
inline ChainPose forward_kinematics(const JointAngles& q, const AnthropometricModel& m)
{
    return chain_pose(q, JointAngles{0, 0, 0, 0}, JointAngles{0, 0, 0, 0}, m);
}

struct DifferentiateOptions {
    double lowpass_hz = 0.0; // <= 0 disables smoothing
};

/// Fills velocities and accelerations by finite differences (3-point interior,
/// 4-point one-sided ends). Optional zero-phase low-pass before differencing
/// requires a uniform grid and smooths the angles themselves too.
inline PoseTrajectory differentiate(PoseTrajectory traj, const DifferentiateOptions& opt = {})
{
    if (traj.size() < 5) throw ValidationError("differentiate: need at least 5 frames");
    traj.validate();
    const std::size_t n = traj.size();
    traj.velocities.assign(n, JointAngles{0, 0, 0, 0});
    traj.accelerations.assign(n, JointAngles{0, 0, 0, 0});

    std::vector<double> y(n), dy(n), ddy(n);
    for (std::size_t j = 0; j < JointAngles::size(); ++j) {
        for (std::size_t i = 0; i < n; ++i) y[i] = traj.frames[i].as_array()[j];
        if (opt.lowpass_hz > 0.0) {
            const double fs = static_cast<double>(n - 1) / traj.duration();
            y = signal::filtfilt_lowpass(y, opt.lowpass_hz, fs);
        }
        signal::derivatives(traj.timestamps, y, dy, ddy);
        for (std::size_t i = 0; i < n; ++i) {
            auto set = [j](JointAngles& a, double v) {
                auto arr = a.as_array();
                arr[j] = v;
                a = JointAngles::from_array(arr);
            };
            if (opt.lowpass_hz > 0.0) set(traj.frames[i], y[i]);
            set(traj.velocities[i], dy[i]);
            set(traj.accelerations[i], ddy[i]);
        }
    }
    return traj;
}

struct PhaseTimings {
    double flexion = 1.0;   // trunk flexion, seat contact maintained
    double liftoff = 0.3;   // momentum transfer after seat-off
    double extension = 0.9; // knee-hip extension to upright

    double total() const { return flexion + liftoff + extension; }
    double seat_off() const { return flexion; }

    void validate() const
    {
        if (!(flexion > 0.0)) throw ValidationError("phase.flexion must be > 0", "phase.flexion");
        if (!(liftoff > 0.0)) throw ValidationError("phase.liftoff must be > 0", "phase.liftoff");
        if (!(extension > 0.0))
            throw ValidationError("phase.extension must be > 0", "phase.extension");
    }
};

struct StsProfile {
    double chair_height = 0.40;        // hip joint height above the floor when seated, m
    double initial_shank_tilt = 0.1745; // rad (10 deg), feet slightly behind the knees
    double peak_shank_tilt = 0.3142;   // rad (18 deg), knees travel forward after seat-off
    double peak_trunk_flexion = 0.6981; // rad (40 deg)
    double hold = 0.0;                 // upright standing appended after the movement, s
};

/// Seated thigh direction for the given chair height, or throws when the
/// chain cannot reach it.
inline double seated_thigh_dir(const AnthropometricModel& m, const StsProfile& prof)
{
    const double c = (prof.chair_height - m.foot_geometry.ankle_height -
                      m.shank.length * std::cos(prof.initial_shank_tilt)) /
                     m.thigh.length;
    if (!(c > -1.0 && c < 1.0))
        throw ValidationError("chair height " + format_double(prof.chair_height) +
                                  " m is unreachable for this subject (seated hip height must lie "
                                  "strictly between " +
                                  format_double(m.foot_geometry.ankle_height +
                                                m.shank.length * std::cos(prof.initial_shank_tilt) -
                                                m.thigh.length) +
                                  " and " +
                                  format_double(m.foot_geometry.ankle_height +
                                                m.shank.length * std::cos(prof.initial_shank_tilt) +
                                                m.thigh.length) +
                                  " m)",
                              "chair.height");
    return -std::acos(c); // hip behind the knee
}

/// Synthetic three-phase sit-to-stand. Each absolute segment angle follows
/// minimum-jerk blends between phase knots:
///   trunk tilt  0 -> peak over [0, seat_off + liftoff/2], back to 0 by the end;
///   shank tilt  initial, -> peak over the lift-off phase, -> 0 over extension;
///   thigh       seated direction until seat-off, -> vertical by the end.
/// Derivatives are filled analytically.
inline PoseTrajectory generate_sts_trajectory(const AnthropometricModel& m, const PhaseTimings& tm,
                                              double rate_hz, const StsProfile& prof = {})
{
    tm.validate();
    if (!(rate_hz >= 30.0)) throw ValidationError("trajectory rate must be >= 30 Hz", "rate");
    if (!(prof.hold >= 0.0)) throw ValidationError("hold must be >= 0", "phase.hold");
    const double phi_t0 = seated_thigh_dir(m, prof);

    const double t1 = tm.seat_off();
    const double t2 = t1 + tm.liftoff;
    const double t3 = tm.total();
    const double t_flex_peak = t1 + 0.5 * tm.liftoff;

    struct Sample {
        double v, dv, ddv;
    };
    auto blend = [](double t, double ta, double tb, double from, double to) -> Sample {
        const double span = tb - ta;
        const auto s = signal::MinJerk::at((t - ta) / span);
        const double d = to - from;
        return {from + d * s.s, d * s.ds / span, d * s.dds / (span * span)};
    };
    auto piecewise = [&](double t, double ta, double tb, double tc, double a, double b, double c) {
        return t < tb ? blend(t, ta, tb, a, b) : blend(t, tb, tc, b, c);
    };

    const auto count = static_cast<std::size_t>(std::llround((t3 + prof.hold) * rate_hz)) + 1;
    PoseTrajectory traj;
    traj.timestamps.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) / rate_hz;
        const Sample trunk = piecewise(t, 0.0, t_flex_peak, t3, 0.0, prof.peak_trunk_flexion, 0.0);
        const Sample shank = t < t1 ? Sample{prof.initial_shank_tilt, 0, 0}
                                    : piecewise(t, t1, t2, t3, prof.initial_shank_tilt,
                                                prof.peak_shank_tilt, 0.0);
        const Sample thigh = blend(t, t1, t3, phi_t0, 0.0);

        JointAngles q, dq, ddq;
        q.trunk_abs = trunk.v;
        q.ankle = std::numbers::pi - shank.v;
        q.knee = thigh.v + q.ankle;
        q.hip = std::numbers::pi - trunk.v + thigh.v;
        dq = {trunk.dv, -trunk.dv + thigh.dv, thigh.dv - shank.dv, -shank.dv};
        ddq = {trunk.ddv, -trunk.ddv + thigh.ddv, thigh.ddv - shank.ddv, -shank.ddv};

        traj.timestamps.push_back(t);
        traj.frames.push_back(q);
        traj.velocities.push_back(dq);
        traj.accelerations.push_back(ddq);
    }
    // Snap the terminal pose so rounding in the blend leaves no residue.
    for (std::size_t k = 0; k < count; ++k) {
        if (traj.timestamps[k] >= t3) {
            traj.frames[k] = JointAngles{};
            traj.velocities[k] = JointAngles{0, 0, 0, 0};
            traj.accelerations[k] = JointAngles{0, 0, 0, 0};
        }
    }
    return traj;
}

// Trajectory CSV: t,trunk,hip,knee,ankle[,dtrunk,dhip,dknee,dankle,ddtrunk,ddhip,ddknee,ddankle]

inline void write_trajectory_csv(std::ostream& out, const PoseTrajectory& traj)
{
    out << "t,trunk,hip,knee,ankle";
    const bool deriv = traj.has_derivatives();
    if (deriv) out << ",dtrunk,dhip,dknee,dankle,ddtrunk,ddhip,ddknee,ddankle";
    out << '\n';
    for (std::size_t i = 0; i < traj.size(); ++i) {
        std::vector<double> row{traj.timestamps[i]};
        for (double v : traj.frames[i].as_array()) row.push_back(v);
        if (deriv) {
            for (double v : traj.velocities[i].as_array()) row.push_back(v);
            for (double v : traj.accelerations[i].as_array()) row.push_back(v);
        }
        write_csv_row(out, row);
    }
}

inline PoseTrajectory read_trajectory_csv(std::istream& in, const std::string& source = "<trajectory>",
                                          const DifferentiateOptions& opt = {})
{
    const auto table = CsvTable::parse(in, source);
    const std::array<const char*, 4> names{"trunk", "hip", "knee", "ankle"};
    PoseTrajectory traj;
    traj.timestamps = table.column("t");
    std::array<std::vector<double>, 4> cols;
    for (std::size_t j = 0; j < 4; ++j) cols[j] = table.column(names[j]);
    for (std::size_t i = 0; i < table.rows(); ++i)
        traj.frames.push_back(JointAngles{cols[0][i], cols[1][i], cols[2][i], cols[3][i]});

    bool have_deriv = true;
    for (const char* n : names)
        have_deriv = have_deriv && table.has(std::string("d") + n) && table.has(std::string("dd") + n);
    if (have_deriv) {
        std::array<std::vector<double>, 4> d, dd;
        for (std::size_t j = 0; j < 4; ++j) {
            d[j] = table.column(std::string("d") + names[j]);
            dd[j] = table.column(std::string("dd") + names[j]);
        }
        for (std::size_t i = 0; i < table.rows(); ++i) {
            traj.velocities.push_back(JointAngles{d[0][i], d[1][i], d[2][i], d[3][i]});
            traj.accelerations.push_back(JointAngles{dd[0][i], dd[1][i], dd[2][i], dd[3][i]});
        }
        traj.validate();
        return traj;
    }
    return differentiate(std::move(traj), opt);
}

} // namespace sit2stand
