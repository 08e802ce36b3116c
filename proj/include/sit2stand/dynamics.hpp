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

// Segment-by-segment inverse dynamics of the four-link chain with an
// external cane force on the HAT.
//
// Sign conventions (x forward, z up, moments counter-clockwise positive,
// moment of force F at lever r is cross2(r, F)):
//   F_t  force of the thigh on the HAT at the hip A
//   F_l  force of the shank on the thigh at the knee B
//   F_a  force of the foot on the shank at the ankle C
//   F_g  ground reaction on the foot, applied at the pressure centre P
//   tau_hip/knee/ankle  moment of the distal segment on the proximal one
//   G_i  segment weight vectors (0, -m_i g)
//
// HAT (full Newton-Euler, angular acceleration omega_dot = -trunk_accel):
//   F_s + G1 + F_t = m1 a
//   tau_hip + AG1 x G1 + AS x F_s = AG1 x (m1 a) + J1 omega_dot
// Thigh, shank, foot are quasi-static:
//   F_l = F_t - G2 - F_seat          tau_knee  = tau_hip  - BG2 x G2 + BA x (F_t - F_seat)
//   F_a = F_l - G3                   tau_ankle = tau_knee - CG3 x G3 + CB x F_l
//   F_g = F_a - G4                   M_plate   = tau_ankle - CG4 x G4 - CP x F_g
// M_c = CP x F_g. Summing the force equations gives the whole-body check
//   F_g + F_s + F_seat + sum(G_i) - m1 a = 0.
// F_seat is the seat reaction at the hip before seat-off (zero after).

#pragma once

#include <cmath>
#include <ostream>
#include <span>
#include <vector>

#include "sit2stand/anthro.hpp"
#include "sit2stand/error.hpp"
#include "sit2stand/kinematics.hpp"
#include "sit2stand/text.hpp"

namespace sit2stand {

struct CaneForce {
    double magnitude = 0.0;       // N, >= 0
    Vec2 direction{0.0, 1.0};     // unit vector along the cane axis, toward the body
    double attach_fraction = 0.6; // of HAT length above the hip
    double lateral_offset = 0.0;  // m, perpendicular to the trunk axis, forward positive

    Vec2 force() const { return magnitude * direction; }

    Vec2 attach_point(const ChainPose& pose, const AnthropometricModel& m) const
    {
        return pose.hat_point(attach_fraction, lateral_offset, m.hat.length);
    }

    void validate() const
    {
        if (!(magnitude >= 0.0) || !std::isfinite(magnitude))
            throw ValidationError("cane force magnitude must be finite and >= 0", "cane");
        if (std::abs(direction.norm() - 1.0) > 1e-12)
            throw ValidationError("cane direction must be a unit vector", "cane");
    }

    /// Vertical thrust with the cane axis tilted `tilt` rad forward of vertical.
    static CaneForce axial(double magnitude, double tilt = 0.0, double attach_fraction = 0.6)
    {
        CaneForce c;
        c.magnitude = magnitude;
        c.direction = tilt_dir(tilt);
        c.attach_fraction = attach_fraction;
        return c;
    }
};

struct SegmentLoads {
    double tau_hip = 0.0;
    double tau_knee = 0.0;
    double tau_ankle = 0.0;
    Vec2 F_t{0, 0};
    Vec2 F_l{0, 0};
    Vec2 F_a{0, 0};
    Vec2 F_g{0, 0};
    double M_c = 0.0;
    double M_plate = 0.0;
    Vec2 cop{0, 0};
    bool cop_outside_support = false;
    double residual = 0.0; // |whole-body force balance|, N
};

struct DynamicsFrame {
    double t = 0.0;
    ChainPose pose;
    CaneForce cane;
    Vec2 seat{0, 0};
    SegmentLoads loads;
};

inline Vec2 weight(double mass, double g) { return {0.0, -mass * g}; }

struct HatResult {
    double tau_hip;
    Vec2 F_t;
};

inline HatResult hat_balance(const ChainPose& pose, const CaneForce& cane, const AnthropometricModel& m)
{
    const double m1 = m.hat.mass;
    const Vec2 G1 = weight(m1, m.gravity);
    const Vec2 Fs = cane.force();
    const Vec2 inertial = m1 * pose.hat_accel;
    const Vec2 AG1 = pose.AG1();
    const Vec2 AS = cane.attach_point(pose, m) - pose.hip;
    const double omega_dot = -pose.trunk_accel;

    HatResult r;
    r.F_t = inertial - Fs - G1;
    r.tau_hip = cross2(AG1, inertial) + m.hat.inertia_sagittal * omega_dot - cross2(AG1, G1) -
                cross2(AS, Fs);
    return r;
}

struct ThighResult {
    double tau_knee;
    Vec2 F_l;
};

inline ThighResult thigh_balance(const ChainPose& pose, double tau_hip, const Vec2& F_t,
                                 const AnthropometricModel& m, const Vec2& seat = Vec2::Zero())
{
    const Vec2 G2 = weight(m.thigh.mass, m.gravity);
    ThighResult r;
    r.F_l = F_t - G2 - seat;
    r.tau_knee = tau_hip - cross2(pose.BG2(), G2) + cross2(pose.BA(), F_t - seat);
    return r;
}

struct ShankResult {
    double tau_ankle;
    Vec2 F_a;
};

inline ShankResult shank_balance(const ChainPose& pose, double tau_knee, const Vec2& F_l,
                                 const AnthropometricModel& m)
{
    const Vec2 G3 = weight(m.shank.mass, m.gravity);
    ShankResult r;
    r.F_a = F_l - G3;
    r.tau_ankle = tau_knee - cross2(pose.CG3(), G3) + cross2(pose.CB(), F_l);
    return r;
}

struct FootResult {
    Vec2 F_g;
    double M_c;
    double M_plate;
    bool outside_support;
};

inline FootResult foot_closure(const ChainPose& pose, double tau_ankle, const Vec2& F_a,
                               const AnthropometricModel& m, const Vec2& cop)
{
    const Vec2 G4 = weight(m.foot.mass, m.gravity);
    const Vec2 CP = cop - pose.ankle;
    FootResult r;
    r.F_g = F_a - G4;
    r.M_c = cross2(CP, r.F_g);
    r.M_plate = tau_ankle - cross2(pose.CG4(), G4) - r.M_c;
    const double heel = pose.ankle.x() + m.foot_geometry.heel_x();
    const double toe = pose.ankle.x() + m.foot_geometry.toe_x();
    r.outside_support = cop.x() < heel || cop.x() > toe;
    return r;
}

/// Ground reaction moment about the ankle implied by the foot balance with no
/// free moment at the plate: tau_ankle - CG4 x G4.
inline double ankle_moment_without_free_moment(const ChainPose& pose, double tau_ankle,
                                               const AnthropometricModel& m)
{
    return tau_ankle - cross2(pose.CG4(), weight(m.foot.mass, m.gravity));
}

/// Whole-body force residual: F_g + F_s + F_seat + sum(G) - m1 a.
inline Vec2 whole_body_residual(const ChainPose& pose, const CaneForce& cane, const Vec2& seat,
                                const SegmentLoads& loads, const AnthropometricModel& m)
{
    const Vec2 G = weight(m.segment_mass_sum(), m.gravity);
    return loads.F_g + cane.force() + seat + G - m.hat.mass * pose.hat_accel;
}

enum class CopMode {
    under_ankle,       // P directly below the ankle on the floor
    zero_free_moment,  // P on the floor such that M_plate = 0
};

inline Vec2 cop_under_ankle(const ChainPose& pose) { return {pose.ankle.x(), 0.0}; }

/// Runs the four balances for one frame.
inline SegmentLoads solve_frame(const ChainPose& pose, const CaneForce& cane,
                                const AnthropometricModel& m, const Vec2& seat = Vec2::Zero(),
                                CopMode cop_mode = CopMode::under_ankle)
{
    const auto hat = hat_balance(pose, cane, m);
    const auto thigh = thigh_balance(pose, hat.tau_hip, hat.F_t, m, seat);
    const auto shank = shank_balance(pose, thigh.tau_knee, thigh.F_l, m);

    Vec2 cop = cop_under_ankle(pose);
    if (cop_mode == CopMode::zero_free_moment) {
        const Vec2 Fg = shank.F_a - weight(m.foot.mass, m.gravity);
        const double mc = ankle_moment_without_free_moment(pose, shank.tau_ankle, m);
        const double h = pose.ankle.y();
        // cross2((px - cx, -h), Fg) = (px - cx) Fgz + h Fgx
        if (std::abs(Fg.y()) > 1e-9) cop.x() = pose.ankle.x() + (mc - h * Fg.x()) / Fg.y();
    }
    const auto foot = foot_closure(pose, shank.tau_ankle, shank.F_a, m, cop);

    SegmentLoads l;
    l.tau_hip = hat.tau_hip;
    l.tau_knee = thigh.tau_knee;
    l.tau_ankle = shank.tau_ankle;
    l.F_t = hat.F_t;
    l.F_l = thigh.F_l;
    l.F_a = shank.F_a;
    l.F_g = foot.F_g;
    l.M_c = foot.M_c;
    l.M_plate = foot.M_plate;
    l.cop = cop;
    l.cop_outside_support = foot.outside_support;
    l.residual = whole_body_residual(pose, cane, seat, l, m).norm();
    return l;
}

struct InverseDynamicsOptions {
    std::vector<Vec2> seat;   // per-frame seat reaction at the hip; empty = none
    CopMode cop = CopMode::under_ankle;
};

/// Per-frame inverse dynamics over a trajectory. `cane` is either empty (no
/// cane) or one entry per frame.
inline std::vector<DynamicsFrame> inverse_dynamics(const PoseTrajectory& traj_in,
                                                   std::span<const CaneForce> cane,
                                                   const AnthropometricModel& m,
                                                   const InverseDynamicsOptions& opt = {})
{
    const PoseTrajectory traj = traj_in.has_derivatives() ? traj_in : differentiate(traj_in);
    traj.validate();
    const std::size_t n = traj.size();
    if (!cane.empty() && cane.size() != n)
        throw ValidationError("cane profile has " + std::to_string(cane.size()) +
                              " entries for " + std::to_string(n) + " frames");
    if (!opt.seat.empty() && opt.seat.size() != n)
        throw ValidationError("seat profile has " + std::to_string(opt.seat.size()) +
                              " entries for " + std::to_string(n) + " frames");

    std::vector<DynamicsFrame> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        DynamicsFrame& f = out[i];
        f.t = traj.timestamps[i];
        f.pose = chain_pose(traj.frames[i], traj.velocities[i], traj.accelerations[i], m);
        if (!cane.empty()) {
            cane[i].validate();
            f.cane = cane[i];
        } else {
            f.cane = CaneForce{};
        }
        f.seat = opt.seat.empty() ? Vec2::Zero() : opt.seat[i];
        f.loads = solve_frame(f.pose, f.cane, m, f.seat, opt.cop);
    }
    return out;
}

inline void write_loads_csv(std::ostream& out, std::span<const DynamicsFrame> frames)
{
    out << "t,tau_hip,tau_knee,tau_ankle,Ftx,Ftz,Flx,Flz,Fax,Faz,Fgx,Fgz,Mc,residual\n";
    for (const auto& f : frames) {
        const auto& l = f.loads;
        const std::array<double, 14> row{f.t,         l.tau_hip,  l.tau_knee, l.tau_ankle, l.F_t.x(),
                                          l.F_t.y(),   l.F_l.x(),  l.F_l.y(),  l.F_a.x(),   l.F_a.y(),
                                          l.F_g.x(),   l.F_g.y(),  l.M_c,      l.residual};
        write_csv_row(out, row);
    }
}

} // namespace sit2stand
