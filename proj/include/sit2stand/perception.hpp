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

// Skeleton frames from a depth-camera body tracker -> sagittal joint angles.
//
// Record format, one frame per line:
//   <t> <joint>:<x>,<y>,<z>[,<conf>] <joint>:...
// Blank lines and lines starting with '#' are skipped. Confidence defaults
// to 1. Left/right pairs are named <joint>_left and <joint>_right.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sit2stand/error.hpp"
#include "sit2stand/kinematics.hpp"
#include "sit2stand/signal.hpp"
#include "sit2stand/text.hpp"

namespace sit2stand {

using Vec3 = Eigen::Vector3d;

inline const std::array<std::string, 5> kRequiredJoints{"shoulder_center", "hip", "knee", "ankle",
                                                        "foot"};

struct SkeletonFrame {
    double timestamp = 0.0;
    std::map<std::string, Vec3> joints;
    std::map<std::string, double> confidence;

    const Vec3& at(const std::string& name) const
    {
        auto it = joints.find(name);
        if (it == joints.end())
            throw ValidationError("skeleton frame at t=" + format_double(timestamp) +
                                      " lacks joint '" + name + "'",
                                  name);
        return it->second;
    }

    double confidence_of(const std::string& name) const
    {
        auto it = confidence.find(name);
        return it == confidence.end() ? 1.0 : it->second;
    }

    void set(const std::string& name, const Vec3& p, double conf = 1.0)
    {
        joints[name] = p;
        confidence[name] = conf;
    }

    void validate() const
    {
        for (const auto& name : kRequiredJoints) {
            if (!at(name).allFinite())
                throw ValidationError("joint '" + name + "' has non-finite coordinates", name);
        }
    }
};

inline SkeletonFrame parse_skeleton_record(const std::string& line, const std::string& where)
{
    std::istringstream in(line);
    std::string tok;
    SkeletonFrame f;
    if (!(in >> tok)) throw ValidationError(where + ": empty record");
    const auto t = parse_double(tok);
    if (!t || !std::isfinite(*t)) throw ValidationError(where + ": bad timestamp '" + tok + "'");
    f.timestamp = *t;
    while (in >> tok) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos || colon == 0)
            throw ValidationError(where + ": expected joint:x,y,z[,conf], got '" + tok + "'");
        const std::string name = tok.substr(0, colon);
        const auto parts = split(std::string_view(tok).substr(colon + 1), ',');
        if (parts.size() != 3 && parts.size() != 4)
            throw ValidationError(where + ": joint '" + name + "' needs 3 or 4 numbers");
        std::array<double, 4> v{0, 0, 0, 1.0};
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const auto d = parse_double(parts[i]);
            if (!d) throw ValidationError(where + ": joint '" + name + "': bad number '" + parts[i] + "'");
            v[i] = *d;
        }
        if (!(v[3] >= 0.0 && v[3] <= 1.0))
            throw ValidationError(where + ": joint '" + name + "': confidence outside [0, 1]");
        if (f.joints.count(name)) throw ValidationError(where + ": duplicate joint '" + name + "'");
        f.set(name, Vec3(v[0], v[1], v[2]), v[3]);
    }
    return f;
}

inline std::vector<SkeletonFrame> read_skeleton_records(std::istream& in,
                                                        const std::string& source = "<skeleton>")
{
    std::vector<SkeletonFrame> frames;
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const std::string where = source + ":" + std::to_string(lineno);
        auto f = parse_skeleton_record(std::string(line), where);
        try {
            f.validate();
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what(), e.field());
        }
        if (!frames.empty() && !(f.timestamp > frames.back().timestamp))
            throw ValidationError(where + ": timestamps must increase");
        frames.push_back(std::move(f));
    }
    return frames;
}

inline void write_skeleton_record(std::ostream& out, const SkeletonFrame& f)
{
    out << format_double(f.timestamp);
    for (const auto& [name, p] : f.joints)
        out << ' ' << name << ':' << format_double(p.x()) << ',' << format_double(p.y()) << ','
            << format_double(p.z()) << ',' << format_double(f.confidence_of(name));
    out << '\n';
}

/// Sagittal plane with an in-plane frame: `up` is the vertical projected into
/// the plane, `forward` points from the ankle toward the foot, and
/// normal = up x forward.
struct Plane {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitY();
    Vec3 up = Vec3::UnitZ();
    Vec3 forward = Vec3::UnitX();

    Vec3 project(const Vec3& p) const { return p - (p - point).dot(normal) * normal; }
    Vec2 coords(const Vec3& p) const { return {(p - point).dot(forward), (p - point).dot(up)}; }
};

struct PlaneFitOptions {
    Vec3 vertical = Vec3::UnitZ(); // gravity-up direction in camera coordinates
    std::size_t min_frames = 10;
};

/// Builds the in-plane frame for a given normal.
inline Plane make_plane(const Vec3& point, const Vec3& normal_in, const Vec3& vertical,
                        const Vec3& forward_hint)
{
    Vec3 n = normal_in.normalized();
    Vec3 up = vertical - vertical.dot(n) * n;
    if (up.norm() < 1e-6)
        throw ValidationError("sagittal plane is horizontal; set the plane manually", "plane");
    up.normalize();
    Vec3 fwd = up.cross(n);
    if (fwd.dot(forward_hint) < 0) fwd = -fwd;
    Plane pl;
    pl.point = point;
    pl.up = up;
    pl.forward = fwd;
    pl.normal = up.cross(fwd);
    return pl;
}

/// Normal from left/right joint pairs when the frames carry them, otherwise
/// the direction of least positional variance.
inline Plane fit_sagittal_plane(const std::vector<SkeletonFrame>& frames, const PlaneFitOptions& opt = {})
{
    if (frames.size() < opt.min_frames)
        throw ValidationError("plane fit needs at least " + std::to_string(opt.min_frames) +
                              " frames, got " + std::to_string(frames.size()));
    Vec3 centroid = Vec3::Zero();
    Vec3 forward_hint = Vec3::Zero();
    std::size_t count = 0;
    for (const auto& f : frames) {
        f.validate();
        for (const auto& j : kRequiredJoints) {
            centroid += f.at(j);
            ++count;
        }
        forward_hint += f.at("foot") - f.at("ankle");
    }
    centroid /= static_cast<double>(count);

    // Motion check: per-joint scatter over time.
    double motion = 0.0;
    for (const auto& j : kRequiredJoints) {
        Vec3 mean = Vec3::Zero();
        for (const auto& f : frames) mean += f.at(j);
        mean /= static_cast<double>(frames.size());
        for (const auto& f : frames) motion += (f.at(j) - mean).squaredNorm();
    }
    if (motion < 1e-12)
        throw ValidationError("degenerate skeleton input: no motion; configure the sagittal plane manually",
                              "plane");

    Vec3 lateral = Vec3::Zero();
    for (const auto& f : frames)
        for (const auto& [name, p] : f.joints) {
            const auto pos = name.rfind("_left");
            if (pos == std::string::npos || pos + 5 != name.size()) continue;
            auto right = f.joints.find(name.substr(0, pos) + "_right");
            if (right != f.joints.end()) lateral += right->second - p;
        }

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& f : frames)
        for (const auto& j : kRequiredJoints) {
            const Vec3 d = f.at(j) - centroid;
            cov += d * d.transpose();
        }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d ev = eig.eigenvalues(); // ascending
    if (ev(1) <= 1e-9 * ev(2))
        throw ValidationError("degenerate skeleton input: joints are collinear; configure the sagittal "
                              "plane manually",
                              "plane");

    Vec3 normal;
    if (lateral.norm() > 1e-9) {
        normal = lateral.normalized();
    } else {
        normal = eig.eigenvectors().col(0);
    }
    return make_plane(centroid, normal, opt.vertical, forward_hint);
}

struct SagittalFrame {
    double timestamp = 0.0;
    std::map<std::string, Vec2> points; // in-plane (forward, up) coordinates
    JointAngles angles;
    bool low_confidence = false;
    std::vector<std::string> low_joints;
};

struct ProjectionOptions {
    double confidence_threshold = 0.3;
    double neutral_foot_pitch = 0.0; // downward pitch of ankle->foot in neutral stance, rad
};

inline double angle_between(const Vec2& a, const Vec2& b)
{
    return std::atan2(std::abs(cross2(a, b)), a.dot(b));
}

/// Projects the joints into the plane and measures the angles. The ankle
/// angle is reported in the chain convention: pi when the shank is
/// perpendicular to the (neutral) foot line.
inline SagittalFrame project_and_angles(const SkeletonFrame& f, const Plane& pl,
                                        const ProjectionOptions& opt = {})
{
    f.validate();
    SagittalFrame s;
    s.timestamp = f.timestamp;
    for (const auto& j : kRequiredJoints) {
        s.points[j] = pl.coords(f.at(j));
        if (f.confidence_of(j) < opt.confidence_threshold) s.low_joints.push_back(j);
    }
    s.low_confidence = !s.low_joints.empty();

    const Vec2& sh = s.points["shoulder_center"];
    const Vec2& hp = s.points["hip"];
    const Vec2& kn = s.points["knee"];
    const Vec2& an = s.points["ankle"];
    const Vec2& ft = s.points["foot"];
    const Vec2 trunk = sh - hp;
    s.angles.hip = angle_between(trunk, kn - hp);
    s.angles.knee = angle_between(hp - kn, an - kn);
    s.angles.ankle =
        angle_between(kn - an, ft - an) + 0.5 * std::numbers::pi - opt.neutral_foot_pitch;
    s.angles.trunk_abs = std::atan2(trunk.x(), trunk.y());
    return s;
}

enum class AnklePolicy {
    measured, // low-confidence frames are dropped and gap-filled
    prior,    // frames low only at ankle/foot keep their other angles; ankle uses the prior
};

struct SmoothOptions {
    double max_gap = 0.25;       // s
    double lowpass_hz = 6.0;     // <= 0 disables the filter
    AnklePolicy ankle = AnklePolicy::measured;
    double ankle_prior = std::numbers::pi - 0.1745; // rad, seated shank tilt of 10 deg
};

/// Gap-fills (linear), low-pass filters (zero-phase Butterworth) and
/// resamples onto a uniform grid, then differentiates.
inline PoseTrajectory smooth_and_resample(const std::vector<SagittalFrame>& frames, double rate_hz,
                                          const SmoothOptions& opt = {})
{
    if (!(rate_hz > 0.0)) throw ValidationError("resample rate must be > 0", "rate");
    std::vector<double> t;
    std::array<std::vector<double>, 4> y;
    for (const auto& f : frames) {
        if (!t.empty() && !(f.timestamp > t.back()))
            throw ValidationError("sagittal frames must have increasing timestamps");
        bool keep = !f.low_confidence;
        bool use_prior = false;
        if (!keep && opt.ankle == AnklePolicy::prior) {
            keep = std::all_of(f.low_joints.begin(), f.low_joints.end(),
                               [](const std::string& j) { return j == "ankle" || j == "foot"; });
            use_prior = keep;
        }
        if (!keep) continue;
        auto a = f.angles.as_array();
        if (opt.ankle == AnklePolicy::prior && (use_prior || f.low_confidence)) a[3] = opt.ankle_prior;
        t.push_back(f.timestamp);
        for (std::size_t j = 0; j < 4; ++j) y[j].push_back(a[j]);
    }
    if (t.size() < 5)
        throw ValidationError("need at least 5 valid frames, got " + std::to_string(t.size()));
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] - t[i - 1] > opt.max_gap + 1e-12)
            throw ValidationError("gap of " + format_double(t[i] - t[i - 1]) + " s in [" +
                                  format_double(t[i - 1]) + ", " + format_double(t[i]) +
                                  "] exceeds " + format_double(opt.max_gap) + " s");

    const auto n = static_cast<std::size_t>(std::floor((t.back() - t.front()) * rate_hz + 1e-9)) + 1;
    if (n < 5) throw ValidationError("resampled trajectory would have fewer than 5 frames");
    std::vector<double> grid(n);
    for (std::size_t k = 0; k < n; ++k) grid[k] = t.front() + static_cast<double>(k) / rate_hz;

    PoseTrajectory out;
    out.timestamps = grid;
    out.frames.assign(n, JointAngles{0, 0, 0, 0});
    out.velocities.assign(n, JointAngles{0, 0, 0, 0});
    out.accelerations.assign(n, JointAngles{0, 0, 0, 0});
    std::vector<double> r(n), dr(n), ddr(n);
    for (std::size_t j = 0; j < 4; ++j) {
        for (std::size_t k = 0; k < n; ++k) r[k] = signal::interp_linear(t, y[j], grid[k]);
        if (opt.lowpass_hz > 0.0 && opt.lowpass_hz < 0.5 * rate_hz)
            r = signal::filtfilt_lowpass(r, opt.lowpass_hz, rate_hz);
        signal::derivatives(grid, r, dr, ddr);
        for (std::size_t k = 0; k < n; ++k) {
            auto q = out.frames[k].as_array();
            auto dq = out.velocities[k].as_array();
            auto ddq = out.accelerations[k].as_array();
            q[j] = r[k];
            dq[j] = dr[k];
            ddq[j] = ddr[k];
            out.frames[k] = JointAngles::from_array(q);
            out.velocities[k] = JointAngles::from_array(dq);
            out.accelerations[k] = JointAngles::from_array(ddq);
        }
    }
    return out;
}

/// Skeleton of the model chain in the x-z plane (y = 0), with the shoulder
/// centre `shoulder_fraction` of the HAT length above the hip and the foot
/// joint level with the ankle at the toe.
inline SkeletonFrame synthesize_skeleton(double timestamp, const JointAngles& q,
                                         const AnthropometricModel& m,
                                         double shoulder_fraction = 0.72)
{
    const ChainPose p = forward_kinematics(q, m);
    auto lift = [](const Vec2& v) { return Vec3(v.x(), 0.0, v.y()); };
    SkeletonFrame f;
    f.timestamp = timestamp;
    f.set("shoulder_center", lift(p.hat_point(shoulder_fraction, 0.0, m.hat.length)));
    f.set("hip", lift(p.hip));
    f.set("knee", lift(p.knee));
    f.set("ankle", lift(p.ankle));
    f.set("foot", lift(Vec2(p.ankle.x() + m.foot_geometry.toe_x(), p.ankle.y())));
    return f;
}

} // namespace sit2stand
