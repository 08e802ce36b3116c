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

// Subject-specific segment parameters for the four-link sagittal model
// (HAT, thigh, shank, foot).
//
// Fractions come from de Leva (1996), "Adjustments to Zatsiorsky-Seluyanov's
// segment inertia parameters", J. Biomech. 29(9), Table 4. Lengths are the
// published reference-subject lengths divided by the reference stature
// (1741 mm male, 1735 mm female). Radii of gyration use the transverse
// (mediolateral) axis column, which is the axis of sagittal-plane rotation.
//
// The HAT is composed from head, trunk and both arms with the arms hanging
// along the trunk axis from a shoulder joint placed at the top of the trunk
// segment (cervicale). Bilateral thigh/shank/foot are pre-summed.

#pragma once

#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "sit2stand/error.hpp"
#include "sit2stand/text.hpp"

namespace sit2stand {

enum class Sex { male, female };

inline std::string_view to_string(Sex s) { return s == Sex::male ? "male" : "female"; }

inline Sex parse_sex(std::string_view s)
{
    if (s == "male" || s == "m") return Sex::male;
    if (s == "female" || s == "f") return Sex::female;
    throw ValidationError("sex must be 'male' or 'female', got '" + std::string(s) + "'", "sex");
}

struct Subject {
    double height = 1.734; // m
    double mass = 88.3;    // kg
    Sex sex = Sex::male;

    void validate() const
    {
        if (!(height > 0.5 && height < 2.5))
            throw ValidationError("subject height must be in (0.5, 2.5) m, got " +
                                      format_double(height),
                                  "height");
        if (!(mass > 20.0 && mass < 250.0))
            throw ValidationError("subject mass must be in (20, 250) kg, got " + format_double(mass),
                                  "mass");
    }
};

/// Mean elderly male used for the cane design requirements.
inline Subject reference_subject() { return Subject{1.734, 88.3, Sex::male}; }

enum class Segment { hat = 0, thigh = 1, shank = 2, foot = 3 };

inline constexpr std::array<Segment, 4> kSegments{Segment::hat, Segment::thigh, Segment::shank,
                                                  Segment::foot};

inline std::string_view to_string(Segment s)
{
    switch (s) {
    case Segment::hat: return "hat";
    case Segment::thigh: return "thigh";
    case Segment::shank: return "shank";
    case Segment::foot: return "foot";
    }
    return "?";
}

/// Dimensionless description of one segment.
struct SegmentFractions {
    double mass_fraction = 0.0;     // of body mass
    double length_fraction = 0.0;   // of stature
    double com_fraction = 0.0;      // of segment length, from proximal end
    double gyration_fraction = 0.0; // sagittal radius of gyration / segment length

    bool operator==(const SegmentFractions&) const = default;
};

/// Foot placement relative to the ankle joint. Not part of de Leva's table.
struct FootFractions {
    double ankle_height_fraction = 0.039;   // ankle joint height / stature
    double ankle_from_heel_fraction = 0.19; // heel-to-ankle / foot length

    bool operator==(const FootFractions&) const = default;
};

struct AnthroTable {
    std::array<SegmentFractions, 4> segments{};
    FootFractions foot{};

    const SegmentFractions& operator[](Segment s) const
    {
        return segments[static_cast<std::size_t>(s)];
    }
    SegmentFractions& operator[](Segment s) { return segments[static_cast<std::size_t>(s)]; }

    bool operator==(const AnthroTable&) const = default;

    double mass_fraction_sum() const
    {
        double s = 0.0;
        for (const auto& f : segments) s += f.mass_fraction;
        return s;
    }

    void validate() const
    {
        for (auto seg : kSegments) {
            const auto& f = (*this)[seg];
            const std::string name = "segment." + std::string(to_string(seg));
            if (!(f.mass_fraction > 0.0))
                throw ValidationError(name + ".mass_fraction must be > 0", name);
            if (!(f.length_fraction > 0.0))
                throw ValidationError(name + ".length_fraction must be > 0", name);
            if (!(f.com_fraction >= 0.0 && f.com_fraction <= 1.0))
                throw ValidationError(name + ".com_fraction must be in [0, 1]", name);
            if (!(f.gyration_fraction >= 0.0))
                throw ValidationError(name + ".gyration_fraction must be >= 0", name);
        }
        if (!(foot.ankle_height_fraction >= 0.0 && foot.ankle_from_heel_fraction >= 0.0 &&
              foot.ankle_from_heel_fraction <= 1.0))
            throw ValidationError("foot fractions out of range", "foot");
    }
};

namespace deleva {

/// One row of de Leva (1996) Table 4.
struct Row {
    double mass_pct;   // % body mass
    double length_mm;  // reference subject
    double com_pct;    // % length from the proximal endpoint
    double r_trans_pct; // transverse-axis radius of gyration, % length
};

struct SexTable {
    double stature_mm;
    Row head;      // proximal endpoint: vertex
    Row trunk;     // proximal endpoint: cervicale, distal: mid-hip
    Row upper_arm;
    Row forearm;
    Row hand;
    Row thigh;
    Row shank;
    Row foot;      // heel to toe tip
};

inline constexpr SexTable kMale{
    1741.0,
    {6.94, 203.3, 59.76, 37.6},
    {43.46, 531.9, 44.86, 34.7},
    {2.71, 281.7, 57.72, 26.9},
    {1.62, 268.9, 45.74, 26.5},
    {0.61, 86.2, 79.00, 51.3},
    {14.16, 422.2, 40.95, 32.9},
    {4.33, 434.0, 44.59, 24.9},
    {1.37, 258.1, 44.15, 24.5},
};

inline constexpr SexTable kFemale{
    1735.0,
    {6.68, 200.2, 58.94, 35.9},
    {42.57, 529.3, 41.51, 33.9},
    {2.55, 275.1, 57.54, 26.0},
    {1.38, 264.3, 45.59, 25.7},
    {0.56, 78.0, 74.74, 45.4},
    {14.78, 368.5, 36.12, 36.4},
    {4.81, 432.3, 44.16, 26.7},
    {1.29, 228.3, 40.14, 27.9},
};

/// Lumps head, trunk and both arms into a single rigid HAT measured from the
/// hip upward. Positions are distances along the trunk axis from mid-hip.
inline SegmentFractions compose_hat(const SexTable& t)
{
    struct Part {
        double mass;
        double pos;
        double inertia;
    };
    auto part = [](const Row& r, double pos, double count) {
        const double m = count * r.mass_pct / 100.0;
        const double k = r.r_trans_pct / 100.0 * r.length_mm;
        return Part{m, pos, m * k * k};
    };

    const double trunk_len = t.trunk.length_mm;
    const double shoulder = trunk_len;
    const double elbow = shoulder - t.upper_arm.length_mm;
    const double wrist = elbow - t.forearm.length_mm;

    const std::array<Part, 5> parts{
        part(t.head, trunk_len + (1.0 - t.head.com_pct / 100.0) * t.head.length_mm, 1.0),
        part(t.trunk, (1.0 - t.trunk.com_pct / 100.0) * trunk_len, 1.0),
        part(t.upper_arm, shoulder - t.upper_arm.com_pct / 100.0 * t.upper_arm.length_mm, 2.0),
        part(t.forearm, elbow - t.forearm.com_pct / 100.0 * t.forearm.length_mm, 2.0),
        part(t.hand, wrist - t.hand.com_pct / 100.0 * t.hand.length_mm, 2.0),
    };

    double mass = 0.0, moment = 0.0;
    for (const auto& p : parts) {
        mass += p.mass;
        moment += p.mass * p.pos;
    }
    const double com = moment / mass;
    double inertia = 0.0;
    for (const auto& p : parts) inertia += p.inertia + p.mass * (p.pos - com) * (p.pos - com);

    const double hat_len = trunk_len + t.head.length_mm;
    SegmentFractions f;
    f.mass_fraction = mass;
    f.length_fraction = hat_len / t.stature_mm;
    f.com_fraction = com / hat_len;
    f.gyration_fraction = std::sqrt(inertia / mass) / hat_len;
    return f;
}

inline SegmentFractions bilateral(const Row& r, double stature_mm)
{
    return SegmentFractions{2.0 * r.mass_pct / 100.0, r.length_mm / stature_mm, r.com_pct / 100.0,
                            r.r_trans_pct / 100.0};
}

inline AnthroTable build(const SexTable& t)
{
    AnthroTable out;
    out[Segment::hat] = compose_hat(t);
    out[Segment::thigh] = bilateral(t.thigh, t.stature_mm);
    out[Segment::shank] = bilateral(t.shank, t.stature_mm);
    out[Segment::foot] = bilateral(t.foot, t.stature_mm);
    // The published female percentages sum to 99.99; the rounding residual
    // goes to the HAT so the partition is complete.
    out[Segment::hat].mass_fraction = 1.0 - (out[Segment::thigh].mass_fraction +
                                             out[Segment::shank].mass_fraction +
                                             out[Segment::foot].mass_fraction);
    return out;
}

} // namespace deleva

/// Built-in fraction table for the given sex.
inline const AnthroTable& default_table(Sex sex = Sex::male)
{
    static const AnthroTable male = deleva::build(deleva::kMale);
    static const AnthroTable female = deleva::build(deleva::kFemale);
    return sex == Sex::male ? male : female;
}

inline void write_table(std::ostream& out, const AnthroTable& table)
{
    for (auto seg : kSegments) {
        const auto& f = table[seg];
        const std::string p = "segment." + std::string(to_string(seg)) + ".";
        out << p << "mass_fraction = " << format_double(f.mass_fraction) << '\n';
        out << p << "length_fraction = " << format_double(f.length_fraction) << '\n';
        out << p << "com_fraction = " << format_double(f.com_fraction) << '\n';
        out << p << "gyration_fraction = " << format_double(f.gyration_fraction) << '\n';
    }
    out << "foot.ankle_height_fraction = " << format_double(table.foot.ankle_height_fraction)
        << '\n';
    out << "foot.ankle_from_heel_fraction = "
        << format_double(table.foot.ankle_from_heel_fraction) << '\n';
}

inline std::vector<std::string> table_keys()
{
    std::vector<std::string> keys;
    for (auto seg : kSegments) {
        const std::string p = "segment." + std::string(to_string(seg)) + ".";
        for (const char* f : {"mass_fraction", "length_fraction", "com_fraction", "gyration_fraction"})
            keys.push_back(p + f);
    }
    keys.emplace_back("foot.ankle_height_fraction");
    keys.emplace_back("foot.ankle_from_heel_fraction");
    return keys;
}

/// Applies overrides from a key-value config on top of `base`. Keys that are
/// absent keep the base value.
inline AnthroTable apply_overrides(const KeyValueConfig& cfg, AnthroTable base)
{
    cfg.require_known(table_keys());
    for (auto seg : kSegments) {
        auto& f = base[seg];
        const std::string p = "segment." + std::string(to_string(seg)) + ".";
        f.mass_fraction = cfg.get_double(p + "mass_fraction", f.mass_fraction);
        f.length_fraction = cfg.get_double(p + "length_fraction", f.length_fraction);
        f.com_fraction = cfg.get_double(p + "com_fraction", f.com_fraction);
        f.gyration_fraction = cfg.get_double(p + "gyration_fraction", f.gyration_fraction);
    }
    base.foot.ankle_height_fraction =
        cfg.get_double("foot.ankle_height_fraction", base.foot.ankle_height_fraction);
    base.foot.ankle_from_heel_fraction =
        cfg.get_double("foot.ankle_from_heel_fraction", base.foot.ankle_from_heel_fraction);
    base.validate();
    return base;
}

inline AnthroTable read_table(std::istream& in, const std::string& source = "<table>",
                              const AnthroTable& base = default_table())
{
    return apply_overrides(KeyValueConfig::parse(in, source), base);
}

struct SegmentParams {
    double mass = 0.0;             // kg
    double length = 0.0;           // m
    double com_offset = 0.0;       // fraction of length from the proximal joint
    double inertia_sagittal = 0.0; // kg m^2 about the COM

    double com_distance() const { return com_offset * length; }
};

struct FootGeometry {
    double ankle_height = 0.0;    // ankle joint above the floor, m
    double ankle_from_heel = 0.0; // m
    double length = 0.0;          // heel to toe, m

    double heel_x() const { return -ankle_from_heel; }
    double toe_x() const { return length - ankle_from_heel; }
};

struct AnthropometricModel {
    SegmentParams hat, thigh, shank, foot;
    FootGeometry foot_geometry;
    double total_mass = 0.0;
    double stature = 0.0;
    double gravity = 9.81;

    const SegmentParams& operator[](Segment s) const
    {
        switch (s) {
        case Segment::hat: return hat;
        case Segment::thigh: return thigh;
        case Segment::shank: return shank;
        case Segment::foot: return foot;
        }
        return hat;
    }

    double segment_mass_sum() const { return hat.mass + thigh.mass + shank.mass + foot.mass; }
    double body_weight() const { return total_mass * gravity; }

    /// Hip height above the floor when standing upright.
    double standing_hip_height() const
    {
        return foot_geometry.ankle_height + shank.length + thigh.length;
    }
};

inline AnthropometricModel scale_anthropometrics(const Subject& subject, const AnthroTable& table,
                                                 double gravity = 9.81)
{
    subject.validate();
    table.validate();
    const double fraction_sum = table.mass_fraction_sum();

    AnthropometricModel m;
    m.total_mass = subject.mass;
    m.stature = subject.height;
    m.gravity = gravity;
    auto scale = [&](Segment seg) {
        const auto& f = table[seg];
        SegmentParams p;
        p.mass = subject.mass * f.mass_fraction / fraction_sum;
        p.length = subject.height * f.length_fraction;
        p.com_offset = f.com_fraction;
        const double k = f.gyration_fraction * p.length;
        p.inertia_sagittal = p.mass * k * k;
        return p;
    };
    m.hat = scale(Segment::hat);
    m.thigh = scale(Segment::thigh);
    m.shank = scale(Segment::shank);
    m.foot = scale(Segment::foot);
    m.foot_geometry.length = m.foot.length;
    m.foot_geometry.ankle_height = table.foot.ankle_height_fraction * subject.height;
    m.foot_geometry.ankle_from_heel = table.foot.ankle_from_heel_fraction * m.foot.length;
    return m;
}

inline AnthropometricModel scale_anthropometrics(const Subject& subject)
{
    return scale_anthropometrics(subject, default_table(subject.sex));
}

/// Cane-relevant reference height: the upper limb reaches to about 53% of
/// stature.
inline double cane_reference_height(const Subject& s) { return 0.53 * s.height; }

/// Stroke the cane needs if hip rise equals thigh length (~30% of stature).
inline double required_stroke(const Subject& s) { return 0.30 * s.height; }

} // namespace sit2stand
