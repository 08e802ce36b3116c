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
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sit2stand/anthro.hpp"

using namespace sit2stand;

TEST(Anthro, MaleFractionsFromPublishedRows)
{
    const auto& t = default_table(Sex::male);
    EXPECT_NEAR(t[Segment::thigh].mass_fraction, 0.2832, 1e-12);
    EXPECT_NEAR(t[Segment::shank].mass_fraction, 0.0866, 1e-12);
    EXPECT_NEAR(t[Segment::foot].mass_fraction, 0.0274, 1e-12);
    EXPECT_NEAR(t[Segment::hat].mass_fraction, 0.0694 + 0.4346 + 2 * (0.0271 + 0.0162 + 0.0061), 1e-12);
    EXPECT_NEAR(t.mass_fraction_sum(), 1.0, 1e-12);
    EXPECT_NEAR(t[Segment::thigh].length_fraction, 422.2 / 1741.0, 1e-12);
    EXPECT_NEAR(t[Segment::shank].com_fraction, 0.4459, 1e-12);
    EXPECT_NEAR(t[Segment::foot].gyration_fraction, 0.245, 1e-12);
    EXPECT_NEAR(t[Segment::hat].length_fraction, (203.3 + 531.9) / 1741.0, 1e-12);
}

TEST(Anthro, HatCentreOfMassMeasuredFromVertex)
{
    // Same composition, measured down from the vertex instead of up from the hip.
    const double head = 203.3, trunk = 531.9, ua = 281.7, fa = 268.9, hand = 86.2;
    const double m[] = {0.0694, 0.4346, 2 * 0.0271, 2 * 0.0162, 2 * 0.0061};
    const double d[] = {0.5976 * head, head + 0.4486 * trunk, head + 0.5772 * ua, head + ua + 0.4574 * fa,
                        head + ua + fa + 0.79 * hand};
    double mass = 0, moment = 0;
    for (int i = 0; i < 5; ++i) {
        mass += m[i];
        moment += m[i] * d[i];
    }
    const double len = head + trunk;
    const double from_hip = (len - moment / mass) / len;
    EXPECT_NEAR(default_table(Sex::male)[Segment::hat].com_fraction, from_hip, 1e-12);
}

TEST(Anthro, FemaleResidualGoesToHat)
{
    const auto& t = default_table(Sex::female);
    EXPECT_NEAR(t.mass_fraction_sum(), 1.0, 1e-12);
    EXPECT_NEAR(t[Segment::hat].mass_fraction, 0.0668 + 0.4257 + 2 * (0.0255 + 0.0138 + 0.0056) + 0.0001, 1e-12);
    EXPECT_NEAR(t[Segment::thigh].mass_fraction, 0.2956, 1e-12);
}

TEST(Anthro, ReferenceSubjectScaling)
{
    const auto m = scale_anthropometrics(reference_subject());
    EXPECT_NEAR(m.segment_mass_sum(), 88.3, 1e-9);
    EXPECT_NEAR(m.thigh.mass, 88.3 * 0.2832, 1e-9);
    EXPECT_NEAR(m.thigh.length, 1.734 * 422.2 / 1741.0, 1e-12);
    EXPECT_NEAR(m.foot_geometry.ankle_height, 0.039 * 1.734, 1e-12);
    const double k = 0.329 * m.thigh.length;
    EXPECT_NEAR(m.thigh.inertia_sagittal, m.thigh.mass * k * k, 1e-12);
    EXPECT_NEAR(m.body_weight(), 88.3 * 9.81, 1e-9);
    EXPECT_NEAR(cane_reference_height(reference_subject()), 0.53 * 1.734, 1e-12);
    EXPECT_NEAR(required_stroke(reference_subject()), 0.30 * 1.734, 1e-12);
}

TEST(Anthro, MassPartitionPropertyOverRandomSubjects)
{
    oracle::Gen gen(11);
    for (int i = 0; i < 500; ++i) {
        Subject s{gen.uniform(1.4, 2.0), gen.uniform(40, 140), i % 2 ? Sex::male : Sex::female};
        const auto m = scale_anthropometrics(s);
        ASSERT_NEAR(m.segment_mass_sum(), s.mass, 1e-9 * s.mass);
        // Lengths scale linearly with stature.
        Subject s2 = s;
        s2.height *= 1.1;
        const auto m2 = scale_anthropometrics(s2);
        ASSERT_NEAR(m2.shank.length / m.shank.length, 1.1, 1e-12);
    }
}

TEST(Anthro, InvalidSubjectNamesField)
{
    try {
        scale_anthropometrics(Subject{1.7, -3.0, Sex::male});
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "mass");
    }
    EXPECT_THROW(scale_anthropometrics(Subject{0.0, 70.0, Sex::male}), ValidationError);
    EXPECT_THROW(parse_sex("x"), ValidationError);
}

TEST(Anthro, OverrideRoundTrip)
{
    std::ostringstream out;
    write_table(out, default_table(Sex::female));
    std::istringstream in(out.str());
    const auto back = read_table(in, "<roundtrip>", default_table(Sex::male));
    EXPECT_EQ(back, default_table(Sex::female));
}

TEST(Anthro, OverrideRejectsUnknownKeyWithLine)
{
    std::istringstream in("# header\nsegment.thigh.mass_fraction = 0.3\nsegment.tail.mass = 1\n");
    try {
        read_table(in, "over.cfg");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("over.cfg:3"), std::string::npos) << e.what();
    }
}

TEST(Anthro, OverrideNormalisesMasses)
{
    std::istringstream in("segment.thigh.mass_fraction = 0.5\n");
    const auto t = read_table(in);
    const auto m = scale_anthropometrics(reference_subject(), t);
    EXPECT_NEAR(m.segment_mass_sum(), 88.3, 1e-9);
    EXPECT_NEAR(m.thigh.mass, 88.3 * 0.5 / t.mass_fraction_sum(), 1e-9);
}
