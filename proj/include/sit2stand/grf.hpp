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

// Sit-to-stand events and the ten vertical ground reaction force parameters
// used as falls-risk indicators (Yamada & Demura):
//   F1 force at hip lift-off, F2 peak force,
//   T1 start -> lift-off, T2 lift-off -> peak, T3 peak -> completion,
//   P1..P3 impulses over T1..T3,
//   V1 (F2 - F1) / T2, V2 least-squares force slope over T3.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sit2stand/error.hpp"
#include "sit2stand/signal.hpp"
#include "sit2stand/text.hpp"

namespace sit2stand {

struct GrfProfile {
    std::vector<double> t;
    std::vector<double> fz; // vertical foot force, N
    std::optional<std::vector<double>> seat_fz;
    std::optional<std::vector<double>> cane_fz;
    double body_weight = 0.0; // N

    std::size_t size() const { return t.size(); }

    void validate() const
    {
        if (t.size() != fz.size()) throw ValidationError("GRF: t and fz differ in length");
        if (seat_fz && seat_fz->size() != t.size())
            throw ValidationError("GRF: seat_fz length mismatch");
        if (cane_fz && cane_fz->size() != t.size())
            throw ValidationError("GRF: cane_fz length mismatch");
        if (!(body_weight > 0.0)) throw ValidationError("GRF: body weight must be > 0", "body_weight");
        for (std::size_t i = 1; i < t.size(); ++i)
            if (!(t[i] > t[i - 1]))
                throw ValidationError("GRF: timestamps must be strictly increasing (sample " +
                                      std::to_string(i) + ")");
    }

    double sample_rate() const
    {
        if (t.size() < 2) return 0.0;
        std::vector<double> dt(t.size() - 1);
        for (std::size_t i = 1; i < t.size(); ++i) dt[i - 1] = t[i] - t[i - 1];
        std::nth_element(dt.begin(), dt.begin() + static_cast<std::ptrdiff_t>(dt.size() / 2), dt.end());
        return 1.0 / dt[dt.size() / 2];
    }
};

struct StsEvents {
    double t_start = 0.0;
    double t_liftoff = 0.0;
    double t_peak = 0.0;
    double t_end = 0.0;

    bool ordered() const { return t_start <= t_liftoff && t_liftoff <= t_peak && t_peak <= t_end; }
};

struct EventConfig {
    double seat_threshold = 5.0;      // N, seat channel lift-off threshold
    double settle_band = 0.02;        // fraction of body weight
    double settle_duration = 0.2;     // s
    double baseline_window = 0.2;     // s, foot-only lift-off heuristic
    double liftoff_rise_fraction = 0.9; // of the way from baseline to body weight
    double liftoff_sustain = 0.1;     // s
    bool detect_onset = false;        // otherwise t_start is the first sample
    double onset_band = 0.02;         // fraction of body weight
};

namespace detail {

inline std::size_t first_index_at_or_after(std::span<const double> t, double at)
{
    return static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), at) - t.begin());
}

/// True if every sample in [i, i + duration] satisfies pred.
template <typename Pred>
bool holds_for(std::span<const double> t, std::size_t i, double duration, Pred pred)
{
    if (t.back() - t[i] < duration - 1e-12) return false;
    for (std::size_t j = i; j < t.size() && t[j] - t[i] <= duration + 1e-12; ++j)
        if (!pred(j)) return false;
    return true;
}

} // namespace detail

/// Hip lift-off: seat force falls below the threshold when a seat channel is
/// present; otherwise the foot (plus cane) force rises from its initial
/// baseline most of the way to body weight and stays there.
/// Completion: the force stays within the settle band of body weight for the
/// settle duration. Peak: the largest local maximum between lift-off and the
/// start of the terminal settled stretch, so a monotone approach to body
/// weight is not mistaken for a peak.
inline StsEvents detect_events(const GrfProfile& p, const EventConfig& cfg = {})
{
    p.validate();
    const std::size_t n = p.size();
    if (n < 4 || p.t.back() - p.t.front() < 1.0)
        throw ValidationError("GRF profile must cover at least 1 s");
    const double bw = p.body_weight;
    const std::span<const double> t(p.t);
    const auto& f = p.fz;

    // Lift-off.
    std::optional<std::size_t> lo;
    if (p.seat_fz) {
        const auto& s = *p.seat_fz;
        if (!(s.front() >= cfg.seat_threshold))
            throw IncompleteMovement("seat channel shows no initial seat contact");
        for (std::size_t i = 1; i < n && !lo; ++i)
            if (s[i] < cfg.seat_threshold) lo = i;
    } else {
        std::vector<double> support(f);
        if (p.cane_fz)
            for (std::size_t i = 0; i < n; ++i) support[i] += (*p.cane_fz)[i];
        const std::size_t nb =
            std::max<std::size_t>(1, detail::first_index_at_or_after(t, t.front() + cfg.baseline_window));
        double baseline = 0.0;
        for (std::size_t i = 0; i < nb; ++i) baseline += support[i];
        baseline /= static_cast<double>(nb);
        if (bw - baseline > cfg.settle_band * bw) {
            const double level = baseline + cfg.liftoff_rise_fraction * (bw - baseline);
            for (std::size_t i = nb; i < n && !lo; ++i)
                if (support[i] > level &&
                    detail::holds_for(t, i, cfg.liftoff_sustain, [&](std::size_t j) { return support[j] > level; }))
                    lo = i;
        }
    }
    if (!lo) throw IncompleteMovement("incomplete movement: no hip lift-off found");

    // Terminal settled stretch.
    auto in_band = [&](std::size_t j) { return std::abs(f[j] - bw) <= cfg.settle_band * bw; };
    std::size_t terminal = n;
    while (terminal > *lo + 1 && in_band(terminal - 1)) --terminal;
    if (terminal == n || t.back() - t[terminal] < cfg.settle_duration - 1e-12)
        throw IncompleteMovement("incomplete movement: force never settles at body weight");

    // Peak.
    std::optional<std::size_t> pk;
    for (std::size_t i = *lo + 1; i + 1 < terminal; ++i)
        if (f[i] >= f[i - 1] && f[i] > f[i + 1] && (!pk || f[i] > f[*pk])) pk = i;
    if (!pk) {
        pk = *lo + 1;
        for (std::size_t i = *lo + 1; i <= terminal && i < n; ++i)
            if (f[i] > f[*pk]) pk = i;
    }

    // Completion.
    std::size_t end = *pk;
    while (end < n && !(in_band(end) && detail::holds_for(t, end, cfg.settle_duration, in_band))) ++end;
    if (end == n) throw IncompleteMovement("incomplete movement: no settling after the peak");

    StsEvents ev;
    ev.t_start = t.front();
    if (cfg.detect_onset) {
        const std::vector<double>& ref = p.seat_fz ? *p.seat_fz : f;
        for (std::size_t i = 1; i < *lo; ++i)
            if (std::abs(ref[i] - ref[0]) > cfg.onset_band * bw) {
                ev.t_start = t[i - 1];
                break;
            }
    }
    ev.t_liftoff = t[*lo];
    ev.t_peak = t[*pk];
    ev.t_end = t[end];
    return ev;
}

struct GrfParameters {
    double F1 = 0, F2 = 0;
    double T1 = 0, T2 = 0, T3 = 0;
    double P1 = 0, P2 = 0, P3 = 0;
    double V1 = 0, V2 = 0;
    double body_weight = 0;
    std::vector<std::string> notes; // reasons for any NaN entries

    double F1_pct_bw() const { return 100.0 * F1 / body_weight; }
    double F2_pct_bw() const { return 100.0 * F2 / body_weight; }
};

inline constexpr std::array<const char*, 12> kParameterNames{
    "F1", "F2", "F1_pct_bw", "F2_pct_bw", "T1", "T2", "T3", "P1", "P2", "P3", "V1", "V2"};

inline std::array<double, 12> parameter_values(const GrfParameters& p)
{
    return {p.F1, p.F2, p.F1_pct_bw(), p.F2_pct_bw(), p.T1, p.T2, p.T3, p.P1, p.P2, p.P3, p.V1, p.V2};
}

/// Least-squares slope of y against t over samples with t in [t0, t1].
inline double least_squares_slope(std::span<const double> t, std::span<const double> y, double t0,
                                  double t1)
{
    double st = 0, sy = 0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t0 - 1e-12 && t[i] <= t1 + 1e-12) {
            st += t[i];
            sy += y[i];
            ++k;
        }
    if (k < 2) return std::numeric_limits<double>::quiet_NaN();
    const double mt = st / static_cast<double>(k), my = sy / static_cast<double>(k);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t0 - 1e-12 && t[i] <= t1 + 1e-12) {
            sxy += (t[i] - mt) * (y[i] - my);
            sxx += (t[i] - mt) * (t[i] - mt);
        }
    return sxx > 0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

inline GrfParameters extract_parameters(const GrfProfile& p, const StsEvents& ev)
{
    p.validate();
    if (!ev.ordered()) throw ValidationError("events are not ordered start <= liftoff <= peak <= end");
    if (ev.t_start < p.t.front() - 1e-12 || ev.t_end > p.t.back() + 1e-12)
        throw ValidationError("events fall outside the profile time span");
    const std::span<const double> t(p.t), f(p.fz);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    GrfParameters r;
    r.body_weight = p.body_weight;
    r.F1 = signal::interp_linear(t, f, ev.t_liftoff);
    r.F2 = signal::interp_linear(t, f, ev.t_peak);
    r.T1 = ev.t_liftoff - ev.t_start;
    r.T2 = ev.t_peak - ev.t_liftoff;
    r.T3 = ev.t_end - ev.t_peak;
    r.P1 = signal::trapezoid(t, f, ev.t_start, ev.t_liftoff);
    r.P2 = signal::trapezoid(t, f, ev.t_liftoff, ev.t_peak);
    r.P3 = signal::trapezoid(t, f, ev.t_peak, ev.t_end);
    if (r.T2 > 0) {
        r.V1 = (r.F2 - r.F1) / r.T2;
    } else {
        r.V1 = nan;
        r.notes.emplace_back("V1 undefined: zero-duration lift-off-to-peak window");
    }
    r.V2 = r.T3 > 0 ? least_squares_slope(t, f, ev.t_peak, ev.t_end) : nan;
    if (std::isnan(r.V2)) r.notes.emplace_back("V2 undefined: fewer than two samples in the extension window");
    return r;
}

struct ParameterStat {
    double mean = 0;
    double sd = 0;
};

struct TrialStats {
    std::array<ParameterStat, 12> stats{}; // ordered as kParameterNames
    std::size_t n = 0;
    bool single_trial = false;

    const ParameterStat& operator[](const std::string& name) const
    {
        for (std::size_t i = 0; i < kParameterNames.size(); ++i)
            if (name == kParameterNames[i]) return stats[i];
        throw std::out_of_range("unknown parameter " + name);
    }
};

/// Per-parameter sample mean and (n-1)-denominator standard deviation.
inline TrialStats trial_statistics(std::span<const GrfParameters> trials)
{
    if (trials.empty()) throw ValidationError("trial statistics need at least one trial");
    TrialStats s;
    s.n = trials.size();
    s.single_trial = s.n == 1;
    const double n = static_cast<double>(s.n);
    for (std::size_t k = 0; k < kParameterNames.size(); ++k) {
        double sum = 0;
        for (const auto& tr : trials) sum += parameter_values(tr)[k];
        const double mean = sum / n;
        double ss = 0;
        for (const auto& tr : trials) {
            const double d = parameter_values(tr)[k] - mean;
            ss += d * d;
        }
        s.stats[k] = {mean, s.n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
    }
    return s;
}

// Force-plate CSV: t,fz[,seat_fz][,cane_fz][,fx][,cop_x]

struct ForcePlateRecord {
    GrfProfile profile;
    std::optional<std::vector<double>> fx;
    std::optional<std::vector<double>> cop_x; // m, relative to the ankle
};

inline ForcePlateRecord read_grf_csv(std::istream& in, double body_weight,
                                     const std::string& source = "<grf>", double min_rate_hz = 100.0)
{
    const auto table = CsvTable::parse(in, source);
    ForcePlateRecord r;
    r.profile.t = table.column("t");
    r.profile.fz = table.column("fz");
    if (table.has("seat_fz")) r.profile.seat_fz = table.column("seat_fz");
    if (table.has("cane_fz")) r.profile.cane_fz = table.column("cane_fz");
    if (table.has("fx")) r.fx = table.column("fx");
    if (table.has("cop_x")) r.cop_x = table.column("cop_x");
    if (r.profile.t.size() < 2) throw ValidationError(source + ": need at least two rows");
    for (std::size_t i = 1; i < r.profile.t.size(); ++i)
        if (!(r.profile.t[i] > r.profile.t[i - 1]))
            throw ValidationError(source + ": row " + std::to_string(i + 2) +
                                  ", column 't': timestamps must increase");
    r.profile.body_weight = body_weight;
    if (body_weight <= 0.0) {
        // Quiet standing at the end of the record: mean support over the last 0.5 s.
        const auto& t = r.profile.t;
        double sum = 0;
        std::size_t k = 0;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] >= t.back() - 0.5) {
                sum += r.profile.fz[i] + (r.profile.cane_fz ? (*r.profile.cane_fz)[i] : 0.0);
                ++k;
            }
        r.profile.body_weight = sum / static_cast<double>(k);
    }
    if (r.profile.sample_rate() < min_rate_hz - 1e-6)
        throw ValidationError(source + ": sample rate " + format_double(r.profile.sample_rate()) +
                              " Hz is below " + format_double(min_rate_hz) + " Hz");
    return r;
}

inline void write_grf_csv(std::ostream& out, const GrfProfile& p)
{
    out << "t,fz";
    if (p.seat_fz) out << ",seat_fz";
    if (p.cane_fz) out << ",cane_fz";
    out << '\n';
    for (std::size_t i = 0; i < p.size(); ++i) {
        std::vector<double> row{p.t[i], p.fz[i]};
        if (p.seat_fz) row.push_back((*p.seat_fz)[i]);
        if (p.cane_fz) row.push_back((*p.cane_fz)[i]);
        write_csv_row(out, row);
    }
}

/// One parameter table entry: `condition,param,mean,sd,n`.
struct ParameterRow {
    std::string condition;
    std::string param;
    double mean = 0;
    double sd = 0;
    std::size_t n = 0;
};

inline std::vector<ParameterRow> parameter_rows(const std::string& condition, const TrialStats& s)
{
    std::vector<ParameterRow> rows;
    for (std::size_t k = 0; k < kParameterNames.size(); ++k)
        rows.push_back({condition, kParameterNames[k], s.stats[k].mean, s.stats[k].sd, s.n});
    return rows;
}

inline void write_parameter_csv(std::ostream& out, std::span<const ParameterRow> rows)
{
    out << "condition,param,mean,sd,n\n";
    for (const auto& r : rows)
        out << r.condition << ',' << r.param << ',' << format_double(r.mean) << ','
            << format_double(r.sd) << ',' << r.n << '\n';
}

inline std::vector<ParameterRow> read_parameter_csv(std::istream& in, const std::string& source)
{
    std::string line;
    int lineno = 0;
    std::vector<ParameterRow> rows;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split(trim(line), ',');
        if (!header) {
            if (cells != std::vector<std::string>{"condition", "param", "mean", "sd", "n"})
                throw ValidationError(source + ":" + std::to_string(lineno) +
                                      ": expected header 'condition,param,mean,sd,n'");
            header = true;
            continue;
        }
        if (cells.size() != 5)
            throw ValidationError(source + ": row " + std::to_string(lineno) + ": expected 5 columns");
        const auto mean = parse_double(cells[2]);
        const auto sd = parse_double(cells[3]);
        const auto n = parse_double(cells[4]);
        if (!mean || !sd || !n)
            throw ValidationError(source + ": row " + std::to_string(lineno) + ": malformed number");
        rows.push_back({cells[0], cells[1], *mean, *sd, static_cast<std::size_t>(*n)});
    }
    if (!header) throw ValidationError(source + ": empty parameter file");
    return rows;
}

} // namespace sit2stand
