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

// Command implementations behind the `sit2stand` executable. Every command
// writes only inside its output directory and finishes with manifest.json,
// which records the resolved configuration and SHA-256 hashes of all inputs
// and outputs. Nothing time- or host-dependent goes into any output.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "sit2stand/anthro.hpp"
#include "sit2stand/control.hpp"
#include "sit2stand/dynamics.hpp"
#include "sit2stand/error.hpp"
#include "sit2stand/grf.hpp"
#include "sit2stand/perception.hpp"
#include "sit2stand/text.hpp"

namespace sit2stand::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kConfigEnv = "SIT2STAND_CONFIG";

namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kRuntimeFailure = 1, kValidationFailure = 2 };

inline std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + p.string() + "'", "path");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string sha256_hex(const std::string& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i)
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return out.str();
}

/// Collects the files a command reads and writes for the manifest.
class RunManifest {
public:
    RunManifest(std::string command, fs::path out_dir) : command_(std::move(command)), out_(std::move(out_dir))
    {
        fs::create_directories(out_);
    }

    void add_input(const std::string& path, const std::string& bytes)
    {
        inputs_.push_back({{"path", path}, {"sha256", sha256_hex(bytes)}});
    }

    void set_config(const std::string& key, const std::string& value) { config_[key] = value; }

    void set_result(const std::string& key, nlohmann::json value) { results_[key] = std::move(value); }

    /// Writes `name` inside the output directory.
    void write(const std::string& name, const std::string& bytes)
    {
        std::ofstream out(out_ / name, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + (out_ / name).string() + "'");
        out << bytes;
        if (!out) throw std::runtime_error("write failed for '" + (out_ / name).string() + "'");
        outputs_.push_back({{"path", name}, {"sha256", sha256_hex(bytes)}});
    }

    void finish()
    {
        nlohmann::json j;
        j["command"] = command_;
        j["version"] = kVersion;
        j["config"] = config_;
        j["inputs"] = inputs_;
        j["outputs"] = outputs_;
        if (!results_.empty()) j["results"] = results_;
        std::ofstream out(out_ / "manifest.json", std::ios::binary | std::ios::trunc);
        out << j.dump(2) << '\n';
        if (!out) throw std::runtime_error("cannot write manifest");
    }

private:
    std::string command_;
    fs::path out_;
    nlohmann::json config_ = nlohmann::json::object();
    nlohmann::json results_ = nlohmann::json::object();
    std::vector<nlohmann::json> inputs_;
    std::vector<nlohmann::json> outputs_;
};

/// Optional anthropometric override file (explicit path, else the
/// environment variable).
inline std::optional<std::pair<std::string, std::string>> locate_config(const std::string& explicit_path)
{
    std::string path = explicit_path;
    if (path.empty())
        if (const char* env = std::getenv(kConfigEnv)) path = env;
    if (path.empty()) return std::nullopt;
    return std::make_pair(path, read_file(path));
}

inline AnthroTable load_table(const std::pair<std::string, std::string>& cfg, Sex sex)
{
    return apply_overrides(KeyValueConfig::parse_string(cfg.second, cfg.first), default_table(sex));
}

inline void record_table(RunManifest& man, const AnthroTable& table)
{
    std::ostringstream ss;
    write_table(ss, table);
    const auto kv = KeyValueConfig::parse_string(ss.str());
    for (const auto& [k, e] : kv.entries())
        man.set_config("anthropometrics." + k, e.value);
}

struct Series {
    std::string label;
    std::string colour;
    std::vector<double> t;
    std::vector<double> y;
};

inline std::string svg_num(double v) { return format_double(std::round(v * 100.0) / 100.0); }

/// Static line plot of force curves normalised to body weight.
inline std::string render_grf_svg(const std::vector<Series>& series, double body_weight,
                                  const std::string& title)
{
    const double w = 800, h = 420, left = 60, right = 20, top = 40, bottom = 50;
    double tmax = 0.0, ymax = 1.2;
    for (const auto& s : series) {
        for (double t : s.t) tmax = std::max(tmax, t);
        for (double y : s.y) ymax = std::max(ymax, y / body_weight);
    }
    ymax = std::ceil(ymax * 5.0) / 5.0;
    if (tmax <= 0.0) tmax = 1.0;
    auto px = [&](double t) { return left + (w - left - right) * t / tmax; };
    auto py = [&](double y) { return h - bottom - (h - top - bottom) * y / ymax; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << svg_num(w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
      << "</text>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << svg_num(py(0)) << "\" x2=\"" << svg_num(w - right)
      << "\" y2=\"" << svg_num(py(0)) << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << svg_num(py(0)) << "\" x2=\"" << left << "\" y2=\""
      << svg_num(py(ymax)) << "\" stroke=\"black\"/>\n";
    for (double y = 0.0; y <= ymax + 1e-9; y += 0.2)
        o << "<text x=\"" << left - 6 << "\" y=\"" << svg_num(py(y) + 4) << "\" text-anchor=\"end\">"
          << svg_num(y) << "</text>\n";
    const double tstep = tmax > 4 ? 1.0 : 0.5;
    for (double t = 0.0; t <= tmax + 1e-9; t += tstep)
        o << "<text x=\"" << svg_num(px(t)) << "\" y=\"" << svg_num(py(0) + 18)
          << "\" text-anchor=\"middle\">" << svg_num(t) << "</text>\n";
    o << "<text x=\"" << svg_num(w / 2) << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">time (s)</text>\n";
    o << "<text x=\"16\" y=\"" << svg_num(h / 2) << "\" transform=\"rotate(-90 16 " << svg_num(h / 2)
      << ")\" text-anchor=\"middle\">force (body weight)</text>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << svg_num(py(1)) << "\" x2=\"" << svg_num(w - right)
      << "\" y2=\"" << svg_num(py(1)) << "\" stroke=\"grey\" stroke-dasharray=\"4 4\"/>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        o << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.t.size(); ++i)
            o << (i ? " " : "") << svg_num(px(s.t[i])) << ',' << svg_num(py(s.y[i] / body_weight));
        o << "\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(k);
        o << "<line x1=\"" << svg_num(w - 190) << "\" y1=\"" << svg_num(ly) << "\" x2=\"" << svg_num(w - 165)
          << "\" y2=\"" << svg_num(ly) << "\" stroke=\"" << s.colour << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << svg_num(w - 160) << "\" y=\"" << svg_num(ly + 4) << "\">" << s.label << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

// simulate

struct SimulateOptions {
    std::string scenario;
    std::string out;
    std::string config;
};

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& log)
{
    const std::string scenario_text = read_file(opt.scenario);
    const auto kv = KeyValueConfig::parse_string(scenario_text, opt.scenario);
    const auto cfg = locate_config(opt.config);

    // The override needs the subject's sex, which the scenario provides.
    Scenario sc = Scenario::from_config(kv);
    if (cfg) sc = Scenario::from_config(kv, load_table(*cfg, sc.subject.sex));
    const AnthropometricModel m = sc.model();

    RunManifest man("simulate", opt.out);
    man.add_input(opt.scenario, scenario_text);
    if (cfg) man.add_input(cfg->first, cfg->second);
    for (const auto& [k, v] : sc.resolved()) man.set_config(k, v);
    record_table(man, sc.table ? *sc.table : default_table(sc.subject.sex));

    std::vector<bool> conditions;
    if (sc.assist && sc.paired) conditions = {true, false};
    else conditions = {sc.assist};

    std::vector<ParameterRow> rows;
    std::ostringstream events;
    events << "condition,kind,t,detected_at\n";
    std::vector<Series> curves;
    for (bool assist : conditions) {
        const EpisodeLog ep = run_episode(m, sc, assist);
        const GrfProfile g = ep.grf();
        const StsEvents ev = detect_events(g);
        const GrfParameters p = extract_parameters(g, ev);
        const std::vector<GrfParameters> one{p};
        const auto pr = parameter_rows(ep.condition, trial_statistics(one));
        rows.insert(rows.end(), pr.begin(), pr.end());

        std::ostringstream episode, loads, grf;
        write_episode_csv(episode, ep);
        write_loads_csv(loads, ep.dynamics_frames());
        write_grf_csv(grf, g);
        man.write("episode_" + ep.condition + ".csv", episode.str());
        man.write("loads_" + ep.condition + ".csv", loads.str());
        man.write("grf_" + ep.condition + ".csv", grf.str());

        for (const auto& e : ep.events)
            events << ep.condition << ',' << to_string(e.kind) << ',' << format_double(e.timestamp) << ','
                   << format_double(e.detected_at) << '\n';
        for (auto [kind, t] : {std::pair{"start", ev.t_start}, {"liftoff", ev.t_liftoff}, {"peak", ev.t_peak},
                               {"end", ev.t_end}})
            events << ep.condition << ',' << kind << ',' << format_double(t) << ',' << format_double(t) << '\n';

        curves.push_back({ep.condition == "assisted" ? "feet, assisted" : "feet, control",
                          ep.condition == "assisted" ? "#1f77b4" : "#d62728", g.t, g.fz});
        if (assist) curves.push_back({"cane", "#2ca02c", g.t, *g.cane_fz});

        double cane_peak = 0.0;
        for (const auto& r : ep.rows) cane_peak = std::max(cane_peak, r.cane_fz);
        man.set_result(ep.condition + ".cane_peak_bw", cane_peak / ep.body_weight);
        man.set_result(ep.condition + ".cane_work", ep.cane_work);
        log << ep.condition << ": F2 = " << format_double(p.F2_pct_bw()) << " %BW, V1 = " << format_double(p.V1)
            << " N/s, V2 = " << format_double(p.V2) << " N/s\n";
    }
    std::ostringstream params;
    write_parameter_csv(params, rows);
    man.write("events.csv", events.str());
    man.write("parameters.csv", params.str());
    man.write("grf.svg", render_grf_svg(curves, m.body_weight(), "Vertical force, " + sc.name));
    man.finish();
    return kOk;
}

// analyze

struct AnalyzeOptions {
    std::vector<std::string> grf;
    std::string skeleton;
    std::string out;
    std::string scenario; // subject for the model comparison
    std::string config;
    std::string condition = "measured";
    double body_weight = 0.0; // <= 0: estimated from quiet standing at the end
    bool detect_onset = false;
};

struct MomentComparison {
    std::vector<double> t;
    std::vector<double> model;
    std::vector<double> measured;
    double rms = 0.0;
};

/// Model-predicted ground moment about the ankle (zero free moment) from the
/// skeleton, against the measured one from the plate (cop_x relative to the
/// ankle): M_c = cop_x fz + ankle_height fx.
inline MomentComparison compare_moments(const std::vector<SkeletonFrame>& frames,
                                        const ForcePlateRecord& plate, const AnthropometricModel& m)
{
    if (!plate.cop_x) throw ValidationError("moment comparison needs a cop_x column in the GRF file", "cop_x");
    const Plane pl = fit_sagittal_plane(frames);
    std::vector<SagittalFrame> sag;
    for (const auto& f : frames) sag.push_back(project_and_angles(f, pl));
    const PoseTrajectory traj = smooth_and_resample(sag, 100.0);

    const auto& g = plate.profile;
    std::vector<CaneForce> cane(traj.size());
    InverseDynamicsOptions opt;
    opt.cop = CopMode::zero_free_moment;
    opt.seat.assign(traj.size(), Vec2::Zero());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double t = traj.timestamps[i];
        if (g.cane_fz) cane[i] = CaneForce::axial(std::max(0.0, signal::interp_linear(g.t, *g.cane_fz, t)));
        if (g.seat_fz) opt.seat[i] = Vec2(0.0, std::max(0.0, signal::interp_linear(g.t, *g.seat_fz, t)));
    }
    const auto dyn = inverse_dynamics(traj, cane, m, opt);
    std::vector<double> mt, mc;
    for (const auto& f : dyn) {
        mt.push_back(f.t);
        mc.push_back(f.loads.M_c);
    }

    MomentComparison r;
    const double h = m.foot_geometry.ankle_height;
    double ss = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.t[i] < mt.front() || g.t[i] > mt.back()) continue;
        const double fx = plate.fx ? (*plate.fx)[i] : 0.0;
        const double meas = (*plate.cop_x)[i] * g.fz[i] + h * fx;
        const double model = signal::interp_linear(mt, mc, g.t[i]);
        r.t.push_back(g.t[i]);
        r.model.push_back(model);
        r.measured.push_back(meas);
        ss += (model - meas) * (model - meas);
    }
    if (r.t.empty()) throw ValidationError("skeleton and GRF recordings do not overlap in time");
    r.rms = std::sqrt(ss / static_cast<double>(r.t.size()));
    return r;
}

inline double median_rate(const std::vector<SkeletonFrame>& frames)
{
    std::vector<double> dt;
    for (std::size_t i = 1; i < frames.size(); ++i) dt.push_back(frames[i].timestamp - frames[i - 1].timestamp);
    if (dt.empty()) return 0.0;
    std::nth_element(dt.begin(), dt.begin() + static_cast<std::ptrdiff_t>(dt.size() / 2), dt.end());
    return 1.0 / dt[dt.size() / 2];
}

inline int cmd_analyze(const AnalyzeOptions& opt, std::ostream& log, std::istream& stdin_stream)
{
    if (opt.grf.empty()) throw ValidationError("analyze needs at least one --grf file", "grf");
    RunManifest man("analyze", opt.out);
    man.set_config("condition", opt.condition);
    man.set_config("body_weight", format_double(opt.body_weight));
    man.set_config("detect_onset", opt.detect_onset ? "true" : "false");

    EventConfig ecfg;
    ecfg.detect_onset = opt.detect_onset;
    std::vector<ForcePlateRecord> records;
    std::vector<GrfParameters> trials;
    std::ostringstream trial_csv, event_csv;
    trial_csv << "trial,param,value\n";
    event_csv << "trial,t_start,t_liftoff,t_peak,t_end\n";
    for (std::size_t k = 0; k < opt.grf.size(); ++k) {
        const std::string text = read_file(opt.grf[k]);
        man.add_input(opt.grf[k], text);
        std::istringstream in(text);
        records.push_back(read_grf_csv(in, opt.body_weight, opt.grf[k]));
        const auto& g = records.back().profile;
        StsEvents ev;
        try {
            ev = detect_events(g, ecfg);
        } catch (const IncompleteMovement& e) {
            throw IncompleteMovement(opt.grf[k] + ": " + e.what());
        }
        const auto p = extract_parameters(g, ev);
        for (const auto& note : p.notes) log << opt.grf[k] << ": " << note << '\n';
        const auto vals = parameter_values(p);
        for (std::size_t j = 0; j < vals.size(); ++j)
            trial_csv << k + 1 << ',' << kParameterNames[j] << ',' << format_double(vals[j]) << '\n';
        event_csv << k + 1 << ',' << format_double(ev.t_start) << ',' << format_double(ev.t_liftoff) << ','
                  << format_double(ev.t_peak) << ',' << format_double(ev.t_end) << '\n';
        trials.push_back(p);
    }
    const TrialStats stats = trial_statistics(trials);
    if (stats.single_trial) log << "single trial: standard deviations reported as 0\n";
    std::ostringstream params;
    write_parameter_csv(params, parameter_rows(opt.condition, stats));
    man.write("trials.csv", trial_csv.str());
    man.write("events.csv", event_csv.str());
    man.write("parameters.csv", params.str());

    std::vector<Series> curves;
    for (std::size_t k = 0; k < records.size(); ++k)
        curves.push_back({"trial " + std::to_string(k + 1), k % 2 ? "#d62728" : "#1f77b4", records[k].profile.t,
                          records[k].profile.fz});
    man.write("grf.svg", render_grf_svg(curves, records.front().profile.body_weight, "Vertical force, " + opt.condition));

    if (!opt.skeleton.empty()) {
        std::string text;
        if (opt.skeleton == "-") {
            std::ostringstream ss;
            ss << stdin_stream.rdbuf();
            text = ss.str();
        } else {
            text = read_file(opt.skeleton);
        }
        man.add_input(opt.skeleton, text);
        std::istringstream in(text);
        const auto frames = read_skeleton_records(in, opt.skeleton == "-" ? "<stdin>" : opt.skeleton);
        if (median_rate(frames) < 30.0 - 1e-6)
            throw ValidationError(opt.skeleton + ": skeleton rate below 30 Hz");

        Subject subject;
        subject.mass = records.front().profile.body_weight / 9.81;
        std::optional<AnthroTable> table;
        if (!opt.scenario.empty()) {
            const std::string sc_text = read_file(opt.scenario);
            man.add_input(opt.scenario, sc_text);
            subject = Scenario::from_config(KeyValueConfig::parse_string(sc_text, opt.scenario)).subject;
        }
        if (const auto cfg = locate_config(opt.config)) {
            man.add_input(cfg->first, cfg->second);
            table = load_table(*cfg, subject.sex);
        }
        const AnthroTable& tab = table ? *table : default_table(subject.sex);
        record_table(man, tab);
        man.set_config("subject.height", format_double(subject.height));
        man.set_config("subject.mass", format_double(subject.mass));
        const auto m = scale_anthropometrics(subject, tab);
        const auto cmp = compare_moments(frames, records.front(), m);
        std::ostringstream mcsv;
        mcsv << "t,mc_model,mc_measured\n";
        for (std::size_t i = 0; i < cmp.t.size(); ++i)
            write_csv_row(mcsv, std::array<double, 3>{cmp.t[i], cmp.model[i], cmp.measured[i]});
        man.write("moment.csv", mcsv.str());
        man.set_result("moment_rms", cmp.rms);
        log << "ankle moment RMS discrepancy: " << format_double(cmp.rms) << " N m\n";
    }
    man.finish();
    return kOk;
}

// compare

struct CompareOptions {
    std::string run_a;
    std::string run_b;
    std::string out;
};

inline std::pair<std::string, std::string> load_parameter_file(const std::string& run)
{
    fs::path p(run);
    if (fs::is_directory(p)) p /= "parameters.csv";
    if (!fs::exists(p)) throw ValidationError("no parameter file at '" + p.string() + "'", "run");
    return {p.string(), read_file(p)};
}

struct ComparisonRow {
    std::string condition_a, condition_b, param;
    double mean_a = 0, mean_b = 0;
    double delta = 0, delta_pct = 0;
    bool reduced = false;
};

/// Pairs rows by (condition, param). When each side holds a single
/// condition, rows pair by parameter alone so two differently labelled runs
/// can be compared.
inline std::vector<ComparisonRow> compare_parameters(const std::vector<ParameterRow>& a,
                                                     const std::vector<ParameterRow>& b)
{
    std::set<std::string> ca, cb;
    for (const auto& r : a) ca.insert(r.condition);
    for (const auto& r : b) cb.insert(r.condition);
    const bool by_param = ca.size() == 1 && cb.size() == 1;
    auto key = [&](const ParameterRow& r) { return by_param ? r.param : r.condition + "/" + r.param; };

    std::map<std::string, const ParameterRow*> ib;
    for (const auto& r : b) ib[key(r)] = &r;
    if (ib.size() != b.size()) throw ValidationError("run B has duplicate parameter rows");
    std::vector<ComparisonRow> out;
    std::set<std::string> seen;
    for (const auto& r : a) {
        auto it = ib.find(key(r));
        if (it == ib.end()) throw ValidationError("schema mismatch: '" + key(r) + "' missing from run B");
        if (!seen.insert(key(r)).second) throw ValidationError("run A has duplicate parameter rows");
        ComparisonRow c;
        c.condition_a = r.condition;
        c.condition_b = it->second->condition;
        c.param = r.param;
        c.mean_a = r.mean;
        c.mean_b = it->second->mean;
        c.delta = c.mean_b - c.mean_a;
        c.delta_pct = c.mean_a != 0.0 ? 100.0 * c.delta / std::abs(c.mean_a) : std::nan("");
        c.reduced = std::abs(c.mean_b) < std::abs(c.mean_a);
        out.push_back(c);
    }
    if (seen.size() != ib.size()) throw ValidationError("schema mismatch: run B has rows missing from run A");
    return out;
}

inline int cmd_compare(const CompareOptions& opt, std::ostream& log)
{
    const auto fa = load_parameter_file(opt.run_a);
    const auto fb = load_parameter_file(opt.run_b);
    std::istringstream ia(fa.second), ib(fb.second);
    const auto rows = compare_parameters(read_parameter_csv(ia, fa.first), read_parameter_csv(ib, fb.first));

    RunManifest man("compare", opt.out);
    man.add_input(fa.first, fa.second);
    man.add_input(fb.first, fb.second);
    std::ostringstream out;
    out << "condition_a,condition_b,param,mean_a,mean_b,delta,delta_pct,reduced\n";
    for (const auto& r : rows) {
        out << r.condition_a << ',' << r.condition_b << ',' << r.param << ',' << format_double(r.mean_a) << ','
            << format_double(r.mean_b) << ',' << format_double(r.delta) << ',' << format_double(r.delta_pct)
            << ',' << (r.reduced ? "yes" : "no") << '\n';
        if (r.reduced) log << r.param << " reduced (" << r.condition_a << " -> " << r.condition_b << ")\n";
    }
    man.write("comparison.csv", out.str());
    man.finish();
    return kOk;
}

/// Maps exceptions to exit codes: validation problems 2, anything else 1.
inline int guarded(const std::function<int()>& fn, std::ostream& err)
{
    try {
        return fn();
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
}

} // namespace sit2stand::cli
