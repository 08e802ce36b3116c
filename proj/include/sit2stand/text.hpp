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

// Small text helpers shared by the file formats: shortest round-trip number
// formatting, a flat `key = value` config reader and a header-indexed CSV
// reader.

#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sit2stand/error.hpp"

namespace sit2stand {

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_double(std::string_view s)
{
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s == "nan" || s == "NaN") return std::nan("");
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Flat `key = value` configuration. Blank lines and `#` comments are
/// ignored. Every entry remembers its source line for diagnostics.
class KeyValueConfig {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>")
    {
        KeyValueConfig cfg;
        cfg.source_ = source;
        std::string raw;
        int lineno = 0;
        while (std::getline(in, raw)) {
            ++lineno;
            std::string_view line = raw;
            if (const auto hash = line.find('#'); hash != std::string_view::npos)
                line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw ValidationError(source + ":" + std::to_string(lineno) +
                                      ": expected 'key = value'");
            const std::string key(trim(line.substr(0, eq)));
            if (key.empty())
                throw ValidationError(source + ":" + std::to_string(lineno) + ": empty key");
            if (cfg.entries_.count(key))
                throw ValidationError(source + ":" + std::to_string(lineno) +
                                          ": duplicate key '" + key + "'",
                                      key);
            cfg.entries_[key] = Entry{std::string(trim(line.substr(eq + 1))), lineno};
        }
        return cfg;
    }

    static KeyValueConfig parse_string(const std::string& text, const std::string& source = "<config>")
    {
        std::istringstream in(text);
        return parse(in, source);
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const std::map<std::string, Entry>& entries() const { return entries_; }
    const std::string& source() const { return source_; }

    std::string location(const std::string& key) const
    {
        auto it = entries_.find(key);
        if (it == entries_.end()) return source_;
        return source_ + ":" + std::to_string(it->second.line);
    }

    double get_double(const std::string& key, double fallback) const
    {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        const auto v = parse_double(it->second.value);
        if (!v || !std::isfinite(*v))
            throw ValidationError(location(key) + ": '" + key + "' is not a finite number: '" +
                                      it->second.value + "'",
                                  key);
        return *v;
    }

    bool get_bool(const std::string& key, bool fallback) const
    {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        const auto& v = it->second.value;
        if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "off" || v == "no" || v == "0") return false;
        throw ValidationError(location(key) + ": '" + key + "' is not a boolean: '" + v + "'", key);
    }

    std::string get_string(const std::string& key, const std::string& fallback) const
    {
        auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second.value;
    }

    /// Rejects keys outside `known`, so typos do not pass silently.
    void require_known(const std::vector<std::string>& known) const
    {
        for (const auto& [key, entry] : entries_) {
            bool ok = false;
            for (const auto& k : known) ok = ok || k == key;
            if (!ok)
                throw ValidationError(source_ + ":" + std::to_string(entry.line) +
                                          ": unknown key '" + key + "'",
                                      key);
        }
    }

private:
    std::string source_;
    std::map<std::string, Entry> entries_;
};

/// Numeric CSV with a header row. Columns are addressed by name.
class CsvTable {
public:
    static CsvTable parse(std::istream& in, const std::string& source = "<csv>")
    {
        CsvTable t;
        std::string raw;
        int lineno = 0;
        while (std::getline(in, raw)) {
            ++lineno;
            if (trim(raw).empty()) continue;
            if (t.header_.empty()) {
                t.header_ = split(trim(raw), ',');
                for (std::size_t c = 0; c < t.header_.size(); ++c) {
                    if (t.header_[c].empty())
                        throw ValidationError(source + ":" + std::to_string(lineno) +
                                              ": empty column name in header");
                    t.index_[t.header_[c]] = c;
                }
                continue;
            }
            const auto cells = split(trim(raw), ',');
            if (cells.size() != t.header_.size())
                throw ValidationError(source + ": row " + std::to_string(lineno) + ": expected " +
                                      std::to_string(t.header_.size()) + " columns, got " +
                                      std::to_string(cells.size()));
            std::vector<double> row(cells.size());
            for (std::size_t c = 0; c < cells.size(); ++c) {
                const auto v = parse_double(cells[c]);
                if (!v)
                    throw ValidationError(source + ": row " + std::to_string(lineno) +
                                          ", column '" + t.header_[c] + "': not a number: '" +
                                          cells[c] + "'");
                row[c] = *v;
            }
            t.rows_.push_back(std::move(row));
        }
        if (t.header_.empty()) throw ValidationError(source + ": empty CSV");
        return t;
    }

    bool has(const std::string& col) const { return index_.count(col) != 0; }
    std::size_t rows() const { return rows_.size(); }
    const std::vector<std::string>& header() const { return header_; }

    std::vector<double> column(const std::string& col) const
    {
        auto it = index_.find(col);
        if (it == index_.end()) throw ValidationError("missing CSV column '" + col + "'", col);
        std::vector<double> out;
        out.reserve(rows_.size());
        for (const auto& r : rows_) out.push_back(r[it->second]);
        return out;
    }

private:
    std::vector<std::string> header_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::vector<double>> rows_;
};

/// Writes one CSV row of numbers using round-trip formatting.
template <typename Range>
void write_csv_row(std::ostream& out, const Range& values)
{
    bool first = true;
    for (double v : values) {
        if (!first) out << ',';
        out << format_double(v);
        first = false;
    }
    out << '\n';
}

} // namespace sit2stand
