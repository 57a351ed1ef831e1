#pragma once

#include "sbf/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace sbf {

// Flat TOML-style configuration: `key = value` lines, `#` comments, optional
// `[section]` headers that prefix keys as `section.key`. Values are numbers,
// booleans, quoted strings or one-line arrays `[a, b]`; all are kept as text.
using ConfigMap = std::map<std::string, std::string>;

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& line)
{
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"')
            quoted = !quoted;
        else if (line[i] == '#' && !quoted)
            return line.substr(0, i);
    }
    return line;
}

inline ConfigMap parse_config(std::istream& is)
{
    ConfigMap m;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty())
            continue;
        if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        require(eq != std::string::npos, "config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        require(!key.empty(), "config line " + std::to_string(lineno) + ": empty key");
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
            val = val.substr(1, val.size() - 2);
        m[section.empty() ? key : section + "." + key] = val;
    }
    return m;
}

inline ConfigMap load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw std::invalid_argument("config not found: " + path);
    return parse_config(is);
}

inline double parse_real(const std::string& key, const std::string& v)
{
    if (v == "inf" || v == "infinity")
        return inf;
    size_t pos = 0;
    double x;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key " + key + ": not a number: " + v);
    }
    require(pos == v.size(), "config key " + key + ": not a number: " + v);
    return x;
}

inline long long parse_integer(const std::string& key, const std::string& v)
{
    size_t pos = 0;
    long long x;
    try {
        x = std::stoll(v, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key " + key + ": not an integer: " + v);
    }
    require(pos == v.size(), "config key " + key + ": not an integer: " + v);
    return x;
}

inline std::vector<double> parse_real_list(const std::string& key, std::string v)
{
    v = trim(v);
    require(v.size() >= 2 && v.front() == '[' && v.back() == ']', "config key " + key + ": expected [a, b, ...]");
    std::vector<double> out;
    std::stringstream ss(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty())
            out.push_back(parse_real(key, trim(item)));
    return out;
}

// Applies the recognised keys; anything else is a validation error.
// Section names only group keys, so "run.base_N" and "base_N" are the same key.
inline void apply_config(ExperimentConfig& c, const ConfigMap& m)
{
    for (const auto& [key, v] : m) {
        const std::string k = key.substr(key.find('.') + 1);
        if (k == "family")
            c.kernel.family = v;
        else if (k == "beta")
            c.kernel.beta = parse_real(key, v);
        else if (k == "s")
            c.kernel.s = parse_real(key, v);
        else if (k == "sigma")
            c.kernel.sigma = parse_real(key, v);
        else if (k == "delta")
            c.kernel.delta = parse_real(key, v);
        else if (k == "w")
            c.kernel.w = parse_real(key, v);
        else if (k == "d")
            c.kernel.d = static_cast<int>(parse_integer(key, v));
        else if (k == "k")
            c.kernel.k = static_cast<int>(parse_integer(key, v));
        else if (k == "t0")
            c.kernel.t0 = parse_real(key, v);
        else if (k == "lmax")
            c.kernel.lmax = static_cast<int>(parse_integer(key, v));
        else if (k == "n")
            c.n = static_cast<int>(parse_integer(key, v));
        else if (k == "target")
            c.target = v;
        else if (k == "target_s")
            c.target_s = parse_real(key, v);
        else if (k == "bump_sigma")
            c.bump_sigma = parse_real(key, v);
        else if (k == "target_delta")
            c.target_delta = parse_real(key, v);
        else if (k == "target_degree")
            c.target_degree = static_cast<int>(parse_integer(key, v));
        else if (k == "target_lmax")
            c.target_lmax = static_cast<int>(parse_integer(key, v));
        else if (k == "centers")
            c.centers = v;
        else if (k == "base_N")
            c.base_N = static_cast<int>(parse_integer(key, v));
        else if (k == "levels")
            c.levels = static_cast<int>(parse_integer(key, v));
        else if (k == "rho_cap")
            c.rho_cap = parse_real(key, v);
        else if (k == "p")
            c.p = parse_real(key, v);
        else if (k == "gamma")
            c.gamma = parse_real(key, v);
        else if (k == "threshold")
            c.threshold = parse_real(key, v);
        else if (k == "max_rule_degree")
            c.max_rule_degree = static_cast<int>(parse_integer(key, v));
        else if (k == "draws")
            c.draws = static_cast<int>(parse_integer(key, v));
        else if (k == "search_budget")
            c.search_budget = static_cast<int>(parse_integer(key, v));
        else if (k == "projection_max_N")
            c.projection_max_N = static_cast<int>(parse_integer(key, v));
        else if (k == "nu_grid")
            c.nu_grid = parse_real_list(key, v);
        else if (k == "r_grid")
            c.r_grid = parse_real_list(key, v);
        else if (k == "tau")
            c.tau = parse_real(key, v);
        else if (k == "seed") {
            const long long s = parse_integer(key, v);
            require(s >= 0, "config key seed: must be non-negative");
            c.seed = static_cast<std::uint64_t>(s);
        } else
            throw std::invalid_argument("unknown config key " + key);
    }
    require(c.n >= 1, "config: n must be positive");
    require(c.base_N >= 2, "config: base_N must be at least 2");
    require(c.levels >= 0, "config: levels must be non-negative");
    require(c.p >= 1.0, "config: p must be >= 1");
    require(c.draws >= 1, "config: draws must be positive");
}

// ---------------------------------------------------------------- output

inline std::string fmt17(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos)
        return s;
    std::string r = "\"";
    for (char ch : s) {
        if (ch == '"')
            r += '"';
        r += ch;
    }
    return r + "\"";
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(const std::vector<std::string>& row)
    {
        require(row.size() == header_.size(), "csv row width mismatch");
        rows_.push_back(row);
    }

    std::string str() const
    {
        std::string out;
        auto line = [&](const std::vector<std::string>& r) {
            for (size_t i = 0; i < r.size(); ++i) {
                if (i)
                    out += ',';
                out += csv_field(r[i]);
            }
            out += "\r\n";
        };
        line(header_);
        for (const auto& r : rows_)
            line(r);
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// Writes through a temporary file and a rename.
inline void write_file_atomic(const std::string& path, const std::string& content)
{
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os)
            throw std::invalid_argument("cannot write " + path);
        os << content;
        if (!os)
            throw std::invalid_argument("cannot write " + path);
    }
    std::filesystem::rename(tmp, path);
}

inline std::string json_text(const ojson& j) { return j.dump(2) + "\n"; }

} // namespace sbf
