#pragma once

// Sectioned key = value run configuration. Flat text, no expressions, so an
// experiment is fully described by a diffable file whose digest lands in
// every output header.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "branchcat/errors.hpp"
#include "branchcat/model.hpp"
#include "branchcat/regimes.hpp"
#include "branchcat/simulate.hpp"
#include "branchcat/util.hpp"

namespace branchcat {

struct ConfigEntry {
    std::string section, key, value;
    int line = 0;
};

struct RawConfig {
    std::vector<ConfigEntry> entries;
    std::string text;  // exact file content, digested into output headers
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

}  // namespace detail

inline RawConfig parse_config_text(const std::string& text) {
    RawConfig rc;
    rc.text = text;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = detail::trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": malformed section header '" + line + "'");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value, got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (section.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key +
                              "' appears before any [section]");
        for (const auto& e : rc.entries)
            if (e.section == section && e.key == key)
                throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" +
                                  key + "' in [" + section + "] (first at line " +
                                  std::to_string(e.line) + ")");
        rc.entries.push_back({section, key, value, line_no});
    }
    return rc;
}

inline RawConfig load_config_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

// Grid value syntax: "logspace(lo, hi, n)", "linspace(lo, hi, n)", or an
// explicit comma list of numbers.
inline std::vector<double> parse_grid_spec(const std::string& value) {
    const std::string v = detail::trim(value);
    for (const char* fn : {"logspace", "linspace"}) {
        const std::string head = std::string(fn) + "(";
        if (v.rfind(head, 0) != 0) continue;
        if (v.back() != ')') throw std::invalid_argument("missing ')' in '" + v + "'");
        const std::string args = v.substr(head.size(), v.size() - head.size() - 1);
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= args.size(); ++i) {
            if (i == args.size() || args[i] == ',') {
                parts.push_back(detail::trim(args.substr(start, i - start)));
                start = i + 1;
            }
        }
        if (parts.size() != 3)
            throw std::invalid_argument(std::string(fn) + " takes (lo, hi, n)");
        const double lo = parse_double(parts[0]);
        const double hi = parse_double(parts[1]);
        const std::uint64_t n = parse_u64(parts[2]);
        if (n < 2 || n > 100000) throw std::invalid_argument("grid size must be in [2, 100000]");
        return fn[1] == 'o' ? logspace(lo, hi, static_cast<int>(n))
                            : linspace(lo, hi, static_cast<int>(n));
    }
    std::vector<double> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= v.size(); ++i) {
        if (i == v.size() || v[i] == ',') {
            const std::string part = detail::trim(v.substr(start, i - start));
            if (!part.empty()) out.push_back(parse_double(part));
            start = i + 1;
        }
    }
    if (out.empty()) throw std::invalid_argument("empty grid");
    return out;
}

struct RunConfig {
    ModelSpec model;
    SimConfig sim;  // [sim] keys over defaults; seed can be overridden by --seed

    // [mc]
    std::optional<std::uint64_t> n, n_paths;
    std::optional<double> x0, t_event, poly_power, eta, r_lower, tol;
    std::optional<double> a, c, b, budget, t_burn, t_end;
    std::optional<std::string> quantity, event_kind, observable;
    std::vector<double> times, checkpoints;

    // [grids]
    std::vector<double> near_zero, large_x;

    // [criteria]
    std::vector<double> criteria_a, criteria_grid;

    // [conditions]
    ClassifyOptions classify_options;

    // [output]
    std::string out_dir;
    std::uint64_t decimation = 1;

    std::string digest;  // fnv-1a of the raw config text
};

inline RunConfig build_run_config(const RawConfig& raw) {
    RunConfig rc;
    rc.digest = hex16(fnv1a64(raw.text));

    std::map<std::string, std::string> model_kv;
    bool saw_model = false;

    auto where = [](const ConfigEntry& e) {
        return "config [" + e.section + "] " + e.key + " (line " + std::to_string(e.line) + ")";
    };
    auto unknown = [&](const ConfigEntry& e) {
        throw ConfigError(where(e) + ": unknown key");
    };

    for (const auto& e : raw.entries) {
        try {
            if (e.section == "model") {
                if (e.key != "g" && e.key != "sigma2" && e.key != "p" && e.key != "r" &&
                    e.key != "pi" && e.key != "kappa")
                    unknown(e);
                model_kv[e.key] = e.value;
                saw_model = true;
            } else if (e.section == "sim") {
                if (e.key == "dt") rc.sim.dt = parse_double(e.value);
                else if (e.key == "t_max") rc.sim.t_max = parse_double(e.value);
                else if (e.key == "x_abs") rc.sim.x_abs = parse_double(e.value);
                else if (e.key == "x_max") rc.sim.x_max = parse_double(e.value);
                else if (e.key == "rate_cap_factor") rc.sim.rate_cap_factor = parse_double(e.value);
                else if (e.key == "seed") rc.sim.seed = parse_u64(e.value);
                else if (e.key == "stop_below") rc.sim.stop_below = parse_double(e.value);
                else if (e.key == "stop_above") rc.sim.stop_above = parse_double(e.value);
                else unknown(e);
            } else if (e.section == "mc") {
                if (e.key == "n") rc.n = parse_u64(e.value);
                else if (e.key == "n_paths") rc.n_paths = parse_u64(e.value);
                else if (e.key == "x0") rc.x0 = parse_double(e.value);
                else if (e.key == "t_event") rc.t_event = parse_double(e.value);
                else if (e.key == "poly_power") rc.poly_power = parse_double(e.value);
                else if (e.key == "eta") rc.eta = parse_double(e.value);
                else if (e.key == "r_lower") rc.r_lower = parse_double(e.value);
                else if (e.key == "tol") rc.tol = parse_double(e.value);
                else if (e.key == "a") rc.a = parse_double(e.value);
                else if (e.key == "c") rc.c = parse_double(e.value);
                else if (e.key == "b") rc.b = parse_double(e.value);
                else if (e.key == "budget") rc.budget = parse_double(e.value);
                else if (e.key == "t_burn") rc.t_burn = parse_double(e.value);
                else if (e.key == "t_end") rc.t_end = parse_double(e.value);
                else if (e.key == "quantity") rc.quantity = e.value;
                else if (e.key == "event") rc.event_kind = e.value;
                else if (e.key == "observable") rc.observable = e.value;
                else if (e.key == "times") rc.times = parse_grid_spec(e.value);
                else if (e.key == "checkpoints") rc.checkpoints = parse_grid_spec(e.value);
                else unknown(e);
            } else if (e.section == "grids") {
                if (e.key == "near_zero") rc.near_zero = parse_grid_spec(e.value);
                else if (e.key == "large_x") rc.large_x = parse_grid_spec(e.value);
                else unknown(e);
            } else if (e.section == "criteria") {
                if (e.key == "a") rc.criteria_a = parse_grid_spec(e.value);
                else if (e.key == "grid") rc.criteria_grid = parse_grid_spec(e.value);
                else unknown(e);
            } else if (e.section == "conditions") {
                // keys look like gvfg_eta, sn0_a, ln_inf_x0: condition name,
                // underscore, parameter name
                const auto us = e.key.rfind('_');
                if (us == std::string::npos || us == 0 || us + 1 >= e.key.size()) unknown(e);
                ConditionId id{};
                try {
                    id = parse_condition(e.key.substr(0, us));
                } catch (const ConfigError&) {
                    throw ConfigError(where(e) + ": unknown key");
                }
                const std::string param = e.key.substr(us + 1);
                ConditionParams& p = rc.classify_options.overrides[id];
                const double v = parse_double(e.value);
                if (param == "a") p.a = v;
                else if (param == "eta") p.eta = v;
                else if (param == "x0") p.x0 = v;
                else if (param == "x1") p.x1 = v;
                else if (param == "slack") p.slack = v;
                else if (param == "rlower") p.r_lower = v;
                else unknown(e);
            } else if (e.section == "output") {
                if (e.key == "directory") rc.out_dir = e.value;
                else if (e.key == "decimation") {
                    rc.decimation = parse_u64(e.value);
                    if (rc.decimation == 0)
                        throw std::invalid_argument("decimation must be >= 1");
                } else {
                    unknown(e);
                }
            } else {
                throw ConfigError(where(e) + ": unknown section [" + e.section + "]");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& ex) {
            throw ConfigError(where(e) + ": " + ex.what());
        }
    }

    if (!saw_model) throw ConfigError("config: missing [model] section");
    try {
        rc.model = parse_model(model_kv);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("config [model]: ") + ex.what());
    }
    try {
        rc.sim.validate();
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("config [sim]: ") + ex.what());
    }
    return rc;
}

inline RunConfig load_run_config(const std::string& path) {
    return build_run_config(load_config_file(path));
}

}  // namespace branchcat
