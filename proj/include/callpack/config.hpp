#ifndef CALLPACK_CONFIG_HPP
#define CALLPACK_CONFIG_HPP

#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "callpack/engine.hpp"
#include "callpack/generator.hpp"

namespace callpack {

// Thrown with the offending "[section] key" so the CLI can name it (exit 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything a run needs, in one place. The distribution anchor points
// (participant/joiner quantiles, hourly envelope, SKU mix) are deliberately
// not file-exposed; override them programmatically if a study needs to.
struct AppConfig {
    TraceGenConfig trace;
    RunConfig run;
};

namespace config_detail {

struct Binding {
    std::string section;
    std::string key;
    std::function<std::string(const AppConfig&)> get;
    std::function<void(AppConfig&, const std::string&)> set;
};

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline double parse_double(const std::string& section, const std::string& key,
                           const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": not a number: " + v);
    }
}

inline std::int64_t parse_int(const std::string& section, const std::string& key,
                              const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": not an integer: " + v);
    }
}

inline bool parse_bool(const std::string& section, const std::string& key,
                       const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("[" + section + "] " + key + ": not a boolean: " + v);
}

inline const std::vector<Binding>& bindings() {
    static const std::vector<Binding> b = [] {
        std::vector<Binding> v;
        auto num = [&v](const char* sec, const char* key, auto member) {
            v.push_back({sec, key,
                         [member](const AppConfig& c) { return fmt_double(std::invoke(member, c)); },
                         [member, sec = std::string(sec), key = std::string(key)](
                             AppConfig& c, const std::string& s) {
                             std::invoke(member, c) = parse_double(sec, key, s);
                         }});
        };
        auto integer = [&v](const char* sec, const char* key, auto member) {
            v.push_back({sec, key,
                         [member](const AppConfig& c) {
                             return std::to_string(std::invoke(member, c));
                         },
                         [member, sec = std::string(sec), key = std::string(key)](
                             AppConfig& c, const std::string& s) {
                             using T = std::decay_t<decltype(std::invoke(member, c))>;
                             std::invoke(member, c) = T(parse_int(sec, key, s));
                         }});
        };
        auto boolean = [&v](const char* sec, const char* key, auto member) {
            v.push_back({sec, key,
                         [member](const AppConfig& c) {
                             return std::invoke(member, c) ? "true" : "false";
                         },
                         [member, sec = std::string(sec), key = std::string(key)](
                             AppConfig& c, const std::string& s) {
                             std::invoke(member, c) = parse_bool(sec, key, s);
                         }});
        };

        integer("trace", "n_calls", [](auto& c) -> auto& { return c.trace.n_calls; });
        integer("trace", "duration_s", [](auto& c) -> auto& { return c.trace.duration_s; });
        num("trace", "recurring_fraction",
            [](auto& c) -> auto& { return c.trace.recurring_fraction; });
        num("trace", "burst_weight", [](auto& c) -> auto& { return c.trace.burst_weight; });
        num("trace", "burst_sigma_s", [](auto& c) -> auto& { return c.trace.burst_sigma_s; });
        num("trace", "min_burst_ratio",
            [](auto& c) -> auto& { return c.trace.min_burst_ratio; });
        integer("trace", "min_participants",
                [](auto& c) -> auto& { return c.trace.min_participants; });
        integer("trace", "max_participants",
                [](auto& c) -> auto& { return c.trace.max_participants; });
        num("trace", "duration_median_s",
            [](auto& c) -> auto& { return c.trace.duration_median_s; });
        num("trace", "duration_sigma",
            [](auto& c) -> auto& { return c.trace.duration_sigma; });
        integer("trace", "min_duration_s",
                [](auto& c) -> auto& { return c.trace.min_duration_s; });
        integer("trace", "max_duration_s",
                [](auto& c) -> auto& { return c.trace.max_duration_s; });
        num("trace", "p_video", [](auto& c) -> auto& { return c.trace.p_video; });
        num("trace", "video_mbps", [](auto& c) -> auto& { return c.trace.video_mbps; });
        num("trace", "p_screenshare",
            [](auto& c) -> auto& { return c.trace.p_screenshare; });
        num("trace", "ss_mbps", [](auto& c) -> auto& { return c.trace.ss_mbps; });
        num("trace", "audio_mbps", [](auto& c) -> auto& { return c.trace.audio_mbps; });
        num("trace", "p_quality_change",
            [](auto& c) -> auto& { return c.trace.p_quality_change; });
        num("trace", "p_early_leave",
            [](auto& c) -> auto& { return c.trace.p_early_leave; });
        integer("trace", "series_count",
                [](auto& c) -> auto& { return c.trace.series_count; });
        integer("trace", "n_weeks", [](auto& c) -> auto& { return c.trace.n_weeks; });
        num("trace", "jitter_frac_exact",
            [](auto& c) -> auto& { return c.trace.jitter_frac_exact; });
        num("trace", "jitter_frac_small",
            [](auto& c) -> auto& { return c.trace.jitter_frac_small; });
        num("trace", "jitter_small_sigma",
            [](auto& c) -> auto& { return c.trace.jitter_small_sigma; });
        num("trace", "jitter_large_sigma",
            [](auto& c) -> auto& { return c.trace.jitter_large_sigma; });
        integer("trace", "seed", [](auto& c) -> auto& { return c.trace.seed; });

        integer("cluster", "n_mps", [](auto& c) -> auto& { return c.run.cluster.n_mps; });
        num("cluster", "hot_threshold_pct",
            [](auto& c) -> auto& { return c.run.cluster.hot_threshold_pct; });
        num("cluster", "cap_pct", [](auto& c) -> auto& { return c.run.cluster.cap_pct; });
        integer("cluster", "n_virtual_clusters",
                [](auto& c) -> auto& { return c.run.cluster.n_virtual_clusters; });
        integer("cluster", "llr_k", [](auto& c) -> auto& { return c.run.cluster.llr_k; });

        num("cpu", "base_pct_per_call",
            [](auto& c) -> auto& { return c.run.cpu.base_pct_per_call; });
        num("cpu", "pct_per_mbps",
            [](auto& c) -> auto& { return c.run.cpu.pct_per_mbps; });

        num("planner", "mice_cutoff_pct",
            [](auto& c) -> auto& { return c.run.planner.mice_cutoff_pct; });
        num("planner", "near_hot_ratio",
            [](auto& c) -> auto& { return c.run.planner.near_hot_ratio; });
        integer("planner", "min_age_s",
                [](auto& c) -> auto& { return c.run.planner.min_age_s; });
        integer("planner", "migration_budget",
                [](auto& c) -> auto& { return c.run.planner.migration_budget; });
        num("planner", "gap", [](auto& c) -> auto& { return c.run.planner.gap; });
        num("planner", "time_limit_s",
            [](auto& c) -> auto& { return c.run.planner.time_limit_s; });
        integer("planner", "nodes_per_sec",
                [](auto& c) -> auto& { return c.run.planner.nodes_per_sec; });
        num("planner", "cold_reserve_factor",
            [](auto& c) -> auto& { return c.run.planner.cold_reserve_factor; });
        boolean("planner", "parallel",
                [](auto& c) -> auto& { return c.run.planner.parallel; });

        integer("engine", "metrics_period_s",
                [](auto& c) -> auto& { return c.run.metrics_period_s; });
        integer("engine", "planning_period_s",
                [](auto& c) -> auto& { return c.run.planning_period_s; });
        integer("engine", "seed", [](auto& c) -> auto& { return c.run.seed; });
        boolean("engine", "use_recurring_predictor",
                [](auto& c) -> auto& { return c.run.use_recurring_predictor; });
        boolean("engine", "use_growth_table",
                [](auto& c) -> auto& { return c.run.use_growth_table; });
        boolean("engine", "audit", [](auto& c) -> auto& { return c.run.audit; });

        // Enums, by name.
        v.push_back({"engine", "policy",
                     [](const AppConfig& c) { return std::string(policy_name(c.run.policy)); },
                     [](AppConfig& c, const std::string& s) {
                         try {
                             c.run.policy = parse_policy(s);
                         } catch (const std::exception& e) {
                             throw ConfigError(std::string("[engine] policy: ") + e.what());
                         }
                     }});
        v.push_back({"engine", "migration",
                     [](const AppConfig& c) {
                         return std::string(migration_name(c.run.migration));
                     },
                     [](AppConfig& c, const std::string& s) {
                         try {
                             c.run.migration = parse_migration(s);
                         } catch (const std::exception& e) {
                             throw ConfigError(std::string("[engine] migration: ") + e.what());
                         }
                     }});
        return v;
    }();
    return b;
}

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace((unsigned char)s[a])) ++a;
    while (b > a && std::isspace((unsigned char)s[b - 1])) --b;
    return s.substr(a, b - a);
}

}  // namespace config_detail

inline std::string dump_config(const AppConfig& cfg) {
    std::ostringstream out;
    std::string section;
    for (const auto& b : config_detail::bindings()) {
        if (b.section != section) {
            if (!section.empty()) out << "\n";
            out << "[" << b.section << "]\n";
            section = b.section;
        }
        out << b.key << " = " << b.get(cfg) << "\n";
    }
    return out.str();
}

// Key/value with [section] headers, '#' or ';' comments. Unknown sections
// and keys are errors, named precisely.
inline AppConfig parse_config(std::istream& in, AppConfig cfg = {}) {
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = config_detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": bad section header");
            section = config_detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = config_detail::trim(line.substr(0, eq));
        const std::string value = config_detail::trim(line.substr(eq + 1));
        bool matched = false;
        for (const auto& b : config_detail::bindings()) {
            if (b.section == section && b.key == key) {
                b.set(cfg, value);
                matched = true;
                break;
            }
        }
        if (!matched)
            throw ConfigError("unknown key: [" + section + "] " + key);
    }
    return cfg;
}

inline AppConfig load_config(const std::string& path, AppConfig cfg = {}) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    return parse_config(f, std::move(cfg));
}

}  // namespace callpack

#endif  // CALLPACK_CONFIG_HPP
