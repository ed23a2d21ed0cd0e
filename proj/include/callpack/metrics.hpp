#ifndef CALLPACK_METRICS_HPP
#define CALLPACK_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace callpack {

// One per simulated minute, over the live cluster utilization.
struct MetricsSnapshot {
    int minute = 0;
    double max_cpu = 0.0;
    double p95_cpu = 0.0;
    double p50_cpu = 0.0;
    double min_cpu = 0.0;
    double avg_cpu = 0.0;
    int hot_mps = 0;
    int hot_calls = 0;
    std::int64_t hot_participants = 0;
    std::int64_t cum_migrations = 0;
};

// Nearest-rank percentile (q in [0,1]) of an unsorted sample.
inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) throw std::runtime_error("percentile of empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t rank =
        std::size_t(std::clamp<long long>(std::llround(std::ceil(q * double(v.size()))),
                                          1, (long long)v.size()));
    return v[rank - 1];
}

struct RunReport {
    std::string policy;
    std::string migration;
    std::uint64_t seed = 0;

    // Hotness aggregates across the run.
    std::int64_t hot_participant_minutes = 0;  // H
    std::int64_t hot_call_minutes = 0;
    std::int64_t peak_hot_participants = 0;
    double max_cpu = 0.0;   // max over minutes of the per-minute max
    double max_p95 = 0.0;
    double max_avg = 0.0;
    double busiest_ratio = 0.0;  // max/avg at the minute with the highest avg

    std::int64_t migrations = 0;
    std::map<std::string, std::int64_t> solver_statuses;
    std::map<int, std::int64_t> waves_per_round;  // wave count -> rounds

    // In-run audit counters (zero in a correct run).
    std::int64_t audit_young_moves = 0;      // moved while under the age floor
    std::int64_t audit_repeat_moves = 0;     // moved in consecutive rounds
    std::int64_t audit_mice_moves = 0;       // moved despite tiny expected CPU
    std::int64_t audit_wave_overcap = 0;     // capped wave landed over the cap
    std::int64_t audit_budget_breaches = 0;  // plan exceeded the move budget
    std::int64_t verifier_violations = 0;    // planner self-checks, if enabled

    std::vector<MetricsSnapshot> minutes;
};

inline void finalize_report(RunReport& r) {
    double best_avg = -1.0;
    for (const MetricsSnapshot& m : r.minutes) {
        r.max_cpu = std::max(r.max_cpu, m.max_cpu);
        r.max_p95 = std::max(r.max_p95, m.p95_cpu);
        r.max_avg = std::max(r.max_avg, m.avg_cpu);
        r.hot_participant_minutes += m.hot_participants;
        r.hot_call_minutes += m.hot_calls;
        r.peak_hot_participants = std::max<std::int64_t>(r.peak_hot_participants,
                                                         m.hot_participants);
        if (m.avg_cpu > best_avg) {
            best_avg = m.avg_cpu;
            r.busiest_ratio = m.avg_cpu > 0.0 ? m.max_cpu / m.avg_cpu : 0.0;
        }
    }
    if (!r.minutes.empty()) r.migrations = r.minutes.back().cum_migrations;
}

inline void save_minutes_csv(const RunReport& r, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "minute,max,p95,p50,min,avg,hot_mps,hot_calls,hot_participants,cum_migrations\n";
    char buf[256];
    for (const MetricsSnapshot& m : r.minutes) {
        std::snprintf(buf, sizeof buf, "%d,%.4f,%.4f,%.4f,%.4f,%.4f,%d,%d,%lld,%lld\n",
                      m.minute, m.max_cpu, m.p95_cpu, m.p50_cpu, m.min_cpu, m.avg_cpu,
                      m.hot_mps, m.hot_calls, (long long)m.hot_participants,
                      (long long)m.cum_migrations);
        f << buf;
    }
}

inline void save_report_json(const RunReport& r, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
    };
    f << "{\n"
      << "  \"policy\": \"" << r.policy << "\",\n"
      << "  \"migration\": \"" << r.migration << "\",\n"
      << "  \"seed\": " << r.seed << ",\n"
      << "  \"hot_participant_minutes\": " << r.hot_participant_minutes << ",\n"
      << "  \"hot_call_minutes\": " << r.hot_call_minutes << ",\n"
      << "  \"peak_hot_participants\": " << r.peak_hot_participants << ",\n"
      << "  \"max_cpu\": " << num(r.max_cpu) << ",\n"
      << "  \"max_p95\": " << num(r.max_p95) << ",\n"
      << "  \"max_avg\": " << num(r.max_avg) << ",\n"
      << "  \"busiest_ratio\": " << num(r.busiest_ratio) << ",\n"
      << "  \"migrations\": " << r.migrations << ",\n";
    f << "  \"solver_statuses\": {";
    bool first = true;
    for (const auto& [k, v] : r.solver_statuses) {
        f << (first ? "" : ", ") << "\"" << k << "\": " << v;
        first = false;
    }
    f << "},\n  \"waves_per_round\": {";
    first = true;
    for (const auto& [k, v] : r.waves_per_round) {
        f << (first ? "" : ", ") << "\"" << k << "\": " << v;
        first = false;
    }
    f << "},\n"
      << "  \"audit\": {\"young_moves\": " << r.audit_young_moves
      << ", \"repeat_moves\": " << r.audit_repeat_moves
      << ", \"mice_moves\": " << r.audit_mice_moves
      << ", \"wave_overcap\": " << r.audit_wave_overcap
      << ", \"budget_breaches\": " << r.audit_budget_breaches
      << ", \"verifier_violations\": " << r.verifier_violations << "}\n"
      << "}\n";
}

}  // namespace callpack

#endif  // CALLPACK_METRICS_HPP
