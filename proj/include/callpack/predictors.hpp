#ifndef CALLPACK_PREDICTORS_HPP
#define CALLPACK_PREDICTORS_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "callpack/cpu_model.hpp"
#include "callpack/series.hpp"
#include "callpack/trace.hpp"

namespace callpack {

// ---------------------------------------------------------------------------
// Recurring calls: weighted moving average over the occurrence history.
// ---------------------------------------------------------------------------

struct RecurringEstimate {
    double peak_participants = 0.0;
    double audio_streams = 0.0;
    double video_streams = 0.0;
    double ss_streams = 0.0;
    double sum_stream_mbps = 0.0;
    double peak_cpu_ref = 0.0;  // reference SKU
};

namespace detail {
// 0.5*newest + 0.25 + 0.125 + 0.125*mean(rest). Requires >= 4 values.
inline double wma(const std::vector<double>& newest_first) {
    double tail = 0.0;
    for (std::size_t i = 3; i < newest_first.size(); ++i) tail += newest_first[i];
    tail /= double(newest_first.size() - 3);
    return 0.5 * newest_first[0] + 0.25 * newest_first[1] + 0.125 * newest_first[2] +
           0.125 * tail;
}
}  // namespace detail

// History ordered oldest -> newest. Fewer than 4 occurrences yields nullopt
// and the caller treats the call as non-recurring.
inline std::optional<RecurringEstimate> predict_recurring(
    const std::vector<OccurrenceSummary>& history, const CpuModelParams& params) {
    if (history.size() < 4) return std::nullopt;
    const std::size_t n = history.size();
    auto newest_first = [&](auto field) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = field(history[n - 1 - i]);
        return v;
    };
    RecurringEstimate est;
    est.peak_participants =
        detail::wma(newest_first([](const OccurrenceSummary& o) { return o.peak_participants; }));
    est.audio_streams =
        detail::wma(newest_first([](const OccurrenceSummary& o) { return o.audio_streams; }));
    est.video_streams =
        detail::wma(newest_first([](const OccurrenceSummary& o) { return o.video_streams; }));
    est.ss_streams =
        detail::wma(newest_first([](const OccurrenceSummary& o) { return o.ss_streams; }));
    est.sum_stream_mbps =
        detail::wma(newest_first([](const OccurrenceSummary& o) { return o.sum_stream_mbps(); }));
    est.peak_cpu_ref = call_cpu_pct(est.peak_participants, est.sum_stream_mbps, params,
                                    SkuProfile{"ref", 1.0});
    return est;
}

// ---------------------------------------------------------------------------
// Non-recurring calls: the N_max(n, t) counting estimator.
// ---------------------------------------------------------------------------

// Per training call: per-minute maximum participant count while the call is
// alive, plus the lifetime maximum.
struct CallTrajectory {
    std::vector<int> p_t;
    int c = 0;
};

struct CallTrajectoryDataset {
    std::vector<CallTrajectory> calls;
};

struct EmptyDataset : std::runtime_error {
    EmptyDataset() : std::runtime_error("empty trajectory dataset") {}
};

// Per-minute maximum participants, minutes clamped to max_minutes entries.
inline CallTrajectory call_trajectory(const CallRecord& call, int max_minutes = 1 << 20) {
    CallTrajectory tr;
    const std::int64_t dur = call.end_s - call.start_s;
    const int minutes = int(std::min<std::int64_t>(dur / 60 + 1, max_minutes));
    tr.p_t.assign(std::size_t(minutes), 0);
    std::size_t ei = 0;
    int count = 0;
    for (int m = 0; m < minutes; ++m) {
        const std::int64_t t1 = call.start_s + std::int64_t(m + 1) * 60;
        int peak = count;  // standing count carried from the previous minute
        while (ei < call.events.size() && call.events[ei].time_s < t1) {
            if (call.events[ei].action == EventAction::Join) ++count;
            else if (call.events[ei].action == EventAction::Leave) --count;
            if (count > peak) peak = count;
            ++ei;
        }
        tr.p_t[std::size_t(m)] = peak;
        if (peak > tr.c) tr.c = peak;
    }
    // Lifetime max may fall past the tabulated window.
    for (; ei < call.events.size(); ++ei) {
        if (call.events[ei].action == EventAction::Join) ++count;
        else if (call.events[ei].action == EventAction::Leave) --count;
        if (count > tr.c) tr.c = count;
    }
    return tr;
}

inline CallTrajectoryDataset make_dataset(const CallTrace& trace, int max_minutes,
                                          bool non_recurring_only = true) {
    CallTrajectoryDataset ds;
    ds.calls.reserve(trace.calls.size());
    for (const auto& call : trace.calls) {
        if (non_recurring_only && !call.series_id.empty()) continue;
        ds.calls.push_back(call_trajectory(call, max_minutes));
    }
    return ds;
}

// Lookup table for the peak-participant estimate of in-flight calls, keyed by
// (current participants, whole minutes since start). Immutable after build.
class NmaxTable {
public:
    NmaxTable(int n_cap, int t_max_min, std::vector<double> values)
        : n_cap_(n_cap), t_max_(t_max_min), values_(std::move(values)) {}

    // Degenerate table: N_max(n, t) = n everywhere.
    static NmaxTable identity(int n_cap = 500, int t_max_min = 120) {
        std::vector<double> v(std::size_t(n_cap) * std::size_t(t_max_min + 1));
        for (int t = 0; t <= t_max_min; ++t)
            for (int n = 1; n <= n_cap; ++n)
                v[std::size_t(t) * std::size_t(n_cap) + std::size_t(n - 1)] = double(n);
        return NmaxTable(n_cap, t_max_min, std::move(v));
    }

    int n_cap() const { return n_cap_; }
    int t_max_min() const { return t_max_; }

    // n and t are clamped to the table's domain.
    double lookup(int n, int t_min) const {
        n = std::clamp(n, 1, n_cap_);
        t_min = std::clamp(t_min, 0, t_max_);
        return values_[std::size_t(t_min) * std::size_t(n_cap_) + std::size_t(n - 1)];
    }

    void export_csv(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open for writing: " + path);
        f << "n,t,n_max\n";
        char buf[64];
        for (int t = 0; t <= t_max_; ++t)
            for (int n = 1; n <= n_cap_; ++n) {
                std::snprintf(buf, sizeof buf, "%d,%d,%.6f\n", n, t, lookup(n, t));
                f << buf;
            }
    }

    static NmaxTable import_csv(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open: " + path);
        std::string line;
        std::getline(f, line);  // header
        int n_cap = 0, t_max = 0;
        std::vector<std::tuple<int, int, double>> rows;
        while (std::getline(f, line)) {
            int n, t;
            double v;
            if (std::sscanf(line.c_str(), "%d,%d,%lf", &n, &t, &v) == 3) {
                rows.emplace_back(n, t, v);
                n_cap = std::max(n_cap, n);
                t_max = std::max(t_max, t);
            }
        }
        std::vector<double> values(std::size_t(n_cap) * std::size_t(t_max + 1), 0.0);
        for (auto& [n, t, v] : rows)
            values[std::size_t(t) * std::size_t(n_cap) + std::size_t(n - 1)] = v;
        return NmaxTable(n_cap, t_max, std::move(values));
    }

private:
    int n_cap_;
    int t_max_;
    std::vector<double> values_;  // [t][n-1]
};

// Builds the table from trailing history. All accumulation is integral, so
// the result is bit-identical to the naive per-(n,m) double loop.
inline NmaxTable build_nmax_table(const CallTrajectoryDataset& data, int n_cap = 500,
                                  int t_max_min = 120) {
    if (data.calls.empty()) throw EmptyDataset();
    std::vector<double> values(std::size_t(n_cap) * std::size_t(t_max_min + 1));
    std::vector<std::int64_t> cnt_c(std::size_t(n_cap) + 1);
    std::vector<std::vector<std::pair<int, int>>> by_p;  // per p_t bucket: (p, c)

    for (int t = 0; t <= t_max_min; ++t) {
        // Bucket alive-at-t calls by p_t.
        by_p.assign(std::size_t(n_cap) + 1, {});
        for (const auto& call : data.calls) {
            if (std::size_t(t) >= call.p_t.size()) continue;  // call already over
            const int p = std::clamp(call.p_t[std::size_t(t)], 0, n_cap);
            const int c = std::clamp(call.c, 0, n_cap);
            by_p[std::size_t(p)].emplace_back(p, c);
        }
        std::fill(cnt_c.begin(), cnt_c.end(), 0);
        for (const auto& [p, c] : by_p[0]) ++cnt_c[std::size_t(c)];
        for (int n = 1; n <= n_cap; ++n) {
            for (const auto& [p, c] : by_p[std::size_t(n)]) ++cnt_c[std::size_t(c)];
            // w_m = #{x : p_t <= n, c >= m};  sums over m >= n reduce to
            // suffix aggregates of cnt_c.
            std::int64_t s0 = 0, s1 = 0, s2 = 0;
            for (int c = n; c <= n_cap; ++c) {
                const std::int64_t k = cnt_c[std::size_t(c)];
                s0 += k;
                s1 += k * c;
                s2 += k * std::int64_t(c) * c;
            }
            const std::int64_t denom = s1 - std::int64_t(n - 1) * s0;
            const std::int64_t numer =
                (s2 + s1) / 2 - s0 * (std::int64_t(n) * (n - 1) / 2);
            double v = denom > 0 ? double(numer) / double(denom) : double(n);
            if (v < double(n)) v = double(n);
            values[std::size_t(t) * std::size_t(n_cap) + std::size_t(n - 1)] = v;
        }
    }
    return NmaxTable(n_cap, t_max_min, std::move(values));
}

// Dataset mean of each call's per-participant send rate at its busiest point.
inline double mean_media_rate(const CallTrace& trace) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& call : trace.calls) {
        int cur = 0, peak = 0;
        double mbps = 0.0, peak_mbps = 0.0;
        for (const auto& ev : call.events) {
            switch (ev.action) {
                case EventAction::Join: ++cur; break;
                case EventAction::Leave: --cur; break;
                case EventAction::MediaStart: mbps += ev.mbps; break;
                case EventAction::MediaStop: mbps -= ev.mbps; break;
                default: break;
            }
            if (cur > peak) peak = cur;
            if (mbps > peak_mbps) peak_mbps = mbps;
        }
        if (peak > 0) {
            sum += peak_mbps / double(peak);
            ++n;
        }
    }
    return n > 0 ? sum / double(n) : 0.0;
}

// Peak-CPU estimate (reference SKU) for an in-flight non-recurring call.
inline double estimate_nonrecurring_peak_cpu(int current_participants, std::int64_t age_s,
                                             const NmaxTable& table, double avg_media_rate,
                                             const CpuModelParams& params) {
    const double n_max = table.lookup(current_participants, int(age_s / 60));
    const double sum_mbps = n_max * avg_media_rate;
    return call_cpu_pct(n_max, sum_mbps, params, SkuProfile{"ref", 1.0});
}

}  // namespace callpack

#endif  // CALLPACK_PREDICTORS_HPP
