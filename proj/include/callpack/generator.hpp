#ifndef CALLPACK_GENERATOR_HPP
#define CALLPACK_GENERATOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "callpack/rng.hpp"
#include "callpack/series.hpp"
#include "callpack/trace.hpp"

namespace callpack {

struct InvalidConfig : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Quantile target (probability, value); used both for the log-normal fit of
// participant counts and for the piecewise joiner-duration sampler.
struct QuantilePoint {
    double p = 0.0;
    double q = 0.0;
};

struct TraceGenConfig {
    int n_calls = 50000;
    std::int64_t duration_s = 86400;
    double recurring_fraction = 0.5;

    // Arrivals: weight on Gaussian bursts at :00/:30 marks, the rest uniform
    // within the hour; everything shaped by a diurnal hourly envelope.
    double burst_weight = 0.6;
    double burst_sigma_s = 180.0;
    double min_burst_ratio = 2.0;  // expected in-window vs off-peak arrival rate
    std::array<double, 24> hourly_weight = {
        0.2, 0.2, 0.2, 0.2, 0.2, 0.3, 0.5, 1.5, 4.0, 6.0, 6.5, 5.5,
        3.5, 5.5, 6.5, 6.0, 5.5, 4.0, 2.5, 1.5, 1.0, 0.8, 0.5, 0.3};

    // Max-participant distribution: log-normal least-squares fitted to these
    // quantile targets, then rounded and truncated to [min,max]_participants.
    std::vector<QuantilePoint> participant_quantiles = {
        {0.10, 2.5}, {0.50, 4.0}, {0.90, 10.5}, {0.95, 13.0}};
    int min_participants = 2;
    int max_participants = 20;

    // Joiner duration (last join - first join), seconds. Sampled through a
    // piecewise-linear inverse CDF anchored at these points.
    std::vector<QuantilePoint> joiner_quantiles = {
        {0.0, 1.0}, {0.50, 12.0}, {0.75, 46.0}, {0.95, 293.0}, {0.99, 550.0}, {1.0, 700.0}};

    // Call duration, log-normal seconds.
    double duration_median_s = 21600.0;
    double duration_sigma = 0.5;
    std::int64_t min_duration_s = 600;
    std::int64_t max_duration_s = 43200;

    // Media mix.
    double p_video = 0.5;
    double video_mbps = 1.0;
    double p_screenshare = 0.2;
    double ss_mbps = 1.5;
    double audio_mbps = 0.064;
    double p_quality_change = 0.1;
    double p_early_leave = 0.1;

    // Recurring series. series_count = 0 means one series per recurring call.
    int series_count = 0;
    int n_weeks = 5;  // history occurrences emitted per series
    // Jitter classes for per-series participant variation.
    double jitter_frac_exact = 0.2;
    double jitter_frac_small = 0.5;
    double jitter_small_sigma = 0.7;
    double jitter_large_sigma = 2.0;

    std::uint64_t seed = 1;
};

inline void validate_config(const TraceGenConfig& cfg) {
    auto fail = [](const std::string& m) { throw InvalidConfig(m); };
    if (cfg.n_calls < 0) fail("n_calls must be >= 0");
    if (cfg.duration_s <= 0) fail("duration_s must be positive");
    if (cfg.recurring_fraction < 0.0 || cfg.recurring_fraction > 1.0)
        fail("recurring_fraction must be in [0,1]");
    if (cfg.burst_weight < 0.0 || cfg.burst_weight > 1.0)
        fail("burst_weight must be in [0,1]");
    if (cfg.min_participants < 1 || cfg.max_participants < cfg.min_participants)
        fail("bad participant bounds");
    auto monotone = [](const std::vector<QuantilePoint>& qs) {
        for (std::size_t i = 1; i < qs.size(); ++i)
            if (qs[i].p < qs[i - 1].p || qs[i].q < qs[i - 1].q) return false;
        return !qs.empty();
    };
    if (!monotone(cfg.participant_quantiles)) fail("participant quantiles not monotone");
    if (!monotone(cfg.joiner_quantiles)) fail("joiner quantiles not monotone");
    if (cfg.jitter_frac_exact + cfg.jitter_frac_small > 1.0)
        fail("jitter fractions exceed 1");
    if (cfg.n_weeks < 0) fail("n_weeks must be >= 0");
}

namespace detail {

// Acklam's inverse normal CDF approximation; plenty for quantile fitting.
inline double probit(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > phigh) {
        q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

// Least-squares fit of (mu, sigma) in log space to the quantile targets.
struct LogNormalFit {
    double mu = 0.0;
    double sigma = 1.0;
};

inline LogNormalFit fit_lognormal(const std::vector<QuantilePoint>& targets) {
    double sz = 0, sy = 0, szz = 0, szy = 0;
    const double n = double(targets.size());
    for (const auto& t : targets) {
        const double z = probit(t.p);
        const double y = std::log(t.q);
        sz += z;
        sy += y;
        szz += z * z;
        szy += z * y;
    }
    LogNormalFit fit;
    const double denom = n * szz - sz * sz;
    if (targets.size() < 2 || std::abs(denom) < 1e-12) {
        fit.mu = sy / n;
        fit.sigma = 0.0;
    } else {
        fit.sigma = (n * szy - sz * sy) / denom;
        fit.mu = (sy - fit.sigma * sz) / n;
    }
    return fit;
}

// Piecewise-linear inverse CDF through the configured anchors.
inline double piecewise_quantile(const std::vector<QuantilePoint>& qs, double u) {
    if (u <= qs.front().p) return qs.front().q;
    for (std::size_t i = 1; i < qs.size(); ++i) {
        if (u <= qs[i].p) {
            const double span = qs[i].p - qs[i - 1].p;
            const double f = span > 0 ? (u - qs[i - 1].p) / span : 1.0;
            return qs[i - 1].q + f * (qs[i].q - qs[i - 1].q);
        }
    }
    return qs.back().q;
}

}  // namespace detail

// A generated workload: the 24-hour trace to replay, a warm-up trace of
// completed non-recurring calls for training the max-participant model, and
// the pre-seeded recurring-series history.
struct TraceBundle {
    CallTrace day;
    CallTrace warmup;
    SeriesStore history;
};

namespace detail {

struct CallShape {
    int peak_participants = 0;
    int video_streams = 0;
    bool screenshare = false;
};

class TraceBuilder {
public:
    TraceBuilder(const TraceGenConfig& cfg, Rng& rng)
        : cfg_(cfg),
          rng_(rng),
          part_fit_(fit_lognormal(cfg.participant_quantiles)),
          hourly_cdf_(build_hourly_cdf(cfg)) {}

    std::int64_t sample_arrival() {
        const double u = rng_.uniform01();
        int hour = int(std::lower_bound(hourly_cdf_.begin(), hourly_cdf_.end(), u) -
                       hourly_cdf_.begin());
        if (hour > 23) hour = 23;
        std::int64_t within;
        if (rng_.bernoulli(cfg_.burst_weight)) {
            const std::int64_t mark = rng_.bernoulli(0.5) ? 0 : 1800;
            const double g = rng_.normal(double(mark), cfg_.burst_sigma_s);
            within = std::int64_t(std::llround(g));
            within = ((within % 3600) + 3600) % 3600;
        } else {
            within = std::int64_t(rng_.uniform_int(3600));
        }
        std::int64_t t = std::int64_t(hour) * 3600 + within;
        return std::clamp<std::int64_t>(t, 0, cfg_.duration_s - 2);
    }

    int sample_peak() {
        const double v = rng_.lognormal(part_fit_.mu, part_fit_.sigma);
        const int n = int(std::llround(v));
        return std::clamp(n, cfg_.min_participants, cfg_.max_participants);
    }

    CallShape sample_shape() {
        CallShape s;
        s.peak_participants = sample_peak();
        s.video_streams = 0;
        for (int i = 0; i < s.peak_participants; ++i)
            if (rng_.bernoulli(cfg_.p_video)) ++s.video_streams;
        s.screenshare = rng_.bernoulli(cfg_.p_screenshare);
        return s;
    }

    // Re-draws a shape around a series base peak with the series' jitter.
    CallShape jittered_shape(int base_peak, double sigma) {
        CallShape s;
        double p = double(base_peak);
        if (sigma > 0.0) p += rng_.normal(0.0, sigma);
        s.peak_participants =
            std::clamp(int(std::llround(p)), cfg_.min_participants, cfg_.max_participants);
        for (int i = 0; i < s.peak_participants; ++i)
            if (rng_.bernoulli(cfg_.p_video)) ++s.video_streams;
        s.screenshare = rng_.bernoulli(cfg_.p_screenshare);
        return s;
    }

    OccurrenceSummary summarize(const CallShape& s) const {
        OccurrenceSummary o;
        o.peak_participants = double(s.peak_participants);
        o.audio_streams = double(s.peak_participants);
        o.video_streams = double(s.video_streams);
        o.ss_streams = s.screenshare ? 1.0 : 0.0;
        o.audio_mbps = cfg_.audio_mbps;
        o.video_mbps = cfg_.video_mbps;
        o.ss_mbps = cfg_.ss_mbps;
        return o;
    }

    CallRecord build_call(const std::string& call_id, const std::string& series_id,
                          std::int64_t start, const CallShape& shape) {
        CallRecord call;
        call.call_id = call_id;
        call.series_id = series_id;
        call.start_s = start;

        std::int64_t dur = std::int64_t(std::llround(
            rng_.lognormal(std::log(cfg_.duration_median_s), cfg_.duration_sigma)));
        dur = std::clamp(dur, cfg_.min_duration_s, cfg_.max_duration_s);
        call.end_s = std::min(start + dur, cfg_.duration_s - 1);
        dur = call.end_s - call.start_s;

        std::int64_t joiner = std::int64_t(std::llround(
            piecewise_quantile(cfg_.joiner_quantiles, rng_.uniform01())));
        joiner = std::clamp<std::int64_t>(joiner, 0, std::max<std::int64_t>(dur - 5, 0));

        const int n = shape.peak_participants;
        call.participants.reserve(std::size_t(n));
        std::vector<std::int64_t> join_t(static_cast<std::size_t>(n));
        join_t[0] = start;
        for (int i = 1; i < n; ++i)
            join_t[std::size_t(i)] =
                start + std::int64_t(rng_.uniform_int(std::uint64_t(joiner) + 1));
        std::sort(join_t.begin() + 1, join_t.end());
        if (n > 1) join_t[std::size_t(n - 1)] = start + joiner;

        std::vector<std::int64_t> leave_t(std::size_t(n), call.end_s);
        for (int i = 0; i < n; ++i) {
            if (rng_.bernoulli(cfg_.p_early_leave)) {
                const std::int64_t earliest = std::max(join_t[std::size_t(i)] + 1,
                                                       start + dur / 2);
                if (earliest < call.end_s)
                    leave_t[std::size_t(i)] =
                        earliest + std::int64_t(rng_.uniform_int(
                                       std::uint64_t(call.end_s - earliest)));
            }
        }

        struct Pending {
            std::int64_t t;
            std::int32_t pid;
            int rank;  // join=0 mstart=1 mqual=2 mstop=3 leave=4
            ParticipantEvent ev;
        };
        std::vector<Pending> pend;
        pend.reserve(std::size_t(n) * 4);
        auto push = [&](std::int64_t t, std::int32_t pid, int rank, EventAction a,
                        MediaKind k, double mbps) {
            ParticipantEvent ev;
            ev.time_s = std::int32_t(t);
            ev.participant = pid;
            ev.action = a;
            ev.kind = k;
            ev.mbps = float(mbps);
            pend.push_back({t, pid, rank, ev});
        };

        int videos_assigned = 0;
        for (std::int32_t i = 0; i < n; ++i) {
            call.participants.push_back("p" + std::to_string(i));
            const std::int64_t jt = join_t[std::size_t(i)];
            const std::int64_t lt = std::max(leave_t[std::size_t(i)], jt + 1);
            push(jt, i, 0, EventAction::Join, MediaKind::Audio, 0.0);
            push(jt, i, 1, EventAction::MediaStart, MediaKind::Audio, cfg_.audio_mbps);
            if (videos_assigned < shape.video_streams) {
                ++videos_assigned;
                push(jt, i, 1, EventAction::MediaStart, MediaKind::Video, cfg_.video_mbps);
                if (rng_.bernoulli(cfg_.p_quality_change) && lt - jt > 120) {
                    static const double ladder[] = {0.5, 1.5, 2.0};
                    const double q = ladder[rng_.uniform_int(3)];
                    const std::int64_t qt =
                        jt + 60 + std::int64_t(rng_.uniform_int(std::uint64_t(lt - jt - 60)));
                    push(qt, i, 2, EventAction::MediaQualityChange, MediaKind::Video, q);
                }
            }
            push(lt, i, 4, EventAction::Leave, MediaKind::Audio, 0.0);
        }
        if (shape.screenshare && dur > 120) {
            // First participant shares for a stretch in the middle of the call.
            const std::int64_t lt0 = leave_t[0];
            const std::int64_t lo = start + dur / 4;
            if (lo + 60 < lt0) {
                const std::int64_t s0 =
                    lo + std::int64_t(rng_.uniform_int(std::uint64_t((lt0 - lo) / 2)));
                const std::int64_t s1 = std::min<std::int64_t>(
                    s0 + 60 + std::int64_t(rng_.uniform_int(std::uint64_t(dur / 2 + 1))),
                    lt0 - 1);
                if (s1 > s0) {
                    push(s0, 0, 1, EventAction::MediaStart, MediaKind::ScreenShare,
                         cfg_.ss_mbps);
                    push(s1, 0, 3, EventAction::MediaStop, MediaKind::ScreenShare, 0.0);
                }
            }
        }

        std::sort(pend.begin(), pend.end(), [](const Pending& a, const Pending& b) {
            if (a.t != b.t) return a.t < b.t;
            if (a.pid != b.pid) return a.pid < b.pid;
            return a.rank < b.rank;
        });
        call.events.reserve(pend.size());
        for (const auto& p : pend) call.events.push_back(p.ev);
        return call;
    }

private:
    static std::vector<double> build_hourly_cdf(const TraceGenConfig& cfg) {
        std::vector<double> cdf(24);
        double total = 0;
        for (double w : cfg.hourly_weight) total += w;
        double acc = 0;
        for (int h = 0; h < 24; ++h) {
            acc += cfg.hourly_weight[std::size_t(h)] / total;
            cdf[std::size_t(h)] = acc;
        }
        cdf[23] = 1.0;
        return cdf;
    }

    const TraceGenConfig& cfg_;
    Rng& rng_;
    LogNormalFit part_fit_;
    std::vector<double> hourly_cdf_;
};

}  // namespace detail

inline std::uint64_t splitmix64_of(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t s = seed ^ (salt * 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

// The 24-hour synthetic day. Recurring calls carry a series_id; their history
// is produced by generate_bundle below.
inline CallTrace generate_trace(const TraceGenConfig& cfg) {
    validate_config(cfg);
    CallTrace trace;
    trace.duration_s = cfg.duration_s;
    trace.seed = cfg.seed;
    if (cfg.n_calls == 0) return trace;

    Rng root(cfg.seed);
    Rng rng = root.fork();
    detail::TraceBuilder builder(cfg, rng);

    const int n_recurring = int(std::llround(cfg.recurring_fraction * cfg.n_calls));
    const int n_series = cfg.series_count > 0
                             ? std::min(cfg.series_count, std::max(n_recurring, 1))
                             : n_recurring;

    // Per-series base shape and jitter class, reproduced independently of the
    // history emission in generate_bundle (same sub-seed).
    Rng series_rng(splitmix64_of(cfg.seed, 0xA11CE));
    detail::TraceBuilder series_builder(cfg, series_rng);
    std::vector<int> base_peak(std::size_t(std::max(n_series, 0)));
    std::vector<double> jitter(std::size_t(std::max(n_series, 0)));
    for (int s = 0; s < n_series; ++s) {
        base_peak[std::size_t(s)] = series_builder.sample_peak();
        const double u = series_rng.uniform01();
        jitter[std::size_t(s)] =
            u < cfg.jitter_frac_exact ? 0.0
            : u < cfg.jitter_frac_exact + cfg.jitter_frac_small ? cfg.jitter_small_sigma
                                                                : cfg.jitter_large_sigma;
    }

    trace.calls.reserve(std::size_t(cfg.n_calls));
    char idbuf[24];
    for (int i = 0; i < cfg.n_calls; ++i) {
        std::snprintf(idbuf, sizeof idbuf, "c%08d", i);
        const std::int64_t start = builder.sample_arrival();
        if (i < n_recurring && n_series > 0) {
            const int s = i % n_series;
            char sbuf[24];
            std::snprintf(sbuf, sizeof sbuf, "s%07d", s);
            const auto shape =
                builder.jittered_shape(base_peak[std::size_t(s)], jitter[std::size_t(s)]);
            trace.calls.push_back(builder.build_call(idbuf, sbuf, start, shape));
        } else {
            trace.calls.push_back(builder.build_call(idbuf, "", start, builder.sample_shape()));
        }
    }
    std::sort(trace.calls.begin(), trace.calls.end(),
              [](const CallRecord& a, const CallRecord& b) {
                  if (a.start_s != b.start_s) return a.start_s < b.start_s;
                  return a.call_id < b.call_id;
              });
    return trace;
}

// Day trace + warm-up training trace + recurring-series history, all derived
// deterministically from cfg.seed.
inline TraceBundle generate_bundle(const TraceGenConfig& cfg, int warmup_calls = -1) {
    validate_config(cfg);
    TraceBundle bundle;
    bundle.day = generate_trace(cfg);

    // Warm-up day: non-recurring calls only, separate sub-seed.
    TraceGenConfig wcfg = cfg;
    wcfg.recurring_fraction = 0.0;
    wcfg.n_calls = warmup_calls >= 0 ? warmup_calls : std::min(cfg.n_calls, 100000);
    wcfg.seed = splitmix64_of(cfg.seed, 0xBEEF);
    bundle.warmup = generate_trace(wcfg);
    bundle.warmup.seed = wcfg.seed;

    // History: n_weeks past occurrences per series, oldest first. Reuses the
    // same per-series sub-seed as generate_trace so base shapes line up.
    const int n_recurring = int(std::llround(cfg.recurring_fraction * cfg.n_calls));
    const int n_series = cfg.series_count > 0
                             ? std::min(cfg.series_count, std::max(n_recurring, 1))
                             : n_recurring;
    Rng series_rng(splitmix64_of(cfg.seed, 0xA11CE));
    detail::TraceBuilder series_builder(cfg, series_rng);
    std::vector<int> base_peak(std::size_t(std::max(n_series, 0)));
    std::vector<double> jitter(std::size_t(std::max(n_series, 0)));
    for (int s = 0; s < n_series; ++s) {
        base_peak[std::size_t(s)] = series_builder.sample_peak();
        const double u = series_rng.uniform01();
        jitter[std::size_t(s)] =
            u < cfg.jitter_frac_exact ? 0.0
            : u < cfg.jitter_frac_exact + cfg.jitter_frac_small ? cfg.jitter_small_sigma
                                                                : cfg.jitter_large_sigma;
    }
    Rng hist_rng(splitmix64_of(cfg.seed, 0x715707));
    detail::TraceBuilder hist_builder(cfg, hist_rng);
    char sbuf[24];
    for (int s = 0; s < n_series; ++s) {
        std::snprintf(sbuf, sizeof sbuf, "s%07d", s);
        for (int w = 0; w < cfg.n_weeks; ++w) {
            const auto shape = hist_builder.jittered_shape(base_peak[std::size_t(s)],
                                                           jitter[std::size_t(s)]);
            bundle.history.record(sbuf, hist_builder.summarize(shape));
        }
    }
    return bundle;
}

}  // namespace callpack

#endif  // CALLPACK_GENERATOR_HPP
