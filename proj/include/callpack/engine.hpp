#ifndef CALLPACK_ENGINE_HPP
#define CALLPACK_ENGINE_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "callpack/cluster.hpp"
#include "callpack/cpu_model.hpp"
#include "callpack/generator.hpp"
#include "callpack/metrics.hpp"
#include "callpack/migration.hpp"
#include "callpack/policies.hpp"
#include "callpack/predictors.hpp"
#include "callpack/rng.hpp"
#include "callpack/trace.hpp"

namespace callpack {

enum class MigrationMode { None, Greedy, Mip };

inline const char* migration_name(MigrationMode m) {
    switch (m) {
        case MigrationMode::None: return "none";
        case MigrationMode::Greedy: return "greedy";
        case MigrationMode::Mip: return "mip";
    }
    return "?";
}

inline MigrationMode parse_migration(const std::string& s) {
    if (s == "none") return MigrationMode::None;
    if (s == "greedy") return MigrationMode::Greedy;
    if (s == "mip") return MigrationMode::Mip;
    throw std::runtime_error("unknown migration mode: " + s);
}

struct RunConfig {
    PolicyKind policy = PolicyKind::Tetris;
    MigrationMode migration = MigrationMode::None;
    ClusterConfig cluster;
    CpuModelParams cpu;
    PlannerConfig planner;
    GreedyMigrationConfig greedy;
    int metrics_period_s = 60;
    int planning_period_s = 120;
    std::uint64_t seed = 1;
    // Ablation switches: peak prediction for recurring calls, and the
    // participant-growth table for everything else. With both off the
    // placement signal degrades to the instantaneous measured CPU.
    bool use_recurring_predictor = true;
    bool use_growth_table = true;
    bool audit = true;
};

// Trained inputs shared across runs so comparisons see identical predictors.
struct TrainedPredictors {
    NmaxTable table = NmaxTable::identity();
    double avg_media_rate = 0.0;
};

inline TrainedPredictors train_predictors(const CallTrace& warmup, int n_cap = 500,
                                          int t_max_min = 120) {
    TrainedPredictors tp;
    tp.table = build_nmax_table(make_dataset(warmup, t_max_min + 1, true), n_cap, t_max_min);
    tp.avg_media_rate = mean_media_rate(warmup);
    return tp;
}

// Flattened, globally time-ordered view of a trace. End markers sort after
// any same-second events of their call.
struct PreparedTrace {
    struct Item {
        std::int32_t t = 0;
        std::int32_t call = 0;  // index into trace->calls
        std::int32_t ev = 0;    // event index, or kEnd for the end marker
    };
    static constexpr std::int32_t kEnd = std::numeric_limits<std::int32_t>::max();

    const CallTrace* trace = nullptr;
    std::vector<Item> items;
};

inline PreparedTrace prepare_trace(const CallTrace& trace) {
    PreparedTrace prep;
    prep.trace = &trace;
    std::size_t total = trace.calls.size();
    for (const auto& c : trace.calls) total += c.events.size();
    prep.items.reserve(total);
    for (std::int32_t ci = 0; ci < std::int32_t(trace.calls.size()); ++ci) {
        const CallRecord& c = trace.calls[std::size_t(ci)];
        for (std::int32_t ei = 0; ei < std::int32_t(c.events.size()); ++ei)
            prep.items.push_back({c.events[std::size_t(ei)].time_s, ci, ei});
        prep.items.push_back({std::int32_t(c.end_s), ci, PreparedTrace::kEnd});
    }
    std::sort(prep.items.begin(), prep.items.end(),
              [](const PreparedTrace::Item& a, const PreparedTrace::Item& b) {
                  if (a.t != b.t) return a.t < b.t;
                  if (a.call != b.call) return a.call < b.call;
                  return a.ev < b.ev;
              });
    return prep;
}

namespace engine_detail {

// Per-call engine-side state the cluster does not track.
struct CallRuntime {
    bool started = false;
    bool ended = false;
    double predicted_peak_ref = 0.0;  // recurring prediction, if any
    // Per participant, per media kind: the active stream's bitrate.
    std::vector<std::array<float, 3>> rates;
    // Per-kind live and peak stream counts / bitrate sums for the occurrence
    // summary recorded at call end.
    std::array<int, 3> streams{};
    std::array<double, 3> mbps{};
    std::array<int, 3> peak_streams{};
    std::array<double, 3> peak_mbps{};
};

struct Engine {
    const PreparedTrace& prep;
    const TrainedPredictors& trained;
    const RunConfig& cfg;
    Cluster cluster;
    Rng policy_rng;
    Rng greedy_rng;
    PolicyState pstate;
    std::vector<CallRuntime> rt;
    std::vector<std::int32_t> pos_of_id;  // numeric call id -> index into trace->calls
    std::map<std::int64_t, std::vector<Move>> pending_waves;
    RunReport report;
    int round = 0;
    std::int64_t cum_migrations = 0;

    Engine(const PreparedTrace& p, const SeriesStore& history, const TrainedPredictors& t,
           const RunConfig& c)
        : prep(p),
          trained(t),
          cfg(c),
          cluster(c.cluster, splitmix64_of(c.seed, 0xC1)),
          policy_rng(splitmix64_of(c.seed, 0xC2)),
          greedy_rng(splitmix64_of(c.seed, 0xC3)),
          rt(p.trace->calls.size()) {
        // Call ids are "c" + number but the trace is sorted by start time,
        // so the number need not match the position; index them once.
        std::int64_t max_id = -1;
        for (const auto& rec : p.trace->calls)
            max_id = std::max<std::int64_t>(max_id, std::stol(rec.call_id.substr(1)));
        pos_of_id.assign(std::size_t(max_id + 1), -1);
        for (std::int32_t ci = 0; ci < std::int32_t(p.trace->calls.size()); ++ci)
            pos_of_id[std::size_t(std::stol(p.trace->calls[std::size_t(ci)].call_id.substr(1)))] = ci;
        cluster.series() = history;
        report.policy = policy_name(c.policy);
        report.migration = migration_name(c.migration);
        report.seed = c.seed;
    }

    double base_estimate(const CallState& cs, const CallRuntime& r,
                         std::int64_t now) const {
        if (cs.is_recurring_predicted) return r.predicted_peak_ref;
        if (cfg.use_growth_table)
            return estimate_nonrecurring_peak_cpu(std::max(cs.participants, 1),
                                                  cs.age_s(now), trained.table,
                                                  trained.avg_media_rate, cfg.cpu);
        return cs.measured_cpu_ref;
    }

    void refresh_call(CallState& cs, const CallRuntime& r, std::int64_t now) {
        const double measured =
            call_cpu_pct(cs.participants, cs.sum_stream_mbps, cfg.cpu, SkuProfile{"ref", 1.0});
        const double est = std::max(base_estimate(cs, r, now), measured);
        cluster.update_call_load(cs, measured, est);
    }

    void start_call(std::int32_t ci, std::int64_t now) {
        const CallRecord& rec = prep.trace->calls[std::size_t(ci)];
        CallRuntime& r = rt[std::size_t(ci)];
        r.started = true;
        r.rates.assign(rec.participants.size(), {});

        CallState cs;
        cs.call_id = rec.call_id;
        cs.series_id = rec.series_id;
        cs.start_s = now;
        if (cfg.use_recurring_predictor && !rec.series_id.empty()) {
            const auto est = predict_recurring(cluster.series().history(rec.series_id),
                                               cfg.cpu);
            if (est) {
                cs.is_recurring_predicted = true;
                r.predicted_peak_ref = est->peak_cpu_ref;
                cs.estimated_peak_cpu_ref = est->peak_cpu_ref;
            }
        }
        if (!cs.is_recurring_predicted && cfg.use_growth_table)
            cs.estimated_peak_cpu_ref = estimate_nonrecurring_peak_cpu(
                1, 0, trained.table, trained.avg_media_rate, cfg.cpu);

        const int mp = pick_mp(cfg.policy, pstate, cluster.mps(), cfg.cluster.llr_k,
                               policy_rng);
        cluster.add_call(std::move(cs), mp);
    }

    void apply_event(std::int32_t ci, const ParticipantEvent& ev, std::int64_t now) {
        const CallRecord& rec = prep.trace->calls[std::size_t(ci)];
        CallRuntime& r = rt[std::size_t(ci)];
        if (!r.started) start_call(ci, now);
        CallState& cs = cluster.call(rec.call_id);
        auto& prates = r.rates[std::size_t(ev.participant)];

        switch (ev.action) {
            case EventAction::Join:
                ++cs.participants;
                cs.peak_participants = std::max(cs.peak_participants, cs.participants);
                break;
            case EventAction::Leave:
                --cs.participants;
                for (int k = 0; k < 3; ++k) {
                    if (prates[std::size_t(k)] > 0.0f) {
                        cs.sum_stream_mbps -= prates[std::size_t(k)];
                        r.mbps[std::size_t(k)] -= prates[std::size_t(k)];
                        --r.streams[std::size_t(k)];
                        prates[std::size_t(k)] = 0.0f;
                    }
                }
                break;
            case EventAction::MediaStart: {
                const int k = int(ev.kind);
                prates[std::size_t(k)] = ev.mbps;
                cs.sum_stream_mbps += ev.mbps;
                r.mbps[std::size_t(k)] += ev.mbps;
                ++r.streams[std::size_t(k)];
                break;
            }
            case EventAction::MediaStop: {
                const int k = int(ev.kind);
                cs.sum_stream_mbps -= prates[std::size_t(k)];
                r.mbps[std::size_t(k)] -= prates[std::size_t(k)];
                --r.streams[std::size_t(k)];
                prates[std::size_t(k)] = 0.0f;
                break;
            }
            case EventAction::MediaQualityChange: {
                const int k = int(ev.kind);
                cs.sum_stream_mbps += ev.mbps - prates[std::size_t(k)];
                r.mbps[std::size_t(k)] += ev.mbps - prates[std::size_t(k)];
                prates[std::size_t(k)] = ev.mbps;
                break;
            }
        }
        for (int k = 0; k < 3; ++k) {
            r.peak_streams[std::size_t(k)] =
                std::max(r.peak_streams[std::size_t(k)], r.streams[std::size_t(k)]);
            r.peak_mbps[std::size_t(k)] =
                std::max(r.peak_mbps[std::size_t(k)], r.mbps[std::size_t(k)]);
        }
        cs.cur_audio = r.streams[0];
        cs.cur_video = r.streams[1];
        cs.cur_ss = r.streams[2];
        cs.peak_audio_streams = std::max(cs.peak_audio_streams, double(r.streams[0]));
        cs.peak_video_streams = std::max(cs.peak_video_streams, double(r.streams[1]));
        cs.peak_ss_streams = std::max(cs.peak_ss_streams, double(r.streams[2]));
        refresh_call(cs, r, now);
    }

    void end_call(std::int32_t ci) {
        const CallRecord& rec = prep.trace->calls[std::size_t(ci)];
        CallRuntime& r = rt[std::size_t(ci)];
        if (!r.started || r.ended) return;
        r.ended = true;
        if (!rec.series_id.empty()) {
            const CallState& cs = cluster.call(rec.call_id);
            OccurrenceSummary occ;
            occ.peak_participants = cs.peak_participants;
            occ.audio_streams = r.peak_streams[0];
            occ.video_streams = r.peak_streams[1];
            occ.ss_streams = r.peak_streams[2];
            occ.audio_mbps = r.peak_streams[0] > 0 ? r.peak_mbps[0] / r.peak_streams[0] : 0.0;
            occ.video_mbps = r.peak_streams[1] > 0 ? r.peak_mbps[1] / r.peak_streams[1] : 0.0;
            occ.ss_mbps = r.peak_streams[2] > 0 ? r.peak_mbps[2] / r.peak_streams[2] : 0.0;
            cluster.series().record(rec.series_id, occ);
        }
        cluster.remove_call(rec.call_id);
        r.rates.clear();
        r.rates.shrink_to_fit();
    }

    void minute_tick(std::int64_t now) {
        for (auto& [id, cs] : cluster.calls())
            refresh_call(cs, rt[std::size_t(call_index(cs))], now);
        cluster.recompute_sums();

        MetricsSnapshot m;
        m.minute = int(now / 60);
        std::vector<double> cpus;
        cpus.reserve(cluster.mps().size());
        double sum = 0.0;
        m.min_cpu = std::numeric_limits<double>::max();
        const double hot = cfg.cluster.hot_threshold_pct;
        for (const MpState& mp : cluster.mps()) {
            const double c = mp.current_cpu_pct;
            cpus.push_back(c);
            sum += c;
            m.max_cpu = std::max(m.max_cpu, c);
            m.min_cpu = std::min(m.min_cpu, c);
            if (c >= hot) {
                ++m.hot_mps;
                m.hot_calls += int(mp.hosted_calls.size());
                for (const std::string& cid : mp.hosted_calls)
                    m.hot_participants += cluster.call(cid).participants;
            }
        }
        m.avg_cpu = sum / double(cpus.size());
        m.p95_cpu = percentile(cpus, 0.95);
        m.p50_cpu = percentile(cpus, 0.50);
        m.cum_migrations = cum_migrations;
        report.minutes.push_back(m);
    }

    std::int32_t call_index(const CallState& cs) const {
        return pos_of_id[std::size_t(std::stol(cs.call_id.substr(1)))];
    }

    void plan_tick(std::int64_t now) {
        ++round;
        MigrationPlan plan;
        if (cfg.migration == MigrationMode::Greedy) {
            GreedyMigrationConfig g = cfg.greedy;
            g.hot_threshold_pct = cfg.cluster.hot_threshold_pct;
            plan = plan_greedy(cluster, g, greedy_rng);
        } else {
            PlannerConfig p = cfg.planner;
            p.hot_threshold_pct = cfg.cluster.hot_threshold_pct;
            p.cap_pct = cfg.cluster.cap_pct;
            plan = plan_migrations(cluster, p, round, now);
        }
        for (RepackStatus s : plan.statuses) ++report.solver_statuses[repack_status_name(s)];
        report.verifier_violations += std::int64_t(plan.violations.size());
        if (cfg.audit && cfg.migration == MigrationMode::Mip) {
            std::int64_t real_moves = 0;
            for (const std::vector<int>& w : plan.waves) real_moves += std::int64_t(w.size());
            const std::int64_t budget = std::int64_t(cfg.planner.migration_budget) *
                                        std::max(1, cfg.cluster.n_virtual_clusters);
            if (real_moves > budget) ++report.audit_budget_breaches;
        }
        if (cfg.migration != MigrationMode::None)
            ++report.waves_per_round[int(plan.waves.size())];
        for (std::size_t w = 0; w < plan.waves.size(); ++w) {
            auto& slot = pending_waves[now + 1 + std::int64_t(w)];
            for (int mi : plan.waves[w]) slot.push_back(plan.moves[std::size_t(mi)]);
        }
    }

    void execute_wave(const std::vector<Move>& moves, std::int64_t now) {
        for (const Move& mv : moves) {
            if (mv.to_mp == mv.from_mp) continue;  // abandoned during scheduling
            auto it = cluster.calls().find(mv.call_id);
            if (it == cluster.calls().end()) continue;  // call ended meanwhile
            CallState& cs = it->second;
            if (cs.assigned_mp != mv.from_mp) continue;  // moved by someone else
            if (cfg.audit && cfg.migration == MigrationMode::Mip) {
                if (cs.age_s(now) < cfg.planner.min_age_s) ++report.audit_young_moves;
                if (cs.last_migration_round == round - 1) ++report.audit_repeat_moves;
                if (cs.estimated_peak_cpu_ref <= cfg.planner.mice_cutoff_pct)
                    ++report.audit_mice_moves;
            }
            cluster.move_call(mv.call_id, mv.to_mp, round);
            ++cum_migrations;
            if (cfg.audit && cfg.migration == MigrationMode::Mip && !mv.relaxed) {
                const MpState& to = cluster.mp(mv.to_mp);
                if (to.expected_peak_cpu_pct > cfg.cluster.cap_pct + 0.01)
                    ++report.audit_wave_overcap;
            }
        }
    }

    RunReport run() {
        std::size_t idx = 0;
        const std::int64_t horizon = prep.trace->duration_s;
        for (std::int64_t t = 0; t <= horizon; ++t) {
            auto wit = pending_waves.find(t);
            if (wit != pending_waves.end()) {
                execute_wave(wit->second, t);
                pending_waves.erase(wit);
            }
            while (idx < prep.items.size() && prep.items[idx].t == t) {
                const PreparedTrace::Item& item = prep.items[idx];
                if (item.ev == PreparedTrace::kEnd)
                    end_call(item.call);
                else
                    apply_event(item.call,
                                prep.trace->calls[std::size_t(item.call)]
                                    .events[std::size_t(item.ev)],
                                t);
                ++idx;
            }
            if (t > 0 && t % cfg.metrics_period_s == 0) minute_tick(t);
            if (cfg.migration != MigrationMode::None && t > 0 &&
                t % cfg.planning_period_s == 0)
                plan_tick(t);
        }
        finalize_report(report);
        return std::move(report);
    }
};

}  // namespace engine_detail

inline RunReport run_simulation(const PreparedTrace& prep, const SeriesStore& history,
                                const TrainedPredictors& trained, const RunConfig& cfg) {
    engine_detail::Engine eng(prep, history, trained, cfg);
    return eng.run();
}

inline RunReport run_simulation(const TraceBundle& bundle, const RunConfig& cfg) {
    const PreparedTrace prep = prepare_trace(bundle.day);
    const TrainedPredictors trained = cfg.use_growth_table
                                          ? train_predictors(bundle.warmup)
                                          : TrainedPredictors{};
    return run_simulation(prep, bundle.history, trained, cfg);
}

// Runs each (policy, migration) pair against the same prepared inputs and
// returns one report per pair, in the given order.
inline std::vector<RunReport> compare_policies(
    const PreparedTrace& prep, const SeriesStore& history, const TrainedPredictors& trained,
    const RunConfig& base, const std::vector<std::pair<PolicyKind, MigrationMode>>& combos) {
    std::vector<RunReport> out;
    out.reserve(combos.size());
    for (const auto& [policy, migration] : combos) {
        RunConfig cfg = base;
        cfg.policy = policy;
        cfg.migration = migration;
        out.push_back(run_simulation(prep, history, trained, cfg));
    }
    return out;
}

inline void save_compare_csv(const std::vector<RunReport>& reports,
                             const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "policy,migration,hot_participant_minutes,hot_call_minutes,max_cpu,max_avg,"
         "migrations,h_vs_first\n";
    const double base = reports.empty() || reports.front().hot_participant_minutes == 0
                            ? 1.0
                            : double(reports.front().hot_participant_minutes);
    char buf[256];
    for (const RunReport& r : reports) {
        std::snprintf(buf, sizeof buf, "%s,%s,%lld,%lld,%.4f,%.4f,%lld,%.4f\n",
                      r.policy.c_str(), r.migration.c_str(),
                      (long long)r.hot_participant_minutes, (long long)r.hot_call_minutes,
                      r.max_cpu, r.max_avg, (long long)r.migrations,
                      double(r.hot_participant_minutes) / base);
        f << buf;
    }
}

}  // namespace callpack

#endif  // CALLPACK_ENGINE_HPP
