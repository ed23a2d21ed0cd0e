#ifndef CALLPACK_MIGRATION_HPP
#define CALLPACK_MIGRATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "callpack/cluster.hpp"
#include "callpack/repack.hpp"
#include "callpack/rng.hpp"

namespace callpack {

struct Move {
    std::string call_id;
    int from_mp = -1;
    int to_mp = -1;
    // Set when the owning solve had to drop the capacity constraints; such
    // moves are exempt from cap checks at execution time.
    bool relaxed = false;
};

struct MigrationPlan {
    std::vector<Move> moves;
    // Waves partition `moves`: wave w holds indices into `moves` that can be
    // executed concurrently once wave w-1 has landed. Moves listed in no
    // wave were abandoned and must not execute.
    std::vector<std::vector<int>> waves;
    std::vector<RepackStatus> statuses;  // one per solved sub-instance
    // Populated when PlannerConfig::verify is set: every solve is re-checked
    // by the independent constraint verifier and every wave schedule is
    // replayed against the model. Empty means all checks passed.
    std::vector<std::string> violations;
};

// ---------------------------------------------------------------------------
// Greedy baseline: drain hot MPs one call at a time onto the coldest MPs
// that stay under the threshold. Single wave.
// ---------------------------------------------------------------------------

struct GreedyMigrationConfig {
    double hot_threshold_pct = 75.0;
};

inline MigrationPlan plan_greedy(const Cluster& cluster, const GreedyMigrationConfig& cfg,
                                 Rng& rng) {
    MigrationPlan plan;
    const double t = cfg.hot_threshold_pct;

    std::vector<const MpState*> hot;
    for (const MpState& mp : cluster.mps())
        if (mp.current_cpu_pct >= t) hot.push_back(&mp);
    std::sort(hot.begin(), hot.end(), [](const MpState* a, const MpState* b) {
        if (a->current_cpu_pct != b->current_cpu_pct)
            return a->current_cpu_pct > b->current_cpu_pct;
        return a->mp_id < b->mp_id;
    });

    // Track simulated loads as the plan executes.
    std::vector<double> load(cluster.mps().size());
    for (std::size_t i = 0; i < cluster.mps().size(); ++i)
        load[i] = cluster.mps()[i].current_cpu_pct;

    for (const MpState* src : hot) {
        std::vector<std::string> calls(src->hosted_calls.begin(), src->hosted_calls.end());
        std::sort(calls.begin(), calls.end());
        // Shuffle so the baseline doesn't always evict the same calls.
        for (std::size_t i = calls.size(); i > 1; --i)
            std::swap(calls[i - 1], calls[std::size_t(rng.uniform_int(std::uint64_t(i)))]);

        std::size_t src_idx = std::size_t(src->mp_id);
        for (const std::string& cid : calls) {
            if (load[src_idx] < t) break;
            const CallState& cs = cluster.call(cid);
            const double src_cost = cs.measured_cpu_ref * src->sku.perf_ratio;
            // First fit by ascending mp id among MPs that stay cold.
            for (std::size_t m = 0; m < load.size(); ++m) {
                if (m == src_idx) continue;
                const double add = cs.measured_cpu_ref * cluster.mps()[m].sku.perf_ratio;
                if (load[m] + add < t) {
                    plan.moves.push_back({cid, src->mp_id, cluster.mps()[m].mp_id, false});
                    load[src_idx] -= src_cost;
                    load[m] += add;
                    break;
                }
            }
        }
    }
    if (!plan.moves.empty()) {
        plan.waves.emplace_back();
        for (int i = 0; i < int(plan.moves.size()); ++i) plan.waves[0].push_back(i);
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Optimizing planner
// ---------------------------------------------------------------------------

struct PlannerConfig {
    double hot_threshold_pct = 75.0;
    double cap_pct = 75.0;
    double mice_cutoff_pct = 2.0;     // calls at/below this expected CPU are left alone
    double near_hot_ratio = 0.975;    // sources: estimate >= ratio * cap
    int min_age_s = 180;              // calls younger than this never move
    int migration_budget = 1000;      // L, per solved sub-instance
    double gap = 0.10;
    double time_limit_s = 120.0;
    std::int64_t nodes_per_sec = 150000;
    double cold_reserve_factor = 5.0; // headroom multiple of the overflow mass
    bool parallel = true;
    bool verify = false;              // re-check every solve and wave schedule
};

namespace migration_detail {

struct Candidate {
    std::string call_id;
    int mp_idx = -1;        // index into cluster.mps()
    double peak_cpu_ref = 0.0;
};

// The calls allowed to move and the MPs allowed to participate. Sources are
// MPs whose expected peak is at/near the cap; their calls are candidates
// unless tiny, too young, or moved in the previous round. Destinations are
// cold MPs taken in descending utilization (sparing idle machines for fresh
// arrivals) until the pooled free capacity covers a multiple of the load
// that must leave the sources, and the largest candidate has a target with
// room for it.
struct Selection {
    std::vector<Candidate> candidates;
    std::vector<int> mp_idxs;  // participating MPs (sources + chosen cold)
};

inline Selection select_candidates(const Cluster& cluster, const PlannerConfig& cfg,
                                   int round, std::int64_t now,
                                   const std::vector<int>& vc_mps) {
    Selection sel;
    const double cap = cfg.cap_pct;
    const double near = cfg.near_hot_ratio * cap;

    std::vector<int> sources, cold;
    double overflow = 0.0;  // expected load that must leave the sources
    for (int mi : vc_mps) {
        const MpState& mp = cluster.mps()[std::size_t(mi)];
        if (mp.expected_peak_cpu_pct >= near) {
            sources.push_back(mi);
            overflow += mp.expected_peak_cpu_pct - near;
        } else {
            cold.push_back(mi);
        }
    }
    if (sources.empty()) return sel;

    double max_candidate = 0.0;
    for (int mi : sources) {
        const MpState& mp = cluster.mps()[std::size_t(mi)];
        std::vector<std::string> ids(mp.hosted_calls.begin(), mp.hosted_calls.end());
        std::sort(ids.begin(), ids.end());
        for (const std::string& cid : ids) {
            const CallState& cs = cluster.call(cid);
            const double est = cs.estimated_peak_cpu_ref;
            if (est <= cfg.mice_cutoff_pct) continue;         // mice filter
            if (cs.age_s(now) < cfg.min_age_s) continue;      // too young to trust
            if (cs.last_migration_round == round - 1) continue;  // just moved
            sel.candidates.push_back({cid, mi, est});
            max_candidate = std::max(max_candidate, est);
        }
    }
    if (sel.candidates.empty()) return sel;

    std::sort(cold.begin(), cold.end(), [&](int a, int b) {
        const MpState& ma = cluster.mps()[std::size_t(a)];
        const MpState& mb = cluster.mps()[std::size_t(b)];
        if (ma.expected_peak_cpu_pct != mb.expected_peak_cpu_pct)
            return ma.expected_peak_cpu_pct > mb.expected_peak_cpu_pct;
        return ma.mp_id < mb.mp_id;
    });
    const double need = cfg.cold_reserve_factor * overflow;
    double free_sum = 0.0;
    double best_headroom = 0.0;
    sel.mp_idxs = sources;
    for (int mi : cold) {
        if (free_sum >= need && best_headroom >= max_candidate) break;
        sel.mp_idxs.push_back(mi);
        const double room =
            std::max(0.0, cap - cluster.mps()[std::size_t(mi)].expected_peak_cpu_pct);
        free_sum += room;
        best_headroom = std::max(best_headroom, room);
    }
    std::sort(sel.mp_idxs.begin(), sel.mp_idxs.end());
    return sel;
}

inline RepackModel build_model(const Cluster& cluster, const PlannerConfig& cfg,
                               const Selection& sel) {
    RepackModel model;
    model.budget = cfg.migration_budget;
    std::map<int, int> mp_pos;  // cluster mp index -> model index
    for (int mi : sel.mp_idxs) {
        mp_pos[mi] = int(model.mp_ids.size());
        const MpState& mp = cluster.mps()[std::size_t(mi)];
        model.mp_ids.push_back(mp.mp_id);
        model.perf_ratio.push_back(mp.sku.perf_ratio);
        model.cap_pct.push_back(cfg.cap_pct);
        model.base_pct.push_back(mp.expected_peak_cpu_pct);  // candidates removed below
    }
    for (const Candidate& c : sel.candidates) {
        model.call_ids.push_back(c.call_id);
        model.p_call_pct.push_back(c.peak_cpu_ref);
        const int pos = mp_pos.at(c.mp_idx);
        model.original_mp.push_back(pos);
        model.base_pct[std::size_t(pos)] -=
            c.peak_cpu_ref * cluster.mps()[std::size_t(c.mp_idx)].sku.perf_ratio;
    }
    for (double& b : model.base_pct) b = std::max(0.0, b);
    // An MP whose immovable base already exceeds the cap can't be fixed by
    // any assignment; raise its cap to the base so the instance stays honest
    // (nothing may be added) instead of vacuously infeasible.
    for (std::size_t m = 0; m < model.cap_pct.size(); ++m)
        model.cap_pct[m] = std::max(model.cap_pct[m], model.base_pct[m]);
    return model;
}

struct SubPlan {
    std::vector<Move> moves;
    std::vector<std::vector<int>> waves;  // indices into `moves`
};

// Orders the moves of one solved sub-instance into waves. A move may run in
// wave w only if its target, with every arrival already scheduled in wave w
// and every departure from waves < w, stays under the cap; a move blocked by
// room that a wave-w departure frees runs in wave w+1. When no pending move
// can be placed, the smallest one is abandoned and scheduling restarts. For
// relaxed solutions the caps are void, so everything goes into one wave.
inline SubPlan schedule_waves(const RepackModel& model, const RepackSolution& sol) {
    SubPlan sub;
    std::vector<int> moving;
    for (int c = 0; c < model.n_calls(); ++c)
        if (sol.assigned[std::size_t(c)] != model.original_mp[std::size_t(c)])
            moving.push_back(c);
    if (moving.empty()) return sub;

    const bool relaxed = sol.status == RepackStatus::InfeasibleRelaxed;
    for (int c : moving)
        sub.moves.push_back({model.call_ids[std::size_t(c)],
                             model.mp_ids[std::size_t(model.original_mp[std::size_t(c)])],
                             model.mp_ids[std::size_t(sol.assigned[std::size_t(c)])],
                             relaxed});
    if (relaxed) {
        sub.waves.emplace_back();
        for (int i = 0; i < int(moving.size()); ++i) sub.waves[0].push_back(i);
        return sub;
    }

    std::vector<int> pending = moving;  // indices into model calls
    for (;;) {
        std::vector<std::int64_t> load(static_cast<std::size_t>(model.n_mps()));
        for (int m = 0; m < model.n_mps(); ++m) load[std::size_t(m)] = model.base_ticks(m);
        // Everyone starts at home: abandoned moves never execute, so their
        // calls hold their original MP's capacity for the whole schedule.
        for (int c = 0; c < model.n_calls(); ++c) {
            const int m = model.original_mp[std::size_t(c)];
            load[std::size_t(m)] += model.cost_ticks(m, c);
        }
        std::vector<std::vector<int>> waves;
        std::vector<int> todo = pending;
        bool ok = true;
        while (!todo.empty()) {
            std::vector<int> wave, rest;
            std::vector<std::int64_t> delta(std::size_t(model.n_mps()), 0);
            for (int c : todo) {
                const int to = sol.assigned[std::size_t(c)];
                const std::int64_t arr = model.cost_ticks(to, c);
                // Departures within a wave are not credited until the wave
                // lands: arrivals must fit alongside everything still here.
                if (load[std::size_t(to)] + delta[std::size_t(to)] + arr <=
                    model.cap_ticks(to)) {
                    wave.push_back(c);
                    delta[std::size_t(to)] += arr;
                } else {
                    rest.push_back(c);
                }
            }
            if (wave.empty()) {
                ok = false;
                break;
            }
            for (int c : wave) {
                const int from = model.original_mp[std::size_t(c)];
                const int to = sol.assigned[std::size_t(c)];
                load[std::size_t(from)] -= model.cost_ticks(from, c);
                load[std::size_t(to)] += model.cost_ticks(to, c);
            }
            waves.push_back(std::move(wave));
            todo = std::move(rest);
        }
        if (ok) {
            for (std::vector<int>& w : waves) {
                std::vector<int>& out = sub.waves.emplace_back();
                for (int c : w) {
                    const auto it = std::find(moving.begin(), moving.end(), c);
                    out.push_back(int(it - moving.begin()));
                }
            }
            return sub;  // abandoned moves appear in no wave
        }
        // Deadlock: give up on the smallest stuck move and retry.
        int drop = -1;
        std::int64_t drop_sz = std::numeric_limits<std::int64_t>::max();
        for (int c : pending) {
            const std::int64_t sz =
                RepackModel::to_ticks(model.p_call_pct[std::size_t(c)]);
            if (sz < drop_sz) {
                drop_sz = sz;
                drop = c;
            }
        }
        pending.erase(std::find(pending.begin(), pending.end(), drop));
        if (pending.empty()) {
            sub.moves.clear();
            return sub;
        }
    }
}

// Replays a wave schedule against the model from scratch and reports any MP
// that exceeds its cap while a wave is in flight (arrivals land before the
// same wave's departures free their space). Relaxed solutions carry no cap
// guarantee and are skipped.
inline std::vector<std::string> verify_wave_replay(const RepackModel& model,
                                                   const RepackSolution& sol,
                                                   const SubPlan& sub) {
    std::vector<std::string> bad;
    if (sol.status == RepackStatus::InfeasibleRelaxed) return bad;

    std::map<std::string, int> call_pos;
    for (int c = 0; c < model.n_calls(); ++c) call_pos[model.call_ids[std::size_t(c)]] = c;
    std::map<int, int> mp_pos;
    for (int m = 0; m < model.n_mps(); ++m) mp_pos[model.mp_ids[std::size_t(m)]] = m;

    std::vector<std::int64_t> load(static_cast<std::size_t>(model.n_mps()));
    for (int m = 0; m < model.n_mps(); ++m) load[std::size_t(m)] = model.base_ticks(m);
    for (int c = 0; c < model.n_calls(); ++c) {
        const int m = model.original_mp[std::size_t(c)];
        load[std::size_t(m)] += model.cost_ticks(m, c);
    }
    for (std::size_t w = 0; w < sub.waves.size(); ++w) {
        // Arrivals first: the in-flight state every target must tolerate.
        for (int mi : sub.waves[w]) {
            const Move& mv = sub.moves[std::size_t(mi)];
            const int c = call_pos.at(mv.call_id);
            const int to = mp_pos.at(mv.to_mp);
            load[std::size_t(to)] += model.cost_ticks(to, c);
            if (load[std::size_t(to)] > model.cap_ticks(to))
                bad.push_back("wave " + std::to_string(w) + ": mp " +
                              std::to_string(mv.to_mp) + " over cap");
        }
        for (int mi : sub.waves[w]) {
            const Move& mv = sub.moves[std::size_t(mi)];
            const int c = call_pos.at(mv.call_id);
            const int from = mp_pos.at(mv.from_mp);
            load[std::size_t(from)] -= model.cost_ticks(from, c);
        }
    }
    return bad;
}

struct VcResult {
    RepackModel model;
    RepackSolution sol;
    bool solved = false;
};

inline VcResult plan_one_vc(const Cluster& cluster, const PlannerConfig& cfg, int round,
                            std::int64_t now, const std::vector<int>& vc_mps) {
    VcResult r;
    Selection sel = select_candidates(cluster, cfg, round, now, vc_mps);
    if (sel.candidates.empty()) return r;
    r.model = build_model(cluster, cfg, sel);
    r.sol = solve_repack(r.model, cfg.time_limit_s, cfg.gap, cfg.nodes_per_sec);
    r.solved = true;
    return r;
}

}  // namespace migration_detail

// Runs the optimizing planner over every virtual cluster (independent
// sub-instances, solved in parallel when enabled). Virtual clusters execute
// concurrently, so the global wave k is the union of every sub-plan's wave k.
inline MigrationPlan plan_migrations(const Cluster& cluster, const PlannerConfig& cfg,
                                     int round, std::int64_t now) {
    const int n_vc = cluster.config().n_virtual_clusters;
    std::vector<std::vector<int>> vc_mps(std::size_t(std::max(1, n_vc)));
    for (std::size_t i = 0; i < cluster.mps().size(); ++i)
        vc_mps[std::size_t(cluster.mps()[i].virtual_cluster_idx)].push_back(int(i));

    std::vector<migration_detail::VcResult> results(vc_mps.size());
    if (cfg.parallel && vc_mps.size() > 1) {
        std::vector<std::future<migration_detail::VcResult>> futs;
        futs.reserve(vc_mps.size());
        for (const std::vector<int>& mps : vc_mps)
            futs.push_back(std::async(std::launch::async, [&cluster, &cfg, round, now, &mps] {
                return migration_detail::plan_one_vc(cluster, cfg, round, now, mps);
            }));
        for (std::size_t i = 0; i < futs.size(); ++i) results[i] = futs[i].get();
    } else {
        for (std::size_t i = 0; i < vc_mps.size(); ++i)
            results[i] = migration_detail::plan_one_vc(cluster, cfg, round, now, vc_mps[i]);
    }

    MigrationPlan plan;
    for (const migration_detail::VcResult& r : results) {
        if (!r.solved) continue;
        plan.statuses.push_back(r.sol.status);
        migration_detail::SubPlan sub = migration_detail::schedule_waves(r.model, r.sol);
        if (cfg.verify) {
            for (std::string& v : verify_repack(r.model, r.sol))
                plan.violations.push_back("solve: " + std::move(v));
            for (std::string& v : migration_detail::verify_wave_replay(r.model, r.sol, sub))
                plan.violations.push_back("replay: " + std::move(v));
        }
        const int base = int(plan.moves.size());
        plan.moves.insert(plan.moves.end(), sub.moves.begin(), sub.moves.end());
        for (std::size_t w = 0; w < sub.waves.size(); ++w) {
            if (plan.waves.size() <= w) plan.waves.emplace_back();
            for (int mi : sub.waves[w]) plan.waves[w].push_back(base + mi);
        }
    }
    return plan;
}

}  // namespace callpack

#endif  // CALLPACK_MIGRATION_HPP
