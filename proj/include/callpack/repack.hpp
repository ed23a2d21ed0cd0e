#ifndef CALLPACK_REPACK_HPP
#define CALLPACK_REPACK_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace callpack {

// The migration optimization instance. CPU percentages are also carried as
// integer ticks (1 tick = 0.01%) so that the solver, the enumeration oracle
// and the constraint verifier all agree bit-for-bit.
struct RepackModel {
    std::vector<int> mp_ids;             // M (cluster mp ids, for plan emission)
    std::vector<std::string> call_ids;   // C
    std::vector<double> p_call_pct;      // P_c, reference SKU
    std::vector<double> base_pct;        // B_m, stationary-call CPU (SKU-adjusted)
    std::vector<double> perf_ratio;      // R_m
    std::vector<double> cap_pct;         // Cap_m
    std::vector<int> original_mp;        // O: index into mp_ids per call
    int budget = 1000;                   // L

    static std::int64_t to_ticks(double pct) { return std::llround(pct * 100.0); }

    std::int64_t cost_ticks(int m, int c) const {
        return to_ticks(p_call_pct[std::size_t(c)] * perf_ratio[std::size_t(m)]);
    }
    std::int64_t base_ticks(int m) const { return to_ticks(base_pct[std::size_t(m)]); }
    std::int64_t cap_ticks(int m) const { return to_ticks(cap_pct[std::size_t(m)]); }
    int n_mps() const { return int(mp_ids.size()); }
    int n_calls() const { return int(call_ids.size()); }
};

enum class RepackStatus { Optimal, GapReached, TimeLimit, InfeasibleRelaxed };

inline const char* repack_status_name(RepackStatus s) {
    switch (s) {
        case RepackStatus::Optimal: return "optimal";
        case RepackStatus::GapReached: return "gap_reached";
        case RepackStatus::TimeLimit: return "time_limit";
        case RepackStatus::InfeasibleRelaxed: return "infeasible_relaxed";
    }
    return "?";
}

struct RepackSolution {
    std::vector<int> assigned;  // per call: index into model.mp_ids
    std::int64_t y_ticks = 0;   // realized max load across M
    double y_pct = 0.0;
    std::int64_t bound_ticks = 0;  // proven lower bound (capped mode)
    RepackStatus status = RepackStatus::Optimal;
    std::int64_t nodes = 0;
    int moves = 0;
};

namespace repack_detail {

inline std::int64_t realized_max(const RepackModel& model, const std::vector<int>& assigned) {
    std::vector<std::int64_t> load(static_cast<std::size_t>(model.n_mps()));
    for (int m = 0; m < model.n_mps(); ++m) load[std::size_t(m)] = model.base_ticks(m);
    for (int c = 0; c < model.n_calls(); ++c)
        load[std::size_t(assigned[std::size_t(c)])] += model.cost_ticks(assigned[std::size_t(c)], c);
    std::int64_t y = 0;
    for (auto l : load) y = std::max(y, l);
    return y;
}

inline int count_moves(const RepackModel& model, const std::vector<int>& assigned) {
    int moves = 0;
    for (int c = 0; c < model.n_calls(); ++c)
        if (assigned[std::size_t(c)] != model.original_mp[std::size_t(c)]) ++moves;
    return moves;
}

// Fractional min-max lower bound: remaining demand (reference ticks) spread
// divisibly over the MPs, each filling at rate 1/R_m above its current load.
// Caps bound the fill in capped mode. Returns a lower bound on y in ticks.
inline double fractional_bound(const std::vector<std::int64_t>& load,
                               const std::vector<double>& ratio,
                               const std::vector<std::int64_t>& cap, bool use_caps,
                               double remaining_ref_ticks) {
    const std::size_t m = load.size();
    double max_load = 0.0;
    for (auto l : load) max_load = std::max(max_load, double(l));
    if (remaining_ref_ticks <= 0.0) return max_load;

    // Sort candidate levels: water rises from the lowest loads upward.
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return load[a] < load[b]; });

    // At level y, MP i absorbs (min(y, cap_i) - load_i)/R_i reference ticks.
    double absorbed = 0.0;   // demand absorbed below the current level
    double rate = 0.0;       // sum of 1/R over MPs currently filling
    double level = double(load[order[0]]);
    // Event levels: each MP's load (starts filling) and cap (stops filling).
    struct Ev {
        double level;
        double rate_delta;
    };
    std::vector<Ev> evs;
    evs.reserve(2 * m);
    for (std::size_t i = 0; i < m; ++i) {
        evs.push_back({double(load[i]), 1.0 / ratio[i]});
        if (use_caps) {
            const double c = double(cap[i]);
            if (c > double(load[i]))
                evs.push_back({c, -1.0 / ratio[i]});
            else
                evs.back().rate_delta = 0.0;  // already at/over cap: never fills
        }
    }
    std::sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) { return a.level < b.level; });
    level = evs.front().level;
    for (const Ev& ev : evs) {
        if (ev.level > level) {
            const double span = ev.level - level;
            const double can = rate * span;
            if (absorbed + can >= remaining_ref_ticks) {
                const double y = level + (remaining_ref_ticks - absorbed) / rate;
                return std::max(y, max_load);
            }
            absorbed += can;
            level = ev.level;
        }
        rate += ev.rate_delta;
    }
    if (rate > 0.0) {
        const double y = level + (remaining_ref_ticks - absorbed) / rate;
        return std::max(y, max_load);
    }
    // No capacity left below any cap: infeasible for the fractional
    // relaxation; signal with +inf so the caller prunes.
    return std::numeric_limits<double>::infinity();
}

struct SearchCtx {
    const RepackModel* model = nullptr;
    bool use_caps = true;
    std::int64_t node_budget = 0;
    double gap = 0.10;

    std::vector<int> call_order;          // calls sorted by descending size
    std::vector<std::int64_t> ref_ticks;  // per call, reference-SKU ticks
    std::vector<double> suffix_ref;       // remaining demand from depth d on

    std::vector<int> best_assigned;
    std::int64_t best_y = std::numeric_limits<std::int64_t>::max();
    bool found = false;
    std::int64_t nodes = 0;
    bool budget_exhausted = false;
    std::int64_t root_bound = 0;

    std::vector<std::int64_t> load;
    std::vector<int> assigned;

    bool gap_reached() const {
        if (!found || best_y == 0) return root_bound >= best_y;
        return double(best_y - root_bound) / double(best_y) <= gap + 1e-12;
    }
};

inline void dfs(SearchCtx& ctx, int depth, int moves_used) {
    if (ctx.budget_exhausted || (ctx.found && ctx.gap_reached())) return;
    if (++ctx.nodes > ctx.node_budget) {
        ctx.budget_exhausted = true;
        return;
    }
    const RepackModel& model = *ctx.model;
    const int n_calls = model.n_calls();
    const int n_mps = model.n_mps();

    if (depth == n_calls) {
        std::int64_t y = 0;
        for (auto l : ctx.load) y = std::max(y, l);
        if (y < ctx.best_y) {
            ctx.best_y = y;
            ctx.best_assigned = ctx.assigned;
            ctx.found = true;
        }
        return;
    }

    // Bound: fractional relaxation of the remaining calls. A new incumbent
    // must beat best_y by at least one tick; keep a small float slack so a
    // borderline bound never prunes a genuinely better branch.
    const double lb = fractional_bound(ctx.load, model.perf_ratio,
                                       [&] {
                                           std::vector<std::int64_t> caps(static_cast<std::size_t>(n_mps));
                                           for (int m = 0; m < n_mps; ++m)
                                               caps[std::size_t(m)] = model.cap_ticks(m);
                                           return caps;
                                       }(),
                                       ctx.use_caps, ctx.suffix_ref[std::size_t(depth)]);
    if (!(lb <= double(ctx.best_y - 1) + 1e-3)) return;

    const int c = ctx.call_order[std::size_t(depth)];
    const int orig = model.original_mp[std::size_t(c)];

    // Try MPs in ascending order of resulting load; the original MP is free
    // (costs no move), so prefer it on ties.
    std::vector<std::pair<std::int64_t, int>> cand;
    cand.reserve(std::size_t(n_mps));
    for (int m = 0; m < n_mps; ++m) {
        const std::int64_t nl = ctx.load[std::size_t(m)] + model.cost_ticks(m, c);
        if (ctx.use_caps && nl > model.cap_ticks(m)) continue;
        if (m != orig && moves_used >= model.budget) continue;
        cand.emplace_back(nl - (m == orig ? 1 : 0), m);
    }
    std::sort(cand.begin(), cand.end());
    for (const auto& [key, m] : cand) {
        const std::int64_t add = model.cost_ticks(m, c);
        ctx.load[std::size_t(m)] += add;
        ctx.assigned[std::size_t(c)] = m;
        dfs(ctx, depth + 1, moves_used + (m == orig ? 0 : 1));
        ctx.load[std::size_t(m)] -= add;
        if (ctx.budget_exhausted || (ctx.found && ctx.gap_reached())) return;
    }
}

// Warm start: first-fit decreasing on P_c * R_m under caps and budget,
// starting from the original placement and repairing over-cap MPs.
inline bool greedy_incumbent(const RepackModel& model, bool use_caps,
                             std::vector<int>& out) {
    const int n_mps = model.n_mps();
    const int n_calls = model.n_calls();
    out = model.original_mp;
    std::vector<std::int64_t> load(static_cast<std::size_t>(n_mps));
    for (int m = 0; m < n_mps; ++m) load[std::size_t(m)] = model.base_ticks(m);
    for (int c = 0; c < n_calls; ++c)
        load[std::size_t(out[std::size_t(c)])] += model.cost_ticks(out[std::size_t(c)], c);
    if (!use_caps) return true;

    int moves = 0;
    // Repair over-cap MPs, biggest offender first, moving the largest call
    // that fits elsewhere.
    for (;;) {
        int worst = -1;
        std::int64_t excess = 0;
        for (int m = 0; m < n_mps; ++m) {
            const std::int64_t e = load[std::size_t(m)] - model.cap_ticks(m);
            if (e > excess) {
                excess = e;
                worst = m;
            }
        }
        if (worst < 0) return true;  // all under cap
        // Calls currently on `worst`, descending size.
        std::vector<std::pair<std::int64_t, int>> here;
        for (int c = 0; c < n_calls; ++c)
            if (out[std::size_t(c)] == worst)
                here.emplace_back(model.cost_ticks(worst, c), c);
        std::sort(here.rbegin(), here.rend());
        bool moved = false;
        for (const auto& [sz, c] : here) {
            if (moves >= model.budget) break;
            // Best fit: target with the most headroom after placement.
            int best_m = -1;
            std::int64_t best_room = -1;
            for (int m = 0; m < n_mps; ++m) {
                if (m == worst) continue;
                const std::int64_t room =
                    model.cap_ticks(m) - load[std::size_t(m)] - model.cost_ticks(m, c);
                if (room >= 0 && room > best_room) {
                    best_room = room;
                    best_m = m;
                }
            }
            if (best_m >= 0) {
                load[std::size_t(worst)] -= model.cost_ticks(worst, c);
                load[std::size_t(best_m)] += model.cost_ticks(best_m, c);
                out[std::size_t(c)] = best_m;
                ++moves;
                moved = true;
                if (load[std::size_t(worst)] <= model.cap_ticks(worst)) break;
            }
        }
        if (!moved) return false;  // stuck: caps not repairable greedily
    }
}

inline RepackSolution solve_mode(const RepackModel& model, bool use_caps,
                                 std::int64_t node_budget, double gap) {
    RepackSolution sol;
    const int n_calls = model.n_calls();
    const int n_mps = model.n_mps();
    if (n_calls == 0) {
        sol.y_ticks = repack_detail::realized_max(model, {});
        sol.y_pct = double(sol.y_ticks) / 100.0;
        sol.bound_ticks = sol.y_ticks;
        sol.status = RepackStatus::Optimal;
        return sol;
    }

    SearchCtx ctx;
    ctx.model = &model;
    ctx.use_caps = use_caps;
    ctx.node_budget = node_budget;
    ctx.gap = gap;
    ctx.load.assign(std::size_t(n_mps), 0);
    for (int m = 0; m < n_mps; ++m) ctx.load[std::size_t(m)] = model.base_ticks(m);
    ctx.assigned.assign(std::size_t(n_calls), -1);

    ctx.ref_ticks.resize(std::size_t(n_calls));
    for (int c = 0; c < n_calls; ++c)
        ctx.ref_ticks[std::size_t(c)] = RepackModel::to_ticks(model.p_call_pct[std::size_t(c)]);
    ctx.call_order.resize(std::size_t(n_calls));
    for (int c = 0; c < n_calls; ++c) ctx.call_order[std::size_t(c)] = c;
    std::sort(ctx.call_order.begin(), ctx.call_order.end(), [&](int a, int b) {
        if (ctx.ref_ticks[std::size_t(a)] != ctx.ref_ticks[std::size_t(b)])
            return ctx.ref_ticks[std::size_t(a)] > ctx.ref_ticks[std::size_t(b)];
        return a < b;
    });
    ctx.suffix_ref.assign(std::size_t(n_calls) + 1, 0.0);
    for (int d = n_calls - 1; d >= 0; --d)
        ctx.suffix_ref[std::size_t(d)] = ctx.suffix_ref[std::size_t(d) + 1] +
                                         double(ctx.ref_ticks[std::size_t(ctx.call_order[std::size_t(d)])]);

    std::vector<std::int64_t> caps(static_cast<std::size_t>(n_mps));
    for (int m = 0; m < n_mps; ++m) caps[std::size_t(m)] = model.cap_ticks(m);
    const double root = fractional_bound(ctx.load, model.perf_ratio, caps, use_caps,
                                         ctx.suffix_ref[0]);
    ctx.root_bound = std::isfinite(root) ? std::int64_t(std::ceil(root - 1e-6))
                                         : std::numeric_limits<std::int64_t>::max();

    std::vector<int> warm;
    if (greedy_incumbent(model, use_caps, warm)) {
        if (count_moves(model, warm) <= model.budget) {
            ctx.best_assigned = warm;
            ctx.best_y = realized_max(model, warm);
            ctx.found = true;
        }
    }

    if (ctx.root_bound != std::numeric_limits<std::int64_t>::max() &&
        !(ctx.found && ctx.gap_reached()))
        dfs(ctx, 0, 0);

    sol.nodes = ctx.nodes;
    if (!ctx.found) {
        sol.status = RepackStatus::InfeasibleRelaxed;  // caller re-solves uncapped
        return sol;
    }
    sol.assigned = ctx.best_assigned;
    sol.y_ticks = ctx.best_y;
    sol.y_pct = double(ctx.best_y) / 100.0;
    sol.bound_ticks = std::min(ctx.root_bound, ctx.best_y);
    sol.moves = count_moves(model, sol.assigned);
    if (ctx.budget_exhausted)
        sol.status = RepackStatus::TimeLimit;
    else if (ctx.gap_reached() && ctx.best_y > ctx.root_bound)
        sol.status = RepackStatus::GapReached;
    else
        sol.status = RepackStatus::Optimal;
    return sol;
}

}  // namespace repack_detail

// Solves the repacking instance: minimize the max CPU across M subject to
// one-MP-per-call, per-MP caps, and the migration budget. Terminates at
// proven optimality, at the relative gap, or at a deterministic node budget
// standing in for the wall-clock limit (wall-clock cutoffs would make
// same-seed reruns diverge). If the caps admit no assignment, re-solves
// without them and tags the result InfeasibleRelaxed.
inline RepackSolution solve_repack(const RepackModel& model, double time_limit_s = 120.0,
                                   double gap = 0.10, std::int64_t nodes_per_sec = 150000) {
    const std::int64_t budget =
        std::max<std::int64_t>(std::int64_t(time_limit_s * double(nodes_per_sec)), 1000);
    RepackSolution sol = repack_detail::solve_mode(model, true, budget, gap);
    if (sol.status != RepackStatus::InfeasibleRelaxed) return sol;
    RepackSolution relaxed = repack_detail::solve_mode(model, false, budget, gap);
    relaxed.status = RepackStatus::InfeasibleRelaxed;
    return relaxed;
}

// Independent checker for the four constraints; returns human-readable
// violations. Deliberately recomputes everything from the model inputs.
inline std::vector<std::string> verify_repack(const RepackModel& model,
                                              const RepackSolution& sol) {
    std::vector<std::string> bad;
    const int n_calls = model.n_calls();
    const int n_mps = model.n_mps();
    if (int(sol.assigned.size()) != n_calls) {
        bad.push_back("assignment size mismatch");
        return bad;
    }
    // (a) exactly one MP per call: encoded by the assignment being a single
    // in-range index per call.
    for (int c = 0; c < n_calls; ++c)
        if (sol.assigned[std::size_t(c)] < 0 || sol.assigned[std::size_t(c)] >= n_mps)
            bad.push_back("(a) call " + model.call_ids[std::size_t(c)] + " has no MP");
    if (!bad.empty()) return bad;

    std::vector<std::int64_t> load(static_cast<std::size_t>(n_mps));
    for (int m = 0; m < n_mps; ++m) load[std::size_t(m)] = model.base_ticks(m);
    for (int c = 0; c < n_calls; ++c)
        load[std::size_t(sol.assigned[std::size_t(c)])] +=
            model.cost_ticks(sol.assigned[std::size_t(c)], c);

    // (b) caps, unless the relaxed fallback was taken.
    if (sol.status != RepackStatus::InfeasibleRelaxed)
        for (int m = 0; m < n_mps; ++m)
            if (load[std::size_t(m)] > model.cap_ticks(m))
                bad.push_back("(b) mp " + std::to_string(model.mp_ids[std::size_t(m)]) +
                              " over cap");
    // (c) moves counted once, on the old MP.
    std::int64_t moved = 0;
    for (int c = 0; c < n_calls; ++c)
        if (sol.assigned[std::size_t(c)] != model.original_mp[std::size_t(c)]) ++moved;
    if (moved > model.budget) bad.push_back("(c) migration budget exceeded");
    // (d) y equals the realized max.
    std::int64_t y = 0;
    for (auto l : load) y = std::max(y, l);
    if (y != sol.y_ticks) bad.push_back("(d) y does not match realized max");
    return bad;
}

}  // namespace callpack

#endif  // CALLPACK_REPACK_HPP
