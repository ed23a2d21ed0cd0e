#ifndef CALLPACK_POLICIES_HPP
#define CALLPACK_POLICIES_HPP

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "callpack/cluster.hpp"
#include "callpack/rng.hpp"

namespace callpack {

enum class PolicyKind { RR, Random, LL, LLR, P2, Tetris };

inline const char* policy_name(PolicyKind p) {
    switch (p) {
        case PolicyKind::RR: return "rr";
        case PolicyKind::Random: return "random";
        case PolicyKind::LL: return "ll";
        case PolicyKind::LLR: return "llr";
        case PolicyKind::P2: return "p2";
        case PolicyKind::Tetris: return "tetris";
    }
    return "?";
}

inline PolicyKind parse_policy(const std::string& s) {
    if (s == "rr") return PolicyKind::RR;
    if (s == "random") return PolicyKind::Random;
    if (s == "ll") return PolicyKind::LL;
    if (s == "llr") return PolicyKind::LLR;
    if (s == "p2") return PolicyKind::P2;
    if (s == "tetris") return PolicyKind::Tetris;
    throw std::runtime_error("unknown policy: " + s);
}

// Which per-MP metric ranks MPs: measured CPU for the baselines, the sum of
// hosted calls' estimated peaks for Tetris. Never mixed within one decision.
enum class LoadView { CurrentCpu, ExpectedPeak };

inline double mp_load(const MpState& mp, LoadView view) {
    return view == LoadView::CurrentCpu ? mp.current_cpu_pct : mp.expected_peak_cpu_pct;
}

struct EmptyCluster : std::runtime_error {
    EmptyCluster() : std::runtime_error("empty cluster") {}
};

// Persistent per-run policy state (the round-robin rotation).
struct PolicyState {
    int rr_next = 0;
};

// Lowest (load, mp_id); ties go to the lowest id.
inline int ll_pick(const std::vector<MpState>& mps, LoadView view) {
    if (mps.empty()) throw EmptyCluster();
    int best = 0;
    double best_load = mp_load(mps[0], view);
    for (std::size_t i = 1; i < mps.size(); ++i) {
        const double l = mp_load(mps[i], view);
        if (l < best_load) {
            best_load = l;
            best = int(i);
        }
    }
    return best;
}

// Uniform among the K lowest-load MPs; the K-th boundary tie-breaks by id.
inline int llr_pick(const std::vector<MpState>& mps, int k, LoadView view, Rng& rng) {
    if (mps.empty()) throw EmptyCluster();
    const int kk = std::min<int>(k, int(mps.size()));
    // Single scan keeping the kk smallest (load, id) pairs, sorted ascending.
    std::vector<std::pair<double, int>> best;
    best.reserve(std::size_t(kk) + 1);
    for (std::size_t i = 0; i < mps.size(); ++i) {
        const std::pair<double, int> cand{mp_load(mps[i], view), int(i)};
        if (int(best.size()) < kk || cand < best.back()) {
            best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
            if (int(best.size()) > kk) best.pop_back();
        }
    }
    return best[rng.uniform_int(std::uint64_t(best.size()))].second;
}

inline int p2_pick(const std::vector<MpState>& mps, LoadView view, Rng& rng) {
    if (mps.empty()) throw EmptyCluster();
    if (mps.size() == 1) return 0;
    const int a = int(rng.uniform_int(mps.size()));
    int b = int(rng.uniform_int(mps.size() - 1));
    if (b >= a) ++b;  // without replacement
    // Lower load wins; tie goes to the first draw.
    return mp_load(mps[std::size_t(b)], view) < mp_load(mps[std::size_t(a)], view) ? b : a;
}

// Initial-assignment dispatch for the non-Tetris policies. Tetris routes
// through llr_pick over LoadView::ExpectedPeak after estimating the call's
// peak (done by the engine, which owns the predictors).
inline int pick_mp(PolicyKind policy, PolicyState& state, const std::vector<MpState>& mps,
                   int llr_k, Rng& rng) {
    if (mps.empty()) throw EmptyCluster();
    switch (policy) {
        case PolicyKind::RR: {
            const int m = state.rr_next % int(mps.size());
            state.rr_next = (m + 1) % int(mps.size());
            return m;
        }
        case PolicyKind::Random:
            return int(rng.uniform_int(mps.size()));
        case PolicyKind::LL:
            return ll_pick(mps, LoadView::CurrentCpu);
        case PolicyKind::LLR:
            return llr_pick(mps, llr_k, LoadView::CurrentCpu, rng);
        case PolicyKind::P2:
            return p2_pick(mps, LoadView::CurrentCpu, rng);
        case PolicyKind::Tetris:
            return llr_pick(mps, llr_k, LoadView::ExpectedPeak, rng);
    }
    throw std::runtime_error("unreachable policy kind");
}

}  // namespace callpack

#endif  // CALLPACK_POLICIES_HPP
