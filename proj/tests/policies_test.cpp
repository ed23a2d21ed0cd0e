#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <callpack/policies.hpp>

#include <algorithm>
#include <vector>

using namespace callpack;

namespace {

std::vector<MpState> mps_with_loads(const std::vector<double>& cur,
                                    const std::vector<double>& est = {}) {
    std::vector<MpState> mps(cur.size());
    for (std::size_t i = 0; i < cur.size(); ++i) {
        mps[i].mp_id = int(i);
        mps[i].current_cpu_pct = cur[i];
        mps[i].expected_peak_cpu_pct = i < est.size() ? est[i] : cur[i];
    }
    return mps;
}

}  // namespace

TEST_CASE("policy names round trip") {
    for (PolicyKind p : {PolicyKind::RR, PolicyKind::Random, PolicyKind::LL,
                         PolicyKind::LLR, PolicyKind::P2, PolicyKind::Tetris})
        CHECK(parse_policy(policy_name(p)) == p);
    CHECK_THROWS(parse_policy("bogus"));
}

TEST_CASE("round robin walks a persistent rotation") {
    const auto mps = mps_with_loads({50, 0, 0});  // loads are irrelevant to RR
    PolicyState st;
    Rng rng(1);
    std::vector<int> picks;
    for (int i = 0; i < 7; ++i)
        picks.push_back(pick_mp(PolicyKind::RR, st, mps, 5, rng));
    CHECK(picks == std::vector<int>{0, 1, 2, 0, 1, 2, 0});
}

TEST_CASE("least loaded takes the argmin with id tie-break") {
    CHECK(ll_pick(mps_with_loads({10, 5, 7}), LoadView::CurrentCpu) == 1);
    CHECK(ll_pick(mps_with_loads({4, 4, 4}), LoadView::CurrentCpu) == 0);
    CHECK(ll_pick(mps_with_loads({9, 3, 3}), LoadView::CurrentCpu) == 1);
    CHECK_THROWS_AS(ll_pick({}, LoadView::CurrentCpu), EmptyCluster);
}

TEST_CASE("load view selects the ranking metric") {
    const auto mps = mps_with_loads({10, 20, 30}, {30, 20, 10});
    CHECK(ll_pick(mps, LoadView::CurrentCpu) == 0);
    CHECK(ll_pick(mps, LoadView::ExpectedPeak) == 2);
}

TEST_CASE("llr picks uniformly within the k least loaded") {
    const auto mps = mps_with_loads({50, 10, 40, 20, 30, 60});
    Rng rng(2);
    std::vector<int> counts(mps.size(), 0);
    const int draws = 30000;
    for (int i = 0; i < draws; ++i) {
        const int m = llr_pick(mps, 3, LoadView::CurrentCpu, rng);
        ++counts[std::size_t(m)];
    }
    // Only the three smallest loads (mps 1, 3, 4) are ever chosen.
    CHECK(counts[0] == 0);
    CHECK(counts[2] == 0);
    CHECK(counts[5] == 0);
    // Chi-square, 2 dof, 99.9% quantile ~13.8.
    const double expect = double(draws) / 3.0;
    double chi2 = 0.0;
    for (int m : {1, 3, 4})
        chi2 += (counts[std::size_t(m)] - expect) * (counts[std::size_t(m)] - expect) / expect;
    CHECK(chi2 < 13.8);
}

TEST_CASE("llr boundary ties go to the lowest id") {
    // k=2: the second slot is contested between ids 2 and 3 at equal load;
    // id 2 must win it, so id 3 is never picked.
    const auto mps = mps_with_loads({5, 30, 10, 10});
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const int m = llr_pick(mps, 2, LoadView::CurrentCpu, rng);
        CHECK((m == 0 || m == 2));
    }
}

TEST_CASE("llr with k=1 degenerates to least loaded") {
    const auto mps = mps_with_loads({9, 2, 5, 2});
    Rng rng(4);
    for (int i = 0; i < 100; ++i)
        CHECK(llr_pick(mps, 1, LoadView::CurrentCpu, rng) == 1);
}

TEST_CASE("llr with k above the cluster size uses every mp") {
    const auto mps = mps_with_loads({1, 2});
    Rng rng(5);
    std::vector<int> counts(2, 0);
    for (int i = 0; i < 1000; ++i)
        ++counts[std::size_t(llr_pick(mps, 10, LoadView::CurrentCpu, rng))];
    CHECK(counts[0] > 0);
    CHECK(counts[1] > 0);
}

TEST_CASE("power of two picks the lighter of two distinct draws") {
    const auto mps = mps_with_loads({100, 1, 100, 100});
    Rng rng(6);
    int light = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
        if (p2_pick(mps, LoadView::CurrentCpu, rng) == 1) ++light;
    // P(picking mp 1) = P(either draw hits it) = 1 - (3/4)(2/3) = 1/2.
    CHECK(light > draws * 45 / 100);
    CHECK(light < draws * 55 / 100);
    // Two MPs: the draws are always {0, 1}, so the lighter one always wins.
    const auto two = mps_with_loads({8, 3});
    for (int i = 0; i < 200; ++i) CHECK(p2_pick(two, LoadView::CurrentCpu, rng) == 1);
    // Single MP: only one choice.
    CHECK(p2_pick(mps_with_loads({4}), LoadView::CurrentCpu, rng) == 0);
}

TEST_CASE("identical seeds give identical random policy streams") {
    const auto mps = mps_with_loads({3, 1, 4, 1, 5, 9, 2, 6});
    Rng a(42), b(42);
    PolicyState sa, sb;
    for (int i = 0; i < 500; ++i) {
        CHECK(pick_mp(PolicyKind::Random, sa, mps, 5, a) ==
              pick_mp(PolicyKind::Random, sb, mps, 5, b));
        CHECK(pick_mp(PolicyKind::LLR, sa, mps, 5, a) ==
              pick_mp(PolicyKind::LLR, sb, mps, 5, b));
        CHECK(pick_mp(PolicyKind::P2, sa, mps, 5, a) ==
              pick_mp(PolicyKind::P2, sb, mps, 5, b));
    }
}

TEST_CASE("tetris routes through llr over expected peaks") {
    // Current load says mp 0, expected peak says mp 2; k=1 makes it
    // deterministic.
    const auto mps = mps_with_loads({10, 20, 30}, {30, 20, 10});
    PolicyState st;
    Rng rng(7);
    CHECK(pick_mp(PolicyKind::Tetris, st, mps, 1, rng) == 2);
    CHECK(pick_mp(PolicyKind::LL, st, mps, 1, rng) == 0);
}
