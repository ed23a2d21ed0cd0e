#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <callpack/generator.hpp>
#include <callpack/predictors.hpp>
#include <callpack/rng.hpp>

#include <cmath>
#include <cstdio>
#include <vector>

using namespace callpack;

namespace {

OccurrenceSummary flat_occ(double v) {
    OccurrenceSummary o;
    o.peak_participants = v;
    o.audio_streams = v;
    o.video_streams = v;
    o.ss_streams = v;
    o.audio_mbps = 1.0;
    o.video_mbps = 1.0;
    o.ss_mbps = 1.0;
    return o;
}

// Naive reference for the growth table: for each (n, t), average m over all
// (call, m) pairs with the call alive at t, p_t <= n and n <= m <= c.
double naive_nmax(const CallTrajectoryDataset& ds, int n, int t, int n_cap) {
    std::int64_t numer = 0, denom = 0;
    for (int m = n; m <= n_cap; ++m) {
        std::int64_t w = 0;
        for (const auto& call : ds.calls) {
            if (std::size_t(t) >= call.p_t.size()) continue;
            const int p = std::clamp(call.p_t[std::size_t(t)], 0, n_cap);
            const int c = std::clamp(call.c, 0, n_cap);
            if (p <= n && c >= m) ++w;
        }
        numer += std::int64_t(m) * w;
        denom += w;
    }
    if (denom <= 0) return double(n);
    const double v = double(numer) / double(denom);
    return v < double(n) ? double(n) : v;
}

}  // namespace

TEST_CASE("constant histories are a fixed point of the moving average") {
    Rng rng(123);
    const CpuModelParams params;
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(0.5, 40.0);
        const std::size_t len = 4 + rng.uniform_int(7);
        const std::vector<OccurrenceSummary> hist(len, flat_occ(v));
        const auto est = predict_recurring(hist, params);
        REQUIRE(est.has_value());
        CHECK(std::abs(est->peak_participants - v) < 1e-12);
        CHECK(std::abs(est->audio_streams - v) < 1e-12);
        CHECK(std::abs(est->video_streams - v) < 1e-12);
        CHECK(std::abs(est->ss_streams - v) < 1e-12);
        CHECK(std::abs(est->sum_stream_mbps - 3.0 * v) < 1e-11);
    }
}

TEST_CASE("short histories yield no estimate") {
    const CpuModelParams params;
    for (std::size_t len = 0; len < 4; ++len) {
        const std::vector<OccurrenceSummary> hist(len, flat_occ(5.0));
        CHECK_FALSE(predict_recurring(hist, params).has_value());
    }
}

TEST_CASE("newest occurrences dominate the average") {
    const CpuModelParams params;
    std::vector<OccurrenceSummary> hist(6, flat_occ(10.0));
    hist.back() = flat_occ(30.0);  // newest
    const auto est = predict_recurring(hist, params);
    REQUIRE(est.has_value());
    CHECK(est->peak_participants == doctest::Approx(0.5 * 30.0 + 0.5 * 10.0));
}

TEST_CASE("call trajectory tracks per-minute maxima") {
    CallRecord c;
    c.call_id = "c0";
    c.start_s = 0;
    c.end_s = 200;
    c.participants = {"p0", "p1", "p2"};
    c.events = {
        {0, 0, EventAction::Join, MediaKind::Audio, 0.0f},
        {10, 1, EventAction::Join, MediaKind::Audio, 0.0f},
        {30, 1, EventAction::Leave, MediaKind::Audio, 0.0f},
        {100, 2, EventAction::Join, MediaKind::Audio, 0.0f},
        {200, 0, EventAction::Leave, MediaKind::Audio, 0.0f},
        {200, 2, EventAction::Leave, MediaKind::Audio, 0.0f},
    };
    const CallTrajectory tr = call_trajectory(c);
    REQUIRE(tr.p_t.size() == 4);  // minutes 0..3
    CHECK(tr.p_t[0] == 2);  // two joined within the first minute
    CHECK(tr.p_t[1] == 2);  // third join at t=100 falls in minute 1
    CHECK(tr.p_t[2] == 2);
    CHECK(tr.c == 2);
}

TEST_CASE("growth table matches the naive reference exactly") {
    Rng rng(456);
    const int n_cap = 25, t_max = 12;
    for (int ds_i = 0; ds_i < 50; ++ds_i) {
        CallTrajectoryDataset ds;
        const int n_calls = 1 + int(rng.uniform_int(50));
        for (int i = 0; i < n_calls; ++i) {
            CallTrajectory tr;
            const int minutes = 1 + int(rng.uniform_int(std::uint64_t(t_max + 4)));
            int cur = 1 + int(rng.uniform_int(8));
            for (int m = 0; m < minutes; ++m) {
                cur = std::max(0, cur + int(rng.uniform_int(5)) - 2);
                tr.p_t.push_back(cur);
                tr.c = std::max(tr.c, cur);
            }
            ds.calls.push_back(tr);
        }
        const NmaxTable table = build_nmax_table(ds, n_cap, t_max);
        for (int t = 0; t <= t_max; ++t)
            for (int n = 1; n <= n_cap; ++n)
                CHECK(table.lookup(n, t) == naive_nmax(ds, n, t, n_cap));
    }
}

TEST_CASE("the estimate never falls below the current count") {
    TraceGenConfig cfg;
    cfg.n_calls = 3000;
    cfg.recurring_fraction = 0.0;
    cfg.seed = 9;
    const CallTrace warmup = generate_trace(cfg);
    const NmaxTable table =
        build_nmax_table(make_dataset(warmup, 121, true), 500, 120);
    Rng rng(10);
    for (int i = 0; i < 10000; ++i) {
        const int n = 1 + int(rng.uniform_int(500));
        const int t = int(rng.uniform_int(121));
        CHECK(table.lookup(n, t) >= double(n));
    }
    // Clamping outside the tabulated domain.
    CHECK(table.lookup(1000, 50) == table.lookup(500, 50));
    CHECK(table.lookup(5, 400) == table.lookup(5, 120));
}

TEST_CASE("empty dataset is rejected") {
    CHECK_THROWS_AS(build_nmax_table(CallTrajectoryDataset{}, 10, 10), EmptyDataset);
}

TEST_CASE("table csv round trip") {
    Rng rng(77);
    CallTrajectoryDataset ds;
    for (int i = 0; i < 20; ++i) {
        CallTrajectory tr;
        for (int m = 0; m < 5; ++m) tr.p_t.push_back(1 + int(rng.uniform_int(6)));
        for (int p : tr.p_t) tr.c = std::max(tr.c, p);
        ds.calls.push_back(tr);
    }
    const NmaxTable table = build_nmax_table(ds, 8, 4);
    const std::string path = "nmax_rt.csv";
    table.export_csv(path);
    const NmaxTable back = NmaxTable::import_csv(path);
    CHECK(back.n_cap() == 8);
    CHECK(back.t_max_min() == 4);
    for (int t = 0; t <= 4; ++t)
        for (int n = 1; n <= 8; ++n)
            CHECK(back.lookup(n, t) == doctest::Approx(table.lookup(n, t)).epsilon(1e-6));
    std::remove(path.c_str());
}

TEST_CASE("non-recurring cpu estimate scales with the table") {
    const CpuModelParams params;
    const NmaxTable ident = NmaxTable::identity(100, 60);
    // Identity table: the estimate equals the cost of the current size.
    const double est = estimate_nonrecurring_peak_cpu(10, 300, ident, 0.5, params);
    CHECK(est == doctest::Approx(call_cpu_pct(10.0, 5.0, params, SkuProfile{})));
}
