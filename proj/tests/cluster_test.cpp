#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <callpack/cluster.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace callpack;

namespace {

ClusterConfig uniform_cfg(int n_mps, int n_vc = 1) {
    ClusterConfig cfg;
    cfg.n_mps = n_mps;
    cfg.n_virtual_clusters = n_vc;
    cfg.sku_mix = {{{"ref", 1.0}, 1.0}};
    return cfg;
}

CallState make_call(const std::string& id, double measured, double est) {
    CallState cs;
    cs.call_id = id;
    cs.measured_cpu_ref = measured;
    cs.estimated_peak_cpu_ref = est;
    return cs;
}

// Independent recomputation of the cached sums.
void check_sums(const Cluster& cl) {
    std::vector<double> cur(cl.mps().size(), 0.0), est(cl.mps().size(), 0.0);
    for (const auto& [id, cs] : cl.calls()) {
        const auto& mp = cl.mps()[std::size_t(cs.assigned_mp)];
        cur[std::size_t(cs.assigned_mp)] += cs.measured_cpu_ref * mp.sku.perf_ratio;
        est[std::size_t(cs.assigned_mp)] += cs.estimated_peak_cpu_ref * mp.sku.perf_ratio;
    }
    for (std::size_t i = 0; i < cl.mps().size(); ++i) {
        CHECK(cl.mps()[i].current_cpu_pct == doctest::Approx(cur[i]).epsilon(1e-9));
        CHECK(cl.mps()[i].expected_peak_cpu_pct == doctest::Approx(est[i]).epsilon(1e-9));
        CHECK(cl.mps()[i].hosted_calls.size() ==
              std::size_t(std::count_if(cl.calls().begin(), cl.calls().end(),
                                        [&](const auto& kv) {
                                            return kv.second.assigned_mp == int(i);
                                        })));
    }
}

}  // namespace

TEST_CASE("construction validates the config") {
    CHECK_THROWS(Cluster(uniform_cfg(0), 1));
    ClusterConfig bad = uniform_cfg(5);
    bad.hot_threshold_pct = 0.0;
    CHECK_THROWS(Cluster(bad, 1));
    bad = uniform_cfg(5);
    bad.n_virtual_clusters = 0;
    CHECK_THROWS(Cluster(bad, 1));
    bad = uniform_cfg(5);
    bad.llr_k = 0;
    CHECK_THROWS(Cluster(bad, 1));
    bad = uniform_cfg(5);
    bad.sku_mix.clear();
    CHECK_THROWS(Cluster(bad, 1));
}

TEST_CASE("mp ids are their indices and skus follow the mix") {
    ClusterConfig cfg;
    cfg.n_mps = 2000;
    cfg.n_virtual_clusters = 4;
    Cluster cl(cfg, 42);
    int fast = 0;
    std::vector<int> vc_count(4, 0);
    for (std::size_t i = 0; i < cl.mps().size(); ++i) {
        CHECK(cl.mps()[i].mp_id == int(i));
        if (cl.mps()[i].sku.sku_id == "fast") ++fast;
        ++vc_count[std::size_t(cl.mps()[i].virtual_cluster_idx)];
    }
    // 20% fast in the default mix; loose binomial bounds.
    CHECK(fast > 300);
    CHECK(fast < 500);
    for (int c : vc_count) {
        CHECK(c > 400);
        CHECK(c < 600);
    }
}

TEST_CASE("add, move and remove keep the cached sums in step") {
    Cluster cl(uniform_cfg(4), 7);
    cl.add_call(make_call("a", 10.0, 30.0), 0);
    cl.add_call(make_call("b", 5.0, 8.0), 0);
    cl.add_call(make_call("c", 2.0, 2.5), 3);
    check_sums(cl);
    CHECK(cl.mp(0).current_cpu_pct == doctest::Approx(15.0));
    CHECK(cl.mp(0).expected_peak_cpu_pct == doctest::Approx(38.0));

    cl.move_call("b", 1, 5);
    check_sums(cl);
    CHECK(cl.call("b").assigned_mp == 1);
    CHECK(cl.call("b").last_migration_round == 5);
    // Moving to the same MP is a no-op and does not stamp the round.
    cl.move_call("c", 3, 9);
    CHECK(cl.call("c").last_migration_round != 9);

    cl.update_call_load(cl.call("a"), 12.0, 40.0);
    check_sums(cl);
    cl.remove_call("a");
    check_sums(cl);
    CHECK(cl.mp(0).hosted_calls.empty());
    CHECK(cl.mp(0).current_cpu_pct == doctest::Approx(0.0));
}

TEST_CASE("perf ratio weights the per-mp contribution") {
    ClusterConfig cfg = uniform_cfg(2);
    cfg.sku_mix = {{{"slow", 1.2}, 1.0}};
    Cluster cl(cfg, 1);
    cl.add_call(make_call("a", 10.0, 20.0), 0);
    CHECK(cl.mp(0).current_cpu_pct == doctest::Approx(12.0));
    CHECK(cl.mp(0).expected_peak_cpu_pct == doctest::Approx(24.0));
}

TEST_CASE("recompute_sums removes accumulated drift") {
    Cluster cl(uniform_cfg(3), 11);
    for (int i = 0; i < 100; ++i)
        cl.add_call(make_call("c" + std::to_string(i), 0.1 * i, 0.2 * i), i % 3);
    for (int i = 0; i < 100; i += 2) cl.remove_call("c" + std::to_string(i));
    cl.recompute_sums();
    check_sums(cl);
}

TEST_CASE("errors for unknown entities") {
    Cluster cl(uniform_cfg(2), 1);
    CHECK_THROWS_AS(cl.call("nope"), UnknownCall);
    CHECK_THROWS_AS(cl.remove_call("nope"), UnknownCall);
    CHECK_THROWS_AS(cl.mp(5), UnknownMp);
    cl.add_call(make_call("a", 1.0, 1.0), 0);
    CHECK_THROWS(cl.add_call(make_call("a", 1.0, 1.0), 1));
}
