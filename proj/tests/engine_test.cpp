#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <callpack/engine.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

using namespace callpack;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

TraceBundle small_bundle(std::uint64_t seed) {
    TraceGenConfig cfg;
    cfg.n_calls = 600;
    cfg.seed = seed;
    cfg.duration_median_s = 3600;
    cfg.max_duration_s = 7200;
    return generate_bundle(cfg, 600);
}

RunConfig small_run(std::uint64_t seed) {
    RunConfig cfg;
    cfg.cluster.n_mps = 40;
    cfg.cluster.n_virtual_clusters = 2;
    cfg.seed = seed;
    return cfg;
}

// One oversized call that a single reference MP cannot absorb coolly.
CallTrace hot_single_call_trace() {
    CallTrace t;
    t.duration_s = 1200;
    t.seed = 0;
    CallRecord c;
    c.call_id = "c00000000";
    c.start_s = 0;
    c.end_s = 600;
    c.participants = {"p0", "p1"};
    c.events = {
        {0, 0, EventAction::Join, MediaKind::Audio, 0.0f},
        {0, 0, EventAction::MediaStart, MediaKind::Video, 150.0f},
        {0, 1, EventAction::Join, MediaKind::Audio, 0.0f},
        {0, 1, EventAction::MediaStart, MediaKind::Video, 150.0f},
        {600, 0, EventAction::Leave, MediaKind::Audio, 0.0f},
        {600, 1, EventAction::Leave, MediaKind::Audio, 0.0f},
    };
    t.calls.push_back(c);
    validate_trace(t);
    return t;
}

}  // namespace

TEST_CASE("hot minutes accounting on a hand-built trace") {
    const CallTrace day = hot_single_call_trace();
    const PreparedTrace prep = prepare_trace(day);
    RunConfig cfg;
    cfg.cluster.n_mps = 1;
    cfg.cluster.n_virtual_clusters = 1;
    cfg.cluster.sku_mix = {{{"ref", 1.0}, 1.0}};
    cfg.use_growth_table = false;
    const RunReport r = run_simulation(prep, SeriesStore{}, TrainedPredictors{}, cfg);

    // 2 participants, 300 Mbps in + 300 out: far over the 75% threshold.
    // The call spans minutes 1..9 at the metric ticks (it ends at t=600,
    // before that minute's snapshot), so H = 2 participants x 9 minutes.
    CHECK(r.hot_participant_minutes == 18);
    CHECK(r.hot_call_minutes == 9);
    CHECK(r.peak_hot_participants == 2);
    const double expect_cpu = 0.05 + 0.1553 * 600.0;
    CHECK(r.max_cpu == doctest::Approx(expect_cpu).epsilon(1e-9));
    CHECK(r.minutes.size() == 20);
    CHECK(r.migrations == 0);
}

TEST_CASE("report aggregates equal an independent pass over the minutes") {
    const TraceBundle bundle = small_bundle(3);
    RunConfig cfg = small_run(3);
    cfg.policy = PolicyKind::Random;
    const RunReport r = run_simulation(bundle, cfg);
    std::int64_t h = 0, hc = 0;
    double max_cpu = 0.0;
    for (const MetricsSnapshot& m : r.minutes) {
        h += m.hot_participants;
        hc += m.hot_calls;
        max_cpu = std::max(max_cpu, m.max_cpu);
    }
    CHECK(r.hot_participant_minutes == h);
    CHECK(r.hot_call_minutes == hc);
    CHECK(r.max_cpu == max_cpu);
    CHECK(r.minutes.size() == 1440);
}

TEST_CASE("same seed reruns are byte-identical") {
    const TraceBundle bundle = small_bundle(5);
    const PreparedTrace prep = prepare_trace(bundle.day);
    const TrainedPredictors trained = train_predictors(bundle.warmup);
    RunConfig cfg = small_run(5);
    cfg.migration = MigrationMode::Mip;

    const RunReport a = run_simulation(prep, bundle.history, trained, cfg);
    const RunReport b = run_simulation(prep, bundle.history, trained, cfg);
    const std::string p1 = "eng_a.csv", p2 = "eng_b.csv", j1 = "eng_a.json",
                      j2 = "eng_b.json";
    save_minutes_csv(a, p1);
    save_minutes_csv(b, p2);
    save_report_json(a, j1);
    save_report_json(b, j2);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(slurp(j1) == slurp(j2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
    std::remove(j1.c_str());
    std::remove(j2.c_str());
}

TEST_CASE("different seeds shuffle placement") {
    const TraceBundle bundle = small_bundle(7);
    const PreparedTrace prep = prepare_trace(bundle.day);
    const TrainedPredictors trained = train_predictors(bundle.warmup);
    RunConfig ca = small_run(7);
    ca.policy = PolicyKind::Random;
    RunConfig cb = ca;
    cb.seed = 8;
    const RunReport a = run_simulation(prep, bundle.history, trained, ca);
    const RunReport b = run_simulation(prep, bundle.history, trained, cb);
    bool differs = a.hot_participant_minutes != b.hot_participant_minutes;
    for (std::size_t i = 0; !differs && i < a.minutes.size(); ++i)
        differs = a.minutes[i].max_cpu != b.minutes[i].max_cpu;
    CHECK(differs);
}

TEST_CASE("migration modes move calls and report their plumbing") {
    const TraceBundle bundle = small_bundle(9);
    const PreparedTrace prep = prepare_trace(bundle.day);
    const TrainedPredictors trained = train_predictors(bundle.warmup);
    RunConfig cfg = small_run(9);
    cfg.cluster.n_mps = 10;  // small cluster so hot MPs actually appear
    cfg.policy = PolicyKind::RR;

    cfg.migration = MigrationMode::None;
    const RunReport none = run_simulation(prep, bundle.history, trained, cfg);
    CHECK(none.migrations == 0);
    CHECK(none.solver_statuses.empty());

    cfg.migration = MigrationMode::Greedy;
    const RunReport greedy = run_simulation(prep, bundle.history, trained, cfg);
    CHECK(greedy.migrations > 0);

    cfg.migration = MigrationMode::Mip;
    cfg.planner.verify = true;
    const RunReport mip = run_simulation(prep, bundle.history, trained, cfg);
    CHECK_FALSE(mip.solver_statuses.empty());
    CHECK(mip.verifier_violations == 0);
    CHECK(mip.audit_young_moves == 0);
    CHECK(mip.audit_repeat_moves == 0);
    CHECK(mip.audit_mice_moves == 0);
    CHECK_FALSE(mip.waves_per_round.empty());
}

TEST_CASE("ablation switches change the placement signal") {
    const TraceBundle bundle = small_bundle(11);
    const PreparedTrace prep = prepare_trace(bundle.day);
    const TrainedPredictors trained = train_predictors(bundle.warmup);
    RunConfig cfg = small_run(11);
    cfg.cluster.n_mps = 10;
    const RunReport full = run_simulation(prep, bundle.history, trained, cfg);
    RunConfig no_rec = cfg;
    no_rec.use_recurring_predictor = false;
    const RunReport ablated = run_simulation(prep, bundle.history, trained, no_rec);
    bool differs = full.hot_participant_minutes != ablated.hot_participant_minutes;
    for (std::size_t i = 0; !differs && i < full.minutes.size(); ++i)
        differs = full.minutes[i].max_cpu != ablated.minutes[i].max_cpu;
    CHECK(differs);
}

TEST_CASE("compare runs share inputs and normalize against the first row") {
    const TraceBundle bundle = small_bundle(13);
    const PreparedTrace prep = prepare_trace(bundle.day);
    const TrainedPredictors trained = train_predictors(bundle.warmup);
    RunConfig cfg = small_run(13);
    const auto reports = compare_policies(
        prep, bundle.history, trained, cfg,
        {{PolicyKind::RR, MigrationMode::None}, {PolicyKind::Tetris, MigrationMode::None}});
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].policy == "rr");
    CHECK(reports[1].policy == "tetris");
    const std::string path = "cmp.csv";
    save_compare_csv(reports, path);
    const std::string text = slurp(path);
    CHECK(text.find("policy,migration,") == 0);
    CHECK(text.find("\nrr,none,") != std::string::npos);
    CHECK(text.find("\ntetris,none,") != std::string::npos);
    std::remove(path.c_str());
}
