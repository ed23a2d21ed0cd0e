#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <callpack/config.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

using namespace callpack;

TEST_CASE("dump then parse then dump is a fixed point") {
    const AppConfig def;
    const std::string text = dump_config(def);
    std::istringstream in(text);
    const AppConfig parsed = parse_config(in);
    CHECK(dump_config(parsed) == text);
}

TEST_CASE("overrides reach the right fields") {
    std::istringstream in(
        "# comment\n"
        "[trace]\n"
        "n_calls = 1234\n"
        "recurring_fraction = 0.25\n"
        "; alt comment style\n"
        "[cluster]\n"
        "n_mps = 99\n"
        "[engine]\n"
        "policy = llr\n"
        "migration = greedy\n"
        "use_growth_table = false\n"
        "seed = 42\n");
    const AppConfig cfg = parse_config(in);
    CHECK(cfg.trace.n_calls == 1234);
    CHECK(cfg.trace.recurring_fraction == 0.25);
    CHECK(cfg.run.cluster.n_mps == 99);
    CHECK(cfg.run.policy == PolicyKind::LLR);
    CHECK(cfg.run.migration == MigrationMode::Greedy);
    CHECK_FALSE(cfg.run.use_growth_table);
    CHECK(cfg.run.seed == 42);
    // Untouched fields keep their defaults.
    CHECK(cfg.trace.duration_s == 86400);
    CHECK(cfg.run.cluster.llr_k == 5);
}

TEST_CASE("unknown keys name the offending entry") {
    std::istringstream in("[trace]\nno_such_key = 5\n");
    try {
        parse_config(in);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find("trace") != std::string::npos);
        CHECK(what.find("no_such_key") != std::string::npos);
    }
    std::istringstream in2("[nowhere]\nn_calls = 5\n");
    CHECK_THROWS_AS(parse_config(in2), ConfigError);
}

TEST_CASE("bad values are rejected") {
    std::istringstream bad_num("[trace]\nn_calls = many\n");
    CHECK_THROWS_AS(parse_config(bad_num), ConfigError);
    std::istringstream bad_bool("[engine]\naudit = maybe\n");
    CHECK_THROWS_AS(parse_config(bad_bool), ConfigError);
    std::istringstream bad_policy("[engine]\npolicy = fifo\n");
    CHECK_THROWS_AS(parse_config(bad_policy), ConfigError);
    std::istringstream no_section("n_calls = 5\n");
    CHECK_THROWS_AS(parse_config(no_section), ConfigError);
    std::istringstream no_equals("[trace]\nn_calls\n");
    CHECK_THROWS_AS(parse_config(no_equals), ConfigError);
}

TEST_CASE("load_config reads files and reports missing ones") {
    const std::string path = "cfg_test.ini";
    {
        std::ofstream f(path);
        f << "[cluster]\nn_mps = 7\n";
    }
    const AppConfig cfg = load_config(path);
    CHECK(cfg.run.cluster.n_mps == 7);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_config("missing_config.ini"), ConfigError);
}

TEST_CASE("parsing starts from a supplied base config") {
    AppConfig base;
    base.trace.n_calls = 10;
    base.run.cluster.n_mps = 20;
    std::istringstream in("[trace]\nn_calls = 30\n");
    const AppConfig cfg = parse_config(in, base);
    CHECK(cfg.trace.n_calls == 30);
    CHECK(cfg.run.cluster.n_mps == 20);
}
