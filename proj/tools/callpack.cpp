// callpack: synthetic call-trace generation and call-packing simulation.
//
// Commands:
//   gen-trace  write day/warmup traces and the recurring-series history
//   simulate   replay a trace bundle under one policy/migration setup
//   compare    run several policy/migration pairs on one bundle
//   report     print a human-readable summary of a simulate output dir
//   dump-config  print the effective configuration
//
// Exit codes: 0 success, 1 runtime error, 2 configuration/usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "callpack/config.hpp"
#include "callpack/engine.hpp"

namespace fs = std::filesystem;
using namespace callpack;

namespace {

struct CommonOpts {
    std::string config_path;
    long long seed = -1;
    int cluster_size = -1;
    std::string policy;
    std::string migration;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("-c,--config", o.config_path, "Configuration file");
    cmd->add_option("--seed", o.seed, "Override both trace and engine seeds");
    cmd->add_option("--cluster-size", o.cluster_size, "Override the MP count");
    cmd->add_option("--policy", o.policy, "rr|random|ll|llr|p2|tetris");
    cmd->add_option("--migration", o.migration, "none|greedy|mip");
}

AppConfig effective_config(const CommonOpts& o) {
    AppConfig cfg;
    if (!o.config_path.empty()) cfg = load_config(o.config_path, std::move(cfg));
    if (o.seed >= 0) {
        cfg.trace.seed = std::uint64_t(o.seed);
        cfg.run.seed = std::uint64_t(o.seed);
    }
    if (o.cluster_size > 0) cfg.run.cluster.n_mps = o.cluster_size;
    if (!o.policy.empty()) cfg.run.policy = parse_policy(o.policy);
    if (!o.migration.empty()) cfg.run.migration = parse_migration(o.migration);
    return cfg;
}

TraceBundle load_bundle(const std::string& dir) {
    TraceBundle b;
    b.day = load_trace(dir + "/trace.jsonl");
    b.warmup = load_trace(dir + "/warmup.jsonl");
    b.history = SeriesStore::load(dir + "/series.json");
    return b;
}

int cmd_gen_trace(const CommonOpts& o, const std::string& out_dir) {
    const AppConfig cfg = effective_config(o);
    validate_config(cfg.trace);
    fs::create_directories(out_dir);
    const TraceBundle bundle = generate_bundle(cfg.trace);
    save_trace(bundle.day, out_dir + "/trace.jsonl");
    save_trace(bundle.warmup, out_dir + "/warmup.jsonl");
    bundle.history.save(out_dir + "/series.json");
    std::cout << "wrote " << bundle.day.calls.size() << " calls ("
              << bundle.warmup.calls.size() << " warm-up) to " << out_dir << "\n";
    return 0;
}

int cmd_simulate(const CommonOpts& o, const std::string& trace_dir,
                 const std::string& out_dir) {
    const AppConfig cfg = effective_config(o);
    const TraceBundle bundle = load_bundle(trace_dir);
    fs::create_directories(out_dir);
    const RunReport report = run_simulation(bundle, cfg.run);
    save_minutes_csv(report, out_dir + "/minutes.csv");
    save_report_json(report, out_dir + "/report.json");
    std::cout << "policy=" << report.policy << " migration=" << report.migration
              << " H=" << report.hot_participant_minutes
              << " max_cpu=" << report.max_cpu << " migrations=" << report.migrations
              << "\n";
    return 0;
}

int cmd_compare(const CommonOpts& o, const std::string& trace_dir,
                const std::vector<std::string>& policies, const std::string& out_dir) {
    const AppConfig cfg = effective_config(o);
    const TraceBundle bundle = load_bundle(trace_dir);
    fs::create_directories(out_dir);

    std::vector<std::pair<PolicyKind, MigrationMode>> combos;
    for (const std::string& p : policies) {
        // "policy" or "policy+migration"
        const std::size_t plus = p.find('+');
        const PolicyKind pk = parse_policy(p.substr(0, plus));
        const MigrationMode mm = plus == std::string::npos
                                     ? cfg.run.migration
                                     : parse_migration(p.substr(plus + 1));
        combos.emplace_back(pk, mm);
    }
    const PreparedTrace prep = prepare_trace(bundle.day);
    const TrainedPredictors trained = train_predictors(bundle.warmup);
    const std::vector<RunReport> reports =
        compare_policies(prep, bundle.history, trained, cfg.run, combos);
    save_compare_csv(reports, out_dir + "/compare.csv");
    for (const RunReport& r : reports)
        std::cout << r.policy << "+" << r.migration
                  << " H=" << r.hot_participant_minutes << "\n";
    return 0;
}

int cmd_report(const std::string& out_dir) {
    std::ifstream f(out_dir + "/report.json");
    if (!f) throw std::runtime_error("no report.json in " + out_dir);
    nlohmann::json j;
    f >> j;
    std::printf("policy                   %s\n", j.at("policy").get<std::string>().c_str());
    std::printf("migration                %s\n",
                j.at("migration").get<std::string>().c_str());
    std::printf("seed                     %llu\n",
                (unsigned long long)j.at("seed").get<std::uint64_t>());
    std::printf("hot participant-minutes  %lld\n",
                (long long)j.at("hot_participant_minutes").get<std::int64_t>());
    std::printf("hot call-minutes         %lld\n",
                (long long)j.at("hot_call_minutes").get<std::int64_t>());
    std::printf("peak hot participants    %lld\n",
                (long long)j.at("peak_hot_participants").get<std::int64_t>());
    std::printf("max CPU %%                %.2f\n", j.at("max_cpu").get<double>());
    std::printf("max p95 CPU %%            %.2f\n", j.at("max_p95").get<double>());
    std::printf("max avg CPU %%            %.2f\n", j.at("max_avg").get<double>());
    std::printf("busiest max/avg ratio    %.2f\n", j.at("busiest_ratio").get<double>());
    std::printf("migrations               %lld\n",
                (long long)j.at("migrations").get<std::int64_t>());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic call-packing simulator"};
    app.require_subcommand(1);

    CommonOpts gen_o, sim_o, cmp_o;
    std::string gen_out = "out", sim_trace, sim_out = "out", cmp_trace, cmp_out = "out";
    std::string report_dir;
    std::vector<std::string> cmp_policies;

    CLI::App* gen = app.add_subcommand("gen-trace", "Generate a synthetic trace bundle");
    add_common(gen, gen_o);
    gen->add_option("-o,--out", gen_out, "Output directory");

    CLI::App* sim = app.add_subcommand("simulate", "Simulate one configuration");
    add_common(sim, sim_o);
    sim->add_option("trace_dir", sim_trace, "Directory with trace.jsonl/warmup.jsonl/series.json")
        ->required();
    sim->add_option("-o,--out", sim_out, "Output directory");

    CLI::App* cmp = app.add_subcommand("compare", "Compare policies on one trace");
    add_common(cmp, cmp_o);
    cmp->add_option("trace_dir", cmp_trace, "Trace bundle directory")->required();
    cmp->add_option("--policies", cmp_policies,
                    "Entries like rr, llr+greedy, tetris+mip")
        ->required();
    cmp->add_option("-o,--out", cmp_out, "Output directory");

    CLI::App* rep = app.add_subcommand("report", "Summarize a simulate output directory");
    rep->add_option("out_dir", report_dir, "Directory with report.json")->required();

    CLI::App* dump = app.add_subcommand("dump-config", "Print the effective configuration");
    CommonOpts dump_o;
    add_common(dump, dump_o);

    if (argc <= 1) {
        std::cerr << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_trace(gen_o, gen_out);
        if (sim->parsed()) return cmd_simulate(sim_o, sim_trace, sim_out);
        if (cmp->parsed()) return cmd_compare(cmp_o, cmp_trace, cmp_policies, cmp_out);
        if (rep->parsed()) return cmd_report(report_dir);
        if (dump->parsed()) {
            std::cout << dump_config(effective_config(dump_o));
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
