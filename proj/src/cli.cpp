#include "diana/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "diana/report.hpp"

namespace diana {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSeedEnv = "DIANA_SEED";

std::uint64_t parse_seed(const std::string& text, const char* origin) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || text.front() == '-') {
        throw Error(ErrorCode::InvalidArgument, fmt::format("{}: '{}' is not a valid seed", origin, text));
    }
    return v;
}

/// --seed beats DIANA_SEED, which beats the scenario file.
void apply_seed(Scenario& sc, const std::optional<std::uint64_t>& flag) {
    if (flag) {
        sc.reseed(*flag);
    } else if (const char* env = std::getenv(kSeedEnv); env && *env) {
        sc.reseed(parse_seed(env, kSeedEnv));
    }
}

struct RunArgs {
    std::string scenario;
    std::string out = "results";
    std::optional<std::uint64_t> seed;
    std::string scheduler;
    bool explain = false;
    bool trace = false;
};

struct CompareArgs {
    std::string scenario;
    std::string out = "results";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> schedulers;
    std::vector<std::size_t> jobs;
    std::size_t threads = 0;
};

int do_run(const RunArgs& a, std::ostream& out) {
    auto sc = load_scenario(a.scenario);
    apply_seed(sc, a.seed);
    if (!a.scheduler.empty()) sc.scheduler = parse_policy(a.scheduler);
    sc.sim.trace = a.trace;

    const auto jobs = sc.jobs();
    fs::create_directories(a.out);
    if (a.explain) {
        const auto text = explain_text(sc, jobs);
        out << text;
        write_file_atomic(fs::path(a.out) / "explain.txt", text);
    }
    const auto result = simulate(sc.topology, jobs, sc.sim, sc.scheduler);
    write_file_atomic(fs::path(a.out) / "jobs.csv", jobs_csv(result, to_string(sc.scheduler)));
    const auto summary = summary_text(sc, result);
    write_file_atomic(fs::path(a.out) / "summary.txt", summary);
    if (a.trace) write_file_atomic(fs::path(a.out) / "trace.csv", trace_csv(result));
    out << summary;
    return kExitOk;
}

int do_compare(const CompareArgs& a, std::ostream& out) {
    auto sc = load_scenario(a.scenario);
    apply_seed(sc, a.seed);

    std::vector<PolicyKind> kinds;
    if (a.schedulers.empty()) {
        kinds = all_policies();
    } else {
        for (const auto& s : a.schedulers) kinds.push_back(parse_policy(s));
    }
    std::vector<std::size_t> counts = a.jobs;
    if (counts.empty()) counts = {25, 50, 100, 250, 500, 1000};
    for (auto n : counts) {
        if (n == 0) throw Error(ErrorCode::InvalidArgument, "job counts must be >= 1");
    }

    const auto points = run_sweep(sc, kinds, counts, a.threads);
    const fs::path dir = a.out;
    fs::create_directories(dir / "points");
    for (const auto& p : points) {
        write_file_atomic(dir / "points" / fmt::format("{}-{}.csv", to_string(p.scheduler), p.n_jobs),
                          sweep_csv({p}));
    }
    const auto csv = sweep_csv(points);
    write_file_atomic(dir / "compare.csv", csv);

    out << fmt::format("{:<16}{:>8}{:>16}{:>16}{:>18}\n", "scheduler", "jobs", "mean queue", "mean exec",
                       "mean completion");
    for (const auto& p : points) {
        out << fmt::format("{:<16}{:>8}{:>16.3f}{:>16.3f}{:>18.3f}\n", to_string(p.scheduler), p.n_jobs,
                           p.summary.mean_queue, p.summary.mean_exec, p.summary.mean_completion);
    }
    return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Grid meta-scheduling simulator"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Simulate one scenario under its scheduler");
    run_cmd->add_option("scenario", run.scenario, "Scenario file (YAML)")->required();
    run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
    run_cmd->add_option("--seed", run.seed, "Run seed (overrides DIANA_SEED and the file)");
    run_cmd->add_option("--scheduler", run.scheduler, "diana, data_local, compute_greedy or random");
    run_cmd->add_flag("--explain", run.explain, "Print cost tables and matrices for each job");
    run_cmd->add_flag("--trace", run.trace, "Write the event trace to trace.csv");

    CompareArgs cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "Sweep schedulers over workload sizes");
    cmp_cmd->add_option("scenario", cmp.scenario, "Scenario file (YAML)")->required();
    cmp_cmd->add_option("--out", cmp.out, "Output directory")->capture_default_str();
    cmp_cmd->add_option("--seed", cmp.seed, "Run seed (overrides DIANA_SEED and the file)");
    cmp_cmd->add_option("--schedulers", cmp.schedulers, "Comma-separated scheduler names")->delimiter(',');
    cmp_cmd->add_option("--jobs", cmp.jobs, "Comma-separated job counts")->delimiter(',');
    cmp_cmd->add_option("--threads", cmp.threads, "Worker threads (0: one per core)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        if (*run_cmd) return do_run(run, out);
        return do_compare(cmp, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::Deadlock ? kExitInternal : kExitInvalid;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

}  // namespace diana
