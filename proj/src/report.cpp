#include "diana/report.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "diana/telemetry.hpp"

namespace diana {

namespace {

std::string num(double v) { return fmt::format("{:.6f}", v); }

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string jobs_csv(const SimResult& result, std::string_view scheduler) {
    std::string out =
        "job_id,scheduler,submit_site,exec_site,submit_t,transfer_done_t,start_t,finish_t,"
        "queue_time,exec_time,completion_time,exported\n";
    for (const auto& j : result.jobs) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(j.job.str()), scheduler,
                           csv_field(j.submit_site.str()), csv_field(j.placement.exec_site.str()),
                           num(j.submit_time), num(j.transfer_done_time), num(j.start_time),
                           num(j.finish_time), num(j.queue_time()), num(j.execution_time()),
                           num(j.completion_time()), j.exported_from ? 1 : 0);
    }
    return out;
}

std::string trace_csv(const SimResult& result) {
    std::string out = "time,seq,event,job,site,detail\n";
    for (const auto& t : result.trace) {
        out += fmt::format("{},{},{},{},{},{}\n", num(t.time), t.seq, to_string(t.kind), csv_field(t.job),
                           csv_field(t.site), csv_field(t.detail));
    }
    return out;
}

std::string summary_text(const Scenario& scenario, const SimResult& result) {
    const auto& s = result.summary;
    std::string out;
    if (!scenario.name.empty()) out += fmt::format("scenario          {}\n", scenario.name);
    out += fmt::format("scheduler         {}\n", s.scheduler);
    out += fmt::format("seed              {}\n", scenario.seed);
    out += fmt::format("jobs              {}\n", s.jobs);
    out += fmt::format("exported          {}\n", s.exported);
    out += fmt::format("transfers         {}\n", s.transfers);
    out += fmt::format("mean queue        {}\n", num(s.mean_queue));
    out += fmt::format("median queue      {}\n", num(s.median_queue));
    out += fmt::format("mean exec         {}\n", num(s.mean_exec));
    out += fmt::format("median exec       {}\n", num(s.median_exec));
    out += fmt::format("mean completion   {}\n", num(s.mean_completion));
    out += fmt::format("median completion {}\n", num(s.median_completion));
    out += fmt::format("makespan          {}\n", num(s.makespan));
    if (!result.peak_running.empty()) {
        out += "peak running\n";
        for (const auto& [site, n] : result.peak_running) out += fmt::format("  {:<16}{}\n", site.str(), n);
    }
    return out;
}

std::string explain_text(const Scenario& scenario, const std::vector<JobDescriptor>& jobs) {
    const auto& topo = scenario.topology;
    TelemetryFeed feed(topo.links(), scenario.sim.telemetry, telemetry_seed(scenario.sim.seed));
    const auto load = initial_snapshot(topo, scenario.sim);
    GridView view{topo, topo.catalog(), feed.historical_average(), load};
    Matchmaker mm(view, scenario.sim.cost, scenario.sim.matchmaking);

    std::string out;
    for (const auto& job : jobs) {
        const auto shortlist = mm.shortlist_sites(job);
        std::vector<std::string> names;
        for (const auto& s : shortlist) names.push_back(s.str());
        out += fmt::format("job {} submitted at {}\n", job.id.str(), job.submit_site.str());
        out += fmt::format("shortlist (k={}): {}\n", scenario.sim.matchmaking.shortlist_k,
                           fmt::join(names, ", "));

        std::vector<SiteId> rows = shortlist;
        if (std::find(rows.begin(), rows.end(), job.submit_site) == rows.end()) rows.push_back(job.submit_site);
        std::sort(rows.begin(), rows.end());
        out += fmt::format("  {:<16}{:>18}{:>18}{:>18}{:>18}\n", "exec site", "data transfer", "compute",
                           "network", "total");
        for (const auto& site : rows) {
            const auto c = mm.evaluate(job, site, job.submit_site);
            out += fmt::format("  {:<16}{:>18.6f}{:>18.6f}{:>18.6f}{:>18.6f}\n", site.str(),
                               c.data_transfer_cost, c.compute_cost, c.network_cost, c.total);
        }

        auto sorted = shortlist;
        std::sort(sorted.begin(), sorted.end());
        const auto matrix = mm.build_cost_matrix(sorted, job);
        out += "cost matrix (row: submission site, column: execution site)\n";
        out += fmt::format("  {:<16}", "");
        for (const auto& to : sorted) out += fmt::format("{:>16}", to.str());
        out += "\n";
        for (const auto& from : sorted) {
            out += fmt::format("  {:<16}", from.str());
            for (const auto& to : sorted) {
                const auto v = matrix.cost(from, to);
                out += v ? fmt::format("{:>16.4f}", *v) : fmt::format("{:>16}", "-");
            }
            out += "\n";
        }
        const auto p = mm.get_best_computing_element(job);
        out += fmt::format("selected: {} (total {:.6f})\n", p.exec_site.str(), p.breakdown.total);
        for (const auto& [ds, site] : p.chosen_replicas) {
            out += fmt::format("  {} from {}\n", ds.str(), site.str());
        }
        out += "\n";
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::InvalidArgument, fmt::format("cannot write {}", tmp.string()));
        f << content;
        if (!f.flush()) throw Error(ErrorCode::InvalidArgument, fmt::format("cannot write {}", tmp.string()));
    }
    std::filesystem::rename(tmp, path);
}

std::vector<SweepPoint> run_sweep(const Scenario& scenario, const std::vector<PolicyKind>& schedulers,
                                  const std::vector<std::size_t>& job_counts, std::size_t threads) {
    std::vector<SweepPoint> points;
    for (auto kind : schedulers) {
        for (auto n : job_counts) points.push_back({kind, n, {}});
    }
    // Workloads are shared across schedulers so every policy sees the same jobs.
    std::map<std::size_t, std::vector<JobDescriptor>> workloads;
    for (auto n : job_counts) {
        if (!workloads.count(n)) workloads[n] = scenario.jobs(n);
    }

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, points.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(points.size());
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                auto& pt = points[i];
                const auto result = simulate(scenario.topology, workloads.at(pt.n_jobs), scenario.sim, pt.scheduler);
                pt.summary = result.summary;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return points;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::string out = "scheduler,n_jobs,mean_queue,mean_exec,mean_completion\n";
    for (const auto& p : points) {
        out += fmt::format("{},{},{},{},{}\n", to_string(p.scheduler), p.n_jobs, num(p.summary.mean_queue),
                           num(p.summary.mean_exec), num(p.summary.mean_completion));
    }
    return out;
}

}  // namespace diana
