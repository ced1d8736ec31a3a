#pragma once

// Result files and experiment sweeps.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "diana/scenario.hpp"

namespace diana {

std::string jobs_csv(const SimResult& result, std::string_view scheduler);
std::string trace_csv(const SimResult& result);
std::string summary_text(const Scenario& scenario, const SimResult& result);

/// Per-job cost tables and cost matrices as the matchmaker sees them at
/// time zero (background load only, first telemetry sample).
std::string explain_text(const Scenario& scenario, const std::vector<JobDescriptor>& jobs);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

struct SweepPoint {
    PolicyKind scheduler = PolicyKind::Diana;
    std::size_t n_jobs = 0;
    SimSummary summary;
};

/// Every (scheduler, job count) pair; each point simulates the first
/// `n` jobs of the scenario's workload. Points run on up to `threads`
/// worker threads (0 picks the hardware concurrency). Results come back in
/// scheduler-major order regardless of completion order.
std::vector<SweepPoint> run_sweep(const Scenario& scenario, const std::vector<PolicyKind>& schedulers,
                                  const std::vector<std::size_t>& job_counts, std::size_t threads = 0);

/// Long format: scheduler,n_jobs,mean_queue,mean_exec,mean_completion.
std::string sweep_csv(const std::vector<SweepPoint>& points);

}  // namespace diana
