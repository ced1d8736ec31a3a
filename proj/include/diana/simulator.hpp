#pragma once

// Discrete-event simulation of a Grid running under one meta-scheduling
// policy: per-site FCFS non-preemptive queues, dataset replication,
// synthetic telemetry and job export.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diana/matchmaker.hpp"
#include "diana/policies.hpp"
#include "diana/telemetry.hpp"

namespace diana {

enum class EventKind {
    JobSubmitted,
    TransferCompleted,
    JobStarted,
    JobFinished,
    TelemetryEpoch,
    ExportEvaluated,
};

std::string_view to_string(EventKind kind);

struct SimEvent {
    double time = 0.0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::JobSubmitted;
    int job = -1;   // index into the job list, -1 for none
    int task = -1;  // index into the task table
    int transfer = -1;
};

/// One line of the optional event trace.
struct TraceRecord {
    double time = 0.0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::JobSubmitted;
    std::string job;
    std::string site;
    std::string detail;

    bool operator==(const TraceRecord&) const = default;
};

/// Execution of one sub-job (or background task) on one CPU slot.
struct TaskRecord {
    std::optional<JobId> job;  // empty for background load
    int sub_job = 0;
    SiteId site;
    int slot = -1;
    double start = 0.0;
    double finish = 0.0;
};

struct JobRecord {
    JobId job;
    SiteId submit_site;
    Placement placement;
    int sub_job_count = 1;
    double submit_time = 0.0;
    double transfer_done_time = 0.0;
    double start_time = 0.0;      // first sub-job start
    double finish_time = 0.0;     // last sub-job finish
    double staged_out_time = 0.0; // output back at the submitter
    std::optional<SiteId> exported_from;

    double queue_time() const { return start_time - submit_time; }
    double execution_time() const { return finish_time - start_time; }
    /// Includes staging the output back to the submission site.
    double completion_time() const { return staged_out_time - submit_time; }
};

struct SimSummary {
    std::string scheduler;
    std::size_t jobs = 0;
    std::size_t exported = 0;
    double mean_queue = 0.0;
    double median_queue = 0.0;
    double mean_exec = 0.0;
    double median_exec = 0.0;
    double mean_completion = 0.0;
    double median_completion = 0.0;
    double makespan = 0.0;
    std::size_t transfers = 0;
};

/// Jobs already present at a site when the simulation starts.
struct BackgroundLoad {
    int waiting = 0;
    int running = 0;
    double task_seconds = 0.0;
};

struct SimConfig {
    CostModel cost;
    MatchmakerOptions matchmaking;
    TelemetryConfig telemetry;
    /// Export when remote estimate < local estimate * threshold; 0 disables.
    double export_threshold = 1.0;
    std::uint64_t seed = 0;
    bool trace = false;
    std::map<SiteId, BackgroundLoad> background;
};

struct SimResult {
    std::vector<JobRecord> jobs;  // in input order
    std::vector<TaskRecord> tasks;
    std::vector<TraceRecord> trace;
    std::map<SiteId, int> peak_running;
    SimSummary summary;
};

SimSummary summarize(const std::vector<JobRecord>& jobs, std::string scheduler);

/// Runs the jobs to completion under `policy`. Throws Deadlock if work
/// remains with nothing left to happen.
SimResult simulate(const ValidatedTopology& topology, const std::vector<JobDescriptor>& jobs,
                   const SimConfig& config, SchedulingPolicy& policy);

SimResult simulate(const ValidatedTopology& topology, const std::vector<JobDescriptor>& jobs,
                   const SimConfig& config, PolicyKind policy);

/// Seed of the telemetry feed of a run with the given seed.
std::uint64_t telemetry_seed(std::uint64_t run_seed);

/// Information-service view at time zero: background load only.
GlobalLoadSnapshot initial_snapshot(const ValidatedTopology& topology, const SimConfig& config);

}  // namespace diana
