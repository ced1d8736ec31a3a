#include "diana/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>

#include <fmt/format.h>

namespace diana {

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::JobSubmitted: return "JobSubmitted";
        case EventKind::TransferCompleted: return "TransferCompleted";
        case EventKind::JobStarted: return "JobStarted";
        case EventKind::JobFinished: return "JobFinished";
        case EventKind::TelemetryEpoch: return "TelemetryEpoch";
        case EventKind::ExportEvaluated: return "ExportEvaluated";
    }
    return "Unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

enum class TaskState { Queued, Started, Done };

struct Task {
    int job = -1;  // -1: background load
    int sub = 0;
    double duration = 0.0;
    SiteId site;
    int slot = -1;
    double start = 0.0;
    double finish = 0.0;
    TaskState state = TaskState::Queued;
};

struct Waiter {
    int job = -1;
    std::uint64_t generation = 0;
};

struct Transfer {
    std::optional<DatasetId> dataset;  // empty: executable staging for one job
    SiteId from;
    SiteId to;
    double done = 0.0;
    std::vector<Waiter> waiters;
};

struct JobState {
    const JobDescriptor* desc = nullptr;
    Placement placement;
    SiteId site;
    std::uint64_t generation = 0;
    bool placed = false;
    bool done = false;
    std::vector<int> tasks;
    std::set<int> waiting_on;  // transfers of the current placement
    int finished = 0;
    double transfer_done = 0.0;
    double first_start = kInf;
    double last_finish = 0.0;
    double staged_out = 0.0;
    std::optional<SiteId> exported_from;
};

struct SiteState {
    std::vector<int> slots;  // task id or -1
    std::deque<int> queue;
    int busy = 0;
    int peak = 0;
    std::set<DatasetId> present;
    double cached_bytes = 0.0;  // dynamic replicas only
};

struct EventOrder {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.seq > b.seq;
    }
};

class Engine {
public:
    Engine(const ValidatedTopology& topology, const std::vector<JobDescriptor>& jobs,
           const SimConfig& config, SchedulingPolicy& policy)
        : topology_(topology), config_(config), policy_(policy),
          catalog_(topology.catalog()),
          telemetry_(topology.links(), config.telemetry, telemetry_seed(config.seed)) {
        for (const auto& [id, site] : topology_.sites()) {
            SiteState s;
            s.slots.assign(site.cpu_count, -1);
            for (const auto& [d, desc] : catalog_.entries()) {
                if (desc.replicas.count(id)) s.present.insert(d);
            }
            sites_.emplace(id, std::move(s));
        }
        jobs_.resize(jobs.size());
        for (std::size_t i = 0; i < jobs.size(); ++i) jobs_[i].desc = &jobs[i];
        if (config_.export_threshold < 0.0 || !std::isfinite(config_.export_threshold)) {
            throw Error(ErrorCode::InvalidArgument, "export threshold must be >= 0");
        }
    }

    SimResult run() {
        seed_background();
        for (std::size_t i = 0; i < jobs_.size(); ++i) {
            push(jobs_[i].desc->submit_time, EventKind::JobSubmitted, static_cast<int>(i));
        }
        if (!jobs_.empty() || pending_background_ > 0) {
            push(config_.telemetry.epoch_seconds, EventKind::TelemetryEpoch);
        }

        while (!events_.empty()) {
            const SimEvent ev = events_.top();
            events_.pop();
            if (ev.time < now_) throw std::logic_error("simulation event scheduled in the past");
            now_ = ev.time;
            handle(ev);
            check_conservation();
        }

        if (completed_ != jobs_.size()) {
            throw Error(ErrorCode::Deadlock,
                        fmt::format("simulation stalled with {} of {} jobs unfinished",
                                    jobs_.size() - completed_, jobs_.size()));
        }
        return collect();
    }

private:
    // ------------------------------------------------------------- plumbing

    void push(double t, EventKind kind, int job = -1, int task = -1, int transfer = -1) {
        events_.push(SimEvent{t, next_seq_++, kind, job, task, transfer});
    }

    void trace(const SimEvent& ev, std::string job, std::string site, std::string detail) {
        if (!config_.trace) return;
        trace_.push_back({ev.time, ev.seq, ev.kind, std::move(job), std::move(site),
                          std::move(detail)});
    }

    std::string job_name(int job) const {
        return job < 0 ? std::string("background") : jobs_[job].desc->id.str();
    }

    bool work_remains() const { return completed_ < jobs_.size() || pending_background_ > 0; }

    void check_conservation() const {
        std::size_t in_flight = 0;
        for (const auto& j : jobs_) in_flight += (j.placed && !j.done);
        if (submitted_ != completed_ + in_flight) {
            throw std::logic_error("job conservation violated");
        }
    }

    GlobalLoadSnapshot snapshot() const {
        std::map<SiteId, QueueCounts> counts;
        for (const auto& [id, s] : sites_) {
            counts[id] = QueueCounts{static_cast<int>(s.queue.size()), s.busy};
        }
        return GlobalLoadSnapshot::build(topology_, counts);
    }

    Placement decide(const JobDescriptor& job, const std::set<SiteId>& exclude) {
        const auto load = snapshot();
        const PolicyContext ctx{GridView{topology_, catalog_, telemetry_.historical_average(), load},
                                config_.cost,
                                config_.matchmaking,
                                &cache_,
                                telemetry_.epoch(),
                                load_version_,
                                now_};
        return policy_.place(job, ctx, exclude);
    }

    double run_seconds(const JobDescriptor& job, const SiteId& site) const {
        return job.compute_demand / topology_.site(site).power_per_cpu;
    }

    // ---------------------------------------------------------- background

    void seed_background() {
        for (const auto& [id, bg] : config_.background) {
            const auto& site = topology_.site(id);
            if (bg.running > site.cpu_count || bg.running < 0 || bg.waiting < 0) {
                throw Error(ErrorCode::InvalidArgument,
                            fmt::format("site '{}': background load does not fit", id.str()));
            }
            if (bg.running + bg.waiting > 0 && !(bg.task_seconds > 0.0)) {
                throw Error(ErrorCode::InvalidArgument,
                            fmt::format("site '{}': background task_seconds must be > 0",
                                        id.str()));
            }
            auto& s = sites_.at(id);
            for (int i = 0; i < bg.running + bg.waiting; ++i) {
                Task t;
                t.duration = bg.task_seconds;
                t.site = id;
                tasks_.push_back(t);
                s.queue.push_back(static_cast<int>(tasks_.size()) - 1);
                ++pending_background_;
            }
        }
        for (const auto& [id, s] : sites_) dispatch_next(id);
    }

    // --------------------------------------------------------------- events

    void handle(const SimEvent& ev) {
        switch (ev.kind) {
            case EventKind::JobSubmitted: on_submitted(ev); break;
            case EventKind::TransferCompleted: on_transfer(ev); break;
            case EventKind::JobStarted: on_started(ev); break;
            case EventKind::JobFinished: on_finished(ev); break;
            case EventKind::TelemetryEpoch: on_epoch(ev); break;
            case EventKind::ExportEvaluated: on_export(ev); break;
        }
    }

    void on_submitted(const SimEvent& ev) {
        auto& js = jobs_[ev.job];
        const Placement p = decide(*js.desc, {});
        ++submitted_;
        js.placed = true;
        trace(ev, job_name(ev.job), p.exec_site.str(),
              fmt::format("submit={} cost={:.6g}", js.desc->submit_site.str(), p.breakdown.total));
        enqueue_local(ev.job, p);
    }

    void on_transfer(const SimEvent& ev) {
        auto& tr = transfers_[ev.transfer];
        if (tr.dataset) {
            auto& site = sites_.at(tr.to);
            in_flight_.erase({*tr.dataset, tr.to});
            // The copy serves the waiting jobs; it is kept only if it fits
            // in the site's storage (0 = unlimited). Only sites that can
            // reach every other site are published as replica sources.
            const double bytes = catalog_.at(*tr.dataset).size_mb * kBytesPerMegabyte;
            const double capacity = topology_.site(tr.to).storage_capacity_bytes;
            if (capacity <= 0.0 || site.cached_bytes + bytes <= capacity) {
                site.cached_bytes += bytes;
                site.present.insert(*tr.dataset);
                if (topology_.fully_connected_from(tr.to) && !catalog_.has_replica(*tr.dataset, tr.to)) {
                    catalog_ = catalog_.with_replica(*tr.dataset, tr.to);
                }
            }
        }
        trace(ev, tr.dataset ? std::string() : job_name(tr.waiters.front().job), tr.to.str(),
              fmt::format("{} {} -> {}", tr.dataset ? tr.dataset->str() : "executable",
                          tr.from.str(), tr.to.str()));
        std::set<SiteId> touched;
        for (const auto& w : tr.waiters) {
            auto& js = jobs_[w.job];
            if (js.generation != w.generation || js.done) continue;
            js.waiting_on.erase(ev.transfer);
            if (js.waiting_on.empty()) {
                js.transfer_done = now_;
                touched.insert(js.site);
            }
        }
        for (const auto& s : touched) dispatch_next(s);
    }

    void on_started(const SimEvent& ev) {
        const auto& t = tasks_[ev.task];
        trace(ev, job_name(t.job), t.site.str(), fmt::format("sub={} slot={}", t.sub, t.slot));
    }

    void on_finished(const SimEvent& ev) {
        auto& t = tasks_[ev.task];
        t.state = TaskState::Done;
        auto& site = sites_.at(t.site);
        site.slots[t.slot] = -1;
        --site.busy;
        ++load_version_;
        trace(ev, job_name(t.job), t.site.str(), fmt::format("sub={} slot={}", t.sub, t.slot));

        if (t.job < 0) {
            --pending_background_;
        } else {
            auto& js = jobs_[t.job];
            js.last_finish = std::max(js.last_finish, now_);
            if (++js.finished == js.desc->sub_job_count) {
                const auto& desc = *js.desc;
                const LinkMetrics back = telemetry_.current().lookup(js.site, desc.submit_site);
                js.staged_out = now_ + transfer_seconds(desc.output_mb, back, config_.cost.transfer);
                js.done = true;
                ++completed_;
            }
        }
        dispatch_next(t.site);
    }

    void on_epoch(const SimEvent& ev) {
        telemetry_.advance(now_);
        trace(ev, "", "", fmt::format("epoch={}", telemetry_.epoch()));
        if (!work_remains()) return;
        if (events_.empty()) {
            throw Error(ErrorCode::Deadlock, "jobs remain but no event can make progress");
        }
        if (policy_.exports_jobs() && config_.export_threshold > 0.0) {
            push(now_, EventKind::ExportEvaluated);
        }
        push(now_ + config_.telemetry.epoch_seconds, EventKind::TelemetryEpoch);
    }

    void on_export(const SimEvent& ev) {
        std::size_t moved = 0;
        for (const auto& id : topology_.site_ids()) moved += maybe_export(id, ev);
        trace(ev, "", "", fmt::format("exported={}", moved));
    }

    // ------------------------------------------------------------ placement

    /// Arrival of a job at its execution site: its sub-jobs join the local
    /// FCFS queue and any missing inputs start moving.
    void enqueue_local(int job, const Placement& p) {
        auto& js = jobs_[job];
        const auto& desc = *js.desc;
        js.placement = p;
        js.site = p.exec_site;
        ++js.generation;
        js.waiting_on.clear();

        auto& site = sites_.at(p.exec_site);
        const double duration = run_seconds(desc, p.exec_site);
        if (js.tasks.empty()) {
            for (int k = 0; k < desc.sub_job_count; ++k) {
                Task t;
                t.job = job;
                t.sub = k;
                tasks_.push_back(t);
                js.tasks.push_back(static_cast<int>(tasks_.size()) - 1);
            }
        }
        for (int id : js.tasks) {
            tasks_[id].site = p.exec_site;
            tasks_[id].duration = duration;
            site.queue.push_back(id);
        }
        ++load_version_;

        for (const auto& d : desc.input_datasets) {
            if (site.present.count(d)) continue;
            const Waiter w{job, js.generation};
            if (auto it = in_flight_.find({d, p.exec_site}); it != in_flight_.end()) {
                transfers_[it->second].waiters.push_back(w);
                js.waiting_on.insert(it->second);
                continue;
            }
            const SiteId from = p.chosen_replicas.at(d);
            const int id = start_transfer(d, from, p.exec_site, w);
            js.waiting_on.insert(id);
        }
        if (desc.executable_mb > 0.0 && desc.submit_site != p.exec_site) {
            const int id = start_transfer(std::nullopt, desc.submit_site, p.exec_site,
                                          Waiter{job, js.generation}, desc.executable_mb);
            js.waiting_on.insert(id);
        }
        if (js.waiting_on.empty()) js.transfer_done = now_;
        dispatch_next(p.exec_site);
    }

    int start_transfer(const std::optional<DatasetId>& dataset, const SiteId& from,
                       const SiteId& to, Waiter waiter, double size_mb = 0.0) {
        if (dataset) size_mb = catalog_.at(*dataset).size_mb;
        const LinkMetrics m = telemetry_.current().lookup(from, to);
        Transfer tr;
        tr.dataset = dataset;
        tr.from = from;
        tr.to = to;
        tr.done = now_ + transfer_seconds(size_mb, m, config_.cost.transfer);
        tr.waiters.push_back(waiter);
        transfers_.push_back(std::move(tr));
        const int id = static_cast<int>(transfers_.size()) - 1;
        if (dataset) in_flight_[{*dataset, to}] = id;
        push(transfers_[id].done, EventKind::TransferCompleted, waiter.job, -1, id);
        return id;
    }

    bool ready(const Task& t) const {
        return t.job < 0 || jobs_[t.job].waiting_on.empty();
    }

    /// Starts queued work in arrival order while CPUs are free. The queue
    /// head blocks everything behind it until its inputs have arrived.
    void dispatch_next(const SiteId& id) {
        auto& site = sites_.at(id);
        while (!site.queue.empty() && site.busy < static_cast<int>(site.slots.size())) {
            const int tid = site.queue.front();
            auto& t = tasks_[tid];
            if (!ready(t)) break;
            site.queue.pop_front();
            const auto slot = std::find(site.slots.begin(), site.slots.end(), -1);
            t.slot = static_cast<int>(slot - site.slots.begin());
            *slot = tid;
            ++site.busy;
            site.peak = std::max(site.peak, site.busy);
            t.state = TaskState::Started;
            t.start = now_;
            t.finish = now_ + t.duration;
            if (t.job >= 0) {
                auto& js = jobs_[t.job];
                js.first_start = std::min(js.first_start, now_);
            }
            ++load_version_;
            push(now_, EventKind::JobStarted, t.job, tid);
            push(t.finish, EventKind::JobFinished, t.job, tid);
        }
    }

    // --------------------------------------------------------------- export

    double ready_time(int job) const {
        double t = now_;
        for (int id : jobs_[job].waiting_on) t = std::max(t, transfers_[id].done);
        return t;
    }

    using SlotHeap = std::priority_queue<double, std::vector<double>, std::greater<>>;

    SlotHeap slot_heap(const SiteState& site) const {
        SlotHeap heap;
        for (int tid : site.slots) heap.push(tid < 0 ? now_ : tasks_[tid].finish);
        return heap;
    }

    /// Replays the FCFS queue of `site`; returns the finish time of `job`'s
    /// last sub-job, or of the whole queue when job < 0.
    double replay(const SiteState& site, SlotHeap& heap, int job, double& last_start) const {
        double job_finish = now_;
        for (int tid : site.queue) {
            const auto& t = tasks_[tid];
            const double start = std::max({heap.top(), last_start, t.job < 0 ? now_ : ready_time(t.job)});
            heap.pop();
            heap.push(start + t.duration);
            last_start = start;
            if (t.job == job && job >= 0) job_finish = std::max(job_finish, start + t.duration);
        }
        return job_finish;
    }

    double local_estimate(const SiteId& id, int job) const {
        const auto& site = sites_.at(id);
        auto heap = slot_heap(site);
        double last_start = now_;
        return replay(site, heap, job, last_start) - now_;
    }

    double remote_estimate(const SiteId& id, int job, const Placement& p) const {
        const auto& desc = *jobs_[job].desc;
        const auto& site = sites_.at(id);
        const auto& metrics = telemetry_.historical_average();

        double staging = 0.0;
        for (const auto& d : desc.input_datasets) {
            if (site.present.count(d)) continue;
            if (auto it = in_flight_.find({d, id}); it != in_flight_.end()) {
                staging = std::max(staging, transfers_[it->second].done - now_);
                continue;
            }
            const double size = catalog_.at(d).size_mb;
            staging = std::max(staging, transfer_seconds(size, metrics.lookup(p.chosen_replicas.at(d), id),
                                                         config_.cost.transfer));
        }
        if (desc.executable_mb > 0.0 && desc.submit_site != id) {
            staging = std::max(staging, transfer_seconds(desc.executable_mb,
                                                         metrics.lookup(desc.submit_site, id),
                                                         config_.cost.transfer));
        }

        auto heap = slot_heap(site);
        double last_start = now_;
        replay(site, heap, -1, last_start);
        const double duration = run_seconds(desc, id);
        double finish = now_;
        for (int k = 0; k < desc.sub_job_count; ++k) {
            const double start = std::max({heap.top(), last_start, now_ + staging});
            heap.pop();
            heap.push(start + duration);
            last_start = start;
            finish = std::max(finish, start + duration);
        }
        return finish - now_;
    }

    /// Moves queued jobs whose estimated completion elsewhere beats staying.
    std::size_t maybe_export(const SiteId& id, const SimEvent& ev) {
        std::size_t moved = 0;
        auto& site = sites_.at(id);
        // Candidates in FCFS order: whole jobs, none of whose sub-jobs started.
        std::vector<int> candidates;
        for (int tid : site.queue) {
            const int job = tasks_[tid].job;
            if (job < 0 || jobs_[job].exported_from) continue;
            if (std::find(candidates.begin(), candidates.end(), job) != candidates.end()) continue;
            const auto& js = jobs_[job];
            const bool untouched = std::all_of(js.tasks.begin(), js.tasks.end(), [&](int t) {
                return tasks_[t].state == TaskState::Queued;
            });
            if (untouched) candidates.push_back(job);
        }

        for (int job : candidates) {
            if (topology_.sites().size() < 2) break;
            const double local = local_estimate(id, job);
            Placement remote;
            try {
                remote = decide(*jobs_[job].desc, {id});
            } catch (const Error& e) {
                if (e.code() == ErrorCode::NoEligibleSite) continue;
                throw;
            }
            const double elsewhere = remote_estimate(remote.exec_site, job, remote);
            if (!(elsewhere < local * config_.export_threshold)) continue;

            auto& js = jobs_[job];
            auto& q = site.queue;
            q.erase(std::remove_if(q.begin(), q.end(),
                                   [&](int tid) { return tasks_[tid].job == job; }),
                    q.end());
            js.exported_from = id;
            ++exported_;
            ++load_version_;
            if (config_.trace) {
                trace_.push_back({now_, ev.seq, EventKind::ExportEvaluated, job_name(job),
                                  remote.exec_site.str(),
                                  fmt::format("export from {} local={:.6g} remote={:.6g}",
                                              id.str(), local, elsewhere)});
            }
            enqueue_local(job, remote);
            ++moved;
        }
        dispatch_next(id);
        return moved;
    }

    // ------------------------------------------------------------- results

    SimResult collect() const {
        SimResult r;
        r.jobs.reserve(jobs_.size());
        for (const auto& js : jobs_) {
            JobRecord rec;
            rec.job = js.desc->id;
            rec.submit_site = js.desc->submit_site;
            rec.placement = js.placement;
            rec.sub_job_count = js.desc->sub_job_count;
            rec.submit_time = js.desc->submit_time;
            rec.transfer_done_time = js.transfer_done;
            rec.start_time = js.first_start;
            rec.finish_time = js.last_finish;
            rec.staged_out_time = js.staged_out;
            rec.exported_from = js.exported_from;
            r.jobs.push_back(std::move(rec));
        }
        for (const auto& t : tasks_) {
            TaskRecord tr;
            if (t.job >= 0) tr.job = jobs_[t.job].desc->id;
            tr.sub_job = t.sub;
            tr.site = t.site;
            tr.slot = t.slot;
            tr.start = t.start;
            tr.finish = t.finish;
            r.tasks.push_back(std::move(tr));
        }
        r.trace = trace_;
        for (const auto& [id, s] : sites_) r.peak_running[id] = s.peak;
        r.summary = summarize(r.jobs, std::string(policy_.name()));
        r.summary.exported = exported_;
        r.summary.transfers = transfers_.size();
        return r;
    }

    const ValidatedTopology& topology_;
    const SimConfig& config_;
    SchedulingPolicy& policy_;
    ReplicaCatalog catalog_;
    TelemetryFeed telemetry_;
    MatrixCache cache_;

    std::priority_queue<SimEvent, std::vector<SimEvent>, EventOrder> events_;
    std::uint64_t next_seq_ = 0;
    double now_ = 0.0;
    std::uint64_t load_version_ = 0;

    std::map<SiteId, SiteState> sites_;
    std::vector<JobState> jobs_;
    std::vector<Task> tasks_;
    std::vector<Transfer> transfers_;
    std::map<std::pair<DatasetId, SiteId>, int> in_flight_;
    std::vector<TraceRecord> trace_;

    std::size_t submitted_ = 0;
    std::size_t completed_ = 0;
    std::size_t exported_ = 0;
    int pending_background_ = 0;
};

}  // namespace

SimSummary summarize(const std::vector<JobRecord>& jobs, std::string scheduler) {
    SimSummary s;
    s.scheduler = std::move(scheduler);
    s.jobs = jobs.size();
    std::vector<double> queue, exec, completion;
    for (const auto& j : jobs) {
        queue.push_back(j.queue_time());
        exec.push_back(j.execution_time());
        completion.push_back(j.completion_time());
        s.makespan = std::max(s.makespan, j.staged_out_time);
        s.exported += j.exported_from.has_value();
    }
    s.mean_queue = mean_of(queue);
    s.median_queue = median_of(queue);
    s.mean_exec = mean_of(exec);
    s.median_exec = median_of(exec);
    s.mean_completion = mean_of(completion);
    s.median_completion = median_of(completion);
    return s;
}

SimResult simulate(const ValidatedTopology& topology, const std::vector<JobDescriptor>& jobs,
                   const SimConfig& config, SchedulingPolicy& policy) {
    for (const auto& j : jobs) validate_job(j);
    Engine engine(topology, jobs, config, policy);
    return engine.run();
}

SimResult simulate(const ValidatedTopology& topology, const std::vector<JobDescriptor>& jobs,
                   const SimConfig& config, PolicyKind policy) {
    auto p = make_policy(policy, config.seed);
    return simulate(topology, jobs, config, *p);
}

std::uint64_t telemetry_seed(std::uint64_t run_seed) {
    return run_seed * 0x9E3779B97F4A7C15ULL + 1;
}

GlobalLoadSnapshot initial_snapshot(const ValidatedTopology& topology, const SimConfig& config) {
    std::map<SiteId, QueueCounts> counts;
    for (const auto& [id, bg] : config.background) counts[id] = {bg.waiting, bg.running};
    return GlobalLoadSnapshot::build(topology, counts);
}

}  // namespace diana
