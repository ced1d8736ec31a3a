#include "diana/workload.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include <fmt/format.h>

namespace diana {

namespace {

constexpr int kMaxInputsPerJob = 10;
constexpr double kSecondsPerDay = 86400.0;

template <class T>
void check_range(const Range<T>& r, const char* name, T lowest) {
    if (r.min > r.max || r.min < lowest) {
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("workload range '{}' is empty or below {}", name, lowest));
    }
}

class JobStream {
public:
    JobStream(const WorkloadProfile& profile, const ValidatedTopology& topology)
        : profile_(profile), sites_(profile.submit_sites), rng_(profile.seed),
          arrivals_(profile.jobs_per_day / kSecondsPerDay) {
        profile_.validate();
        if (sites_.empty()) sites_ = topology.site_ids();
        for (const auto& s : sites_) topology.site(s);
        if (sites_.empty()) throw Error(ErrorCode::InvalidArgument, "topology has no sites");
        if (profile_.dataset_pool.empty()) {
            for (const auto& [id, d] : topology.catalog().entries()) pool_.push_back(id);
        } else {
            for (const auto& id : profile_.dataset_pool) {
                topology.catalog().at(id);
                pool_.push_back(id);
            }
        }
        if (profile_.inputs_per_job.min > 0 && pool_.empty()) {
            throw Error(ErrorCode::EmptyDatasetPool,
                        "jobs need input datasets but the dataset pool is empty");
        }
    }

    double peek_arrival() {
        if (!pending_) {
            double t = clock_ + arrivals_(rng_);
            if (t <= clock_ && count_ > 0) t = std::nextafter(clock_, std::numeric_limits<double>::infinity());
            pending_ = t;
        }
        return *pending_;
    }

    JobDescriptor next() {
        JobDescriptor job;
        job.submit_time = peek_arrival();
        clock_ = job.submit_time;
        pending_.reset();
        job.id = JobId(fmt::format("job-{:05d}", ++count_));

        std::uniform_int_distribution<std::size_t> site_pick(0, sites_.size() - 1);
        job.submit_site = sites_[site_pick(rng_)];

        const int lo = std::min(profile_.inputs_per_job.min, kMaxInputsPerJob);
        const int hi = std::min(profile_.inputs_per_job.max, kMaxInputsPerJob);
        std::uniform_int_distribution<int> n_inputs(lo, hi);
        const auto wanted = std::min<std::size_t>(n_inputs(rng_), pool_.size());
        // Partial Fisher-Yates: distinct datasets in draw order.
        std::vector<DatasetId> pool = pool_;
        for (std::size_t i = 0; i < wanted; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng_)]);
            job.input_datasets.push_back(pool[i]);
        }

        job.compute_demand = uniform(profile_.demand);
        job.executable_mb = uniform(profile_.executable_mb);
        job.output_mb = uniform(profile_.output_mb);

        std::bernoulli_distribution bulk(profile_.bulk_fraction);
        if (bulk(rng_)) {
            std::uniform_int_distribution<int> subs(profile_.sub_jobs_per_bundle.min,
                                                    profile_.sub_jobs_per_bundle.max);
            job.sub_job_count = subs(rng_);
        }
        return job;
    }

private:
    double uniform(const Range<double>& r) {
        if (r.min == r.max) return r.min;
        std::uniform_real_distribution<double> d(r.min, r.max);
        return d(rng_);
    }

    WorkloadProfile profile_;
    std::vector<SiteId> sites_;
    std::vector<DatasetId> pool_;
    std::mt19937_64 rng_;
    std::exponential_distribution<double> arrivals_;
    double clock_ = 0.0;
    std::optional<double> pending_;
    std::size_t count_ = 0;
};

}  // namespace

void WorkloadProfile::validate() const {
    if (!(jobs_per_day > 0.0) || !std::isfinite(jobs_per_day)) {
        throw Error(ErrorCode::InvalidArgument, "jobs_per_day must be > 0");
    }
    if (parallel_target < 1) throw Error(ErrorCode::InvalidArgument, "parallel_target must be >= 1");
    check_range(inputs_per_job, "inputs_per_job", 0);
    check_range(demand, "demand", 0.0);
    if (!(demand.min > 0.0)) throw Error(ErrorCode::InvalidArgument, "demand must be > 0");
    check_range(executable_mb, "executable_mb", 0.0);
    check_range(output_mb, "output_mb", 0.0);
    check_range(sub_jobs_per_bundle, "sub_jobs_per_bundle", 1);
    if (!(bulk_fraction >= 0.0 && bulk_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "bulk_fraction must lie in [0, 1]");
    }
}

std::vector<JobDescriptor> generate(const WorkloadProfile& profile, double horizon_seconds,
                                    const ValidatedTopology& topology) {
    JobStream stream(profile, topology);
    std::vector<JobDescriptor> jobs;
    while (stream.peek_arrival() < horizon_seconds) jobs.push_back(stream.next());
    return jobs;
}

std::vector<JobDescriptor> generate_n(const WorkloadProfile& profile, std::size_t count,
                                      const ValidatedTopology& topology) {
    JobStream stream(profile, topology);
    std::vector<JobDescriptor> jobs;
    jobs.reserve(count);
    while (jobs.size() < count) jobs.push_back(stream.next());
    return jobs;
}

std::vector<DatasetDescriptor> synthesize_datasets(const DatasetPoolSpec& spec,
                                                   const std::vector<SiteId>& sites) {
    if (sites.empty() && spec.count > 0) {
        throw Error(ErrorCode::InvalidArgument, "cannot place datasets without sites");
    }
    if (!(spec.min_mb > 0.0 && spec.min_mb <= spec.max_mb && spec.scale_down > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "dataset size range is invalid");
    }
    check_range(spec.replicas, "replicas", 1);
    if (spec.count > 0 && static_cast<std::size_t>(spec.replicas.min) > sites.size()) {
        throw Error(ErrorCode::InvalidArgument, "more replicas requested than there are sites");
    }

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> log_size(std::log(spec.min_mb), std::log(spec.max_mb));
    std::vector<DatasetDescriptor> out;
    for (std::size_t i = 0; i < spec.count; ++i) {
        DatasetDescriptor d;
        d.id = DatasetId(fmt::format("ds-{:03d}", i + 1));
        d.size_mb = std::exp(log_size(rng)) / spec.scale_down;
        std::uniform_int_distribution<int> n_rep(spec.replicas.min,
                                                 std::min<int>(spec.replicas.max, sites.size()));
        const int n = n_rep(rng);
        std::vector<SiteId> pool = sites;
        for (int k = 0; k < n; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
            std::swap(pool[k], pool[pick(rng)]);
            d.replicas.insert(pool[k]);
        }
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace diana
