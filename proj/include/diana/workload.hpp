#pragma once

// Synthetic job streams for physics analysis: Poisson
// arrivals, 0-10 input datasets per job, optional bulk bundles of
// sub-jobs sharing their inputs.

#include <cstdint>
#include <vector>

#include "diana/grid_model.hpp"

namespace diana {

template <class T>
struct Range {
    T min{};
    T max{};
};

struct WorkloadProfile {
    double jobs_per_day = 250.0;
    /// Jobs expected to run concurrently; descriptive, used to size
    /// topologies rather than by the generator.
    int parallel_target = 50;
    /// Datasets jobs read from; empty means every dataset in the topology.
    std::vector<DatasetId> dataset_pool;
    /// Sites jobs are submitted from; empty means every site.
    std::vector<SiteId> submit_sites;
    Range<int> inputs_per_job{0, 10};
    Range<double> demand{30.0, 3600.0};
    Range<double> executable_mb{1.0, 10.0};
    Range<double> output_mb{10.0, 100.0};
    double bulk_fraction = 0.0;
    Range<int> sub_jobs_per_bundle{2, 8};
    std::uint64_t seed = 0;

    /// Throws InvalidArgument for empty ranges or non-positive rates.
    void validate() const;
};

/// Jobs arriving in [0, horizon_seconds).
std::vector<JobDescriptor> generate(const WorkloadProfile& profile, double horizon_seconds,
                                    const ValidatedTopology& topology);

/// Exactly `count` jobs, continuing the same arrival process.
std::vector<JobDescriptor> generate_n(const WorkloadProfile& profile, std::size_t count,
                                      const ValidatedTopology& topology);

/// Parameters for a synthetic dataset catalog. Sizes are log-uniform
/// between 30 GB and 1.3 TB, divided by `scale_down` for desk-sized runs.
struct DatasetPoolSpec {
    std::size_t count = 0;
    double min_mb = 30.0 * kMegabytesPerGigabyte;
    double max_mb = 1.3 * kMegabytesPerGigabyte * kMegabytesPerGigabyte;
    double scale_down = 1000.0;
    Range<int> replicas{1, 2};
    std::uint64_t seed = 0;
};

std::vector<DatasetDescriptor> synthesize_datasets(const DatasetPoolSpec& spec,
                                                   const std::vector<SiteId>& sites);

}  // namespace diana
