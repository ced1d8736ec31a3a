#pragma once

// Domain types shared by every part of the scheduler and simulator.
//
// Units are fixed across the library: data in megabytes, bandwidth in
// megabits/second, time in seconds, RTT and jitter in milliseconds.

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diana/error.hpp"

namespace diana {

/// Opaque, totally ordered identifier. The tag keeps site, dataset and job
/// ids from being mixed up.
template <class Tag>
class Id {
public:
    Id() = default;
    explicit Id(std::string value) : value_(std::move(value)) {}

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    auto operator<=>(const Id&) const = default;

private:
    std::string value_;
};

struct SiteTag {};
struct DatasetTag {};
struct JobTag {};

using SiteId = Id<SiteTag>;
using DatasetId = Id<DatasetTag>;
using JobId = Id<JobTag>;

/// Megabytes per gigabyte, as used by the cost arithmetic ("100*1024").
inline constexpr double kMegabytesPerGigabyte = 1024.0;
inline constexpr double kBytesPerMegabyte = 1024.0 * 1024.0;

struct SiteDescriptor {
    SiteId id;
    int cpu_count = 1;
    double power_per_cpu = 1.0;  // compute units per second
    /// Room for dynamically replicated datasets; 0 means unlimited.
    double storage_capacity_bytes = 0.0;
    std::set<DatasetId> hosted_datasets;

    /// P_i: processing power of the whole site.
    double total_power() const { return cpu_count * power_per_cpu; }

    bool operator==(const SiteDescriptor&) const = default;
};

/// Directed observation of one WAN path. (src,dst) and (dst,src) are
/// independent entries.
struct LinkMetrics {
    SiteId src;
    SiteId dst;
    double rtt_ms = 0.0;
    double loss_rate = 0.0;
    double jitter_ms = 0.0;
    double bandwidth_mbps = 1.0;
    double observed_at = 0.0;

    /// The implicit metrics of a site talking to itself: zero latency,
    /// zero loss, unbounded bandwidth.
    static LinkMetrics intra_site(const SiteId& site);

    bool is_intra_site() const { return src == dst; }

    /// Throws NonPositiveBandwidth / InvalidMetric.
    void validate() const;

    bool operator==(const LinkMetrics&) const = default;
};

struct DatasetDescriptor {
    DatasetId id;
    double size_mb = 0.0;
    std::set<SiteId> replicas;

    bool operator==(const DatasetDescriptor&) const = default;
};

struct JobDescriptor {
    JobId id;
    SiteId submit_site;
    std::vector<DatasetId> input_datasets;
    double executable_mb = 0.0;  // AD
    double output_mb = 0.0;      // OD
    double compute_demand = 1.0; // per sub-job, compute units
    int sub_job_count = 1;
    double submit_time = 0.0;
    // Candidate sites with a slower per-CPU power are not eligible.
    double min_power_per_cpu = 0.0;

    bool operator==(const JobDescriptor&) const = default;
};

/// Importance weights of the cost model. There is no w4: the numbering
/// skips from w3 to w5 and scenario files use these names as keys.
struct WeightVector {
    double w1 = 1.0;  // RTT
    double w2 = 1.0;  // packet loss
    double w3 = 1.0;  // jitter
    double w5 = 1.0;  // local queue
    double w6 = 1.0;  // global queue
    double w7 = 1.0;  // site load
    double w8 = 1.0;  // input data transfer
    double w9 = 1.0;  // executable + output transfer from/to the submitter
    double w10 = 1.0; // staging at the candidate site

    static constexpr double kMin = 1.0;
    static constexpr double kMax = 20.0;

    /// Each weight must lie in [1, 20]; 0 is accepted to switch a term off.
    void validate() const;

    WeightVector scaled(double factor) const;

    /// (name, value) pairs in declaration order.
    std::vector<std::pair<std::string, double>> named() const;

    bool operator==(const WeightVector&) const = default;
};

/// Directed link table. Lookups with src == dst yield the intra-site
/// sentinel; any other absent pair is a MissingLink error.
class LinkTable {
public:
    LinkTable() = default;
    explicit LinkTable(std::span<const LinkMetrics> links);

    void insert(const LinkMetrics& m);
    bool contains(const SiteId& src, const SiteId& dst) const;
    const LinkMetrics* find(const SiteId& src, const SiteId& dst) const;
    LinkMetrics lookup(const SiteId& src, const SiteId& dst) const;

    std::size_t size() const { return links_.size(); }
    const std::map<std::pair<SiteId, SiteId>, LinkMetrics>& entries() const { return links_; }
    std::vector<LinkMetrics> to_vector() const;

    bool operator==(const LinkTable&) const = default;

private:
    std::map<std::pair<SiteId, SiteId>, LinkMetrics> links_;
};

/// Dataset -> replica locations. Updates return a new catalog so that
/// readers holding the old one never observe a change.
class ReplicaCatalog {
public:
    ReplicaCatalog() = default;
    explicit ReplicaCatalog(std::span<const DatasetDescriptor> datasets);

    bool contains(const DatasetId& id) const { return datasets_.count(id) != 0; }
    const DatasetDescriptor& at(const DatasetId& id) const;  // UnknownDataset
    bool has_replica(const DatasetId& id, const SiteId& site) const;

    [[nodiscard]] ReplicaCatalog with_replica(const DatasetId& id, const SiteId& site) const;

    std::size_t size() const { return datasets_.size(); }
    const std::map<DatasetId, DatasetDescriptor>& entries() const { return datasets_; }
    std::vector<DatasetDescriptor> to_vector() const;

    bool operator==(const ReplicaCatalog&) const = default;

private:
    std::map<DatasetId, DatasetDescriptor> datasets_;
};

/// A topology that has passed validate_topology. Immutable.
class ValidatedTopology {
public:
    const std::map<SiteId, SiteDescriptor>& sites() const { return sites_; }
    const SiteDescriptor& site(const SiteId& id) const;  // UnknownSite
    bool has_site(const SiteId& id) const { return sites_.count(id) != 0; }
    std::vector<SiteId> site_ids() const;

    const LinkTable& links() const { return links_; }
    const ReplicaCatalog& catalog() const { return catalog_; }

    /// True when `site` has an outgoing link to every other site.
    bool fully_connected_from(const SiteId& site) const;

    bool operator==(const ValidatedTopology&) const = default;

private:
    friend ValidatedTopology validate_topology(std::span<const SiteDescriptor>,
                                               std::span<const LinkMetrics>,
                                               std::span<const DatasetDescriptor>,
                                               std::span<const JobDescriptor>);
    std::map<SiteId, SiteDescriptor> sites_;
    LinkTable links_;
    ReplicaCatalog catalog_;
};

/// Checks ids, metric ranges and replica references, and that a link
/// exists for every ordered pair a placement of `jobs` could traverse:
/// submitter <-> every site, and every replica of a referenced dataset ->
/// every site.
ValidatedTopology validate_topology(std::span<const SiteDescriptor> sites,
                                    std::span<const LinkMetrics> links,
                                    std::span<const DatasetDescriptor> datasets,
                                    std::span<const JobDescriptor> jobs = {});

/// Re-validation of an already validated topology; returns an equal value.
ValidatedTopology validate_topology(const ValidatedTopology& topology,
                                    std::span<const JobDescriptor> jobs = {});

/// Throws InvalidJob for a malformed descriptor (no topology checks).
void validate_job(const JobDescriptor& job);

/// Sum of the job's input dataset sizes (ID), in MB.
double input_size_mb(const JobDescriptor& job, const ReplicaCatalog& catalog);

}  // namespace diana
