#include "diana/grid_model.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace diana {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DuplicateSiteId: return "DuplicateSiteId";
        case ErrorCode::DuplicateDatasetId: return "DuplicateDatasetId";
        case ErrorCode::UnknownReplicaSite: return "UnknownReplicaSite";
        case ErrorCode::UnknownSite: return "UnknownSite";
        case ErrorCode::UnknownDataset: return "UnknownDataset";
        case ErrorCode::MissingLink: return "MissingLink";
        case ErrorCode::NonPositiveBandwidth: return "NonPositiveBandwidth";
        case ErrorCode::InvalidMetric: return "InvalidMetric";
        case ErrorCode::InvalidWeight: return "InvalidWeight";
        case ErrorCode::InvalidJob: return "InvalidJob";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ZeroLoss: return "ZeroLoss";
        case ErrorCode::ZeroRtt: return "ZeroRtt";
        case ErrorCode::NoEligibleSite: return "NoEligibleSite";
        case ErrorCode::EmptyDatasetPool: return "EmptyDatasetPool";
        case ErrorCode::Deadlock: return "Deadlock";
        case ErrorCode::Scenario: return "Scenario";
    }
    return "Unknown";
}

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

LinkMetrics LinkMetrics::intra_site(const SiteId& site) {
    LinkMetrics m;
    m.src = site;
    m.dst = site;
    m.bandwidth_mbps = std::numeric_limits<double>::infinity();
    return m;
}

void LinkMetrics::validate() const {
    const auto name = fmt::format("{}->{}", src.str(), dst.str());
    if (!(bandwidth_mbps > 0.0) || std::isnan(bandwidth_mbps)) {
        throw Error(ErrorCode::NonPositiveBandwidth,
                    fmt::format("link {}: bandwidth must be > 0 Mbps (got {})", name, bandwidth_mbps));
    }
    if (!(loss_rate >= 0.0 && loss_rate <= 1.0)) {
        throw Error(ErrorCode::InvalidMetric,
                    fmt::format("link {}: loss rate {} outside [0,1]", name, loss_rate));
    }
    if (!finite_nonneg(rtt_ms) || !finite_nonneg(jitter_ms)) {
        throw Error(ErrorCode::InvalidMetric,
                    fmt::format("link {}: rtt and jitter must be finite and >= 0", name));
    }
}

void WeightVector::validate() const {
    for (const auto& [name, value] : named()) {
        if (value == 0.0) continue;
        if (!(value >= kMin && value <= kMax)) {
            throw Error(ErrorCode::InvalidWeight,
                        fmt::format("weight {} = {} is outside the allowed range 1-20 "
                                    "(0 disables the term)",
                                    name, value));
        }
    }
}

WeightVector WeightVector::scaled(double factor) const {
    WeightVector w = *this;
    for (double* v : {&w.w1, &w.w2, &w.w3, &w.w5, &w.w6, &w.w7, &w.w8, &w.w9, &w.w10}) {
        *v *= factor;
    }
    return w;
}

std::vector<std::pair<std::string, double>> WeightVector::named() const {
    return {{"w1", w1}, {"w2", w2}, {"w3", w3}, {"w5", w5},  {"w6", w6},
            {"w7", w7}, {"w8", w8}, {"w9", w9}, {"w10", w10}};
}

// ---------------------------------------------------------------- LinkTable

LinkTable::LinkTable(std::span<const LinkMetrics> links) {
    for (const auto& m : links) insert(m);
}

void LinkTable::insert(const LinkMetrics& m) { links_[{m.src, m.dst}] = m; }

bool LinkTable::contains(const SiteId& src, const SiteId& dst) const {
    return src == dst || links_.count({src, dst}) != 0;
}

const LinkMetrics* LinkTable::find(const SiteId& src, const SiteId& dst) const {
    auto it = links_.find({src, dst});
    return it == links_.end() ? nullptr : &it->second;
}

LinkMetrics LinkTable::lookup(const SiteId& src, const SiteId& dst) const {
    if (src == dst) return LinkMetrics::intra_site(src);
    if (const auto* m = find(src, dst)) return *m;
    throw Error(ErrorCode::MissingLink,
                fmt::format("no link metrics for {} -> {}", src.str(), dst.str()));
}

std::vector<LinkMetrics> LinkTable::to_vector() const {
    std::vector<LinkMetrics> out;
    out.reserve(links_.size());
    for (const auto& [key, m] : links_) out.push_back(m);
    return out;
}

// ----------------------------------------------------------- ReplicaCatalog

ReplicaCatalog::ReplicaCatalog(std::span<const DatasetDescriptor> datasets) {
    for (const auto& d : datasets) datasets_[d.id] = d;
}

const DatasetDescriptor& ReplicaCatalog::at(const DatasetId& id) const {
    auto it = datasets_.find(id);
    if (it == datasets_.end()) {
        throw Error(ErrorCode::UnknownDataset, fmt::format("unknown dataset '{}'", id.str()));
    }
    return it->second;
}

bool ReplicaCatalog::has_replica(const DatasetId& id, const SiteId& site) const {
    auto it = datasets_.find(id);
    return it != datasets_.end() && it->second.replicas.count(site) != 0;
}

ReplicaCatalog ReplicaCatalog::with_replica(const DatasetId& id, const SiteId& site) const {
    ReplicaCatalog next = *this;
    auto it = next.datasets_.find(id);
    if (it == next.datasets_.end()) {
        throw Error(ErrorCode::UnknownDataset, fmt::format("unknown dataset '{}'", id.str()));
    }
    it->second.replicas.insert(site);
    return next;
}

std::vector<DatasetDescriptor> ReplicaCatalog::to_vector() const {
    std::vector<DatasetDescriptor> out;
    out.reserve(datasets_.size());
    for (const auto& [id, d] : datasets_) out.push_back(d);
    return out;
}

// -------------------------------------------------------- ValidatedTopology

const SiteDescriptor& ValidatedTopology::site(const SiteId& id) const {
    auto it = sites_.find(id);
    if (it == sites_.end()) {
        throw Error(ErrorCode::UnknownSite, fmt::format("unknown site '{}'", id.str()));
    }
    return it->second;
}

std::vector<SiteId> ValidatedTopology::site_ids() const {
    std::vector<SiteId> ids;
    ids.reserve(sites_.size());
    for (const auto& [id, s] : sites_) ids.push_back(id);
    return ids;
}

bool ValidatedTopology::fully_connected_from(const SiteId& site) const {
    for (const auto& [other, s] : sites_) {
        if (!links_.contains(site, other)) return false;
    }
    return true;
}

void validate_job(const JobDescriptor& job) {
    auto fail = [&](const std::string& what) {
        throw Error(ErrorCode::InvalidJob, fmt::format("job '{}': {}", job.id.str(), what));
    };
    if (job.id.empty()) fail("empty id");
    if (job.sub_job_count < 1) fail("sub_job_count must be >= 1");
    if (!(job.compute_demand > 0.0) || !std::isfinite(job.compute_demand)) {
        fail("compute_demand must be > 0");
    }
    if (!finite_nonneg(job.executable_mb) || !finite_nonneg(job.output_mb)) {
        fail("executable and output sizes must be >= 0");
    }
    if (!finite_nonneg(job.submit_time)) fail("submit_time must be >= 0");
    if (!finite_nonneg(job.min_power_per_cpu)) fail("min_power_per_cpu must be >= 0");
    std::set<DatasetId> seen;
    for (const auto& d : job.input_datasets) {
        if (!seen.insert(d).second) fail(fmt::format("dataset '{}' listed twice", d.str()));
    }
}

ValidatedTopology validate_topology(std::span<const SiteDescriptor> sites,
                                    std::span<const LinkMetrics> links,
                                    std::span<const DatasetDescriptor> datasets,
                                    std::span<const JobDescriptor> jobs) {
    ValidatedTopology topo;

    for (const auto& s : sites) {
        if (s.id.empty()) throw Error(ErrorCode::InvalidArgument, "site with empty id");
        if (s.cpu_count < 1) {
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("site '{}': cpu_count must be >= 1", s.id.str()));
        }
        if (!(s.power_per_cpu > 0.0) || !std::isfinite(s.power_per_cpu)) {
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("site '{}': power_per_cpu must be > 0", s.id.str()));
        }
        if (!finite_nonneg(s.storage_capacity_bytes)) {
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("site '{}': storage capacity must be >= 0", s.id.str()));
        }
        if (!topo.sites_.emplace(s.id, s).second) {
            throw Error(ErrorCode::DuplicateSiteId,
                        fmt::format("duplicate site id '{}'", s.id.str()));
        }
    }

    std::map<DatasetId, DatasetDescriptor> catalog;
    for (const auto& d : datasets) {
        if (!(d.size_mb > 0.0) || !std::isfinite(d.size_mb)) {
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("dataset '{}': size must be > 0 MB", d.id.str()));
        }
        if (d.replicas.empty()) {
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("dataset '{}' has no replicas", d.id.str()));
        }
        for (const auto& r : d.replicas) {
            if (!topo.sites_.count(r)) {
                throw Error(ErrorCode::UnknownReplicaSite,
                            fmt::format("dataset '{}' has a replica on unknown site '{}'",
                                        d.id.str(), r.str()));
            }
        }
        if (!catalog.emplace(d.id, d).second) {
            throw Error(ErrorCode::DuplicateDatasetId,
                        fmt::format("duplicate dataset id '{}'", d.id.str()));
        }
    }

    // A site may also announce what it hosts; both views are merged.
    for (const auto& [id, s] : topo.sites_) {
        for (const auto& d : s.hosted_datasets) {
            auto it = catalog.find(d);
            if (it == catalog.end()) {
                throw Error(ErrorCode::UnknownDataset,
                            fmt::format("site '{}' hosts unknown dataset '{}'", id.str(), d.str()));
            }
            it->second.replicas.insert(id);
        }
    }
    for (auto& [id, s] : topo.sites_) s.hosted_datasets.clear();
    for (const auto& [id, d] : catalog) {
        for (const auto& r : d.replicas) topo.sites_.at(r).hosted_datasets.insert(id);
    }

    for (const auto& m : links) {
        if (!topo.sites_.count(m.src) || !topo.sites_.count(m.dst)) {
            throw Error(ErrorCode::UnknownSite,
                        fmt::format("link {} -> {} references an unknown site", m.src.str(),
                                    m.dst.str()));
        }
        if (m.src == m.dst) {
            throw Error(ErrorCode::InvalidMetric,
                        fmt::format("link {} -> {}: intra-site metrics are implicit", m.src.str(),
                                    m.dst.str()));
        }
        m.validate();
        topo.links_.insert(m);
    }

    std::vector<DatasetDescriptor> ds;
    for (const auto& [id, d] : catalog) ds.push_back(d);
    topo.catalog_ = ReplicaCatalog(ds);

    auto require = [&](const SiteId& src, const SiteId& dst, const JobDescriptor& job) {
        if (!topo.links_.contains(src, dst)) {
            throw Error(ErrorCode::MissingLink,
                        fmt::format("job '{}' may need link {} -> {}, which has no metrics",
                                    job.id.str(), src.str(), dst.str()));
        }
    };
    std::set<JobId> job_ids;
    for (const auto& job : jobs) {
        validate_job(job);
        if (!job_ids.insert(job.id).second) {
            throw Error(ErrorCode::InvalidJob, fmt::format("duplicate job id '{}'", job.id.str()));
        }
        if (!topo.sites_.count(job.submit_site)) {
            throw Error(ErrorCode::UnknownSite,
                        fmt::format("job '{}' submitted from unknown site '{}'", job.id.str(),
                                    job.submit_site.str()));
        }
        for (const auto& [j, s] : topo.sites_) {
            require(job.submit_site, j, job);
            require(j, job.submit_site, job);
        }
        for (const auto& d : job.input_datasets) {
            const auto& desc = topo.catalog_.at(d);
            for (const auto& r : desc.replicas) {
                for (const auto& [j, s] : topo.sites_) require(r, j, job);
            }
        }
    }
    return topo;
}

ValidatedTopology validate_topology(const ValidatedTopology& topology,
                                    std::span<const JobDescriptor> jobs) {
    std::vector<SiteDescriptor> sites;
    for (const auto& [id, s] : topology.sites()) sites.push_back(s);
    const auto links = topology.links().to_vector();
    const auto datasets = topology.catalog().to_vector();
    return validate_topology(sites, links, datasets, jobs);
}

double input_size_mb(const JobDescriptor& job, const ReplicaCatalog& catalog) {
    double total = 0.0;
    for (const auto& d : job.input_datasets) total += catalog.at(d).size_mb;
    return total;
}

}  // namespace diana
