#include "diana/matchmaker.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace diana {

// --------------------------------------------------------------- CostMatrix

CostMatrix::CostMatrix(std::vector<SiteId> sites) : sites_(std::move(sites)) {}

CostMatrix CostMatrix::from_totals(std::vector<SiteId> sites,
                                   const std::map<std::pair<SiteId, SiteId>, double>& totals) {
    CostMatrix m(std::move(sites));
    for (const auto& [key, total] : totals) {
        if (!m.contains(key.first) || !m.contains(key.second)) {
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("cost given for {} -> {}, outside the site list",
                                    key.first.str(), key.second.str()));
        }
        if (total < 0.0) {
            throw Error(ErrorCode::InvalidArgument, "costs must be non-negative");
        }
        m.set(key.first, key.second, CostBreakdown{0.0, 0.0, 0.0, total});
    }
    for (const auto& from : m.sites_) {
        for (const auto& to : m.sites_) {
            if (from != to && !m.cells_.count({from, to})) {
                throw Error(ErrorCode::InvalidArgument,
                            fmt::format("cost matrix has no cell {} -> {}", from.str(), to.str()));
            }
        }
    }
    return m;
}

void CostMatrix::set(const SiteId& from, const SiteId& to, const CostBreakdown& cost) {
    if (from == to) {
        diagonal_[from] = cost.total;
    } else {
        cells_[{from, to}] = cost.total;
    }
    detail_[{from, to}] = cost;
}

bool CostMatrix::contains(const SiteId& site) const {
    return std::find(sites_.begin(), sites_.end(), site) != sites_.end();
}

std::optional<double> CostMatrix::cost(const SiteId& from, const SiteId& to) const {
    if (from == to) {
        auto it = diagonal_.find(from);
        return it == diagonal_.end() ? std::nullopt : std::optional<double>(it->second);
    }
    auto it = cells_.find({from, to});
    return it == cells_.end() ? std::nullopt : std::optional<double>(it->second);
}

std::optional<CostBreakdown> CostMatrix::breakdown(const SiteId& from, const SiteId& to) const {
    auto it = detail_.find({from, to});
    return it == detail_.end() ? std::nullopt : std::optional<CostBreakdown>(it->second);
}

SiteId CostMatrix::row_minimum(const SiteId& from) const {
    std::optional<SiteId> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& to : sites_) {
        const auto c = cost(from, to);
        if (!c) continue;
        if (!best || *c < best_cost || (*c == best_cost && to < *best)) {
            best = to;
            best_cost = *c;
        }
    }
    if (!best) {
        throw Error(ErrorCode::UnknownSite,
                    fmt::format("cost matrix has no row for '{}'", from.str()));
    }
    return *best;
}

// -------------------------------------------------------------- MatrixCache

std::shared_ptr<const CostMatrix> MatrixCache::get_or_build(
    const MatrixKey& key, const std::function<CostMatrix()>& build) {
    {
        std::lock_guard lock(mutex_);
        if (key.telemetry_epoch != epoch_ || key.load_version != load_version_) {
            entries_.clear();
            epoch_ = key.telemetry_epoch;
            load_version_ = key.load_version;
        }
        if (auto it = entries_.find(key.job_signature); it != entries_.end()) {
            ++hits_;
            return it->second;
        }
    }
    // Built outside the lock; a concurrent builder of the same key computes
    // an identical matrix, so whichever insert wins is fine.
    auto built = std::make_shared<const CostMatrix>(build());
    std::lock_guard lock(mutex_);
    ++misses_;
    if (key.telemetry_epoch == epoch_ && key.load_version == load_version_) {
        entries_.emplace(key.job_signature, built);
    }
    return built;
}

std::size_t MatrixCache::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

std::size_t MatrixCache::misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
}

std::string job_signature(const JobDescriptor& job, const std::set<SiteId>& exclude) {
    std::vector<std::string> ds;
    for (const auto& d : job.input_datasets) ds.push_back(d.str());
    std::sort(ds.begin(), ds.end());
    std::string sig = fmt::format("{}|{}|{}|{}|{}", fmt::join(ds, ","), job.executable_mb,
                                  job.output_mb, job.sub_job_count, job.min_power_per_cpu);
    for (const auto& s : exclude) sig += "|!" + s.str();
    return sig;
}

// --------------------------------------------------------------- Matchmaker

Matchmaker::Matchmaker(GridView view, CostModel model, MatchmakerOptions options)
    : view_(view), model_(model), options_(options) {
    if (options_.shortlist_k < 1) {
        throw Error(ErrorCode::InvalidArgument, "shortlist size k must be >= 1");
    }
}

void Matchmaker::attach_cache(MatrixCache* cache, std::uint64_t telemetry_epoch,
                              std::uint64_t load_version) {
    cache_ = cache;
    epoch_ = telemetry_epoch;
    load_version_ = load_version;
}

DataLocationService Matchmaker::locator() const {
    return DataLocationService(view_.topology, view_.catalog, view_.metrics, model_.weights,
                               LocatorOptions{model_.dtc_losses_override, model_.transfer});
}

std::map<DatasetId, SiteId> Matchmaker::best_replicas(const JobDescriptor& job,
                                                      const SiteId& exec_site) const {
    const auto dls = locator();
    std::map<DatasetId, SiteId> out;
    for (const auto& d : job.input_datasets) out[d] = dls.get_best_storage_element(d, exec_site);
    return out;
}

double Matchmaker::shortlist_score(const JobDescriptor& job, const SiteId& site) const {
    // Computation plus storage cost only: with the site standing in for the
    // submitter, the submitter-dependent transfer term vanishes and the
    // ranking can be shared by jobs from any site.
    const auto replicas = best_replicas(job, site);
    return compute_cost(view_.topology.site(site), view_.load, model_.weights) +
           data_transfer_cost(job, view_.catalog, replicas, site, site,
                              model_.dtc_oracle(view_.metrics), model_.weights);
}

std::vector<SiteId> Matchmaker::shortlist_sites(const JobDescriptor& job,
                                                const std::set<SiteId>& exclude) const {
    std::vector<std::pair<double, SiteId>> scored;
    for (const auto& [id, site] : view_.topology.sites()) {
        if (exclude.count(id)) continue;
        if (site.power_per_cpu < job.min_power_per_cpu) continue;
        scored.emplace_back(shortlist_score(job, id), id);
    }
    std::sort(scored.begin(), scored.end());
    const auto n = std::min(options_.shortlist_k, scored.size());
    std::vector<SiteId> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(scored[i].second);
    return out;
}

CostBreakdown Matchmaker::evaluate(const JobDescriptor& job, const SiteId& exec_site,
                                   const SiteId& submit_site) const {
    return total_cost(job, best_replicas(job, exec_site), exec_site, submit_site, view_, model_);
}

CostMatrix Matchmaker::build_cost_matrix(const std::vector<SiteId>& shortlist,
                                         const JobDescriptor& job) const {
    if (shortlist.empty()) {
        throw Error(ErrorCode::InvalidArgument, "cannot build a cost matrix for an empty shortlist");
    }
    CostMatrix matrix(shortlist);
    for (const auto& to : shortlist) {
        const auto replicas = best_replicas(job, to);
        for (const auto& from : shortlist) {
            matrix.set(from, to, total_cost(job, replicas, to, from, view_, model_));
        }
    }
    return matrix;
}

Placement Matchmaker::get_best_computing_element(const JobDescriptor& job, double now,
                                                 const std::set<SiteId>& exclude) const {
    const auto shortlist = shortlist_sites(job, exclude);
    if (shortlist.empty()) {
        throw Error(ErrorCode::NoEligibleSite,
                    fmt::format("no eligible site for job '{}'", job.id.str()));
    }

    std::shared_ptr<const CostMatrix> matrix;
    if (cache_) {
        MatrixKey key{epoch_, load_version_, job_signature(job, exclude)};
        matrix = cache_->get_or_build(key, [&] { return build_cost_matrix(shortlist, job); });
    } else {
        matrix = std::make_shared<const CostMatrix>(build_cost_matrix(shortlist, job));
    }

    const bool submitter_listed = matrix->contains(job.submit_site);
    std::optional<SiteId> best;
    CostBreakdown best_cost;
    for (const auto& to : shortlist) {
        const CostBreakdown c = submitter_listed ? *matrix->breakdown(job.submit_site, to)
                                                 : evaluate(job, to, job.submit_site);
        if (!best || c.total < best_cost.total || (c.total == best_cost.total && to < *best)) {
            best = to;
            best_cost = c;
        }
    }

    Placement p;
    p.job = job.id;
    p.exec_site = *best;
    p.chosen_replicas = best_replicas(job, *best);
    p.breakdown = best_cost;
    p.decided_at = now;
    return p;
}

}  // namespace diana
