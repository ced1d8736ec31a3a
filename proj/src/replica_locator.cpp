#include "diana/replica_locator.hpp"

#include <algorithm>

namespace diana {

DataLocationService::DataLocationService(const ValidatedTopology& topology,
                                         const ReplicaCatalog& catalog, const LinkTable& metrics,
                                         const WeightVector& weights, LocatorOptions options)
    : topology_(&topology), catalog_(&catalog), metrics_(&metrics), weights_(weights),
      options_(options) {}

std::set<SiteId> DataLocationService::list_replicas(const DatasetId& dataset) const {
    return catalog_->at(dataset).replicas;
}

ReplicaRanking DataLocationService::rank_replicas(const DatasetId& dataset, const SiteId& ce,
                                                  Page page) const {
    const auto& desc = catalog_->at(dataset);
    topology_->site(ce);

    const NetworkCostOracle nc(*metrics_, weights_, options_.losses_override);
    ReplicaRanking ranking{dataset, ce, {}};
    ranking.entries.reserve(desc.replicas.size());
    for (const auto& r : desc.replicas) {
        const LinkMetrics m = metrics_->lookup(r, ce);
        ranking.entries.push_back(
            {r, desc.size_mb * nc(r, ce), transfer_seconds(desc.size_mb, m, options_.transfer)});
    }
    // Replicas are iterated in id order, so a stable sort keeps ties by id.
    std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                     [](const ReplicaEntry& a, const ReplicaEntry& b) {
                         return a.transfer_cost < b.transfer_cost;
                     });

    if (page.offset > 0 || page.limit) {
        const auto n = ranking.entries.size();
        const auto first = std::min(page.offset, n);
        const auto last = page.limit ? std::min(n, first + *page.limit) : n;
        ranking.entries = std::vector<ReplicaEntry>(ranking.entries.begin() + first,
                                                    ranking.entries.begin() + last);
    }
    return ranking;
}

SiteId DataLocationService::get_best_storage_element(const DatasetId& dataset,
                                                     const SiteId& best_ce) const {
    return rank_replicas(dataset, best_ce).entries.front().replica_site;
}

}  // namespace diana
