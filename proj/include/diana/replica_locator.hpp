#pragma once

// In-process Data Location Service: replica listing and cost ranking of
// replicas against a chosen computing element.

#include <cstddef>
#include <optional>
#include <set>
#include <vector>

#include "diana/cost_engine.hpp"

namespace diana {

struct ReplicaEntry {
    SiteId replica_site;
    double transfer_cost = 0.0;
    double estimated_transfer_seconds = 0.0;

    bool operator==(const ReplicaEntry&) const = default;
};

/// Sorted ascending by transfer_cost, ties by site id.
struct ReplicaRanking {
    DatasetId dataset;
    SiteId target_ce;
    std::vector<ReplicaEntry> entries;

    bool operator==(const ReplicaRanking&) const = default;
};

/// Window over a ranking; the default returns every entry.
struct Page {
    std::size_t offset = 0;
    std::optional<std::size_t> limit;
};

struct LocatorOptions {
    /// Pins the losses in NC(r, ce) (see NetworkCostOracle).
    std::optional<double> losses_override;
    TransferModel transfer;
};

class DataLocationService {
public:
    DataLocationService(const ValidatedTopology& topology, const ReplicaCatalog& catalog,
                        const LinkTable& metrics, const WeightVector& weights,
                        LocatorOptions options = {});

    /// Throws UnknownDataset.
    std::set<SiteId> list_replicas(const DatasetId& dataset) const;

    /// transfer_cost = size_mb * NC(replica -> ce). Throws UnknownDataset,
    /// UnknownSite or MissingLink.
    ReplicaRanking rank_replicas(const DatasetId& dataset, const SiteId& ce,
                                 Page page = {}) const;

    SiteId get_best_storage_element(const DatasetId& dataset, const SiteId& best_ce) const;

private:
    const ValidatedTopology* topology_;
    const ReplicaCatalog* catalog_;
    const LinkTable* metrics_;
    WeightVector weights_;
    LocatorOptions options_;
};

}  // namespace diana
