#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "diana/cost_engine.hpp"
#include "diana/replica_locator.hpp"

namespace diana {

/// Placement costs between ordered pairs of shortlisted sites.
///
/// The off-diagonal cells hold the cost of executing at `to` for a job
/// submitted from `from`. The cost of running at the submission site itself
/// is kept apart as the diagonal, which may be absent (pinned matrices).
class CostMatrix {
public:
    CostMatrix() = default;
    explicit CostMatrix(std::vector<SiteId> sites);

    /// A matrix with externally supplied totals. Every off-diagonal pair of
    /// `sites` must be present; throws InvalidArgument otherwise.
    static CostMatrix from_totals(std::vector<SiteId> sites,
                                  const std::map<std::pair<SiteId, SiteId>, double>& totals);

    void set(const SiteId& from, const SiteId& to, const CostBreakdown& cost);

    const std::vector<SiteId>& sites() const { return sites_; }
    bool contains(const SiteId& site) const;

    /// Off-diagonal totals.
    const std::map<std::pair<SiteId, SiteId>, double>& cells() const { return cells_; }
    const std::map<SiteId, double>& diagonal() const { return diagonal_; }

    std::optional<double> cost(const SiteId& from, const SiteId& to) const;
    std::optional<CostBreakdown> breakdown(const SiteId& from, const SiteId& to) const;

    /// Cheapest destination in the row of `from` (diagonal included when
    /// present). Ties go to the lower site id.
    SiteId row_minimum(const SiteId& from) const;

private:
    std::vector<SiteId> sites_;
    std::map<std::pair<SiteId, SiteId>, double> cells_;
    std::map<SiteId, double> diagonal_;
    std::map<std::pair<SiteId, SiteId>, CostBreakdown> detail_;
};

struct Placement {
    JobId job;
    SiteId exec_site;
    std::map<DatasetId, SiteId> chosen_replicas;
    CostBreakdown breakdown;
    double decided_at = 0.0;

    bool operator==(const Placement&) const = default;
};

struct MatchmakerOptions {
    std::size_t shortlist_k = 5;
};

/// Key under which a cost matrix may be reused: the matrix depends on the
/// telemetry epoch, the queue snapshot and the job's data footprint, not
/// on who submitted the job.
struct MatrixKey {
    std::uint64_t telemetry_epoch = 0;
    std::uint64_t load_version = 0;
    std::string job_signature;

    auto operator<=>(const MatrixKey&) const = default;
};

/// Shared cache of cost matrices. Entries from an older epoch or load
/// version are dropped when a newer key is seen.
class MatrixCache {
public:
    std::shared_ptr<const CostMatrix> get_or_build(const MatrixKey& key,
                                                   const std::function<CostMatrix()>& build);
    std::size_t hits() const;
    std::size_t misses() const;

private:
    mutable std::mutex mutex_;
    std::uint64_t epoch_ = 0;
    std::uint64_t load_version_ = 0;
    std::map<std::string, std::shared_ptr<const CostMatrix>> entries_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

std::string job_signature(const JobDescriptor& job, const std::set<SiteId>& exclude = {});

/// Phase-two matchmaking over a fixed view of the Grid.
class Matchmaker {
public:
    Matchmaker(GridView view, CostModel model, MatchmakerOptions options = {});

    /// Reuse cost matrices from `cache` for the given epoch and load version.
    void attach_cache(MatrixCache* cache, std::uint64_t telemetry_epoch, std::uint64_t load_version);

    /// Sites ranked by computation cost plus the cheapest-replica
    /// data-transfer cost (input and staging terms); the first
    /// min(k, |eligible|) are returned. Sites in `exclude` or too slow for
    /// the job's min_power_per_cpu are not eligible.
    std::vector<SiteId> shortlist_sites(const JobDescriptor& job,
                                        const std::set<SiteId>& exclude = {}) const;

    /// Total cost for every ordered pair of the shortlist (plus the
    /// diagonal), each using the best replica of every dataset relative to
    /// the execution site. Throws MissingLink for an absent ordered pair.
    CostMatrix build_cost_matrix(const std::vector<SiteId>& shortlist,
                                 const JobDescriptor& job) const;

    /// Selects the execution site in the submitter's row of the cost matrix
    /// and the best replica of each input dataset for it.
    Placement get_best_computing_element(const JobDescriptor& job, double now = 0.0,
                                         const std::set<SiteId>& exclude = {}) const;

    /// Best replica of each input dataset relative to `exec_site`.
    std::map<DatasetId, SiteId> best_replicas(const JobDescriptor& job,
                                              const SiteId& exec_site) const;

    /// Total cost of running at exec_site with the best replicas.
    CostBreakdown evaluate(const JobDescriptor& job, const SiteId& exec_site,
                           const SiteId& submit_site) const;

    const GridView& view() const { return view_; }
    const CostModel& model() const { return model_; }
    DataLocationService locator() const;

private:
    double shortlist_score(const JobDescriptor& job, const SiteId& site) const;

    GridView view_;
    CostModel model_;
    MatchmakerOptions options_;
    MatrixCache* cache_ = nullptr;
    std::uint64_t epoch_ = 0;
    std::uint64_t load_version_ = 0;
};

}  // namespace diana
