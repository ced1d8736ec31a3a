#pragma once

// Placement cost model: network, computation and data-transfer costs and
// their sum. Everything here is a pure function of its arguments.

#include <map>
#include <optional>

#include "diana/grid_model.hpp"

namespace diana {

struct CostBreakdown {
    double network_cost = 0.0;
    double compute_cost = 0.0;
    double data_transfer_cost = 0.0;
    double total = 0.0;

    static CostBreakdown of(double network, double compute, double data_transfer) {
        return {network, compute, data_transfer, network + compute + data_transfer};
    }

    bool operator==(const CostBreakdown&) const = default;
};

struct QueueCounts {
    int waiting = 0;
    int running = 0;
};

/// Queue state of the Grid as seen by the information service.
///
/// Q_i counts waiting jobs at site i and Q is their sum over all sites.
/// SiteLoad_i counts every job resident at the site (waiting and running)
/// per unit of processing power, so it reduces to Q_i / P_i on a site with
/// nothing running.
class GlobalLoadSnapshot {
public:
    GlobalLoadSnapshot() = default;

    /// Sites missing from `counts` are idle.
    static GlobalLoadSnapshot build(std::span<const SiteDescriptor> sites,
                                    const std::map<SiteId, QueueCounts>& counts);
    static GlobalLoadSnapshot build(const ValidatedTopology& topology,
                                    const std::map<SiteId, QueueCounts>& counts);

    int total_waiting_jobs() const { return total_waiting_; }
    bool contains(const SiteId& site) const { return sites_.count(site) != 0; }
    int queue(const SiteId& site) const { return entry(site).counts.waiting; }
    int running(const SiteId& site) const { return entry(site).counts.running; }
    double site_power(const SiteId& site) const { return entry(site).power; }
    double site_load(const SiteId& site) const;

    std::map<SiteId, QueueCounts> per_site_counts() const;

private:
    struct Entry {
        QueueCounts counts;
        double power = 1.0;
    };
    const Entry& entry(const SiteId& site) const;

    std::map<SiteId, Entry> sites_;
    int total_waiting_ = 0;
};

// ------------------------------------------------------------ network cost

/// Upper bound on the TCP rate in bytes/second:
/// (mss / rtt) * (1 / sqrt(loss)).
/// Throws ZeroRtt for rtt_ms <= 0 and ZeroLoss for loss_rate == 0.
double mathis_rate(double mss_bytes, double rtt_ms, double loss_rate);

/// RTT*w1 + loss*w2 + jitter*w3.
double losses(const LinkMetrics& metrics, const WeightVector& w);

/// Losses / bandwidth; exactly 0 for an intra-site path.
double network_cost(const LinkMetrics& metrics, const WeightVector& w);

struct TransferModel {
    double mss_bytes = 1460.0;
    double loss_floor = 1e-6;
};

/// Achievable rate on a link in Mbps: the nominal bandwidth, capped by the
/// Mathis bound with the loss rate floored at `loss_floor`. A zero RTT
/// leaves the bound unbounded, so the nominal bandwidth applies.
double effective_rate_mbps(const LinkMetrics& metrics, const TransferModel& model = {});

/// Seconds to move size_mb over the link; 0 within a site.
double transfer_seconds(double size_mb, const LinkMetrics& metrics,
                        const TransferModel& model = {});

/// NC(src, dst) as used inside the data-transfer cost. With
/// `losses_override` set, the weighted losses are replaced by that
/// constant, giving NC = override / bandwidth.
class NetworkCostOracle {
public:
    NetworkCostOracle(const LinkTable& links, const WeightVector& w,
                      std::optional<double> losses_override = std::nullopt,
                      double site_self_cost = 0.0)
        : links_(&links), weights_(w), losses_override_(losses_override),
          site_self_cost_(site_self_cost) {}

    double operator()(const SiteId& src, const SiteId& dst) const;

    /// NC(j): cost of staging inside the candidate site itself.
    double site_cost(const SiteId&) const { return site_self_cost_; }

private:
    const LinkTable* links_;
    WeightVector weights_;
    std::optional<double> losses_override_;
    double site_self_cost_;
};

// -------------------------------------------------------- computation cost

/// (Q_i/P_i)*w5 + (Q/P_i)*w6 + SiteLoad_i*w7. Throws UnknownSite when the
/// snapshot has no entry for the site.
double compute_cost(const SiteDescriptor& site, const GlobalLoadSnapshot& snapshot,
                    const WeightVector& w);

// ------------------------------------------------------ data transfer cost

/// Inputs that do not depend on the concrete replica choice.
struct TransferVolumes {
    double executable_mb = 0.0;  // AD
    double output_mb = 0.0;      // OD
    int sub_jobs = 1;            // N(j)
};

TransferVolumes volumes_of(const JobDescriptor& job);

/// w8*ID*NC(i,j) + w9*(AD+OD)*NC(local,j) + w10*(N(j)*(ID+AD)+OD)*NC(j),
/// with every input dataset read from the single `data_site`.
double data_transfer_cost(const JobDescriptor& job, const ReplicaCatalog& catalog,
                          const SiteId& data_site, const SiteId& exec_site,
                          const SiteId& submit_site, const NetworkCostOracle& nc,
                          const WeightVector& w);

/// Same, with a replica chosen per dataset; the input term becomes
/// w8 * sum_d size_d * NC(r_d, j).
double data_transfer_cost(const JobDescriptor& job, const ReplicaCatalog& catalog,
                          const std::map<DatasetId, SiteId>& replicas, const SiteId& exec_site,
                          const SiteId& submit_site, const NetworkCostOracle& nc,
                          const WeightVector& w);

// -------------------------------------------------------------- total cost

/// Settings of the cost model that are not weights.
struct CostModel {
    WeightVector weights;
    /// Replaces the weighted losses inside NC of the data-transfer cost.
    std::optional<double> dtc_losses_override;
    /// NC(j), the self-cost of the candidate site.
    double nc_site = 0.0;
    TransferModel transfer;

    NetworkCostOracle dtc_oracle(const LinkTable& links) const {
        return NetworkCostOracle(links, weights, dtc_losses_override, nc_site);
    }
};

/// Everything a placement decision reads. References only; the referenced
/// objects must outlive the view.
struct GridView {
    const ValidatedTopology& topology;
    const ReplicaCatalog& catalog;
    const LinkTable& metrics;
    const GlobalLoadSnapshot& load;
};

/// Network cost of the submitter -> execution path, the computation cost of
/// the execution site and the data-transfer cost for the given replicas.
CostBreakdown total_cost(const JobDescriptor& job, const std::map<DatasetId, SiteId>& replicas,
                         const SiteId& exec_site, const SiteId& submit_site, const GridView& view,
                         const CostModel& model);

/// Single data site variant.
CostBreakdown total_cost(const JobDescriptor& job, const SiteId& data_site,
                         const SiteId& exec_site, const SiteId& submit_site, const GridView& view,
                         const CostModel& model);

}  // namespace diana
