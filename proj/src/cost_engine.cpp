#include "diana/cost_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace diana {

// ------------------------------------------------------- GlobalLoadSnapshot

GlobalLoadSnapshot GlobalLoadSnapshot::build(std::span<const SiteDescriptor> sites,
                                             const std::map<SiteId, QueueCounts>& counts) {
    GlobalLoadSnapshot snap;
    for (const auto& s : sites) {
        Entry e;
        e.power = s.total_power();
        if (auto it = counts.find(s.id); it != counts.end()) e.counts = it->second;
        if (e.counts.waiting < 0 || e.counts.running < 0) {
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("site '{}': negative queue counts", s.id.str()));
        }
        snap.total_waiting_ += e.counts.waiting;
        snap.sites_.emplace(s.id, e);
    }
    for (const auto& [id, c] : counts) {
        if (!snap.sites_.count(id)) {
            throw Error(ErrorCode::UnknownSite,
                        fmt::format("queue counts given for unknown site '{}'", id.str()));
        }
    }
    return snap;
}

GlobalLoadSnapshot GlobalLoadSnapshot::build(const ValidatedTopology& topology,
                                             const std::map<SiteId, QueueCounts>& counts) {
    std::vector<SiteDescriptor> sites;
    sites.reserve(topology.sites().size());
    for (const auto& [id, s] : topology.sites()) sites.push_back(s);
    return build(sites, counts);
}

const GlobalLoadSnapshot::Entry& GlobalLoadSnapshot::entry(const SiteId& site) const {
    auto it = sites_.find(site);
    if (it == sites_.end()) {
        throw Error(ErrorCode::UnknownSite,
                    fmt::format("site '{}' is not part of the load snapshot", site.str()));
    }
    return it->second;
}

double GlobalLoadSnapshot::site_load(const SiteId& site) const {
    const auto& e = entry(site);
    return (e.counts.waiting + e.counts.running) / e.power;
}

std::map<SiteId, QueueCounts> GlobalLoadSnapshot::per_site_counts() const {
    std::map<SiteId, QueueCounts> out;
    for (const auto& [id, e] : sites_) out.emplace(id, e.counts);
    return out;
}

// ------------------------------------------------------------ network cost

double mathis_rate(double mss_bytes, double rtt_ms, double loss_rate) {
    if (!(mss_bytes > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "mss must be positive");
    }
    if (!(rtt_ms > 0.0)) {
        throw Error(ErrorCode::ZeroRtt, "Mathis bound undefined for a zero RTT");
    }
    if (loss_rate == 0.0) {
        throw Error(ErrorCode::ZeroLoss, "Mathis bound is unbounded for a zero loss rate");
    }
    if (!(loss_rate > 0.0 && loss_rate <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("loss rate {} outside (0,1]", loss_rate));
    }
    const double rtt_s = rtt_ms / 1000.0;
    return (mss_bytes / rtt_s) * (1.0 / std::sqrt(loss_rate));
}

double losses(const LinkMetrics& metrics, const WeightVector& w) {
    return metrics.rtt_ms * w.w1 + metrics.loss_rate * w.w2 + metrics.jitter_ms * w.w3;
}

double network_cost(const LinkMetrics& metrics, const WeightVector& w) {
    if (metrics.is_intra_site()) return 0.0;
    return losses(metrics, w) / metrics.bandwidth_mbps;
}

double effective_rate_mbps(const LinkMetrics& metrics, const TransferModel& model) {
    if (metrics.is_intra_site()) return std::numeric_limits<double>::infinity();
    if (metrics.rtt_ms <= 0.0) return metrics.bandwidth_mbps;
    const double loss = std::max(metrics.loss_rate, model.loss_floor);
    const double bound_mbps = mathis_rate(model.mss_bytes, metrics.rtt_ms, loss) * 8.0 / 1e6;
    return std::min(metrics.bandwidth_mbps, bound_mbps);
}

double transfer_seconds(double size_mb, const LinkMetrics& metrics, const TransferModel& model) {
    if (metrics.is_intra_site() || size_mb <= 0.0) return 0.0;
    return size_mb * 8.0 / effective_rate_mbps(metrics, model);
}

double NetworkCostOracle::operator()(const SiteId& src, const SiteId& dst) const {
    if (src == dst) return 0.0;
    const LinkMetrics m = links_->lookup(src, dst);
    if (losses_override_) return *losses_override_ / m.bandwidth_mbps;
    return network_cost(m, weights_);
}

// -------------------------------------------------------- computation cost

double compute_cost(const SiteDescriptor& site, const GlobalLoadSnapshot& snapshot,
                    const WeightVector& w) {
    const double power = site.total_power();
    const double local_queue = snapshot.queue(site.id);
    const double global_queue = snapshot.total_waiting_jobs();
    const double site_load = (local_queue + snapshot.running(site.id)) / power;
    return (local_queue / power) * w.w5 + (global_queue / power) * w.w6 + site_load * w.w7;
}

// ------------------------------------------------------ data transfer cost

TransferVolumes volumes_of(const JobDescriptor& job) {
    return {job.executable_mb, job.output_mb, job.sub_job_count};
}

namespace {

double staging_terms(double input_mb, const TransferVolumes& v, const SiteId& exec_site,
                     const SiteId& submit_site, const NetworkCostOracle& nc,
                     const WeightVector& w) {
    double cost = 0.0;
    if (w.w9 != 0.0) cost += w.w9 * (v.executable_mb + v.output_mb) * nc(submit_site, exec_site);
    if (w.w10 != 0.0) {
        cost += w.w10 * (v.sub_jobs * (input_mb + v.executable_mb) + v.output_mb) *
                nc.site_cost(exec_site);
    }
    return cost;
}

}  // namespace

double data_transfer_cost(const JobDescriptor& job, const ReplicaCatalog& catalog,
                          const SiteId& data_site, const SiteId& exec_site,
                          const SiteId& submit_site, const NetworkCostOracle& nc,
                          const WeightVector& w) {
    const double input_mb = input_size_mb(job, catalog);
    double cost = 0.0;
    if (data_site != exec_site && input_mb > 0.0 && w.w8 != 0.0) {
        cost += w.w8 * input_mb * nc(data_site, exec_site);
    }
    return cost + staging_terms(input_mb, volumes_of(job), exec_site, submit_site, nc, w);
}

double data_transfer_cost(const JobDescriptor& job, const ReplicaCatalog& catalog,
                          const std::map<DatasetId, SiteId>& replicas, const SiteId& exec_site,
                          const SiteId& submit_site, const NetworkCostOracle& nc,
                          const WeightVector& w) {
    double input_mb = 0.0;
    double weighted_input = 0.0;
    for (const auto& d : job.input_datasets) {
        const double size = catalog.at(d).size_mb;
        input_mb += size;
        auto it = replicas.find(d);
        if (it == replicas.end()) {
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("no replica chosen for dataset '{}'", d.str()));
        }
        if (it->second != exec_site) weighted_input += size * nc(it->second, exec_site);
    }
    double cost = 0.0;
    if (w.w8 != 0.0) cost += w.w8 * weighted_input;
    return cost + staging_terms(input_mb, volumes_of(job), exec_site, submit_site, nc, w);
}

// -------------------------------------------------------------- total cost

CostBreakdown total_cost(const JobDescriptor& job, const std::map<DatasetId, SiteId>& replicas,
                         const SiteId& exec_site, const SiteId& submit_site, const GridView& view,
                         const CostModel& model) {
    const auto& w = model.weights;
    const double network = network_cost(view.metrics.lookup(submit_site, exec_site), w);
    const double compute = compute_cost(view.topology.site(exec_site), view.load, w);
    const double dtc = data_transfer_cost(job, view.catalog, replicas, exec_site, submit_site,
                                          model.dtc_oracle(view.metrics), w);
    return CostBreakdown::of(network, compute, dtc);
}

CostBreakdown total_cost(const JobDescriptor& job, const SiteId& data_site,
                         const SiteId& exec_site, const SiteId& submit_site, const GridView& view,
                         const CostModel& model) {
    const auto& w = model.weights;
    const double network = network_cost(view.metrics.lookup(submit_site, exec_site), w);
    const double compute = compute_cost(view.topology.site(exec_site), view.load, w);
    const double dtc = data_transfer_cost(job, view.catalog, data_site, exec_site, submit_site,
                                          model.dtc_oracle(view.metrics), w);
    return CostBreakdown::of(network, compute, dtc);
}

}  // namespace diana
