#include "diana/policies.hpp"

#include <fmt/format.h>

namespace diana {

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Diana: return "diana";
        case PolicyKind::DataLocal: return "data_local";
        case PolicyKind::ComputeGreedy: return "compute_greedy";
        case PolicyKind::Random: return "random";
    }
    return "unknown";
}

PolicyKind parse_policy(std::string_view name) {
    for (auto k : all_policies()) {
        if (to_string(k) == name) return k;
    }
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("unknown scheduler '{}' (expected diana, data_local, "
                            "compute_greedy or random)",
                            name));
}

std::vector<PolicyKind> all_policies() {
    return {PolicyKind::Diana, PolicyKind::DataLocal, PolicyKind::ComputeGreedy,
            PolicyKind::Random};
}

namespace {

std::vector<SiteId> eligible_sites(const JobDescriptor& job, const GridView& view,
                                   const std::set<SiteId>& exclude) {
    std::vector<SiteId> out;
    for (const auto& [id, site] : view.topology.sites()) {
        if (exclude.count(id) || site.power_per_cpu < job.min_power_per_cpu) continue;
        out.push_back(id);
    }
    if (out.empty()) {
        throw Error(ErrorCode::NoEligibleSite,
                    fmt::format("no eligible site for job '{}'", job.id.str()));
    }
    return out;
}

Placement placement_at(const JobDescriptor& job, const SiteId& site, const PolicyContext& ctx) {
    const Matchmaker mm(ctx.view, ctx.cost, ctx.matchmaking);
    Placement p;
    p.job = job.id;
    p.exec_site = site;
    p.chosen_replicas = mm.best_replicas(job, site);
    p.breakdown = total_cost(job, p.chosen_replicas, site, job.submit_site, ctx.view, ctx.cost);
    p.decided_at = ctx.now;
    return p;
}

class DianaPolicy final : public SchedulingPolicy {
public:
    PolicyKind kind() const override { return PolicyKind::Diana; }
    bool exports_jobs() const override { return true; }

    Placement place(const JobDescriptor& job, const PolicyContext& ctx,
                    const std::set<SiteId>& exclude) override {
        Matchmaker mm(ctx.view, ctx.cost, ctx.matchmaking);
        if (ctx.cache) mm.attach_cache(ctx.cache, ctx.telemetry_epoch, ctx.load_version);
        return mm.get_best_computing_element(job, ctx.now, exclude);
    }
};

/// Runs where the data already is: among the sites holding the most of the
/// job's inputs, the one with the shortest waiting queue.
class DataLocalPolicy final : public SchedulingPolicy {
public:
    PolicyKind kind() const override { return PolicyKind::DataLocal; }

    Placement place(const JobDescriptor& job, const PolicyContext& ctx,
                    const std::set<SiteId>& exclude) override {
        const auto sites = eligible_sites(job, ctx.view, exclude);
        const SiteId* best = nullptr;
        int best_local = -1;
        int best_queue = 0;
        for (const auto& s : sites) {
            int local = 0;
            for (const auto& d : job.input_datasets) local += ctx.view.catalog.has_replica(d, s);
            const int queue = ctx.view.load.queue(s);
            if (!best || local > best_local || (local == best_local && queue < best_queue)) {
                best = &s;
                best_local = local;
                best_queue = queue;
            }
        }
        return placement_at(job, *best, ctx);
    }
};

/// Cheapest computation cost, ignoring data movement and the network.
class ComputeGreedyPolicy final : public SchedulingPolicy {
public:
    PolicyKind kind() const override { return PolicyKind::ComputeGreedy; }

    Placement place(const JobDescriptor& job, const PolicyContext& ctx,
                    const std::set<SiteId>& exclude) override {
        const auto sites = eligible_sites(job, ctx.view, exclude);
        const SiteId* best = nullptr;
        double best_cost = 0.0;
        for (const auto& s : sites) {
            const double c = compute_cost(ctx.view.topology.site(s), ctx.view.load,
                                          ctx.cost.weights);
            if (!best || c < best_cost) {
                best = &s;
                best_cost = c;
            }
        }
        return placement_at(job, *best, ctx);
    }
};

class RandomPolicy final : public SchedulingPolicy {
public:
    explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}

    PolicyKind kind() const override { return PolicyKind::Random; }

    Placement place(const JobDescriptor& job, const PolicyContext& ctx,
                    const std::set<SiteId>& exclude) override {
        const auto sites = eligible_sites(job, ctx.view, exclude);
        std::uniform_int_distribution<std::size_t> pick(0, sites.size() - 1);
        return placement_at(job, sites[pick(rng_)], ctx);
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace

std::unique_ptr<SchedulingPolicy> make_policy(PolicyKind kind, std::uint64_t seed) {
    switch (kind) {
        case PolicyKind::Diana: return std::make_unique<DianaPolicy>();
        case PolicyKind::DataLocal: return std::make_unique<DataLocalPolicy>();
        case PolicyKind::ComputeGreedy: return std::make_unique<ComputeGreedyPolicy>();
        case PolicyKind::Random: return std::make_unique<RandomPolicy>(seed);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown policy");
}

}  // namespace diana
