#pragma once

#include <memory>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "diana/matchmaker.hpp"

namespace diana {

enum class PolicyKind { Diana, DataLocal, ComputeGreedy, Random };

std::string_view to_string(PolicyKind kind);
/// Throws InvalidArgument for an unknown name.
PolicyKind parse_policy(std::string_view name);
std::vector<PolicyKind> all_policies();

struct PolicyContext {
    GridView view;
    const CostModel& cost;
    MatchmakerOptions matchmaking;
    MatrixCache* cache = nullptr;
    std::uint64_t telemetry_epoch = 0;
    std::uint64_t load_version = 0;
    double now = 0.0;
};

/// A meta-scheduling strategy. All strategies run on the same simulator;
/// only the site choice differs.
class SchedulingPolicy {
public:
    virtual ~SchedulingPolicy() = default;

    virtual PolicyKind kind() const = 0;
    std::string_view name() const { return to_string(kind()); }

    /// Chooses an execution site outside `exclude`. Throws NoEligibleSite
    /// when nothing qualifies.
    virtual Placement place(const JobDescriptor& job, const PolicyContext& ctx,
                            const std::set<SiteId>& exclude) = 0;

    /// Whether queued jobs may later be moved to another site.
    virtual bool exports_jobs() const { return false; }
};

/// `seed` drives the random policy and is ignored by the others.
std::unique_ptr<SchedulingPolicy> make_policy(PolicyKind kind, std::uint64_t seed = 0);

}  // namespace diana
