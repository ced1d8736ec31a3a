#pragma once

// Scenario files: a versioned YAML document describing the Grid, the
// weights, the workload and the simulator settings.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "diana/policies.hpp"
#include "diana/simulator.hpp"
#include "diana/workload.hpp"

namespace diana {

inline constexpr int kScenarioSchema = 1;

struct Scenario {
    std::string name;
    std::string source;  // path or "<string>", used in diagnostics
    std::uint64_t seed = 0;
    PolicyKind scheduler = PolicyKind::Diana;
    ValidatedTopology topology;
    SimConfig sim;

    std::vector<JobDescriptor> inline_jobs;
    std::optional<WorkloadProfile> profile;
    std::optional<double> horizon_seconds;
    std::optional<std::size_t> job_count;

    /// The workload of a plain run: the inline jobs, or the profile drawn
    /// over its horizon (or up to its job count).
    std::vector<JobDescriptor> jobs() const;

    /// Exactly n jobs: the first n inline jobs, or n draws from the profile.
    /// Throws Scenario when fewer than n inline jobs exist.
    std::vector<JobDescriptor> jobs(std::size_t n) const;

    /// Applies a new run seed to the simulator and the workload profile.
    void reseed(std::uint64_t seed);
};

/// Parses and validates. Every failure is an Error with code Scenario whose
/// message starts with "<source>:<line>:<column>:" when the offending node
/// is known.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");

}  // namespace diana
