#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <random>

#include "diana/grid_model.hpp"

namespace diana {

struct TelemetryConfig {
    double epoch_seconds = 300.0;
    /// Number of past samples the historical average covers.
    std::size_t window = 12;
    /// Relative amplitude of the bounded uniform noise, in [0, 1).
    double noise = 0.0;

    void validate() const;
};

/// Synthetic link monitoring. Every epoch each link is sampled as its base
/// metrics perturbed by seeded, bounded uniform noise; the matchmaker reads
/// the average over the retained window rather than the latest sample.
class TelemetryFeed {
public:
    TelemetryFeed(const LinkTable& base, TelemetryConfig config, std::uint64_t seed);

    /// Takes one sample of every link, stamped `now`.
    void advance(double now);

    std::uint64_t epoch() const { return epoch_; }
    const TelemetryConfig& config() const { return config_; }

    /// Most recent sample of every link.
    const LinkTable& current() const { return current_; }
    /// Field-wise mean over the retained window.
    const LinkTable& historical_average() const { return average_; }

    const std::deque<LinkMetrics>& history(const SiteId& src, const SiteId& dst) const;

private:
    LinkMetrics sample(const LinkMetrics& base, double now);

    LinkTable base_;
    TelemetryConfig config_;
    std::mt19937_64 rng_;
    std::uint64_t epoch_ = 0;
    std::map<std::pair<SiteId, SiteId>, std::deque<LinkMetrics>> history_;
    LinkTable current_;
    LinkTable average_;
};

}  // namespace diana
