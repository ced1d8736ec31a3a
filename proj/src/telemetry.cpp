#include "diana/telemetry.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace diana {

void TelemetryConfig::validate() const {
    if (!(epoch_seconds > 0.0) || !std::isfinite(epoch_seconds)) {
        throw Error(ErrorCode::InvalidArgument, "telemetry epoch must be > 0 seconds");
    }
    if (window < 1) throw Error(ErrorCode::InvalidArgument, "telemetry window must be >= 1");
    if (!(noise >= 0.0 && noise < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "telemetry noise must lie in [0, 1)");
    }
}

TelemetryFeed::TelemetryFeed(const LinkTable& base, TelemetryConfig config, std::uint64_t seed)
    : base_(base), config_(config), rng_(seed) {
    config_.validate();
    advance(0.0);
    epoch_ = 0;
}

LinkMetrics TelemetryFeed::sample(const LinkMetrics& base, double now) {
    LinkMetrics m = base;
    m.observed_at = now;
    if (config_.noise > 0.0) {
        std::uniform_real_distribution<double> u(-config_.noise, config_.noise);
        m.rtt_ms = std::max(0.0, base.rtt_ms * (1.0 + u(rng_)));
        m.jitter_ms = std::max(0.0, base.jitter_ms * (1.0 + u(rng_)));
        m.loss_rate = std::clamp(base.loss_rate * (1.0 + u(rng_)), 0.0, 1.0);
        // noise < 1 keeps the factor strictly positive.
        m.bandwidth_mbps = base.bandwidth_mbps * (1.0 + u(rng_));
    }
    return m;
}

void TelemetryFeed::advance(double now) {
    ++epoch_;
    LinkTable current;
    LinkTable average;
    for (const auto& [key, base] : base_.entries()) {
        const LinkMetrics m = sample(base, now);
        current.insert(m);

        auto& ring = history_[key];
        ring.push_back(m);
        while (ring.size() > config_.window) ring.pop_front();

        LinkMetrics avg = m;
        avg.rtt_ms = avg.loss_rate = avg.jitter_ms = avg.bandwidth_mbps = 0.0;
        for (const auto& h : ring) {
            avg.rtt_ms += h.rtt_ms;
            avg.loss_rate += h.loss_rate;
            avg.jitter_ms += h.jitter_ms;
            avg.bandwidth_mbps += h.bandwidth_mbps;
        }
        const double n = static_cast<double>(ring.size());
        avg.rtt_ms /= n;
        avg.loss_rate = std::min(1.0, avg.loss_rate / n);
        avg.jitter_ms /= n;
        avg.bandwidth_mbps /= n;
        average.insert(avg);
    }
    current_ = std::move(current);
    average_ = std::move(average);
}

const std::deque<LinkMetrics>& TelemetryFeed::history(const SiteId& src, const SiteId& dst) const {
    auto it = history_.find({src, dst});
    if (it == history_.end()) {
        throw Error(ErrorCode::MissingLink,
                    fmt::format("no telemetry for {} -> {}", src.str(), dst.str()));
    }
    return it->second;
}

}  // namespace diana
