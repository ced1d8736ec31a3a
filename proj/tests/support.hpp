#pragma once

// Builders, random generators and independent reference implementations
// shared by the test binaries. Nothing here calls into the cost engine: the
// reference formulas are written out again from scratch.

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "diana/grid_model.hpp"
#include "diana/simulator.hpp"

namespace diana::test {

inline SiteDescriptor site(const std::string& id, int cpus, double power = 1.0) {
    SiteDescriptor s;
    s.id = SiteId(id);
    s.cpu_count = cpus;
    s.power_per_cpu = power;
    return s;
}

inline LinkMetrics link(const std::string& src, const std::string& dst, double rtt, double loss,
                        double jitter, double bw) {
    LinkMetrics m;
    m.src = SiteId(src);
    m.dst = SiteId(dst);
    m.rtt_ms = rtt;
    m.loss_rate = loss;
    m.jitter_ms = jitter;
    m.bandwidth_mbps = bw;
    return m;
}

inline DatasetDescriptor dataset(const std::string& id, double size_mb,
                                 std::initializer_list<const char*> replicas) {
    DatasetDescriptor d;
    d.id = DatasetId(id);
    d.size_mb = size_mb;
    for (const char* r : replicas) d.replicas.insert(SiteId(r));
    return d;
}

inline JobDescriptor job(const std::string& id, const std::string& submit,
                         std::vector<std::string> inputs = {}, double demand = 1.0) {
    JobDescriptor j;
    j.id = JobId(id);
    j.submit_site = SiteId(submit);
    for (auto& d : inputs) j.input_datasets.push_back(DatasetId(d));
    j.compute_demand = demand;
    return j;
}

/// Both directions of every pair, same metrics.
inline std::vector<LinkMetrics> full_mesh(const std::vector<SiteDescriptor>& sites, double rtt,
                                          double loss, double jitter, double bw) {
    std::vector<LinkMetrics> out;
    for (const auto& a : sites) {
        for (const auto& b : sites) {
            if (a.id != b.id) out.push_back(link(a.id.str(), b.id.str(), rtt, loss, jitter, bw));
        }
    }
    return out;
}

// ------------------------------------------------------------ random input

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(gen); }
    double weight() { return coin(0.15) ? 0.0 : uniform(1.0, 20.0); }
};

struct RandomGrid {
    std::vector<SiteDescriptor> sites;
    std::vector<LinkMetrics> links;
    std::vector<DatasetDescriptor> datasets;
    std::map<SiteId, std::pair<int, int>> queues;  // waiting, running
    JobDescriptor job;
};

inline RandomGrid random_grid(Rng& rng, int max_sites = 5, int max_datasets = 3) {
    RandomGrid g;
    const int n = rng.integer(1, max_sites);
    for (int i = 0; i < n; ++i) {
        g.sites.push_back(site("s" + std::to_string(i), rng.integer(1, 64), rng.uniform(0.5, 4.0)));
    }
    for (const auto& a : g.sites) {
        for (const auto& b : g.sites) {
            if (a.id == b.id) continue;
            g.links.push_back(link(a.id.str(), b.id.str(), rng.uniform(1.0, 300.0),
                                   rng.coin(0.2) ? 0.0 : rng.uniform(0.0, 0.05), rng.uniform(0.0, 20.0),
                                   rng.uniform(10.0, 10000.0)));
        }
    }
    const int nd = rng.integer(0, max_datasets);
    for (int d = 0; d < nd; ++d) {
        DatasetDescriptor ds;
        ds.id = DatasetId("d" + std::to_string(d));
        ds.size_mb = rng.uniform(1.0, 100000.0);
        for (const auto& s : g.sites) {
            if (rng.coin(0.5)) ds.replicas.insert(s.id);
        }
        if (ds.replicas.empty()) ds.replicas.insert(g.sites[rng.integer(0, n - 1)].id);
        g.datasets.push_back(ds);
        g.job.input_datasets.push_back(ds.id);
    }
    for (const auto& s : g.sites) g.queues[s.id] = {rng.integer(0, 200), rng.integer(0, s.cpu_count)};
    g.job.id = JobId("j");
    g.job.submit_site = g.sites[rng.integer(0, n - 1)].id;
    g.job.executable_mb = rng.uniform(0.0, 50.0);
    g.job.output_mb = rng.uniform(0.0, 500.0);
    g.job.sub_job_count = rng.integer(1, 4);
    g.job.compute_demand = rng.uniform(1.0, 100.0);
    return g;
}

inline WeightVector random_weights(Rng& rng) {
    WeightVector w;
    w.w1 = rng.weight();
    w.w2 = rng.weight();
    w.w3 = rng.weight();
    w.w5 = rng.weight();
    w.w6 = rng.weight();
    w.w7 = rng.weight();
    w.w8 = rng.weight();
    w.w9 = rng.weight();
    w.w10 = rng.weight();
    return w;
}

/// Pinned totals for five sites; row = submitting site, column = execution
/// site.
inline std::map<std::pair<SiteId, SiteId>, double> five_site_totals() {
    const char* names[] = {"Italy", "Austria", "Switzerland", "UK", "Japan"};
    const double table[5][5] = {{0, 50, 45, 60, 90},
                                {58, 0, 48, 65, 72},
                                {64, 42, 0, 38, 85},
                                {72, 65, 50, 0, 65},
                                {70, 72, 85, 65, 0}};
    std::map<std::pair<SiteId, SiteId>, double> out;
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            if (i != j) out[{SiteId(names[i]), SiteId(names[j])}] = table[i][j];
        }
    }
    return out;
}

inline std::vector<SiteId> five_sites() {
    return {SiteId("Italy"), SiteId("Austria"), SiteId("Switzerland"), SiteId("UK"), SiteId("Japan")};
}

struct RandomRun {
    ValidatedTopology topology;
    std::vector<JobDescriptor> jobs;
    SimConfig config;
    PolicyKind policy = PolicyKind::Diana;
};

/// A small simulation: up to 4 sites, 12 jobs, random policy, no export.
inline RandomRun random_run(Rng& rng) {
    std::vector<SiteDescriptor> sites;
    const int n = rng.integer(1, 4);
    for (int i = 0; i < n; ++i) sites.push_back(site("s" + std::to_string(i), rng.integer(1, 4), rng.uniform(0.5, 2)));
    std::vector<LinkMetrics> links;
    for (const auto& a : sites) {
        for (const auto& b : sites) {
            if (a.id != b.id) {
                links.push_back(link(a.id.str(), b.id.str(), rng.uniform(1, 200), rng.uniform(0, 0.01),
                                     rng.uniform(0, 5), rng.uniform(10, 1000)));
            }
        }
    }
    std::vector<DatasetDescriptor> ds;
    const int nd = rng.integer(0, 3);
    for (int d = 0; d < nd; ++d) {
        DatasetDescriptor x;
        x.id = DatasetId("d" + std::to_string(d));
        x.size_mb = rng.uniform(1, 2000);
        x.replicas.insert(sites[rng.integer(0, n - 1)].id);
        ds.push_back(x);
    }
    RandomRun r;
    r.topology = validate_topology(sites, links, ds);
    const int nj = rng.integer(1, 12);
    for (int i = 0; i < nj; ++i) {
        auto j = job("j" + std::to_string(i), sites[rng.integer(0, n - 1)].id.str());
        for (const auto& d : ds) {
            if (rng.coin()) j.input_datasets.push_back(d.id);
        }
        j.compute_demand = rng.uniform(1, 50);
        j.sub_job_count = rng.integer(1, 3);
        j.executable_mb = rng.uniform(0, 5);
        j.output_mb = rng.uniform(0, 50);
        j.submit_time = rng.coin(0.2) ? 0.0 : rng.uniform(0, 100);
        r.jobs.push_back(j);
    }
    r.config.export_threshold = 0.0;
    r.config.seed = rng.gen();
    r.config.telemetry.epoch_seconds = rng.uniform(5, 60);
    r.config.telemetry.noise = rng.coin() ? 0.0 : 0.2;
    if (rng.coin(0.3)) {
        const auto& s = sites[rng.integer(0, n - 1)];
        r.config.background[s.id] = BackgroundLoad{rng.integer(0, 3), rng.integer(0, s.cpu_count), rng.uniform(1, 30)};
    }
    r.config.cost.weights = random_weights(rng);
    const auto kinds = all_policies();
    r.policy = kinds[rng.integer(0, static_cast<int>(kinds.size()) - 1)];
    return r;
}

// ------------------------------------------------------ reference formulas

struct RefModel {
    WeightVector w;
    std::optional<double> dtc_losses;
    double nc_site = 0.0;
};

inline const LinkMetrics* find_link(const RandomGrid& g, const SiteId& a, const SiteId& b) {
    for (const auto& l : g.links) {
        if (l.src == a && l.dst == b) return &l;
    }
    return nullptr;
}

inline double ref_nc(const RandomGrid& g, const SiteId& a, const SiteId& b, const WeightVector& w,
                     std::optional<double> pinned) {
    if (a == b) return 0.0;
    const auto* l = find_link(g, a, b);
    const double lossy = pinned ? *pinned : l->rtt_ms * w.w1 + l->loss_rate * w.w2 + l->jitter_ms * w.w3;
    return lossy / l->bandwidth_mbps;
}

inline double ref_compute(const RandomGrid& g, const SiteDescriptor& s, const WeightVector& w) {
    double total_waiting = 0;
    for (const auto& [id, q] : g.queues) total_waiting += q.first;
    const auto [waiting, running] = g.queues.at(s.id);
    const double p = s.cpu_count * s.power_per_cpu;
    return waiting / p * w.w5 + total_waiting / p * w.w6 + (waiting + running) / p * w.w7;
}

struct RefChoice {
    SiteId site;
    std::vector<SiteId> replicas;  // parallel to job.input_datasets
    double total = std::numeric_limits<double>::infinity();
};

/// Exhaustive search over every execution site and every replica of every
/// input dataset. Ties keep the lexicographically smallest site, then the
/// first replica combination in id order.
inline RefChoice brute_force(const RandomGrid& g, const RefModel& m) {
    RefChoice best;
    std::map<DatasetId, const DatasetDescriptor*> by_id;
    for (const auto& d : g.datasets) by_id[d.id] = &d;
    double id_total = 0;
    for (const auto& d : g.job.input_datasets) id_total += by_id[d]->size_mb;

    for (const auto& s : g.sites) {
        if (s.power_per_cpu < g.job.min_power_per_cpu) continue;
        const double net = ref_nc(g, g.job.submit_site, s.id, m.w, std::nullopt);
        const double comp = ref_compute(g, s, m.w);
        const double staging = m.w.w9 * (g.job.executable_mb + g.job.output_mb) *
                                   ref_nc(g, g.job.submit_site, s.id, m.w, m.dtc_losses) +
                               m.w.w10 *
                                   (g.job.sub_job_count * (id_total + g.job.executable_mb) + g.job.output_mb) *
                                   m.nc_site;
        // odometer over replica choices
        std::vector<std::vector<SiteId>> options;
        for (const auto& d : g.job.input_datasets) {
            options.emplace_back(by_id[d]->replicas.begin(), by_id[d]->replicas.end());
        }
        std::vector<std::size_t> idx(options.size(), 0);
        while (true) {
            double input = 0;
            std::vector<SiteId> pick;
            for (std::size_t k = 0; k < options.size(); ++k) {
                const auto& r = options[k][idx[k]];
                input += by_id[g.job.input_datasets[k]]->size_mb * ref_nc(g, r, s.id, m.w, m.dtc_losses);
                pick.push_back(r);
            }
            const double total = net + comp + m.w.w8 * input + staging;
            if (total < best.total) best = {s.id, pick, total};
            std::size_t k = 0;
            while (k < idx.size() && ++idx[k] == options[k].size()) idx[k++] = 0;
            if (k == idx.size()) break;
        }
    }
    return best;
}

}  // namespace diana::test
