#include "diana/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string_view>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace diana {

namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Mark& mark, const std::string& msg) const {
        if (mark.is_null()) throw Error(ErrorCode::Scenario, fmt::format("{}: {}", source_, msg));
        throw Error(ErrorCode::Scenario,
                    fmt::format("{}:{}:{}: {}", source_, mark.line + 1, mark.column + 1, msg));
    }
    [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
        fail(node.Mark(), msg);
    }

    void expect_map(const YAML::Node& node, std::string_view what) const {
        if (!node.IsMap()) fail(node, fmt::format("{} must be a mapping", what));
    }
    void expect_seq(const YAML::Node& node, std::string_view what) const {
        if (!node.IsSequence()) fail(node, fmt::format("{} must be a list", what));
    }

    void keys(const YAML::Node& map, std::string_view what,
              std::initializer_list<std::string_view> allowed) const {
        expect_map(map, what);
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            bool ok = false;
            for (auto a : allowed) ok = ok || a == key;
            if (!ok) {
                if (key == "w4") fail(kv.first, "unknown key 'w4' in weights: the weights are w1-w3 and w5-w10");
                fail(kv.first, fmt::format("unknown key '{}' in {}", key, what));
            }
        }
    }

    template <class T>
    T as(const YAML::Node& node, std::string_view what) const {
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, fmt::format("'{}' has the wrong type", what));
        }
    }

    template <class T>
    T get(const YAML::Node& map, const char* key, T fallback) const {
        const auto node = map[key];
        if (!node) return fallback;
        return as<T>(node, key);
    }

    template <class T>
    T require(const YAML::Node& map, const char* key, std::string_view what) const {
        const auto node = map[key];
        if (!node) fail(map, fmt::format("{} is missing required key '{}'", what, key));
        return as<T>(node, key);
    }

    template <class T>
    Range<T> range(const YAML::Node& map, const char* key, Range<T> fallback) const {
        const auto node = map[key];
        if (!node) return fallback;
        if (node.IsScalar()) {
            const T v = as<T>(node, key);
            return {v, v};
        }
        if (!node.IsSequence() || node.size() != 2) fail(node, fmt::format("'{}' must be [min, max]", key));
        Range<T> r{as<T>(node[0], key), as<T>(node[1], key)};
        if (r.min > r.max) fail(node, fmt::format("'{}' has min above max", key));
        return r;
    }

    /// Runs `f`, turning library errors into diagnostics at `node`.
    template <class F>
    auto at(const YAML::Node& node, F&& f) const {
        try {
            return f();
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Scenario) throw;
            fail(node, e.what());
        }
    }

    const std::string& source() const { return source_; }

private:
    std::string source_;
};

struct Parsed {
    std::vector<SiteDescriptor> sites;
    std::vector<LinkMetrics> links;
    std::vector<DatasetDescriptor> datasets;
};

void parse_weights(const Reader& r, const YAML::Node& node, WeightVector& w) {
    r.keys(node, "weights", {"w1", "w2", "w3", "w5", "w6", "w7", "w8", "w9", "w10"});
    auto read = [&](const char* key, double& slot) {
        const auto n = node[key];
        if (!n) return;
        const double v = r.as<double>(n, key);
        if (!(v == 0.0 || (v >= WeightVector::kMin && v <= WeightVector::kMax))) {
            r.fail(n, fmt::format("weight {} = {} is outside the allowed range {}-{} (0 disables the term)",
                                  key, v, WeightVector::kMin, WeightVector::kMax));
        }
        slot = v;
    };
    read("w1", w.w1);
    read("w2", w.w2);
    read("w3", w.w3);
    read("w5", w.w5);
    read("w6", w.w6);
    read("w7", w.w7);
    read("w8", w.w8);
    read("w9", w.w9);
    read("w10", w.w10);
}

void parse_cost(const Reader& r, const YAML::Node& node, CostModel& cost) {
    r.keys(node, "cost", {"dtc_losses_override", "nc_site", "mss_bytes", "loss_floor"});
    if (node["dtc_losses_override"]) {
        cost.dtc_losses_override = r.as<double>(node["dtc_losses_override"], "dtc_losses_override");
        if (!(*cost.dtc_losses_override >= 0.0)) r.fail(node["dtc_losses_override"], "dtc_losses_override must be >= 0");
    }
    cost.nc_site = r.get(node, "nc_site", cost.nc_site);
    cost.transfer.mss_bytes = r.get(node, "mss_bytes", cost.transfer.mss_bytes);
    cost.transfer.loss_floor = r.get(node, "loss_floor", cost.transfer.loss_floor);
    if (!(cost.nc_site >= 0.0)) r.fail(node["nc_site"], "nc_site must be >= 0");
    if (!(cost.transfer.mss_bytes > 0.0)) r.fail(node["mss_bytes"], "mss_bytes must be > 0");
    if (!(cost.transfer.loss_floor > 0.0 && cost.transfer.loss_floor <= 1.0)) {
        r.fail(node["loss_floor"], "loss_floor must lie in (0, 1]");
    }
}

void parse_telemetry(const Reader& r, const YAML::Node& node, TelemetryConfig& t) {
    r.keys(node, "telemetry", {"epoch_seconds", "window", "noise"});
    t.epoch_seconds = r.get(node, "epoch_seconds", t.epoch_seconds);
    t.window = r.get(node, "window", t.window);
    t.noise = r.get(node, "noise", t.noise);
    r.at(node, [&] { t.validate(); });
}

void parse_sites(const Reader& r, const YAML::Node& node, Parsed& out, SimConfig& sim) {
    r.expect_seq(node, "sites");
    std::set<SiteId> seen;
    for (const auto& s : node) {
        r.keys(s, "site", {"id", "cpus", "power_per_cpu", "storage_bytes", "background"});
        SiteDescriptor site;
        site.id = SiteId(r.require<std::string>(s, "id", "site"));
        if (site.id.empty()) r.fail(s, "site id must not be empty");
        if (!seen.insert(site.id).second) r.fail(s["id"], fmt::format("duplicate site id '{}'", site.id.str()));
        site.cpu_count = r.require<int>(s, "cpus", "site");
        if (site.cpu_count < 1) r.fail(s["cpus"], "cpus must be >= 1");
        site.power_per_cpu = r.get(s, "power_per_cpu", site.power_per_cpu);
        if (!(site.power_per_cpu > 0.0)) r.fail(s["power_per_cpu"], "power_per_cpu must be > 0");
        site.storage_capacity_bytes = r.get(s, "storage_bytes", 0.0);
        if (const auto bg = s["background"]) {
            r.keys(bg, "background", {"waiting", "running", "task_seconds"});
            BackgroundLoad load;
            load.waiting = r.get(bg, "waiting", 0);
            load.running = r.get(bg, "running", 0);
            load.task_seconds = r.get(bg, "task_seconds", 0.0);
            if (load.waiting < 0 || load.running < 0) r.fail(bg, "background counts must be >= 0");
            if (load.running > site.cpu_count) r.fail(bg["running"], "more running jobs than CPUs");
            if ((load.waiting > 0 || load.running > 0) && !(load.task_seconds > 0.0)) {
                r.fail(bg, "background task_seconds must be > 0");
            }
            sim.background[site.id] = load;
        }
        out.sites.push_back(std::move(site));
    }
    if (out.sites.empty()) r.fail(node, "at least one site is required");
}

void parse_links(const Reader& r, const YAML::Node& node, Parsed& out,
                 const std::set<SiteId>& sites) {
    r.expect_seq(node, "links");
    std::set<std::pair<SiteId, SiteId>> seen;
    auto add = [&](const YAML::Node& at, LinkMetrics m) {
        if (!seen.insert({m.src, m.dst}).second) {
            r.fail(at, fmt::format("duplicate link {} -> {}", m.src.str(), m.dst.str()));
        }
        out.links.push_back(std::move(m));
    };
    for (const auto& l : node) {
        r.keys(l, "link", {"src", "dst", "rtt_ms", "loss_rate", "jitter_ms", "bandwidth_mbps", "bidirectional"});
        LinkMetrics m;
        m.src = SiteId(r.require<std::string>(l, "src", "link"));
        m.dst = SiteId(r.require<std::string>(l, "dst", "link"));
        for (const auto* key : {"src", "dst"}) {
            if (!sites.count(SiteId(l[key].as<std::string>()))) {
                r.fail(l[key], fmt::format("link refers to unknown site '{}'", l[key].as<std::string>()));
            }
        }
        if (m.src == m.dst) r.fail(l, "a link must join two different sites");
        m.rtt_ms = r.get(l, "rtt_ms", 0.0);
        m.loss_rate = r.get(l, "loss_rate", 0.0);
        m.jitter_ms = r.get(l, "jitter_ms", 0.0);
        m.bandwidth_mbps = r.require<double>(l, "bandwidth_mbps", "link");
        r.at(l, [&] { m.validate(); });
        add(l, m);
        if (r.get(l, "bidirectional", false)) {
            std::swap(m.src, m.dst);
            add(l, m);
        }
    }
}

void parse_datasets(const Reader& r, const YAML::Node& node, Parsed& out,
                    const std::set<SiteId>& sites) {
    r.expect_seq(node, "datasets");
    std::set<DatasetId> seen;
    for (const auto& d : node) {
        r.keys(d, "dataset", {"id", "size_mb", "size_gb", "replicas"});
        DatasetDescriptor ds;
        ds.id = DatasetId(r.require<std::string>(d, "id", "dataset"));
        if (!seen.insert(ds.id).second) r.fail(d["id"], fmt::format("duplicate dataset id '{}'", ds.id.str()));
        if (d["size_mb"] && d["size_gb"]) r.fail(d, "give either size_mb or size_gb, not both");
        if (d["size_gb"]) {
            ds.size_mb = r.as<double>(d["size_gb"], "size_gb") * kMegabytesPerGigabyte;
        } else {
            ds.size_mb = r.require<double>(d, "size_mb", "dataset");
        }
        if (!(ds.size_mb >= 0.0)) r.fail(d, "dataset size must be >= 0");
        const auto reps = d["replicas"];
        if (!reps) r.fail(d, "dataset is missing required key 'replicas'");
        r.expect_seq(reps, "replicas");
        for (const auto& rep : reps) {
            SiteId site(r.as<std::string>(rep, "replicas"));
            if (!sites.count(site)) r.fail(rep, fmt::format("replica at unknown site '{}'", site.str()));
            ds.replicas.insert(site);
        }
        if (ds.replicas.empty()) r.fail(reps, "dataset needs at least one replica");
        out.datasets.push_back(std::move(ds));
    }
}

void parse_synthetic(const Reader& r, const YAML::Node& node, Parsed& out) {
    r.keys(node, "synthetic_datasets", {"count", "min_gb", "max_gb", "scale_down", "replicas", "seed", "sites"});
    DatasetPoolSpec spec;
    spec.count = r.require<std::size_t>(node, "count", "synthetic_datasets");
    spec.min_mb = r.get(node, "min_gb", spec.min_mb / kMegabytesPerGigabyte) * kMegabytesPerGigabyte;
    spec.max_mb = r.get(node, "max_gb", spec.max_mb / kMegabytesPerGigabyte) * kMegabytesPerGigabyte;
    spec.scale_down = r.get(node, "scale_down", spec.scale_down);
    spec.replicas = r.range(node, "replicas", spec.replicas);
    spec.seed = r.get<std::uint64_t>(node, "seed", 0);
    std::vector<SiteId> ids;
    if (const auto only = node["sites"]) {
        r.expect_seq(only, "sites");
        for (const auto& n : only) {
            SiteId id(r.as<std::string>(n, "sites"));
            const bool known = std::any_of(out.sites.begin(), out.sites.end(),
                                           [&](const SiteDescriptor& s) { return s.id == id; });
            if (!known) r.fail(n, fmt::format("unknown site '{}'", id.str()));
            ids.push_back(id);
        }
    } else {
        for (const auto& s : out.sites) ids.push_back(s.id);
    }
    auto synth = r.at(node, [&] { return synthesize_datasets(spec, ids); });
    for (auto& d : synth) {
        for (const auto& existing : out.datasets) {
            if (existing.id == d.id) r.fail(node, fmt::format("synthetic dataset '{}' clashes with a listed dataset", d.id.str()));
        }
        out.datasets.push_back(std::move(d));
    }
}

JobDescriptor parse_job(const Reader& r, const YAML::Node& j, const std::set<SiteId>& sites,
                        const std::set<DatasetId>& datasets) {
    r.keys(j, "job", {"id", "submit_site", "inputs", "executable_mb", "output_mb", "demand",
                      "sub_jobs", "submit_time", "min_power_per_cpu"});
    JobDescriptor job;
    job.id = JobId(r.require<std::string>(j, "id", "job"));
    job.submit_site = SiteId(r.require<std::string>(j, "submit_site", "job"));
    if (!sites.count(job.submit_site)) r.fail(j["submit_site"], fmt::format("unknown site '{}'", job.submit_site.str()));
    if (const auto in = j["inputs"]) {
        r.expect_seq(in, "inputs");
        for (const auto& d : in) {
            DatasetId id(r.as<std::string>(d, "inputs"));
            if (!datasets.count(id)) r.fail(d, fmt::format("unknown dataset '{}'", id.str()));
            job.input_datasets.push_back(id);
        }
    }
    job.executable_mb = r.get(j, "executable_mb", 0.0);
    job.output_mb = r.get(j, "output_mb", 0.0);
    job.compute_demand = r.require<double>(j, "demand", "job");
    job.sub_job_count = r.get(j, "sub_jobs", 1);
    job.submit_time = r.get(j, "submit_time", 0.0);
    job.min_power_per_cpu = r.get(j, "min_power_per_cpu", 0.0);
    r.at(j, [&] { validate_job(job); });
    return job;
}

WorkloadProfile parse_profile(const Reader& r, const YAML::Node& p, const std::set<SiteId>& sites,
                              const std::set<DatasetId>& datasets) {
    r.keys(p, "profile", {"jobs_per_day", "parallel_target", "datasets", "submit_sites", "inputs_per_job", "demand",
                          "executable_mb", "output_mb", "bulk_fraction", "sub_jobs_per_bundle"});
    WorkloadProfile prof;
    prof.jobs_per_day = r.get(p, "jobs_per_day", prof.jobs_per_day);
    prof.parallel_target = r.get(p, "parallel_target", prof.parallel_target);
    if (const auto pool = p["datasets"]) {
        r.expect_seq(pool, "datasets");
        for (const auto& d : pool) {
            DatasetId id(r.as<std::string>(d, "datasets"));
            if (!datasets.count(id)) r.fail(d, fmt::format("unknown dataset '{}'", id.str()));
            prof.dataset_pool.push_back(id);
        }
    }
    if (const auto subs = p["submit_sites"]) {
        r.expect_seq(subs, "submit_sites");
        for (const auto& n : subs) {
            SiteId id(r.as<std::string>(n, "submit_sites"));
            if (!sites.count(id)) r.fail(n, fmt::format("unknown site '{}'", id.str()));
            prof.submit_sites.push_back(id);
        }
    }
    prof.inputs_per_job = r.range(p, "inputs_per_job", prof.inputs_per_job);
    prof.demand = r.range(p, "demand", prof.demand);
    prof.executable_mb = r.range(p, "executable_mb", prof.executable_mb);
    prof.output_mb = r.range(p, "output_mb", prof.output_mb);
    prof.bulk_fraction = r.get(p, "bulk_fraction", prof.bulk_fraction);
    prof.sub_jobs_per_bundle = r.range(p, "sub_jobs_per_bundle", prof.sub_jobs_per_bundle);
    r.at(p, [&] { prof.validate(); });
    if (prof.inputs_per_job.min > 0 && datasets.empty() && prof.dataset_pool.empty()) {
        r.fail(p, "jobs need input datasets but the scenario defines none");
    }
    return prof;
}

Scenario parse_root(const YAML::Node& root, const Reader& r) {
    r.keys(root, "scenario",
           {"schema", "name", "seed", "scheduler", "shortlist_k", "export_threshold", "weights", "cost",
            "telemetry", "sites", "links", "datasets", "synthetic_datasets", "workload"});
    const auto schema = root["schema"];
    if (!schema) r.fail(root, "missing 'schema' (expected 1)");
    if (r.as<int>(schema, "schema") != kScenarioSchema) {
        r.fail(schema, fmt::format("unsupported schema {} (expected {})", schema.as<std::string>(), kScenarioSchema));
    }

    Scenario sc;
    sc.source = r.source();
    sc.name = r.get<std::string>(root, "name", "");
    sc.seed = r.get<std::uint64_t>(root, "seed", 0);
    if (const auto s = root["scheduler"]) {
        sc.scheduler = r.at(s, [&] { return parse_policy(r.as<std::string>(s, "scheduler")); });
    }
    sc.sim.matchmaking.shortlist_k = r.get(root, "shortlist_k", sc.sim.matchmaking.shortlist_k);
    if (sc.sim.matchmaking.shortlist_k < 1) r.fail(root["shortlist_k"], "shortlist_k must be >= 1");
    sc.sim.export_threshold = r.get(root, "export_threshold", sc.sim.export_threshold);
    if (!(sc.sim.export_threshold >= 0.0)) r.fail(root["export_threshold"], "export_threshold must be >= 0");

    if (const auto w = root["weights"]) parse_weights(r, w, sc.sim.cost.weights);
    if (const auto c = root["cost"]) parse_cost(r, c, sc.sim.cost);
    if (const auto t = root["telemetry"]) parse_telemetry(r, t, sc.sim.telemetry);

    Parsed parsed;
    if (!root["sites"]) r.fail(root, "missing 'sites'");
    parse_sites(r, root["sites"], parsed, sc.sim);
    std::set<SiteId> site_ids;
    for (const auto& s : parsed.sites) site_ids.insert(s.id);

    const auto links_node = root["links"];
    if (links_node) {
        parse_links(r, links_node, parsed, site_ids);
    } else if (parsed.sites.size() > 1) {
        r.fail(root, "missing 'links'");
    }
    if (const auto d = root["datasets"]) parse_datasets(r, d, parsed, site_ids);
    if (const auto d = root["synthetic_datasets"]) parse_synthetic(r, d, parsed);
    std::set<DatasetId> dataset_ids;
    for (const auto& d : parsed.datasets) dataset_ids.insert(d.id);

    const auto wl = root["workload"];
    if (!wl) r.fail(root, "missing 'workload'");
    r.keys(wl, "workload", {"jobs", "profile", "horizon_seconds", "count"});
    if (wl["jobs"] && wl["profile"]) r.fail(wl, "workload takes either 'jobs' or 'profile', not both");

    // Jobs that reach every site from every submission site, reading every dataset a
    // profile may draw; validating against them proves that any generated
    // job has the links it needs.
    std::vector<JobDescriptor> probes;
    const YAML::Node diag = links_node ? links_node : root;
    if (const auto jobs = wl["jobs"]) {
        r.expect_seq(jobs, "jobs");
        std::set<JobId> seen;
        for (const auto& j : jobs) {
            auto job = parse_job(r, j, site_ids, dataset_ids);
            if (!seen.insert(job.id).second) r.fail(j["id"], fmt::format("duplicate job id '{}'", job.id.str()));
            sc.inline_jobs.push_back(std::move(job));
        }
        probes = sc.inline_jobs;
    } else if (const auto p = wl["profile"]) {
        auto prof = parse_profile(r, p, site_ids, dataset_ids);
        if (wl["horizon_seconds"] && wl["count"]) r.fail(wl, "give either horizon_seconds or count, not both");
        if (wl["count"]) {
            sc.job_count = r.as<std::size_t>(wl["count"], "count");
        } else {
            sc.horizon_seconds = r.get(wl, "horizon_seconds", 86400.0);
            if (!(*sc.horizon_seconds > 0.0)) r.fail(wl["horizon_seconds"], "horizon_seconds must be > 0");
        }
        std::vector<DatasetId> pool = prof.dataset_pool;
        if (pool.empty() && prof.inputs_per_job.max > 0) pool.assign(dataset_ids.begin(), dataset_ids.end());
        for (const auto& s : parsed.sites) {
            if (!prof.submit_sites.empty() &&
                std::find(prof.submit_sites.begin(), prof.submit_sites.end(), s.id) == prof.submit_sites.end()) {
                continue;
            }
            JobDescriptor probe;
            probe.id = JobId("probe@" + s.id.str());
            probe.submit_site = s.id;
            probe.input_datasets = pool;
            probes.push_back(std::move(probe));
        }
        sc.profile = std::move(prof);
    } else {
        r.fail(wl, "workload needs 'jobs' or 'profile'");
    }

    sc.topology = r.at(diag, [&] {
        return validate_topology(parsed.sites, parsed.links, parsed.datasets, probes);
    });
    sc.reseed(sc.seed);
    return sc;
}

}  // namespace

std::vector<JobDescriptor> Scenario::jobs() const {
    if (!profile) return inline_jobs;
    if (job_count) return generate_n(*profile, *job_count, topology);
    return generate(*profile, horizon_seconds.value_or(86400.0), topology);
}

std::vector<JobDescriptor> Scenario::jobs(std::size_t n) const {
    if (profile) return generate_n(*profile, n, topology);
    if (n > inline_jobs.size()) {
        throw Error(ErrorCode::Scenario, fmt::format("{}: {} jobs requested but the scenario lists only {}",
                                                     source, n, inline_jobs.size()));
    }
    return {inline_jobs.begin(), inline_jobs.begin() + static_cast<std::ptrdiff_t>(n)};
}

void Scenario::reseed(std::uint64_t s) {
    seed = s;
    sim.seed = s;
    if (profile) profile->seed = s;
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
    Reader r(source);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        r.fail(e.mark, e.msg);
    }
    if (!root.IsMap()) throw Error(ErrorCode::Scenario, fmt::format("{}: scenario must be a mapping", source));
    try {
        return parse_root(root, r);
    } catch (const YAML::Exception& e) {
        r.fail(e.mark, e.msg);
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Scenario, fmt::format("{}: cannot open file", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

}  // namespace diana
