#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <tuple>

#include "diana/matchmaker.hpp"
#include "diana/simulator.hpp"
#include "support.hpp"

using namespace diana;
using namespace diana::test;

namespace {

constexpr int kCases = 1000;

struct Snapshot {
    ValidatedTopology topo;
    GlobalLoadSnapshot load;

    explicit Snapshot(const RandomGrid& g) : topo(validate_topology(g.sites, g.links, g.datasets)) {
        std::map<SiteId, QueueCounts> counts;
        for (const auto& [id, q] : g.queues) counts[id] = {q.first, q.second};
        load = GlobalLoadSnapshot::build(topo, counts);
    }
    GridView view() const { return {topo, topo.catalog(), topo.links(), load}; }
};

}  // namespace

TEST_CASE("simulated schedules keep their invariants") {
    Rng rng(2718);
    for (int c = 0; c < kCases; ++c) {
        const auto run = random_run(rng);
        const auto r = simulate(run.topology, run.jobs, run.config, run.policy);

        // conservation: every job ran exactly once, in order of its phases
        REQUIRE(r.jobs.size() == run.jobs.size());
        for (const auto& j : r.jobs) {
            CHECK(j.transfer_done_time >= j.submit_time);
            CHECK(j.start_time >= j.transfer_done_time);
            CHECK(j.finish_time > j.start_time);
            CHECK(j.staged_out_time >= j.finish_time);
        }

        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < run.jobs.size(); ++i) index[run.jobs[i].id.str()] = i;

        std::map<SiteId, std::vector<const TaskRecord*>> by_site;
        std::map<std::string, int> sub_jobs_seen;
        for (const auto& t : r.tasks) {
            by_site[t.site].push_back(&t);
            if (!t.job) continue;
            const auto i = index.at(t.job->str());
            const auto& rec = r.jobs[i];
            ++sub_jobs_seen[t.job->str()];
            // co-location and non-preemptive execution
            CHECK(t.site == rec.placement.exec_site);
            const double power = run.topology.site(t.site).power_per_cpu;
            CHECK(t.finish - t.start == doctest::Approx(run.jobs[i].compute_demand / power));
            CHECK(t.start >= rec.start_time);
            CHECK(t.finish <= rec.finish_time);
        }
        for (const auto& j : run.jobs) CHECK(sub_jobs_seen[j.id.str()] == j.sub_job_count);

        for (auto& [site_id, tasks] : by_site) {
            const int cpus = run.topology.site(site_id).cpu_count;
            CHECK(r.peak_running.at(site_id) <= cpus);
            // slots are never shared
            for (std::size_t a = 0; a < tasks.size(); ++a) {
                CHECK(tasks[a]->slot >= 0);
                CHECK(tasks[a]->slot < cpus);
                for (std::size_t b = a + 1; b < tasks.size(); ++b) {
                    if (tasks[a]->slot != tasks[b]->slot) continue;
                    CHECK((tasks[a]->finish <= tasks[b]->start || tasks[b]->finish <= tasks[a]->start));
                }
            }
            // first come first served: background first, then jobs in the
            // order they reached the site
            auto key = [&](const TaskRecord* t) {
                if (!t->job) return std::make_tuple(-1.0, std::size_t{0}, t->sub_job);
                const auto i = index.at(t->job->str());
                return std::make_tuple(run.jobs[i].submit_time, i, t->sub_job);
            };
            std::stable_sort(tasks.begin(), tasks.end(),
                             [&](const TaskRecord* a, const TaskRecord* b) { return key(a) < key(b); });
            for (std::size_t k = 1; k < tasks.size(); ++k) CHECK(tasks[k - 1]->start <= tasks[k]->start);
        }
    }
}

TEST_CASE("selection matches exhaustive search") {
    Rng rng(31337);
    for (int c = 0; c < kCases; ++c) {
        const auto g = random_grid(rng);
        const Snapshot s(g);
        CostModel model;
        model.weights = random_weights(rng);
        if (rng.coin()) model.dtc_losses_override = rng.uniform(0.1, 5);
        if (rng.coin()) model.nc_site = rng.uniform(0, 0.5);
        const Matchmaker mm(s.view(), model);
        const auto p = mm.get_best_computing_element(g.job);
        const auto best = brute_force(g, RefModel{model.weights, model.dtc_losses_override, model.nc_site});
        const double tol = 1e-9 * std::max(1.0, std::abs(best.total));
        // a different site is only acceptable on a tie within rounding
        CHECK(std::abs(p.breakdown.total - best.total) <= tol);
        if (std::abs(p.breakdown.total - best.total) > tol) MESSAGE("picked ", p.exec_site.str(), " not ", best.site.str());
    }
}

TEST_CASE("selection is unchanged by scaling every weight") {
    Rng rng(99);
    int ties = 0;
    for (int c = 0; c < kCases; ++c) {
        const auto g = random_grid(rng);
        const Snapshot s(g);
        CostModel model;
        model.weights = random_weights(rng);
        model.dtc_losses_override = rng.uniform(0.1, 5);
        model.nc_site = rng.uniform(0, 0.5);
        // powers of two scale every sum exactly
        const double factor = std::ldexp(1.0, rng.integer(-3, 3));
        CostModel scaled = model;
        for (double* w : {&scaled.weights.w1, &scaled.weights.w2, &scaled.weights.w3, &scaled.weights.w5,
                          &scaled.weights.w6, &scaled.weights.w7, &scaled.weights.w8, &scaled.weights.w9,
                          &scaled.weights.w10}) {
            *w *= factor;
        }
        const auto a = Matchmaker(s.view(), model).get_best_computing_element(g.job);
        const auto b = Matchmaker(s.view(), scaled).get_best_computing_element(g.job);
        CHECK(a.exec_site == b.exec_site);
        CHECK(b.breakdown.total == doctest::Approx(a.breakdown.total * factor));

        // arbitrary factors: the choice may only differ on a near tie
        const double k = rng.uniform(0.2, 5);
        CostModel other = model;
        for (double* w : {&other.weights.w1, &other.weights.w2, &other.weights.w3, &other.weights.w5,
                          &other.weights.w6, &other.weights.w7, &other.weights.w8, &other.weights.w9,
                          &other.weights.w10}) {
            *w *= k;
        }
        const auto o = Matchmaker(s.view(), other).get_best_computing_element(g.job);
        if (o.exec_site != a.exec_site) {
            ++ties;
            const auto alt = Matchmaker(s.view(), model).evaluate(g.job, o.exec_site, g.job.submit_site);
            CHECK(alt.total == doctest::Approx(a.breakdown.total).epsilon(1e-9));
        }
    }
    CHECK(ties < kCases / 100);
}

TEST_CASE("a growing queue repels work") {
    Rng rng(4242);
    for (int c = 0; c < kCases; ++c) {
        auto g = random_grid(rng);
        CostModel model;
        model.weights = random_weights(rng);
        model.weights.w6 = 0;  // the global queue term moves every site at once
        if (model.weights.w5 == 0 && model.weights.w7 == 0) model.weights.w5 = 1;
        const auto before = Matchmaker(Snapshot(g).view(), model).get_best_computing_element(g.job);

        const auto& target = g.sites[rng.integer(0, static_cast<int>(g.sites.size()) - 1)].id;
        auto busier = g;
        busier.queues[target].first += rng.integer(1, 500);
        const auto after = Matchmaker(Snapshot(busier).view(), model).get_best_computing_element(busier.job);
        if (before.exec_site != target) CHECK(after.exec_site != target);

        if (g.sites.size() > 1) {
            auto swamped = g;
            swamped.queues[before.exec_site].first += 1'000'000'000;
            const auto moved =
                Matchmaker(Snapshot(swamped).view(), model).get_best_computing_element(swamped.job);
            CHECK(moved.exec_site != before.exec_site);
        }
    }
}

TEST_CASE("the selected site is always shortlisted") {
    Rng rng(777);
    for (int c = 0; c < kCases; ++c) {
        const auto g = random_grid(rng, 9, 3);
        const Snapshot s(g);
        CostModel model;
        model.weights = random_weights(rng);
        MatchmakerOptions opt;
        opt.shortlist_k = static_cast<std::size_t>(rng.integer(1, 6));
        const Matchmaker mm(s.view(), model, opt);
        const auto sl = mm.shortlist_sites(g.job);
        CHECK(sl.size() == std::min(opt.shortlist_k, g.sites.size()));
        const auto p = mm.get_best_computing_element(g.job);
        CHECK(std::find(sl.begin(), sl.end(), p.exec_site) != sl.end());
    }
}

TEST_CASE("mathis rate falls as delay and loss grow") {
    Rng rng(1);
    for (int c = 0; c < kCases; ++c) {
        const double mss = rng.uniform(500, 9000);
        const double rtt = rng.uniform(0.1, 1000);
        const double loss = rng.uniform(1e-7, 0.5);
        const double base = mathis_rate(mss, rtt, loss);
        CHECK(mathis_rate(mss, rtt * rng.uniform(1.001, 10), loss) < base);
        CHECK(mathis_rate(mss, rtt, std::min(1.0, loss * rng.uniform(1.001, 10))) < base);
        CHECK(mathis_rate(mss, 2 * rtt, loss) == doctest::Approx(base / 2).epsilon(1e-12));
    }
}
