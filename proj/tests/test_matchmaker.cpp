#include <doctest.h>

#include "diana/matchmaker.hpp"
#include "support.hpp"

using namespace diana;
using namespace diana::test;

namespace {

struct Fixture {
    ValidatedTopology topo;
    GlobalLoadSnapshot load;

    Fixture(const std::vector<SiteDescriptor>& sites, const std::vector<LinkMetrics>& links,
            const std::vector<DatasetDescriptor>& ds, const std::map<SiteId, QueueCounts>& counts = {})
        : topo(validate_topology(sites, links, ds)), load(GlobalLoadSnapshot::build(topo, counts)) {}

    GridView view() const { return {topo, topo.catalog(), topo.links(), load}; }
};

Fixture worked_example() {
    const std::vector<SiteDescriptor> sites{site("Japan", 8), site("Switzerland", 50), site("UK", 30),
                                            site("rest", 100)};
    auto links = full_mesh(sites, 15, 0, 0, 1000);
    for (auto& l : links) {
        if (l.src.str() != "Japan" && l.dst.str() != "Japan") continue;
        l.rtt_ms = 20;
        const auto other = l.src.str() == "Japan" ? l.dst.str() : l.src.str();
        l.bandwidth_mbps = other == "UK" ? 10 * 1024 : 100;
    }
    const std::vector<DatasetDescriptor> ds{dataset("higgs", 100 * 1024, {"Japan"})};
    return Fixture(sites, links, ds,
                   {{SiteId("Japan"), {20, 0}}, {SiteId("Switzerland"), {2, 0}}, {SiteId("UK"), {10, 10}},
                    {SiteId("rest"), {968, 0}}});
}

CostModel worked_model() {
    CostModel m;
    m.weights = {1, 0, 0, 10, 5, 20, 10, 0, 0};
    m.dtc_losses_override = 1.0;
    return m;
}

}  // namespace

TEST_CASE("worked example selects the UK") {
    const auto f = worked_example();
    Matchmaker mm(f.view(), worked_model());
    const auto j = job("j", "Japan", {"higgs"});
    CHECK(mm.evaluate(j, SiteId("Japan"), SiteId("Japan")).total == doctest::Approx(700).epsilon(1e-12));
    CHECK(mm.evaluate(j, SiteId("Switzerland"), SiteId("Japan")).total == doctest::Approx(10341.4));
    CHECK(mm.evaluate(j, SiteId("UK"), SiteId("Japan")).total == doctest::Approx(283.3353).epsilon(1e-6));
    const auto p = mm.get_best_computing_element(j, 12.5);
    CHECK(p.exec_site == SiteId("UK"));
    CHECK(p.chosen_replicas.at(DatasetId("higgs")) == SiteId("Japan"));
    CHECK(p.decided_at == 12.5);
}

TEST_CASE("pinned matrix") {
    const std::vector<SiteId> s{SiteId("Italy"), SiteId("Austria")};
    const auto m = CostMatrix::from_totals(s, {{{s[0], s[1]}, 50}, {{s[1], s[0]}, 58}});
    CHECK(m.cells().size() == 2);
    CHECK(m.diagonal().empty());
    CHECK(*m.cost(s[0], s[1]) == 50);
    CHECK(*m.cost(s[1], s[0]) == 58);
    CHECK_FALSE(m.cost(s[0], s[0]));
    CHECK(m.row_minimum(s[0]) == s[1]);
    CHECK_THROWS_AS(CostMatrix::from_totals(s, {{{s[0], s[1]}, 50}}), Error);

    const auto five = CostMatrix::from_totals(five_sites(), five_site_totals());
    CHECK(five.cells().size() == 20);
    CHECK(*five.cost(SiteId("Japan"), SiteId("Italy")) == 70);
    CHECK(five.row_minimum(SiteId("Italy")) == SiteId("Switzerland"));
    CHECK(five.row_minimum(SiteId("Switzerland")) == SiteId("UK"));
    CHECK(five.row_minimum(SiteId("Austria")) == SiteId("Switzerland"));
}

TEST_CASE("matrix cells for a two-site shortlist") {
    const std::vector<SiteDescriptor> sites{site("a", 4), site("b", 4)};
    Fixture f(sites, full_mesh(sites, 10, 0.001, 1, 100), {});
    Matchmaker mm(f.view(), CostModel{});
    const auto m = mm.build_cost_matrix({SiteId("a"), SiteId("b")}, job("j", "a"));
    CHECK(m.cells().size() == 2);
    // symmetric metrics and identical sites
    CHECK(*m.cost(SiteId("a"), SiteId("b")) == *m.cost(SiteId("b"), SiteId("a")));
}

TEST_CASE("missing pair in the matrix") {
    const std::vector<SiteDescriptor> sites{site("a", 1), site("b", 1), site("c", 1)};
    const std::vector<LinkMetrics> links{link("a", "b", 1, 0, 0, 1), link("b", "a", 1, 0, 0, 1),
                                         link("a", "c", 1, 0, 0, 1), link("c", "a", 1, 0, 0, 1)};
    Fixture f(sites, links, {});
    Matchmaker mm(f.view(), CostModel{});
    try {
        mm.build_cost_matrix({SiteId("a"), SiteId("b"), SiteId("c")}, job("j", "a"));
        FAIL("expected MissingLink");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingLink);
    }
}

TEST_CASE("shortlist length and order") {
    std::vector<SiteDescriptor> sites;
    for (int i = 0; i < 9; ++i) sites.push_back(site("s" + std::to_string(i), 10 + i));
    Fixture f(sites, full_mesh(sites, 10, 0, 0, 100), {});
    Matchmaker mm(f.view(), CostModel{});
    const auto j = job("j", "s0");
    CHECK(mm.shortlist_sites(j).size() == 5);

    const std::vector<SiteDescriptor> small(sites.begin(), sites.begin() + 3);
    Fixture g(small, full_mesh(small, 10, 0, 0, 100), {});
    CHECK(Matchmaker(g.view(), CostModel{}).shortlist_sites(j).size() == 3);

    // identical sites come back in id order
    const std::vector<SiteDescriptor> twins{site("b", 4), site("a", 4)};
    Fixture t(twins, full_mesh(twins, 10, 0, 0, 100), {});
    const auto sl = Matchmaker(t.view(), CostModel{}).shortlist_sites(job("j", "a"));
    CHECK(sl == std::vector<SiteId>{SiteId("a"), SiteId("b")});
}

TEST_CASE("exclusions and minimum power") {
    const std::vector<SiteDescriptor> sites{site("slow", 100, 0.5), site("fast", 2, 2.0), site("mid", 4, 1.0)};
    Fixture f(sites, full_mesh(sites, 10, 0, 0, 100), {});
    Matchmaker mm(f.view(), CostModel{});
    auto j = job("j", "slow");
    j.min_power_per_cpu = 1.0;
    for (const auto& s : mm.shortlist_sites(j)) CHECK(s != SiteId("slow"));
    CHECK(mm.get_best_computing_element(j).exec_site != SiteId("slow"));
    const auto p = mm.get_best_computing_element(j, 0, {SiteId("fast")});
    CHECK(p.exec_site == SiteId("mid"));
    try {
        mm.get_best_computing_element(j, 0, {SiteId("fast"), SiteId("mid")});
        FAIL("expected NoEligibleSite");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoEligibleSite);
    }
}

TEST_CASE("single site") {
    const std::vector<SiteDescriptor> sites{site("only", 3)};
    Fixture f(sites, {}, {});
    Matchmaker mm(f.view(), CostModel{});
    const auto j = job("j", "only");
    const auto p = mm.get_best_computing_element(j);
    CHECK(p.exec_site == SiteId("only"));
    CHECK(p.breakdown == mm.evaluate(j, SiteId("only"), SiteId("only")));
}

TEST_CASE("submitter outside the shortlist falls back to direct evaluation") {
    // The submitter is tiny and overloaded, so k=1 leaves it out.
    const std::vector<SiteDescriptor> sites{site("sub", 1), site("x", 50), site("y", 40)};
    Fixture f(sites, full_mesh(sites, 10, 0, 0, 100), {}, {{SiteId("sub"), {500, 1}}});
    MatchmakerOptions opt;
    opt.shortlist_k = 1;
    Matchmaker mm(f.view(), CostModel{}, opt);
    const auto j = job("j", "sub");
    const auto sl = mm.shortlist_sites(j);
    REQUIRE(sl.size() == 1);
    CHECK(sl[0] != SiteId("sub"));
    CHECK(mm.get_best_computing_element(j).exec_site == sl[0]);
}

TEST_CASE("matrix cache") {
    const auto f = worked_example();
    Matchmaker mm(f.view(), worked_model());
    MatrixCache cache;
    mm.attach_cache(&cache, 1, 1);
    const auto a = job("a", "Japan", {"higgs"});
    auto b = a;
    b.id = JobId("b");
    b.submit_site = SiteId("UK");
    const auto pa = mm.get_best_computing_element(a);
    mm.get_best_computing_element(b);
    CHECK(cache.misses() == 1);
    CHECK(cache.hits() == 1);
    mm.attach_cache(&cache, 2, 1);
    CHECK(mm.get_best_computing_element(a) == pa);
    CHECK(cache.misses() == 2);

    Matchmaker uncached(f.view(), worked_model());
    CHECK(uncached.get_best_computing_element(b) == mm.get_best_computing_element(b));
}

TEST_CASE("job signature ignores the submitter") {
    auto a = job("a", "x", {"d1", "d2"});
    auto b = job("b", "y", {"d1", "d2"});
    CHECK(job_signature(a) == job_signature(b));
    b.output_mb = 7;
    CHECK(job_signature(a) != job_signature(b));
    CHECK(job_signature(a) != job_signature(a, {SiteId("x")}));
}

TEST_CASE("jobs without input data") {
    const std::vector<SiteDescriptor> sites{site("a", 4), site("b", 40)};
    Fixture f(sites, full_mesh(sites, 10, 0, 0, 100), {});
    Matchmaker mm(f.view(), CostModel{});
    const auto p = mm.get_best_computing_element(job("j", "a"));
    CHECK(p.chosen_replicas.empty());
    CHECK(p.breakdown.data_transfer_cost >= 0.0);
}
