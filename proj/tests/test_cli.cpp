#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "diana/cli.hpp"

using namespace diana;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "diana");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string scenario(const std::string& name) { return std::string(DIANA_SOURCE_DIR) + "/scenarios/" + name; }

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("diana-cli-" + std::to_string(std::rand()) + "-" +
                                            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& sub) const { return (path / sub).string(); }
};

}  // namespace

TEST_CASE("run writes the result files") {
    TempDir tmp;
    const auto r = run({"run", scenario("minimal.yaml"), "--out", tmp / "r", "--trace", "--explain"});
    CHECK(r.code == 0);
    for (const char* f : {"jobs.csv", "summary.txt", "trace.csv", "explain.txt"}) {
        CHECK(fs::exists(tmp.path / "r" / f));
    }
    const auto csv = slurp(tmp.path / "r" / "jobs.csv");
    CHECK(csv.rfind("job_id,scheduler,submit_site,exec_site,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(r.out.find("selected:") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp.path / "r" / "jobs.csv.tmp"));
}

TEST_CASE("same seed, identical files") {
    TempDir tmp;
    REQUIRE(run({"run", scenario("hotspot.yaml"), "--out", tmp / "a", "--seed", "11"}).code == 0);
    REQUIRE(run({"run", scenario("hotspot.yaml"), "--out", tmp / "b", "--seed", "11"}).code == 0);
    REQUIRE(run({"run", scenario("hotspot.yaml"), "--out", tmp / "c", "--seed", "12"}).code == 0);
    CHECK(slurp(tmp.path / "a" / "jobs.csv") == slurp(tmp.path / "b" / "jobs.csv"));
    CHECK(slurp(tmp.path / "a" / "jobs.csv") != slurp(tmp.path / "c" / "jobs.csv"));
}

TEST_CASE("seed precedence") {
    TempDir tmp;
    ::setenv("DIANA_SEED", "11", 1);
    REQUIRE(run({"run", scenario("hotspot.yaml"), "--out", tmp / "env"}).code == 0);
    REQUIRE(run({"run", scenario("hotspot.yaml"), "--out", tmp / "flag", "--seed", "12"}).code == 0);
    ::setenv("DIANA_SEED", "nonsense", 1);
    CHECK(run({"run", scenario("hotspot.yaml"), "--out", tmp / "bad"}).code == kExitInvalid);
    ::unsetenv("DIANA_SEED");
    REQUIRE(run({"run", scenario("hotspot.yaml"), "--out", tmp / "s11", "--seed", "11"}).code == 0);
    REQUIRE(run({"run", scenario("hotspot.yaml"), "--out", tmp / "s12", "--seed", "12"}).code == 0);
    CHECK(slurp(tmp.path / "env" / "jobs.csv") == slurp(tmp.path / "s11" / "jobs.csv"));
    CHECK(slurp(tmp.path / "flag" / "jobs.csv") == slurp(tmp.path / "s12" / "jobs.csv"));
}

TEST_CASE("invalid input exits with 2") {
    TempDir tmp;
    fs::create_directories(tmp.path);
    const auto bad = tmp / "bad.yaml";
    {
        std::ofstream f(bad);
        f << "schema: 1\nweights: {w5: 25}\nsites: [{id: a, cpus: 1}]\nlinks: []\n"
             "workload: {jobs: [{id: j, submit_site: a}]}\n";
    }
    const auto r = run({"run", bad, "--out", tmp / "o"});
    CHECK(r.code == kExitInvalid);
    CHECK(r.err.find("w5") != std::string::npos);
    CHECK(r.err.find("bad.yaml:2:") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp.path / "o" / "jobs.csv"));

    CHECK(run({"run", tmp / "missing.yaml"}).code == kExitInvalid);
    CHECK(run({"run", scenario("minimal.yaml"), "--scheduler", "best", "--out", tmp / "o"}).code == kExitInvalid);
    CHECK(run({"frobnicate"}).code == kExitInvalid);
    CHECK(run({}).code == kExitInvalid);
    CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("compare writes a table and one file per point") {
    TempDir tmp;
    const auto r = run({"compare", scenario("heterogeneous.yaml"), "--out", tmp / "c", "--jobs", "10,20",
                        "--schedulers", "diana,data_local", "--threads", "2"});
    REQUIRE(r.code == 0);
    const auto csv = slurp(tmp.path / "c" / "compare.csv");
    CHECK(csv.rfind("scheduler,n_jobs,mean_queue,mean_exec,mean_completion\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(fs::exists(tmp.path / "c" / "points" / "diana-10.csv"));
    CHECK(fs::exists(tmp.path / "c" / "points" / "data_local-20.csv"));
    CHECK(r.out.find("mean completion") != std::string::npos);

    // thread count does not change the numbers
    REQUIRE(run({"compare", scenario("heterogeneous.yaml"), "--out", tmp / "d", "--jobs", "10,20",
                 "--schedulers", "diana,data_local", "--threads", "1"})
                .code == 0);
    CHECK(csv == slurp(tmp.path / "d" / "compare.csv"));

    CHECK(run({"compare", scenario("heterogeneous.yaml"), "--out", tmp / "e", "--jobs", "0"}).code ==
          kExitInvalid);
}
