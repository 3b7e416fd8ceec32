#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "bhlab/cli.hpp"

using namespace bhlab;

namespace {

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliResult r;
    r.code = cli::run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("learn requires a seed and positive trials") {
    auto no_seed = run({"learn", "--algo", "ei", "--n", "32", "--d", "1", "--epsilon", "0.3",
                        "--delta", "0.3", "--trials", "10"});
    CHECK(no_seed.code == 2);

    auto zero_trials = run({"learn", "--algo", "ei", "--n", "32", "--d", "1", "--epsilon", "0.3",
                            "--delta", "0.3", "--trials", "0", "--seed", "7"});
    CHECK(zero_trials.code == 2);
}

TEST_CASE("learn emits json-lines records plus a summary") {
    auto r = run({"learn", "--algo", "lmn", "--n", "16", "--d", "1", "--epsilon", "0.5",
                  "--delta", "0.25", "--trials", "20", "--seed", "99"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    int records = 0;
    nlohmann::json last;
    while (std::getline(lines, line)) {
        last = nlohmann::json::parse(line);
        if (last.contains("trial")) {
            ++records;
            CHECK(last.at("algo") == "lmn");
            CHECK(last.at("n") == 16);
            CHECK(last.at("N").get<std::int64_t>() > 0);
        }
    }
    CHECK(records == 20);
    CHECK(last.contains("success_rate"));
    CHECK(last.contains("mean_l2err"));
    CHECK(last.contains("N_used"));
    CHECK(last.at("success_rate").get<double>() >= 0.70);
}

TEST_CASE("learn exit policy follows the success threshold") {
    std::vector<learning::TrialRecord> records(10);
    for (int i = 0; i < 10; ++i) records[i].success = i < 7;
    auto s = learning::summarize(records);
    CHECK(s.success_rate == 0.7);
    CHECK((s.success_rate >= 1.0 - 0.25 - 0.05));   // passes at delta = 0.25
    CHECK(!(s.success_rate >= 1.0 - 0.1 - 0.05));   // fails at delta = 0.1
}

TEST_CASE("verify filters by name and rejects composite K on prime-only checks") {
    auto k3 = run({"verify", "--only", "cyclic.k3"});
    REQUIRE(k3.code == 0);
    auto j = nlohmann::json::parse(k3.out);
    CHECK(j.at("all_pass") == true);
    REQUIRE(j.at("checks").size() == 2);
    CHECK(j.at("checks")[0].at("check") == "cyclic.k3.value");

    auto comp = run({"verify", "--only", "quantum.sigma-cover", "--K", "4"});
    CHECK(comp.code == 2);

    auto prime = run({"verify", "--only", "quantum.sigma-cover", "--K", "5"});
    CHECK(prime.code == 0);

    auto bogus = run({"verify", "--only", "no-such-check"});
    CHECK(bogus.code == 2);
}

TEST_CASE("scan n-scaling emits csv rows and the crossover witness") {
    auto r = run({"scan", "--what", "n-scaling", "--d", "2", "--n", "64,256,1024,4096,16384",
                  "--epsilon", "0.1", "--delta", "0.1"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("n,N_lmn,N_ei") != std::string::npos);
    CHECK(r.out.find("crossover_n0=") != std::string::npos);
    // The thresholded learner wins before the end of this sweep.
    CHECK(r.out.find("crossover_n0=none") == std::string::npos);

    auto empty = run({"scan", "--what", "n-scaling", "--d", "2", "--n", ""});
    CHECK(empty.code == 2);
}

TEST_CASE("bh ratio scans stay under the boolean constant") {
    auto r = run({"bh-scan", "--d", "2", "--n", "8", "--instances", "200", "--seed", "5"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("d,n,instances,max_ratio,upper_bound") != std::string::npos);

    auto via_scan = run({"scan", "--what", "bh-ratio", "--d", "2", "--n", "8", "--instances",
                         "200", "--seed", "5"});
    REQUIRE(via_scan.code == 0);
    CHECK(via_scan.out == r.out);
}

TEST_CASE("cyclic and qudit report subcommands") {
    auto remez = run({"cyclic-remez", "--K", "3", "--n", "2", "--d", "2", "--M", "12",
                      "--instances", "3", "--seed", "11"});
    REQUIRE(remez.code == 0);
    CHECK(nlohmann::json::parse(remez.out).at("all_pass") == true);

    auto split = run({"cyclic-split", "--K", "3", "--n", "3", "--d", "3", "--instances", "5",
                      "--seed", "11"});
    REQUIRE(split.code == 0);
    CHECK(nlohmann::json::parse(split.out).at("all_pass") == true);

    auto qudit = run({"qudit-reduce", "--K", "3", "--n", "2", "--d", "2", "--instances", "3",
                      "--seed", "11"});
    REQUIRE(qudit.code == 0);
    auto qj = nlohmann::json::parse(qudit.out);
    CHECK(qj.at("all_pass") == true);
    CHECK(qj.at("observables").size() == 1);

    CHECK(run({"cyclic-remez", "--K", "4"}).code == 2);
    CHECK(run({"cyclic-split", "--K", "9"}).code == 2);
    CHECK(run({"qudit-reduce", "--K", "4"}).code == 2);
}

TEST_CASE("same seed and config give byte-identical files") {
    const std::string a = "/tmp/bhlab_test_a.jsonl";
    const std::string b = "/tmp/bhlab_test_b.jsonl";
    std::vector<std::string> learn_args{"learn", "--algo", "ei",     "--n",     "64",
                                        "--d",   "1",      "--epsilon", "0.3",  "--delta",
                                        "0.3",   "--trials", "10",   "--seed",  "77"};
    auto la = learn_args;
    la.push_back("--out");
    la.push_back(a);
    auto lb = learn_args;
    lb.push_back("--out");
    lb.push_back(b);
    REQUIRE(run(la).code == 0);
    REQUIRE(run(lb).code == 0);
    CHECK(slurp(a) == slurp(b));

    auto va = run({"verify", "--only", "cyclic", "--seed", "31"});
    auto vb = run({"verify", "--only", "cyclic", "--seed", "31"});
    CHECK(va.out == vb.out);
    std::remove(a.c_str());
    std::remove(b.c_str());
}

TEST_CASE("spectrum serialization round trip and caps") {
    cube::WalshSpectrum s;
    s.n = 6;
    s.coeffs.emplace_back(cube::Subset::of({0}), 0.5);
    s.coeffs.emplace_back(cube::Subset::of({1, 3}), -0.25);
    auto j = serialize::spectrum_to_json(s);
    CHECK(j.at("coeffs")[0][0] == 1);       // masks ascending
    CHECK(j.at("coeffs")[1][0] == 10);
    auto back = serialize::spectrum_from_json(j);
    CHECK(back.n == 6);
    REQUIRE(back.coeffs.size() == 2);
    CHECK(back.at(cube::Subset::of({1, 3})) == -0.25);

    cube::WalshSpectrum wide;
    wide.n = 100;
    CHECK_THROWS_AS(serialize::spectrum_to_json(wide), ResourceLimitError);
}

TEST_CASE("observable serialization round trip") {
    quantum::HWObservable o;
    o.K = 3;
    o.n = 2;
    std::vector<std::uint8_t> digits{1, 0, 2, 1};
    o.coeffs.emplace_back(cyclic::pack_index(digits, 3), Complex{0.5, -0.75});
    auto j = serialize::hw_to_json(o);
    auto back = serialize::hw_from_json(j);
    REQUIRE(back.coeffs.size() == 1);
    CHECK(back.coeffs[0].first == o.coeffs[0].first);
    CHECK(std::abs(back.coeffs[0].second - o.coeffs[0].second) < 1e-15);
}

TEST_CASE("help exits cleanly") {
    CHECK(run({"--help"}).code == 0);
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
}
