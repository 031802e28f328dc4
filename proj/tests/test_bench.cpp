#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rapidraid/bench.hpp"

using namespace rapidraid;

namespace {

BenchScenario small_scenario() {
    BenchScenario s;
    s.name = "unit";
    s.n = 8;
    s.k = 4;
    s.word_bits = 8;
    s.objects = 1;
    s.block_size = 64 * 1024;
    s.chunk_size = 8 * 1024;
    s.repetitions = 1;
    s.seed = 7;
    return s;
}

double median_seconds(const std::vector<BenchRecord>& records) {
    std::vector<double> s;
    for (const auto& r : records) s.push_back(r.seconds);
    return summarize(s).median;
}

}  // namespace

TEST_CASE("predict implements both closed forms") {
    const TimingModel m{1.0, 0.25, 0.01};
    // (16,11): max{11, 4} = 11
    CHECK(predict(m, 16, 11, EngineKind::classical) == doctest::Approx(11.25));
    CHECK(predict(m, 16, 11, EngineKind::rapidraid) ==
          doctest::Approx(1.0 + 15 * 0.01));
    // τ_classical=0 variants from the formula examples
    const TimingModel unit{1.0, 0.0, 0.0};
    CHECK(predict(unit, 16, 11, EngineKind::classical) == doctest::Approx(11));
    CHECK(predict(unit, 16, 11, EngineKind::rapidraid) == doctest::Approx(1));
    // m-1 > k branch (not reachable for pipelined codes, but the formula
    // stands alone): (10,3) -> max{3, 6} = 6
    CHECK(predict(unit, 10, 3, EngineKind::classical) == doctest::Approx(6));
}

TEST_CASE("nearest-rank percentiles") {
    const std::vector<double> v{5, 1, 4, 2, 3};
    CHECK(percentile_nearest_rank(v, 50) == 3);
    CHECK(percentile_nearest_rank(v, 25) == 2);
    CHECK(percentile_nearest_rank(v, 75) == 4);
    CHECK(percentile_nearest_rank(v, 100) == 5);
    CHECK(percentile_nearest_rank({7.5}, 50) == 7.5);
    const BenchSummary s = summarize(v);
    CHECK(s.min == 1);
    CHECK(s.max == 5);
    CHECK(s.median == 3);
}

TEST_CASE("scenario round-trip and validation") {
    BenchScenario s = small_scenario();
    s.congested_count = 2;
    const BenchScenario back = BenchScenario::parse(s.serialize());
    CHECK(back.n == s.n);
    CHECK(back.k == s.k);
    CHECK(back.block_size == s.block_size);
    CHECK(back.congested_count == 2);
    CHECK(back.link.bandwidth == s.link.bandwidth);
    CHECK(back.congested.base_latency == s.congested.base_latency);

    CHECK_THROWS_AS(BenchScenario::parse("bogus line\n"), input_error);
    CHECK_THROWS_AS(BenchScenario::parse("objects=0\n"), input_error);
    BenchScenario bad = small_scenario();
    bad.objects = 3;  // concurrent mode is one object per node
    CHECK_THROWS_AS(bad.validate(), input_error);
}

TEST_CASE("identical seeds reproduce identical records") {
    const BenchScenario s = small_scenario();
    const auto a = run_scenario(s, EngineKind::rapidraid);
    const auto b = run_scenario(s, EngineKind::rapidraid);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].seconds == b[i].seconds);
}

TEST_CASE("sweep at zero congested nodes equals the plain run") {
    const BenchScenario s = small_scenario();
    const auto plain = run_scenario(s, EngineKind::rapidraid);
    const auto sweep = congestion_sweep(s, EngineKind::rapidraid, 0);
    REQUIRE(plain.size() == sweep.size());
    for (size_t i = 0; i < plain.size(); ++i)
        CHECK(plain[i].seconds == sweep[i].seconds);
}

TEST_CASE("measured single-object times match predict within 15 percent") {
    for (auto [n, k] : {std::pair<uint32_t, uint32_t>{8, 4}, {16, 11}}) {
        BenchScenario s = small_scenario();
        s.n = n;
        s.k = k;
        const TimingModel model = calibrate_model(s);
        for (EngineKind engine :
             {EngineKind::classical, EngineKind::rapidraid}) {
            const double measured = median_seconds(run_scenario(s, engine));
            const double predicted = predict(model, n, k, engine);
            CHECK(std::abs(measured - predicted) / predicted < 0.15);
        }
    }
}

TEST_CASE("pipelined encoding beats classical whenever block time dominates") {
    for (auto [n, k] : {std::pair<uint32_t, uint32_t>{4, 2}, {8, 4}, {8, 6},
                        {12, 8}, {16, 11}}) {
        BenchScenario s = small_scenario();
        s.n = n;
        s.k = k;
        const double rapid = median_seconds(run_scenario(s, EngineKind::rapidraid));
        const double classical =
            median_seconds(run_scenario(s, EngineKind::classical));
        CHECK(rapid < classical);
    }
}

TEST_CASE("congestion order starts at the classical hub") {
    BenchScenario s = small_scenario();
    const auto classical = congestion_order(s, EngineKind::classical);
    const auto rapid = congestion_order(s, EngineKind::rapidraid);
    REQUIRE_FALSE(classical.empty());
    CHECK(classical[0] == "coord1");
    CHECK(rapid[0] == "node1");
    CHECK(rapid[1] == "node3");  // spread over the chain
    s.objects = s.n;
    CHECK(congestion_order(s, EngineKind::classical)[0] == "node1");
}

TEST_CASE("csv schema is stable") {
    std::vector<BenchRecord> records{
        {"demo", EngineKind::classical, 0, 1.5, 2, 42},
        {"demo", EngineKind::rapidraid, 1, 0.25, 0, 43},
    };
    std::ostringstream out;
    write_csv(out, records);
    const std::string text = out.str();
    CHECK(text.find("# rapidraid-bench-csv/1\n") == 0);
    CHECK(text.find("scenario,engine,object,seconds,congested_count,seed\n") !=
          std::string::npos);
    CHECK(text.find("demo,classical,0,1.5,2,42\n") != std::string::npos);
    CHECK(text.find("demo,rapidraid,1,0.25,0,43\n") != std::string::npos);
}

TEST_CASE("linear fit r2") {
    std::vector<double> xs{0, 1, 2, 3, 4};
    std::vector<double> exact{1, 3, 5, 7, 9};
    CHECK(linear_fit_r2(xs, exact) == doctest::Approx(1.0));
    std::vector<double> noisy{1, 3.2, 4.9, 7.1, 8.8};
    CHECK(linear_fit_r2(xs, noisy) > 0.99);
    std::vector<double> flat{2, 2, 2, 2, 2};
    CHECK(linear_fit_r2(xs, flat) == doctest::Approx(1.0));
}

TEST_CASE("concurrent scenario runs one object per node") {
    BenchScenario s = small_scenario();
    s.objects = s.n;
    s.block_size = 16 * 1024;
    s.chunk_size = 4096;
    for (EngineKind engine : {EngineKind::classical, EngineKind::rapidraid}) {
        const auto records = run_scenario(s, engine);
        CHECK(records.size() == s.n);
        for (const auto& r : records) CHECK(r.seconds > 0);
    }
}
