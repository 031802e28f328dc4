#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rapidraid/analysis.hpp"

using namespace rapidraid;

TEST_CASE("(8,4) census: exactly one natural dependency, {1,2,5,6}") {
    const DependencyReport r = classify_dependencies(8, 4);
    CHECK(r.total_subsets == 70);
    REQUIRE(r.natural_count() == 1);
    CHECK(format_subset(r.natural[0]) == "{1,2,5,6}");
    CHECK(r.accidental_witness.empty());
    CHECK(r.percent_independent() == doctest::Approx(100.0 * 69 / 70));
    CHECK_FALSE(r.mds());
}

TEST_CASE("census is assignment-stable across seeds and extra trials") {
    const DependencyReport a = classify_dependencies(8, 4, 3, 1);
    const DependencyReport b = classify_dependencies(8, 4, 10, 999);
    CHECK(a.natural == b.natural);
}

TEST_CASE("census refuses intractable n") {
    CHECK_THROWS_AS(classify_dependencies(21, 12), input_error);
}

TEST_CASE("single-worker and multi-worker censuses agree") {
    const DependencyReport a = classify_dependencies(12, 7, 3, 1, 1);
    const DependencyReport b = classify_dependencies(12, 7, 3, 1, 8);
    CHECK(a.natural == b.natural);
    CHECK(a.total_subsets == b.total_subsets);
}

TEST_CASE("MDS frontier for n=8 and n=12") {
    for (uint32_t k : {5u, 6u, 7u})
        CHECK(classify_dependencies(8, k).mds());
    CHECK_FALSE(classify_dependencies(8, 4).mds());
    CHECK(classify_dependencies(12, 9).mds());
    const DependencyReport r126 = classify_dependencies(12, 6);
    CHECK_FALSE(r126.mds());
    CHECK(r126.natural_count() > 0);
}

TEST_CASE("3-replica resilience matches the replica row") {
    CHECK(replication_resilience(3, 0.2).nines == 2);
    CHECK(replication_resilience(3, 0.1).nines == 3);
    CHECK(replication_resilience(3, 0.01).nines == 6);
    CHECK(replication_resilience(3, 0.001).nines == 9);
}

TEST_CASE("(16,11) classical MDS nines") {
    CHECK(mds_resilience(16, 11, 0.2).nines == 1);
    CHECK(mds_resilience(16, 11, 0.1).nines == 2);
    CHECK(mds_resilience(16, 11, 0.01).nines == 8);
    CHECK(mds_resilience(16, 11, 0.001).nines == 14);
}

TEST_CASE("survivor DP with an empty dependent set equals the closed form") {
    DependencyReport empty;
    empty.n = 16;
    empty.k = 11;
    empty.trials = 3;
    empty.total_subsets = 4368;
    for (double p : {0.2, 0.1, 0.01, 0.001}) {
        const double dp_loss = static_resilience(empty, p).loss_probability;
        const double closed = mds_loss_probability(16, 11, p);
        CHECK(std::abs(dp_loss - closed) < 1e-12);
    }
}

TEST_CASE("nondecreasing nines as p decreases") {
    const DependencyReport census = classify_dependencies(8, 4);
    int last = -1;
    for (double p : {0.5, 0.2, 0.1, 0.05, 0.01, 0.001}) {
        const ResilienceResult r = static_resilience(census, p);
        CHECK(r.nines >= last);
        last = r.nines;
        CHECK(r.loss_probability >= 0);
        CHECK(r.loss_probability <= 1);
        CHECK(r.nines ==
              static_cast<int>(std::floor(-std::log10(r.loss_probability))));
    }
}

TEST_CASE("dependent census increases loss over the MDS tail") {
    const DependencyReport census = classify_dependencies(8, 4);
    for (double p : {0.2, 0.1, 0.01}) {
        const double with_dep = static_resilience(census, p).loss_probability;
        const double mds_only = mds_loss_probability(8, 4, p);
        CHECK(with_dep > mds_only);
    }
}

TEST_CASE("coefficient search over GF(2^16) succeeds within a small budget") {
    const DependencyReport census = classify_dependencies(8, 4);
    const auto field = make_field(16);
    const SearchResult r = search_coefficients(8, 4, *field, census, 10, 7);
    REQUIRE(r.coefficients.has_value());
    CHECK(r.best_accidental_count == 0);
    CHECK(r.attempts_used <= 10);
}

TEST_CASE("coefficient search over GF(2^2) with budget 1 fails loudly") {
    const DependencyReport census = classify_dependencies(8, 4);
    const GaloisField tiny(2);
    const SearchResult r = search_coefficients(8, 4, tiny, census, 1, 3);
    CHECK_FALSE(r.coefficients.has_value());
    CHECK(r.best_accidental_count > 0);
}

TEST_CASE("k == n is trivially MDS and any coefficients work") {
    const DependencyReport census = classify_dependencies(6, 6);
    CHECK(census.mds());
    const auto field = make_field(16);
    const SearchResult r = search_coefficients(6, 6, *field, census, 2, 1);
    CHECK(r.coefficients.has_value());
}

TEST_CASE("conjecture rows for n=8") {
    const auto rows = verify_conjecture({8});
    REQUIRE(rows.size() == 4);  // k = 4..7
    for (const auto& row : rows)
        CHECK(row.mds == (row.k >= row.n - 3));
}

TEST_CASE("subset formatting is 1-based") {
    CHECK(format_subset(0b110011) == "{1,2,5,6}");
    CHECK(format_subset(0b1) == "{1}");
}
