#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rapidraid/codespec.hpp"

namespace rapidraid {

/// Census of the k-subsets of codeword symbols. Subsets are stored as
/// bitmasks over node indices (bit i = node i, 0-based) and listed in
/// ascending mask order so reports are reproducible.
struct DependencyReport {
    uint32_t n = 0;
    uint32_t k = 0;
    uint32_t trials = 0;
    uint64_t total_subsets = 0;
    /// Rank-deficient under every random assignment: structural.
    std::vector<uint32_t> natural;
    /// Rank-deficient under some but not all assignments: a witness that the
    /// specific draw was bad, kept out of the natural census.
    std::vector<uint32_t> accidental_witness;

    uint64_t natural_count() const { return natural.size(); }
    double percent_independent() const {
        return total_subsets == 0
                   ? 100.0
                   : 100.0 * static_cast<double>(total_subsets - natural.size()) /
                         static_cast<double>(total_subsets);
    }
    bool mds() const { return natural.empty(); }
};

/// Static resilience at node-failure probability p.
struct ResilienceResult {
    double p = 0;
    double loss_probability = 0;
    int nines = 0;
};

/// Enumerate all C(n,k) subsets of the pipelined code's codeword and test
/// each one's rank under `trials` independent random coefficient
/// assignments drawn over GF(2^16). Work is partitioned over a worker pool
/// and merged in subset order. Refuses n > 20.
DependencyReport classify_dependencies(uint32_t n, uint32_t k,
                                       uint32_t trials = 3, uint64_t seed = 1,
                                       unsigned workers = 0);

/// Loss probability from the census via the survivor-set recurrence: a
/// survivor set decodes iff it contains an independent k-subset; all 2^n
/// survivor masks are visited with memoized verdicts.
ResilienceResult static_resilience(const DependencyReport& report, double p);

/// Closed-form MDS binomial tail: P[more than n-k failures].
double mds_loss_probability(uint32_t n, uint32_t k, double p);

/// Resilience of an MDS (n,k) code from the closed form.
ResilienceResult mds_resilience(uint32_t n, uint32_t k, double p);

/// r-way replication: the object is lost only if all r holders fail.
ResilienceResult replication_resilience(uint32_t replicas, double p);

int nines_from_loss(double loss_probability);

/// Count of survivor sets of each size s >= k that cannot decode; the
/// resilience terms D_s * p^(n-s) * (1-p)^s. Exposed for reporting.
std::vector<uint64_t> undecodable_survivor_counts(const DependencyReport& report);

/// Random coefficient search avoiding accidental dependencies: each attempt
/// draws a full coefficient set over the given field and re-verifies every
/// k-subset outside the natural census by exhaustive rank check.
struct SearchResult {
    std::optional<CoefficientSet> coefficients;  // set on success
    uint32_t attempts_used = 0;
    uint64_t best_accidental_count = 0;  // for the failure report
};

SearchResult search_coefficients(uint32_t n, uint32_t k, const GaloisField& field,
                                 const DependencyReport& natural_census,
                                 uint32_t budget, uint64_t seed = 1);

/// One row of the conjecture table.
struct ConjectureRow {
    uint32_t n;
    uint32_t k;
    uint64_t dependent_count;
    bool mds;
};

/// Census for every (n, k) with n/2 <= k < n for each n in `ns`.
std::vector<ConjectureRow> verify_conjecture(const std::vector<uint32_t>& ns,
                                             uint32_t trials = 3,
                                             uint64_t seed = 1);

/// Subset mask rendered as {1,2,5,6} (1-based, paper convention).
std::string format_subset(uint32_t mask);

}  // namespace rapidraid
