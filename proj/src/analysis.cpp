#include "rapidraid/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <future>
#include <sstream>
#include <thread>

#include "rapidraid/decoder.hpp"

namespace rapidraid {

namespace {

uint64_t binomial(uint32_t n, uint32_t k) {
    if (k > n) return 0;
    uint64_t r = 1;
    for (uint32_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// All k-subsets of {0..n-1} as bitmasks, ascending.
std::vector<uint32_t> enumerate_subsets(uint32_t n, uint32_t k) {
    std::vector<uint32_t> out;
    out.reserve(binomial(n, k));
    uint32_t mask = (uint32_t{1} << k) - 1;
    const uint32_t limit = uint32_t{1} << n;
    while (mask < limit) {
        out.push_back(mask);
        // Gosper's hack: next mask with the same popcount
        const uint32_t c = mask & -mask;
        const uint32_t r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
        if (c == 0) break;
    }
    return out;
}

std::vector<uint32_t> mask_to_indices(uint32_t mask) {
    std::vector<uint32_t> idx;
    while (mask) {
        idx.push_back(static_cast<uint32_t>(std::countr_zero(mask)));
        mask &= mask - 1;
    }
    return idx;
}

}  // namespace

std::string format_subset(uint32_t mask) {
    std::ostringstream out;
    out << "{";
    bool first = true;
    for (uint32_t i : mask_to_indices(mask)) {
        if (!first) out << ",";
        out << (i + 1);
        first = false;
    }
    out << "}";
    return out.str();
}

DependencyReport classify_dependencies(uint32_t n, uint32_t k, uint32_t trials,
                                       uint64_t seed, unsigned workers) {
    if (n > 20)
        throw input_error(
            "dependency census: n > 20 is intractable (C(n,k) subsets times "
            "rank tests); refusing");
    if (trials == 0) throw input_error("dependency census: trials >= 1");
    CodeParams params(n, k, field_gf65536());
    const PlacementMap map = placement(params);
    const GaloisField& gf = *params.field;

    // One full generator per assignment; subsets reuse its rows.
    std::vector<Matrix> gens;
    for (uint32_t t = 0; t < trials; ++t) {
        std::mt19937_64 rng(seed + t);
        gens.push_back(
            derive_generator(params, map, CoefficientSet::random(params, map, rng)));
    }

    const std::vector<uint32_t> subsets = enumerate_subsets(n, k);
    if (workers == 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, 16);

    struct Partial {
        std::vector<uint32_t> natural;
        std::vector<uint32_t> accidental;
    };
    auto scan = [&](size_t lo, size_t hi) {
        Partial out;
        for (size_t i = lo; i < hi; ++i) {
            const auto idx = mask_to_indices(subsets[i]);
            uint32_t deficient = 0;
            for (const Matrix& g : gens)
                if (matrix_rank(gf, g.select_rows(idx)) < k) ++deficient;
            if (deficient == trials)
                out.natural.push_back(subsets[i]);
            else if (deficient > 0)
                out.accidental.push_back(subsets[i]);
        }
        return out;
    };

    std::vector<std::future<Partial>> parts;
    const size_t stride = (subsets.size() + workers - 1) / workers;
    for (size_t lo = 0; lo < subsets.size(); lo += stride)
        parts.push_back(std::async(std::launch::async, scan, lo,
                                   std::min(lo + stride, subsets.size())));

    DependencyReport report;
    report.n = n;
    report.k = k;
    report.trials = trials;
    report.total_subsets = subsets.size();
    for (auto& f : parts) {
        Partial p = f.get();
        report.natural.insert(report.natural.end(), p.natural.begin(),
                              p.natural.end());
        report.accidental_witness.insert(report.accidental_witness.end(),
                                         p.accidental.begin(), p.accidental.end());
    }
    return report;
}

std::vector<uint64_t> undecodable_survivor_counts(const DependencyReport& report) {
    const uint32_t n = report.n, k = report.k;
    std::vector<bool> dependent(uint64_t{1} << n, false);
    for (uint32_t m : report.natural) dependent[m] = true;

    // decodable(S) for |S| > k: true iff dropping some element stays
    // decodable (rank is monotone under row removal).
    std::vector<uint8_t> decodable(uint64_t{1} << n, 0);
    std::vector<std::vector<uint32_t>> by_pop(n + 1);
    for (uint32_t m = 0; m < (uint32_t{1} << n); ++m)
        by_pop[std::popcount(m)].push_back(m);
    for (uint32_t m : by_pop[k]) decodable[m] = dependent[m] ? 0 : 1;
    for (uint32_t s = k + 1; s <= n; ++s) {
        for (uint32_t m : by_pop[s]) {
            uint32_t rest = m;
            while (rest) {
                const uint32_t bit = rest & -rest;
                if (decodable[m ^ bit]) {
                    decodable[m] = 1;
                    break;
                }
                rest ^= bit;
            }
        }
    }
    std::vector<uint64_t> counts(n + 1, 0);
    for (uint32_t s = k; s <= n; ++s)
        for (uint32_t m : by_pop[s])
            if (!decodable[m]) ++counts[s];
    return counts;
}

int nines_from_loss(double loss_probability) {
    if (loss_probability <= 0) return 999;  // exact zero: unbounded
    if (loss_probability >= 1) return 0;
    return static_cast<int>(std::floor(-std::log10(loss_probability)));
}

ResilienceResult static_resilience(const DependencyReport& report, double p) {
    const uint32_t n = report.n, k = report.k;
    const double q = 1.0 - p;
    const std::vector<uint64_t> counts = undecodable_survivor_counts(report);

    long double loss = 0;
    for (uint32_t s = 0; s < k; ++s)  // too few survivors: always lost
        loss += static_cast<long double>(binomial(n, s)) *
                std::pow(static_cast<long double>(p), n - s) *
                std::pow(static_cast<long double>(q), s);
    for (uint32_t s = k; s <= n; ++s)
        loss += static_cast<long double>(counts[s]) *
                std::pow(static_cast<long double>(p), n - s) *
                std::pow(static_cast<long double>(q), s);

    ResilienceResult r;
    r.p = p;
    r.loss_probability = static_cast<double>(loss);
    r.nines = nines_from_loss(r.loss_probability);
    return r;
}

double mds_loss_probability(uint32_t n, uint32_t k, double p) {
    long double loss = 0;
    for (uint32_t f = n - k + 1; f <= n; ++f)
        loss += static_cast<long double>(binomial(n, f)) *
                std::pow(static_cast<long double>(p), f) *
                std::pow(static_cast<long double>(1.0 - p), n - f);
    return static_cast<double>(loss);
}

ResilienceResult mds_resilience(uint32_t n, uint32_t k, double p) {
    ResilienceResult r;
    r.p = p;
    r.loss_probability = mds_loss_probability(n, k, p);
    r.nines = nines_from_loss(r.loss_probability);
    return r;
}

ResilienceResult replication_resilience(uint32_t replicas, double p) {
    ResilienceResult r;
    r.p = p;
    r.loss_probability = std::pow(p, replicas);
    r.nines = nines_from_loss(r.loss_probability);
    return r;
}

SearchResult search_coefficients(uint32_t n, uint32_t k, const GaloisField& field,
                                 const DependencyReport& natural_census,
                                 uint32_t budget, uint64_t seed) {
    if (natural_census.n != n || natural_census.k != k)
        throw input_error("coefficient search: census is for different params");
    // params over the search field; placement does not depend on the field
    CodeParams params(n, k, make_field(16));
    const PlacementMap map = placement(params);
    const std::vector<uint32_t> subsets = enumerate_subsets(n, k);
    std::vector<bool> natural(uint64_t{1} << n, false);
    for (uint32_t m : natural_census.natural) natural[m] = true;

    std::mt19937_64 rng(seed);
    auto draw = [&](uint32_t lo) {
        const uint64_t span = field.order() + 1 - lo;
        const uint64_t limit = (~uint64_t{0} / span) * span;
        uint64_t v;
        do {
            v = rng();
        } while (v >= limit);
        return static_cast<uint16_t>(lo + v % span);
    };

    SearchResult result;
    result.best_accidental_count = UINT64_MAX;
    for (uint32_t attempt = 0; attempt < budget; ++attempt) {
        CoefficientSet cs;
        cs.psi.resize(n - 1);
        cs.xi.resize(n);
        for (uint32_t i = 0; i < n; ++i)
            for (size_t s = 0; s < map[i].size(); ++s) {
                if (i + 1 < n) cs.psi[i].push_back(draw(0));
                cs.xi[i].push_back(draw(1));
            }

        // Generator evaluated over the search field itself.
        Matrix gen(n, k);
        {
            std::vector<uint16_t> x(k, 0);
            for (uint32_t i = 0; i < n; ++i) {
                for (uint32_t c = 0; c < k; ++c) gen.at(i, c) = x[c];
                for (size_t s = 0; s < map[i].size(); ++s)
                    gen.at(i, map[i][s]) = static_cast<uint16_t>(
                        gen.at(i, map[i][s]) ^ cs.xi[i][s]);
                if (i + 1 < n)
                    for (size_t s = 0; s < map[i].size(); ++s)
                        x[map[i][s]] =
                            static_cast<uint16_t>(x[map[i][s]] ^ cs.psi[i][s]);
            }
        }

        uint64_t accidental = 0;
        for (uint32_t mask : subsets) {
            if (natural[mask]) continue;
            if (matrix_rank(field, gen.select_rows(mask_to_indices(mask))) < k)
                ++accidental;
        }
        result.attempts_used = attempt + 1;
        result.best_accidental_count =
            std::min(result.best_accidental_count, accidental);
        if (accidental == 0) {
            result.coefficients = std::move(cs);
            result.best_accidental_count = 0;
            return result;
        }
    }
    return result;
}

std::vector<ConjectureRow> verify_conjecture(const std::vector<uint32_t>& ns,
                                             uint32_t trials, uint64_t seed) {
    std::vector<ConjectureRow> rows;
    for (uint32_t n : ns) {
        for (uint32_t k = (n + 1) / 2; k < n; ++k) {
            DependencyReport r = classify_dependencies(n, k, trials, seed);
            rows.push_back({n, k, r.natural_count(), r.mds()});
        }
    }
    return rows;
}

}  // namespace rapidraid
