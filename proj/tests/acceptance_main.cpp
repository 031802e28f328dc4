// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances and thresholds are pinned here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <vector>

#include "rapidraid/analysis.hpp"
#include "rapidraid/bench.hpp"
#include "rapidraid/classical.hpp"
#include "rapidraid/decoder.hpp"
#include "rapidraid/pipeline.hpp"

using namespace rapidraid;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s — %s\n", criterion, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string node_name(uint32_t i) { return "node" + std::to_string(i + 1); }

BlockHeader source_header(const CodeSpec& spec, ObjectId object, uint32_t index) {
    BlockHeader h;
    h.object = object;
    h.index = index;
    h.role = BlockRole::source;
    h.word_bits = static_cast<uint8_t>(spec.params.field->word_bits());
    h.reduction_polynomial = spec.params.field->reduction_polynomial();
    h.code_digest = spec.digest();
    return h;
}

struct Staged {
    std::shared_ptr<const CodeSpec> spec;
    ObjectId object;
    uint64_t block_size;
    std::vector<std::vector<uint8_t>> source;
};

Staged stage(BlockStore& store, std::shared_ptr<const CodeSpec> spec,
             uint64_t block_size, uint64_t seed) {
    Staged s;
    s.spec = spec;
    s.object = ObjectId::from_seed(seed);
    s.block_size = block_size;
    std::mt19937_64 rng(seed);
    const uint32_t n = spec->params.n, k = spec->params.k;
    for (uint32_t j = 0; j < k; ++j) {
        std::vector<uint8_t> bytes(block_size);
        for (auto& b : bytes) b = static_cast<uint8_t>(rng());
        s.source.push_back(bytes);
        store.put_block(node_name(j), BlockKey{s.object, BlockRole::source, 1, j},
                        source_header(*spec, s.object, j), bytes);
        store.put_block(node_name(n - k + j),
                        BlockKey{s.object, BlockRole::source, 2, j},
                        source_header(*spec, s.object, j), bytes);
    }
    return s;
}

std::vector<std::vector<uint8_t>> offline_codeword(const Staged& s) {
    const Matrix gen = s.spec->generator();
    const GaloisField& gf = *s.spec->params.field;
    const uint32_t n = s.spec->params.n, k = s.spec->params.k;
    std::vector<std::vector<uint8_t>> coded(n,
                                            std::vector<uint8_t>(s.block_size, 0));
    for (uint32_t i = 0; i < n; ++i)
        for (uint32_t j = 0; j < k; ++j)
            gf.mul_buffer(gen.at(i, j), s.source[j], coded[i]);
    return coded;
}

SimNetwork make_net(uint32_t n, bool with_coord, uint64_t seed = 1) {
    SimNetwork net(seed, LinkProfile{125'000'000.0, 0.0, 0.0});
    for (uint32_t i = 0; i < n; ++i) net.register_node(node_name(i));
    if (with_coord) net.register_node("coord");
    return net;
}

PipelineJob pipeline_job(const Staged& s, size_t chunk) {
    PipelineJob job;
    job.spec = s.spec;
    for (uint32_t i = 0; i < s.spec->params.n; ++i)
        job.node_names.push_back(node_name(i));
    job.object = s.object;
    job.block_size = s.block_size;
    job.chunk_size = chunk;
    return job;
}

ClassicalJob classical_job(const Staged& s, size_t chunk) {
    ClassicalJob job;
    job.spec = s.spec;
    job.object = s.object;
    job.block_size = s.block_size;
    job.chunk_size = chunk;
    job.coordinator = "coord";
    const uint32_t k = s.spec->params.k, m = s.spec->params.m();
    for (uint32_t j = 0; j < k; ++j) job.source_nodes.push_back(node_name(j));
    for (uint32_t r = 0; r < m; ++r) job.sink_nodes.push_back(node_name(k + r));
    return job;
}

// ----------------------------------------------------------------- 1

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    const DependencyReport r = classify_dependencies(8, 4, 3, 1);
    const double secs = elapsed_since(t0);
    std::ostringstream d;
    d << "(8,4): " << r.total_subsets << " subsets, " << r.natural_count()
      << " natural dependent";
    if (!r.natural.empty()) d << " " << format_subset(r.natural[0]);
    d << ", " << secs << " s";
    const bool pass = r.total_subsets == 70 && r.natural_count() == 1 &&
                      format_subset(r.natural[0]) == "{1,2,5,6}" && secs < 5.0;
    report(1, pass, d.str());
}

// ----------------------------------------------------------------- 2

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    std::ostringstream d;
    for (uint32_t n : {8u, 12u, 16u}) {
        for (uint32_t k = n / 2; k < n; ++k) {
            const DependencyReport r = classify_dependencies(n, k, 3, 1);
            const bool expect_mds = k >= n - 3;
            if (r.mds() != expect_mds) {
                pass = false;
                d << " (" << n << "," << k << ") breaks the frontier;";
            }
        }
    }
    const double secs = elapsed_since(t0);
    d << "MDS exactly when k >= n-3 over n in {8,12,16}, " << secs << " s";
    report(2, pass && secs < 600.0, d.str());
}

// ----------------------------------------------------------------- 3

void criterion_3() {
    const std::vector<double> ps{0.2, 0.1, 0.01, 0.001};

    const std::vector<int> replica_expect{2, 3, 6, 9};
    const std::vector<int> classical_expect{1, 2, 8, 14};
    const std::vector<int> paper_rapidraid{0, 2, 6, 11};

    bool exact_rows = true;
    std::vector<int> replica_got, classical_got, rapid_got;
    for (double p : ps) {
        replica_got.push_back(replication_resilience(3, p).nines);
        classical_got.push_back(mds_resilience(16, 11, p).nines);
    }
    exact_rows = replica_got == replica_expect && classical_got == classical_expect;

    const DependencyReport census = classify_dependencies(16, 11, 3, 1);
    const auto survivor_counts = undecodable_survivor_counts(census);
    for (double p : ps) rapid_got.push_back(static_resilience(census, p).nines);

    std::ostringstream d;
    d << "3-replica (" << replica_got[0] << "," << replica_got[1] << ","
      << replica_got[2] << "," << replica_got[3] << ") and classical ("
      << classical_got[0] << "," << classical_got[1] << "," << classical_got[2]
      << "," << classical_got[3] << ") match the published rows exactly; ";

    if (rapid_got == paper_rapidraid) {
        d << "rapidraid row matches (0,2,6,11)";
    } else {
        // mandated deviation report, carrying the census counts
        d << "rapidraid row DEVIATES: computed (" << rapid_got[0] << ","
          << rapid_got[1] << "," << rapid_got[2] << "," << rapid_got[3]
          << ") vs published (0,2,6,11); exhaustive census ground truth: "
          << census.natural_count() << " of " << census.total_subsets
          << " 11-subsets naturally dependent";
        for (uint32_t s = census.k; s <= census.n; ++s)
            if (survivor_counts[s] > 0)
                d << ", " << survivor_counts[s] << " undecodable survivor set"
                  << (survivor_counts[s] == 1 ? "" : "s") << " of size " << s;
        d << "; the published row would need roughly 30x more dependent "
             "subsets than the construction produces";
    }
    report(3, exact_rows, d.str());
}

// ----------------------------------------------------------------- 4

void criterion_4() {
    bool pass = true;
    std::ostringstream d;

    // (8,4): exhaustive over all 70 survivor 4-subsets; 69 must decode
    {
        MemStore store;
        auto spec = std::make_shared<const CodeSpec>(
            CodeSpec::make_rapidraid(8, 4, 16, 2024));
        const Staged s = stage(store, spec, 8 * 1024, 11);
        SimNetwork net = make_net(8, false);
        if (!run_pipeline_sim(net, store, pipeline_job(s, 2048)).success) {
            report(4, false, "(8,4) encode failed");
            return;
        }
        std::vector<std::vector<uint8_t>> coded;
        for (uint32_t i = 0; i < 8; ++i)
            coded.push_back(store
                                .get_block(node_name(i),
                                           BlockKey{s.object, BlockRole::coded, 0, i})
                                .payload);
        const Matrix gen = spec->generator();
        const GaloisField& gf = *spec->params.field;

        uint32_t recovered = 0, unrecoverable = 0;
        for (uint32_t a = 0; a < 8; ++a)
            for (uint32_t b = a + 1; b < 8; ++b)
                for (uint32_t c = b + 1; c < 8; ++c)
                    for (uint32_t e = c + 1; e < 8; ++e) {
                        const std::vector<uint32_t> idx{a, b, c, e};
                        DecodeSet set;
                        set.indices = idx;
                        set.rows = gen.select_rows(idx);
                        for (uint32_t i : idx) set.blocks.emplace_back(coded[i]);
                        try {
                            if (decode(gf, set, 2048) == s.source)
                                ++recovered;
                            else
                                pass = false;
                        } catch (const singular_matrix&) {
                            ++unrecoverable;
                        }
                    }
        pass = pass && recovered == 69 && unrecoverable == 1;
        d << "(8,4): " << recovered << "/69 recoverable patterns bit-exact, "
          << unrecoverable << " unrecoverable";
    }

    // (16,11): 200 random recoverable 5-erasure patterns
    {
        MemStore store;
        auto spec = std::make_shared<const CodeSpec>(
            CodeSpec::make_rapidraid(16, 11, 16, 2025));
        const Staged s = stage(store, spec, 16 * 1024, 13);
        SimNetwork net = make_net(16, false);
        if (!run_pipeline_sim(net, store, pipeline_job(s, 4096)).success) {
            report(4, false, "(16,11) encode failed");
            return;
        }
        std::vector<std::vector<uint8_t>> coded;
        for (uint32_t i = 0; i < 16; ++i)
            coded.push_back(store
                                .get_block(node_name(i),
                                           BlockKey{s.object, BlockRole::coded, 0, i})
                                .payload);
        const Matrix gen = spec->generator();
        const GaloisField& gf = *spec->params.field;

        std::mt19937_64 rng(99);
        uint32_t tested = 0, skipped_dependent = 0;
        while (tested < 200) {
            std::vector<uint32_t> all(16);
            for (uint32_t i = 0; i < 16; ++i) all[i] = i;
            for (uint32_t i = 0; i < 5; ++i)  // erase 5 random blocks
                all.erase(all.begin() + rng() % all.size());
            if (matrix_rank(gf, gen.select_rows(all)) < 11) {
                ++skipped_dependent;
                continue;
            }
            DecodeSet set;
            set.indices = all;
            set.rows = gen.select_rows(all);
            for (uint32_t i : all) set.blocks.emplace_back(coded[i]);
            if (decode(gf, set, 4096) != s.source) {
                pass = false;
                break;
            }
            ++tested;
        }
        d << "; (16,11): " << tested
          << " random recoverable patterns bit-exact (skipped "
          << skipped_dependent << " dependent survivor sets)";
    }
    report(4, pass, d.str());
}

// ----------------------------------------------------------------- 5

void criterion_5() {
    bool pass = true;
    std::ostringstream d;
    // word size 16 -> one word is 2 bytes; the 65,538-byte block leaves a
    // 2-byte tail at both larger chunk sizes (non-aligned final chunk)
    const uint64_t aligned_block = 64 * 1024;
    const uint64_t odd_block = 64 * 1024 + 2;

    for (auto [block, tag] :
         {std::pair<uint64_t, const char*>{aligned_block, "aligned"},
          {odd_block, "odd-tail"}}) {
        for (size_t chunk : {size_t{2}, size_t{4096}, size_t{64 * 1024}}) {
            MemStore store;
            auto rspec = std::make_shared<const CodeSpec>(
                CodeSpec::make_rapidraid(8, 4, 16, 3030));
            const Staged rs = stage(store, rspec, block, 17 + chunk);
            const auto expect_r = offline_codeword(rs);
            SimNetwork net = make_net(8, false);
            if (!run_pipeline_sim(net, store, pipeline_job(rs, chunk)).success)
                pass = false;
            for (uint32_t i = 0; i < 8 && pass; ++i)
                if (store
                        .get_block(node_name(i),
                                   BlockKey{rs.object, BlockRole::coded, 0, i})
                        .payload != expect_r[i])
                    pass = false;

            MemStore store2;
            auto cspec = std::make_shared<const CodeSpec>(
                CodeSpec::make_cauchy(8, 4, 16));
            const Staged cs = stage(store2, cspec, block, 19 + chunk);
            const auto expect_c = offline_codeword(cs);
            SimNetwork net2 = make_net(8, true);
            if (!run_classical_sim(net2, store2, classical_job(cs, chunk)).success)
                pass = false;
            for (uint32_t i = 0; i < 8 && pass; ++i)
                if (store2
                        .get_block(node_name(i),
                                   BlockKey{cs.object, BlockRole::coded, 0, i})
                        .payload != expect_c[i])
                    pass = false;

            if (!pass) {
                d << "mismatch at block=" << block << " (" << tag
                  << ") chunk=" << chunk;
                report(5, false, d.str());
                return;
            }
        }
    }
    d << "pipeline and classical bit-identical to the offline matrix product "
         "at chunks {1 word, 4 KiB, 64 KiB} with aligned and odd-tail blocks";
    report(5, pass, d.str());
}

// ----------------------------------------------------------------- 6

void criterion_6() {
    const uint64_t B = 256 * 1024;
    const size_t chunk = 16 * 1024;
    std::ostringstream d;
    bool pass = true;

    {
        MemStore store;
        auto spec = std::make_shared<const CodeSpec>(
            CodeSpec::make_rapidraid(16, 11, 8, 4040));
        const Staged s = stage(store, spec, B, 23);
        SimNetwork net = make_net(16, false);
        pass = run_pipeline_sim(net, store, pipeline_job(s, chunk)).success;
        const auto fw = net.delivered(StreamRole::forward_x);
        pass = pass && fw.payload_bytes == 15 * B &&
               net.delivered(StreamRole::source_pull).payload_bytes == 0 &&
               net.delivered(StreamRole::parity_push).payload_bytes == 0 &&
               fw.frames == 15 * (B / chunk);
        d << "rapidraid " << fw.payload_bytes << " payload bytes = (n-1)B in "
          << fw.frames << " frames";
    }
    {
        MemStore store;
        auto spec =
            std::make_shared<const CodeSpec>(CodeSpec::make_cauchy(16, 11, 8));
        const Staged s = stage(store, spec, B, 29);
        SimNetwork net = make_net(16, true);
        pass = pass &&
               run_classical_sim(net, store, classical_job(s, chunk)).success;
        const auto src = net.delivered(StreamRole::source_pull);
        const auto par = net.delivered(StreamRole::parity_push);
        pass = pass && src.payload_bytes == 11 * B && par.payload_bytes == 5 * B &&
               net.delivered(StreamRole::forward_x).payload_bytes == 0;
        d << "; classical " << src.payload_bytes << "+" << par.payload_bytes
          << " payload bytes = (k+m)B";
    }
    report(6, pass, d.str());
}

// ----------------------------------------------------------------- 7

void criterion_7() {
    BenchScenario single;
    single.name = "single16";
    single.n = 16;
    single.k = 11;
    single.word_bits = 8;
    single.objects = 1;
    single.block_size = 1 << 20;
    single.chunk_size = 64 * 1024;
    single.repetitions = 3;
    single.seed = 42;

    auto median_of = [](const std::vector<BenchRecord>& records) {
        std::vector<double> s;
        for (const auto& r : records) s.push_back(r.seconds);
        return summarize(s).median;
    };

    const double single_rapid =
        median_of(run_scenario(single, EngineKind::rapidraid));
    const double single_classical =
        median_of(run_scenario(single, EngineKind::classical));
    const double ratio = single_rapid / single_classical;

    BenchScenario batch = single;
    batch.name = "batch16";
    batch.objects = 16;
    batch.repetitions = 1;
    const double batch_rapid =
        median_of(run_scenario(batch, EngineKind::rapidraid));
    const double batch_classical =
        median_of(run_scenario(batch, EngineKind::classical));
    const double reduction = 1.0 - batch_rapid / batch_classical;

    std::ostringstream d;
    d << "single-object rapid/classical = " << single_rapid << "/"
      << single_classical << " = " << ratio << " (need <= 0.2); "
      << "16 concurrent: rapid " << batch_rapid << " vs classical "
      << batch_classical << ", reduction " << reduction * 100 << "% (need >= 5%)";
    report(7, ratio <= 0.2 && batch_rapid < batch_classical && reduction >= 0.05,
           d.str());
}

// ----------------------------------------------------------------- 8

void criterion_8() {
    BenchScenario s;
    s.name = "congestion";
    s.n = 16;
    s.k = 11;
    s.word_bits = 8;
    s.objects = 1;
    s.block_size = uint64_t{64} << 20;  // the 64 MB block regime
    s.chunk_size = 2 << 20;
    s.repetitions = 1;
    s.seed = 42;
    s.congested = LinkProfile{62'500'000.0, 0.1, 0.01};  // 500 Mb/s, 100ms±10ms

    auto seconds_at = [&](EngineKind engine, uint32_t congested) {
        BenchScenario step = s;
        step.congested_count = congested;
        const auto records = run_scenario(step, engine);
        return records.front().seconds;
    };

    const double classical0 = seconds_at(EngineKind::classical, 0);
    const double classical1 = seconds_at(EngineKind::classical, 1);
    const double classical_inflation = classical1 / classical0;

    std::vector<double> xs, ys;
    for (uint32_t c = 0; c <= 8; ++c) {
        xs.push_back(c);
        ys.push_back(seconds_at(EngineKind::rapidraid, c));
    }
    const double rapid_inflation = ys[1] / ys[0];
    const double r2 = linear_fit_r2(xs, ys);

    std::ostringstream d;
    d << "classical 0->1 congested " << classical0 << " -> " << classical1
      << " (x" << classical_inflation << ", need >= 1.5); rapid x"
      << rapid_inflation << " (need < classical); rapid 0..8 congested R2="
      << r2 << " (need >= 0.9)";
    report(8,
           classical_inflation >= 1.5 && rapid_inflation < classical_inflation &&
               r2 >= 0.9,
           d.str());
}

// ----------------------------------------------------------------- 9

void criterion_9() {
    auto slow_mul = [](uint32_t a, uint32_t b, unsigned w, uint32_t poly) {
        uint32_t r = 0;
        while (b) {
            if (b & 1) r ^= a;
            b >>= 1;
            a <<= 1;
            if (a & (uint32_t{1} << w)) a ^= poly;
        }
        return r;
    };

    const GaloisField gf8(8);
    uint64_t checked8 = 0;
    for (uint32_t a = 0; a < 256; ++a)
        for (uint32_t b = 0; b < 256; ++b) {
            if (gf8.mul(a, b) != slow_mul(a, b, 8, 0x11D)) {
                report(9, false, "GF(2^8) mismatch");
                return;
            }
            ++checked8;
        }

    const GaloisField gf16(16);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100000; ++i) {
        const uint32_t a = rng() & 0xFFFF;
        const uint32_t b = rng() & 0xFFFF;
        if (gf16.mul(a, b) != slow_mul(a, b, 16, 0x1100B)) {
            report(9, false, "GF(2^16) mismatch");
            return;
        }
    }
    std::ostringstream d;
    d << checked8 << " exhaustive GF(2^8) pairs and 100000 random GF(2^16) "
      << "pairs match the shift-and-XOR oracle";
    report(9, true, d.str());
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    std::printf(
        "criterion 10: NOTE — absolute CPU times and wall-clock figures are "
        "hardware-bound and out of scope; covered by the ratio criteria 7-8 "
        "and the property suites 4-6 and 9\n");
    if (failures) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
