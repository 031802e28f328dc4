#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rapidraid/codespec.hpp"
#include "rapidraid/transport.hpp"

namespace rapidraid {

enum class EngineKind { classical, rapidraid };
const char* to_string(EngineKind e);
EngineKind engine_from_string(const std::string& s);

/// Closed-form coding-time estimates. τ_block: one block transfer under
/// normal conditions; τ_classical: encoding the first k network buffers;
/// τ_pipe: per-hop receive-and-encode delay.
struct TimingModel {
    double tau_block = 0;
    double tau_classical = 0;
    double tau_pipe = 0;
};

/// classical: τ_block · max{k, m−1} + τ_classical
/// rapidraid: τ_block + (n−1) · τ_pipe
double predict(const TimingModel& model, uint32_t n, uint32_t k,
               EngineKind engine);

struct BenchScenario {
    std::string name = "scenario";
    uint32_t n = 16;
    uint32_t k = 11;
    unsigned word_bits = 8;
    uint32_t objects = 1;
    uint64_t block_size = 1 << 20;
    size_t chunk_size = 64 * 1024;
    uint32_t repetitions = 1;
    uint64_t seed = 42;
    LinkProfile link{125'000'000.0, 0.0, 0.0};  // 1 Gb/s
    LinkProfile congested{62'500'000.0, 0.1, 0.01};  // 500 Mb/s, 100ms±10ms
    uint32_t congested_count = 0;

    void validate() const;
    /// Canonical key=value form (parse/serialize round-trip).
    std::string serialize() const;
    static BenchScenario parse(const std::string& text);
};

struct BenchRecord {
    std::string scenario;
    EngineKind engine;
    uint32_t object;
    double seconds;
    uint32_t congested_count;
    uint64_t seed;  // per-repetition effective seed
};

struct BenchSummary {
    double median = 0, p25 = 0, p75 = 0, min = 0, max = 0;
};

/// Nearest-rank percentile (rank = ceil(p/100 * N), 1-indexed).
double percentile_nearest_rank(std::vector<double> values, double p);
BenchSummary summarize(const std::vector<double>& seconds);

/// Endpoints this engine's run would shape first, most-loaded first: the
/// classical list starts with the coordinator hub, the pipelined list
/// spreads over the chain (odd positions), matching the worst-case reading
/// of the paper's congestion experiments.
std::vector<std::string> congestion_order(const BenchScenario& s,
                                          EngineKind engine);

/// Runs the scenario on the deterministic simulated transport and returns
/// one record per (object, repetition). Identical seeds give identical
/// timings.
std::vector<BenchRecord> run_scenario(const BenchScenario& s, EngineKind engine);

/// run_scenario at every congested-node count 0..max_congested.
std::vector<BenchRecord> congestion_sweep(const BenchScenario& s,
                                          EngineKind engine,
                                          uint32_t max_congested);

/// Model calibrated from the scenario's link and sizes (τ_classical stays 0:
/// the simulator charges no compute time).
TimingModel calibrate_model(const BenchScenario& s);

/// Versioned CSV: schema comment, header, then one row per record.
void write_csv(std::ostream& out, const std::vector<BenchRecord>& records);

/// Least-squares R² of seconds against congested count.
double linear_fit_r2(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace rapidraid
