#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rapidraid/analysis.hpp"
#include "rapidraid/bench.hpp"
#include "rapidraid/blockstore.hpp"

namespace rapidraid {

/// Command implementations behind the rrcode binary, exposed so tests can
/// drive them in-process. Exit-code mapping (0/2/3) lives in the binary.

struct EncodeOptions {
    std::filesystem::path file;
    std::filesystem::path store_root;
    uint32_t n = 8;
    uint32_t k = 4;
    unsigned word_bits = 16;
    EngineKind engine = EngineKind::rapidraid;
    size_t chunk_size = 64 * 1024;
    uint64_t seed = 1;
    bool colocate = false;
    std::string transport = "sim";  // sim | socket
};

/// Stages the file as two replicas, runs the chosen engine, archives the
/// manifest, prints a traffic/timing summary. Returns the object id.
ObjectId cli_encode(const EncodeOptions& opt, std::ostream& out);

struct DecodeOptions {
    std::filesystem::path store_root;
    std::string object_hex;
    std::filesystem::path output;
    std::vector<uint32_t> blocks;  // 1-based codeword indices; empty = auto
    size_t chunk_size = 64 * 1024;
};

void cli_decode(const DecodeOptions& opt, std::ostream& out);

struct AnalyzeOptions {
    uint32_t n = 8;
    uint32_t k = 4;
    uint32_t trials = 3;
    uint64_t seed = 1;
    std::optional<std::filesystem::path> csv_out;
};

DependencyReport cli_analyze(const AnalyzeOptions& opt, std::ostream& out);

struct SearchOptions {
    uint32_t n = 8;
    uint32_t k = 4;
    unsigned word_bits = 16;
    uint32_t budget = 10;
    uint32_t trials = 3;
    uint64_t seed = 1;
    std::optional<std::filesystem::path> spec_out;
};

/// Returns true when a dependency-free set was found within budget.
bool cli_search_coeffs(const SearchOptions& opt, std::ostream& out);

struct ResilienceOptions {
    std::string scheme = "rapidraid";  // 3replica | classical | rapidraid
    uint32_t n = 16;
    uint32_t k = 11;
    uint32_t trials = 3;
    uint64_t seed = 1;
    std::vector<double> probabilities{0.2, 0.1, 0.01, 0.001};
};

void cli_resilience(const ResilienceOptions& opt, std::ostream& out);

struct ConjectureOptions {
    uint32_t n_max = 8;
    uint32_t trials = 3;
    uint64_t seed = 1;
};

void cli_verify_conjecture(const ConjectureOptions& opt, std::ostream& out);

struct BenchOptions {
    std::filesystem::path scenario_file;
    std::filesystem::path csv_out;
    std::string engine = "both";  // classical | rapidraid | both
    std::optional<uint32_t> sweep_max;  // congestion sweep when set
};

void cli_bench(const BenchOptions& opt, std::ostream& out);

struct StoreOptions {
    std::filesystem::path store_root;
    std::string object_hex;
    uint8_t replica = 0;  // for drop-replica
};

void cli_store_verify(const StoreOptions& opt, std::ostream& out);
void cli_store_drop_replica(const StoreOptions& opt, std::ostream& out);

}  // namespace rapidraid
