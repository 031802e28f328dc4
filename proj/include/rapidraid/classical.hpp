#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rapidraid/blockstore.hpp"
#include "rapidraid/codespec.hpp"
#include "rapidraid/pipeline.hpp"  // EncodeOutcome, chunk_count
#include "rapidraid/transport.hpp"

namespace rapidraid {

/// Atomic baseline: one coordinator pulls the k source blocks, computes the
/// m parities chunk by chunk, and pushes them to the sink nodes as soon as
/// each chunk row is complete.
struct ClassicalJob {
    std::shared_ptr<const CodeSpec> spec;   // systematic generator
    std::vector<std::string> source_nodes;  // size k, replica-1 holders
    std::vector<std::string> sink_nodes;    // size m
    std::string coordinator;
    ObjectId object;
    uint64_t block_size = 0;
    size_t chunk_size = 64 * 1024;
    /// Coordinator is one of the sources: that block is read locally and
    /// one download is skipped.
    bool colocate = false;
    /// Test hook: this source endpoint never delivers (job must fail
    /// without persisting anything).
    std::optional<uint32_t> fail_source;
};

/// Chunk-row assembly and parity computation. Sources may arrive skewed;
/// rows are released in order as soon as all k pieces of the next row are
/// present (at most one pending row per source under even pacing, which is
/// the k + m buffer contract of the streaming design).
class ClassicalCoordinatorCore {
public:
    ClassicalCoordinatorCore(const CodeSpec& spec, uint64_t block_size,
                             size_t chunk_size);

    uint32_t total_chunks() const { return total_chunks_; }

    struct ParityRow {
        uint32_t sequence;
        std::vector<std::vector<uint8_t>> parity;  // m chunks
    };

    /// Feed one source chunk; returns every row completed by it, in order.
    std::vector<ParityRow> on_source_chunk(uint32_t source_index, uint32_t seq,
                                           std::span<const uint8_t> data);

    bool finished() const { return next_row_ == total_chunks_; }
    /// High-water mark of buffered source chunks (streaming contract probe).
    size_t max_buffered() const { return max_buffered_; }

private:
    const CodeSpec& spec_;
    uint64_t block_size_;
    size_t chunk_size_;
    uint32_t total_chunks_;
    uint32_t next_row_ = 0;
    Matrix parity_rows_;  // m x k: bottom of the systematic generator
    std::vector<std::map<uint32_t, std::vector<uint8_t>>> pending_;  // per source
    std::vector<uint32_t> next_seq_;  // per-source expected sequence
    size_t buffered_ = 0;
    size_t max_buffered_ = 0;
};

std::shared_ptr<EncodeOutcome> start_classical_sim(SimNetwork& net,
                                                   BlockStore& store,
                                                   const ClassicalJob& job);

EncodeOutcome run_classical_sim(SimNetwork& net, BlockStore& store,
                                const ClassicalJob& job);

/// Same encode over loopback TCP: sources and sinks get their own
/// endpoints, the coordinator hosts one listener.
EncodeOutcome run_classical_socket(BlockStore& store, const ClassicalJob& job);

}  // namespace rapidraid
