#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rapidraid/blockstore.hpp"
#include "rapidraid/codespec.hpp"
#include "rapidraid/transport.hpp"

namespace rapidraid {

/// One pipelined encode: n chained nodes, each combining the incoming
/// partial stream with its local replica symbols, forwarding the running
/// combination and persisting its own coded block concurrently.
struct PipelineJob {
    std::shared_ptr<const CodeSpec> spec;  // kind must be rapidraid
    std::vector<std::string> node_names;   // size n, pipeline order
    ObjectId object;
    uint64_t block_size = 0;   // bytes per block, word aligned
    size_t chunk_size = 64 * 1024;
    /// Test hook: node (0-based) aborts before processing this chunk.
    std::optional<std::pair<uint32_t, uint32_t>> fail_at;
};

/// Per-node streaming state machine. Chunk t of the forward and output
/// streams depends only on incoming chunk t and the local chunk t, so the
/// machine holds no cross-chunk state beyond the cursor.
class PipelineNodeCore {
public:
    PipelineNodeCore(const CodeSpec& spec, uint32_t node_index,
                     std::vector<Payload> local_blocks, uint64_t block_size,
                     size_t chunk_size);

    uint32_t node_index() const { return node_index_; }
    bool has_incoming() const { return node_index_ > 0; }
    bool has_outgoing() const { return node_index_ + 1 < n_; }
    uint32_t total_chunks() const { return total_chunks_; }
    uint32_t cursor() const { return cursor_; }
    bool finished() const { return cursor_ == total_chunks_; }
    size_t chunk_length(uint32_t seq) const;

    struct Step {
        std::vector<uint8_t> forward;  // empty for the last node
        std::vector<uint8_t> output;
    };

    /// Process chunk `cursor`. For the first node `incoming` must be empty
    /// (implicit zeros); otherwise its length must equal the chunk length,
    /// anything else aborts the job.
    Step step(std::span<const uint8_t> incoming);

private:
    const CodeSpec& spec_;
    uint32_t node_index_;
    uint32_t n_;
    std::vector<Payload> locals_;
    std::vector<uint16_t> psi_;  // this node's coefficients, slot order
    std::vector<uint16_t> xi_;
    uint64_t block_size_;
    size_t chunk_size_;
    uint32_t total_chunks_;
    uint32_t cursor_ = 0;
};

struct EncodeOutcome {
    bool success = false;
    double start_time = 0;
    double end_time = 0;
    std::string error;
    double seconds() const { return end_time - start_time; }
};

/// Register the job's actors on the network; the encode executes when the
/// caller runs the event loop. The outcome object is filled in by then.
std::shared_ptr<EncodeOutcome> start_pipeline_sim(SimNetwork& net,
                                                  BlockStore& store,
                                                  const PipelineJob& job);

/// Convenience wrapper: start, run, return.
EncodeOutcome run_pipeline_sim(SimNetwork& net, BlockStore& store,
                               const PipelineJob& job);

/// Same encode over real loopback TCP, one endpoint per node. Returns after
/// all n coded blocks are committed. Wall-clock timing, byte-identical
/// frames and blocks.
EncodeOutcome run_pipeline_socket(BlockStore& store, const PipelineJob& job);

/// Number of chunks a block of `block_size` splits into.
uint32_t chunk_count(uint64_t block_size, size_t chunk_size);

}  // namespace rapidraid
