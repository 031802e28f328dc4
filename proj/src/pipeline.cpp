#include "rapidraid/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <future>

#include "rapidraid/socket_transport.hpp"

namespace rapidraid {

uint32_t chunk_count(uint64_t block_size, size_t chunk_size) {
    if (chunk_size == 0) throw input_error("chunk size must be positive");
    if (block_size == 0) return 0;
    return static_cast<uint32_t>((block_size + chunk_size - 1) / chunk_size);
}

PipelineNodeCore::PipelineNodeCore(const CodeSpec& spec, uint32_t node_index,
                                   std::vector<Payload> local_blocks,
                                   uint64_t block_size, size_t chunk_size)
    : spec_(spec),
      node_index_(node_index),
      n_(spec.params.n),
      locals_(std::move(local_blocks)),
      block_size_(block_size),
      chunk_size_(chunk_size),
      total_chunks_(chunk_count(block_size, chunk_size)) {
    if (spec.kind != CodeKind::rapidraid)
        throw input_error("pipeline: code spec is not a pipelined code");
    if (node_index_ >= n_) throw input_error("pipeline: node index out of range");
    const size_t word = spec.params.field->word_bits() / 8;
    if (block_size_ % word != 0 || chunk_size_ % word != 0)
        throw input_error("pipeline: sizes must be word aligned");
    const auto& slots = spec.map[node_index_];
    if (locals_.size() != slots.size())
        throw input_error("pipeline: local block count does not match placement");
    for (const auto& b : locals_)
        if (!b || b->size() != block_size_)
            throw input_error("pipeline: local block size mismatch");
    if (has_outgoing()) psi_ = spec.coeffs.psi[node_index_];
    xi_ = spec.coeffs.xi[node_index_];
}

size_t PipelineNodeCore::chunk_length(uint32_t seq) const {
    const uint64_t off = uint64_t{seq} * chunk_size_;
    if (off >= block_size_) return 0;
    return static_cast<size_t>(std::min<uint64_t>(chunk_size_, block_size_ - off));
}

PipelineNodeCore::Step PipelineNodeCore::step(std::span<const uint8_t> incoming) {
    if (finished()) throw std::runtime_error("pipeline: stepped past final chunk");
    const uint32_t seq = cursor_;
    const size_t len = chunk_length(seq);
    const uint64_t off = uint64_t{seq} * chunk_size_;
    if (has_incoming()) {
        if (incoming.size() != len)
            throw std::runtime_error("pipeline: chunk length mismatch at node " +
                                     std::to_string(node_index_ + 1));
    } else if (!incoming.empty()) {
        throw std::runtime_error("pipeline: first node takes no incoming data");
    }

    const GaloisField& gf = *spec_.params.field;
    Step out;
    out.output.assign(len, 0);
    if (has_incoming())
        std::copy(incoming.begin(), incoming.end(), out.output.begin());
    if (has_outgoing()) out.forward = out.output;

    for (size_t s = 0; s < locals_.size(); ++s) {
        const std::span<const uint8_t> local(locals_[s]->data() + off, len);
        gf.mul_buffer(xi_[s], local, out.output);
        if (has_outgoing()) gf.mul_buffer(psi_[s], local, out.forward);
    }
    ++cursor_;
    return out;
}

namespace {

BlockHeader coded_header(const CodeSpec& spec, ObjectId object, uint32_t index) {
    BlockHeader h;
    h.object = object;
    h.index = index;
    h.role = BlockRole::coded;
    h.word_bits = static_cast<uint8_t>(spec.params.field->word_bits());
    h.reduction_polynomial = spec.params.field->reduction_polynomial();
    h.code_digest = spec.digest();
    return h;
}

/// (replica, symbol) pairs for a node's slots, in placement order.
std::vector<std::pair<uint8_t, uint32_t>> node_slot_sources(const CodeSpec& spec,
                                                            uint32_t node) {
    const uint32_t n = spec.params.n, k = spec.params.k;
    std::vector<std::pair<uint8_t, uint32_t>> out;
    if (node < k) out.emplace_back(1, node);
    if (node + k >= n) out.emplace_back(2, node - (n - k));
    return out;
}

std::vector<Payload> load_locals(BlockStore& store, const PipelineJob& job,
                                 uint32_t node) {
    std::vector<Payload> locals;
    for (auto [replica, symbol] : node_slot_sources(*job.spec, node)) {
        const BlockKey key{job.object, BlockRole::source, replica, symbol};
        locals.push_back(
            store.get_block_shared(job.node_names[node], key).payload);
    }
    return locals;
}

void validate_job(const PipelineJob& job) {
    if (!job.spec) throw input_error("pipeline: missing code spec");
    if (job.node_names.size() != job.spec->params.n)
        throw input_error("pipeline: endpoint count must equal n");
    if (job.block_size == 0) throw input_error("pipeline: empty block");
}

struct SimPipeline : std::enable_shared_from_this<SimPipeline> {
    PipelineJob job;
    SimNetwork* net = nullptr;
    std::shared_ptr<EncodeOutcome> outcome;

    struct NodeState {
        std::unique_ptr<PipelineNodeCore> core;
        std::unique_ptr<BlockWriter> writer;
        SimNetwork::StreamId out_stream = 0;
        bool committed = false;
    };
    std::vector<NodeState> nodes;
    uint32_t pending_commits = 0;
    bool aborted = false;

    void abort(const std::string& why) {
        if (aborted || outcome->success) return;
        aborted = true;
        outcome->success = false;
        outcome->error = why;
        outcome->end_time = net->now();
        // drop partial blocks; replicas stay untouched for the restart
        for (auto& n : nodes)
            if (n.writer && !n.committed) n.writer->abort();
        for (uint32_t i = 0; i + 1 < nodes.size(); ++i)
            net->close_stream(nodes[i].out_stream, true);
    }

    void finish_node(NodeState& st) {
        st.writer->commit();
        st.committed = true;
        if (--pending_commits == 0) {
            outcome->success = true;
            outcome->end_time = net->now();
        }
    }

    void process(uint32_t node, std::span<const uint8_t> incoming) {
        if (aborted) return;
        NodeState& st = nodes[node];
        const uint32_t seq = st.core->cursor();
        if (job.fail_at && job.fail_at->first == node &&
            job.fail_at->second == seq) {
            abort("injected failure at node " + std::to_string(node + 1) +
                  " chunk " + std::to_string(seq));
            return;
        }
        PipelineNodeCore::Step out;
        try {
            out = st.core->step(incoming);
        } catch (const std::exception& e) {
            abort(e.what());
            return;
        }
        st.writer->append(out.output);
        if (st.core->has_outgoing()) {
            auto frame = ChunkFrame::make(job.object, StreamRole::forward_x,
                                          static_cast<uint16_t>(node + 1), seq,
                                          make_payload(std::move(out.forward)));
            net->send(st.out_stream, std::move(frame));
        }
        if (st.core->finished()) finish_node(st);
    }

    /// First node: emit chunk t, then schedule t+1 for when the egress is
    /// free again, so the head paces the chain at link speed.
    void head_pump() {
        if (aborted) return;
        NodeState& st = nodes[0];
        if (st.core->finished()) return;
        const uint32_t seq = st.core->cursor();
        if (job.fail_at && job.fail_at->first == 0 && job.fail_at->second == seq) {
            abort("injected failure at node 1 chunk " + std::to_string(seq));
            return;
        }
        PipelineNodeCore::Step out;
        try {
            out = st.core->step({});
        } catch (const std::exception& e) {
            abort(e.what());
            return;
        }
        st.writer->append(out.output);
        double next_at = net->now();
        if (st.core->has_outgoing()) {
            auto frame =
                ChunkFrame::make(job.object, StreamRole::forward_x, 1, seq,
                                 make_payload(std::move(out.forward)));
            next_at = net->send(st.out_stream, std::move(frame));
        }
        if (st.core->finished()) {
            finish_node(st);
            return;
        }
        auto self = shared_from_this();
        net->schedule(next_at - net->now(), [self] { self->head_pump(); });
    }
};

}  // namespace

std::shared_ptr<EncodeOutcome> start_pipeline_sim(SimNetwork& net,
                                                  BlockStore& store,
                                                  const PipelineJob& job) {
    validate_job(job);
    const CodeSpec& spec = *job.spec;
    const uint32_t n = spec.params.n;

    auto ctx = std::make_shared<SimPipeline>();
    ctx->job = job;
    ctx->net = &net;
    ctx->outcome = std::make_shared<EncodeOutcome>();
    ctx->outcome->start_time = net.now();
    ctx->nodes.resize(n);
    ctx->pending_commits = n;

    std::vector<SimNetwork::NodeId> ids;
    for (const auto& name : job.node_names) ids.push_back(net.lookup(name));

    for (uint32_t i = 0; i < n; ++i) {
        auto& st = ctx->nodes[i];
        st.core = std::make_unique<PipelineNodeCore>(
            spec, i, load_locals(store, job, i), job.block_size, job.chunk_size);
        st.writer = store.open_writer(job.node_names[i],
                                      BlockKey{job.object, BlockRole::coded, 0, i},
                                      coded_header(spec, job.object, i));
    }
    for (uint32_t i = 0; i + 1 < n; ++i) {
        ctx->nodes[i].out_stream =
            net.open_stream(ids[i], ids[i + 1], job.object,
                            StreamRole::forward_x, static_cast<uint16_t>(i + 1));
        const uint32_t receiver = i + 1;
        net.set_stream_handler(
            ctx->nodes[i].out_stream,
            [ctx, receiver](SimNetwork::StreamId, const ChunkFrame& f) {
                ctx->process(receiver, f.payload);
            });
        net.add_stream_close_handler(
            ctx->nodes[i].out_stream,
            [ctx, receiver](SimNetwork::StreamId, bool failed) {
                if (failed && !ctx->nodes[receiver].core->finished())
                    ctx->abort("upstream stream failed");
            });
    }

    net.schedule(0, [ctx] { ctx->head_pump(); });
    return ctx->outcome;
}

EncodeOutcome run_pipeline_sim(SimNetwork& net, BlockStore& store,
                               const PipelineJob& job) {
    auto outcome = start_pipeline_sim(net, store, job);
    net.run();
    return *outcome;
}

EncodeOutcome run_pipeline_socket(BlockStore& store, const PipelineJob& job) {
    validate_job(job);
    const CodeSpec& spec = *job.spec;
    const uint32_t n = spec.params.n;
    const auto t0 = std::chrono::steady_clock::now();

    struct NodeCtx {
        std::unique_ptr<SocketEndpoint> endpoint;
        std::unique_ptr<PipelineNodeCore> core;
        std::unique_ptr<BlockWriter> writer;
        std::unique_ptr<SocketEndpoint::Connection> next;
        std::promise<void> done;
        std::atomic<bool> done_set{false};
        std::atomic<bool> failed{false};
        std::string error;

        void mark_done() {
            if (!done_set.exchange(true)) done.set_value();
        }
        void fail(const std::string& why) {
            if (!failed.exchange(true)) {
                error = why;
                writer->abort();
                if (next) next->close();
            }
            mark_done();
        }
    };

    std::vector<std::unique_ptr<NodeCtx>> nodes;
    for (uint32_t i = 0; i < n; ++i) {
        auto ctx = std::make_unique<NodeCtx>();
        ctx->endpoint = std::make_unique<SocketEndpoint>(0);
        ctx->core = std::make_unique<PipelineNodeCore>(
            spec, i, load_locals(store, job, i), job.block_size, job.chunk_size);
        ctx->writer =
            store.open_writer(job.node_names[i],
                              BlockKey{job.object, BlockRole::coded, 0, i},
                              coded_header(spec, job.object, i));
        nodes.push_back(std::move(ctx));
    }
    for (uint32_t i = 0; i + 1 < n; ++i)
        nodes[i]->next = nodes[i]->endpoint->connect(
            "127.0.0.1", nodes[i + 1]->endpoint->port());

    for (uint32_t i = 1; i < n; ++i) {
        NodeCtx* ctx = nodes[i].get();
        const auto& obj = job.object;
        const auto fail_at = job.fail_at;
        ctx->endpoint->set_frame_handler([ctx, obj, fail_at, i](const ChunkFrame& f) {
            if (ctx->failed) return;
            try {
                if (fail_at && fail_at->first == i && fail_at->second == f.sequence)
                    throw std::runtime_error("injected failure at node " +
                                             std::to_string(i + 1));
                auto out = ctx->core->step(f.payload);
                ctx->writer->append(out.output);
                if (ctx->core->has_outgoing())
                    ctx->next->send(ChunkFrame::make(
                        obj, StreamRole::forward_x, static_cast<uint16_t>(i + 1),
                        f.sequence, make_payload(std::move(out.forward))));
                if (ctx->core->finished()) {
                    ctx->writer->commit();
                    ctx->mark_done();
                }
            } catch (const std::exception& e) {
                ctx->fail(e.what());
            }
        });
        ctx->endpoint->set_error_handler(
            [ctx](const std::string& why) { ctx->fail("peer failed: " + why); });
        ctx->endpoint->set_disconnect_handler([ctx] {
            if (!ctx->core->finished()) ctx->fail("upstream closed early");
        });
    }

    // head node streams on the calling thread; TCP backpressure paces it
    {
        NodeCtx* head = nodes[0].get();
        try {
            while (!head->core->finished()) {
                const uint32_t seq = head->core->cursor();
                if (job.fail_at && job.fail_at->first == 0 &&
                    job.fail_at->second == seq)
                    throw std::runtime_error("injected failure at node 1");
                auto out = head->core->step({});
                head->writer->append(out.output);
                if (head->core->has_outgoing())
                    head->next->send(ChunkFrame::make(
                        job.object, StreamRole::forward_x, 1, seq,
                        make_payload(std::move(out.forward))));
            }
            head->writer->commit();
            head->mark_done();
        } catch (const std::exception& e) {
            head->fail(e.what());
        }
    }

    for (auto& ctx : nodes) ctx->done.get_future().wait();
    for (auto& ctx : nodes) {
        if (ctx->next) ctx->next->close();
        ctx->endpoint->shutdown();
    }

    bool ok = true;
    std::string error;
    for (auto& ctx : nodes)
        if (ctx->failed) {
            ok = false;
            if (error.empty()) error = ctx->error;
        }
    if (!ok) {
        // idempotent restart: no partial codeword may survive
        for (uint32_t i = 0; i < n; ++i)
            store.delete_block(job.node_names[i],
                               BlockKey{job.object, BlockRole::coded, 0, i});
    }
    EncodeOutcome outcome;
    outcome.success = ok;
    outcome.error = error;
    outcome.start_time = 0;
    outcome.end_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return outcome;
}

}  // namespace rapidraid
