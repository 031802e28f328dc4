#include "rapidraid/classical.hpp"

#include <atomic>
#include <chrono>
#include <future>
#include <mutex>
#include <thread>

#include "rapidraid/socket_transport.hpp"

namespace rapidraid {

namespace {

void validate_job(const ClassicalJob& job) {
    if (!job.spec) throw input_error("classical: missing code spec");
    const auto& p = job.spec->params;
    if (job.source_nodes.size() != p.k)
        throw input_error("classical: need k source endpoints");
    if (job.sink_nodes.size() != p.m())
        throw input_error("classical: need m sink endpoints");
    if (job.block_size == 0) throw input_error("classical: empty block");
    if (job.colocate && job.source_nodes[0] != job.coordinator)
        throw input_error("classical: colocate requires coordinator == source 1");
    // systematic check: top k rows must be identity
    const Matrix gen = job.spec->generator();
    for (uint32_t r = 0; r < p.k; ++r)
        for (uint32_t c = 0; c < p.k; ++c)
            if (gen.at(r, c) != (r == c ? 1 : 0))
                throw input_error("classical: generator is not systematic");
}

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

}  // namespace

ClassicalCoordinatorCore::ClassicalCoordinatorCore(const CodeSpec& spec,
                                                   uint64_t block_size,
                                                   size_t chunk_size)
    : spec_(spec),
      block_size_(block_size),
      chunk_size_(chunk_size),
      total_chunks_(chunk_count(block_size, chunk_size)),
      pending_(spec.params.k),
      next_seq_(spec.params.k, 0) {
    const Matrix gen = spec.generator();
    const uint32_t k = spec.params.k, m = spec.params.m();
    parity_rows_ = Matrix(m, k);
    for (uint32_t r = 0; r < m; ++r)
        for (uint32_t c = 0; c < k; ++c)
            parity_rows_.at(r, c) = gen.at(k + r, c);
}

std::vector<ClassicalCoordinatorCore::ParityRow>
ClassicalCoordinatorCore::on_source_chunk(uint32_t source_index, uint32_t seq,
                                          std::span<const uint8_t> data) {
    const uint32_t k = spec_.params.k, m = spec_.params.m();
    if (source_index >= k)
        throw std::runtime_error("classical: source index out of range");
    if (seq != next_seq_[source_index])
        throw std::runtime_error("classical: out-of-order source chunk");
    next_seq_[source_index] = seq + 1;

    const uint64_t off = uint64_t{seq} * chunk_size_;
    const size_t expect = static_cast<size_t>(
        std::min<uint64_t>(chunk_size_, block_size_ - off));
    if (seq >= total_chunks_ || data.size() != expect)
        throw std::runtime_error("classical: chunk length mismatch from source " +
                                 std::to_string(source_index + 1));

    pending_[source_index].emplace(seq,
                                   std::vector<uint8_t>(data.begin(), data.end()));
    ++buffered_;
    max_buffered_ = std::max(max_buffered_, buffered_);

    const GaloisField& gf = *spec_.params.field;
    std::vector<ParityRow> done;
    for (;;) {
        bool complete = next_row_ < total_chunks_;
        for (uint32_t s = 0; s < k && complete; ++s)
            complete = pending_[s].count(next_row_) > 0;
        if (!complete) break;

        const uint64_t row_off = uint64_t{next_row_} * chunk_size_;
        const size_t len = static_cast<size_t>(
            std::min<uint64_t>(chunk_size_, block_size_ - row_off));
        ParityRow row;
        row.sequence = next_row_;
        row.parity.assign(m, std::vector<uint8_t>(len, 0));
        for (uint32_t s = 0; s < k; ++s) {
            auto it = pending_[s].find(next_row_);
            for (uint32_t r = 0; r < m; ++r)
                gf.mul_buffer(parity_rows_.at(r, s), it->second, row.parity[r]);
            pending_[s].erase(it);
            --buffered_;
        }
        done.push_back(std::move(row));
        ++next_row_;
    }
    return done;
}

namespace {

struct SimClassical : std::enable_shared_from_this<SimClassical> {
    ClassicalJob job;
    SimNetwork* net = nullptr;
    BlockStore* store = nullptr;
    std::shared_ptr<EncodeOutcome> outcome;

    std::unique_ptr<ClassicalCoordinatorCore> core;
    std::vector<SimNetwork::StreamId> source_streams;  // k (unused slots for local)
    std::vector<SimNetwork::StreamId> sink_streams;    // m
    std::vector<std::unique_ptr<BlockWriter>> sink_writers;  // m, at sink nodes
    std::vector<Payload> source_payloads;  // staged blocks (for send pacing)
    std::vector<uint32_t> source_cursor;
    uint32_t committed_sinks = 0;
    uint32_t total_chunks = 0;
    bool aborted = false;

    size_t chunk_len(uint32_t seq) const {
        const uint64_t off = uint64_t{seq} * job.chunk_size;
        return static_cast<size_t>(
            std::min<uint64_t>(job.chunk_size, job.block_size - off));
    }

    void abort(const std::string& why) {
        if (aborted || outcome->success) return;
        aborted = true;
        outcome->success = false;
        outcome->error = why;
        outcome->end_time = net->now();
        for (auto& w : sink_writers)
            if (w) w->abort();
        for (auto sid : sink_streams) net->close_stream(sid, true);
    }

    /// Source pacing: push chunk t, schedule t+1 at the egress-free time.
    void pump_source(uint32_t s) {
        if (aborted) return;
        const uint32_t seq = source_cursor[s];
        if (seq >= total_chunks) return;
        source_cursor[s] = seq + 1;
        const uint64_t off = uint64_t{seq} * job.chunk_size;
        auto frame = ChunkFrame::make_view(
            job.object, StreamRole::source_pull, static_cast<uint16_t>(s + 1),
            seq, source_payloads[s], off, chunk_len(seq));
        const double next_at = net->send(source_streams[s], std::move(frame));
        if (source_cursor[s] < total_chunks) {
            auto self = shared_from_this();
            net->schedule(next_at - net->now(),
                          [self, s] { self->pump_source(s); });
        }
    }

    /// Local colocated source: fed in lockstep with row consumption so the
    /// coordinator's buffers stay within the streaming bound.
    void feed_local() {
        if (aborted || !job.colocate) return;
        while (local_fed_ < total_chunks && local_fed_ <= core_next_row()) {
            const uint32_t seq = local_fed_++;
            const uint64_t off = uint64_t{seq} * job.chunk_size;
            const std::span<const uint8_t> view(
                source_payloads[0]->data() + off, chunk_len(seq));
            deliver_rows(core->on_source_chunk(0, seq, view));
        }
    }

    uint32_t core_next_row() const {
        return core->finished() ? total_chunks : row_progress_;
    }

    void deliver_rows(std::vector<ClassicalCoordinatorCore::ParityRow> rows) {
        for (auto& row : rows) {
            row_progress_ = row.sequence + 1;
            for (uint32_t r = 0; r < job.sink_nodes.size(); ++r) {
                auto frame = ChunkFrame::make(
                    job.object, StreamRole::parity_push,
                    static_cast<uint16_t>(job.spec->params.k + r + 1),
                    row.sequence, make_payload(std::move(row.parity[r])));
                net->send(sink_streams[r], std::move(frame));
            }
        }
    }

    void on_source_frame(uint32_t s, const ChunkFrame& f) {
        if (aborted) return;
        try {
            deliver_rows(core->on_source_chunk(s, f.sequence, f.payload));
            feed_local();
        } catch (const std::exception& e) {
            abort(e.what());
        }
    }

    void on_parity_frame(uint32_t r, const ChunkFrame& f) {
        if (aborted) return;
        sink_writers[r]->append(f.payload);
        if (f.sequence + 1 == total_chunks) {
            sink_writers[r]->commit();
            if (++committed_sinks == job.sink_nodes.size()) finish();
        }
    }

    void finish() {
        // systematic halves of the codeword: local copies at the source nodes
        const uint32_t k = job.spec->params.k;
        for (uint32_t i = 0; i < k; ++i) {
            store->put_block_shared(job.source_nodes[i],
                                    BlockKey{job.object, BlockRole::coded, 0, i},
                                    coded_header(*job.spec, job.object, i),
                                    source_payloads[i]);
        }
        outcome->success = true;
        outcome->end_time = net->now();
    }

    uint32_t local_fed_ = 0;
    uint32_t row_progress_ = 0;
};

}  // namespace

std::shared_ptr<EncodeOutcome> start_classical_sim(SimNetwork& net,
                                                   BlockStore& store,
                                                   const ClassicalJob& job) {
    validate_job(job);
    const CodeSpec& spec = *job.spec;
    const uint32_t k = spec.params.k, m = spec.params.m();

    auto ctx = std::make_shared<SimClassical>();
    ctx->job = job;
    ctx->net = &net;
    ctx->store = &store;
    ctx->outcome = std::make_shared<EncodeOutcome>();
    ctx->outcome->start_time = net.now();
    ctx->core = std::make_unique<ClassicalCoordinatorCore>(spec, job.block_size,
                                                           job.chunk_size);
    ctx->total_chunks = chunk_count(job.block_size, job.chunk_size);
    ctx->source_cursor.assign(k, 0);

    for (uint32_t s = 0; s < k; ++s) {
        const BlockKey key{job.object, BlockRole::source, 1, s};
        ctx->source_payloads.push_back(
            store.get_block_shared(job.source_nodes[s], key).payload);
        if (ctx->source_payloads.back()->size() != job.block_size)
            throw input_error("classical: source block length mismatch");
    }

    const SimNetwork::NodeId coord = net.lookup(job.coordinator);
    ctx->source_streams.resize(k);
    for (uint32_t s = 0; s < k; ++s) {
        if (job.colocate && s == 0) continue;  // local read, no stream
        const auto sid =
            net.open_stream(net.lookup(job.source_nodes[s]), coord, job.object,
                            StreamRole::source_pull, static_cast<uint16_t>(s + 1));
        ctx->source_streams[s] = sid;
        net.set_stream_handler(sid, [ctx, s](SimNetwork::StreamId,
                                             const ChunkFrame& f) {
            ctx->on_source_frame(s, f);
        });
        net.add_stream_close_handler(sid, [ctx](SimNetwork::StreamId, bool failed) {
            if (failed) ctx->abort("source stream failed");
        });
    }
    for (uint32_t r = 0; r < m; ++r) {
        const auto sid = net.open_stream(
            coord, net.lookup(job.sink_nodes[r]), job.object,
            StreamRole::parity_push, static_cast<uint16_t>(k + r + 1));
        ctx->sink_streams.push_back(sid);
        ctx->sink_writers.push_back(store.open_writer(
            job.sink_nodes[r], BlockKey{job.object, BlockRole::coded, 0, k + r},
            coded_header(spec, job.object, k + r)));
        net.set_stream_handler(sid, [ctx, r](SimNetwork::StreamId,
                                             const ChunkFrame& f) {
            ctx->on_parity_frame(r, f);
        });
    }

    net.schedule(0, [ctx] {
        const uint32_t k = ctx->job.spec->params.k;
        ctx->feed_local();
        for (uint32_t s = ctx->job.colocate ? 1 : 0; s < k; ++s) {
            if (ctx->job.fail_source && *ctx->job.fail_source == s) {
                // source never comes up; the job must fail cleanly
                ctx->net->schedule(0, [ctx, s] {
                    ctx->abort("source " + std::to_string(s + 1) +
                               " unreachable");
                });
                continue;
            }
            ctx->pump_source(s);
        }
    });

    return ctx->outcome;
}

EncodeOutcome run_classical_sim(SimNetwork& net, BlockStore& store,
                                const ClassicalJob& job) {
    auto outcome = start_classical_sim(net, store, job);
    net.run();
    return *outcome;
}

EncodeOutcome run_classical_socket(BlockStore& store, const ClassicalJob& job) {
    validate_job(job);
    const CodeSpec& spec = *job.spec;
    const uint32_t k = spec.params.k, m = spec.params.m();
    const auto t0 = std::chrono::steady_clock::now();
    const uint32_t total = chunk_count(job.block_size, job.chunk_size);

    // sink endpoints with their writers
    struct Sink {
        std::unique_ptr<SocketEndpoint> endpoint;
        std::unique_ptr<BlockWriter> writer;
        std::promise<void> done;
        std::atomic<bool> done_set{false};
        std::atomic<bool> failed{false};
        void mark_done() {
            if (!done_set.exchange(true)) done.set_value();
        }
    };
    std::vector<std::unique_ptr<Sink>> sinks;
    for (uint32_t r = 0; r < m; ++r) {
        auto sink = std::make_unique<Sink>();
        sink->endpoint = std::make_unique<SocketEndpoint>(0);
        sink->writer = store.open_writer(
            job.sink_nodes[r], BlockKey{job.object, BlockRole::coded, 0, k + r},
            coded_header(spec, job.object, k + r));
        sinks.push_back(std::move(sink));
    }
    for (uint32_t r = 0; r < m; ++r) {
        Sink* sink = sinks[r].get();
        sink->endpoint->set_frame_handler([sink, total](const ChunkFrame& f) {
            if (sink->failed) return;
            sink->writer->append(f.payload);
            if (f.sequence + 1 == total) {
                sink->writer->commit();
                sink->mark_done();
            }
        });
        sink->endpoint->set_disconnect_handler([sink] {
            if (!sink->done_set) {
                sink->failed = true;
                sink->writer->abort();
                sink->mark_done();
            }
        });
    }

    // coordinator endpoint: assembles rows, pushes parities
    SocketEndpoint coordinator(0);
    std::vector<std::unique_ptr<SocketEndpoint::Connection>> to_sinks;
    for (uint32_t r = 0; r < m; ++r)
        to_sinks.push_back(
            coordinator.connect("127.0.0.1", sinks[r]->endpoint->port()));

    ClassicalCoordinatorCore core(spec, job.block_size, job.chunk_size);
    std::mutex core_mutex;
    std::atomic<bool> failed{false};
    std::string error;
    std::promise<void> coord_done;
    std::atomic<bool> coord_done_set{false};

    coordinator.set_frame_handler([&](const ChunkFrame& f) {
        if (failed) return;
        try {
            std::lock_guard lock(core_mutex);
            auto rows = core.on_source_chunk(f.stage - 1, f.sequence, f.payload);
            for (auto& row : rows)
                for (uint32_t r = 0; r < m; ++r)
                    to_sinks[r]->send(ChunkFrame::make(
                        job.object, StreamRole::parity_push,
                        static_cast<uint16_t>(k + r + 1), row.sequence,
                        make_payload(std::move(row.parity[r]))));
            if (core.finished() && !coord_done_set.exchange(true))
                coord_done.set_value();
        } catch (const std::exception& e) {
            if (!failed.exchange(true)) {
                error = e.what();
                if (!coord_done_set.exchange(true)) coord_done.set_value();
            }
        }
    });

    // source threads: stream replica-1 blocks to the coordinator
    std::vector<std::thread> source_threads;
    std::vector<Payload> source_payloads(k);
    for (uint32_t s = 0; s < k; ++s) {
        const BlockKey key{job.object, BlockRole::source, 1, s};
        source_payloads[s] =
            store.get_block_shared(job.source_nodes[s], key).payload;
    }
    for (uint32_t s = 0; s < k; ++s) {
        if (job.fail_source && *job.fail_source == s) {
            if (!failed.exchange(true)) error = "source unreachable";
            if (!coord_done_set.exchange(true)) coord_done.set_value();
            continue;
        }
        source_threads.emplace_back([&, s] {
            try {
                auto conn =
                    SocketEndpoint::connect("127.0.0.1", coordinator.port());
                for (uint32_t seq = 0; seq < total && !failed; ++seq) {
                    const uint64_t off = uint64_t{seq} * job.chunk_size;
                    const size_t len = static_cast<size_t>(std::min<uint64_t>(
                        job.chunk_size, job.block_size - off));
                    conn->send(ChunkFrame::make_view(
                        job.object, StreamRole::source_pull,
                        static_cast<uint16_t>(s + 1), seq, source_payloads[s],
                        off, len));
                }
                conn->close();
            } catch (...) {
                if (!failed.exchange(true)) error = "source stream broke";
                if (!coord_done_set.exchange(true)) coord_done.set_value();
            }
        });
    }

    coord_done.get_future().wait();
    for (auto& t : source_threads) t.join();

    if (failed) {
        for (auto& sink : sinks) {
            sink->failed = true;
            sink->writer->abort();
            sink->mark_done();
        }
    }
    for (uint32_t r = 0; r < m; ++r) to_sinks[r]->close();
    for (auto& sink : sinks) sink->done.get_future().wait();
    coordinator.shutdown();
    for (auto& sink : sinks) sink->endpoint->shutdown();

    EncodeOutcome outcome;
    if (failed) {
        for (uint32_t r = 0; r < m; ++r)
            store.delete_block(job.sink_nodes[r],
                               BlockKey{job.object, BlockRole::coded, 0, k + r});
        outcome.success = false;
        outcome.error = error;
    } else {
        for (uint32_t i = 0; i < k; ++i)
            store.put_block_shared(job.source_nodes[i],
                                   BlockKey{job.object, BlockRole::coded, 0, i},
                                   coded_header(spec, job.object, i),
                                   source_payloads[i]);
        outcome.success = true;
    }
    outcome.start_time = 0;
    outcome.end_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return outcome;
}

}  // namespace rapidraid
