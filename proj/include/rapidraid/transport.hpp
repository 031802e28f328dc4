#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rapidraid/codespec.hpp"

namespace rapidraid {

/// 16-byte object identifier.
struct ObjectId {
    std::array<uint8_t, 16> bytes{};

    static ObjectId from_seed(uint64_t seed, uint64_t ordinal = 0);
    static ObjectId from_hex(const std::string& hex);
    std::string to_hex() const;

    auto operator<=>(const ObjectId&) const = default;
};

enum class StreamRole : uint8_t {
    forward_x = 0,    // pipeline partial combination, node i -> i+1
    source_pull = 1,  // source block, replica holder -> coordinator
    parity_push = 2,  // parity block, coordinator -> sink
};

constexpr size_t kStreamRoleCount = 3;

/// Bandwidth/latency description of one direction of a link.
struct LinkProfile {
    double bandwidth = 0;       // bytes per second
    double base_latency = 0;    // seconds
    double latency_jitter = 0;  // uniform +- seconds

    void validate() const {
        if (bandwidth <= 0)
            throw input_error("link profile: bandwidth must be positive");
        if (latency_jitter != 0 && latency_jitter >= base_latency)
            throw input_error("link profile: jitter must be below base latency");
    }
};

using Payload = std::shared_ptr<const std::vector<uint8_t>>;

Payload make_payload(std::vector<uint8_t> bytes);

/// One framed chunk. Sequence numbers are contiguous from 0 per stream;
/// every frame carries chunk_size bytes except the final one.
struct ChunkFrame {
    ObjectId object;
    StreamRole role = StreamRole::forward_x;
    uint16_t stage = 0;     // codeword/node position the stream concerns
    uint32_t sequence = 0;
    std::span<const uint8_t> payload;  // backed by `owner`
    Payload owner;

    static ChunkFrame make(ObjectId id, StreamRole role, uint16_t stage,
                           uint32_t seq, Payload data);
    /// Frame whose payload is a sub-range of a shared buffer (no copy).
    static ChunkFrame make_view(ObjectId id, StreamRole role, uint16_t stage,
                                uint32_t seq, Payload owner, size_t offset,
                                size_t len);
};

/// Wire format, bit-exact:
///   magic 0x52 0x52, version 0x01, object id (16), role (1),
///   stage (2, BE), sequence (4, BE), payload length (4, BE), payload.
constexpr size_t kFrameHeaderSize = 30;

void encode_frame_header(const ChunkFrame& f, std::span<uint8_t, kFrameHeaderSize> out);
std::vector<uint8_t> encode_frame(const ChunkFrame& f);

struct FrameHeader {
    ObjectId object;
    StreamRole role;
    uint16_t stage;
    uint32_t sequence;
    uint32_t payload_length;
};

/// Throws std::runtime_error on bad magic/version.
FrameHeader decode_frame_header(std::span<const uint8_t, kFrameHeaderSize> in);

/// Deterministic discrete-event network. Nodes own one ingress and one
/// egress resource; a frame occupies the sender's egress and, one latency
/// later, the receiver's ingress for its serialization time, so the node
/// (not the pair) is the bandwidth bottleneck. No wall-clock sleeping.
class SimNetwork {
public:
    using NodeId = uint32_t;
    using StreamId = uint32_t;
    using FrameHandler =
        std::function<void(StreamId, const ChunkFrame&)>;
    using CloseHandler = std::function<void(StreamId, bool failed)>;

    SimNetwork(uint64_t seed, LinkProfile default_profile);

    NodeId register_node(const std::string& name);
    NodeId lookup(const std::string& name) const;
    const std::string& node_name(NodeId id) const;

    /// All links touching the node adopt this profile, for streams opened
    /// afterwards.
    void shape(NodeId node, LinkProfile profile);
    void clear_shape(NodeId node);

    StreamId open_stream(NodeId from, NodeId to, ObjectId object,
                         StreamRole role, uint16_t stage);

    /// Delivery callback for a stream (receiver side). One handler per
    /// stream; concurrent jobs each register their own streams.
    void set_stream_handler(StreamId stream, FrameHandler h);
    /// Close/failure observers; all registered handlers fire, so both ends
    /// of a stream can watch it.
    void add_stream_close_handler(StreamId stream, CloseHandler h);

    /// Queue a frame at the current simulated time. The frame's object,
    /// role and stage must match the stream; sequences must be contiguous.
    /// Returns the time the sender's egress finishes serializing it
    /// (senders pace themselves by scheduling the next send at that time).
    double send(StreamId stream, ChunkFrame frame);

    /// Graceful close; with failed=true both ends get a failure callback.
    void close_stream(StreamId stream, bool failed = false);

    void schedule(double delay, std::function<void()> fn);
    void run();
    double now() const { return now_; }

    struct Counters {
        uint64_t frames = 0;
        uint64_t payload_bytes = 0;
        uint64_t wire_bytes = 0;
    };
    /// Delivered traffic by role.
    const Counters& delivered(StreamRole role) const {
        return delivered_[static_cast<size_t>(role)];
    }
    void reset_counters();

private:
    struct Node {
        std::string name;
        double egress_free = 0;
        double ingress_free = 0;
        std::optional<LinkProfile> shaped;
    };
    struct Stream {
        NodeId from, to;
        ObjectId object;
        StreamRole role;
        uint16_t stage;
        LinkProfile profile;
        double last_delivery = 0;
        uint32_t next_sequence = 0;
        bool closed = false;
        FrameHandler on_frame;
        std::vector<CloseHandler> on_close;
    };
    struct Event {
        double time;
        uint64_t seq;
        std::function<void()> fn;
        bool operator>(const Event& o) const {
            return time != o.time ? time > o.time : seq > o.seq;
        }
    };

    double sample_latency(const LinkProfile& p);

    std::vector<Node> nodes_;
    std::map<std::string, NodeId> by_name_;
    std::vector<Stream> streams_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    uint64_t event_seq_ = 0;
    double now_ = 0;
    LinkProfile default_profile_;
    std::mt19937_64 rng_;
    std::array<Counters, kStreamRoleCount> delivered_{};
};

}  // namespace rapidraid
