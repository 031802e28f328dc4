#include "rapidraid/transport.hpp"

#include <cstdio>

#include "rapidraid/checksum.hpp"

namespace rapidraid {

ObjectId ObjectId::from_seed(uint64_t seed, uint64_t ordinal) {
    std::array<uint8_t, 16> material{};
    for (int i = 0; i < 8; ++i) {
        material[i] = static_cast<uint8_t>(seed >> (8 * i));
        material[8 + i] = static_cast<uint8_t>(ordinal >> (8 * i));
    }
    ObjectId id;
    id.bytes = digest128(material);
    return id;
}

std::string ObjectId::to_hex() const {
    std::string out(32, '0');
    static const char* digits = "0123456789abcdef";
    for (size_t i = 0; i < 16; ++i) {
        out[2 * i] = digits[bytes[i] >> 4];
        out[2 * i + 1] = digits[bytes[i] & 0xF];
    }
    return out;
}

ObjectId ObjectId::from_hex(const std::string& hex) {
    if (hex.size() != 32) throw input_error("object id: need 32 hex digits");
    auto nib = [](char c) -> uint8_t {
        if (c >= '0' && c <= '9') return static_cast<uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<uint8_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<uint8_t>(c - 'A' + 10);
        throw input_error("object id: bad hex digit");
    };
    ObjectId id;
    for (size_t i = 0; i < 16; ++i)
        id.bytes[i] = static_cast<uint8_t>((nib(hex[2 * i]) << 4) | nib(hex[2 * i + 1]));
    return id;
}

Payload make_payload(std::vector<uint8_t> bytes) {
    return std::make_shared<const std::vector<uint8_t>>(std::move(bytes));
}

ChunkFrame ChunkFrame::make(ObjectId id, StreamRole role, uint16_t stage,
                            uint32_t seq, Payload data) {
    ChunkFrame f;
    f.object = id;
    f.role = role;
    f.stage = stage;
    f.sequence = seq;
    f.owner = std::move(data);
    f.payload = f.owner ? std::span<const uint8_t>(*f.owner)
                        : std::span<const uint8_t>{};
    return f;
}

ChunkFrame ChunkFrame::make_view(ObjectId id, StreamRole role, uint16_t stage,
                                 uint32_t seq, Payload owner, size_t offset,
                                 size_t len) {
    if (!owner || offset + len > owner->size())
        throw std::out_of_range("frame view out of range");
    ChunkFrame f;
    f.object = id;
    f.role = role;
    f.stage = stage;
    f.sequence = seq;
    f.owner = std::move(owner);
    f.payload = std::span<const uint8_t>(f.owner->data() + offset, len);
    return f;
}

void encode_frame_header(const ChunkFrame& f,
                         std::span<uint8_t, kFrameHeaderSize> out) {
    out[0] = 0x52;
    out[1] = 0x52;
    out[2] = 0x01;
    for (size_t i = 0; i < 16; ++i) out[3 + i] = f.object.bytes[i];
    out[19] = static_cast<uint8_t>(f.role);
    out[20] = static_cast<uint8_t>(f.stage >> 8);
    out[21] = static_cast<uint8_t>(f.stage & 0xFF);
    const uint32_t seq = f.sequence;
    out[22] = static_cast<uint8_t>(seq >> 24);
    out[23] = static_cast<uint8_t>(seq >> 16);
    out[24] = static_cast<uint8_t>(seq >> 8);
    out[25] = static_cast<uint8_t>(seq);
    const auto len = static_cast<uint32_t>(f.payload.size());
    out[26] = static_cast<uint8_t>(len >> 24);
    out[27] = static_cast<uint8_t>(len >> 16);
    out[28] = static_cast<uint8_t>(len >> 8);
    out[29] = static_cast<uint8_t>(len);
}

std::vector<uint8_t> encode_frame(const ChunkFrame& f) {
    std::vector<uint8_t> out(kFrameHeaderSize + f.payload.size());
    encode_frame_header(f, std::span<uint8_t, kFrameHeaderSize>(
                               out.data(), kFrameHeaderSize));
    std::copy(f.payload.begin(), f.payload.end(), out.begin() + kFrameHeaderSize);
    return out;
}

FrameHeader decode_frame_header(std::span<const uint8_t, kFrameHeaderSize> in) {
    if (in[0] != 0x52 || in[1] != 0x52)
        throw std::runtime_error("frame: bad magic");
    if (in[2] != 0x01) throw std::runtime_error("frame: unsupported version");
    FrameHeader h;
    for (size_t i = 0; i < 16; ++i) h.object.bytes[i] = in[3 + i];
    if (in[19] > 2) throw std::runtime_error("frame: unknown stream role");
    h.role = static_cast<StreamRole>(in[19]);
    h.stage = static_cast<uint16_t>((in[20] << 8) | in[21]);
    h.sequence = (static_cast<uint32_t>(in[22]) << 24) |
                 (static_cast<uint32_t>(in[23]) << 16) |
                 (static_cast<uint32_t>(in[24]) << 8) | in[25];
    h.payload_length = (static_cast<uint32_t>(in[26]) << 24) |
                       (static_cast<uint32_t>(in[27]) << 16) |
                       (static_cast<uint32_t>(in[28]) << 8) | in[29];
    return h;
}

SimNetwork::SimNetwork(uint64_t seed, LinkProfile default_profile)
    : default_profile_(default_profile), rng_(seed) {
    default_profile_.validate();
}

SimNetwork::NodeId SimNetwork::register_node(const std::string& name) {
    if (by_name_.count(name))
        throw input_error("sim: duplicate endpoint " + name);
    const NodeId id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(Node{name, 0, 0, std::nullopt});
    by_name_[name] = id;
    return id;
}

SimNetwork::NodeId SimNetwork::lookup(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end())
        throw input_error("sim: unknown endpoint " + name);
    return it->second;
}

const std::string& SimNetwork::node_name(NodeId id) const {
    return nodes_.at(id).name;
}

void SimNetwork::shape(NodeId node, LinkProfile profile) {
    profile.validate();
    nodes_.at(node).shaped = profile;
}

void SimNetwork::clear_shape(NodeId node) { nodes_.at(node).shaped.reset(); }

SimNetwork::StreamId SimNetwork::open_stream(NodeId from, NodeId to,
                                             ObjectId object, StreamRole role,
                                             uint16_t stage) {
    if (from >= nodes_.size() || to >= nodes_.size())
        throw input_error("sim: unknown endpoint id");
    // a link touching a shaped node runs at the congested profile
    LinkProfile profile = default_profile_;
    if (nodes_[from].shaped) profile = *nodes_[from].shaped;
    if (nodes_[to].shaped) profile = *nodes_[to].shaped;
    const StreamId id = static_cast<StreamId>(streams_.size());
    streams_.push_back(
        Stream{from, to, object, role, stage, profile, 0, 0, false, {}, {}});
    return id;
}

void SimNetwork::set_stream_handler(StreamId stream, FrameHandler h) {
    streams_.at(stream).on_frame = std::move(h);
}

void SimNetwork::add_stream_close_handler(StreamId stream, CloseHandler h) {
    streams_.at(stream).on_close.push_back(std::move(h));
}

double SimNetwork::sample_latency(const LinkProfile& p) {
    if (p.latency_jitter == 0) return p.base_latency;
    std::uniform_real_distribution<double> dist(-p.latency_jitter,
                                                p.latency_jitter);
    return p.base_latency + dist(rng_);
}

double SimNetwork::send(StreamId stream, ChunkFrame frame) {
    Stream& s = streams_.at(stream);
    if (s.closed) throw std::runtime_error("sim: send on closed stream");
    if (frame.sequence != s.next_sequence)
        throw std::runtime_error("sim: out-of-order send");
    if (frame.object != s.object || frame.role != s.role ||
        frame.stage != s.stage)
        throw std::runtime_error("sim: frame does not match its stream");
    s.next_sequence = frame.sequence + 1;

    Node& src = nodes_[s.from];
    Node& dst = nodes_[s.to];
    const size_t payload_len = frame.payload.size();
    const double wire = static_cast<double>(kFrameHeaderSize + payload_len);
    const double tx = wire / s.profile.bandwidth;
    const double lat = sample_latency(s.profile);

    const double start =
        std::max({now_, src.egress_free, dst.ingress_free - lat});
    src.egress_free = start + tx;
    dst.ingress_free = start + lat + tx;
    double delivered = start + tx + lat;
    if (delivered < s.last_delivery) delivered = s.last_delivery;
    s.last_delivery = delivered;

    const StreamId sid = stream;
    schedule(delivered - now_, [this, sid, frame = std::move(frame),
                                payload_len, wire]() {
        Stream& st = streams_[sid];
        if (st.closed) return;
        auto& c = delivered_[static_cast<size_t>(st.role)];
        c.frames += 1;
        c.payload_bytes += payload_len;
        c.wire_bytes += static_cast<uint64_t>(wire);
        if (st.on_frame) st.on_frame(sid, frame);
    });
    return src.egress_free;
}

void SimNetwork::close_stream(StreamId stream, bool failed) {
    Stream& s = streams_.at(stream);
    if (s.closed) return;
    s.closed = true;
    const StreamId sid = stream;
    schedule(0, [this, sid, failed]() {
        for (const auto& h : streams_[sid].on_close) h(sid, failed);
    });
}

void SimNetwork::schedule(double delay, std::function<void()> fn) {
    if (delay < 0) delay = 0;
    events_.push(Event{now_ + delay, event_seq_++, std::move(fn)});
}

void SimNetwork::run() {
    while (!events_.empty()) {
        Event e = events_.top();
        events_.pop();
        now_ = e.time;
        e.fn();
    }
}

void SimNetwork::reset_counters() { delivered_.fill(Counters{}); }

}  // namespace rapidraid
