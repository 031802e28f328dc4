#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <condition_variable>
#include <mutex>

#include "rapidraid/socket_transport.hpp"
#include "rapidraid/transport.hpp"

using namespace rapidraid;

namespace {

LinkProfile gbit() { return LinkProfile{125'000'000.0, 0.0, 0.0}; }

ChunkFrame frame_of(ObjectId id, StreamRole role, uint16_t stage, uint32_t seq,
                    std::vector<uint8_t> bytes) {
    return ChunkFrame::make(id, role, stage, seq, make_payload(std::move(bytes)));
}

}  // namespace

TEST_CASE("wire format is bit-exact") {
    ObjectId id;
    for (size_t i = 0; i < 16; ++i) id.bytes[i] = static_cast<uint8_t>(i + 1);
    const ChunkFrame f =
        frame_of(id, StreamRole::parity_push, 0x0102, 0x0A0B0C0D, {0xDE, 0xAD});
    const std::vector<uint8_t> wire = encode_frame(f);

    REQUIRE(wire.size() == 32);
    CHECK(wire[0] == 0x52);
    CHECK(wire[1] == 0x52);
    CHECK(wire[2] == 0x01);
    for (size_t i = 0; i < 16; ++i) CHECK(wire[3 + i] == i + 1);
    CHECK(wire[19] == 2);                      // role
    CHECK(wire[20] == 0x01);                   // stage hi
    CHECK(wire[21] == 0x02);                   // stage lo
    CHECK(wire[22] == 0x0A);                   // sequence big-endian
    CHECK(wire[23] == 0x0B);
    CHECK(wire[24] == 0x0C);
    CHECK(wire[25] == 0x0D);
    CHECK(wire[26] == 0);                      // length big-endian
    CHECK(wire[27] == 0);
    CHECK(wire[28] == 0);
    CHECK(wire[29] == 2);
    CHECK(wire[30] == 0xDE);
    CHECK(wire[31] == 0xAD);

    const FrameHeader h = decode_frame_header(
        std::span<const uint8_t, kFrameHeaderSize>(wire.data(), kFrameHeaderSize));
    CHECK(h.object == id);
    CHECK(h.role == StreamRole::parity_push);
    CHECK(h.stage == 0x0102);
    CHECK(h.sequence == 0x0A0B0C0D);
    CHECK(h.payload_length == 2);

    std::vector<uint8_t> bad = wire;
    bad[0] = 0x53;
    CHECK_THROWS(decode_frame_header(
        std::span<const uint8_t, kFrameHeaderSize>(bad.data(), kFrameHeaderSize)));
}

TEST_CASE("simulated transfer times follow the link model") {
    // 1 MB over a 1 MB/s zero-latency link takes 1.0 s (plus header time)
    SimNetwork net(1, LinkProfile{1'000'000.0, 0.0, 0.0});
    const auto a = net.register_node("a");
    const auto b = net.register_node("b");
    const ObjectId id = ObjectId::from_seed(1);
    const auto sid = net.open_stream(a, b, id, StreamRole::source_pull, 1);

    double delivered_at = -1;
    net.set_stream_handler(sid, [&](SimNetwork::StreamId, const ChunkFrame&) {
        delivered_at = net.now();
    });
    net.schedule(0, [&] {
        net.send(sid, frame_of(id, StreamRole::source_pull, 1, 0,
                               std::vector<uint8_t>(1'000'000)));
    });
    net.run();
    const double expect = (1'000'000.0 + kFrameHeaderSize) / 1'000'000.0;
    CHECK(delivered_at == doctest::Approx(expect));
}

TEST_CASE("a 64 MB block over 500 Mb/s + 100 ms arrives near 1.17 s") {
    // 64 MB / 62.5 MB/s + 0.1 s; frame headers add ~30 us
    SimNetwork net(1, LinkProfile{62'500'000.0, 0.1, 0.0});
    const auto a = net.register_node("a");
    const auto b = net.register_node("b");
    const ObjectId id = ObjectId::from_seed(2);
    const auto sid = net.open_stream(a, b, id, StreamRole::forward_x, 1);

    double last = -1;
    net.set_stream_handler(sid, [&](SimNetwork::StreamId, const ChunkFrame&) {
        last = net.now();
    });
    net.schedule(0, [&] {
        const size_t chunk = 1 << 20;
        for (uint32_t seq = 0; seq < 64; ++seq)
            net.send(sid, frame_of(id, StreamRole::forward_x, 1, seq,
                                   std::vector<uint8_t>(chunk)));
    });
    net.run();
    const double expect = 64.0 * 1024 * 1024 / 62'500'000.0 + 0.1;
    CHECK(last == doctest::Approx(expect).epsilon(0.001));
}

TEST_CASE("zero-byte final frame arrives after latency only") {
    SimNetwork net(1, LinkProfile{125'000'000.0, 0.05, 0.0});
    const auto a = net.register_node("a");
    const auto b = net.register_node("b");
    const ObjectId id = ObjectId::from_seed(3);
    const auto sid = net.open_stream(a, b, id, StreamRole::forward_x, 1);
    double at = -1;
    net.set_stream_handler(
        sid, [&](SimNetwork::StreamId, const ChunkFrame&) { at = net.now(); });
    net.schedule(0, [&] {
        net.send(sid, frame_of(id, StreamRole::forward_x, 1, 0, {}));
    });
    net.run();
    CHECK(at == doctest::Approx(0.05).epsilon(0.001));
}

TEST_CASE("per-stream delivery order matches send order") {
    SimNetwork net(9, LinkProfile{1'000'000.0, 0.01, 0.005});
    const auto a = net.register_node("a");
    const auto b = net.register_node("b");
    const ObjectId id = ObjectId::from_seed(4);
    const auto sid = net.open_stream(a, b, id, StreamRole::forward_x, 1);
    std::vector<uint32_t> order;
    net.set_stream_handler(sid, [&](SimNetwork::StreamId, const ChunkFrame& f) {
        order.push_back(f.sequence);
    });
    net.schedule(0, [&] {
        for (uint32_t seq = 0; seq < 50; ++seq)
            net.send(sid, frame_of(id, StreamRole::forward_x, 1, seq,
                                   std::vector<uint8_t>(100)));
    });
    net.run();
    REQUIRE(order.size() == 50);
    for (uint32_t i = 0; i < 50; ++i) CHECK(order[i] == i);
}

TEST_CASE("identical seeds give identical timings; different seeds differ") {
    auto run_once = [](uint64_t seed) {
        SimNetwork net(seed, LinkProfile{1'000'000.0, 0.02, 0.01});
        const auto a = net.register_node("a");
        const auto b = net.register_node("b");
        const ObjectId id = ObjectId::from_seed(5);
        const auto sid = net.open_stream(a, b, id, StreamRole::forward_x, 1);
        double last = 0;
        net.set_stream_handler(
            sid, [&](SimNetwork::StreamId, const ChunkFrame&) { last = net.now(); });
        net.schedule(0, [&] {
            for (uint32_t seq = 0; seq < 20; ++seq)
                net.send(sid, frame_of(id, StreamRole::forward_x, 1, seq,
                                       std::vector<uint8_t>(1000)));
        });
        net.run();
        return last;
    };
    CHECK(run_once(42) == run_once(42));
    CHECK(run_once(42) != run_once(43));
}

TEST_CASE("shaping a node slows its links; takes effect on later streams") {
    const ObjectId id = ObjectId::from_seed(6);
    auto timed = [&](bool shaped, bool unrelated_node) {
        SimNetwork net(1, gbit());
        const auto a = net.register_node("a");
        const auto b = net.register_node("b");
        const auto c = net.register_node("c");
        if (shaped) net.shape(b, LinkProfile{62'500'000.0, 0.1, 0.0});
        if (unrelated_node) net.shape(c, LinkProfile{62'500'000.0, 0.1, 0.0});
        const auto sid = net.open_stream(a, b, id, StreamRole::forward_x, 1);
        double last = 0;
        net.set_stream_handler(
            sid, [&](SimNetwork::StreamId, const ChunkFrame&) { last = net.now(); });
        net.schedule(0, [&] {
            for (uint32_t seq = 0; seq < 16; ++seq)
                net.send(sid, frame_of(id, StreamRole::forward_x, 1, seq,
                                       std::vector<uint8_t>(64 * 1024)));
        });
        net.run();
        return last;
    };
    const double base = timed(false, false);
    const double congested = timed(true, false);
    const double unrelated = timed(false, true);
    CHECK(congested > 2 * base);       // half bandwidth plus latency
    CHECK(unrelated == doctest::Approx(base));  // isolation
}

TEST_CASE("closed stream delivers failure to both registered ends") {
    SimNetwork net(1, gbit());
    const auto a = net.register_node("a");
    const auto b = net.register_node("b");
    const ObjectId id = ObjectId::from_seed(7);
    const auto sid = net.open_stream(a, b, id, StreamRole::forward_x, 1);
    int notified = 0;
    bool failed_flag = false;
    net.add_stream_close_handler(sid, [&](SimNetwork::StreamId, bool failed) {
        ++notified;
        failed_flag = failed;
    });
    net.add_stream_close_handler(sid,
                                 [&](SimNetwork::StreamId, bool) { ++notified; });
    net.schedule(0, [&] { net.close_stream(sid, true); });
    net.run();
    CHECK(notified == 2);
    CHECK(failed_flag);
    CHECK_THROWS(net.send(sid, frame_of(id, StreamRole::forward_x, 1, 0, {})));
}

TEST_CASE("unknown endpoints are rejected") {
    SimNetwork net(1, gbit());
    net.register_node("a");
    CHECK_THROWS_AS(net.lookup("nope"), input_error);
    CHECK_THROWS_AS(net.register_node("a"), input_error);
}

TEST_CASE("delivered byte counters are per role and exact") {
    SimNetwork net(1, gbit());
    const auto a = net.register_node("a");
    const auto b = net.register_node("b");
    const ObjectId id = ObjectId::from_seed(8);
    const auto s1 = net.open_stream(a, b, id, StreamRole::forward_x, 1);
    const auto s2 = net.open_stream(a, b, id, StreamRole::parity_push, 2);
    net.set_stream_handler(s1, [](SimNetwork::StreamId, const ChunkFrame&) {});
    net.set_stream_handler(s2, [](SimNetwork::StreamId, const ChunkFrame&) {});
    net.schedule(0, [&] {
        net.send(s1, frame_of(id, StreamRole::forward_x, 1, 0,
                              std::vector<uint8_t>(1000)));
        net.send(s1, frame_of(id, StreamRole::forward_x, 1, 1,
                              std::vector<uint8_t>(24)));
        net.send(s2, frame_of(id, StreamRole::parity_push, 2, 0,
                              std::vector<uint8_t>(77)));
    });
    net.run();
    CHECK(net.delivered(StreamRole::forward_x).payload_bytes == 1024);
    CHECK(net.delivered(StreamRole::forward_x).frames == 2);
    CHECK(net.delivered(StreamRole::forward_x).wire_bytes ==
          1024 + 2 * kFrameHeaderSize);
    CHECK(net.delivered(StreamRole::parity_push).payload_bytes == 77);
    CHECK(net.delivered(StreamRole::source_pull).frames == 0);
}

TEST_CASE("socket endpoint delivers byte-identical frames") {
    SocketEndpoint server(0);
    std::mutex mu;
    std::condition_variable cv;
    std::vector<std::vector<uint8_t>> received;

    server.set_frame_handler([&](const ChunkFrame& f) {
        std::lock_guard lock(mu);
        received.push_back(encode_frame(f));
        cv.notify_all();
    });

    const ObjectId id = ObjectId::from_seed(9);
    std::vector<std::vector<uint8_t>> sent;
    {
        auto conn = SocketEndpoint::connect("127.0.0.1", server.port());
        for (uint32_t seq = 0; seq < 5; ++seq) {
            std::vector<uint8_t> payload(seq * 13 + 1);
            for (size_t i = 0; i < payload.size(); ++i)
                payload[i] = static_cast<uint8_t>(seq + i);
            const ChunkFrame f = frame_of(id, StreamRole::forward_x,
                                          3, seq, payload);
            sent.push_back(encode_frame(f));
            conn->send(f);
        }
        std::unique_lock lock(mu);
        cv.wait_for(lock, std::chrono::seconds(5),
                    [&] { return received.size() == 5; });
    }
    server.shutdown();
    REQUIRE(received.size() == 5);
    CHECK(received == sent);
}

TEST_CASE("object id hex round-trip") {
    const ObjectId id = ObjectId::from_seed(123, 456);
    CHECK(ObjectId::from_hex(id.to_hex()) == id);
    CHECK(ObjectId::from_seed(123, 456) == id);
    CHECK(ObjectId::from_seed(123, 457) != id);
    CHECK_THROWS_AS(ObjectId::from_hex("zz"), input_error);
}

TEST_CASE("link profile validation") {
    CHECK_THROWS_AS(LinkProfile({0, 0, 0}).validate(), input_error);
    CHECK_THROWS_AS(LinkProfile({1, 0.01, 0.02}).validate(), input_error);
    CHECK_NOTHROW(LinkProfile({1, 0.1, 0.05}).validate());
    CHECK_NOTHROW(LinkProfile({1, 0, 0}).validate());
}
