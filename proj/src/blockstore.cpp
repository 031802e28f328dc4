#include "rapidraid/blockstore.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rapidraid/checksum.hpp"

namespace rapidraid {

namespace {

void put_be32(uint8_t* p, uint32_t v) {
    p[0] = static_cast<uint8_t>(v >> 24);
    p[1] = static_cast<uint8_t>(v >> 16);
    p[2] = static_cast<uint8_t>(v >> 8);
    p[3] = static_cast<uint8_t>(v);
}

void put_be64(uint8_t* p, uint64_t v) {
    put_be32(p, static_cast<uint32_t>(v >> 32));
    put_be32(p + 4, static_cast<uint32_t>(v));
}

uint32_t get_be32(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) |
           (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

uint64_t get_be64(const uint8_t* p) {
    return (static_cast<uint64_t>(get_be32(p)) << 32) | get_be32(p + 4);
}

}  // namespace

std::array<uint8_t, BlockHeader::kSize> BlockHeader::encode(
    uint32_t payload_crc) const {
    std::array<uint8_t, kSize> out{};
    out[0] = 'R';
    out[1] = 'R';
    out[2] = 'B';
    out[3] = 'K';
    out[4] = 0x01;
    out[5] = static_cast<uint8_t>(role);
    out[6] = word_bits;
    out[7] = 0;
    std::copy(object.bytes.begin(), object.bytes.end(), out.begin() + 8);
    put_be32(out.data() + 24, index);
    put_be32(out.data() + 28, reduction_polynomial);
    put_be64(out.data() + 32, payload_length);
    std::copy(code_digest.begin(), code_digest.end(), out.begin() + 40);
    put_be32(out.data() + 56, payload_crc);
    put_be32(out.data() + 60, crc32c(std::span(out.data(), size_t{60})));
    return out;
}

std::pair<BlockHeader, uint32_t> BlockHeader::decode(
    std::span<const uint8_t, kSize> raw) {
    if (raw[0] != 'R' || raw[1] != 'R' || raw[2] != 'B' || raw[3] != 'K')
        throw corruption_error("block header: bad magic");
    if (raw[4] != 0x01)
        throw corruption_error("block header: unsupported version");
    if (crc32c(std::span(raw.data(), size_t{60})) != get_be32(raw.data() + 60))
        throw corruption_error("block header: checksum mismatch");
    BlockHeader h;
    h.role = static_cast<BlockRole>(raw[5]);
    h.word_bits = raw[6];
    std::copy(raw.begin() + 8, raw.begin() + 24, h.object.bytes.begin());
    h.index = get_be32(raw.data() + 24);
    h.reduction_polynomial = get_be32(raw.data() + 28);
    h.payload_length = get_be64(raw.data() + 32);
    std::copy(raw.begin() + 40, raw.begin() + 56, h.code_digest.begin());
    return {h, get_be32(raw.data() + 56)};
}

const char* to_string(ArchivalState s) {
    switch (s) {
        case ArchivalState::replicated: return "replicated";
        case ArchivalState::encoding: return "encoding";
        case ArchivalState::archived: return "archived";
    }
    return "?";
}

ArchivalState archival_state_from_string(const std::string& s) {
    if (s == "replicated") return ArchivalState::replicated;
    if (s == "encoding") return ArchivalState::encoding;
    if (s == "archived") return ArchivalState::archived;
    throw input_error("manifest: unknown state " + s);
}

std::string ObjectManifest::serialize() const {
    std::ostringstream out;
    out << "rapidraid-manifest/1\n";
    out << "object=" << object.to_hex() << "\n";
    out << "n=" << n << "\n";
    out << "k=" << k << "\n";
    out << "block_size=" << block_size << "\n";
    out << "original_length=" << original_length << "\n";
    out << "state=" << to_string(state) << "\n";
    std::string digest_hex(32, '0');
    static const char* digits = "0123456789abcdef";
    for (size_t i = 0; i < 16; ++i) {
        digest_hex[2 * i] = digits[code_digest[i] >> 4];
        digest_hex[2 * i + 1] = digits[code_digest[i] & 0xF];
    }
    out << "code_digest=" << digest_hex << "\n";
    for (size_t i = 0; i < replica1_nodes.size(); ++i)
        out << "replica1." << (i + 1) << "=" << replica1_nodes[i] << "\n";
    for (size_t i = 0; i < replica2_nodes.size(); ++i)
        out << "replica2." << (i + 1) << "=" << replica2_nodes[i] << "\n";
    for (size_t i = 0; i < coded_nodes.size(); ++i)
        out << "coded." << (i + 1) << "=" << coded_nodes[i] << "\n";
    return out.str();
}

ObjectManifest ObjectManifest::parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "rapidraid-manifest/1")
        throw input_error("manifest: missing version header");
    ObjectManifest m;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw input_error("manifest: malformed line " + line);
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "object") {
            m.object = ObjectId::from_hex(val);
        } else if (key == "n") {
            m.n = static_cast<uint32_t>(std::stoul(val));
        } else if (key == "k") {
            m.k = static_cast<uint32_t>(std::stoul(val));
        } else if (key == "block_size") {
            m.block_size = std::stoull(val);
        } else if (key == "original_length") {
            m.original_length = std::stoull(val);
        } else if (key == "state") {
            m.state = archival_state_from_string(val);
        } else if (key == "code_digest") {
            const ObjectId d = ObjectId::from_hex(val);
            m.code_digest = d.bytes;
        } else if (key.rfind("replica1.", 0) == 0) {
            const size_t i = std::stoul(key.substr(9));
            if (m.replica1_nodes.size() < i) m.replica1_nodes.resize(i);
            m.replica1_nodes[i - 1] = val;
        } else if (key.rfind("replica2.", 0) == 0) {
            const size_t i = std::stoul(key.substr(9));
            if (m.replica2_nodes.size() < i) m.replica2_nodes.resize(i);
            m.replica2_nodes[i - 1] = val;
        } else if (key.rfind("coded.", 0) == 0) {
            const size_t i = std::stoul(key.substr(6));
            if (m.coded_nodes.size() < i) m.coded_nodes.resize(i);
            m.coded_nodes[i - 1] = val;
        } else {
            throw input_error("manifest: unknown key " + key);
        }
    }
    return m;
}

void BlockStore::put_block(const std::string& node, const BlockKey& key,
                           const BlockHeader& header,
                           std::span<const uint8_t> payload) {
    auto writer = open_writer(node, key, header);
    writer->append(payload);
    writer->commit();
}

void BlockStore::put_block_shared(const std::string& node, const BlockKey& key,
                                  const BlockHeader& header, Payload payload) {
    put_block(node, key, header,
              payload ? std::span<const uint8_t>(*payload)
                      : std::span<const uint8_t>{});
}

SharedBlock BlockStore::get_block_shared(const std::string& node,
                                         const BlockKey& key) const {
    Block b = get_block(node, key);
    return SharedBlock{b.header, make_payload(std::move(b.payload))};
}

// ---------------------------------------------------------------- FileStore

namespace {

std::string block_file_name(const BlockKey& key) {
    std::string tag;
    if (key.role == BlockRole::source)
        tag = "r" + std::to_string(key.replica);
    else
        tag = "c";
    return key.object.to_hex() + "." + tag + "." + std::to_string(key.index) +
           ".blk";
}

class FileBlockWriter : public BlockWriter {
public:
    FileBlockWriter(std::filesystem::path final_path, const BlockKey& key,
                    BlockHeader header)
        : final_path_(std::move(final_path)),
          tmp_path_(final_path_.string() + ".tmp"),
          key_(key),
          header_(header) {
        std::filesystem::create_directories(final_path_.parent_path());
        out_.open(tmp_path_, std::ios::binary | std::ios::trunc);
        if (!out_) throw std::runtime_error("blockstore: cannot open " +
                                            tmp_path_.string());
        // header written at commit time once the payload crc is known;
        // reserve its slot now so the payload lands at offset 64
        std::array<uint8_t, BlockHeader::kSize> zeros{};
        out_.write(reinterpret_cast<const char*>(zeros.data()), zeros.size());
    }

    ~FileBlockWriter() override {
        if (!done_) abort();
    }

    void append(std::span<const uint8_t> chunk) override {
        if (done_) throw std::runtime_error("blockstore: writer finished");
        crc_ = crc32c_update(crc_, chunk);
        length_ += chunk.size();
        out_.write(reinterpret_cast<const char*>(chunk.data()),
                   static_cast<std::streamsize>(chunk.size()));
        if (!out_) throw std::runtime_error("blockstore: write failed");
    }

    void commit() override {
        if (done_) return;
        header_.payload_length = length_;
        const auto raw = header_.encode(crc32c_finish(crc_));
        out_.seekp(0);
        out_.write(reinterpret_cast<const char*>(raw.data()), raw.size());
        out_.flush();
        if (!out_) throw std::runtime_error("blockstore: header write failed");
        out_.close();
        std::filesystem::rename(tmp_path_, final_path_);
        done_ = true;
    }

    void abort() override {
        if (done_) return;
        out_.close();
        std::error_code ec;
        std::filesystem::remove(tmp_path_, ec);
        done_ = true;
    }

private:
    std::filesystem::path final_path_;
    std::filesystem::path tmp_path_;
    BlockKey key_;
    BlockHeader header_;
    std::ofstream out_;
    uint64_t length_ = 0;
    uint32_t crc_ = crc32c_init();
    bool done_ = false;
};

}  // namespace

FileStore::FileStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
    std::filesystem::create_directories(root_ / "manifests");
}

std::filesystem::path FileStore::block_path(const std::string& node,
                                            const BlockKey& key) const {
    return root_ / node / block_file_name(key);
}

std::unique_ptr<BlockWriter> FileStore::open_writer(const std::string& node,
                                                    const BlockKey& key,
                                                    const BlockHeader& header) {
    return std::make_unique<FileBlockWriter>(block_path(node, key), key, header);
}

Block FileStore::get_block(const std::string& node, const BlockKey& key) const {
    const auto path = block_path(node, key);
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw not_found_error("block not found: " + path.string());
    std::array<uint8_t, BlockHeader::kSize> raw;
    in.read(reinterpret_cast<char*>(raw.data()), raw.size());
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw corruption_error("block truncated: " + path.string());
    auto [header, payload_crc] =
        BlockHeader::decode(std::span<const uint8_t, BlockHeader::kSize>(raw));
    Block block;
    block.header = header;
    block.payload.resize(header.payload_length);
    in.read(reinterpret_cast<char*>(block.payload.data()),
            static_cast<std::streamsize>(block.payload.size()));
    if (in.gcount() != static_cast<std::streamsize>(block.payload.size()))
        throw corruption_error("block truncated: " + path.string());
    if (crc32c(block.payload) != payload_crc)
        throw corruption_error("block payload checksum mismatch: " +
                               path.string());
    return block;
}

bool FileStore::block_exists(const std::string& node, const BlockKey& key) const {
    return std::filesystem::exists(block_path(node, key));
}

void FileStore::delete_block(const std::string& node, const BlockKey& key) {
    std::error_code ec;
    std::filesystem::remove(block_path(node, key), ec);
}

void FileStore::put_manifest(const ObjectManifest& m) {
    const auto path = root_ / "manifests" / (m.object.to_hex() + ".manifest");
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        const std::string text = m.serialize();
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw std::runtime_error("manifest write failed");
    }
    std::filesystem::rename(tmp, path);
}

ObjectManifest FileStore::get_manifest(const ObjectId& object) const {
    const auto path = root_ / "manifests" / (object.to_hex() + ".manifest");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw not_found_error("manifest not found: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return ObjectManifest::parse(buf.str());
}

// ----------------------------------------------------------------- MemStore

namespace {

class MemBlockWriter : public BlockWriter {
public:
    MemBlockWriter(std::function<void(BlockHeader, uint32_t, std::vector<uint8_t>)>
                       on_commit,
                   BlockHeader header, bool discard)
        : on_commit_(std::move(on_commit)), header_(header), discard_(discard) {}

    void append(std::span<const uint8_t> chunk) override {
        length_ += chunk.size();
        if (discard_) return;  // timing sink: no bytes, no checksum
        crc_ = crc32c_update(crc_, chunk);
        payload_.insert(payload_.end(), chunk.begin(), chunk.end());
    }

    void commit() override {
        if (done_) return;
        header_.payload_length = length_;
        on_commit_(header_, crc32c_finish(crc_), std::move(payload_));
        done_ = true;
    }

    void abort() override { done_ = true; }

private:
    std::function<void(BlockHeader, uint32_t, std::vector<uint8_t>)> on_commit_;
    BlockHeader header_;
    bool discard_;
    std::vector<uint8_t> payload_;
    uint64_t length_ = 0;
    uint32_t crc_ = crc32c_init();
    bool done_ = false;
};

}  // namespace

std::unique_ptr<BlockWriter> MemStore::open_writer(const std::string& node,
                                                   const BlockKey& key,
                                                   const BlockHeader& header) {
    auto on_commit = [this, node, key](BlockHeader h, uint32_t crc,
                                       std::vector<uint8_t> payload) {
        std::lock_guard lock(mutex_);
        blocks_[{node, key}] =
            Entry{h, crc, discard_ ? nullptr : make_payload(std::move(payload))};
    };
    return std::make_unique<MemBlockWriter>(on_commit, header, discard_);
}

void MemStore::put_block_shared(const std::string& node, const BlockKey& key,
                                const BlockHeader& header, Payload payload) {
    BlockHeader h = header;
    h.payload_length = payload ? payload->size() : 0;
    const uint32_t crc =
        payload ? crc32c(*payload) : crc32c(std::span<const uint8_t>{});
    std::lock_guard lock(mutex_);
    blocks_[{node, key}] = Entry{h, crc, std::move(payload)};
}

Block MemStore::get_block(const std::string& node, const BlockKey& key) const {
    SharedBlock b = get_block_shared(node, key);
    return Block{b.header, *b.payload};
}

SharedBlock MemStore::get_block_shared(const std::string& node,
                                       const BlockKey& key) const {
    std::lock_guard lock(mutex_);
    auto it = blocks_.find({node, key});
    if (it == blocks_.end())
        throw not_found_error("block not found in memory store");
    if (!it->second.payload)
        throw corruption_error("memory store discarded this payload");
    if (crc32c(*it->second.payload) != it->second.payload_crc)
        throw corruption_error("block payload checksum mismatch");
    return SharedBlock{it->second.header, it->second.payload};
}

bool MemStore::block_exists(const std::string& node, const BlockKey& key) const {
    std::lock_guard lock(mutex_);
    return blocks_.count({node, key}) > 0;
}

void MemStore::delete_block(const std::string& node, const BlockKey& key) {
    std::lock_guard lock(mutex_);
    blocks_.erase({node, key});
}

void MemStore::put_manifest(const ObjectManifest& m) {
    std::lock_guard lock(mutex_);
    manifests_[m.object] = m;
}

ObjectManifest MemStore::get_manifest(const ObjectId& object) const {
    std::lock_guard lock(mutex_);
    auto it = manifests_.find(object);
    if (it == manifests_.end())
        throw not_found_error("manifest not found in memory store");
    return it->second;
}

// --------------------------------------------------------------- transition

ObjectManifest transition(BlockStore& store, const ObjectManifest& manifest,
                          ArchivalState to_state) {
    const ArchivalState from = manifest.state;
    const bool legal = (from == ArchivalState::replicated &&
                        to_state == ArchivalState::encoding) ||
                       (from == ArchivalState::encoding &&
                        to_state == ArchivalState::archived);
    if (!legal)
        throw input_error(std::string("illegal transition ") + to_string(from) +
                          " -> " + to_string(to_state));

    ObjectManifest next = manifest;
    if (to_state == ArchivalState::archived) {
        // verify all n coded blocks (checksummed read) before touching replicas
        for (uint32_t i = 0; i < manifest.n; ++i) {
            const BlockKey key{manifest.object, BlockRole::coded, 0, i};
            const std::string& node = manifest.coded_nodes.at(i);
            if (!store.block_exists(node, key))
                throw std::runtime_error("archive refused: coded block " +
                                         std::to_string(i + 1) + " missing at " +
                                         node);
            store.get_block(node, key);  // throws on checksum mismatch
        }
        for (uint32_t j = 0; j < manifest.k; ++j) {
            const BlockKey key{manifest.object, BlockRole::source, 2, j};
            store.delete_block(manifest.replica2_nodes.at(j), key);
        }
    }
    next.state = to_state;
    store.put_manifest(next);
    return next;
}

}  // namespace rapidraid
