#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rapidraid/transport.hpp"

namespace rapidraid {

class not_found_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class corruption_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BlockRole : uint8_t { source = 0, coded = 1 };

/// Addresses one block within a node's store. Source blocks carry the
/// replica number (1 or 2); coded blocks use replica 0.
struct BlockKey {
    ObjectId object;
    BlockRole role = BlockRole::source;
    uint8_t replica = 0;
    uint32_t index = 0;  // 0-based source symbol or codeword index

    auto operator<=>(const BlockKey&) const = default;
};

/// Fixed 64-byte block header, big-endian integers, CRC32C checksums:
///   0  magic "RRBK"      4  version      5  role         6  word_bits
///   7  reserved          8  object id (16)
///   24 block index (4)   28 reduction polynomial (4)
///   32 payload length (8)
///   40 code digest (16)  56 payload crc32c (4)  60 header crc32c (4)
struct BlockHeader {
    ObjectId object;
    uint32_t index = 0;
    BlockRole role = BlockRole::source;
    uint8_t word_bits = 8;
    uint32_t reduction_polynomial = 0;
    uint64_t payload_length = 0;
    std::array<uint8_t, 16> code_digest{};

    static constexpr size_t kSize = 64;
    std::array<uint8_t, kSize> encode(uint32_t payload_crc) const;
    /// Throws corruption_error on bad magic or header checksum.
    static std::pair<BlockHeader, uint32_t> decode(
        std::span<const uint8_t, kSize> raw);
};

struct Block {
    BlockHeader header;
    std::vector<uint8_t> payload;
};

/// Block whose payload may be shared with the store (no copy).
struct SharedBlock {
    BlockHeader header;
    Payload payload;
};

/// Streaming block persist: append chunks, then commit (checksum + durable
/// rename). Abandoning the writer leaves nothing behind.
class BlockWriter {
public:
    virtual ~BlockWriter() = default;
    virtual void append(std::span<const uint8_t> chunk) = 0;
    virtual void commit() = 0;
    virtual void abort() = 0;
};

enum class ArchivalState { replicated, encoding, archived };

const char* to_string(ArchivalState s);
ArchivalState archival_state_from_string(const std::string& s);

/// Object-level metadata: which node holds which block, plus the archival
/// state machine. Serialized as canonical key=value lines.
struct ObjectManifest {
    ObjectId object;
    uint32_t n = 0;
    uint32_t k = 0;
    uint64_t block_size = 0;
    uint64_t original_length = 0;
    ArchivalState state = ArchivalState::replicated;
    std::array<uint8_t, 16> code_digest{};
    std::vector<std::string> replica1_nodes;  // size k
    std::vector<std::string> replica2_nodes;  // size k
    std::vector<std::string> coded_nodes;     // size n

    std::string serialize() const;
    static ObjectManifest parse(const std::string& text);
};

class BlockStore {
public:
    virtual ~BlockStore() = default;

    virtual void put_block(const std::string& node, const BlockKey& key,
                           const BlockHeader& header,
                           std::span<const uint8_t> payload);
    /// Stores a payload that may be aliased by the store (MemStore keeps the
    /// shared buffer; FileStore writes it out).
    virtual void put_block_shared(const std::string& node, const BlockKey& key,
                                  const BlockHeader& header, Payload payload);
    virtual std::unique_ptr<BlockWriter> open_writer(const std::string& node,
                                                     const BlockKey& key,
                                                     const BlockHeader& header) = 0;
    /// Verifies the payload checksum; throws not_found_error or
    /// corruption_error.
    virtual Block get_block(const std::string& node, const BlockKey& key) const = 0;
    /// Checksummed read without forcing a private copy.
    virtual SharedBlock get_block_shared(const std::string& node,
                                         const BlockKey& key) const;
    virtual bool block_exists(const std::string& node, const BlockKey& key) const = 0;
    virtual void delete_block(const std::string& node, const BlockKey& key) = 0;

    virtual void put_manifest(const ObjectManifest& m) = 0;
    virtual ObjectManifest get_manifest(const ObjectId& object) const = 0;
};

/// One directory per node identity, one file per block; manifests live in
/// a manifests/ directory and are replaced by atomic rename.
class FileStore : public BlockStore {
public:
    explicit FileStore(std::filesystem::path root);

    std::unique_ptr<BlockWriter> open_writer(const std::string& node,
                                             const BlockKey& key,
                                             const BlockHeader& header) override;
    Block get_block(const std::string& node, const BlockKey& key) const override;
    bool block_exists(const std::string& node, const BlockKey& key) const override;
    void delete_block(const std::string& node, const BlockKey& key) override;
    void put_manifest(const ObjectManifest& m) override;
    ObjectManifest get_manifest(const ObjectId& object) const override;

    std::filesystem::path block_path(const std::string& node,
                                     const BlockKey& key) const;
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
};

/// In-memory store for tests and benchmarks. With discard_payloads the
/// store keeps headers and checksums but drops the bytes (benchmark sinks).
class MemStore : public BlockStore {
public:
    explicit MemStore(bool discard_payloads = false)
        : discard_(discard_payloads) {}

    std::unique_ptr<BlockWriter> open_writer(const std::string& node,
                                             const BlockKey& key,
                                             const BlockHeader& header) override;
    void put_block_shared(const std::string& node, const BlockKey& key,
                          const BlockHeader& header, Payload payload) override;
    Block get_block(const std::string& node, const BlockKey& key) const override;
    SharedBlock get_block_shared(const std::string& node,
                                 const BlockKey& key) const override;
    bool block_exists(const std::string& node, const BlockKey& key) const override;
    void delete_block(const std::string& node, const BlockKey& key) override;
    void put_manifest(const ObjectManifest& m) override;
    ObjectManifest get_manifest(const ObjectId& object) const override;

private:
    struct Entry {
        BlockHeader header;
        uint32_t payload_crc = 0;
        Payload payload;  // null when discarded
    };
    bool discard_;
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, BlockKey>, Entry> blocks_;
    std::map<ObjectId, ObjectManifest> manifests_;
};

/// Archival state machine. replicated -> encoding -> archived, in order.
/// The archived step verifies every coded block (checksum read) before
/// deleting the second-replica source blocks, so a failed archive never
/// strands the object without either a full replica or a decodable set.
ObjectManifest transition(BlockStore& store, const ObjectManifest& manifest,
                          ArchivalState to_state);

}  // namespace rapidraid
