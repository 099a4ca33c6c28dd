#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "offload/types.hpp"

namespace offload::wire {

// Frame layout (all integers little-endian):
//   magic 0x45 0x4F | version u8 | msg_type u8 | topic_len u16 | topic |
//   payload_len u32 | payload
// Header is 10 bytes; a frame is exactly 10 + topic_len + payload_len.
inline constexpr uint8_t kMagic0 = 0x45;
inline constexpr uint8_t kMagic1 = 0x4F;
inline constexpr uint8_t kProtocolVersion = 1;
inline constexpr size_t kHeaderBytes = 10;
inline constexpr size_t kExperiencePayloadBytes = 59;
inline constexpr size_t kDefaultChunkBytes = 64 * 1024;

enum class MsgType : uint8_t {
    experience = 1,
    weights = 2,
    model_chunk = 3,
    chunk_ack = 4,
};

enum class WireError {
    truncated,       // fewer bytes than the declared layout requires
    bad_magic,
    bad_version,     // frame version or topic version suffix unknown
    bad_msg_type,
    bad_topic,       // topic string does not match the grammar
    bad_model_kind,
    bad_action,
    bad_flag,        // boolean byte not 0/1
    size_mismatch,   // buffer length disagrees with the declared lengths
    count_mismatch,  // weight_count disagrees with the payload size
    chunk_bounds,    // chunk_index >= chunk_total, or chunk_total == 0
};

const char* to_string(WireError e);

// Decode never throws: it carries either the value or a WireError.
template <typename T>
class Expected {
public:
    Expected(T v) : value_(std::move(v)) {}
    Expected(WireError e) : error_(e) {}

    bool ok() const { return value_.has_value(); }
    explicit operator bool() const { return ok(); }
    T& operator*() { return *value_; }
    const T& operator*() const { return *value_; }
    T* operator->() { return &*value_; }
    const T* operator->() const { return &*value_; }
    WireError error() const { return error_; }

private:
    std::optional<T> value_;
    WireError error_ = WireError::truncated;
};

// --- Topics ------------------------------------------------------------

enum class Channel : uint8_t { experience, weights, model_upload };

// Address grammar (version suffix isolates incompatible deployments):
//   client/{D}/experience/{M}/v1   device -> server experience stream
//   server/{D}/weights/{M}/v1      server -> device weight broadcast
//   client/{D}/upload/{M}/v1       device -> server initial model upload
struct TopicAddress {
    Channel channel = Channel::experience;
    uint32_t device_id = 0;
    ModelKind kind = ModelKind::ac;

    bool server_to_client() const { return channel == Channel::weights; }
    friend bool operator==(const TopicAddress&, const TopicAddress&) = default;
};

std::string render_topic(const TopicAddress& t);
Expected<TopicAddress> parse_topic(const std::string& s);

// --- Message bodies ----------------------------------------------------

struct WeightsPayload {
    uint32_t device_id = 0;
    ModelKind kind = ModelKind::ac;
    uint64_t model_version = 0;
    std::vector<float> weights;

    friend bool operator==(const WeightsPayload&, const WeightsPayload&) = default;
};

struct ModelChunkPayload {
    uint32_t device_id = 0;
    ModelKind kind = ModelKind::ac;
    uint64_t upload_id = 0;
    uint32_t chunk_index = 0;
    uint32_t chunk_total = 1;
    std::vector<uint8_t> bytes;

    friend bool operator==(const ModelChunkPayload&, const ModelChunkPayload&) = default;
};

enum class AckStatus : uint8_t { ok = 0, incomplete = 1, integrity_error = 2, expired = 3 };

struct ChunkAckPayload {
    uint32_t device_id = 0;
    ModelKind kind = ModelKind::ac;
    uint64_t upload_id = 0;
    AckStatus status = AckStatus::ok;

    friend bool operator==(const ChunkAckPayload&, const ChunkAckPayload&) = default;
};

// --- Frame codec ---------------------------------------------------------

struct Frame {
    MsgType msg_type = MsgType::experience;
    std::string topic;
    std::vector<uint8_t> payload;

    friend bool operator==(const Frame&, const Frame&) = default;
};

// Throws std::invalid_argument on structurally impossible input
// (topic > 64 KiB). Decoding is total and reports errors as values.
std::vector<uint8_t> encode_frame(const Frame& f);
Expected<Frame> decode_frame(std::span<const uint8_t> bytes);

// Encoded size of a frame without encoding it.
inline size_t frame_wire_size(const Frame& f) {
    return kHeaderBytes + f.topic.size() + f.payload.size();
}

std::vector<uint8_t> encode_experience(const Experience& e);
Expected<Experience> decode_experience(std::span<const uint8_t> bytes);

std::vector<uint8_t> encode_weights(const WeightsPayload& w);
Expected<WeightsPayload> decode_weights(std::span<const uint8_t> bytes);

std::vector<uint8_t> encode_model_chunk(const ModelChunkPayload& c);
Expected<ModelChunkPayload> decode_model_chunk(std::span<const uint8_t> bytes);

std::vector<uint8_t> encode_chunk_ack(const ChunkAckPayload& a);
Expected<ChunkAckPayload> decode_chunk_ack(std::span<const uint8_t> bytes);

using Payload = std::variant<Experience, WeightsPayload, ModelChunkPayload, ChunkAckPayload>;
Expected<Payload> decode_payload(MsgType t, std::span<const uint8_t> bytes);

// --- Model chunking ------------------------------------------------------

// Splits a blob into chunk_total pieces of chunk_size bytes (last one
// smaller); an empty blob still yields one empty chunk so the upload is
// observable. Throws std::invalid_argument if chunk_size == 0.
std::vector<ModelChunkPayload> chunk_model(uint32_t device_id, ModelKind kind,
                                           uint64_t upload_id,
                                           std::span<const uint8_t> blob,
                                           size_t chunk_size = kDefaultChunkBytes);

enum class AssemblyStatus { incomplete, complete, conflict };

// Order-independent reassembly of one upload. Duplicates with identical
// bytes are idempotent; a conflicting duplicate, a disagreeing
// chunk_total, or inconsistent chunk sizes poison the assembly
// permanently (conflict).
class ChunkAssembler {
public:
    AssemblyStatus add(const ModelChunkPayload& c);
    AssemblyStatus status() const;
    size_t received() const { return chunks_.size(); }
    uint32_t total() const { return total_; }

    // The original blob, only once status() == complete.
    std::optional<std::vector<uint8_t>> assemble() const;

private:
    std::map<uint32_t, std::vector<uint8_t>> chunks_;
    uint32_t total_ = 0;
    uint32_t device_id_ = 0;
    uint64_t upload_id_ = 0;
    ModelKind kind_ = ModelKind::ac;
    bool seeded_ = false;
    bool conflict_ = false;
};

// One-shot convenience over ChunkAssembler; nullopt unless the set is
// complete and consistent.
std::optional<std::vector<uint8_t>> assemble_chunks(const std::vector<ModelChunkPayload>& chunks);

// Serialized model blob carried by the upload path: a WeightsPayload
// encoding (device/kind/version/count/weights).
std::vector<uint8_t> model_to_blob(const WeightsPayload& w);
Expected<WeightsPayload> blob_to_model(std::span<const uint8_t> blob);

// --- Stream parsing ------------------------------------------------------

// Incremental parser for a byte stream of concatenated frames (the
// socket transport). A malformed header is sticky: parsing stops and
// failed()/error() report it.
class FrameStreamParser {
public:
    // Appends bytes and returns every frame completed by them.
    std::vector<Frame> feed(std::span<const uint8_t> bytes);
    bool failed() const { return failed_; }
    WireError error() const { return error_; }
    size_t buffered() const { return buf_.size(); }

private:
    std::vector<uint8_t> buf_;
    bool failed_ = false;
    WireError error_ = WireError::truncated;
};

}  // namespace offload::wire
