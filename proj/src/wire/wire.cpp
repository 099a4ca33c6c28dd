#include "offload/wire/wire.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <stdexcept>

namespace offload::wire {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xFF));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<uint8_t>& out, float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    put_u32(out, bits);
}

// Bounded little-endian reads; any overrun latches ok=false and yields 0.
struct Reader {
    std::span<const uint8_t> buf;
    size_t pos = 0;
    bool ok = true;

    uint8_t u8() {
        if (pos + 1 > buf.size()) {
            ok = false;
            return 0;
        }
        return buf[pos++];
    }
    uint16_t u16() {
        uint16_t lo = u8(), hi = u8();
        return static_cast<uint16_t>(lo | (hi << 8));
    }
    uint32_t u32() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(u8()) << (8 * i);
        return v;
    }
    uint64_t u64() {
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(u8()) << (8 * i);
        return v;
    }
    float f32() {
        uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, sizeof f);
        return f;
    }
    size_t remaining() const { return buf.size() - pos; }
};

bool valid_kind_byte(uint8_t b) { return b <= 1; }

}  // namespace

const char* to_string(WireError e) {
    switch (e) {
        case WireError::truncated: return "truncated";
        case WireError::bad_magic: return "bad magic";
        case WireError::bad_version: return "unknown version";
        case WireError::bad_msg_type: return "unknown message type";
        case WireError::bad_topic: return "malformed topic";
        case WireError::bad_model_kind: return "unknown model kind";
        case WireError::bad_action: return "invalid action";
        case WireError::bad_flag: return "invalid flag byte";
        case WireError::size_mismatch: return "size mismatch";
        case WireError::count_mismatch: return "weight count mismatch";
        case WireError::chunk_bounds: return "chunk index out of bounds";
    }
    return "unknown error";
}

// --- Topics ------------------------------------------------------------

std::string render_topic(const TopicAddress& t) {
    const char* side = t.server_to_client() ? "server" : "client";
    const char* channel = t.channel == Channel::experience ? "experience"
                          : t.channel == Channel::weights  ? "weights"
                                                           : "upload";
    return std::string(side) + "/" + std::to_string(t.device_id) + "/" + channel + "/" +
           kind_token(t.kind) + "/v1";
}

Expected<TopicAddress> parse_topic(const std::string& s) {
    std::vector<std::string_view> parts;
    std::string_view rest = s;
    while (true) {
        size_t slash = rest.find('/');
        if (slash == std::string_view::npos) {
            parts.push_back(rest);
            break;
        }
        parts.push_back(rest.substr(0, slash));
        rest.remove_prefix(slash + 1);
    }
    if (parts.size() != 5) return WireError::bad_topic;

    TopicAddress t;
    if (parts[2] == "experience")
        t.channel = Channel::experience;
    else if (parts[2] == "weights")
        t.channel = Channel::weights;
    else if (parts[2] == "upload")
        t.channel = Channel::model_upload;
    else
        return WireError::bad_topic;

    const std::string_view side = t.server_to_client() ? "server" : "client";
    if (parts[0] != side) return WireError::bad_topic;

    if (parts[1].empty() || parts[1].size() > 10) return WireError::bad_topic;
    uint64_t id = 0;
    auto [p, ec] = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), id);
    if (ec != std::errc() || p != parts[1].data() + parts[1].size() || id > 0xFFFFFFFFull)
        return WireError::bad_topic;
    t.device_id = static_cast<uint32_t>(id);

    auto kind = kind_from_token(parts[3]);
    if (!kind) return WireError::bad_model_kind;
    t.kind = *kind;

    if (parts[4] != "v1")
        return parts[4].starts_with('v') ? WireError::bad_version : WireError::bad_topic;
    return t;
}

// --- Frame codec ---------------------------------------------------------

std::vector<uint8_t> encode_frame(const Frame& f) {
    if (f.topic.size() > 0xFFFF)
        throw std::invalid_argument("wire: topic longer than 64 KiB");
    if (f.payload.size() > 0xFFFFFFFFull)
        throw std::invalid_argument("wire: payload longer than 4 GiB");
    const uint8_t type = static_cast<uint8_t>(f.msg_type);
    if (type < 1 || type > 4) throw std::invalid_argument("wire: unknown msg_type");

    std::vector<uint8_t> out;
    out.reserve(kHeaderBytes + f.topic.size() + f.payload.size());
    out.push_back(kMagic0);
    out.push_back(kMagic1);
    out.push_back(kProtocolVersion);
    out.push_back(type);
    put_u16(out, static_cast<uint16_t>(f.topic.size()));
    out.insert(out.end(), f.topic.begin(), f.topic.end());
    put_u32(out, static_cast<uint32_t>(f.payload.size()));
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    return out;
}

Expected<Frame> decode_frame(std::span<const uint8_t> bytes) {
    Reader r{bytes};
    const uint8_t m0 = r.u8(), m1 = r.u8();
    if (!r.ok) return WireError::truncated;
    if (m0 != kMagic0 || m1 != kMagic1) return WireError::bad_magic;
    const uint8_t version = r.u8();
    if (!r.ok) return WireError::truncated;
    if (version != kProtocolVersion) return WireError::bad_version;
    const uint8_t type = r.u8();
    if (!r.ok) return WireError::truncated;
    if (type < 1 || type > 4) return WireError::bad_msg_type;

    const uint16_t topic_len = r.u16();
    if (!r.ok) return WireError::truncated;
    if (r.remaining() < topic_len) return WireError::truncated;
    std::string topic(reinterpret_cast<const char*>(bytes.data() + r.pos), topic_len);
    r.pos += topic_len;

    const uint32_t payload_len = r.u32();
    if (!r.ok || r.remaining() < payload_len) return WireError::truncated;
    if (r.remaining() > payload_len) return WireError::size_mismatch;

    Frame f;
    f.msg_type = static_cast<MsgType>(type);
    f.topic = std::move(topic);
    f.payload.assign(bytes.begin() + r.pos, bytes.begin() + r.pos + payload_len);
    return f;
}

std::vector<uint8_t> encode_experience(const Experience& e) {
    if (e.action > 2) throw std::invalid_argument("wire: experience action out of range");
    std::vector<uint8_t> out;
    out.reserve(kExperiencePayloadBytes);
    put_u32(out, e.device_id);
    out.push_back(static_cast<uint8_t>(e.kind));
    put_u64(out, e.sequence);
    for (float v : e.state) put_f32(out, v);
    out.push_back(e.action);
    put_f32(out, e.reward);
    for (float v : e.next_state) put_f32(out, v);
    out.push_back(e.done ? 1 : 0);
    return out;
}

Expected<Experience> decode_experience(std::span<const uint8_t> bytes) {
    if (bytes.size() < kExperiencePayloadBytes) return WireError::truncated;
    if (bytes.size() > kExperiencePayloadBytes) return WireError::size_mismatch;
    Reader r{bytes};
    Experience e;
    e.device_id = r.u32();
    const uint8_t kind = r.u8();
    if (!valid_kind_byte(kind)) return WireError::bad_model_kind;
    e.kind = static_cast<ModelKind>(kind);
    e.sequence = r.u64();
    for (float& v : e.state) v = r.f32();
    e.action = r.u8();
    if (e.action > 2) return WireError::bad_action;
    e.reward = r.f32();
    for (float& v : e.next_state) v = r.f32();
    const uint8_t done = r.u8();
    if (done > 1) return WireError::bad_flag;
    e.done = done == 1;
    return e;
}

std::vector<uint8_t> encode_weights(const WeightsPayload& w) {
    if (w.weights.size() > 0xFFFFFFFFull)
        throw std::invalid_argument("wire: weight vector too long");
    std::vector<uint8_t> out;
    out.reserve(17 + 4 * w.weights.size());
    put_u32(out, w.device_id);
    out.push_back(static_cast<uint8_t>(w.kind));
    put_u64(out, w.model_version);
    put_u32(out, static_cast<uint32_t>(w.weights.size()));
    for (float v : w.weights) put_f32(out, v);
    return out;
}

Expected<WeightsPayload> decode_weights(std::span<const uint8_t> bytes) {
    constexpr size_t header = 4 + 1 + 8 + 4;
    if (bytes.size() < header) return WireError::truncated;
    Reader r{bytes};
    WeightsPayload w;
    w.device_id = r.u32();
    const uint8_t kind = r.u8();
    if (!valid_kind_byte(kind)) return WireError::bad_model_kind;
    w.kind = static_cast<ModelKind>(kind);
    w.model_version = r.u64();
    const uint32_t count = r.u32();
    // Verify the bytes are really there before sizing the vector.
    if (r.remaining() / 4 < count) return WireError::count_mismatch;
    if (r.remaining() != static_cast<size_t>(count) * 4) return WireError::size_mismatch;
    w.weights.resize(count);
    for (float& v : w.weights) v = r.f32();
    return w;
}

std::vector<uint8_t> encode_model_chunk(const ModelChunkPayload& c) {
    if (c.chunk_total == 0 || c.chunk_index >= c.chunk_total)
        throw std::invalid_argument("wire: chunk index out of bounds");
    std::vector<uint8_t> out;
    out.reserve(21 + c.bytes.size());
    put_u32(out, c.device_id);
    out.push_back(static_cast<uint8_t>(c.kind));
    put_u64(out, c.upload_id);
    put_u32(out, c.chunk_index);
    put_u32(out, c.chunk_total);
    out.insert(out.end(), c.bytes.begin(), c.bytes.end());
    return out;
}

Expected<ModelChunkPayload> decode_model_chunk(std::span<const uint8_t> bytes) {
    constexpr size_t header = 4 + 1 + 8 + 4 + 4;
    if (bytes.size() < header) return WireError::truncated;
    Reader r{bytes};
    ModelChunkPayload c;
    c.device_id = r.u32();
    const uint8_t kind = r.u8();
    if (!valid_kind_byte(kind)) return WireError::bad_model_kind;
    c.kind = static_cast<ModelKind>(kind);
    c.upload_id = r.u64();
    c.chunk_index = r.u32();
    c.chunk_total = r.u32();
    if (c.chunk_total == 0 || c.chunk_index >= c.chunk_total) return WireError::chunk_bounds;
    c.bytes.assign(bytes.begin() + r.pos, bytes.end());
    return c;
}

std::vector<uint8_t> encode_chunk_ack(const ChunkAckPayload& a) {
    std::vector<uint8_t> out;
    out.reserve(14);
    put_u32(out, a.device_id);
    out.push_back(static_cast<uint8_t>(a.kind));
    put_u64(out, a.upload_id);
    out.push_back(static_cast<uint8_t>(a.status));
    return out;
}

Expected<ChunkAckPayload> decode_chunk_ack(std::span<const uint8_t> bytes) {
    constexpr size_t size = 4 + 1 + 8 + 1;
    if (bytes.size() < size) return WireError::truncated;
    if (bytes.size() > size) return WireError::size_mismatch;
    Reader r{bytes};
    ChunkAckPayload a;
    a.device_id = r.u32();
    const uint8_t kind = r.u8();
    if (!valid_kind_byte(kind)) return WireError::bad_model_kind;
    a.kind = static_cast<ModelKind>(kind);
    a.upload_id = r.u64();
    const uint8_t status = r.u8();
    if (status > static_cast<uint8_t>(AckStatus::expired)) return WireError::bad_flag;
    a.status = static_cast<AckStatus>(status);
    return a;
}

Expected<Payload> decode_payload(MsgType t, std::span<const uint8_t> bytes) {
    switch (t) {
        case MsgType::experience: {
            auto e = decode_experience(bytes);
            if (!e) return e.error();
            return Payload(std::move(*e));
        }
        case MsgType::weights: {
            auto w = decode_weights(bytes);
            if (!w) return w.error();
            return Payload(std::move(*w));
        }
        case MsgType::model_chunk: {
            auto c = decode_model_chunk(bytes);
            if (!c) return c.error();
            return Payload(std::move(*c));
        }
        case MsgType::chunk_ack: {
            auto a = decode_chunk_ack(bytes);
            if (!a) return a.error();
            return Payload(std::move(*a));
        }
    }
    return WireError::bad_msg_type;
}

// --- Model chunking ------------------------------------------------------

std::vector<ModelChunkPayload> chunk_model(uint32_t device_id, ModelKind kind,
                                           uint64_t upload_id,
                                           std::span<const uint8_t> blob,
                                           size_t chunk_size) {
    if (chunk_size == 0) throw std::invalid_argument("wire: chunk_size must be positive");
    const size_t total = blob.empty() ? 1 : (blob.size() + chunk_size - 1) / chunk_size;
    if (total > 0xFFFFFFFFull) throw std::invalid_argument("wire: too many chunks");

    std::vector<ModelChunkPayload> chunks;
    chunks.reserve(total);
    for (size_t i = 0; i < total; ++i) {
        ModelChunkPayload c;
        c.device_id = device_id;
        c.kind = kind;
        c.upload_id = upload_id;
        c.chunk_index = static_cast<uint32_t>(i);
        c.chunk_total = static_cast<uint32_t>(total);
        const size_t begin = i * chunk_size;
        const size_t end = std::min(blob.size(), begin + chunk_size);
        c.bytes.assign(blob.begin() + begin, blob.begin() + end);
        chunks.push_back(std::move(c));
    }
    return chunks;
}

AssemblyStatus ChunkAssembler::add(const ModelChunkPayload& c) {
    if (conflict_) return AssemblyStatus::conflict;
    if (c.chunk_total == 0 || c.chunk_index >= c.chunk_total) {
        conflict_ = true;
        return AssemblyStatus::conflict;
    }
    if (!seeded_) {
        seeded_ = true;
        total_ = c.chunk_total;
        device_id_ = c.device_id;
        upload_id_ = c.upload_id;
        kind_ = c.kind;
    } else if (c.chunk_total != total_ || c.device_id != device_id_ ||
               c.upload_id != upload_id_ || c.kind != kind_) {
        conflict_ = true;
        return AssemblyStatus::conflict;
    }

    // Non-last chunks must all be the same non-zero size; the last chunk
    // may only be smaller (empty only for a one-chunk empty blob).
    const bool is_last = c.chunk_index + 1 == total_;
    if (c.bytes.empty() && !(is_last && total_ == 1)) {
        conflict_ = true;
        return AssemblyStatus::conflict;
    }

    auto it = chunks_.find(c.chunk_index);
    if (it != chunks_.end()) {
        if (it->second != c.bytes) conflict_ = true;  // same index, different bytes
        return status();
    }

    for (const auto& [idx, bytes] : chunks_) {
        const bool other_last = idx + 1 == total_;
        if (!is_last && !other_last && bytes.size() != c.bytes.size()) conflict_ = true;
        if (is_last && !other_last && c.bytes.size() > bytes.size()) conflict_ = true;
        if (!is_last && other_last && bytes.size() > c.bytes.size()) conflict_ = true;
        if (conflict_) return AssemblyStatus::conflict;
    }

    chunks_.emplace(c.chunk_index, c.bytes);
    return status();
}

AssemblyStatus ChunkAssembler::status() const {
    if (conflict_) return AssemblyStatus::conflict;
    if (seeded_ && chunks_.size() == total_) return AssemblyStatus::complete;
    return AssemblyStatus::incomplete;
}

std::optional<std::vector<uint8_t>> ChunkAssembler::assemble() const {
    if (status() != AssemblyStatus::complete) return std::nullopt;
    std::vector<uint8_t> out;
    for (const auto& [idx, bytes] : chunks_) out.insert(out.end(), bytes.begin(), bytes.end());
    return out;
}

std::optional<std::vector<uint8_t>> assemble_chunks(const std::vector<ModelChunkPayload>& chunks) {
    ChunkAssembler asmb;
    for (const auto& c : chunks) asmb.add(c);
    return asmb.assemble();
}

std::vector<uint8_t> model_to_blob(const WeightsPayload& w) { return encode_weights(w); }

Expected<WeightsPayload> blob_to_model(std::span<const uint8_t> blob) {
    return decode_weights(blob);
}

// --- Stream parsing ------------------------------------------------------

std::vector<Frame> FrameStreamParser::feed(std::span<const uint8_t> bytes) {
    std::vector<Frame> out;
    if (failed_) return out;
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());

    size_t pos = 0;
    while (buf_.size() - pos >= kHeaderBytes) {
        const uint8_t* h = buf_.data() + pos;
        if (h[0] != kMagic0 || h[1] != kMagic1) {
            failed_ = true;
            error_ = WireError::bad_magic;
            break;
        }
        if (h[2] != kProtocolVersion) {
            failed_ = true;
            error_ = WireError::bad_version;
            break;
        }
        if (h[3] < 1 || h[3] > 4) {
            failed_ = true;
            error_ = WireError::bad_msg_type;
            break;
        }
        const uint16_t topic_len = static_cast<uint16_t>(h[4] | (h[5] << 8));
        if (buf_.size() - pos < kHeaderBytes + topic_len) break;
        const uint8_t* pl = h + 6 + topic_len;
        const uint32_t payload_len = static_cast<uint32_t>(pl[0]) |
                                     (static_cast<uint32_t>(pl[1]) << 8) |
                                     (static_cast<uint32_t>(pl[2]) << 16) |
                                     (static_cast<uint32_t>(pl[3]) << 24);
        const size_t need = kHeaderBytes + topic_len + payload_len;
        if (buf_.size() - pos < need) break;
        auto f = decode_frame(std::span<const uint8_t>(buf_.data() + pos, need));
        if (!f) {
            failed_ = true;
            error_ = f.error();
            break;
        }
        out.push_back(std::move(*f));
        pos += need;
    }
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<ptrdiff_t>(pos));
    return out;
}

}  // namespace offload::wire
