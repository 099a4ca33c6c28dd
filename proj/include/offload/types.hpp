#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace offload {

// Normalized 5-component state vector fed to the networks:
// [ue availability, mec availability, throughput, compute size, deadline],
// each scaled into [0, 1].
using StateVec = std::array<float, 5>;

// The two supported agent families. Wire token and byte value are fixed.
enum class ModelKind : uint8_t { ac = 0, dqn = 1 };

inline const char* kind_token(ModelKind k) { return k == ModelKind::ac ? "ac" : "dqn"; }

inline std::optional<ModelKind> kind_from_token(std::string_view s) {
    if (s == "ac") return ModelKind::ac;
    if (s == "dqn") return ModelKind::dqn;
    return std::nullopt;
}

// One transition, as produced by a device and consumed by a trainer
// (in-process or on the server side of the experience stream).
struct Experience {
    uint32_t device_id = 0;
    ModelKind kind = ModelKind::ac;
    uint64_t sequence = 0;
    StateVec state{};
    uint8_t action = 0;  // 0 local, 1 MEC, 2 cloud
    float reward = 0.0f;
    StateVec next_state{};
    bool done = false;

    friend bool operator==(const Experience&, const Experience&) = default;
};

// A flattened weight vector with its provenance. For AC models the layout
// is the actor's parameters followed by the critic's, each in canonical
// flatten order (layer by layer, W row-major then bias).
struct ModelParameters {
    ModelKind kind = ModelKind::ac;
    uint64_t version = 0;
    std::vector<float> weights;
};

}  // namespace offload
