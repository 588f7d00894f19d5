#pragma once

#include <fstream>
#include <string>

#include "mix2/binio.hpp"
#include "mix2/errors.hpp"
#include "mix2/nn.hpp"

namespace mix2 {

// Parameter checkpoint: magic, version, then a tensor manifest with
// little-endian f32 payloads.
inline constexpr const char* kCheckpointMagic = "MIX2CKPT";
inline constexpr std::uint8_t kCheckpointVersion = 1;

inline void save_checkpoint(TappedNetwork& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("save_checkpoint: cannot open " + path);
    ParameterStore store = net.parameters();
    binio::write_bytes(os, kCheckpointMagic, 8);
    binio::write_u8(os, kCheckpointVersion);
    binio::write_u32(os, static_cast<std::uint32_t>(store.entries().size()));
    for (const auto& e : store.entries()) {
        binio::write_u16(os, static_cast<std::uint16_t>(e.name.size()));
        binio::write_bytes(os, e.name.data(), e.name.size());
        binio::write_u8(os, static_cast<std::uint8_t>(e.shape.size()));
        for (std::size_t d : e.shape) binio::write_u32(os, static_cast<std::uint32_t>(d));
        for (double v : *e.value) binio::write_f32(os, static_cast<float>(v));
    }
    if (!os) throw DataError("save_checkpoint: write failed for " + path);
}

/// Loads values into an already-constructed network; the manifest must match
/// the network's parameter names and shapes exactly.
inline void load_checkpoint(TappedNetwork& net, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("load_checkpoint: cannot open " + path);
    binio::expect_magic(is, kCheckpointMagic, "checkpoint");
    const std::uint8_t version = binio::read_u8(is, "checkpoint version");
    if (version != kCheckpointVersion)
        throw DataError("load_checkpoint: unsupported version " + std::to_string(version));
    ParameterStore store = net.parameters();
    const std::uint32_t count = binio::read_u32(is, "tensor count");
    if (count != store.entries().size())
        throw ShapeError("load_checkpoint: file has " + std::to_string(count) +
                         " tensors, network has " + std::to_string(store.entries().size()));
    for (auto& e : store.entries()) {
        const std::uint16_t name_len = binio::read_u16(is, "tensor name length");
        std::string name(name_len, '\0');
        binio::read_bytes(is, name.data(), name_len, "tensor name");
        if (name != e.name)
            throw ShapeError("load_checkpoint: tensor " + name + " does not match network " +
                             e.name);
        const std::uint8_t ndim = binio::read_u8(is, "tensor rank");
        std::vector<std::size_t> shape(ndim);
        for (auto& d : shape) d = binio::read_u32(is, "tensor dim");
        if (shape != e.shape) {
            auto fmt = [](const std::vector<std::size_t>& s) {
                std::string out = "(";
                for (std::size_t i = 0; i < s.size(); ++i)
                    out += (i ? ", " : "") + std::to_string(s[i]);
                return out + ")";
            };
            throw ShapeError("load_checkpoint: " + name + " has shape " + fmt(shape) +
                             ", network expects " + fmt(e.shape));
        }
        for (double& v : *e.value) v = static_cast<double>(binio::read_f32(is, name));
    }
}

}  // namespace mix2
