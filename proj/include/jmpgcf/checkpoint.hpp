#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "error.hpp"
#include "layers.hpp"
#include "model.hpp"

namespace jmpgcf {

inline constexpr std::string_view kCheckpointMagic = "JMPGCF1";

struct CheckpointMeta {
    SelectedLayers layers;
    int phase = 0;
    int epoch = 0;

    friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
    ModelParameters params;
    CheckpointMeta meta;
};

// Layout: one text header line
//   JMPGCF1 m n embed_dim K c l_odd l_even phase epoch
// followed by K+1 tables of little-endian IEEE-754 doubles, row-major.

inline void write_checkpoint(std::ostream& out, const ModelParameters& params,
                             const CheckpointMeta& meta) {
    char unit[64];
    std::snprintf(unit, sizeof unit, "%.17g", params.popularity.unit);
    out << kCheckpointMagic << ' ' << params.num_users << ' ' << params.num_items << ' '
        << params.embed_dim << ' ' << params.max_granularity() << ' ' << unit << ' '
        << meta.layers.odd << ' ' << meta.layers.even << ' ' << meta.phase << ' ' << meta.epoch
        << '\n';
    std::array<char, 8> bytes{};
    for (const auto& table : params.base) {
        for (double v : table.values()) {
            auto bits = std::bit_cast<std::uint64_t>(v);
            for (auto& b : bytes) {
                b = static_cast<char>(bits & 0xffu);
                bits >>= 8;
            }
            out.write(bytes.data(), bytes.size());
        }
    }
    if (!out) throw Error("failed writing checkpoint");
}

/// Writes to a temporary sibling and renames, so an interrupted write never
/// replaces a good checkpoint.
inline void save_checkpoint(const std::filesystem::path& path, const ModelParameters& params,
                            const CheckpointMeta& meta) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        write_checkpoint(out, params, meta);
    }
    std::filesystem::rename(tmp, path);
}

inline Checkpoint read_checkpoint(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw FormatError("checkpoint is empty");
    std::istringstream hs(header);
    std::string magic;
    hs >> magic;
    if (magic != kCheckpointMagic)
        throw FormatError("bad checkpoint magic '" + magic + "' (expected " +
                          std::string(kCheckpointMagic) + ")");

    Checkpoint ck;
    auto& p = ck.params;
    int k = -1;
    double unit = 0.0;
    hs >> p.num_users >> p.num_items >> p.embed_dim >> k >> unit >> ck.meta.layers.odd >>
        ck.meta.layers.even >> ck.meta.phase >> ck.meta.epoch;
    if (!hs) throw FormatError("malformed checkpoint header '" + header + "'");
    std::string extra;
    if (hs >> extra) throw FormatError("trailing fields in checkpoint header");
    if (k < 0 || p.embed_dim == 0) throw FormatError("invalid checkpoint dimensions");
    p.popularity = PopularityConfig::with_uniform_weights(unit, k);

    std::array<char, 8> bytes{};
    for (int t = 0; t <= k; ++t) {
        DenseMatrix table(p.num_nodes(), p.embed_dim);
        for (double& v : table.values()) {
            if (!in.read(bytes.data(), bytes.size()))
                throw FormatError("checkpoint truncated in table " + std::to_string(t));
            std::uint64_t bits = 0;
            for (std::size_t b = bytes.size(); b-- > 0;)
                bits = (bits << 8) | static_cast<unsigned char>(bytes[b]);
            v = std::bit_cast<double>(bits);
        }
        p.base.push_back(std::move(table));
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw FormatError("trailing bytes after the last checkpoint table");
    try {
        p.validate();
        ck.meta.layers.validate();
    } catch (const Error& e) {
        throw FormatError(std::string("invalid checkpoint: ") + e.what());
    }
    return ck;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
    return read_checkpoint(in);
}

}  // namespace jmpgcf
