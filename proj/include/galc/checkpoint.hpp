#pragma once

// Checkpoint file layout (little-endian):
//   "GALC" | u32 format version | u32 manifest length | manifest text |
//   raw f32 arrays in manifest order
//
// Manifest lines:
//   arch <tag>
//   geometry <channels> <height> <width>
//   attr <key> <int>              (zero or more)
//   step <u64>
//   rng <seed u64> <counter u64>
//   tensor <name> <rank> <dims...> (one per parameter)

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "galc/models.hpp"
#include "galc/rng.hpp"

namespace galc {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'G', 'A', 'L', 'C'};

struct Checkpoint {
    ModelParams model;
    std::uint64_t step = 0;
    CounterRng::State rng;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

inline std::string checkpoint_manifest(const Checkpoint& ck) {
    const auto& m = ck.model;
    std::ostringstream os;
    os << "arch " << architecture_tag(m.arch) << '\n';
    os << "geometry " << m.geometry.channels << ' ' << m.geometry.height << ' ' << m.geometry.width << '\n';
    for (const auto& [k, v] : m.attributes) os << "attr " << k << ' ' << v << '\n';
    os << "step " << ck.step << '\n';
    os << "rng " << ck.rng.seed << ' ' << ck.rng.counter << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& s = m.tensor(i).shape();
        os << "tensor " << m.name(i) << ' ' << s.size();
        for (auto d : s) os << ' ' << d;
        os << '\n';
    }
    return os.str();
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    std::string bytes(kCheckpointMagic, 4);
    detail::put_u32(bytes, kCheckpointVersion);
    const std::string manifest = detail::checkpoint_manifest(ck);
    detail::put_u32(bytes, static_cast<std::uint32_t>(manifest.size()));
    bytes += manifest;
    for (std::size_t i = 0; i < ck.model.size(); ++i)
        for (float v : ck.model.tensor(i).data()) detail::put_u32(bytes, std::bit_cast<std::uint32_t>(v));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(Errc::io_error, "failed writing '" + path.string() + "'");
}

inline void save_checkpoint(const ModelParams& model, const std::filesystem::path& path) {
    save_checkpoint(Checkpoint{model, 0, {}}, path);
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open '" + path.string() + "'");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string where = " in '" + path.string() + "'";

    if (bytes.size() < 12 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
        fail(Errc::corrupt_manifest, "missing GALC header" + where);
    const std::uint32_t version = detail::get_u32(bytes, 4);
    if (version != kCheckpointVersion)
        fail(Errc::version_mismatch, "format version " + std::to_string(version) + ", expected " +
                                         std::to_string(kCheckpointVersion) + where);
    const std::uint32_t manifest_len = detail::get_u32(bytes, 8);
    if (bytes.size() < 12 + std::size_t{manifest_len}) fail(Errc::corrupt_manifest, "truncated manifest" + where);

    Checkpoint ck;
    std::istringstream manifest(bytes.substr(12, manifest_len));
    std::vector<std::pair<std::string, Shape>> layout;
    bool seen_arch = false, seen_geometry = false, seen_step = false, seen_rng = false;
    std::string line;
    while (std::getline(manifest, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        bool ok = true;
        if (key == "arch") {
            std::string tag;
            ok = static_cast<bool>(ls >> tag);
            if (ok) ck.model.arch = parse_architecture(tag);
            seen_arch = true;
        } else if (key == "geometry") {
            ok = static_cast<bool>(ls >> ck.model.geometry.channels >> ck.model.geometry.height >>
                                   ck.model.geometry.width);
            seen_geometry = true;
        } else if (key == "attr") {
            std::string name;
            std::int64_t value = 0;
            ok = static_cast<bool>(ls >> name >> value);
            ck.model.attributes[name] = value;
        } else if (key == "step") {
            ok = static_cast<bool>(ls >> ck.step);
            seen_step = true;
        } else if (key == "rng") {
            ok = static_cast<bool>(ls >> ck.rng.seed >> ck.rng.counter);
            seen_rng = true;
        } else if (key == "tensor") {
            std::string name;
            std::size_t rank = 0;
            ok = static_cast<bool>(ls >> name >> rank) && rank > 0 && rank <= 8;
            Shape shape(ok ? rank : 0);
            for (auto& d : shape) ok = ok && static_cast<bool>(ls >> d) && d > 0;
            if (ok) layout.emplace_back(name, shape);
        } else {
            ok = false;
        }
        std::string trailing;
        if (!ok || (ls >> trailing)) fail(Errc::corrupt_manifest, "bad manifest line '" + line + "'" + where);
    }
    if (!seen_arch || !seen_geometry || !seen_step || !seen_rng)
        fail(Errc::corrupt_manifest, "incomplete manifest" + where);

    std::size_t offset = 12 + manifest_len;
    for (auto& [name, shape] : layout) {
        const std::size_t count = shape_size(shape);
        if (bytes.size() < offset + 4 * count) fail(Errc::corrupt_manifest, "truncated tensor '" + name + "'" + where);
        std::vector<float> data(count);
        for (std::size_t i = 0; i < count; ++i)
            data[i] = std::bit_cast<float>(detail::get_u32(bytes, offset + 4 * i));
        offset += 4 * count;
        ck.model.add(name, Tensor(shape, std::move(data)));
    }
    if (offset != bytes.size()) fail(Errc::corrupt_manifest, "trailing bytes after tensors" + where);
    return ck;
}

inline ModelParams load_checkpoint(const std::filesystem::path& path) { return read_checkpoint(path).model; }

}  // namespace galc
