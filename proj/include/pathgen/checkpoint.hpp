#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathgen/error.hpp"
#include "pathgen/params.hpp"

namespace pathgen {

// Model container: 7-byte magic "PGCKPT1", little-endian uint32 header
// length, a JSON header (kind, param names and shapes in sorted order,
// plus model-specific extras like token lists), then raw little-endian
// float32 blobs in header order.
inline constexpr char kCheckpointMagic[7] = {'P', 'G', 'C', 'K', 'P', 'T', '1'};

struct Checkpoint {
    nlohmann::json header;
    ParamStore<float> params;
};

inline void save_checkpoint(const std::string& path, const std::string& kind,
                            const ParamStore<float>& store, const nlohmann::json& extra) {
    static_assert(sizeof(float) == 4, "float32 storage assumed");
    nlohmann::json header = extra.is_null() ? nlohmann::json::object() : extra;
    header["format"] = 1;
    header["kind"] = kind;
    nlohmann::json plist = nlohmann::json::array();
    for (const auto& [name, e] : store.entries)
        plist.push_back({{"name", name}, {"rows", e.value.rows}, {"cols", e.value.cols}});
    header["params"] = plist;

    std::string hs = header.dump();
    if (hs.size() > 0xffffffffull) throw Error("checkpoint header too large");
    uint32_t hlen = static_cast<uint32_t>(hs.size());
    unsigned char lenb[4] = {static_cast<unsigned char>(hlen & 0xff),
                             static_cast<unsigned char>((hlen >> 8) & 0xff),
                             static_cast<unsigned char>((hlen >> 16) & 0xff),
                             static_cast<unsigned char>((hlen >> 24) & 0xff)};

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write checkpoint: " + path);
    f.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    f.write(reinterpret_cast<const char*>(lenb), 4);
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& [name, e] : store.entries)
        f.write(reinterpret_cast<const char*>(e.value.v.data()),
                static_cast<std::streamsize>(e.value.v.size() * sizeof(float)));
    f.close();
    if (!f) throw Error("error while writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open checkpoint: " + path);
    char magic[7];
    if (!f.read(magic, 7) || std::memcmp(magic, kCheckpointMagic, 7) != 0)
        throw Error("not a model checkpoint: " + path);
    unsigned char lenb[4];
    if (!f.read(reinterpret_cast<char*>(lenb), 4))
        throw Error("truncated checkpoint header: " + path);
    uint32_t hlen = static_cast<uint32_t>(lenb[0]) | (static_cast<uint32_t>(lenb[1]) << 8) |
                    (static_cast<uint32_t>(lenb[2]) << 16) |
                    (static_cast<uint32_t>(lenb[3]) << 24);
    std::string hs(hlen, '\0');
    if (!f.read(hs.data(), hlen)) throw Error("truncated checkpoint header: " + path);

    Checkpoint ck;
    try {
        ck.header = nlohmann::json::parse(hs);
    } catch (const std::exception& e) {
        throw Error(std::string("bad checkpoint header json: ") + e.what());
    }
    if (!ck.header.contains("format") || ck.header["format"].get<int>() != 1)
        throw Error("unsupported checkpoint format version");
    if (!ck.header.contains("params") || !ck.header["params"].is_array())
        throw Error("checkpoint header missing params");

    for (const auto& p : ck.header["params"]) {
        std::string name = p.at("name").get<std::string>();
        int rows = p.at("rows").get<int>();
        int cols = p.at("cols").get<int>();
        if (rows <= 0 || cols <= 0) throw Error("bad param shape in checkpoint: " + name);
        Tensor<float> t(rows, cols);
        if (!f.read(reinterpret_cast<char*>(t.v.data()),
                    static_cast<std::streamsize>(t.v.size() * sizeof(float))))
            throw Error("truncated checkpoint payload at param: " + name);
        ck.params.add(name, std::move(t));
    }
    char extra;
    if (f.read(&extra, 1)) throw Error("trailing bytes after checkpoint payload: " + path);
    return ck;
}

inline Checkpoint load_checkpoint_expect(const std::string& path, const std::string& kind) {
    Checkpoint ck = load_checkpoint(path);
    std::string got = ck.header.value("kind", "");
    if (got != kind)
        throw Error("checkpoint kind mismatch: expected " + kind + ", found " +
                    (got.empty() ? std::string("<none>") : got));
    return ck;
}

}  // namespace pathgen
