#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dlkd/io_util.hpp"
#include "dlkd/tensor.hpp"

namespace dlkd {

struct ClipDims {
    std::size_t c = 0, t = 0, h = 0, w = 0;

    std::size_t numel() const { return c * t * h * w; }
    bool operator==(const ClipDims&) const = default;

    std::string str() const {
        std::ostringstream os;
        os << c << 'x' << t << 'x' << h << 'x' << w;
        return os.str();
    }
};

/// One video sample: C*T*H*W values in [0,1], row-major, plus its class
/// label and a dataset-unique id.
struct VideoClip {
    ClipDims dims;
    std::vector<float> data;
    int label = 0;
    std::string id;

    float& at(std::size_t c, std::size_t t, std::size_t h, std::size_t w) {
        return data[((c * dims.t + t) * dims.h + h) * dims.w + w];
    }
    float at(std::size_t c, std::size_t t, std::size_t h, std::size_t w) const {
        return data[((c * dims.t + t) * dims.h + h) * dims.w + w];
    }
};

/// Generation parameters kept with a dataset for provenance.
struct DatasetProvenance {
    std::size_t num_classes = 0;
    std::size_t per_class = 0;
    ClipDims dims;
    std::uint64_t seed = 0;
    bool darkened = false;
    double gamma_dark = 1.0;
    double scale = 1.0;
    double noise_sigma = 0.0;
    std::uint64_t noise_seed = 0;
};

struct Dataset {
    std::vector<VideoClip> clips;
    std::vector<std::string> class_names;
    DatasetProvenance provenance;

    std::size_t size() const { return clips.size(); }
};

template <typename S>
TensorT<S> clip_to_tensor(const VideoClip& clip) {
    TensorT<S> t;
    t.shape = {clip.dims.c, clip.dims.t, clip.dims.h, clip.dims.w};
    t.data.resize(clip.data.size());
    for (std::size_t i = 0; i < clip.data.size(); ++i) t.data[i] = static_cast<S>(clip.data[i]);
    return t;
}

// ---------------------------------------------------------------------------
// Clip binary format: magic "DLKC", version u16, label u16, dims C,T,H,W as
// u32, clip-id length (u32) + bytes, then C*T*H*W little-endian f32 values
// row-major. Round-trips are bitwise exact.
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kClipFormatVersion = 1;

inline std::vector<std::uint8_t> clip_bytes(const VideoClip& clip) {
    if (clip.label < 0 || clip.label > 0xFFFF)
        throw InputError("clip label " + std::to_string(clip.label) + " not encodable as u16");
    if (clip.data.size() != clip.dims.numel())
        throw ShapeError("clip data length does not match dims " + clip.dims.str());
    ByteWriter w;
    w.str("DLKC");
    w.u16(kClipFormatVersion);
    w.u16(static_cast<std::uint16_t>(clip.label));
    w.u32(static_cast<std::uint32_t>(clip.dims.c));
    w.u32(static_cast<std::uint32_t>(clip.dims.t));
    w.u32(static_cast<std::uint32_t>(clip.dims.h));
    w.u32(static_cast<std::uint32_t>(clip.dims.w));
    w.u32(static_cast<std::uint32_t>(clip.id.size()));
    w.str(clip.id);
    for (float v : clip.data) w.f32(v);
    return w.buffer();
}

inline void write_clip(const VideoClip& clip, const std::string& path) {
    ByteWriter w;
    auto bytes = clip_bytes(clip);
    w.bytes(bytes.data(), bytes.size());
    w.write_file(path);
}

inline VideoClip read_clip(const std::string& path) {
    ByteReader r = ByteReader::from_file(path);
    r.expect_magic("DLKC");
    std::size_t ver_at = r.offset();
    std::uint16_t version = r.u16();
    if (version != kClipFormatVersion)
        throw FormatError("unsupported clip format version " + std::to_string(version), ver_at);
    VideoClip clip;
    clip.label = r.u16();
    clip.dims.c = r.u32();
    clip.dims.t = r.u32();
    clip.dims.h = r.u32();
    clip.dims.w = r.u32();
    std::uint32_t id_len = r.u32();
    clip.id = r.str(id_len);
    clip.data.resize(clip.dims.numel());
    for (float& v : clip.data) v = r.f32();
    r.expect_end();
    return clip;
}

// ---------------------------------------------------------------------------
// Dataset directory layout: DIR/manifest.txt plus DIR/clips/<id>.clip. The
// manifest is line-oriented: a header line with generation parameters, then
// one "<id> <relative-path> <label>" record per clip.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline std::map<std::string, std::string> parse_kv_fields(const std::string& line,
                                                          std::size_t from_field) {
    std::map<std::string, std::string> kv;
    std::istringstream is(line);
    std::string tok;
    std::size_t idx = 0;
    while (is >> tok) {
        if (idx++ < from_field) continue;
        auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw FormatError("manifest header field '" + tok + "' is not key=value", 0);
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

} // namespace detail

inline void write_dataset(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "clips");
    std::ostringstream head;
    const DatasetProvenance& p = ds.provenance;
    head << "dlkd-manifest v1"
         << " classes=" << p.num_classes << " per_class=" << p.per_class
         << " dims=" << p.dims.str() << " seed=" << p.seed << " darkened=" << (p.darkened ? 1 : 0)
         << " gamma_dark=" << detail::fmt_double(p.gamma_dark)
         << " scale=" << detail::fmt_double(p.scale)
         << " noise_sigma=" << detail::fmt_double(p.noise_sigma) << " noise_seed=" << p.noise_seed
         << " class_names=";
    for (std::size_t i = 0; i < ds.class_names.size(); ++i)
        head << (i ? "," : "") << ds.class_names[i];

    std::ofstream mf(fs::path(dir) / "manifest.txt", std::ios::trunc);
    if (!mf) throw Error("cannot write manifest in '" + dir + "'");
    mf << head.str() << "\n";
    for (const VideoClip& clip : ds.clips) {
        std::string rel = "clips/" + clip.id + ".clip";
        write_clip(clip, (fs::path(dir) / rel).string());
        mf << clip.id << ' ' << rel << ' ' << clip.label << "\n";
    }
    if (!mf) throw Error("manifest write failed in '" + dir + "'");
}

inline Dataset read_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream mf(fs::path(dir) / "manifest.txt");
    if (!mf) throw Error("cannot open manifest in '" + dir + "'");

    std::string header;
    if (!std::getline(mf, header) || header.rfind("dlkd-manifest v1", 0) != 0)
        throw FormatError("missing 'dlkd-manifest v1' header line", 0);
    auto kv = detail::parse_kv_fields(header, 2);
    auto want = [&](const std::string& key) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end()) throw FormatError("manifest header missing field '" + key + "'", 0);
        return it->second;
    };

    Dataset ds;
    DatasetProvenance& p = ds.provenance;
    p.num_classes = std::stoul(want("classes"));
    p.per_class = std::stoul(want("per_class"));
    {
        std::istringstream ds_is(want("dims"));
        char x1, x2, x3;
        if (!(ds_is >> p.dims.c >> x1 >> p.dims.t >> x2 >> p.dims.h >> x3 >> p.dims.w) ||
            x1 != 'x' || x2 != 'x' || x3 != 'x')
            throw FormatError("manifest dims field is not CxTxHxW", 0);
    }
    p.seed = std::stoull(want("seed"));
    p.darkened = want("darkened") == "1";
    p.gamma_dark = std::stod(want("gamma_dark"));
    p.scale = std::stod(want("scale"));
    p.noise_sigma = std::stod(want("noise_sigma"));
    p.noise_seed = std::stoull(want("noise_seed"));
    {
        std::istringstream ns(want("class_names"));
        std::string name;
        while (std::getline(ns, name, ','))
            if (!name.empty()) ds.class_names.push_back(name);
    }

    std::set<std::string> seen_ids;
    std::string line;
    while (std::getline(mf, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string id, rel;
        int label;
        if (!(is >> id >> rel >> label))
            throw FormatError("bad manifest record: '" + line + "'", 0);
        VideoClip clip = read_clip((fs::path(dir) / rel).string());
        if (clip.id != id)
            throw ConsistencyError("clip id '" + clip.id + "' in file does not match manifest id '" +
                                   id + "'");
        if (clip.label != label)
            throw ConsistencyError("clip '" + id + "' label " + std::to_string(clip.label) +
                                   " does not match manifest label " + std::to_string(label));
        if (!seen_ids.insert(id).second)
            throw ConsistencyError("duplicate clip id '" + id + "' in manifest");
        if (clip.dims != p.dims)
            throw ConsistencyError("clip '" + id + "' dims " + clip.dims.str() +
                                   " do not match dataset dims " + p.dims.str());
        ds.clips.push_back(std::move(clip));
    }
    return ds;
}

} // namespace dlkd
