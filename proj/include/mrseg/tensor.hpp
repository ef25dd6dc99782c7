// Core data model: real image slices, binary masks, complex k-space grids,
// the "MRT1" on-disk tensor format, and the JSON dataset manifest.
//
// MRT1 layout (all little-endian):
//   magic "MRT1" | version u16 = 1 | dtype u8 | ndim u8 = 2 | dims u32 x 2 | payload
// dtype codes: 1 = f32 real, 2 = u8 mask, 3 = f32 complex (interleaved re, im).
#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mrseg/errors.hpp"

namespace mrseg {

struct Image2D {
    int height = 0;
    int width = 0;
    std::vector<float> data;  // row-major, height*width

    Image2D() = default;
    Image2D(int h, int w, float fill = 0.0f) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    float& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    float at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return data.size(); }

    bool operator==(const Image2D&) const = default;
};

struct MaskGrid {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;  // values in {0, 1}

    MaskGrid() = default;
    MaskGrid(int h, int w, std::uint8_t fill = 0) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    std::uint8_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : data) n += v;
        return n;
    }

    bool operator==(const MaskGrid&) const = default;
};

struct ComplexGrid {
    int height = 0;
    int width = 0;
    std::vector<std::complex<double>> data;

    ComplexGrid() = default;
    ComplexGrid(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w) {}

    std::complex<double>& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    const std::complex<double>& at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }

    bool operator==(const ComplexGrid&) const = default;
};

enum class Severity { Minimal = 0, Mild = 1, Moderate = 2, Severe = 3 };
enum class Split { Train = 0, Val = 1, Test = 2 };

inline const char* to_string(Severity s) {
    switch (s) {
        case Severity::Minimal: return "minimal";
        case Severity::Mild: return "mild";
        case Severity::Moderate: return "moderate";
        case Severity::Severe: return "severe";
    }
    return "?";
}

inline const char* to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

inline Severity severity_from_string(const std::string& s) {
    if (s == "minimal") return Severity::Minimal;
    if (s == "mild") return Severity::Mild;
    if (s == "moderate") return Severity::Moderate;
    if (s == "severe") return Severity::Severe;
    throw ValidationError("unknown severity: " + s);
}

inline Split split_from_string(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw ValidationError("unknown split: " + s);
}

// One case: a slice, its brain mask, its lesion mask, and experiment labels.
// Every lesion pixel must lie inside the brain mask.
struct CaseRecord {
    std::string case_id;
    Image2D image;
    MaskGrid brain_mask;
    MaskGrid lesion_mask;
    std::optional<Severity> severity;
    std::optional<Split> split;
};

inline void validate_case(const CaseRecord& rec) {
    if (rec.image.height != rec.brain_mask.height || rec.image.width != rec.brain_mask.width ||
        rec.image.height != rec.lesion_mask.height || rec.image.width != rec.lesion_mask.width) {
        throw ShapeError("case " + rec.case_id + ": grids have mismatched shapes");
    }
    for (std::size_t i = 0; i < rec.lesion_mask.data.size(); ++i) {
        if (rec.lesion_mask.data[i] && !rec.brain_mask.data[i]) {
            throw ValidationError("case " + rec.case_id + ": lesion pixel outside brain mask");
        }
    }
}

using AnyGrid = std::variant<Image2D, MaskGrid, ComplexGrid>;

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

struct ByteReader {
    const std::string& buf;
    std::size_t pos = 0;

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint8_t>(buf[pos]) | (static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos + 1])) << 8);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw FormatError("truncated MRT1 payload");
    }
};

}  // namespace detail

// Serializes a grid to the MRT1 byte layout. The same grid produces the same
// bytes on any platform.
inline std::string encode_tensor(const AnyGrid& grid) {
    std::string out;
    out += "MRT1";
    detail::put_u16(out, 1);
    std::uint8_t dtype = 0;
    int h = 0, w = 0;
    std::visit(
        [&](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            h = g.height;
            w = g.width;
            if constexpr (std::is_same_v<T, Image2D>) dtype = 1;
            else if constexpr (std::is_same_v<T, MaskGrid>) dtype = 2;
            else dtype = 3;
        },
        grid);
    out.push_back(static_cast<char>(dtype));
    out.push_back(2);  // ndim
    detail::put_u32(out, static_cast<std::uint32_t>(h));
    detail::put_u32(out, static_cast<std::uint32_t>(w));
    std::visit(
        [&](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Image2D>) {
                for (float v : g.data) detail::put_f32(out, v);
            } else if constexpr (std::is_same_v<T, MaskGrid>) {
                for (auto v : g.data) out.push_back(static_cast<char>(v));
            } else {
                for (const auto& v : g.data) {
                    detail::put_f32(out, static_cast<float>(v.real()));
                    detail::put_f32(out, static_cast<float>(v.imag()));
                }
            }
        },
        grid);
    return out;
}

inline AnyGrid decode_tensor(const std::string& bytes, const std::string& origin = "<memory>") {
    if (bytes.size() < 4 || bytes.compare(0, 4, "MRT1") != 0) {
        throw FormatError(origin + ": bad MRT1 magic");
    }
    detail::ByteReader rd{bytes, 4};
    std::uint16_t version = rd.u16();
    if (version != 1) throw FormatError(origin + ": unsupported MRT1 version " + std::to_string(version));
    std::uint8_t dtype = rd.u8();
    std::uint8_t ndim = rd.u8();
    if (ndim != 2) throw FormatError(origin + ": expected 2 dims, got " + std::to_string(ndim));
    std::uint32_t h = rd.u32();
    std::uint32_t w = rd.u32();
    std::size_t n = static_cast<std::size_t>(h) * w;
    switch (dtype) {
        case 1: {
            Image2D img(static_cast<int>(h), static_cast<int>(w));
            for (std::size_t i = 0; i < n; ++i) img.data[i] = rd.f32();
            if (rd.pos != bytes.size()) throw FormatError(origin + ": trailing bytes");
            return img;
        }
        case 2: {
            MaskGrid mask(static_cast<int>(h), static_cast<int>(w));
            for (std::size_t i = 0; i < n; ++i) {
                std::uint8_t v = rd.u8();
                if (v > 1) throw FormatError(origin + ": mask value " + std::to_string(v) + " not in {0,1}");
                mask.data[i] = v;
            }
            if (rd.pos != bytes.size()) throw FormatError(origin + ": trailing bytes");
            return mask;
        }
        case 3: {
            ComplexGrid grid(static_cast<int>(h), static_cast<int>(w));
            for (std::size_t i = 0; i < n; ++i) {
                float re = rd.f32();
                float im = rd.f32();
                grid.data[i] = {re, im};
            }
            if (rd.pos != bytes.size()) throw FormatError(origin + ": trailing bytes");
            return grid;
        }
        default:
            throw FormatError(origin + ": unknown dtype code " + std::to_string(dtype));
    }
}

inline void write_tensor(const std::filesystem::path& path, const AnyGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    std::string bytes = encode_tensor(grid);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

inline AnyGrid read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_tensor(bytes, path.string());
}

inline Image2D read_image(const std::filesystem::path& path) {
    AnyGrid g = read_tensor(path);
    if (auto* img = std::get_if<Image2D>(&g)) return std::move(*img);
    throw FormatError(path.string() + ": expected f32 image tensor");
}

inline MaskGrid read_mask(const std::filesystem::path& path) {
    AnyGrid g = read_tensor(path);
    if (auto* m = std::get_if<MaskGrid>(&g)) return std::move(*m);
    throw FormatError(path.string() + ": expected u8 mask tensor");
}

// ---------------------------------------------------------------------------
// Manifest: the JSON experiment record tying case ids to tensor files.

struct ManifestCase {
    std::string case_id;
    // role -> relative path; roles: image, brain_mask, lesion_mask,
    // skull_image (after skull synthesis), motion_image (after corruption).
    std::map<std::string, std::string> files;
    std::optional<Severity> severity;
    std::optional<Split> split;
};

struct Manifest {
    int format_version = 1;
    std::uint64_t seed = 0;
    std::vector<ManifestCase> cases;

    const ManifestCase* find(const std::string& id) const {
        for (const auto& c : cases)
            if (c.case_id == id) return &c;
        return nullptr;
    }
};

inline nlohmann::json manifest_to_json(const Manifest& m) {
    nlohmann::json j;
    j["format_version"] = m.format_version;
    j["seed"] = m.seed;
    j["cases"] = nlohmann::json::array();
    for (const auto& c : m.cases) {
        nlohmann::json jc;
        jc["case_id"] = c.case_id;
        jc["files"] = c.files;
        if (c.severity) jc["severity"] = to_string(*c.severity);
        if (c.split) jc["split"] = to_string(*c.split);
        j["cases"].push_back(jc);
    }
    return j;
}

inline void save_manifest(const std::filesystem::path& path, const Manifest& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << manifest_to_json(m).dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

// Parses and validates a manifest: unique case ids, all referenced files
// present on disk (paths are resolved relative to the manifest's directory).
inline Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("manifest " + path.string() + ": " + e.what());
    }
    Manifest m;
    m.format_version = j.value("format_version", 1);
    m.seed = j.value("seed", std::uint64_t{0});
    std::filesystem::path base = path.parent_path();
    std::map<std::string, bool> seen;
    for (const auto& jc : j.value("cases", nlohmann::json::array())) {
        ManifestCase c;
        c.case_id = jc.at("case_id").get<std::string>();
        if (seen.count(c.case_id)) throw ValidationError("duplicate case_id: " + c.case_id);
        seen[c.case_id] = true;
        for (const auto& [role, rel] : jc.at("files").items()) {
            std::string p = rel.get<std::string>();
            if (!std::filesystem::exists(base / p)) {
                throw ValidationError("case " + c.case_id + ": missing file " + (base / p).string());
            }
            c.files[role] = p;
        }
        if (jc.contains("severity")) c.severity = severity_from_string(jc["severity"].get<std::string>());
        if (jc.contains("split")) c.split = split_from_string(jc["split"].get<std::string>());
        m.cases.push_back(std::move(c));
    }
    return m;
}

}  // namespace mrseg
