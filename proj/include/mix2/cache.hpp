#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mix2/binio.hpp"
#include "mix2/dataset.hpp"
#include "mix2/errors.hpp"

namespace mix2 {

// Feature cache: magic MIX2FEAT, version byte, u32 example count, u32 class
// count, then per example (u32 mel rows, u32 frames, f32 payload, label
// bitset words). Class names, recording ids and summary stats travel in a
// JSON sidecar next to the binary so the payload format stays minimal.
inline constexpr const char* kCacheMagic = "MIX2FEAT";
inline constexpr std::uint8_t kCacheVersion = 1;

inline std::string cache_sidecar_path(const std::string& path) { return path + ".meta.json"; }

inline void write_feature_cache(const MultiLabelDataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("feature cache: cannot open " + path);
    binio::write_bytes(os, kCacheMagic, 8);
    binio::write_u8(os, kCacheVersion);
    binio::write_u32(os, static_cast<std::uint32_t>(ds.size()));
    binio::write_u32(os, static_cast<std::uint32_t>(ds.n_classes()));
    const std::size_t words = (ds.n_classes() + 31) / 32;
    for (const auto& e : ds.examples) {
        binio::write_u32(os, static_cast<std::uint32_t>(ds.mel_rows));
        binio::write_u32(os, static_cast<std::uint32_t>(ds.mel_frames));
        for (double v : e.features) binio::write_f32(os, static_cast<float>(v));
        for (std::size_t w = 0; w < words; ++w) {
            std::uint32_t bits = 0;
            for (std::size_t b = 0; b < 32; ++b) {
                const std::size_t c = w * 32 + b;
                if (c < e.labels.size() && e.labels[c]) bits |= 1u << b;
            }
            binio::write_u32(os, bits);
        }
    }
    if (!os) throw DataError("feature cache: write failed for " + path);

    nlohmann::json meta;
    meta["class_names"] = ds.class_names;
    nlohmann::json recs = nlohmann::json::array();
    nlohmann::json offs = nlohmann::json::array();
    for (const auto& e : ds.examples) {
        recs.push_back(e.recording_id);
        offs.push_back(e.offset_s);
    }
    meta["recording_ids"] = std::move(recs);
    meta["offsets_s"] = std::move(offs);
    meta["stats"] = {
        {"n_examples", ds.size()},
        {"n_negatives", ds.negative_count()},
        {"negative_fraction",
         ds.size() ? static_cast<double>(ds.negative_count()) / static_cast<double>(ds.size())
                   : 0.0},
        {"class_counts", ds.class_counts()},
    };
    std::ofstream ms(cache_sidecar_path(path), std::ios::trunc);
    if (!ms) throw DataError("feature cache: cannot open " + cache_sidecar_path(path));
    ms << meta.dump(2) << "\n";
}

inline MultiLabelDataset read_feature_cache(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("feature cache: cannot open " + path);
    binio::expect_magic(is, kCacheMagic, "feature cache");
    const std::uint8_t version = binio::read_u8(is, "cache version");
    if (version != kCacheVersion)
        throw DataError("feature cache: unsupported version " + std::to_string(version));
    const std::uint32_t count = binio::read_u32(is, "example count");
    const std::uint32_t n_classes = binio::read_u32(is, "class count");
    const std::size_t words = (n_classes + 31) / 32;

    MultiLabelDataset ds;
    ds.examples.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t rows = binio::read_u32(is, "mel rows");
        const std::uint32_t frames = binio::read_u32(is, "mel frames");
        if (i == 0) {
            ds.mel_rows = rows;
            ds.mel_frames = frames;
        } else if (rows != ds.mel_rows || frames != ds.mel_frames) {
            throw DataError("feature cache: example " + std::to_string(i) +
                            " has a different mel shape than example 0");
        }
        Example e;
        e.features.resize(static_cast<std::size_t>(rows) * frames);
        for (double& v : e.features) v = static_cast<double>(binio::read_f32(is, "feature"));
        e.labels.assign(n_classes, 0);
        for (std::size_t w = 0; w < words; ++w) {
            const std::uint32_t bits = binio::read_u32(is, "label bits");
            for (std::size_t b = 0; b < 32; ++b) {
                const std::size_t c = w * 32 + b;
                if (c < n_classes) e.labels[c] = (bits >> b) & 1u;
            }
        }
        ds.examples.push_back(std::move(e));
    }

    // Sidecar: names and recording ids when present, synthesized otherwise.
    std::ifstream ms(cache_sidecar_path(path));
    bool have_meta = false;
    if (ms) {
        nlohmann::json meta = nlohmann::json::parse(ms, nullptr, false);
        if (!meta.is_discarded() && meta.contains("class_names") &&
            meta["class_names"].size() == n_classes) {
            ds.class_names = meta["class_names"].get<std::vector<std::string>>();
            if (meta.contains("recording_ids") && meta["recording_ids"].size() == count)
                for (std::size_t i = 0; i < count; ++i)
                    ds.examples[i].recording_id = meta["recording_ids"][i].get<std::string>();
            if (meta.contains("offsets_s") && meta["offsets_s"].size() == count)
                for (std::size_t i = 0; i < count; ++i)
                    ds.examples[i].offset_s = meta["offsets_s"][i].get<double>();
            have_meta = true;
        }
    }
    if (!have_meta) {
        for (std::uint32_t c = 0; c < n_classes; ++c) {
            std::string name = "class" + std::to_string(c);
            if (c < 10) name.insert(5, "0");
            ds.class_names.push_back(std::move(name));
        }
        for (std::size_t i = 0; i < count; ++i)
            ds.examples[i].recording_id = "rec" + std::to_string(i);
    }
    ds.validate();
    return ds;
}

}  // namespace mix2
