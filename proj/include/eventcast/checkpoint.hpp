#pragma once

#include "eventcast/digest.hpp"
#include "eventcast/error.hpp"
#include "eventcast/io.hpp"
#include "eventcast/pipeline.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>

namespace eventcast {

inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline void append_f32le(std::string& out, float v) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

inline float read_f32le(const unsigned char* p) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
    return std::bit_cast<float>(bits);
}

} // namespace detail

/// Tensor blob: every tensor in manifest order, row-major, float32 little-endian.
inline std::string tensor_blob(ModelParams<float>& params, nlohmann::json* layout = nullptr) {
    std::string blob;
    std::size_t offset = 0;
    for (auto& r : params.all_refs()) {
        for (Eigen::Index i = 0; i < r.rows; ++i)
            for (Eigen::Index j = 0; j < r.cols; ++j) detail::append_f32le(blob, r.data[j * r.rows + i]);
        if (layout)
            layout->push_back({{"name", r.name}, {"shape", {r.rows, r.cols}}, {"offset", offset}});
        offset += static_cast<std::size_t>(r.size());
    }
    return blob;
}

inline std::string checkpoint_digest(const ForecastModel& m) {
    auto copy = m.params;
    return sha256_hex(tensor_blob(copy));
}

/// Writes model.manifest, model.tensors and model.vocab into dir, each
/// atomically; the manifest goes last so a readable manifest implies the
/// other two are complete.
inline void save_checkpoint(const ForecastModel& m, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json layout = nlohmann::json::array();
    auto params = m.params;
    const std::string blob = tensor_blob(params, &layout);
    const std::string vocab = m.vocab.serialize();
    nlohmann::json manifest = {
        {"format", "eventcast-checkpoint"},
        {"version", kCheckpointVersion},
        {"config", m.config},
        {"dtype", "float32-le"},
        {"layout", "row-major"},
        {"tensors", layout},
        {"tensors_file", "model.tensors"},
        {"tensors_sha256", sha256_hex(blob)},
        {"vocab_file", "model.vocab"},
        {"vocab_sha256", sha256_hex(vocab)},
        {"normalization", m.norms},
        {"loss_trajectory", m.loss_trajectory},
    };
    io::write_file_atomic(dir / "model.tensors", blob);
    io::write_file_atomic(dir / "model.vocab", vocab);
    io::write_file_atomic(dir / "model.manifest", manifest.dump(2) + "\n");
}

inline ForecastModel load_checkpoint(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(io::read_file(dir / "model.manifest"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed checkpoint manifest: " + std::string(e.what()));
    }
    try {
        if (manifest.at("format") != "eventcast-checkpoint") throw DataError("not an eventcast checkpoint");
        if (manifest.at("version").get<int>() != kCheckpointVersion)
            throw DataError("unsupported checkpoint version " + manifest.at("version").dump());
        ForecastModel m;
        m.config = manifest.at("config").get<PipelineConfig>();
        m.norms = manifest.at("normalization").get<std::vector<RegionNorm>>();
        m.loss_trajectory = manifest.at("loss_trajectory").get<std::vector<double>>();

        const std::string vocab = io::read_file(dir / manifest.at("vocab_file").get<std::string>());
        if (sha256_hex(vocab) != manifest.at("vocab_sha256")) throw DataError("vocab digest mismatch");
        m.vocab = Vocab::deserialize(vocab);
        if (m.vocab.size() != m.config.model.vocab_size) throw DataError("vocab size disagrees with config");

        const std::string blob = io::read_file(dir / manifest.at("tensors_file").get<std::string>());
        if (sha256_hex(blob) != manifest.at("tensors_sha256")) throw DataError("tensor digest mismatch");
        Rng unused(0);
        m.params = ModelParams<float>::init(m.config.model, unused);
        auto refs = m.params.all_refs();
        const auto& layout = manifest.at("tensors");
        if (layout.size() != refs.size()) throw ShapeMismatch("checkpoint tensor count disagrees with config");
        const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
        for (std::size_t t = 0; t < refs.size(); ++t) {
            auto& r = refs[t];
            const auto& entry = layout[t];
            if (entry.at("name") != r.name || entry.at("shape")[0].get<Eigen::Index>() != r.rows ||
                entry.at("shape")[1].get<Eigen::Index>() != r.cols)
                throw ShapeMismatch("checkpoint tensor " + r.name + " has unexpected name or shape");
            const auto offset = entry.at("offset").get<std::size_t>();
            if ((offset + static_cast<std::size_t>(r.size())) * 4 > blob.size())
                throw DataError("tensor blob is truncated");
            for (Eigen::Index i = 0; i < r.rows; ++i)
                for (Eigen::Index j = 0; j < r.cols; ++j)
                    r.data[j * r.rows + i] =
                        detail::read_f32le(bytes + 4 * (offset + static_cast<std::size_t>(i * r.cols + j)));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed checkpoint manifest: " + std::string(e.what()));
    }
}

} // namespace eventcast
