#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sixway/core/rng.hpp"
#include "sixway/io/binary.hpp"
#include "sixway/nn/architecture.hpp"
#include "sixway/nn/tensor.hpp"

namespace sixway::nn {

struct WeightRecord {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<float> values;

    bool operator==(const WeightRecord&) const = default;
};

/// Named tensors of a trained generator plus its architecture descriptor.
class WeightStore {
public:
    WeightStore() = default;
    explicit WeightStore(NetArchitecture arch) : arch_(arch) {}

    const NetArchitecture& architecture() const { return arch_; }
    const std::vector<WeightRecord>& records() const { return records_; }
    std::vector<WeightRecord>& records() { return records_; }

    void add(WeightRecord r) {
        require(index_.find(r.name) == index_.end(), ErrorCode::duplicate_record, "record '" + r.name + "'");
        std::size_t expected = 1;
        for (auto d : r.shape) expected *= d;
        require(expected == r.values.size(), ErrorCode::shape_mismatch,
                "record '" + r.name + "' holds " + std::to_string(r.values.size()) + " values for its shape");
        index_[r.name] = records_.size();
        records_.push_back(std::move(r));
    }

    const WeightRecord& get(const std::string& name) const {
        const auto it = index_.find(name);
        require(it != index_.end(), ErrorCode::missing_record, "weight record '" + name + "'");
        return records_[it->second];
    }
    WeightRecord& get(const std::string& name) {
        return const_cast<WeightRecord&>(static_cast<const WeightStore&>(*this).get(name));
    }
    std::span<const float> values(const std::string& name) const { return get(name).values; }

    /// Kernel record as an [o, i, kh, kw] tensor.
    Tensor kernel(const std::string& name) const {
        const auto& r = get(name);
        require(r.shape.size() == 4, ErrorCode::shape_mismatch, "record '" + name + "' is not a 4D kernel");
        Tensor t(static_cast<int>(r.shape[0]), static_cast<int>(r.shape[1]), static_cast<int>(r.shape[2]),
                 static_cast<int>(r.shape[3]));
        t.data = r.values;
        return t;
    }

    /// Checks every record the architecture needs is present with the right
    /// shape, that nothing else is stored, and that all values are finite.
    void validate() const {
        const auto specs = required_records(arch_);
        for (const auto& spec : specs) {
            const auto it = index_.find(spec.name);
            require(it != index_.end(), ErrorCode::missing_record, "weight record '" + spec.name + "'");
            const auto& rec = records_[it->second];
            require(rec.shape == spec.shape, ErrorCode::shape_mismatch,
                    "record '" + spec.name + "' has shape " + shape_text(rec.shape) + ", architecture needs " +
                        shape_text(spec.shape));
            require(all_finite(rec.values), ErrorCode::non_finite, "record '" + spec.name + "'");
        }
        if (records_.size() != specs.size()) {
            std::map<std::string, int> wanted;
            for (const auto& s : specs) wanted[s.name] = 1;
            for (const auto& rec : records_)
                require(wanted.count(rec.name) != 0, ErrorCode::unexpected_record, "record '" + rec.name + "'");
        }
    }

    bool operator==(const WeightStore& o) const { return arch_ == o.arch_ && records_ == o.records_; }

    static std::string shape_text(const std::vector<std::uint32_t>& s) {
        std::string t = "[";
        for (std::size_t i = 0; i < s.size(); ++i) t += (i ? "," : "") + std::to_string(s[i]);
        return t + "]";
    }

private:
    NetArchitecture arch_;
    std::vector<WeightRecord> records_;
    std::map<std::string, std::size_t> index_;
};

enum class WeightInit { zero, identity_norm, random };

/// Weights laid out for `arch`. `zero` sets everything to 0; `identity_norm`
/// additionally sets normalisation scales to 1; `random` draws uniform values
/// scaled by 1/sqrt(fan_in) from a counter-based stream keyed by `seed`.
inline WeightStore make_weights(const NetArchitecture& arch, WeightInit init, std::uint64_t seed = 0,
                                double gain = 1.0) {
    WeightStore store(arch);
    for (const auto& spec : required_records(arch)) {
        std::size_t count = 1;
        for (auto d : spec.shape) count *= d;
        WeightRecord rec{spec.name, spec.shape, std::vector<float>(count, 0.0f)};
        const bool is_norm_scale = spec.name.ends_with("norm1.weight") || spec.name.ends_with("norm2.weight");
        if (init != WeightInit::zero && is_norm_scale) std::fill(rec.values.begin(), rec.values.end(), 1.0f);
        if (init == WeightInit::random && !is_norm_scale) {
            const std::size_t fan_in = spec.shape.size() == 4 ? spec.shape[1] * spec.shape[2] * spec.shape[3] : 1;
            const bool residual_scale = spec.name.ends_with(".beta") || spec.name.ends_with(".gamma");
            const double scale = gain * (residual_scale ? 0.5 : 1.0 / std::sqrt(static_cast<double>(fan_in)));
            CounterRng rng = CounterRng::keyed(seed, fnv1a64(spec.name));
            for (float& v : rec.values) v = static_cast<float>((2.0 * rng.uniform() - 1.0) * scale);
        }
        store.add(std::move(rec));
    }
    return store;
}

// .nsw: "NSW1", u32 version, u32 descriptor length, descriptor JSON (UTF-8),
// then records until end of file: u16 name length, name, u8 rank,
// u32 dims[rank], f32 values. All little-endian.

inline constexpr std::array<char, 4> kWeightsMagic = {'N', 'S', 'W', '1'};
inline constexpr std::uint32_t kWeightsVersion = 1;

inline std::vector<std::uint8_t> encode_weights(const WeightStore& store) {
    io::ByteWriter w;
    w.put_bytes(kWeightsMagic.data(), 4);
    w.put<std::uint32_t>(kWeightsVersion);
    const std::string desc = to_json(store.architecture()).dump();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(desc.size()));
    w.put_string(desc);
    for (const auto& r : store.records()) {
        require(r.name.size() <= 0xffff && r.shape.size() <= 0xff, ErrorCode::invalid_argument,
                "record '" + r.name + "' cannot be encoded");
        w.put<std::uint16_t>(static_cast<std::uint16_t>(r.name.size()));
        w.put_string(r.name);
        w.put<std::uint8_t>(static_cast<std::uint8_t>(r.shape.size()));
        for (auto d : r.shape) w.put<std::uint32_t>(d);
        w.put_bytes(r.values.data(), r.values.size() * sizeof(float));
    }
    return std::move(w.bytes());
}

/// Parses and validates against the embedded descriptor.
inline WeightStore decode_weights(const std::vector<std::uint8_t>& bytes) {
    io::ByteReader r(bytes);
    std::array<char, 4> magic{};
    require(bytes.size() >= 4, ErrorCode::bad_magic, "file shorter than the magic number");
    r.get_bytes(magic.data(), 4);
    require(magic == kWeightsMagic, ErrorCode::bad_magic, "expected \"NSW1\"");
    const auto version = r.get<std::uint32_t>();
    require(version == kWeightsVersion, ErrorCode::unsupported_version, "weights version " + std::to_string(version));
    const auto desc_len = r.get<std::uint32_t>();
    const std::string desc = r.get_string(desc_len);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(desc);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, std::string("weights descriptor: ") + e.what());
    }
    WeightStore store(architecture_from_json(j));
    while (r.remaining() > 0) {
        WeightRecord rec;
        rec.name = r.get_string(r.get<std::uint16_t>());
        const auto rank = r.get<std::uint8_t>();
        std::size_t count = 1;
        for (int i = 0; i < rank; ++i) {
            rec.shape.push_back(r.get<std::uint32_t>());
            count *= rec.shape.back();
        }
        rec.values.resize(count);
        r.get_bytes(rec.values.data(), count * sizeof(float));
        store.add(std::move(rec));
    }
    store.validate();
    return store;
}

inline WeightStore load_weights(const std::filesystem::path& path) { return decode_weights(io::read_file(path)); }

inline void save_weights(const WeightStore& store, const std::filesystem::path& path) {
    io::write_file(path, encode_weights(store));
}

} // namespace sixway::nn
