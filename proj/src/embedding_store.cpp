// Copyright 2026 the fdr project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fdr/embedding_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "fdr/error.hpp"
#include "jsonl.hpp"

namespace fdr::store {

using detail::json;

namespace {

constexpr std::array<char, 4> kMagic = {'F', 'D', 'R', '1'};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == s) return static_cast<E>(i);
    }
    return std::nullopt;
}

constexpr std::array<std::string_view, 5> kGranularityNames = {"page", "region", "ocr_text",
                                                                "caption", "query"};
constexpr std::array<std::string_view, 3> kModalityNames = {"image", "text", "multimodal"};
constexpr std::array<std::string_view, 2> kKindNames = {"single", "multi"};

}  // namespace

std::string_view to_string(Granularity g) { return kGranularityNames.at(static_cast<std::size_t>(g)); }
std::string_view to_string(Modality m) { return kModalityNames.at(static_cast<std::size_t>(m)); }
std::string_view to_string(VectorKind k) { return kKindNames.at(static_cast<std::size_t>(k)); }

std::optional<Granularity> parse_granularity(std::string_view s) {
    return lookup<Granularity>(kGranularityNames, s);
}
std::optional<Modality> parse_modality(std::string_view s) { return lookup<Modality>(kModalityNames, s); }
std::optional<VectorKind> parse_kind(std::string_view s) { return lookup<VectorKind>(kKindNames, s); }

std::string to_string(const Channel& c) {
    std::string s(to_string(c.granularity));
    s += '/';
    s += to_string(c.modality);
    s += '/';
    s += to_string(c.kind);
    return s;
}

void check_record(const EmbeddingRecord& rec) {
    if (rec.rows == 0 || rec.dim == 0 || rec.values.size() != rec.rows * rec.dim) {
        throw Error(Errc::DimMismatch, rec.item_id.str(), "record shape is empty or inconsistent");
    }
    if (rec.channel.kind == VectorKind::single && rec.rows != 1) {
        throw Error(Errc::DimMismatch, rec.item_id.str(), "single-vector record must have exactly one row");
    }
    for (float v : rec.values) {
        if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, rec.item_id.str());
    }
}

EmbeddingRecord l2_normalize(EmbeddingRecord rec) {
    for (std::size_t r = 0; r < rec.rows; ++r) {
        float* row = rec.values.data() + r * rec.dim;
        double sq = 0.0;
        for (std::size_t j = 0; j < rec.dim; ++j) sq += static_cast<double>(row[j]) * row[j];
        if (sq == 0.0) throw Error(Errc::ZeroVector, rec.item_id.str(), "row " + std::to_string(r));
        const double inv = 1.0 / std::sqrt(sq);
        for (std::size_t j = 0; j < rec.dim; ++j) row[j] = static_cast<float>(row[j] * inv);
    }
    return rec;
}

std::optional<std::size_t> ChannelBlock::find(const ItemId& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

EmbeddingStore EmbeddingStore::from_records(std::vector<EmbeddingRecord> records, StoreOptions options) {
    for (auto& rec : records) {
        check_record(rec);
        if (options.normalize) rec = l2_normalize(std::move(rec));
    }
    std::sort(records.begin(), records.end(), [](const EmbeddingRecord& a, const EmbeddingRecord& b) {
        if (a.channel != b.channel) return a.channel < b.channel;
        return a.item_id < b.item_id;
    });

    EmbeddingStore store;
    for (auto& rec : records) {
        auto [it, inserted] = store.channels_.try_emplace(rec.channel);
        ChannelBlock& block = it->second;
        if (inserted) block.dim_ = rec.dim;
        if (rec.dim != block.dim_) {
            throw Error(Errc::DimMismatch, rec.item_id.str(),
                        "channel " + to_string(rec.channel) + " has dim " + std::to_string(block.dim_) +
                            ", record has " + std::to_string(rec.dim));
        }
        if (!block.index_.emplace(rec.item_id, block.ids_.size()).second) {
            throw Error(Errc::DuplicateKey, rec.item_id.str(), "in channel " + to_string(rec.channel));
        }
        block.ids_.push_back(std::move(rec.item_id));
        block.row_offsets_.push_back(block.row_offsets_.back() + rec.rows);
        block.values_.insert(block.values_.end(), rec.values.begin(), rec.values.end());
    }
    return store;
}

void EmbeddingStore::declare_channel(const Channel& c, std::size_t dim) {
    auto [it, inserted] = channels_.try_emplace(c);
    if (inserted) {
        it->second.dim_ = dim;
    } else if (it->second.dim_ != dim) {
        throw Error(Errc::DimMismatch, to_string(c), "channel already has dim " + std::to_string(it->second.dim_));
    }
}

const ChannelBlock& EmbeddingStore::channel(const Channel& c) const {
    const auto it = channels_.find(c);
    if (it == channels_.end()) throw Error(Errc::UnknownChannel, to_string(c));
    return it->second;
}

std::vector<Channel> EmbeddingStore::channels() const {
    std::vector<Channel> out;
    for (const auto& [c, _] : channels_) out.push_back(c);
    return out;
}

std::size_t EmbeddingStore::record_count() const {
    std::size_t n = 0;
    for (const auto& [_, block] : channels_) n += block.size();
    return n;
}

std::optional<EmbeddingRecord> EmbeddingStore::find(const Channel& c, const ItemId& id) const {
    const auto it = channels_.find(c);
    if (it == channels_.end()) return std::nullopt;
    const auto pos = it->second.find(id);
    if (!pos) return std::nullopt;
    const MatrixView m = it->second.matrix(*pos);
    return EmbeddingRecord{id, c, m.rows, m.dim, std::vector<float>(m.values.begin(), m.values.end())};
}

EmbeddingRecord EmbeddingStore::get(const Channel& c, const ItemId& id) const {
    if (auto rec = find(c, id)) return std::move(*rec);
    throw Error(Errc::NotFound, id.str(), "channel " + to_string(c));
}

std::vector<EmbeddingRecord> EmbeddingStore::records() const {
    std::vector<EmbeddingRecord> out;
    out.reserve(record_count());
    for (const auto& [c, block] : channels_) {
        for (std::size_t i = 0; i < block.size(); ++i) {
            const MatrixView m = block.matrix(i);
            out.push_back({block.id(i), c, m.rows, m.dim, {m.values.begin(), m.values.end()}});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSONL

EmbeddingRecord record_from_json(const json& obj) {
    auto field = [&](const char* key) -> std::string {
        const auto it = obj.find(key);
        if (it == obj.end() || !it->is_string()) {
            throw Error(Errc::ParseError, key, "missing or non-string field");
        }
        return it->get<std::string>();
    };
    EmbeddingRecord rec;
    rec.item_id = ItemId{field("item_id")};
    const auto g = parse_granularity(field("granularity"));
    const auto m = parse_modality(field("modality"));
    const auto k = parse_kind(field("kind"));
    if (!g || !m || !k) throw Error(Errc::ParseError, rec.item_id.str(), "unknown channel name");
    rec.channel = Channel{*g, *m, *k};

    const auto vit = obj.find("vectors");
    if (vit == obj.end() || !vit->is_array() || vit->empty()) {
        throw Error(Errc::ParseError, rec.item_id.str(), "vectors must be a nonempty array of rows");
    }
    rec.rows = vit->size();
    for (const auto& row : *vit) {
        if (!row.is_array()) throw Error(Errc::ParseError, rec.item_id.str(), "row is not an array");
        if (rec.dim == 0) rec.dim = row.size();
        if (row.size() != rec.dim) {
            throw Error(Errc::DimMismatch, rec.item_id.str(), "ragged rows");
        }
        for (const auto& v : row) {
            if (!v.is_number()) {
                throw Error(Errc::ParseError, rec.item_id.str(), "non-numeric vector entry");
            }
            rec.values.push_back(static_cast<float>(v.get<double>()));
        }
    }
    check_record(rec);
    return rec;
}

json record_to_json(const EmbeddingRecord& rec) {
    json rows = json::array();
    for (std::size_t r = 0; r < rec.rows; ++r) {
        json row = json::array();
        // Widening to double keeps the shortest round-trip text of the float.
        for (float v : rec.row(r)) row.push_back(static_cast<double>(v));
        rows.push_back(std::move(row));
    }
    return {{"item_id", rec.item_id.str()},
            {"granularity", to_string(rec.channel.granularity)},
            {"modality", to_string(rec.channel.modality)},
            {"kind", to_string(rec.channel.kind)},
            {"vectors", std::move(rows)}};
}

namespace {

std::vector<EmbeddingRecord> read_jsonl(const std::filesystem::path& path) {
    std::vector<EmbeddingRecord> out;
    detail::for_each_jsonl(path, [&](const json& obj, std::size_t line) {
        try {
            out.push_back(record_from_json(obj));
        } catch (const Error& e) {
            if (e.code() != Errc::ParseError) throw;
            throw Error(Errc::ParseError, path.string(), e.what(), line);
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// FDR1 binary, little-endian

template <typename T>
T from_le(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

class BinaryReader {
public:
    BinaryReader(std::ifstream& in, const std::filesystem::path& path) : in_(in), path_(path) {}

    template <typename T>
    T read() {
        T v;
        bytes(reinterpret_cast<char*>(&v), sizeof(T));
        return from_le(v);
    }

    void bytes(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw Error(Errc::ParseError, path_.string(), "truncated FDR1 file");
        }
    }

private:
    std::ifstream& in_;
    const std::filesystem::path& path_;
};

std::vector<EmbeddingRecord> read_binary(std::ifstream& in, const std::filesystem::path& path) {
    BinaryReader rd(in, path);
    std::array<char, 4> magic{};
    rd.bytes(magic.data(), magic.size());
    const auto count = rd.read<std::uint32_t>();
    std::vector<EmbeddingRecord> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        EmbeddingRecord rec;
        std::string id(rd.read<std::uint16_t>(), '\0');
        rd.bytes(id.data(), id.size());
        rec.item_id = ItemId{std::move(id)};
        const auto g = rd.read<std::uint8_t>();
        const auto m = rd.read<std::uint8_t>();
        const auto k = rd.read<std::uint8_t>();
        if (g >= kGranularityNames.size() || m >= kModalityNames.size() || k >= kKindNames.size()) {
            throw Error(Errc::ParseError, path.string(), "bad channel code for " + rec.item_id.str());
        }
        rec.channel = Channel{static_cast<Granularity>(g), static_cast<Modality>(m),
                              static_cast<VectorKind>(k)};
        rec.rows = rd.read<std::uint32_t>();
        rec.dim = rd.read<std::uint32_t>();
        rec.values.resize(rec.rows * rec.dim);
        for (float& v : rec.values) v = rd.read<float>();
        check_record(rec);
        out.push_back(std::move(rec));
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw Error(Errc::ParseError, path.string(), "trailing bytes after last record");
    }
    return out;
}

class BinaryWriter {
public:
    explicit BinaryWriter(std::ofstream& out) : out_(out) {}

    template <typename T>
    void write(T v) {
        v = from_le(v);
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void bytes(const char* src, std::size_t n) { out_.write(src, static_cast<std::streamsize>(n)); }

private:
    std::ofstream& out_;
};

template <typename T>
T checked_narrow(std::size_t v, const EmbeddingRecord& rec, const char* what) {
    if (v > std::numeric_limits<T>::max()) {
        throw Error(Errc::IoError, rec.item_id.str(), std::string(what) + " exceeds FDR1 field width");
    }
    return static_cast<T>(v);
}

}  // namespace

std::vector<EmbeddingRecord> read_embedding_records(const std::filesystem::path& path) {
    auto in = detail::open_input(path, std::ios::in | std::ios::binary);
    std::array<char, 4> head{};
    in.read(head.data(), head.size());
    const bool binary = in.gcount() == 4 && head == kMagic;
    if (binary) {
        in.seekg(0);
        return read_binary(in, path);
    }
    in.close();
    return read_jsonl(path);
}

EmbeddingStore load_embeddings(std::span<const std::filesystem::path> paths, StoreOptions options) {
    std::vector<EmbeddingRecord> all;
    for (const auto& p : paths) {
        auto recs = read_embedding_records(p);
        std::move(recs.begin(), recs.end(), std::back_inserter(all));
    }
    return EmbeddingStore::from_records(std::move(all), options);
}

EmbeddingStore load_embeddings(const std::filesystem::path& path, StoreOptions options) {
    return load_embeddings(std::span<const std::filesystem::path>(&path, 1), options);
}

void write_embeddings(std::span<const EmbeddingRecord> records, const std::filesystem::path& path,
                      FileFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, path.string(), "cannot open for writing");

    if (format == FileFormat::jsonl) {
        for (const auto& rec : records) out << detail::dump_line(record_to_json(rec)) << '\n';
    } else {
        BinaryWriter w(out);
        w.bytes(kMagic.data(), kMagic.size());
        w.write(static_cast<std::uint32_t>(records.size()));
        for (const auto& rec : records) {
            check_record(rec);
            w.write(checked_narrow<std::uint16_t>(rec.item_id.str().size(), rec, "id length"));
            w.bytes(rec.item_id.str().data(), rec.item_id.str().size());
            w.write(static_cast<std::uint8_t>(rec.channel.granularity));
            w.write(static_cast<std::uint8_t>(rec.channel.modality));
            w.write(static_cast<std::uint8_t>(rec.channel.kind));
            w.write(checked_narrow<std::uint32_t>(rec.rows, rec, "n_rows"));
            w.write(checked_narrow<std::uint32_t>(rec.dim, rec, "dim"));
            for (float v : rec.values) w.write(v);
        }
    }
    out.flush();
    if (!out) throw Error(Errc::IoError, path.string(), "write failed");
}

}  // namespace fdr::store
