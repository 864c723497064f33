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

#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fdr/item_id.hpp"

namespace fdr::store {

// Numeric codes are the binary format's on-disk values.
enum class Granularity : std::uint8_t { page = 0, region = 1, ocr_text = 2, caption = 3, query = 4 };
enum class Modality : std::uint8_t { image = 0, text = 1, multimodal = 2 };
enum class VectorKind : std::uint8_t { single = 0, multi = 1 };

std::string_view to_string(Granularity g);
std::string_view to_string(Modality m);
std::string_view to_string(VectorKind k);
std::optional<Granularity> parse_granularity(std::string_view s);
std::optional<Modality> parse_modality(std::string_view s);
std::optional<VectorKind> parse_kind(std::string_view s);

/// One embedding space: (granularity, modality, kind).
struct Channel {
    Granularity granularity = Granularity::page;
    Modality modality = Modality::image;
    VectorKind kind = VectorKind::single;

    friend auto operator<=>(const Channel&, const Channel&) = default;
};

/// "granularity/modality/kind", e.g. "page/image/multi".
std::string to_string(const Channel& c);

/// Row-major view over `rows` vectors of `dim` floats.
struct MatrixView {
    std::span<const float> values;
    std::size_t rows = 0;
    std::size_t dim = 0;

    std::span<const float> row(std::size_t i) const { return values.subspan(i * dim, dim); }
};

struct EmbeddingRecord {
    ItemId item_id;
    Channel channel;
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<float> values;  // rows * dim, row-major

    MatrixView matrix() const { return {values, rows, dim}; }
    std::span<const float> row(std::size_t i) const { return matrix().row(i); }

    friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

/// Checks shape, kind and finiteness. Throws DimMismatch or NonFiniteValue.
void check_record(const EmbeddingRecord& rec);

/// Scales every row to unit Euclidean norm. Throws ZeroVector(row index).
EmbeddingRecord l2_normalize(EmbeddingRecord rec);

/// All records of one channel, packed contiguously and sorted by item id.
class ChannelBlock {
public:
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }

    const ItemId& id(std::size_t i) const { return ids_[i]; }
    MatrixView matrix(std::size_t i) const {
        const std::size_t begin = row_offsets_[i];
        const std::size_t rows = row_offsets_[i + 1] - begin;
        return {std::span<const float>(values_).subspan(begin * dim_, rows * dim_), rows, dim_};
    }
    std::optional<std::size_t> find(const ItemId& id) const;

private:
    friend class EmbeddingStore;

    std::size_t dim_ = 0;
    std::vector<ItemId> ids_;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<float> values_;
    std::unordered_map<ItemId, std::size_t> index_;
};

struct StoreOptions {
    // Unit-normalize every row at load so cosine reduces to a dot product.
    bool normalize = true;
};

/// Immutable collection of channels. Safe for concurrent readers.
class EmbeddingStore {
public:
    EmbeddingStore() = default;

    /// Validates and packs records. Throws DimMismatch, NonFiniteValue,
    /// DuplicateKey, or ZeroVector when normalizing.
    static EmbeddingStore from_records(std::vector<EmbeddingRecord> records,
                                       StoreOptions options = {});

    /// Registers a channel with no records yet. Scoring it yields an empty list.
    void declare_channel(const Channel& c, std::size_t dim);

    bool has_channel(const Channel& c) const { return channels_.contains(c); }
    /// Throws UnknownChannel.
    const ChannelBlock& channel(const Channel& c) const;
    std::vector<Channel> channels() const;
    std::size_t record_count() const;

    /// Throws NotFound(channel, item_id).
    EmbeddingRecord get(const Channel& c, const ItemId& id) const;
    std::optional<EmbeddingRecord> find(const Channel& c, const ItemId& id) const;

    /// Records in (channel, item id) order.
    std::vector<EmbeddingRecord> records() const;

private:
    std::map<Channel, ChannelBlock> channels_;
};

/// JSONL object form: {"item_id", "granularity", "modality", "kind", "vectors"}.
/// Throws ParseError on malformed shape plus anything check_record throws.
EmbeddingRecord record_from_json(const nlohmann::json& obj);
nlohmann::json record_to_json(const EmbeddingRecord& rec);

enum class FileFormat { jsonl, binary };

/// Raw records exactly as stored in the file (no normalization). The format
/// is detected from the leading magic bytes.
std::vector<EmbeddingRecord> read_embedding_records(const std::filesystem::path& path);

/// read_embedding_records for each path, merged into one store.
EmbeddingStore load_embeddings(std::span<const std::filesystem::path> paths,
                               StoreOptions options = {});
EmbeddingStore load_embeddings(const std::filesystem::path& path, StoreOptions options = {});

void write_embeddings(std::span<const EmbeddingRecord> records, const std::filesystem::path& path,
                      FileFormat format);

}  // namespace fdr::store
