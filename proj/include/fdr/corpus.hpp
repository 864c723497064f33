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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fdr/item_id.hpp"

namespace fdr::corpus {

struct BBox {
    double x0 = 0;
    double y0 = 0;
    double x1 = 0;
    double y1 = 0;
};

struct Page {
    ItemId id;
    ItemId doc_id;
    std::optional<std::string> image_ref;
    std::string ocr_text;  // verbatim, possibly empty
    std::string caption;   // verbatim, possibly empty
};

struct Region {
    ItemId id;
    ItemId page_id;
    BBox bbox;
    std::optional<std::string> image_ref;
    // Region-level override of the page OCR text.
    std::optional<std::string> ocr_text;
};

struct Query {
    ItemId id;
    std::optional<std::string> text;
    std::optional<std::string> image_ref;
    std::optional<std::string> instruction;
    std::vector<ItemId> ground_truth;
};

enum class IssueKind {
    BlankId,
    IdHierarchy,
    RegionPrefixMismatch,
    InvalidBBox,
    NegativeCoordinate,
    EmptyQuery,
    DanglingReference,
};

std::string_view to_string(IssueKind kind);

struct Issue {
    ItemId id;
    IssueKind kind;
    std::string detail;
};

/// Immutable, cross-linked document model. Records are kept sorted by id so
/// that two corpora built from the same records in any order compare equal.
class Corpus {
public:
    Corpus() = default;

    /// Sorts and indexes the records. Throws DuplicateId when a page, region
    /// or query id repeats within its namespace and DanglingReference when a
    /// region names a page that does not exist.
    static Corpus build(std::vector<Page> pages, std::vector<Region> regions,
                        std::vector<Query> queries, int manifest_version = 1);

    int manifest_version() const noexcept { return manifest_version_; }
    std::span<const Page> pages() const noexcept { return pages_; }
    std::span<const Region> regions() const noexcept { return regions_; }
    std::span<const Query> queries() const noexcept { return queries_; }

    const Page* find_page(const ItemId& id) const;
    const Region* find_region(const ItemId& id) const;
    const Query* find_query(const ItemId& id) const;

    /// Throws UnknownId.
    const Page& page(const ItemId& id) const;
    const Region& region(const ItemId& id) const;

    /// Regions of a page in ascending (y0, x0, id) order. Throws UnknownId.
    std::vector<Region> regions_of_page(const ItemId& page_id) const;

    friend bool operator==(const Corpus& a, const Corpus& b);

private:
    int manifest_version_ = 1;
    std::vector<Page> pages_;
    std::vector<Region> regions_;
    std::vector<Query> queries_;
    std::unordered_map<ItemId, std::size_t> page_index_;
    std::unordered_map<ItemId, std::size_t> region_index_;
    std::unordered_map<ItemId, std::size_t> query_index_;
    // page position -> region positions
    std::vector<std::vector<std::size_t>> page_regions_;
};

bool operator==(const BBox& a, const BBox& b);
bool operator==(const Page& a, const Page& b);
bool operator==(const Region& a, const Region& b);
bool operator==(const Query& a, const Query& b);

/// Reads `manifest.json` and the three JSONL files it names from `dir`.
Corpus load_corpus(const std::filesystem::path& dir);

/// Reads a queries.jsonl file on its own, in file order.
std::vector<Query> load_queries(const std::filesystem::path& path);

/// Writes the manifest layout understood by load_corpus.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

std::vector<Issue> validate_corpus(const Corpus& corpus);

}  // namespace fdr::corpus
