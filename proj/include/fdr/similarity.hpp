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

#include <span>
#include <string>
#include <vector>

#include "fdr/embedding_store.hpp"
#include "fdr/item_id.hpp"

namespace fdr {

struct ScoredItem {
    ItemId id;
    double score = 0.0;

    friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

/// Canonical order: score descending, ties by id ascending.
inline bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
}

/// Ranked output of one retrieval path (or of a fusion step).
struct ScoredList {
    std::string source_label;
    std::vector<ScoredItem> entries;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }

    /// Sorts `entries` into canonical order. Throws DuplicateId on repeated
    /// ids and NonFiniteValue on NaN/Inf scores.
    static ScoredList canonical(std::string label, std::vector<ScoredItem> entries);

    /// True when entries are strictly in canonical order, ids unique, scores finite.
    bool is_canonical() const;

    friend bool operator==(const ScoredList&, const ScoredList&) = default;
};

}  // namespace fdr

namespace fdr::similarity {

/// u.v / (|u| |v|), accumulated in double. Throws DimMismatch, ZeroVector.
double cosine(std::span<const float> u, std::span<const float> v);

/// Sum over query rows of the best dot product against any doc row.
/// Rows are expected to be unit-normalized. Throws DimMismatch, EmptyMatrix.
double maxsim(const store::MatrixView& query, const store::MatrixView& doc);

struct ScoreOptions {
    // 0 keeps the OpenMP runtime default.
    int num_threads = 0;
};

/// Brute-force scoring of every item in `channel` against `query`:
/// cosine for single-vector channels, maxsim for multi-vector ones.
/// Candidates are split across OpenMP threads; the result does not depend
/// on the thread count. Throws UnknownChannel, DimMismatch.
ScoredList score_channel(const store::EmbeddingRecord& query, const store::EmbeddingStore& store,
                         const store::Channel& channel, ScoreOptions options = {});

/// Single-threaded reference for score_channel, kept for tests and benchmarks.
ScoredList score_channel_serial(const store::EmbeddingRecord& query,
                                const store::EmbeddingStore& store, const store::Channel& channel);

/// First min(k, |list|) entries.
ScoredList top_k(const ScoredList& list, std::size_t k);

}  // namespace fdr::similarity
