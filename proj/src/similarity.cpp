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

#include "fdr/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include <omp.h>

#include "fdr/error.hpp"

namespace fdr {

ScoredList ScoredList::canonical(std::string label, std::vector<ScoredItem> entries) {
    for (const auto& e : entries) {
        if (!std::isfinite(e.score)) throw Error(Errc::NonFiniteValue, e.id.str(), "score");
    }
    std::unordered_set<ItemId> seen;
    seen.reserve(entries.size());
    for (const auto& e : entries) {
        if (!seen.insert(e.id).second) throw Error(Errc::DuplicateId, e.id.str());
    }
    std::sort(entries.begin(), entries.end(), ranks_before);
    return ScoredList{std::move(label), std::move(entries)};
}

bool ScoredList::is_canonical() const {
    std::unordered_set<ItemId> seen;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!std::isfinite(entries[i].score)) return false;
        if (!seen.insert(entries[i].id).second) return false;
        if (i > 0 && !ranks_before(entries[i - 1], entries[i])) return false;
    }
    return true;
}

}  // namespace fdr

namespace fdr::similarity {

namespace {

inline double dot(const float* a, const float* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

// Unchecked kernels; callers validate shapes up front so the parallel loop
// never throws.
double cosine_unchecked(const float* u, const float* v, std::size_t n) {
    const double uv = dot(u, v, n);
    const double uu = dot(u, u, n);
    const double vv = dot(v, v, n);
    return uv / (std::sqrt(uu) * std::sqrt(vv));
}

double maxsim_unchecked(const store::MatrixView& q, const store::MatrixView& d) {
    double total = 0.0;
    for (std::size_t i = 0; i < q.rows; ++i) {
        const float* qi = q.values.data() + i * q.dim;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < d.rows; ++j) {
            best = std::max(best, dot(qi, d.values.data() + j * d.dim, q.dim));
        }
        total += best;
    }
    return total;
}

double score_item(const store::MatrixView& query, const store::ChannelBlock& block,
                  store::VectorKind kind, std::size_t i) {
    const store::MatrixView doc = block.matrix(i);
    if (kind == store::VectorKind::single) {
        return cosine_unchecked(query.values.data(), doc.values.data(), query.dim);
    }
    return maxsim_unchecked(query, doc);
}

const store::ChannelBlock& checked_block(const store::EmbeddingRecord& query,
                                         const store::EmbeddingStore& store,
                                         const store::Channel& channel) {
    const store::ChannelBlock& block = store.channel(channel);
    if (query.rows == 0 || query.values.size() != query.rows * query.dim) {
        throw Error(Errc::EmptyMatrix, query.item_id.str());
    }
    if (!block.empty() && query.dim != block.dim()) {
        throw Error(Errc::DimMismatch, query.item_id.str(),
                    "query dim " + std::to_string(query.dim) + " vs channel " +
                        store::to_string(channel) + " dim " + std::to_string(block.dim()));
    }
    if (channel.kind == store::VectorKind::single) {
        if (query.rows != 1) {
            throw Error(Errc::DimMismatch, query.item_id.str(),
                        "single-vector channel needs a one-row query");
        }
        for (float x : query.values) {
            if (x != 0.0f) return block;
        }
        throw Error(Errc::ZeroVector, query.item_id.str());
    }
    return block;
}

ScoredList collect(const store::ChannelBlock& block, const store::Channel& channel,
                   const std::vector<double>& scores) {
    std::vector<ScoredItem> entries;
    entries.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        // Only reachable for stores loaded without normalization.
        if (!std::isfinite(scores[i])) throw Error(Errc::NonFiniteValue, block.id(i).str(), "score");
        entries.push_back({block.id(i), scores[i]});
    }
    std::sort(entries.begin(), entries.end(), ranks_before);
    return ScoredList{store::to_string(channel), std::move(entries)};
}

}  // namespace

double cosine(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size() || u.empty()) {
        throw Error(Errc::DimMismatch, "cosine",
                    std::to_string(u.size()) + " vs " + std::to_string(v.size()));
    }
    const double uu = dot(u.data(), u.data(), u.size());
    const double vv = dot(v.data(), v.data(), v.size());
    if (uu == 0.0 || vv == 0.0) throw Error(Errc::ZeroVector, "cosine");
    return dot(u.data(), v.data(), u.size()) / (std::sqrt(uu) * std::sqrt(vv));
}

double maxsim(const store::MatrixView& query, const store::MatrixView& doc) {
    if (query.rows == 0 || doc.rows == 0) throw Error(Errc::EmptyMatrix, "maxsim");
    if (query.dim != doc.dim || query.dim == 0 || query.values.size() != query.rows * query.dim ||
        doc.values.size() != doc.rows * doc.dim) {
        throw Error(Errc::DimMismatch, "maxsim",
                    std::to_string(query.dim) + " vs " + std::to_string(doc.dim));
    }
    return maxsim_unchecked(query, doc);
}

ScoredList score_channel(const store::EmbeddingRecord& query, const store::EmbeddingStore& store,
                         const store::Channel& channel, ScoreOptions options) {
    const store::ChannelBlock& block = checked_block(query, store, channel);
    const store::MatrixView q = query.matrix();
    const auto n = static_cast<std::ptrdiff_t>(block.size());
    std::vector<double> scores(block.size());
    const int threads = options.num_threads > 0 ? options.num_threads : omp_get_max_threads();

#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        scores[i] = score_item(q, block, channel.kind, static_cast<std::size_t>(i));
    }
    return collect(block, channel, scores);
}

ScoredList score_channel_serial(const store::EmbeddingRecord& query,
                                const store::EmbeddingStore& store, const store::Channel& channel) {
    const store::ChannelBlock& block = checked_block(query, store, channel);
    const store::MatrixView q = query.matrix();
    std::vector<double> scores(block.size());
    for (std::size_t i = 0; i < block.size(); ++i) {
        scores[i] = score_item(q, block, channel.kind, i);
    }
    return collect(block, channel, scores);
}

ScoredList top_k(const ScoredList& list, std::size_t k) {
    const std::size_t n = std::min(k, list.entries.size());
    return ScoredList{list.source_label,
                      std::vector<ScoredItem>(list.entries.begin(), list.entries.begin() + n)};
}

}  // namespace fdr::similarity
