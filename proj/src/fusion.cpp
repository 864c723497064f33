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

#include "fdr/fusion.hpp"

#include <algorithm>
#include <unordered_map>

#include "fdr/error.hpp"

namespace fdr::fusion {

void FusionConfig::validate() const {
    if (!(rrf_k > 0.0)) throw Error(Errc::ConfigError, "rrf_k", "must be positive");
    if (weights.empty()) return;
    bool any_positive = false;
    for (const auto& [label, w] : weights) {
        if (!(w >= 0.0)) throw Error(Errc::ConfigError, label, "weight must be non-negative");
        any_positive = any_positive || w > 0.0;
    }
    if (!any_positive) throw Error(Errc::ConfigError, "weights", "at least one weight must be positive");
}

ScoredList min_max_normalize(const ScoredList& list) {
    ScoredList out{list.source_label, list.entries};
    if (out.entries.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(
        out.entries.begin(), out.entries.end(),
        [](const ScoredItem& a, const ScoredItem& b) { return a.score < b.score; });
    const double lo = lo_it->score;
    const double hi = hi_it->score;
    for (auto& e : out.entries) {
        if (hi == lo) {
            e.score = 0.5;
        } else if (e.score == hi) {
            e.score = 1.0;
        } else {
            e.score = (e.score - lo) / (hi - lo);
        }
    }
    return out;
}

namespace {

// Accumulates per-item sums in first-seen order so the floating-point sum
// order is fixed by list order, not by hashing.
class Accumulator {
public:
    void add(const ItemId& id, double v) {
        auto [it, inserted] = slot_.try_emplace(id, items_.size());
        if (inserted) items_.push_back({id, 0.0});
        items_[it->second].score += v;
    }

    ScoredList finish(std::string label) && {
        std::sort(items_.begin(), items_.end(), ranks_before);
        return ScoredList{std::move(label), std::move(items_)};
    }

private:
    std::unordered_map<ItemId, std::size_t> slot_;
    std::vector<ScoredItem> items_;
};

}  // namespace

ScoredList weighted_sum_fuse(std::span<const ScoredList> lists, const FusionConfig& config,
                             std::string label) {
    config.validate();
    std::vector<double> weights;
    weights.reserve(lists.size());
    for (const auto& l : lists) {
        if (config.weights.empty()) {
            weights.push_back(1.0 / static_cast<double>(lists.size()));
            continue;
        }
        const auto it = config.weights.find(l.source_label);
        if (it == config.weights.end()) throw Error(Errc::MissingWeight, l.source_label);
        weights.push_back(it->second);
    }

    Accumulator acc;
    for (std::size_t i = 0; i < lists.size(); ++i) {
        const ScoredList norm = config.normalization == Normalization::min_max
                                    ? min_max_normalize(lists[i])
                                    : lists[i];
        for (const auto& e : norm.entries) acc.add(e.id, weights[i] * e.score);
    }
    return std::move(acc).finish(std::move(label));
}

ScoredList rrf_fuse(std::span<const ScoredList> lists, double rrf_k, std::string label) {
    if (!(rrf_k > 0.0)) throw Error(Errc::ConfigError, "rrf_k", "must be positive");
    Accumulator acc;
    for (const auto& l : lists) {
        for (std::size_t r = 0; r < l.entries.size(); ++r) {
            acc.add(l.entries[r].id, 1.0 / (rrf_k + static_cast<double>(r + 1)));
        }
    }
    return std::move(acc).finish(std::move(label));
}

ScoredList fuse_paths(const std::map<std::string, std::vector<ScoredList>>& groups,
                      const FusionConfig& config) {
    config.validate();
    std::vector<ScoredList> reduced;
    for (const auto& [name, lists] : groups) {
        if (lists.empty()) continue;
        if (lists.size() == 1) {
            // Nothing to combine; any weight/normalization is a monotone map.
            reduced.push_back(ScoredList{name, lists.front().entries});
        } else {
            reduced.push_back(weighted_sum_fuse(lists, config, name));
        }
    }
    if (reduced.empty()) throw Error(Errc::ConfigError, "fuse_paths", "no nonempty group");
    // RRF over a single list only relabels ranks; keep the path's own scores.
    if (reduced.size() == 1) return std::move(reduced.front());
    return rrf_fuse(reduced, config.rrf_k);
}

}  // namespace fdr::fusion
