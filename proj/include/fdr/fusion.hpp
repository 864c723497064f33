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

#include <map>
#include <span>
#include <string>
#include <vector>

#include "fdr/similarity.hpp"

namespace fdr::fusion {

enum class Normalization { min_max, none };
enum class MissingScorePolicy { floor_zero };

struct FusionConfig {
    // Per source_label. Empty means equal weights (1/n) over whatever lists
    // are being combined.
    std::map<std::string, double> weights;
    double rrf_k = 60.0;
    MissingScorePolicy missing_score_policy = MissingScorePolicy::floor_zero;
    Normalization normalization = Normalization::min_max;

    /// Throws ConfigError on negative weights, no positive weight, or rrf_k <= 0.
    void validate() const;
};

/// Affine map of scores onto [0, 1] (max -> 1, min -> 0). An all-equal list
/// maps every score to 0.5. Entry order is kept as-is.
ScoredList min_max_normalize(const ScoredList& list);

/// Layer 1: per-list normalization, then sum of weight * score with absent
/// items contributing 0. Throws MissingWeight when `config.weights` is
/// non-empty and lacks one of the lists' labels.
ScoredList weighted_sum_fuse(std::span<const ScoredList> lists, const FusionConfig& config,
                             std::string label = "weighted_sum");

/// Layer 2: score(item) = sum over lists containing it of 1 / (rrf_k + rank),
/// with 1-based rank positions. Throws ConfigError if rrf_k <= 0.
ScoredList rrf_fuse(std::span<const ScoredList> lists, double rrf_k, std::string label = "rrf");

/// Reduces each group with weighted_sum_fuse, then merges the reduced lists
/// with rrf_fuse. Groups are visited in name order. A group of one list is
/// passed through unchanged, and a single surviving group is returned as-is,
/// since both steps would only apply an order-preserving map.
ScoredList fuse_paths(const std::map<std::string, std::vector<ScoredList>>& groups,
                      const FusionConfig& config);

}  // namespace fdr::fusion
