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
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fdr/corpus.hpp"
#include "fdr/embedding_store.hpp"
#include "fdr/pipeline.hpp"
#include "fdr/verification.hpp"

namespace fdr::eval {

inline constexpr std::size_t kCutoffs[] = {1, 3, 5};

struct Recalls {
    double at1 = 0.0;
    double at3 = 0.0;
    double at5 = 0.0;

    friend bool operator==(const Recalls&, const Recalls&) = default;
};

struct EvalReport {
    std::map<ItemId, Recalls> per_query;
    Recalls aggregate;
    double final_score = 0.0;  // 100 * mean(aggregate)
};

/// |relevant ∩ ranking[0..k)| / |relevant|. Throws EmptyRelevantSet, and
/// ConfigError for k == 0.
double recall_at_k(std::span<const ItemId> ranking, const std::unordered_set<ItemId>& relevant,
                   std::size_t k);

/// Scores every run entry against its query's ground truth. Entries with an
/// error score 0. Throws MissingGroundTruth when a run query is absent from
/// `queries` or has no ground truth. Line order of the run does not matter.
EvalReport evaluate(std::span<const pipeline::QueryResult> run,
                    std::span<const corpus::Query> queries);

/// Mean of final scores, for combining per-task reports.
double combined_score(std::span<const EvalReport> reports);

/// Fixed 4-decimal text form used for every reported score, e.g. "65.5588".
std::string format_score(double score);

nlohmann::ordered_json report_to_json(const EvalReport& report);

struct Variant {
    std::string name;
    pipeline::PipelineConfig config;
    std::shared_ptr<verification::VerifierClient> verifier;
};

struct AblationRow {
    std::string name;
    double final_score = 0.0;
    EvalReport report;
};

struct AblationInputs {
    const corpus::Corpus& corpus;
    const store::EmbeddingStore& store;
    pipeline::BatchOptions batch{};
};

/// run_batch + evaluate per variant, rows in input order.
std::vector<AblationRow> ablation_run(std::span<const Variant> variants, const AblationInputs& inputs);

/// `variant,score` with a header row.
void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out);
/// `step,variant,score,delta` (delta against the previous row) for plotting.
void write_trend_csv(std::span<const AblationRow> rows, std::ostream& out);

/// Reads `{"variants": [{"name", "config", "verifier"?}]}`; relative paths
/// inside `mock:` verifier specs resolve against the file's directory.
std::vector<Variant> load_variants(const std::filesystem::path& path);

}  // namespace fdr::eval
