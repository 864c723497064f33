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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fdr/corpus.hpp"
#include "fdr/embedding_store.hpp"
#include "fdr/fusion.hpp"
#include "fdr/similarity.hpp"
#include "fdr/verification.hpp"

namespace fdr::pipeline {

enum class Task { m2kr, mmdocir };

/// Granularity of the final ranking. `page` max-pools region hits onto
/// their pages before fusion; `native` ranks whatever ids the paths return.
enum class Target { page, native };

struct PathSpec {
    std::string label;
    store::Channel query_channel;
    store::Channel candidate_channel;
    std::string group;
};

struct PipelineConfig {
    Task task = Task::mmdocir;
    std::vector<PathSpec> paths;
    fusion::FusionConfig fusion;
    std::optional<verification::VerificationConfig> verification;
    std::size_t output_k = 5;
    Target target = Target::page;

    /// Throws ConfigError.
    void validate() const;
};

/// Paths and grouping that mirror the two task layouts: MMDocIR fuses
/// {ocr-text, region-image} by weighted sum and RRFs the result against the
/// multi-vector page path; M2KR puts each of its three strategies in its own
/// group so they meet directly in RRF.
PipelineConfig default_config(Task task);

PipelineConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

/// Everything a query needs, shared read-only across workers.
struct RetrievalContext {
    const corpus::Corpus& corpus;
    const store::EmbeddingStore& candidates;
    const store::EmbeddingStore& queries;
    verification::VerifierClient* verifier = nullptr;
    similarity::ScoreOptions score{};
};

struct RankedEntry {
    ItemId item_id;
    double score = 0.0;
    std::optional<verification::Decision> verdict;

    friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

struct QueryResult {
    ItemId query_id;
    std::vector<RankedEntry> ranking;
    std::optional<std::string> error;

    friend bool operator==(const QueryResult&, const QueryResult&) = default;
};

/// Max-pools region scores onto pages. Throws UnknownItem when an entry is
/// not a region of `corpus`.
ScoredList region_to_page_project(const ScoredList& regions, const corpus::Corpus& corpus);

/// Like region_to_page_project but lets page ids through unchanged (a page
/// hit competes with its own regions under the same max).
ScoredList project_to_pages(const ScoredList& list, const corpus::Corpus& corpus);

/// Per-path lists after projection, keyed by path label, in config order.
std::vector<ScoredList> score_paths(const corpus::Query& query, const RetrievalContext& ctx,
                                    const PipelineConfig& config);

/// Throws MissingQueryEmbedding, UnknownChannel, DimMismatch, ConfigError.
QueryResult run_query(const corpus::Query& query, const RetrievalContext& ctx,
                      const PipelineConfig& config);

struct BatchOptions {
    // Queries processed concurrently; 0 keeps the OpenMP default.
    int workers = 0;
};

/// Per-query failures are recorded in QueryResult::error. Results are in
/// input order regardless of scheduling.
std::vector<QueryResult> run_batch(std::span<const corpus::Query> queries,
                                   const RetrievalContext& ctx, const PipelineConfig& config,
                                   BatchOptions options = {});

nlohmann::ordered_json result_to_json(const QueryResult& result);
QueryResult result_from_json(const nlohmann::json& obj);

void write_run(std::span<const QueryResult> results, std::ostream& out);
void write_run_file(std::span<const QueryResult> results, const std::filesystem::path& path);
std::vector<QueryResult> read_run_file(const std::filesystem::path& path);

}  // namespace fdr::pipeline
