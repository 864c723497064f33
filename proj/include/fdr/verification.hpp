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

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fdr/corpus.hpp"
#include "fdr/similarity.hpp"

namespace fdr::verification {

enum class Decision { yes, no, unknown };

std::string_view to_string(Decision d);

struct Verdict {
    ItemId query_id;
    ItemId item_id;
    Decision decision = Decision::unknown;
    std::string raw;  // verbatim verifier output

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

enum class OnError { treat_unknown };

inline constexpr std::string_view kDefaultPromptTemplate =
    "Question: {query}\nCandidate content: {context}\n"
    "Does this candidate contain the information needed to answer the question? "
    "Answer Yes or No.";

struct VerificationConfig {
    std::size_t budget = 10;
    std::string prompt_template{kDefaultPromptTemplate};
    std::size_t max_inflight = 4;
    std::chrono::milliseconds timeout{30000};
    OnError on_error = OnError::treat_unknown;

    /// Throws ConfigError (or BadTemplate for the template).
    void validate() const;
};

/// Replaces every `{query}` and `{context}` in one left-to-right pass.
/// Throws BadTemplate if either placeholder is missing.
std::string build_prompt(std::string_view prompt_template, const corpus::Query& query,
                         std::string_view context);

/// Strips surrounding whitespace and punctuation, lowercases, and reads the
/// leading run of letters: "yes" -> yes, "no" -> no, anything else -> unknown.
Decision parse_verdict(std::string_view raw);

/// One verification request, mirroring the `POST /verify` body plus the
/// query id (used only by in-process clients such as the mock).
struct VerifyRequest {
    ItemId query_id;
    std::string query_text;
    std::string prompt;
    ItemId candidate_id;
    std::optional<std::string> ocr_text;
    std::optional<std::string> caption;
    std::optional<std::string> image_ref;
};

/// Wire body for `POST /verify`.
std::string to_wire_json(const VerifyRequest& req);

/// Transport to a verifier. Returns the raw answer text, or nullopt on any
/// transport failure or timeout. Implementations must be thread-safe.
class VerifierClient {
public:
    virtual ~VerifierClient() = default;
    virtual std::optional<std::string> verify(const VerifyRequest& request,
                                              std::chrono::milliseconds timeout) = 0;
};

/// Answers from a fixture table keyed by (query_id, item_id). Pairs missing
/// from the table get an empty answer, which parses as unknown.
class MockVerifier final : public VerifierClient {
public:
    explicit MockVerifier(std::map<std::pair<ItemId, ItemId>, std::string> answers);
    /// Loads `{"query_id", "item_id", "answer"}` JSONL.
    static MockVerifier from_fixture(const std::filesystem::path& path);

    std::optional<std::string> verify(const VerifyRequest& request,
                                      std::chrono::milliseconds timeout) override;

private:
    std::map<std::pair<ItemId, ItemId>, std::string> answers_;
};

/// Posts to `<base_url>/verify`. `base_url` is "http://host:port[/prefix]".
class HttpVerifier final : public VerifierClient {
public:
    explicit HttpVerifier(std::string base_url);

    std::optional<std::string> verify(const VerifyRequest& request,
                                      std::chrono::milliseconds timeout) override;

private:
    std::string host_;
    std::string prefix_;
};

/// "mock:<fixture>" or an http URL.
std::shared_ptr<VerifierClient> make_verifier(std::string_view spec);

/// Text shown to the verifier for a candidate: OCR text and caption joined
/// by a newline when present, else "[image] <ref>" when only an image exists.
std::string candidate_context(const corpus::Corpus& corpus, const ItemId& item);

/// Verifies fused[0 .. min(budget, |fused|)) with at most max_inflight
/// concurrent requests. Verdicts come back in fused order. Transport
/// failures become unknown.
std::vector<Verdict> verify_candidates(const corpus::Query& query, const ScoredList& fused,
                                       VerifierClient& client, const VerificationConfig& config,
                                       const corpus::Corpus& corpus);

/// Stable three-way partition: yes, then unknown/unverified, then no.
/// Scores are carried through; the result is labeled "final".
/// Throws UnknownItem for a verdict whose item is not in `fused`.
ScoredList reorder_with_verdicts(const ScoredList& fused, std::span<const Verdict> verdicts);

}  // namespace fdr::verification
