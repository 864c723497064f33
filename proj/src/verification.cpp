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

#include "fdr/verification.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <thread>
#include <unordered_map>

#include <httplib.h>

#include "fdr/error.hpp"
#include "jsonl.hpp"

namespace fdr::verification {

using detail::json;

std::string_view to_string(Decision d) {
    switch (d) {
        case Decision::yes: return "yes";
        case Decision::no: return "no";
        case Decision::unknown: return "unknown";
    }
    return "unknown";
}

namespace {

constexpr std::string_view kQuery = "{query}";
constexpr std::string_view kContext = "{context}";

bool has_placeholders(std::string_view t) {
    return t.find(kQuery) != std::string_view::npos && t.find(kContext) != std::string_view::npos;
}

}  // namespace

void VerificationConfig::validate() const {
    if (budget == 0) throw Error(Errc::ConfigError, "budget", "must be positive");
    if (max_inflight == 0) throw Error(Errc::ConfigError, "max_inflight", "must be positive");
    if (timeout.count() <= 0) throw Error(Errc::ConfigError, "timeout_ms", "must be positive");
    if (!has_placeholders(prompt_template)) {
        throw Error(Errc::BadTemplate, "prompt_template", "needs {query} and {context}");
    }
}

std::string build_prompt(std::string_view tmpl, const corpus::Query& query, std::string_view context) {
    if (!has_placeholders(tmpl)) {
        throw Error(Errc::BadTemplate, "prompt_template", "needs {query} and {context}");
    }
    const std::string_view query_text = query.text ? std::string_view(*query.text) : std::string_view{};
    std::string out;
    out.reserve(tmpl.size() + query_text.size() + context.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl.substr(i, kQuery.size()) == kQuery) {
            out += query_text;
            i += kQuery.size();
        } else if (tmpl.substr(i, kContext.size()) == kContext) {
            out += context;
            i += kContext.size();
        } else {
            out += tmpl[i++];
        }
    }
    return out;
}

Decision parse_verdict(std::string_view raw) {
    auto junk = [](unsigned char c) { return std::isspace(c) || std::ispunct(c); };
    std::size_t b = 0;
    while (b < raw.size() && junk(static_cast<unsigned char>(raw[b]))) ++b;
    std::size_t e = b;
    std::string token;
    while (e < raw.size() && std::isalpha(static_cast<unsigned char>(raw[e]))) {
        token += static_cast<char>(std::tolower(static_cast<unsigned char>(raw[e])));
        ++e;
    }
    if (token == "yes") return Decision::yes;
    if (token == "no") return Decision::no;
    return Decision::unknown;
}

std::string to_wire_json(const VerifyRequest& req) {
    auto nullable = [](const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); };
    json body = {{"query_text", req.query_text},       {"prompt", req.prompt},
                 {"candidate_id", req.candidate_id.str()}, {"ocr_text", nullable(req.ocr_text)},
                 {"caption", nullable(req.caption)},     {"image_ref", nullable(req.image_ref)}};
    return detail::dump_line(body);
}

// ---------------------------------------------------------------------------
// Clients

MockVerifier::MockVerifier(std::map<std::pair<ItemId, ItemId>, std::string> answers)
    : answers_(std::move(answers)) {}

MockVerifier MockVerifier::from_fixture(const std::filesystem::path& path) {
    std::map<std::pair<ItemId, ItemId>, std::string> answers;
    detail::for_each_jsonl(path, [&](const json& o, std::size_t) {
        answers[{ItemId{o.at("query_id").get<std::string>()}, ItemId{o.at("item_id").get<std::string>()}}] =
            o.at("answer").get<std::string>();
    });
    return MockVerifier(std::move(answers));
}

std::optional<std::string> MockVerifier::verify(const VerifyRequest& request, std::chrono::milliseconds) {
    const auto it = answers_.find({request.query_id, request.candidate_id});
    if (it == answers_.end()) return std::string{};
    return it->second;
}

HttpVerifier::HttpVerifier(std::string base_url) {
    const auto scheme = base_url.find("://");
    const auto path_start = base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) {
        host_ = std::move(base_url);
    } else {
        host_ = base_url.substr(0, path_start);
        prefix_ = base_url.substr(path_start);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
}

std::optional<std::string> HttpVerifier::verify(const VerifyRequest& request,
                                                std::chrono::milliseconds timeout) {
    httplib::Client cli(host_);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    auto res = cli.Post(prefix_ + "/verify", to_wire_json(request), "application/json");
    if (!res || res->status != 200) return std::nullopt;
    try {
        const json body = json::parse(res->body);
        return body.at("answer").get<std::string>();
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

std::shared_ptr<VerifierClient> make_verifier(std::string_view spec) {
    constexpr std::string_view kMock = "mock:";
    if (spec.substr(0, kMock.size()) == kMock) {
        return std::make_shared<MockVerifier>(
            MockVerifier::from_fixture(std::filesystem::path(spec.substr(kMock.size()))));
    }
    // Built without TLS, so only plain http endpoints are reachable.
    if (spec.substr(0, 7) == "http://") {
        return std::make_shared<HttpVerifier>(std::string(spec));
    }
    throw Error(Errc::ConfigError, std::string(spec), "verifier must be mock:<fixture> or an http URL");
}

// ---------------------------------------------------------------------------

namespace {

struct CandidateFields {
    std::optional<std::string> ocr_text;
    std::optional<std::string> caption;
    std::optional<std::string> image_ref;
};

std::optional<std::string> non_empty(const std::string& s) {
    return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

CandidateFields candidate_fields(const corpus::Corpus& corpus, const ItemId& item) {
    if (const auto* page = corpus.find_page(item)) {
        return {non_empty(page->ocr_text), non_empty(page->caption), page->image_ref};
    }
    if (const auto* region = corpus.find_region(item)) {
        const auto& page = corpus.page(region->page_id);
        CandidateFields f{non_empty(page.ocr_text), non_empty(page.caption),
                          region->image_ref ? region->image_ref : page.image_ref};
        if (region->ocr_text) f.ocr_text = non_empty(*region->ocr_text);
        return f;
    }
    return {};
}

std::string context_of(const CandidateFields& f) {
    std::string ctx;
    if (f.ocr_text) ctx += *f.ocr_text;
    if (f.caption) {
        if (!ctx.empty()) ctx += '\n';
        ctx += *f.caption;
    }
    if (ctx.empty() && f.image_ref) ctx = "[image] " + *f.image_ref;
    return ctx;
}

}  // namespace

std::string candidate_context(const corpus::Corpus& corpus, const ItemId& item) {
    return context_of(candidate_fields(corpus, item));
}

std::vector<Verdict> verify_candidates(const corpus::Query& query, const ScoredList& fused,
                                       VerifierClient& client, const VerificationConfig& config,
                                       const corpus::Corpus& corpus) {
    config.validate();
    const std::size_t n = std::min(config.budget, fused.entries.size());

    std::vector<VerifyRequest> requests;
    requests.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const ItemId& item = fused.entries[i].id;
        CandidateFields f = candidate_fields(corpus, item);
        const std::string ctx = context_of(f);
        requests.push_back(VerifyRequest{query.id, query.text.value_or(""),
                                         build_prompt(config.prompt_template, query, ctx), item,
                                         std::move(f.ocr_text), std::move(f.caption),
                                         std::move(f.image_ref)});
    }

    // Each slot is written by exactly one worker; order is fixed by index.
    std::vector<std::optional<std::string>> answers(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                answers[i] = client.verify(requests[i], config.timeout);
            } catch (const std::exception&) {
                answers[i] = std::nullopt;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const std::size_t workers = std::min(config.max_inflight, n);
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
        if (workers > 0) worker();
    }

    std::vector<Verdict> verdicts;
    verdicts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Verdict v{query.id, requests[i].candidate_id, Decision::unknown, {}};
        if (answers[i]) {
            v.raw = *answers[i];
            v.decision = parse_verdict(v.raw);
        }
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

ScoredList reorder_with_verdicts(const ScoredList& fused, std::span<const Verdict> verdicts) {
    std::unordered_map<ItemId, Decision> decision_of;
    std::unordered_map<ItemId, std::size_t> position;
    for (std::size_t i = 0; i < fused.entries.size(); ++i) position.emplace(fused.entries[i].id, i);
    for (const auto& v : verdicts) {
        if (!position.contains(v.item_id)) throw Error(Errc::UnknownItem, v.item_id.str());
        decision_of.try_emplace(v.item_id, v.decision);
    }

    auto stratum = [&](const ScoredItem& e) {
        const auto it = decision_of.find(e.id);
        if (it == decision_of.end() || it->second == Decision::unknown) return 1;
        return it->second == Decision::yes ? 0 : 2;
    };
    ScoredList out{"final", fused.entries};
    std::stable_sort(out.entries.begin(), out.entries.end(),
                     [&](const ScoredItem& a, const ScoredItem& b) { return stratum(a) < stratum(b); });
    return out;
}

}  // namespace fdr::verification
