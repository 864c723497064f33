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

#include "fdr/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <omp.h>

#include "fdr/error.hpp"
#include "jsonl.hpp"

namespace fdr::pipeline {

using detail::json;
using store::Channel;
using store::Granularity;
using store::Modality;
using store::VectorKind;

void PipelineConfig::validate() const {
    if (paths.empty()) throw Error(Errc::ConfigError, "paths", "at least one path is required");
    if (output_k == 0) throw Error(Errc::ConfigError, "output_k", "must be positive");
    std::set<std::string> labels;
    for (const auto& p : paths) {
        if (p.label.empty()) throw Error(Errc::ConfigError, "paths", "path label is empty");
        if (!labels.insert(p.label).second) throw Error(Errc::ConfigError, p.label, "duplicate path label");
        if (p.query_channel.granularity != Granularity::query) {
            throw Error(Errc::ConfigError, p.label, "query_channel granularity must be query");
        }
        if (p.candidate_channel.granularity == Granularity::query) {
            throw Error(Errc::ConfigError, p.label, "candidate_channel cannot be a query channel");
        }
        if (p.query_channel.kind != p.candidate_channel.kind) {
            throw Error(Errc::ConfigError, p.label, "query and candidate vector kinds differ");
        }
    }
    fusion.validate();
    if (verification) verification->validate();
}

PipelineConfig default_config(Task task) {
    PipelineConfig c;
    c.task = task;
    if (task == Task::mmdocir) {
        c.paths = {
            {"page_maxsim", {Granularity::query, Modality::text, VectorKind::multi},
             {Granularity::page, Modality::image, VectorKind::multi}, "colqwen"},
            {"ocr_text", {Granularity::query, Modality::text, VectorKind::single},
             {Granularity::ocr_text, Modality::text, VectorKind::single}, "gme"},
            {"region_image", {Granularity::query, Modality::text, VectorKind::single},
             {Granularity::region, Modality::image, VectorKind::single}, "gme"},
        };
    } else {
        c.paths = {
            {"region_image", {Granularity::query, Modality::image, VectorKind::single},
             {Granularity::region, Modality::image, VectorKind::single}, "region_image"},
            {"region_multimodal", {Granularity::query, Modality::multimodal, VectorKind::single},
             {Granularity::region, Modality::multimodal, VectorKind::single}, "region_multimodal"},
            {"caption_text", {Granularity::query, Modality::text, VectorKind::single},
             {Granularity::caption, Modality::text, VectorKind::single}, "caption_text"},
        };
    }
    return c;
}

// ---------------------------------------------------------------------------
// Config JSON

namespace {

Channel channel_from_json(const json& j, const std::string& where) {
    std::string g, m, k;
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        const auto a = s.find('/');
        const auto b = s.find('/', a == std::string::npos ? a : a + 1);
        if (a == std::string::npos || b == std::string::npos) {
            throw Error(Errc::ConfigError, where, "channel must be granularity/modality/kind");
        }
        g = s.substr(0, a);
        m = s.substr(a + 1, b - a - 1);
        k = s.substr(b + 1);
    } else {
        g = j.at("granularity").get<std::string>();
        m = j.at("modality").get<std::string>();
        k = j.at("kind").get<std::string>();
    }
    const auto gg = store::parse_granularity(g);
    const auto mm = store::parse_modality(m);
    const auto kk = store::parse_kind(k);
    if (!gg || !mm || !kk) throw Error(Errc::ConfigError, where, "unknown channel component");
    return Channel{*gg, *mm, *kk};
}

json channel_to_json(const Channel& c) {
    return {{"granularity", store::to_string(c.granularity)},
            {"modality", store::to_string(c.modality)},
            {"kind", store::to_string(c.kind)}};
}

}  // namespace

PipelineConfig config_from_json(const json& doc) {
    PipelineConfig c;
    try {
        const auto task = doc.at("task").get<std::string>();
        if (task == "m2kr") {
            c.task = Task::m2kr;
        } else if (task == "mmdocir") {
            c.task = Task::mmdocir;
        } else {
            throw Error(Errc::ConfigError, "task", "expected m2kr or mmdocir");
        }
        for (const auto& p : doc.at("paths")) {
            const auto label = p.at("label").get<std::string>();
            c.paths.push_back(PathSpec{label, channel_from_json(p.at("query_channel"), label),
                                       channel_from_json(p.at("candidate_channel"), label),
                                       p.value("group", label)});
        }
        if (auto it = doc.find("fusion"); it != doc.end() && !it->is_null()) {
            const json& f = *it;
            if (auto w = f.find("weights"); w != f.end() && !w->is_null()) {
                for (const auto& [label, weight] : w->items()) c.fusion.weights[label] = weight.get<double>();
            }
            c.fusion.rrf_k = f.value("rrf_k", 60.0);
            const auto norm = f.value("normalization", std::string("min_max"));
            if (norm == "min_max") {
                c.fusion.normalization = fusion::Normalization::min_max;
            } else if (norm == "none") {
                c.fusion.normalization = fusion::Normalization::none;
            } else {
                throw Error(Errc::ConfigError, "normalization", "expected min_max or none");
            }
        }
        if (auto it = doc.find("verification"); it != doc.end() && !it->is_null()) {
            const json& v = *it;
            verification::VerificationConfig vc;
            vc.budget = v.value("budget", vc.budget);
            vc.prompt_template = v.value("prompt_template", vc.prompt_template);
            vc.max_inflight = v.value("max_inflight", vc.max_inflight);
            vc.timeout = std::chrono::milliseconds(v.value("timeout_ms", vc.timeout.count()));
            c.verification = std::move(vc);
        }
        c.output_k = doc.value("output_k", std::size_t{5});
        const auto target = doc.value("target", std::string("page"));
        if (target == "page") {
            c.target = Target::page;
        } else if (target == "native") {
            c.target = Target::native;
        } else {
            throw Error(Errc::ConfigError, "target", "expected page or native");
        }
    } catch (const json::exception& e) {
        throw Error(Errc::ConfigError, "pipeline config", e.what());
    }
    c.validate();
    return c;
}

json config_to_json(const PipelineConfig& c) {
    json paths = json::array();
    for (const auto& p : c.paths) {
        paths.push_back({{"label", p.label},
                         {"query_channel", channel_to_json(p.query_channel)},
                         {"candidate_channel", channel_to_json(p.candidate_channel)},
                         {"group", p.group}});
    }
    json weights = json::object();
    for (const auto& [label, w] : c.fusion.weights) weights[label] = w;
    json doc = {
        {"task", c.task == Task::m2kr ? "m2kr" : "mmdocir"},
        {"paths", std::move(paths)},
        {"fusion",
         {{"weights", std::move(weights)},
          {"rrf_k", c.fusion.rrf_k},
          {"normalization", c.fusion.normalization == fusion::Normalization::min_max ? "min_max" : "none"}}},
        {"verification", nullptr},
        {"output_k", c.output_k},
        {"target", c.target == Target::page ? "page" : "native"},
    };
    if (c.verification) {
        doc["verification"] = {{"budget", c.verification->budget},
                               {"prompt_template", c.verification->prompt_template},
                               {"max_inflight", c.verification->max_inflight},
                               {"timeout_ms", c.verification->timeout.count()}};
    }
    return doc;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, path.string(), e.what());
    }
    return config_from_json(doc);
}

// ---------------------------------------------------------------------------
// Query execution

ScoredList region_to_page_project(const ScoredList& regions, const corpus::Corpus& corpus) {
    for (const auto& e : regions.entries) {
        if (!corpus.find_region(e.id)) throw Error(Errc::UnknownItem, e.id.str(), "not a region");
    }
    return project_to_pages(regions, corpus);
}

ScoredList project_to_pages(const ScoredList& list, const corpus::Corpus& corpus) {
    std::unordered_map<ItemId, std::size_t> slot;
    std::vector<ScoredItem> pages;
    for (const auto& e : list.entries) {
        const ItemId* page_id = nullptr;
        if (const auto* region = corpus.find_region(e.id)) {
            page_id = &region->page_id;
        } else if (corpus.find_page(e.id)) {
            page_id = &e.id;
        } else {
            throw Error(Errc::UnknownItem, e.id.str(), "neither a page nor a region");
        }
        const auto [it, inserted] = slot.try_emplace(*page_id, pages.size());
        if (inserted) {
            pages.push_back({*page_id, e.score});
        } else {
            pages[it->second].score = std::max(pages[it->second].score, e.score);
        }
    }
    std::sort(pages.begin(), pages.end(), ranks_before);
    return ScoredList{list.source_label, std::move(pages)};
}

std::vector<ScoredList> score_paths(const corpus::Query& query, const RetrievalContext& ctx,
                                    const PipelineConfig& config) {
    std::vector<ScoredList> lists;
    lists.reserve(config.paths.size());
    for (const auto& path : config.paths) {
        const auto qrec = ctx.queries.find(path.query_channel, query.id);
        if (!qrec) {
            throw Error(Errc::MissingQueryEmbedding, query.id.str(),
                        "no " + store::to_string(path.query_channel) + " embedding for path " + path.label);
        }
        ScoredList list = similarity::score_channel(*qrec, ctx.candidates, path.candidate_channel, ctx.score);
        if (config.target == Target::page) list = project_to_pages(list, ctx.corpus);
        list.source_label = path.label;
        lists.push_back(std::move(list));
    }
    return lists;
}

QueryResult run_query(const corpus::Query& query, const RetrievalContext& ctx,
                      const PipelineConfig& config) {
    config.validate();
    std::vector<ScoredList> lists = score_paths(query, ctx, config);

    std::map<std::string, std::vector<ScoredList>> groups;
    for (std::size_t i = 0; i < config.paths.size(); ++i) {
        groups[config.paths[i].group].push_back(std::move(lists[i]));
    }
    ScoredList ranked = fusion::fuse_paths(groups, config.fusion);

    std::unordered_map<ItemId, verification::Decision> verdict_of;
    if (config.verification) {
        if (!ctx.verifier) throw Error(Errc::ConfigError, "verifier", "verification enabled without a verifier");
        const auto verdicts =
            verification::verify_candidates(query, ranked, *ctx.verifier, *config.verification, ctx.corpus);
        for (const auto& v : verdicts) verdict_of.emplace(v.item_id, v.decision);
        ranked = verification::reorder_with_verdicts(ranked, verdicts);
    }

    QueryResult result{query.id, {}, std::nullopt};
    const std::size_t n = std::min(config.output_k, ranked.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = ranked.entries[i];
        RankedEntry entry{e.id, e.score, std::nullopt};
        if (const auto it = verdict_of.find(e.id); it != verdict_of.end()) entry.verdict = it->second;
        result.ranking.push_back(std::move(entry));
    }
    return result;
}

std::vector<QueryResult> run_batch(std::span<const corpus::Query> queries, const RetrievalContext& ctx,
                                   const PipelineConfig& config, BatchOptions options) {
    config.validate();
    std::vector<QueryResult> results(queries.size());
    const auto n = static_cast<std::ptrdiff_t>(queries.size());
    const int workers = options.workers > 0 ? options.workers : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& q = queries[static_cast<std::size_t>(i)];
        try {
            results[i] = run_query(q, ctx, config);
        } catch (const std::exception& e) {
            results[i] = QueryResult{q.id, {}, std::string(e.what())};
        }
    }
    return results;
}

// ---------------------------------------------------------------------------
// Run file

nlohmann::ordered_json result_to_json(const QueryResult& r) {
    nlohmann::ordered_json ranking = nlohmann::ordered_json::array();
    for (const auto& e : r.ranking) {
        nlohmann::ordered_json entry;
        entry["item_id"] = e.item_id.str();
        entry["score"] = e.score;
        entry["verdict"] = e.verdict ? nlohmann::ordered_json(verification::to_string(*e.verdict))
                                     : nlohmann::ordered_json(nullptr);
        ranking.push_back(std::move(entry));
    }
    nlohmann::ordered_json obj;
    obj["query_id"] = r.query_id.str();
    obj["ranking"] = std::move(ranking);
    obj["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json(nullptr);
    return obj;
}

QueryResult result_from_json(const json& obj) {
    QueryResult r{ItemId{obj.at("query_id").get<std::string>()}, {}, detail::optional_string(obj, "error")};
    for (const auto& e : obj.at("ranking")) {
        RankedEntry entry{ItemId{e.at("item_id").get<std::string>()}, e.at("score").get<double>(), std::nullopt};
        if (const auto v = detail::optional_string(e, "verdict")) {
            if (*v == "yes") {
                entry.verdict = verification::Decision::yes;
            } else if (*v == "no") {
                entry.verdict = verification::Decision::no;
            } else if (*v == "unknown") {
                entry.verdict = verification::Decision::unknown;
            } else {
                throw Error(Errc::ParseError, r.query_id.str(), "bad verdict " + *v);
            }
        }
        r.ranking.push_back(std::move(entry));
    }
    return r;
}

void write_run(std::span<const QueryResult> results, std::ostream& out) {
    for (const auto& r : results) {
        out << result_to_json(r).dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::strict) << '\n';
    }
}

void write_run_file(std::span<const QueryResult> results, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, path.string(), "cannot open for writing");
    write_run(results, out);
    if (!out) throw Error(Errc::IoError, path.string(), "write failed");
}

std::vector<QueryResult> read_run_file(const std::filesystem::path& path) {
    std::vector<QueryResult> out;
    detail::for_each_jsonl(path, [&](const json& obj, std::size_t line) {
        try {
            out.push_back(result_from_json(obj));
        } catch (const Error& e) {
            throw Error(Errc::ParseError, path.string(), e.what(), line);
        }
    });
    return out;
}

}  // namespace fdr::pipeline
