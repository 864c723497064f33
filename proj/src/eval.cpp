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

#include "fdr/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <unordered_map>

#include "fdr/error.hpp"
#include "jsonl.hpp"

namespace fdr::eval {

using detail::json;

double recall_at_k(std::span<const ItemId> ranking, const std::unordered_set<ItemId>& relevant,
                   std::size_t k) {
    if (relevant.empty()) throw Error(Errc::EmptyRelevantSet, "recall_at_k");
    if (k == 0) throw Error(Errc::ConfigError, "k", "must be positive");
    std::unordered_set<ItemId> hit;
    const std::size_t n = std::min(k, ranking.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (relevant.contains(ranking[i])) hit.insert(ranking[i]);
    }
    return static_cast<double>(hit.size()) / static_cast<double>(relevant.size());
}

EvalReport evaluate(std::span<const pipeline::QueryResult> run, std::span<const corpus::Query> queries) {
    std::unordered_map<ItemId, const corpus::Query*> by_id;
    for (const auto& q : queries) by_id.emplace(q.id, &q);

    EvalReport report;
    for (const auto& r : run) {
        const auto it = by_id.find(r.query_id);
        if (it == by_id.end() || it->second->ground_truth.empty()) {
            throw Error(Errc::MissingGroundTruth, r.query_id.str());
        }
        Recalls rec;
        if (!r.error) {
            const std::unordered_set<ItemId> relevant(it->second->ground_truth.begin(),
                                                      it->second->ground_truth.end());
            std::vector<ItemId> ids;
            ids.reserve(r.ranking.size());
            for (const auto& e : r.ranking) ids.push_back(e.item_id);
            rec = {recall_at_k(ids, relevant, 1), recall_at_k(ids, relevant, 3),
                   recall_at_k(ids, relevant, 5)};
        }
        if (!report.per_query.emplace(r.query_id, rec).second) {
            throw Error(Errc::DuplicateId, r.query_id.str(), "query appears twice in run");
        }
    }

    // Summed in query-id order so the result is independent of run line order.
    if (!report.per_query.empty()) {
        for (const auto& [_, rec] : report.per_query) {
            report.aggregate.at1 += rec.at1;
            report.aggregate.at3 += rec.at3;
            report.aggregate.at5 += rec.at5;
        }
        const double n = static_cast<double>(report.per_query.size());
        report.aggregate.at1 /= n;
        report.aggregate.at3 /= n;
        report.aggregate.at5 /= n;
    }
    report.final_score = 100.0 * (report.aggregate.at1 + report.aggregate.at3 + report.aggregate.at5) / 3.0;
    return report;
}

double combined_score(std::span<const EvalReport> reports) {
    if (reports.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : reports) s += r.final_score;
    return s / static_cast<double>(reports.size());
}

std::string format_score(double score) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", score);
    return buf;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
    auto recalls = [](const Recalls& r) {
        nlohmann::ordered_json o;
        o["recall@1"] = r.at1;
        o["recall@3"] = r.at3;
        o["recall@5"] = r.at5;
        return o;
    };
    nlohmann::ordered_json per_query = nlohmann::ordered_json::object();
    for (const auto& [id, r] : report.per_query) per_query[id.str()] = recalls(r);
    nlohmann::ordered_json o;
    o["per_query"] = std::move(per_query);
    o["aggregate"] = recalls(report.aggregate);
    o["final_score"] = report.final_score;
    return o;
}

std::vector<AblationRow> ablation_run(std::span<const Variant> variants, const AblationInputs& inputs) {
    if (variants.empty()) throw Error(Errc::ConfigError, "variants", "at least one variant is required");
    std::vector<AblationRow> rows;
    rows.reserve(variants.size());
    for (const auto& v : variants) {
        const pipeline::RetrievalContext ctx{inputs.corpus, inputs.store, inputs.store, v.verifier.get()};
        const auto run = pipeline::run_batch(inputs.corpus.queries(), ctx, v.config, inputs.batch);
        EvalReport report = evaluate(run, inputs.corpus.queries());
        rows.push_back(AblationRow{v.name, report.final_score, std::move(report)});
    }
    return rows;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

}  // namespace

void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out) {
    out << "variant,score\n";
    for (const auto& r : rows) out << csv_field(r.name) << ',' << format_score(r.final_score) << '\n';
}

void write_trend_csv(std::span<const AblationRow> rows, std::ostream& out) {
    out << "step,variant,score,delta\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double delta = i == 0 ? 0.0 : rows[i].final_score - rows[i - 1].final_score;
        out << i + 1 << ',' << csv_field(rows[i].name) << ',' << format_score(rows[i].final_score) << ','
            << format_score(delta) << '\n';
    }
}

std::vector<Variant> load_variants(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, path.string(), e.what());
    }
    const auto base = path.parent_path();
    std::vector<Variant> out;
    try {
        for (const auto& v : doc.at("variants")) {
            Variant variant{v.at("name").get<std::string>(), pipeline::config_from_json(v.at("config")), nullptr};
            if (const auto spec = detail::optional_string(v, "verifier")) {
                std::string s = *spec;
                if (s.rfind("mock:", 0) == 0) {
                    std::filesystem::path fixture(s.substr(5));
                    if (fixture.is_relative()) fixture = base / fixture;
                    s = "mock:" + fixture.string();
                }
                variant.verifier = verification::make_verifier(s);
            }
            out.push_back(std::move(variant));
        }
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, path.string(), e.what());
    }
    return out;
}

}  // namespace fdr::eval
