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

#include "fdr/cli.hpp"

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fdr/corpus.hpp"
#include "fdr/embedding_store.hpp"
#include "fdr/error.hpp"
#include "fdr/eval.hpp"
#include "fdr/pipeline.hpp"
#include "fdr/service.hpp"

namespace fdr {

namespace {

namespace fs = std::filesystem;

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, path.string(), "cannot open for writing");
    return out;
}

int run_validate(const fs::path& corpus_dir, std::ostream& out) {
    const auto corpus = corpus::load_corpus(corpus_dir);
    const auto issues = corpus::validate_corpus(corpus);
    for (const auto& issue : issues) {
        out << issue.id << '\t' << corpus::to_string(issue.kind) << '\t' << issue.detail << '\n';
    }
    out << issues.size() << (issues.size() == 1 ? " issue" : " issues") << '\n';
    return issues.empty() ? kExitOk : kExitData;
}

int run_ingest(const std::vector<fs::path>& inputs, const fs::path& out_path, std::ostream& out) {
    std::vector<store::EmbeddingRecord> all;
    for (const auto& p : inputs) {
        auto recs = store::read_embedding_records(p);
        all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    }
    // Normalizing once here surfaces ZeroVector before anything is written;
    // the file itself keeps the raw values.
    for (const auto& rec : all) (void)store::l2_normalize(rec);
    const auto merged = store::EmbeddingStore::from_records(std::move(all), {.normalize = false});
    const auto records = merged.records();
    store::write_embeddings(records, out_path, store::FileFormat::binary);
    out << "wrote " << records.size() << " records in " << merged.channels().size() << " channels to "
        << out_path.string() << '\n';
    return kExitOk;
}

int run_search(const fs::path& corpus_dir, const std::vector<fs::path>& stores, const fs::path& config_path,
               const fs::path& queries_path, const std::string& verifier_spec, const fs::path& out_path,
               int workers, std::ostream& out) {
    const auto corpus = corpus::load_corpus(corpus_dir);
    const auto store = store::load_embeddings(stores);
    const auto config = pipeline::load_config(config_path);
    const auto queries = queries_path.empty() ? std::vector<corpus::Query>(corpus.queries().begin(),
                                                                           corpus.queries().end())
                                              : corpus::load_queries(queries_path);
    std::shared_ptr<verification::VerifierClient> verifier;
    if (!verifier_spec.empty()) verifier = verification::make_verifier(verifier_spec);
    if (config.verification && !verifier) {
        throw Error(Errc::ConfigError, "--verifier", "config enables verification but no verifier was given");
    }
    const pipeline::RetrievalContext ctx{corpus, store, store, verifier.get()};
    const auto results = pipeline::run_batch(queries, ctx, config, {.workers = workers});
    pipeline::write_run_file(results, out_path);
    std::size_t failed = 0;
    for (const auto& r : results) failed += r.error ? 1 : 0;
    out << results.size() << " queries, " << failed << " errors -> " << out_path.string() << '\n';
    return kExitOk;
}

int run_eval(const fs::path& run_path, const fs::path& corpus_dir, const fs::path& out_path, std::ostream& out) {
    const auto corpus = corpus::load_corpus(corpus_dir);
    const auto run = pipeline::read_run_file(run_path);
    const auto report = eval::evaluate(run, corpus.queries());
    out << "recall@1 " << eval::format_score(report.aggregate.at1) << '\n'
        << "recall@3 " << eval::format_score(report.aggregate.at3) << '\n'
        << "recall@5 " << eval::format_score(report.aggregate.at5) << '\n'
        << "final_score " << eval::format_score(report.final_score) << '\n';
    if (!out_path.empty()) open_output(out_path) << eval::report_to_json(report).dump(2) << '\n';
    return kExitOk;
}

int run_ablate(const fs::path& corpus_dir, const std::vector<fs::path>& stores, const fs::path& variants_path,
               const fs::path& out_path, const fs::path& trend_path, int workers, std::ostream& out) {
    const auto corpus = corpus::load_corpus(corpus_dir);
    const auto store = store::load_embeddings(stores);
    const auto variants = eval::load_variants(variants_path);
    const auto rows = eval::ablation_run(variants, {corpus, store, {.workers = workers}});
    {
        auto csv = open_output(out_path);
        eval::write_ablation_csv(rows, csv);
    }
    if (!trend_path.empty()) {
        auto csv = open_output(trend_path);
        eval::write_trend_csv(rows, csv);
    }
    eval::write_ablation_csv(rows, out);
    return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"fdr: multi-path document retrieval with rank fusion and verification", "fdr"};
    app.require_subcommand(1);

    fs::path corpus_dir, out_path, config_path, queries_path, run_path, variants_path, trend_path, service_path;
    std::vector<fs::path> stores, inputs;
    std::string verifier_spec;
    int workers = 0;

    auto* validate = app.add_subcommand("validate", "Check a corpus manifest and report invariant violations");
    validate->add_option("--corpus", corpus_dir, "Corpus directory with manifest.json")->required();

    auto* ingest = app.add_subcommand("ingest", "Merge and validate embedding files into one FDR1 store");
    ingest->add_option("--embeddings", inputs, "JSONL or FDR1 embedding files")->required()->expected(1, -1);
    ingest->add_option("--out", out_path, "Output FDR1 file")->required();

    auto* search = app.add_subcommand("search", "Run a pipeline config over a query set");
    search->add_option("--corpus", corpus_dir)->required();
    search->add_option("--store", stores, "Embedding files (candidates and queries)")->required()->expected(1, -1);
    search->add_option("--config", config_path, "Pipeline config JSON")->required();
    search->add_option("--queries", queries_path, "queries.jsonl (default: the corpus queries)");
    search->add_option("--verifier", verifier_spec, "http://host:port or mock:FIXTURE");
    search->add_option("--out", out_path, "Run file to write")->required();
    search->add_option("--workers", workers, "Concurrent queries (0 = OpenMP default)");

    auto* evaluate = app.add_subcommand("eval", "Score a run file against corpus ground truth");
    evaluate->add_option("--run", run_path)->required();
    evaluate->add_option("--corpus", corpus_dir)->required();
    evaluate->add_option("--out", out_path, "Report JSON to write");

    auto* ablate = app.add_subcommand("ablate", "Evaluate a sequence of pipeline variants");
    ablate->add_option("--corpus", corpus_dir)->required();
    ablate->add_option("--store", stores)->required()->expected(1, -1);
    ablate->add_option("--variants", variants_path, "Variants JSON")->required();
    ablate->add_option("--out", out_path, "variant,score CSV")->required();
    ablate->add_option("--trend", trend_path, "Trend series CSV");
    ablate->add_option("--workers", workers);

    auto* serve = app.add_subcommand("serve", "Run the HTTP search service");
    serve->add_option("--config", service_path, "Service config JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*validate) return run_validate(corpus_dir, out);
        if (*ingest) return run_ingest(inputs, out_path, out);
        if (*search) {
            return run_search(corpus_dir, stores, config_path, queries_path, verifier_spec, out_path, workers, out);
        }
        if (*evaluate) return run_eval(run_path, corpus_dir, out_path, out);
        if (*ablate) return run_ablate(corpus_dir, stores, variants_path, out_path, trend_path, workers, out);
        if (*serve) {
            service::serve(service::ServiceConfig::load(service_path));
            return kExitOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace fdr
