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

#include <gtest/gtest.h>

#include <future>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fdr/cli.hpp"
#include "fdr/error.hpp"
#include "fdr/eval.hpp"
#include "fdr/service.hpp"
#include "test_util.hpp"

using namespace fdr;
using fdr::testing::fixture;
using nlohmann::json;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), "fdr");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string golden(const std::string& name) { return (fixture("golden") / name).string(); }
std::string helps(const std::string& name) { return (fixture("fusion_helps") / name).string(); }

// q1 of the golden fixture, restated as inline service embeddings.
json golden_query_embeddings(const std::string& qid) {
    json arr = json::array();
    for (const auto& rec : store::read_embedding_records(golden("embeddings.jsonl"))) {
        if (rec.item_id == ItemId{qid}) arr.push_back(store::record_to_json(rec));
    }
    return arr;
}

service::SearchService golden_service(bool with_verifier) {
    auto config = pipeline::load_config(golden("mmdocir.json"));
    std::shared_ptr<verification::VerifierClient> verifier;
    if (with_verifier) {
        verifier = verification::make_verifier("mock:" + golden("verifier.jsonl"));
    } else {
        config.verification.reset();
    }
    return service::SearchService(corpus::load_corpus(fixture("golden")),
                                  store::load_embeddings(std::filesystem::path(golden("embeddings.jsonl"))), config,
                                  verifier);
}

}  // namespace

TEST(Cli, ValidateGoodAndBad) {
    const auto good = cli({"validate", "--corpus", fixture("corpus_good").string()});
    EXPECT_EQ(good.code, kExitOk);
    EXPECT_EQ(good.out, "0 issues\n");

    const auto bbox = cli({"validate", "--corpus", fixture("corpus_bad_bbox").string()});
    EXPECT_EQ(bbox.code, kExitData);
    EXPECT_NE(bbox.out.find("\tInvalidBBox\t"), std::string::npos);
    EXPECT_NE(bbox.out.find("1 issue\n"), std::string::npos);

    const auto parse = cli({"validate", "--corpus", fixture("corpus_bad_parse").string()});
    EXPECT_EQ(parse.code, kExitData);
    EXPECT_NE(parse.err.find("line 2"), std::string::npos) << parse.err;
    EXPECT_NE(parse.err.find("pages.jsonl"), std::string::npos) << parse.err;
}

TEST(Cli, UsageErrors) {
    const auto missing = cli({"search", "--corpus", golden(""), "--store", golden("embeddings.jsonl"), "--out", "x"});
    EXPECT_EQ(missing.code, kExitUsage);
    EXPECT_NE(missing.err.find("--config"), std::string::npos);
    EXPECT_NE(missing.err.find("Usage"), std::string::npos);
    EXPECT_EQ(cli({}).code, kExitUsage);
    EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
    const auto help = cli({"--help"});
    EXPECT_EQ(help.code, kExitOk);
    EXPECT_NE(help.out.find("ablate"), std::string::npos);
}

TEST(Cli, SearchEvalPrintsFourDecimals) {
    fdr::testing::TempDir dir;
    const auto run = (dir / "run.jsonl").string();
    const auto s = cli({"search", "--corpus", fixture("golden").string(), "--store", golden("embeddings.jsonl"),
                        "--config", golden("mmdocir.json"), "--verifier", "mock:" + golden("verifier.jsonl"),
                        "--out", run});
    ASSERT_EQ(s.code, kExitOk) << s.err;
    const auto e = cli({"eval", "--run", run, "--corpus", fixture("golden").string(), "--out",
                        (dir / "report.json").string()});
    ASSERT_EQ(e.code, kExitOk) << e.err;
    EXPECT_EQ(e.out,
              "recall@1 1.0000\nrecall@3 1.0000\nrecall@5 1.0000\nfinal_score 100.0000\n");
    const std::regex line(R"(final_score \d+\.\d{4}\n)");
    EXPECT_TRUE(std::regex_search(e.out, line));
    const auto report = json::parse(fdr::testing::read_file(dir / "report.json"));
    EXPECT_EQ(report.at("final_score").get<double>(), 100.0);
}

TEST(Cli, SearchWithVerificationNeedsVerifier) {
    fdr::testing::TempDir dir;
    const auto s = cli({"search", "--corpus", fixture("golden").string(), "--store", golden("embeddings.jsonl"),
                        "--config", golden("mmdocir.json"), "--out", (dir / "run.jsonl").string()});
    EXPECT_EQ(s.code, kExitData);
}

TEST(Cli, SearchThenEvalEqualsAblate) {
    fdr::testing::TempDir dir;
    const auto variants = eval::load_variants(helps("variants.json"));
    const auto table = (dir / "table.csv").string();
    const auto a = cli({"ablate", "--corpus", fixture("fusion_helps").string(), "--store", helps("embeddings.jsonl"),
                        "--variants", helps("variants.json"), "--out", table, "--trend",
                        (dir / "trend.csv").string()});
    ASSERT_EQ(a.code, kExitOk) << a.err;
    const std::string csv = fdr::testing::read_file(table);

    for (std::size_t i = 0; i < variants.size(); ++i) {
        const auto cfg_path = dir / ("v" + std::to_string(i) + ".json");
        fdr::testing::write_file(cfg_path, pipeline::config_to_json(variants[i].config).dump());
        std::vector<std::string> args{"search", "--corpus", fixture("fusion_helps").string(), "--store",
                                      helps("embeddings.jsonl"), "--config", cfg_path.string(), "--out",
                                      (dir / "run.jsonl").string()};
        if (variants[i].config.verification) {
            args.push_back("--verifier");
            args.push_back("mock:" + helps("verifier_demote.jsonl"));
        }
        ASSERT_EQ(cli(args).code, kExitOk);
        const auto e = cli({"eval", "--run", (dir / "run.jsonl").string(), "--corpus",
                            fixture("fusion_helps").string()});
        const auto pos = e.out.find("final_score ");
        ASSERT_NE(pos, std::string::npos);
        const std::string score = e.out.substr(pos + 12, e.out.find('\n', pos) - pos - 12);
        EXPECT_NE(csv.find(variants[i].name + "," + score + "\n"), std::string::npos)
            << variants[i].name << " " << score << "\n" << csv;
    }
    EXPECT_NE(fdr::testing::read_file(dir / "trend.csv").find("step,variant,score,delta\n1,"), std::string::npos);
}

TEST(Cli, IngestWritesBinaryThatLoadsBack) {
    fdr::testing::TempDir dir;
    const auto out = (dir / "store.fdr1").string();
    const auto r = cli({"ingest", "--embeddings", golden("embeddings.jsonl"), "--out", out});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(fdr::testing::read_file(out).substr(0, 4), "FDR1");
    auto a = store::read_embedding_records(golden("embeddings.jsonl"));
    auto b = store::read_embedding_records(out);
    auto key = [](const store::EmbeddingRecord& x, const store::EmbeddingRecord& y) {
        return std::tie(x.channel, x.item_id) < std::tie(y.channel, y.item_id);
    };
    std::sort(a.begin(), a.end(), key);
    EXPECT_EQ(a, b);

    // Duplicate records across inputs are a data error.
    const auto dup = cli({"ingest", "--embeddings", golden("embeddings.jsonl"), golden("embeddings.jsonl"), "--out",
                          (dir / "dup.fdr1").string()});
    EXPECT_EQ(dup.code, kExitData);
    EXPECT_NE(dup.err.find("DuplicateKey"), std::string::npos);

    fdr::testing::write_file(dir / "zero.jsonl", R"({"item_id":"z","granularity":"page","modality":"image","kind":"single","vectors":[[0,0]]})"
                                                 "\n");
    EXPECT_EQ(cli({"ingest", "--embeddings", (dir / "zero.jsonl").string(), "--out", (dir / "z.fdr1").string()}).code,
              kExitData);
}

TEST(Service, SearchReturnsRunShapedRanking) {
    const auto svc = golden_service(false);
    // Restrict to the ColQwen path through a partial override.
    json override_cfg{{"paths", json::array({pipeline::config_to_json(pipeline::default_config(
                                                                           pipeline::Task::mmdocir))
                                                 .at("paths")[0]})}};
    json body{{"query_id", "q1"}, {"embeddings", golden_query_embeddings("q1")}, {"config_override", override_cfg}};
    const auto reply = svc.handle_search(body.dump());
    ASSERT_EQ(reply.status, 200) << reply.body;
    const auto j = json::parse(reply.body);
    EXPECT_EQ(j.at("query_id"), "q1");
    EXPECT_TRUE(j.at("error").is_null());
    EXPECT_EQ(j.at("ranking").size(), 5u);
    const auto& top = j.at("ranking").at(0);
    EXPECT_EQ(top.at("item_id"), "docA/p1");
    EXPECT_TRUE(top.at("verdict").is_null());
    EXPECT_EQ(std::vector<std::string>({"item_id", "score", "verdict"}),
              [&] {
                  std::vector<std::string> keys;
                  for (auto it = top.begin(); it != top.end(); ++it) keys.push_back(it.key());
                  return keys;
              }());
}

TEST(Service, InlineVectorEqualToCandidateScoresOne) {
    const auto svc = golden_service(false);
    // An ocr_text candidate vector reused as the query for a single-path config.
    const auto cand = store::load_embeddings(std::filesystem::path(golden("embeddings.jsonl")))
                          .get({store::Granularity::ocr_text, store::Modality::text, store::VectorKind::single},
                               ItemId{"docB/p2"});
    auto q = cand;
    q.item_id = ItemId{"adhoc"};
    q.channel = {store::Granularity::query, store::Modality::text, store::VectorKind::single};
    json override_cfg = pipeline::config_to_json(pipeline::default_config(pipeline::Task::mmdocir));
    override_cfg["paths"] = json::array({override_cfg["paths"][1]});
    json body{{"query_id", "adhoc"}, {"embeddings", json::array({store::record_to_json(q)})},
              {"config_override", override_cfg}};
    const auto reply = svc.handle_search(body.dump());
    ASSERT_EQ(reply.status, 200) << reply.body;
    const auto top = json::parse(reply.body).at("ranking").at(0);
    EXPECT_EQ(top.at("item_id"), "docB/p2");
    EXPECT_NEAR(top.at("score").get<double>(), 1.0, 1e-9);
}

TEST(Service, ErrorStatuses) {
    const auto svc = golden_service(false);
    EXPECT_EQ(svc.handle_search("{nope").status, 400);
    EXPECT_EQ(svc.handle_search(R"({"query_id":"q"})").status, 400);

    auto emb = golden_query_embeddings("q1");
    for (auto& e : emb) e["item_id"] = "other";
    EXPECT_EQ(svc.handle_search(json{{"query_id", "q1"}, {"embeddings", emb}}.dump()).status, 400);

    auto wrong_dim = golden_query_embeddings("q1");
    for (auto& e : wrong_dim) {
        for (auto& row : e["vectors"]) row.push_back(0.5);
    }
    EXPECT_EQ(svc.handle_search(json{{"query_id", "q1"}, {"embeddings", wrong_dim}}.dump()).status, 422);

    json override_cfg{{"paths", json::array({{{"label", "cap"},
                                              {"query_channel", "query/text/single"},
                                              {"candidate_channel", "caption/text/single"}}})}};
    const auto unknown = svc.handle_search(
        json{{"query_id", "q1"}, {"embeddings", golden_query_embeddings("q1")}, {"config_override", override_cfg}}
            .dump());
    EXPECT_EQ(unknown.status, 404) << unknown.body;

    // Missing query embeddings for a configured path.
    EXPECT_EQ(svc.handle_search(R"({"query_id":"q1","embeddings":[]})").status, 400);

    const auto health = svc.handle_health();
    EXPECT_EQ(health.status, 200);
    EXPECT_EQ(json::parse(health.body), (json{{"status", "ok"}, {"pages", 6}}));
}

TEST(Service, HttpRoundTripIsStableUnderConcurrency) {
    const auto svc = golden_service(true);
    httplib::Server server;
    svc.mount(server);
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const std::string body = json{{"query_id", "q2"}, {"text", "question q2"}, {"embeddings", golden_query_embeddings("q2")}}.dump();
    auto call = [&] {
        httplib::Client c("127.0.0.1", port);
        const auto res = c.Post("/search", body, "application/json");
        return res ? std::to_string(res->status) + res->body : std::string("no response");
    };
    const std::string first = call();
    std::vector<std::future<std::string>> futures;
    for (int i = 0; i < 8; ++i) futures.push_back(std::async(std::launch::async, call));
    for (auto& f : futures) EXPECT_EQ(f.get(), first);

    httplib::Client c("127.0.0.1", port);
    const auto health = c.Get("/health");
    server.stop();
    t.join();

    ASSERT_EQ(first.substr(0, 3), "200");
    const auto j = json::parse(first.substr(3));
    EXPECT_EQ(j.at("ranking").at(0).at("item_id"), "docA/p3");
    EXPECT_EQ(j.at("ranking").at(0).at("verdict"), "yes");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
}

TEST(ServiceConfigTest, LoadResolvesRelativePaths) {
    fdr::testing::TempDir dir;
    const auto fx = fixture("golden");
    fdr::testing::write_file(dir / "svc.json",
                             json{{"listen_addr", "127.0.0.1:0"},
                                  {"corpus_dir", fx.string()},
                                  {"embedding_files", {(fx / "embeddings.jsonl").string()}},
                                  {"pipeline_config", (fx / "mmdocir.json").string()},
                                  {"verifier_url", "mock:" + (fx / "verifier.jsonl").string()}}
                                 .dump());
    const auto cfg = service::ServiceConfig::load(dir / "svc.json");
    EXPECT_EQ(cfg.embedding_files.size(), 1u);
    EXPECT_NO_THROW(service::SearchService::from_config(cfg));

    fdr::testing::write_file(dir / "bad.json", json{{"corpus_dir", "nowhere"},
                                                    {"embedding_files", json::array()},
                                                    {"pipeline_config", "nope.json"}}
                                                   .dump());
    try {
        service::ServiceConfig::load(dir / "bad.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::MissingFile);
    }
    service::ServiceConfig c = cfg;
    c.listen_addr = "no-port";
    EXPECT_THROW(c.validate(), Error);
}
