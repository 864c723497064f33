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

#include "fdr/service.hpp"

#include <iostream>

#include <httplib.h>

#include "fdr/error.hpp"
#include "jsonl.hpp"

namespace fdr::service {

using detail::json;

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    ServiceConfig c;
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_relative() ? base / fp : fp;
    };
    try {
        const json doc = json::parse(in);
        c.listen_addr = doc.value("listen_addr", c.listen_addr);
        c.corpus_dir = resolve(doc.at("corpus_dir").get<std::string>());
        for (const auto& f : doc.at("embedding_files")) c.embedding_files.push_back(resolve(f.get<std::string>()));
        c.pipeline_config = resolve(doc.at("pipeline_config").get<std::string>());
        c.verifier_url = detail::string_or_empty(doc, "verifier_url");
        if (c.verifier_url.rfind("mock:", 0) == 0) {
            c.verifier_url = "mock:" + resolve(c.verifier_url.substr(5)).string();
        }
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, path.string(), e.what());
    }
    c.validate();
    return c;
}

void ServiceConfig::validate() const {
    auto require = [](const std::filesystem::path& p) {
        if (!std::filesystem::exists(p)) throw Error(Errc::MissingFile, p.string());
    };
    require(corpus_dir);
    for (const auto& f : embedding_files) require(f);
    require(pipeline_config);
    if (verifier_url.rfind("mock:", 0) == 0) require(verifier_url.substr(5));
    if (listen_addr.rfind(':') == std::string::npos) {
        throw Error(Errc::ConfigError, listen_addr, "listen_addr must be host:port");
    }
}

SearchService::SearchService(corpus::Corpus corpus, store::EmbeddingStore store,
                             pipeline::PipelineConfig config,
                             std::shared_ptr<verification::VerifierClient> verifier)
    : corpus_(std::move(corpus)),
      store_(std::move(store)),
      config_(std::move(config)),
      verifier_(std::move(verifier)) {
    config_.validate();
}

SearchService SearchService::from_config(const ServiceConfig& config) {
    config.validate();
    return SearchService(corpus::load_corpus(config.corpus_dir),
                         store::load_embeddings(config.embedding_files),
                         pipeline::load_config(config.pipeline_config),
                         config.verifier_url.empty() ? nullptr
                                                     : verification::make_verifier(config.verifier_url));
}

namespace {

HttpReply error_reply(int status, std::string_view message) {
    return {status, detail::dump_line(json{{"error", message}})};
}

int status_for(Errc code) {
    switch (code) {
        case Errc::UnknownChannel: return 404;
        case Errc::DimMismatch:
        case Errc::ZeroVector:
        case Errc::EmptyMatrix: return 422;
        case Errc::ParseError:
        case Errc::ConfigError:
        case Errc::BadTemplate:
        case Errc::NonFiniteValue:
        case Errc::DuplicateKey:
        case Errc::MissingWeight:
        case Errc::MissingQueryEmbedding: return 400;
        default: return 500;
    }
}

}  // namespace

HttpReply SearchService::handle_search(std::string_view body) const {
    json req;
    try {
        req = json::parse(body);
    } catch (const json::exception& e) {
        return error_reply(400, e.what());
    }
    if (!req.is_object() || !req.contains("query_id") || !req["query_id"].is_string() ||
        !req.contains("embeddings") || !req["embeddings"].is_array()) {
        return error_reply(400, "body needs query_id (string) and embeddings (array)");
    }

    try {
        const ItemId query_id{req["query_id"].get<std::string>()};
        std::vector<store::EmbeddingRecord> records;
        for (const auto& obj : req["embeddings"]) {
            if (!obj.is_object()) return error_reply(400, "embedding entries must be objects");
            auto rec = store::record_from_json(obj);
            if (rec.item_id != query_id) {
                return error_reply(400, "embedding item_id " + rec.item_id.str() + " does not match query_id");
            }
            records.push_back(std::move(rec));
        }
        const auto query_store = store::EmbeddingStore::from_records(std::move(records));

        pipeline::PipelineConfig config = config_;
        if (auto it = req.find("config_override"); it != req.end() && !it->is_null()) {
            json merged = pipeline::config_to_json(config_);
            merged.merge_patch(*it);
            config = pipeline::config_from_json(merged);
        }

        corpus::Query query{query_id, detail::optional_string(req, "text"), std::nullopt, std::nullopt, {}};
        const pipeline::RetrievalContext ctx{corpus_, store_, query_store, verifier_.get()};
        const auto result = pipeline::run_query(query, ctx, config);
        return {200, pipeline::result_to_json(result).dump()};
    } catch (const Error& e) {
        return error_reply(status_for(e.code()), e.what());
    } catch (const json::exception& e) {
        return error_reply(400, e.what());
    } catch (const std::exception& e) {
        return error_reply(500, e.what());
    }
}

HttpReply SearchService::handle_health() const {
    return {200, detail::dump_line(json{{"status", "ok"}, {"pages", corpus_.pages().size()}})};
}

void SearchService::mount(httplib::Server& server) const {
    server.Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
        const HttpReply reply = handle_search(req.body);
        res.status = reply.status;
        res.set_content(reply.body, "application/json");
    });
    server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        const HttpReply reply = handle_health();
        res.status = reply.status;
        res.set_content(reply.body, "application/json");
    });
}

void serve(const ServiceConfig& config) {
    const auto service = SearchService::from_config(config);
    httplib::Server server;
    service.mount(server);
    const auto colon = config.listen_addr.rfind(':');
    const std::string host = config.listen_addr.substr(0, colon);
    const int port = std::stoi(config.listen_addr.substr(colon + 1));
    std::cerr << "fdr: serving " << service.corpus().pages().size() << " pages on " << config.listen_addr
              << '\n';
    if (!server.listen(host, port)) {
        throw Error(Errc::IoError, config.listen_addr, "cannot bind");
    }
}

}  // namespace fdr::service
