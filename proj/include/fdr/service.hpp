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
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "fdr/corpus.hpp"
#include "fdr/embedding_store.hpp"
#include "fdr/pipeline.hpp"
#include "fdr/verification.hpp"

namespace httplib {
class Server;
}

namespace fdr::service {

struct ServiceConfig {
    std::string listen_addr = "127.0.0.1:8080";
    std::filesystem::path corpus_dir;
    std::vector<std::filesystem::path> embedding_files;
    std::filesystem::path pipeline_config;
    std::string verifier_url;  // http URL, "mock:<fixture>", or empty

    /// Relative paths resolve against the config file's directory.
    static ServiceConfig load(const std::filesystem::path& path);
    /// Throws MissingFile for any path that does not exist.
    void validate() const;
};

struct HttpReply {
    int status = 200;
    std::string body;
};

/// Read-only search front end. Everything is loaded once; handlers may run
/// concurrently.
class SearchService {
public:
    SearchService(corpus::Corpus corpus, store::EmbeddingStore store, pipeline::PipelineConfig config,
                  std::shared_ptr<verification::VerifierClient> verifier);

    static SearchService from_config(const ServiceConfig& config);

    /// `POST /search` body: {"query_id", "embeddings": [record...],
    /// "config_override": partial pipeline config | null, "text"?: str}.
    /// 400 malformed, 404 unknown channel, 422 dimension problems.
    HttpReply handle_search(std::string_view body) const;
    /// `GET /health`: {"status": "ok", "pages": N}.
    HttpReply handle_health() const;

    /// Registers both routes on `server`.
    void mount(httplib::Server& server) const;

    const corpus::Corpus& corpus() const noexcept { return corpus_; }

private:
    corpus::Corpus corpus_;
    store::EmbeddingStore store_;
    pipeline::PipelineConfig config_;
    std::shared_ptr<verification::VerifierClient> verifier_;
};

/// Blocks serving `listen_addr` until the process is stopped.
void serve(const ServiceConfig& config);

}  // namespace fdr::service
