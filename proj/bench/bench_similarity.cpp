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

// Serial vs OpenMP score_channel on synthetic channels.
//
//   bench_similarity [items] [dim] [doc_rows] [query_rows] [threads]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include <omp.h>

#include "fdr/embedding_store.hpp"
#include "fdr/similarity.hpp"

using namespace fdr;

namespace {

store::EmbeddingRecord random_record(std::mt19937_64& rng, std::string id, store::Channel c,
                                     std::size_t rows, std::size_t dim) {
    std::normal_distribution<float> dist;
    store::EmbeddingRecord rec{ItemId{std::move(id)}, c, rows, dim, std::vector<float>(rows * dim)};
    for (float& v : rec.values) v = dist(rng);
    return store::l2_normalize(std::move(rec));
}

template <typename Fn>
double best_of(int reps, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void run(const char* name, store::VectorKind kind, std::size_t items, std::size_t dim, std::size_t doc_rows,
         std::size_t query_rows, int threads) {
    std::mt19937_64 rng(7);
    const store::Channel channel{store::Granularity::page, store::Modality::image, kind};
    const std::size_t rows = kind == store::VectorKind::single ? 1 : doc_rows;
    std::vector<store::EmbeddingRecord> recs;
    recs.reserve(items);
    for (std::size_t i = 0; i < items; ++i) {
        recs.push_back(random_record(rng, "d/p" + std::to_string(i), channel, rows, dim));
    }
    const auto st = store::EmbeddingStore::from_records(std::move(recs));
    const auto query = random_record(rng, "q", {store::Granularity::query, store::Modality::text, kind},
                                     kind == store::VectorKind::single ? 1 : query_rows, dim);

    ScoredList serial, parallel;
    const double t_serial = best_of(3, [&] { serial = similarity::score_channel_serial(query, st, channel); });
    const double t_par = best_of(3, [&] {
        parallel = similarity::score_channel(query, st, channel, {.num_threads = threads});
    });
    std::printf("%-8s items=%zu dim=%zu rows=%zu  serial %9.2f ms  omp(%d) %9.2f ms  speedup %.2fx  %s\n", name,
                items, dim, rows, t_serial, threads, t_par, t_serial / t_par,
                serial == parallel ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        char* end = nullptr;
        if (std::strtol(argv[i], &end, 10) <= 0 || *end != '\0') {
            std::fprintf(stderr, "usage: %s [items] [dim] [doc_rows] [query_rows] [threads]\n", argv[0]);
            return 1;
        }
    }
    const std::size_t items = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 20000;
    const std::size_t dim = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 128;
    const std::size_t doc_rows = argc > 3 ? std::strtoul(argv[3], nullptr, 10) : 32;
    const std::size_t query_rows = argc > 4 ? std::strtoul(argv[4], nullptr, 10) : 16;
    const int threads = argc > 5 ? std::atoi(argv[5]) : omp_get_max_threads();

    run("cosine", store::VectorKind::single, items, dim, doc_rows, query_rows, threads);
    run("maxsim", store::VectorKind::multi, std::max<std::size_t>(1, items / 10), dim, doc_rows, query_rows, threads);
    return 0;
}
