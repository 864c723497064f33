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

#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "fdr/embedding_store.hpp"
#include "fdr/error.hpp"
#include "test_util.hpp"

using namespace fdr;
using namespace fdr::store;

namespace {

const Channel kPageImage{Granularity::page, Modality::image, VectorKind::single};
const Channel kPageMulti{Granularity::page, Modality::image, VectorKind::multi};

EmbeddingRecord rec(const std::string& id, Channel c, std::size_t rows, std::size_t dim, std::vector<float> v) {
    return EmbeddingRecord{ItemId{id}, c, rows, dim, std::move(v)};
}

template <typename Fn>
Errc error_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return Errc::IoError;
}

std::vector<EmbeddingRecord> random_records(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<EmbeddingRecord> out;
    for (int i = 0; i < 20; ++i) {
        out.push_back(fdr::testing::random_record(rng, "d/p" + std::to_string(i), kPageImage, 1, 7));
        out.push_back(fdr::testing::random_record(rng, "d/p" + std::to_string(i), kPageMulti, 1 + i % 4, 5));
    }
    // Values that stress text formatting.
    out.push_back(rec("edge/\xc3\xa9", kPageImage, 1, 4,
                      {0.1f, std::numeric_limits<float>::denorm_min(), -std::numeric_limits<float>::max(), 1e-30f}));
    return out;
}

}  // namespace

TEST(EmbeddingStore, ChannelOfThreeRecords) {
    const auto st = EmbeddingStore::from_records(
        {rec("d/p3", kPageImage, 1, 2, {0, 2}), rec("d/p1", kPageImage, 1, 2, {3, 4}),
         rec("d/p2", kPageImage, 1, 2, {1, 0})});
    const auto& block = st.channel(kPageImage);
    ASSERT_EQ(block.size(), 3u);
    EXPECT_EQ(block.dim(), 2u);
    EXPECT_EQ(block.id(0), ItemId{"d/p1"});
    EXPECT_EQ(block.id(2), ItemId{"d/p3"});
    const auto got = st.get(kPageImage, ItemId{"d/p1"});
    EXPECT_FLOAT_EQ(got.values[0], 0.6f);
    EXPECT_FLOAT_EQ(got.values[1], 0.8f);
    EXPECT_EQ(error_of([&] { st.get(kPageImage, ItemId{"d/p9"}); }), Errc::NotFound);
    EXPECT_EQ(error_of([&] { st.channel(kPageMulti); }), Errc::UnknownChannel);
    EXPECT_FALSE(st.find(kPageImage, ItemId{"d/p9"}).has_value());
}

TEST(EmbeddingStore, RejectsBadRecords) {
    EXPECT_EQ(error_of([] {
                  EmbeddingStore::from_records({rec("a", kPageImage, 1, 2, {1, 0}), rec("a", kPageImage, 1, 2, {0, 1})});
              }),
              Errc::DuplicateKey);
    // The same id on another channel is fine.
    EXPECT_NO_THROW(EmbeddingStore::from_records(
        {rec("a", kPageImage, 1, 2, {1, 0}), rec("a", kPageMulti, 2, 2, {0, 1, 1, 0})}));
    EXPECT_EQ(error_of([] {
                  EmbeddingStore::from_records({rec("a", kPageImage, 1, 2, {1, 0}), rec("b", kPageImage, 1, 3, {0, 1, 0})});
              }),
              Errc::DimMismatch);
    EXPECT_EQ(error_of([] { check_record(rec("a", kPageImage, 1, 2, {NAN, 0})); }), Errc::NonFiniteValue);
    EXPECT_EQ(error_of([] { check_record(rec("a", kPageImage, 1, 2, {INFINITY, 0})); }), Errc::NonFiniteValue);
    EXPECT_EQ(error_of([] { check_record(rec("a", kPageImage, 2, 1, {1, 1})); }), Errc::DimMismatch);
    EXPECT_EQ(error_of([] { check_record(rec("a", kPageMulti, 2, 2, {1, 1, 1})); }), Errc::DimMismatch);
    EXPECT_EQ(error_of([] { EmbeddingStore::from_records({rec("z", kPageImage, 1, 2, {0, 0})}); }), Errc::ZeroVector);
}

TEST(EmbeddingStore, L2Normalize) {
    const auto n = l2_normalize(rec("a", kPageImage, 1, 2, {3, 4}));
    EXPECT_EQ(n.values, (std::vector<float>{0.6f, 0.8f}));
    EXPECT_EQ(error_of([] { l2_normalize(rec("a", kPageImage, 1, 2, {0, 0})); }), Errc::ZeroVector);
    // A zero row anywhere in a multi-vector record is rejected.
    EXPECT_EQ(error_of([] { l2_normalize(rec("a", kPageMulti, 2, 2, {1, 0, 0, 0})); }), Errc::ZeroVector);

    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto r = fdr::testing::random_record(rng, "x", kPageMulti, 1 + i % 5, 1 + i % 64);
        const auto once = l2_normalize(r);
        for (std::size_t row = 0; row < once.rows; ++row) {
            double sq = 0;
            for (float v : once.row(row)) sq += double(v) * v;
            EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-6);
        }
        const auto twice = l2_normalize(once);
        for (std::size_t j = 0; j < once.values.size(); ++j) {
            EXPECT_NEAR(twice.values[j], once.values[j], 1e-6);
        }
    }
}

TEST(EmbeddingStore, LoadWithoutNormalizationKeepsValues) {
    const auto st = EmbeddingStore::from_records({rec("a", kPageImage, 1, 2, {3, 4})}, {.normalize = false});
    EXPECT_EQ(st.get(kPageImage, ItemId{"a"}).values, (std::vector<float>{3, 4}));
}

class FormatRoundTrip : public ::testing::TestWithParam<FileFormat> {};

TEST_P(FormatRoundTrip, IsBitExact) {
    fdr::testing::TempDir dir;
    const auto records = random_records(17);
    const auto path = dir / "emb.out";
    write_embeddings(records, path, GetParam());
    const auto back = read_embedding_records(path);
    ASSERT_EQ(back.size(), records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        EXPECT_EQ(back[i].item_id, records[i].item_id);
        EXPECT_EQ(back[i].channel, records[i].channel);
        ASSERT_EQ(back[i].values.size(), records[i].values.size());
        for (std::size_t j = 0; j < records[i].values.size(); ++j) {
            EXPECT_EQ(std::bit_cast<std::uint32_t>(back[i].values[j]),
                      std::bit_cast<std::uint32_t>(records[i].values[j]));
        }
    }
    // Rewriting what was read gives identical bytes.
    const auto path2 = dir / "emb2.out";
    write_embeddings(back, path2, GetParam());
    EXPECT_EQ(fdr::testing::read_file(path), fdr::testing::read_file(path2));
}

TEST_P(FormatRoundTrip, EmptyFile) {
    fdr::testing::TempDir dir;
    write_embeddings({}, dir / "empty", GetParam());
    EXPECT_TRUE(read_embedding_records(dir / "empty").empty());
    EXPECT_EQ(load_embeddings(dir / "empty").record_count(), 0u);
}

INSTANTIATE_TEST_SUITE_P(Formats, FormatRoundTrip, ::testing::Values(FileFormat::jsonl, FileFormat::binary));

TEST(EmbeddingStore, BinaryLayoutIsLittleEndian) {
    fdr::testing::TempDir dir;
    write_embeddings(std::vector<EmbeddingRecord>{rec("ab", kPageMulti, 1, 1, {1.0f})}, dir / "b", FileFormat::binary);
    const std::string bytes = fdr::testing::read_file(dir / "b");
    const std::string expected("FDR1"
                               "\x01\x00\x00\x00"
                               "\x02\x00"
                               "ab"
                               "\x00\x00\x01"
                               "\x01\x00\x00\x00"
                               "\x01\x00\x00\x00"
                               "\x00\x00\x80\x3f",
                               4 + 4 + 2 + 2 + 3 + 4 + 4 + 4);
    EXPECT_EQ(bytes, expected);
}

TEST(EmbeddingStore, CorruptInput) {
    fdr::testing::TempDir dir;
    write_embeddings(random_records(1), dir / "b", FileFormat::binary);
    std::string bytes = fdr::testing::read_file(dir / "b");
    fdr::testing::write_file(dir / "trunc", bytes.substr(0, bytes.size() - 3));
    EXPECT_EQ(error_of([&] { read_embedding_records(dir / "trunc"); }), Errc::ParseError);
    fdr::testing::write_file(dir / "trail", bytes + "x");
    EXPECT_EQ(error_of([&] { read_embedding_records(dir / "trail"); }), Errc::ParseError);

    fdr::testing::write_file(dir / "j", "{\"item_id\":\"a\",\"granularity\":\"page\",\"modality\":\"image\","
                                        "\"kind\":\"single\",\"vectors\":[[1,0]]}\n{broken\n");
    try {
        read_embedding_records(dir / "j");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ParseError);
        EXPECT_EQ(e.line(), std::optional<std::size_t>(2));
    }
    fdr::testing::write_file(dir / "g", "{\"item_id\":\"a\",\"granularity\":\"paragraph\",\"modality\":\"image\","
                                        "\"kind\":\"single\",\"vectors\":[[1,0]]}\n");
    EXPECT_EQ(error_of([&] { read_embedding_records(dir / "g"); }), Errc::ParseError);
    EXPECT_EQ(error_of([&] { read_embedding_records(dir / "missing"); }), Errc::MissingFile);
}

TEST(EmbeddingStore, JsonRecordShape) {
    const auto j = record_to_json(rec("d/p1", kPageMulti, 2, 2, {1, 0, 0, 1}));
    EXPECT_EQ(j.at("item_id"), "d/p1");
    EXPECT_EQ(j.at("granularity"), "page");
    EXPECT_EQ(j.at("modality"), "image");
    EXPECT_EQ(j.at("kind"), "multi");
    EXPECT_EQ(j.at("vectors").size(), 2u);
    EXPECT_EQ(record_from_json(j), rec("d/p1", kPageMulti, 2, 2, {1, 0, 0, 1}));
    EXPECT_EQ(to_string(kPageMulti), "page/image/multi");
}

TEST(EmbeddingStore, GoldenFixtureLoads) {
    const auto st = load_embeddings(fdr::testing::fixture("golden") / "embeddings.jsonl");
    EXPECT_TRUE(st.has_channel(kPageMulti));
    EXPECT_EQ(st.channel(kPageMulti).size(), 6u);
    EXPECT_EQ(st.channel({Granularity::region, Modality::image, VectorKind::single}).size(), 18u);
}
