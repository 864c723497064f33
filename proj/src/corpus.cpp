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

#include "fdr/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

#include "fdr/error.hpp"
#include "jsonl.hpp"

namespace fdr::corpus {

using detail::json;

std::string_view to_string(IssueKind kind) {
    switch (kind) {
        case IssueKind::BlankId: return "BlankId";
        case IssueKind::IdHierarchy: return "IdHierarchy";
        case IssueKind::RegionPrefixMismatch: return "RegionPrefixMismatch";
        case IssueKind::InvalidBBox: return "InvalidBBox";
        case IssueKind::NegativeCoordinate: return "NegativeCoordinate";
        case IssueKind::EmptyQuery: return "EmptyQuery";
        case IssueKind::DanglingReference: return "DanglingReference";
    }
    return "Unknown";
}

bool operator==(const BBox& a, const BBox& b) {
    return a.x0 == b.x0 && a.y0 == b.y0 && a.x1 == b.x1 && a.y1 == b.y1;
}

bool operator==(const Page& a, const Page& b) {
    return std::tie(a.id, a.doc_id, a.image_ref, a.ocr_text, a.caption) ==
           std::tie(b.id, b.doc_id, b.image_ref, b.ocr_text, b.caption);
}

bool operator==(const Region& a, const Region& b) {
    return a.id == b.id && a.page_id == b.page_id && a.bbox == b.bbox &&
           a.image_ref == b.image_ref && a.ocr_text == b.ocr_text;
}

bool operator==(const Query& a, const Query& b) {
    return std::tie(a.id, a.text, a.image_ref, a.instruction, a.ground_truth) ==
           std::tie(b.id, b.text, b.image_ref, b.instruction, b.ground_truth);
}

bool operator==(const Corpus& a, const Corpus& b) {
    return a.manifest_version_ == b.manifest_version_ && a.pages_ == b.pages_ &&
           a.regions_ == b.regions_ && a.queries_ == b.queries_;
}

namespace {

template <typename T>
std::unordered_map<ItemId, std::size_t> index_sorted(std::vector<T>& items) {
    std::sort(items.begin(), items.end(), [](const T& a, const T& b) { return a.id < b.id; });
    std::unordered_map<ItemId, std::size_t> index;
    index.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!index.emplace(items[i].id, i).second) {
            throw Error(Errc::DuplicateId, items[i].id.str());
        }
    }
    return index;
}

bool is_blank(const ItemId& id) {
    return id.str().find_first_not_of(" \t\r\n\f\v") == std::string::npos;
}

}  // namespace

Corpus Corpus::build(std::vector<Page> pages, std::vector<Region> regions,
                     std::vector<Query> queries, int manifest_version) {
    Corpus c;
    c.manifest_version_ = manifest_version;
    c.pages_ = std::move(pages);
    c.regions_ = std::move(regions);
    c.queries_ = std::move(queries);
    c.page_index_ = index_sorted(c.pages_);
    c.region_index_ = index_sorted(c.regions_);
    c.query_index_ = index_sorted(c.queries_);

    c.page_regions_.assign(c.pages_.size(), {});
    for (std::size_t r = 0; r < c.regions_.size(); ++r) {
        const auto it = c.page_index_.find(c.regions_[r].page_id);
        if (it == c.page_index_.end()) {
            throw Error(Errc::DanglingReference, c.regions_[r].page_id.str(),
                        "region " + c.regions_[r].id.str() + " names an unknown page");
        }
        c.page_regions_[it->second].push_back(r);
    }
    for (auto& members : c.page_regions_) {
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            const Region& ra = c.regions_[a];
            const Region& rb = c.regions_[b];
            return std::tie(ra.bbox.y0, ra.bbox.x0, ra.id) < std::tie(rb.bbox.y0, rb.bbox.x0, rb.id);
        });
    }
    return c;
}

const Page* Corpus::find_page(const ItemId& id) const {
    const auto it = page_index_.find(id);
    return it == page_index_.end() ? nullptr : &pages_[it->second];
}

const Region* Corpus::find_region(const ItemId& id) const {
    const auto it = region_index_.find(id);
    return it == region_index_.end() ? nullptr : &regions_[it->second];
}

const Query* Corpus::find_query(const ItemId& id) const {
    const auto it = query_index_.find(id);
    return it == query_index_.end() ? nullptr : &queries_[it->second];
}

const Page& Corpus::page(const ItemId& id) const {
    if (const Page* p = find_page(id)) return *p;
    throw Error(Errc::UnknownId, id.str());
}

const Region& Corpus::region(const ItemId& id) const {
    if (const Region* r = find_region(id)) return *r;
    throw Error(Errc::UnknownId, id.str());
}

std::vector<Region> Corpus::regions_of_page(const ItemId& page_id) const {
    const auto it = page_index_.find(page_id);
    if (it == page_index_.end()) throw Error(Errc::UnknownId, page_id.str());
    std::vector<Region> out;
    out.reserve(page_regions_[it->second].size());
    for (std::size_t r : page_regions_[it->second]) out.push_back(regions_[r]);
    return out;
}

std::vector<Issue> validate_corpus(const Corpus& corpus) {
    std::vector<Issue> issues;
    auto report = [&](const ItemId& id, IssueKind kind, std::string detail) {
        issues.push_back(Issue{id, kind, std::move(detail)});
    };

    for (const Page& p : corpus.pages()) {
        if (is_blank(p.id)) report(p.id, IssueKind::BlankId, "page id is blank");
        if (is_blank(p.doc_id)) report(p.id, IssueKind::BlankId, "doc id is blank");
        if (p.id.parent() != p.doc_id) {
            report(p.id, IssueKind::IdHierarchy, "page id is not of the form " + p.doc_id.str() + "/<page>");
        }
    }
    for (const Region& r : corpus.regions()) {
        if (is_blank(r.id)) report(r.id, IssueKind::BlankId, "region id is blank");
        if (r.id.parent() != r.page_id) {
            report(r.id, IssueKind::RegionPrefixMismatch,
                   "region id prefix does not name page " + r.page_id.str());
        }
        const BBox& b = r.bbox;
        if (!(b.x0 < b.x1) || !(b.y0 < b.y1)) {
            report(r.id, IssueKind::InvalidBBox, "bbox requires x0 < x1 and y0 < y1");
        }
        if (b.x0 < 0 || b.y0 < 0 || b.x1 < 0 || b.y1 < 0) {
            report(r.id, IssueKind::NegativeCoordinate, "bbox coordinates must be non-negative");
        }
    }
    for (const Query& q : corpus.queries()) {
        if (is_blank(q.id)) report(q.id, IssueKind::BlankId, "query id is blank");
        if (!q.text && !q.image_ref) {
            report(q.id, IssueKind::EmptyQuery, "query has neither text nor image_ref");
        }
        for (const ItemId& gt : q.ground_truth) {
            if (!corpus.find_page(gt) && !corpus.find_region(gt)) {
                report(q.id, IssueKind::DanglingReference, "ground truth " + gt.str() + " does not resolve");
            }
        }
    }
    return issues;
}

// ---------------------------------------------------------------------------
// Manifest I/O

namespace {

ItemId required_id(const json& obj, const char* key) {
    return ItemId{obj.at(key).get<std::string>()};
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    auto in = detail::open_input(manifest_path);
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, manifest_path.string(), e.what());
    }

    int version = 0;
    std::filesystem::path pages_path, regions_path, queries_path;
    try {
        version = manifest.at("version").get<int>();
        pages_path = dir / manifest.at("pages").get<std::string>();
        regions_path = dir / manifest.at("regions").get<std::string>();
        queries_path = dir / manifest.at("queries").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, manifest_path.string(), e.what());
    }

    std::vector<Page> pages;
    detail::for_each_jsonl(pages_path, [&](const json& o, std::size_t) {
        pages.push_back(Page{required_id(o, "id"), required_id(o, "doc_id"),
                             detail::optional_string(o, "image_ref"),
                             detail::string_or_empty(o, "ocr_text"),
                             detail::string_or_empty(o, "caption")});
    });

    std::vector<Region> regions;
    detail::for_each_jsonl(regions_path, [&](const json& o, std::size_t line) {
        const auto& bb = o.at("bbox");
        if (!bb.is_array() || bb.size() != 4) {
            throw Error(Errc::ParseError, regions_path.string(), "bbox must have 4 numbers", line);
        }
        regions.push_back(Region{required_id(o, "id"), required_id(o, "page_id"),
                                 BBox{bb[0].get<double>(), bb[1].get<double>(),
                                      bb[2].get<double>(), bb[3].get<double>()},
                                 detail::optional_string(o, "image_ref"),
                                 detail::optional_string(o, "ocr_text")});
    });

    return Corpus::build(std::move(pages), std::move(regions), load_queries(queries_path), version);
}

std::vector<Query> load_queries(const std::filesystem::path& path) {
    std::vector<Query> queries;
    detail::for_each_jsonl(path, [&](const json& o, std::size_t) {
        Query q{required_id(o, "id"), detail::optional_string(o, "text"),
                detail::optional_string(o, "image_ref"), detail::optional_string(o, "instruction"),
                {}};
        if (auto it = o.find("ground_truth"); it != o.end() && !it->is_null()) {
            for (const auto& g : *it) q.ground_truth.emplace_back(g.get<std::string>());
        }
        queries.push_back(std::move(q));
    });
    return queries;
}

namespace {

json nullable(const std::optional<std::string>& s) {
    return s ? json(*s) : json(nullptr);
}

void write_lines(const std::filesystem::path& path, const std::vector<json>& lines) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, path.string(), "cannot open for writing");
    for (const auto& l : lines) out << detail::dump_line(l) << '\n';
    if (!out) throw Error(Errc::IoError, path.string(), "write failed");
}

}  // namespace

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json manifest = {{"version", corpus.manifest_version()},
                     {"pages", "pages.jsonl"},
                     {"regions", "regions.jsonl"},
                     {"queries", "queries.jsonl"}};
    write_lines(dir / "manifest.json", {manifest});

    std::vector<json> lines;
    for (const Page& p : corpus.pages()) {
        lines.push_back({{"id", p.id.str()},
                         {"doc_id", p.doc_id.str()},
                         {"image_ref", nullable(p.image_ref)},
                         {"ocr_text", p.ocr_text},
                         {"caption", p.caption}});
    }
    write_lines(dir / "pages.jsonl", lines);

    lines.clear();
    for (const Region& r : corpus.regions()) {
        json o = {{"id", r.id.str()},
                  {"page_id", r.page_id.str()},
                  {"bbox", {r.bbox.x0, r.bbox.y0, r.bbox.x1, r.bbox.y1}},
                  {"image_ref", nullable(r.image_ref)}};
        if (r.ocr_text) o["ocr_text"] = *r.ocr_text;
        lines.push_back(std::move(o));
    }
    write_lines(dir / "regions.jsonl", lines);

    lines.clear();
    for (const Query& q : corpus.queries()) {
        json gt = json::array();
        for (const ItemId& g : q.ground_truth) gt.push_back(g.str());
        lines.push_back({{"id", q.id.str()},
                         {"text", nullable(q.text)},
                         {"image_ref", nullable(q.image_ref)},
                         {"instruction", nullable(q.instruction)},
                         {"ground_truth", std::move(gt)}});
    }
    write_lines(dir / "queries.jsonl", lines);
}

}  // namespace fdr::corpus
