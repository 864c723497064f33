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
#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fdr/error.hpp"

namespace fdr::detail {

using nlohmann::json;

inline std::ifstream open_input(const std::filesystem::path& path,
                                std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw Error(Errc::MissingFile, path.string());
    return in;
}

/// Calls `fn(object, line_no)` for every non-blank line. Parse failures and
/// anything `fn` rejects with json type errors become ParseError(line).
template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
    auto in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(Errc::ParseError, path.string(), e.what(), line_no);
        }
        if (!obj.is_object()) {
            throw Error(Errc::ParseError, path.string(), "expected a JSON object", line_no);
        }
        try {
            fn(obj, line_no);
        } catch (const json::exception& e) {
            throw Error(Errc::ParseError, path.string(), e.what(), line_no);
        }
    }
}

inline std::optional<std::string> optional_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

inline std::string string_or_empty(const json& obj, const char* key) {
    return optional_string(obj, key).value_or(std::string{});
}

inline std::string dump_line(const json& obj) {
    return obj.dump(-1, ' ', false, json::error_handler_t::strict);
}

}  // namespace fdr::detail
