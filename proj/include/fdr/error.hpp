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

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fdr {

enum class Errc {
    MissingFile,
    ParseError,
    IoError,
    DanglingReference,
    DuplicateId,
    UnknownId,
    DimMismatch,
    NonFiniteValue,
    DuplicateKey,
    NotFound,
    ZeroVector,
    EmptyMatrix,
    UnknownChannel,
    MissingWeight,
    BadTemplate,
    ConfigError,
    UnknownItem,
    MissingQueryEmbedding,
    EmptyRelevantSet,
    MissingGroundTruth,
};

std::string_view to_string(Errc code);

/// Every failure raised by the engine. `subject` names the offending id,
/// label or path; `line` is set for parse errors (1-based).
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string subject, std::string detail = {},
          std::optional<std::size_t> line = std::nullopt);

    Errc code() const noexcept { return code_; }
    const std::string& subject() const noexcept { return subject_; }
    std::optional<std::size_t> line() const noexcept { return line_; }

private:
    Errc code_;
    std::string subject_;
    std::optional<std::size_t> line_;
};

}  // namespace fdr
