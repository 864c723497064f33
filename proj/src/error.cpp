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

#include "fdr/error.hpp"

namespace fdr {

std::string_view to_string(Errc code) {
    switch (code) {
        case Errc::MissingFile: return "MissingFile";
        case Errc::ParseError: return "ParseError";
        case Errc::IoError: return "IoError";
        case Errc::DanglingReference: return "DanglingReference";
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::UnknownId: return "UnknownId";
        case Errc::DimMismatch: return "DimMismatch";
        case Errc::NonFiniteValue: return "NonFiniteValue";
        case Errc::DuplicateKey: return "DuplicateKey";
        case Errc::NotFound: return "NotFound";
        case Errc::ZeroVector: return "ZeroVector";
        case Errc::EmptyMatrix: return "EmptyMatrix";
        case Errc::UnknownChannel: return "UnknownChannel";
        case Errc::MissingWeight: return "MissingWeight";
        case Errc::BadTemplate: return "BadTemplate";
        case Errc::ConfigError: return "ConfigError";
        case Errc::UnknownItem: return "UnknownItem";
        case Errc::MissingQueryEmbedding: return "MissingQueryEmbedding";
        case Errc::EmptyRelevantSet: return "EmptyRelevantSet";
        case Errc::MissingGroundTruth: return "MissingGroundTruth";
    }
    return "Unknown";
}

namespace {

std::string format_message(Errc code, const std::string& subject, const std::string& detail,
                           std::optional<std::size_t> line) {
    std::string msg(to_string(code));
    msg += "(";
    msg += subject;
    msg += ")";
    if (line) {
        msg += " at line ";
        msg += std::to_string(*line);
    }
    if (!detail.empty()) {
        msg += ": ";
        msg += detail;
    }
    return msg;
}

}  // namespace

Error::Error(Errc code, std::string subject, std::string detail, std::optional<std::size_t> line)
    : std::runtime_error(format_message(code, subject, detail, line)),
      code_(code),
      subject_(std::move(subject)),
      line_(line) {}

}  // namespace fdr
