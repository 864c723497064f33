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

#include <compare>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>

namespace fdr {

/// Case-sensitive identifier of a page, region or query. Pages use the
/// hierarchical form `doc/page`, regions `doc/page/region`. Ordering is
/// bytewise on the underlying string.
class ItemId {
public:
    ItemId() = default;
    explicit ItemId(std::string value) : value_(std::move(value)) {}
    explicit ItemId(std::string_view value) : value_(value) {}
    explicit ItemId(const char* value) : value_(value) {}

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    /// Everything before the last '/', or an empty id when there is none.
    ItemId parent() const;

    friend bool operator==(const ItemId&, const ItemId&) = default;
    friend std::strong_ordering operator<=>(const ItemId& a, const ItemId& b) {
        return a.value_.compare(b.value_) <=> 0;
    }

    friend std::ostream& operator<<(std::ostream& os, const ItemId& id) { return os << id.value_; }

private:
    std::string value_;
};

inline ItemId ItemId::parent() const {
    const auto pos = value_.rfind('/');
    if (pos == std::string::npos) return ItemId{};
    return ItemId{value_.substr(0, pos)};
}

}  // namespace fdr

template <>
struct std::hash<fdr::ItemId> {
    std::size_t operator()(const fdr::ItemId& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};
