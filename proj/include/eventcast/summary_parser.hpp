#pragma once

#include "eventcast/error.hpp"
#include "eventcast/text.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eventcast {

inline constexpr std::size_t kDefaultFieldCount = 8;

/// Parsed semantic attributes of one forecast date, normalized.
struct SummaryFields {
    std::vector<std::string> fields;

    bool operator==(const SummaryFields&) const = default;
};

/// Trim, lowercase, and collapse whitespace runs to one space.
inline std::string normalize_field(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : text::trim(s)) {
        if (text::is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

/// Contents of the first well-formed `<result>...</result>` block: the one
/// whose closing tag comes first, opened by the nearest preceding `<result>`.
inline std::optional<std::string_view> find_result_block(std::string_view raw) {
    constexpr std::string_view open_tag = "<result>";
    constexpr std::string_view close_tag = "</result>";
    std::size_t close = raw.find(close_tag);
    while (close != std::string_view::npos) {
        auto open = raw.substr(0, close).rfind(open_tag);
        if (open != std::string_view::npos)
            return raw.substr(open + open_tag.size(), close - open - open_tag.size());
        close = raw.find(close_tag, close + 1);
    }
    return std::nullopt;
}

/// Splits the first result block on ';' and normalizes each field.
inline SummaryFields extract_summary(std::string_view raw, std::size_t expected_k = kDefaultFieldCount) {
    if (expected_k == 0) throw DataError("expected field count must be at least 1");
    auto block = find_result_block(raw);
    if (!block) throw MissingResultBlock(std::string(raw));
    SummaryFields s;
    for (const auto& part : text::split(*block, ';')) s.fields.push_back(normalize_field(part));
    if (s.fields.size() != expected_k) throw FieldCountMismatch(s.fields.size(), expected_k);
    for (std::size_t i = 0; i < s.fields.size(); ++i)
        if (s.fields[i].empty()) throw EmptyField(i + 1);
    return s;
}

} // namespace eventcast
