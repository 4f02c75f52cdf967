#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace synergy {

enum class AttrType { Int, String };

// std::monostate marks an absent cell.
using Value = std::variant<std::monostate, std::int64_t, std::string>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

inline bool has_type(const Value& v, AttrType type) {
    return type == AttrType::Int ? std::holds_alternative<std::int64_t>(v)
                                 : std::holds_alternative<std::string>(v);
}

inline std::optional<AttrType> type_of(const Value& v) {
    if (std::holds_alternative<std::int64_t>(v)) return AttrType::Int;
    if (std::holds_alternative<std::string>(v)) return AttrType::String;
    return std::nullopt;
}

inline std::string_view type_name(AttrType type) {
    return type == AttrType::Int ? "int" : "string";
}

// Three-way comparison between two values of the same type. Returns nullopt
// when either side is absent or the types differ.
inline std::optional<std::strong_ordering> compare_values(const Value& a, const Value& b) {
    if (auto* x = std::get_if<std::int64_t>(&a)) {
        if (auto* y = std::get_if<std::int64_t>(&b)) return *x <=> *y;
        return std::nullopt;
    }
    if (auto* x = std::get_if<std::string>(&a)) {
        if (auto* y = std::get_if<std::string>(&b)) return x->compare(*y) <=> 0;
    }
    return std::nullopt;
}

// Plain display form (no quoting).
inline std::string display(const Value& v) {
    if (auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    if (auto* s = std::get_if<std::string>(&v)) return *s;
    return "NULL";
}

// SQL literal form: strings single-quoted with '' escaping.
inline std::string sql_literal(const Value& v) {
    if (auto* s = std::get_if<std::string>(&v)) {
        std::string out = "'";
        for (char c : *s) {
            if (c == '\'') out += '\'';
            out += c;
        }
        out += '\'';
        return out;
    }
    return display(v);
}

}  // namespace synergy
