#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

namespace mforge {

using Json = nlohmann::json;

/// Canonical document bytes: sorted keys, two-space indent, trailing newline.
std::string canonical_document(const Json& j);
/// Canonical single-line form (no whitespace), without newline.
std::string canonical_line(const Json& j);
/// Parses UTF-8 JSON; throws PARSE_ERROR on malformed input.
Json parse_json(std::string_view bytes);

/// Strict object field access: tracks consumed keys so that `finish` can
/// reject unknown fields. Errors carry the dotted path of the offending field.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path);

    const Json& required(const std::string& key);
    const Json* optional(const std::string& key);
    std::string path_of(const std::string& key) const;
    void finish() const;

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::string join_path(const std::string& base, const std::string& key);
std::string index_path(const std::string& base, std::size_t i);

double as_double(const Json& j, const std::string& path);
std::string as_string(const Json& j, const std::string& path);
bool as_bool(const Json& j, const std::string& path);
std::uint64_t as_u64(const Json& j, const std::string& path);
std::int64_t as_i64(const Json& j, const std::string& path);
const Json& as_array(const Json& j, const std::string& path);

}  // namespace mforge
