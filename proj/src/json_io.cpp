#include "mforge/json_io.hpp"

#include <cmath>

#include "mforge/error.hpp"

namespace mforge {

std::string canonical_document(const Json& j) { return j.dump(2) + "\n"; }

std::string canonical_line(const Json& j) { return j.dump(); }

Json parse_json(std::string_view bytes) {
    try {
        return Json::parse(bytes.begin(), bytes.end());
    } catch (const Json::parse_error& e) {
        throw Error("PARSE_ERROR", e.what());
    }
}

std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

ObjectReader::ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error("TYPE_ERROR", "expected object", path_.empty() ? "$" : path_);
}

const Json& ObjectReader::required(const std::string& key) {
    const auto it = j_.find(key);
    if (it == j_.end()) throw Error("MISSING_FIELD", "required field missing", path_of(key));
    seen_.insert(key);
    return *it;
}

const Json* ObjectReader::optional(const std::string& key) {
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) {
        if (it != j_.end()) seen_.insert(key);
        return nullptr;
    }
    seen_.insert(key);
    return &*it;
}

std::string ObjectReader::path_of(const std::string& key) const { return join_path(path_, key); }

void ObjectReader::finish() const {
    for (const auto& [key, value] : j_.items()) {
        if (!seen_.count(key)) throw Error("UNKNOWN_FIELD", "unknown field", path_of(key));
    }
}

double as_double(const Json& j, const std::string& path) {
    if (!j.is_number()) throw Error("TYPE_ERROR", "expected number", path);
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw Error("TYPE_ERROR", "expected finite number", path);
    return v;
}

std::string as_string(const Json& j, const std::string& path) {
    if (!j.is_string()) throw Error("TYPE_ERROR", "expected string", path);
    return j.get<std::string>();
}

bool as_bool(const Json& j, const std::string& path) {
    if (!j.is_boolean()) throw Error("TYPE_ERROR", "expected boolean", path);
    return j.get<bool>();
}

std::uint64_t as_u64(const Json& j, const std::string& path) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        throw Error("TYPE_ERROR", "expected unsigned integer", path);
    }
    return j.get<std::uint64_t>();
}

std::int64_t as_i64(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) throw Error("TYPE_ERROR", "expected integer", path);
    return j.get<std::int64_t>();
}

const Json& as_array(const Json& j, const std::string& path) {
    if (!j.is_array()) throw Error("TYPE_ERROR", "expected array", path);
    return j;
}

}  // namespace mforge
