#pragma once

#include <stdexcept>
#include <string>

namespace mforge {

/// Exception carrying a stable machine-readable code (e.g. "NO_PATH") and,
/// for document errors, the path of the offending field ("kozs[2].window").
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, std::string path = {})
        : std::runtime_error(path.empty() ? code + ": " + message
                                          : code + " at " + path + ": " + message),
          code_(std::move(code)),
          path_(std::move(path)) {}

    const std::string& code() const noexcept { return code_; }
    const std::string& path() const noexcept { return path_; }

private:
    std::string code_;
    std::string path_;
};

}  // namespace mforge
