#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace atlas {

/// Error raised by any pipeline stage. `module` names the stage that failed
/// ("ingest", "matrix", ...), `code` is a short machine-readable tag.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string code, const std::string& message)
        : std::runtime_error(module + ": " + message),
          module_(std::move(module)), code_(std::move(code)) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& code() const noexcept { return code_; }

private:
    std::string module_;
    std::string code_;
};

/// Ordered set of string codes (countries or products). Codes are kept sorted
/// lexicographically so index assignment is stable across runs.
class Registry {
public:
    Registry() = default;

    explicit Registry(std::vector<std::string> codes) : codes_(std::move(codes)) {
        std::sort(codes_.begin(), codes_.end());
        codes_.erase(std::unique(codes_.begin(), codes_.end()), codes_.end());
    }

    std::size_t size() const noexcept { return codes_.size(); }
    bool empty() const noexcept { return codes_.empty(); }
    const std::string& operator[](std::size_t i) const { return codes_[i]; }
    const std::vector<std::string>& codes() const noexcept { return codes_; }

    std::optional<std::size_t> index_of(std::string_view code) const {
        auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
        if (it == codes_.end() || *it != code) return std::nullopt;
        return static_cast<std::size_t>(it - codes_.begin());
    }

    bool contains(std::string_view code) const { return index_of(code).has_value(); }

    auto begin() const { return codes_.begin(); }
    auto end() const { return codes_.end(); }

    friend bool operator==(const Registry&, const Registry&) = default;

private:
    std::vector<std::string> codes_;
};

/// Codes removed by a transform.
struct DropReport {
    std::vector<std::string> countries;
    std::vector<std::string> products;

    bool empty() const { return countries.empty() && products.empty(); }
};

}  // namespace atlas
