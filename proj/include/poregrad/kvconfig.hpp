#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace poregrad {

/// Flat "key = value" text configuration. '#' starts a comment; blank lines
/// are ignored. Keys are unique.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& entries() const { return values_; }

    /// Throws ParameterError naming the first key not in `known`.
    void require_known(const std::vector<std::string>& known) const;

    std::string to_string() const;

private:
    std::map<std::string, std::string> values_;
    std::string origin_;
};

std::vector<double> parse_double_list(const std::string& text);

}  // namespace poregrad
