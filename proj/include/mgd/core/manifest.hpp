#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mgd {

/// Ordered plain-text `key = value` record used for checkpoint and experiment manifests.
class Manifest {
public:
    void set(const std::string& key, std::string value);
    void set(const std::string& key, const char* value) { set(key, std::string(value)); }
    void set(const std::string& key, double value);
    void set(const std::string& key, long long value);
    void set(const std::string& key, unsigned long long value);
    void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
    void set(const std::string& key, std::size_t value) { set(key, static_cast<unsigned long long>(value)); }
    void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

    std::optional<std::string> find(const std::string& key) const;
    /// Throws std::runtime_error naming the key when absent.
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    std::string to_string() const;
    static Manifest parse(const std::string& text);

    void save(const std::filesystem::path& path) const;
    static Manifest load(const std::filesystem::path& path);

    friend bool operator==(const Manifest&, const Manifest&) = default;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

} // namespace mgd
