#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fusu {

/// Ordered `key=value` document used for patch metadata, run configs and split info.
/// Blank lines and lines starting with '#' are skipped on parse.
class KeyValueText {
public:
    static KeyValueText parse(const std::string& text, const std::string& source = "<text>");
    static KeyValueText load(const std::filesystem::path& path);

    void save(const std::filesystem::path& path) const;
    std::string str() const;

    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void set(const std::string& key, long long value);
    void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
    void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
    void set(const std::string& key, const std::vector<int>& values);
    void set(const std::string& key, const std::vector<double>& values);

    bool contains(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> find(const std::string& key) const;

    // Typed accessors throw std::runtime_error naming the key and source on failure.
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;

    const std::vector<std::string>& keys() const { return order_; }
    const std::string& source() const { return source_; }

private:
    std::map<std::string, std::string> values_;
    std::vector<std::string> order_;
    std::string source_ = "<text>";
};

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);
bool parse_bool(const std::string& text, const std::string& what);

}  // namespace fusu
