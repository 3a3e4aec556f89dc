#include "fusu/kv_text.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fusu {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    if (trim(s).empty()) {
        return parts;
    }
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        parts.push_back(trim(item));
    }
    return parts;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    double value = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw std::runtime_error(what + ": expected a number, got '" + text + "'");
    }
    return value;
}

long long parse_int(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    long long value = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw std::runtime_error(what + ": expected an integer, got '" + text + "'");
    }
    return value;
}

bool parse_bool(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") {
        return true;
    }
    if (t == "false" || t == "0" || t == "no" || t == "off") {
        return false;
    }
    throw std::runtime_error(what + ": expected a boolean, got '" + text + "'");
}

KeyValueText KeyValueText::parse(const std::string& text, const std::string& source) {
    KeyValueText kv;
    kv.source_ = source;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(source + ":" + std::to_string(line_no) + ": missing '=' in '" +
                                     t + "'");
        }
        kv.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return kv;
}

KeyValueText KeyValueText::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

void KeyValueText::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << str();
}

std::string KeyValueText::str() const {
    std::string s;
    for (const auto& key : order_) {
        s += key;
        s += '=';
        s += values_.at(key);
        s += '\n';
    }
    return s;
}

void KeyValueText::set(const std::string& key, const std::string& value) {
    if (values_.count(key) == 0) {
        order_.push_back(key);
    }
    values_[key] = value;
}

void KeyValueText::set(const std::string& key, double value) { set(key, format_double(value)); }

void KeyValueText::set(const std::string& key, long long value) {
    set(key, std::to_string(value));
}

void KeyValueText::set(const std::string& key, const std::vector<int>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        s += (i ? "," : "") + std::to_string(values[i]);
    }
    set(key, s);
}

void KeyValueText::set(const std::string& key, const std::vector<double>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        s += (i ? "," : "") + format_double(values[i]);
    }
    set(key, s);
}

std::optional<std::string> KeyValueText::find(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const std::string& KeyValueText::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw std::runtime_error(source_ + ": missing key '" + key + "'");
    }
    return it->second;
}

double KeyValueText::get_double(const std::string& key) const {
    return parse_double(get(key), source_ + ": " + key);
}

long long KeyValueText::get_int(const std::string& key) const {
    return parse_int(get(key), source_ + ": " + key);
}

bool KeyValueText::get_bool(const std::string& key) const {
    return parse_bool(get(key), source_ + ": " + key);
}

std::vector<int> KeyValueText::get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (const auto& part : split_list(get(key))) {
        out.push_back(static_cast<int>(parse_int(part, source_ + ": " + key)));
    }
    return out;
}

std::vector<double> KeyValueText::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& part : split_list(get(key))) {
        out.push_back(parse_double(part, source_ + ": " + key));
    }
    return out;
}

}  // namespace fusu
