#pragma once

// `key = value` configuration documents. `#` starts a comment; blank lines
// are ignored; keys are unique. Lists are comma-separated, and numeric lists
// also accept `start:stop:step` ranges (inclusive).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aesc/error.hpp"

namespace aesc::harness {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

class ConfigDoc {
public:
    ConfigDoc() = default;

    static ConfigDoc parse(std::string_view text, const std::string& origin = "config") {
        ConfigDoc doc;
        doc.origin_ = origin;
        std::istringstream in{std::string(text)};
        std::string line;
        for (std::size_t n = 1; std::getline(in, line); ++n) {
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos) throw UsageError(origin + ":" + std::to_string(n) + ": expected key = value");
            const std::string key = trim(std::string_view(t).substr(0, eq));
            if (key.empty()) throw UsageError(origin + ":" + std::to_string(n) + ": empty key");
            if (doc.values_.count(key)) throw UsageError(origin + ":" + std::to_string(n) + ": duplicate key '" + key + "'");
            doc.values_[key] = trim(std::string_view(t).substr(eq + 1));
        }
        return doc;
    }

    static ConfigDoc load(const std::filesystem::path& path) {
        std::ifstream f(path);
        if (!f) throw UsageError("cannot read config file " + path.string());
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str(), path.string());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    std::string get(const std::string& key, const std::string& fallback) const {
        used_.insert(key);
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        if (!has(key)) return used_.insert(key), fallback;
        return to_double(key, get(key, ""));
    }

    std::size_t get_size(const std::string& key, std::size_t fallback) const {
        if (!has(key)) return used_.insert(key), fallback;
        return to_size(key, get(key, ""));
    }

    bool get_bool(const std::string& key, bool fallback) const {
        if (!has(key)) return used_.insert(key), fallback;
        const std::string v = get(key, "");
        if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
        if (v == "false" || v == "no" || v == "0" || v == "off") return false;
        throw UsageError(origin_ + ": '" + key + "' must be a boolean, got '" + v + "'");
    }

    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const {
        if (!has(key)) return used_.insert(key), fallback;
        std::vector<double> out;
        for (const auto& item : split(get(key, ""), ',')) {
            if (item.empty()) continue;
            const auto parts = split(item, ':');
            if (parts.size() == 1) {
                out.push_back(to_double(key, item));
            } else if (parts.size() == 3) {
                const double a = to_double(key, parts[0]), b = to_double(key, parts[1]), step = to_double(key, parts[2]);
                if (!(step > 0) || b < a) throw UsageError(origin_ + ": bad range '" + item + "' for '" + key + "'");
                const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
                for (std::size_t i = 0; i <= count; ++i) out.push_back(a + double(i) * step);
            } else {
                throw UsageError(origin_ + ": bad list item '" + item + "' for '" + key + "'");
            }
        }
        if (out.empty()) throw UsageError(origin_ + ": '" + key + "' is empty");
        return out;
    }

    std::vector<std::size_t> get_sizes(const std::string& key, const std::vector<std::size_t>& fallback) const {
        if (!has(key)) return used_.insert(key), fallback;
        std::vector<std::size_t> out;
        for (const auto& item : split(get(key, ""), ','))
            if (!item.empty()) out.push_back(to_size(key, item));
        if (out.empty()) throw UsageError(origin_ + ": '" + key + "' is empty");
        return out;
    }

    std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback) const {
        if (!has(key)) return used_.insert(key), fallback;
        std::vector<std::string> out;
        for (const auto& item : split(get(key, ""), ','))
            if (!item.empty()) out.push_back(item);
        return out;
    }

    // Keys present in the document that no getter asked for.
    std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

private:
    double to_double(const std::string& key, const std::string& v) const {
        double out = 0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
        if (r.ec != std::errc{} || r.ptr != v.data() + v.size())
            throw UsageError(origin_ + ": '" + key + "' expects a number, got '" + v + "'");
        return out;
    }

    std::size_t to_size(const std::string& key, const std::string& v) const {
        std::size_t out = 0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
        if (r.ec != std::errc{} || r.ptr != v.data() + v.size())
            throw UsageError(origin_ + ": '" + key + "' expects a non-negative integer, got '" + v + "'");
        return out;
    }

    std::string origin_ = "config";
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

} // namespace aesc::harness
