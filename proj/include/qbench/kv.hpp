/**
 * @file kv.hpp
 * @brief Flat `key = value` text documents.
 *
 * Used for model checkpoints, split manifests and the run configuration.
 * Keys keep insertion order; '#' starts a comment line. Reals are written
 * with 17 significant digits so a round trip is exact.
 */
#pragma once

#include "qbench/errors.hpp"

#include <charconv>
#include <cstdint>
#include <type_traits>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace qbench {

inline std::string format_real(double v) {
    // shortest text that round-trips
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_real(std::string_view s, std::string_view what = "value") {
    std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size())
        throw IngestionError("cannot parse '" + tmp + "' as a real for " + std::string(what));
    return v;
}

inline long long parse_int(std::string_view s, std::string_view what = "value") {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw IngestionError("cannot parse '" + std::string(s) + "' as an integer for " + std::string(what));
    return v;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

class KeyValueDoc {
public:
    bool contains(std::string_view key) const { return find(key) != nullptr; }

    void set(std::string key, std::string value) {
        if (auto* v = find_mut(key)) *v = std::move(value);
        else entries_.emplace_back(std::move(key), std::move(value));
    }
    void set(std::string key, const char* value) { set(std::move(key), std::string(value)); }
    void set(std::string key, double value) { set(std::move(key), format_real(value)); }
    void set(std::string key, int value) { set(std::move(key), std::to_string(value)); }
    void set(std::string key, long long value) { set(std::move(key), std::to_string(value)); }
    void set(std::string key, unsigned long value) { set(std::move(key), std::to_string(value)); }
    void set(std::string key, unsigned long long value) { set(std::move(key), std::to_string(value)); }
    void set(std::string key, bool value) { set(std::move(key), std::string(value ? "true" : "false")); }

    template <class T>
    void set_list(std::string key, std::span<const T> values) {
        std::string s;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) s += ' ';
            if constexpr (std::is_floating_point_v<T>) s += format_real(static_cast<double>(values[i]));
            else s += std::to_string(values[i]);
        }
        set(std::move(key), std::move(s));
    }

    const std::string& at(std::string_view key) const {
        if (const auto* v = find(key)) return *v;
        throw IngestionError("missing key '" + std::string(key) + "'");
    }
    std::string get(std::string_view key, std::string fallback) const {
        const auto* v = find(key);
        return v ? *v : fallback;
    }
    double get_real(std::string_view key) const { return parse_real(at(key), key); }
    double get_real(std::string_view key, double fallback) const { return contains(key) ? get_real(key) : fallback; }
    long long get_int(std::string_view key) const { return parse_int(at(key), key); }
    long long get_int(std::string_view key, long long fallback) const { return contains(key) ? get_int(key) : fallback; }
    std::uint64_t get_u64(std::string_view key) const {
        const auto& s = at(key);
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            throw IngestionError("cannot parse '" + s + "' as an unsigned integer for " + std::string(key));
        return v;
    }
    bool get_bool(std::string_view key) const {
        const auto& v = at(key);
        if (v == "true" || v == "1" || v == "True") return true;
        if (v == "false" || v == "0" || v == "False") return false;
        throw IngestionError("key '" + std::string(key) + "': expected a boolean, got '" + v + "'");
    }
    bool get_bool(std::string_view key, bool fallback) const { return contains(key) ? get_bool(key) : fallback; }

    std::vector<double> get_reals(std::string_view key) const {
        std::vector<double> out;
        std::istringstream is(at(key));
        std::string tok;
        while (is >> tok) out.push_back(parse_real(tok, key));
        return out;
    }
    std::vector<long long> get_ints(std::string_view key) const {
        std::vector<long long> out;
        std::istringstream is(at(key));
        std::string tok;
        while (is >> tok) out.push_back(parse_int(tok, key));
        return out;
    }

    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

    std::string to_string() const {
        std::string out;
        for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
        return out;
    }

    static KeyValueDoc parse(std::string_view text) {
        KeyValueDoc doc;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            auto nl = text.find('\n', pos);
            if (nl == std::string_view::npos) nl = text.size();
            const std::string line = trim(text.substr(pos, nl - pos));
            pos = nl + 1;
            ++line_no;
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw IngestionError("line " + std::to_string(line_no) + ": expected 'key = value'");
            doc.set(trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
        }
        return doc;
    }

    static KeyValueDoc load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw IoError("cannot write '" + path + "'");
        out << to_string();
        if (!out) throw IoError("write failed for '" + path + "'");
    }

private:
    const std::string* find(std::string_view key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return &v;
        return nullptr;
    }
    std::string* find_mut(std::string_view key) {
        for (auto& [k, v] : entries_)
            if (k == key) return &v;
        return nullptr;
    }

    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace qbench
