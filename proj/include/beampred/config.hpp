#pragma once

// Flat `key = value` configuration text: one entry per line, `#` starts a comment.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "beampred/error.hpp"

namespace beampred {

namespace detail {
inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}
}  // namespace detail

class KeyValueConfig {
   public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::string_view text) {
        KeyValueConfig cfg;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            auto nl = text.find('\n', pos);
            if (nl == std::string_view::npos) nl = text.size();
            ++line_no;
            std::string_view line = text.substr(pos, nl - pos);
            pos = nl + 1;
            if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            const std::string stripped = detail::trim(line);
            if (stripped.empty()) continue;
            const auto eq = stripped.find('=');
            if (eq == std::string::npos) throw ParseError("expected `key = value`", line_no);
            std::string key = detail::trim(std::string_view(stripped).substr(0, eq));
            std::string value = detail::trim(std::string_view(stripped).substr(eq + 1));
            if (key.empty()) throw ParseError("empty key", line_no);
            if (cfg.values_.contains(key)) throw ParseError("duplicate key `" + key + "`", line_no);
            cfg.values_[key] = std::move(value);
        }
        return cfg;
    }

    static KeyValueConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    /// Applies a `key=value` override.
    void apply_override(std::string_view assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string_view::npos) throw ConfigError("override `" + std::string(assignment) + "` is not key=value");
        std::string key = detail::trim(assignment.substr(0, eq));
        if (key.empty()) throw ConfigError("override has an empty key");
        values_[key] = detail::trim(assignment.substr(eq + 1));
    }

    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    bool has(const std::string& key) const { return values_.contains(key); }
    const std::map<std::string, std::string>& entries() const { return values_; }

    /// Throws on any key not in `known`.
    void require_known(const std::set<std::string>& known) const {
        for (const auto& [k, v] : values_)
            if (!known.contains(k)) throw ConfigError("unknown config key `" + k + "`");
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string require_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing config key `" + key + "`");
        return it->second;
    }

    template <typename T>
    T get(const std::string& key, T fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return convert<T>(key, it->second);
    }

    template <typename T>
    std::vector<T> get_list(const std::string& key, std::vector<T> fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<T> out;
        std::string_view rest = it->second;
        while (!rest.empty()) {
            auto comma = rest.find(',');
            const std::string item = detail::trim(rest.substr(0, comma));
            if (!item.empty()) out.push_back(convert<T>(key, item));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        return out;
    }

    /// Canonical sorted `key=value` lines; input to the config hash.
    std::string canonical_text() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
        return out;
    }

    std::uint64_t hash() const { return detail::fnv1a64(canonical_text()); }

   private:
    template <typename T>
    static T convert(const std::string& key, const std::string& text) {
        if constexpr (std::is_same_v<T, std::string>) {
            return text;
        } else if constexpr (std::is_same_v<T, bool>) {
            if (text == "true" || text == "1" || text == "yes") return true;
            if (text == "false" || text == "0" || text == "no") return false;
            throw ConfigError("key `" + key + "`: expected boolean, got `" + text + "`");
        } else {
            T value{};
            const char* first = text.data();
            const char* last = text.data() + text.size();
            auto [ptr, ec] = std::from_chars(first, last, value);
            if (ec != std::errc() || ptr != last) throw ConfigError("key `" + key + "`: cannot parse `" + text + "`");
            return value;
        }
    }

    std::map<std::string, std::string> values_;
};

}  // namespace beampred
