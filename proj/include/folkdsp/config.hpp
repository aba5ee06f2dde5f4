#pragma once

// Run configuration. Every parameter resolves from, in order: the command-line
// flag, the FOLKDSP_<KEY> environment variable, the TOML config file, the
// built-in default. The resolved snapshot is written beside each run's outputs.
//
// The TOML reader covers the subset a flat config needs: comments, [section]
// headers, key = value with basic strings, integers, floats, booleans and
// one-line arrays of those.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "folkdsp/csv.hpp"
#include "folkdsp/error.hpp"

namespace folkdsp::config {

/// Dotted key ("train.seed") to raw value text; strings unquoted, arrays comma-joined.
using Table = std::map<std::string, std::string>;

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

/// Underscores and dashes are interchangeable in keys.
inline std::string normalize_key(std::string_view k) {
    std::string out(k);
    std::replace(out.begin(), out.end(), '_', '-');
    return out;
}

inline bool bare_key(std::string_view k) {
    return !k.empty() && std::all_of(k.begin(), k.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-' || c == '.';
    });
}

// Parses one scalar at the front of `s`, consuming it.
inline std::string scalar(std::string_view& s, const std::string& where) {
    s = trim(s);
    if (s.empty()) throw ConfigError(where + ": missing value");
    if (s.front() == '"') {
        std::string out;
        std::size_t i = 1;
        for (; i < s.size() && s[i] != '"'; ++i) {
            if (s[i] != '\\') {
                out += s[i];
                continue;
            }
            if (++i == s.size()) break;
            switch (s[i]) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: throw ConfigError(where + ": unsupported escape \\" + std::string(1, s[i]));
            }
        }
        if (i >= s.size()) throw ConfigError(where + ": unterminated string");
        s.remove_prefix(i + 1);
        return out;
    }
    if (s.front() == '\'') {
        const auto end = s.find('\'', 1);
        if (end == std::string_view::npos) throw ConfigError(where + ": unterminated string");
        std::string out(s.substr(1, end - 1));
        s.remove_prefix(end + 1);
        return out;
    }
    std::size_t n = 0;
    while (n < s.size() && s[n] != ',' && s[n] != ']' && s[n] != '#' && !std::isspace(static_cast<unsigned char>(s[n])))
        ++n;
    std::string tok(s.substr(0, n));
    s.remove_prefix(n);
    std::erase(tok, '_');
    if (tok != "true" && tok != "false" && !csv::parse_double(tok))
        throw ConfigError(where + ": unsupported value '" + tok + "'");
    return tok;
}

inline void expect_end(std::string_view rest, const std::string& where) {
    rest = trim(rest);
    if (!rest.empty() && rest.front() != '#') throw ConfigError(where + ": trailing characters");
}

}  // namespace detail

inline Table parse_toml(std::string_view text, const std::string& origin = "config") {
    Table table;
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        const std::string where = origin + ":" + std::to_string(line_no);
        std::string_view line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;

        if (line.front() == '[') {
            const auto close = line.find(']');
            if (close == std::string_view::npos || line.starts_with("[["))
                throw ConfigError(where + ": malformed table header");
            const auto name = detail::trim(line.substr(1, close - 1));
            if (!detail::bare_key(name)) throw ConfigError(where + ": bad table name");
            detail::expect_end(line.substr(close + 1), where);
            section = detail::normalize_key(name);
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
        const auto key = detail::trim(line.substr(0, eq));
        if (!detail::bare_key(key)) throw ConfigError(where + ": bad key '" + std::string(key) + "'");
        std::string_view rest = detail::trim(line.substr(eq + 1));

        std::string value;
        if (!rest.empty() && rest.front() == '[') {
            rest.remove_prefix(1);
            std::vector<std::string> items;
            for (;;) {
                rest = detail::trim(rest);
                if (!rest.empty() && rest.front() == ']') break;
                items.push_back(detail::scalar(rest, where));
                rest = detail::trim(rest);
                if (!rest.empty() && rest.front() == ',') rest.remove_prefix(1);
                else if (rest.empty() || rest.front() != ']') throw ConfigError(where + ": malformed array");
            }
            rest.remove_prefix(1);
            for (std::size_t i = 0; i < items.size(); ++i) value += (i ? "," : "") + items[i];
        } else {
            value = detail::scalar(rest, where);
        }
        detail::expect_end(rest, where);

        const std::string full = section.empty() ? detail::normalize_key(key) : section + "." + detail::normalize_key(key);
        if (!table.emplace(full, value).second) throw ConfigError(where + ": duplicate key '" + full + "'");
    }
    return table;
}

inline Table load_toml(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_toml(buf.str(), path.string());
}

enum class Source { Default, File, Env, Flag };

inline const char* source_name(Source s) {
    switch (s) {
        case Source::Flag: return "flag";
        case Source::Env: return "env";
        case Source::File: return "file";
        default: return "default";
    }
}

/// "n-estimators" -> "FOLKDSP_N_ESTIMATORS".
inline std::string env_name(std::string_view key) {
    std::string out = "FOLKDSP_";
    for (char c : key) out += (c == '-' || c == '.') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

class RunConfig {
public:
    explicit RunConfig(std::string command, Table file = {}, EnvLookup env = process_env)
        : command_(std::move(command)), file_(std::move(file)), env_(std::move(env)) {}

    const std::string& command() const noexcept { return command_; }

    /// Raw text for `key`; file lookup tries "<command>.<key>" before "<key>".
    std::pair<std::string, Source> raw(const std::string& key, const std::optional<std::string>& flag,
                                       const std::string& fallback) const {
        if (flag) return {*flag, Source::Flag};
        if (auto v = env_(env_name(key))) return {*v, Source::Env};
        if (auto it = file_.find(command_ + "." + key); it != file_.end()) return {it->second, Source::File};
        if (auto it = file_.find(key); it != file_.end()) return {it->second, Source::File};
        return {fallback, Source::Default};
    }

    std::string get_string(const std::string& key, const std::optional<std::string>& flag, const std::string& fallback) {
        auto [v, src] = raw(key, flag, fallback);
        record(key, v, src);
        return v;
    }

    /// Empty string means unset; recorded as null.
    std::optional<std::string> get_optional(const std::string& key, const std::optional<std::string>& flag) {
        auto [v, src] = raw(key, flag, "");
        if (v.empty()) {
            record(key, nullptr, src);
            return std::nullopt;
        }
        record(key, v, src);
        return v;
    }

    double get_double(const std::string& key, const std::optional<std::string>& flag, double fallback) {
        auto [v, src] = raw(key, flag, csv::format_double(fallback));
        const auto d = csv::parse_double(v);
        if (!d) throw bad(key, v, src, "a number");
        record(key, *d, src);
        return *d;
    }

    std::optional<double> get_optional_double(const std::string& key, const std::optional<std::string>& flag) {
        auto [v, src] = raw(key, flag, "");
        if (v.empty()) {
            record(key, nullptr, src);
            return std::nullopt;
        }
        const auto d = csv::parse_double(v);
        if (!d) throw bad(key, v, src, "a number");
        record(key, *d, src);
        return *d;
    }

    long long get_int(const std::string& key, const std::optional<std::string>& flag, long long fallback) {
        auto [v, src] = raw(key, flag, std::to_string(fallback));
        const auto i = csv::parse_int(v);
        if (!i) throw bad(key, v, src, "an integer");
        record(key, *i, src);
        return *i;
    }

    std::size_t get_count(const std::string& key, const std::optional<std::string>& flag, std::size_t fallback,
                          std::size_t min_value = 0) {
        const auto i = get_int(key, flag, static_cast<long long>(fallback));
        if (i < static_cast<long long>(min_value))
            throw ConfigError(key + " must be >= " + std::to_string(min_value) + ", got " + std::to_string(i));
        return static_cast<std::size_t>(i);
    }

    bool get_bool(const std::string& key, const std::optional<std::string>& flag, bool fallback) {
        auto [v, src] = raw(key, flag, fallback ? "true" : "false");
        std::string lower = v;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        bool out;
        if (lower == "true" || lower == "1" || lower == "yes") out = true;
        else if (lower == "false" || lower == "0" || lower == "no") out = false;
        else throw bad(key, v, src, "a boolean");
        record(key, out, src);
        return out;
    }

    /// Comma-separated list of non-negative integers.
    std::vector<std::size_t> get_counts(const std::string& key, const std::optional<std::string>& flag,
                                        const std::vector<std::size_t>& fallback) {
        std::string def;
        for (std::size_t i = 0; i < fallback.size(); ++i) def += (i ? "," : "") + std::to_string(fallback[i]);
        auto [v, src] = raw(key, flag, def);
        std::vector<std::size_t> out;
        std::istringstream in(v);
        for (std::string item; std::getline(in, item, ',');) {
            const auto i = csv::parse_int(detail::trim(item));
            if (!i || *i < 0) throw bad(key, v, src, "a comma-separated list of counts");
            out.push_back(static_cast<std::size_t>(*i));
        }
        if (out.empty()) throw bad(key, v, src, "a non-empty list");
        record(key, out, src);
        return out;
    }

    /// Records a value that is not resolved through the layers (paths, seeds fixed by the caller).
    void note(const std::string& key, nlohmann::json value) { record(key, std::move(value), Source::Flag); }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["command"] = command_;
        j["values"] = values_;
        j["sources"] = sources_;
        return j;
    }

    void write(const std::filesystem::path& path) const {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << to_json().dump(2) << '\n';
    }

private:
    void record(const std::string& key, nlohmann::json value, Source src) {
        values_[key] = std::move(value);
        sources_[key] = source_name(src);
    }

    ConfigError bad(const std::string& key, const std::string& v, Source src, const char* expected) const {
        std::string origin = source_name(src);
        if (src == Source::Env) origin += " " + env_name(key);
        return ConfigError(key + " (" + origin + "): expected " + expected + ", got '" + v + "'");
    }

    std::string command_;
    Table file_;
    EnvLookup env_;
    nlohmann::json values_ = nlohmann::json::object();
    nlohmann::json sources_ = nlohmann::json::object();
};

}  // namespace folkdsp::config
