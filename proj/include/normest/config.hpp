#pragma once

#include <cctype>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "normest/errors.hpp"

namespace normest {

// Flat key = value configuration record. Values are kept as raw strings;
// arrays are whitespace- or comma-separated. "inf" is accepted wherever a
// real is expected and parses to +infinity.
class flat_config {
public:
    flat_config() = default;

    static flat_config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open config file: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_string(ss.str());
    }

    static flat_config parse_string(const std::string& text) {
        flat_config cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw config_error("config line " + std::to_string(lineno) +
                                   ": expected 'key = value'");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw config_error("config line " + std::to_string(lineno) + ": empty key");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw config_error("missing config key: " + key);
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_real(const std::string& key) const { return parse_real(get_string(key), key); }

    double get_real(const std::string& key, double fallback) const {
        return has(key) ? get_real(key) : fallback;
    }

    long long get_int(const std::string& key) const {
        const std::string s = get_string(key);
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(s, &pos);
            if (pos != s.size()) throw config_error("");
            return v;
        } catch (...) {
            throw config_error("config key '" + key + "': expected integer, got '" + s + "'");
        }
    }

    long long get_int(const std::string& key, long long fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    std::vector<double> get_real_array(const std::string& key) const {
        const std::string s = get_string(key);
        std::vector<double> out;
        for (const std::string& tok : split(s)) out.push_back(parse_real(tok, key));
        if (out.empty()) throw config_error("config key '" + key + "': empty array");
        return out;
    }

    std::vector<long long> get_int_array(const std::string& key) const {
        std::vector<long long> out;
        for (double v : get_real_array(key)) out.push_back(static_cast<long long>(v));
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

    // "inf" (any case) -> +infinity; otherwise strtod with full-token check.
    static double parse_real(const std::string& token, const std::string& key) {
        std::string t = trim(token);
        std::string lower = t;
        for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (lower == "inf" || lower == "infinity")
            return std::numeric_limits<double>::infinity();
        try {
            std::size_t pos = 0;
            const double v = std::stod(t, &pos);
            if (pos != t.size()) throw config_error("");
            return v;
        } catch (...) {
            throw config_error("config key '" + key + "': expected real or 'inf', got '" + t + "'");
        }
    }

    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s) {
            if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
                if (!cur.empty()) out.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!cur.empty()) out.push_back(cur);
        return out;
    }

    static std::string trim(const std::string& s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

private:
    std::map<std::string, std::string> values_;
};

} // namespace normest
