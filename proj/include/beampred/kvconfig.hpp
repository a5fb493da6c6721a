// SPDX-License-Identifier: Apache-2.0
//
// Human-readable key-value configuration files.
//
//     # comment
//     low.carrier_frequency_hz = 3.5e9
//     ricean_k_low_db = 0, 4, 8
//
// Keys are unique; later duplicates are rejected. Values are kept as text and
// converted on access.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <type_traits>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace beampred
{

class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

inline std::string trim(const std::string &s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string &key, const std::string &text)
{
    // std::from_chars for double is available in libstdc++ 11
    double v = 0.0;
    const auto t = trim(text);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
    {
        if (t == "inf")
            return std::numeric_limits<double>::infinity();
        throw ConfigError("config key '" + key + "': not a number: '" + text + "'");
    }
    return v;
}

inline long long parse_int(const std::string &key, const std::string &text)
{
    long long v = 0;
    const auto t = trim(text);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError("config key '" + key + "': not an integer: '" + text + "'");
    return v;
}

inline bool parse_bool(const std::string &key, const std::string &text)
{
    const auto t = trim(text);
    if (t == "true" || t == "1")
        return true;
    if (t == "false" || t == "0")
        return false;
    throw ConfigError("config key '" + key + "': not a boolean: '" + text + "'");
}

inline std::vector<double> parse_double_list(const std::string &key, const std::string &text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_double(key, item));
    if (out.empty())
        throw ConfigError("config key '" + key + "': empty list");
    return out;
}

// Shortest round-trip representation, so that written configs reload exactly.
inline std::string format_double(double v)
{
    if (std::isinf(v))
        return "inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::string format_double_list(const std::vector<double> &v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        if (i)
            s += ", ";
        s += format_double(v[i]);
    }
    return s;
}

class KeyValueFile
{
  public:
    static KeyValueFile parse(const std::string &text)
    {
        KeyValueFile kv;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line))
        {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            line = trim(line);
            if (line.empty())
                continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
            const auto key = trim(line.substr(0, eq));
            const auto value = trim(line.substr(eq + 1));
            if (key.empty())
                throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
            if (!kv.values_.emplace(key, value).second)
                throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
        return kv;
    }

    static KeyValueFile load(const std::string &path)
    {
        std::ifstream f(path);
        if (!f)
            throw ConfigError("cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str());
    }

    bool has(const std::string &key) const { return values_.count(key) != 0; }

    // Returns the value and marks the key as consumed.
    const std::string *take(const std::string &key)
    {
        auto it = values_.find(key);
        if (it == values_.end())
            return nullptr;
        consumed_.push_back(key);
        return &it->second;
    }

    void read(const std::string &key, double &out)
    {
        if (auto v = take(key))
            out = parse_double(key, *v);
    }
    void read(const std::string &key, bool &out)
    {
        if (auto v = take(key))
            out = parse_bool(key, *v);
    }
    void read(const std::string &key, std::vector<double> &out)
    {
        if (auto v = take(key))
            out = parse_double_list(key, *v);
    }
    template <typename Int>
        requires std::is_integral_v<Int>
    void read(const std::string &key, Int &out)
    {
        if (auto v = take(key))
        {
            const auto x = parse_int(key, *v);
            if (std::is_unsigned_v<Int> && x < 0)
                throw ConfigError("config key '" + key + "': must be non-negative");
            out = static_cast<Int>(x);
        }
    }
    void read(const std::string &key, std::string &out)
    {
        if (auto v = take(key))
            out = *v;
    }

    std::vector<std::string> unconsumed() const
    {
        std::vector<std::string> out;
        for (const auto &[k, v] : values_)
            if (std::find(consumed_.begin(), consumed_.end(), k) == consumed_.end())
                out.push_back(k);
        return out;
    }

    void reject_unknown() const
    {
        const auto rest = unconsumed();
        if (!rest.empty())
            throw ConfigError("unknown config key '" + rest.front() + "'");
    }

  private:
    std::map<std::string, std::string> values_;
    std::vector<std::string> consumed_;
};

} // namespace beampred
