#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "freeknot/errors.hpp"

namespace freeknot {

/// Flat `key = value` configuration; `#` starts a comment, lists are
/// comma-separated. Later assignments and CLI flags override.
class flat_config {
public:
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback = "") const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    long get_int(const std::string& key, long fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : std::stol(it->second);
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : std::stod(it->second);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return it->second == "1" || it->second == "true" || it->second == "yes";
    }

    std::vector<std::string> get_list(const std::string& key) const {
        std::vector<std::string> out;
        auto it = values_.find(key);
        if (it == values_.end()) return out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto b = item.find_first_not_of(" \t");
            const auto e = item.find_last_not_of(" \t");
            if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
        }
        return out;
    }

    std::vector<int> get_int_list(const std::string& key) const {
        std::vector<int> out;
        for (const auto& s : get_list(key)) out.push_back(std::stoi(s));
        return out;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& s : get_list(key)) out.push_back(std::stod(s));
        return out;
    }

    static flat_config parse(std::istream& is) {
        flat_config cfg;
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto b = line.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw io_error("config line " + std::to_string(lineno) + ": expected key = value");
            auto trim = [](std::string s) {
                const auto x = s.find_first_not_of(" \t\r");
                const auto y = s.find_last_not_of(" \t\r");
                return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            if (key.empty())
                throw io_error("config line " + std::to_string(lineno) + ": empty key");
            cfg.set(key, trim(line.substr(eq + 1)));
        }
        return cfg;
    }

private:
    std::map<std::string, std::string> values_;
};

} // namespace freeknot
