#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pcatdyn/types.hpp"

namespace pcatdyn {

inline std::string fmt_g(double v, int prec = 17) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

// Flat key = value entries grouped under [section] headers. Sections may
// repeat (one [compartment] block per phantom compartment).
struct config_section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    bool has(const std::string& key) const {
        for (auto& [k, v] : entries)
            if (k == key) return true;
        return false;
    }
    const std::string& get(const std::string& key) const {
        for (auto& [k, v] : entries)
            if (k == key) return v;
        throw config_error("missing key '" + key + "' in section [" + name + "]");
    }
    std::string get_or(const std::string& key, const std::string& fallback) const {
        return has(key) ? get(key) : fallback;
    }
    double get_double(const std::string& key) const {
        try {
            std::size_t pos = 0;
            double v = std::stod(get(key), &pos);
            if (pos != get(key).size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw config_error("key '" + key + "' in [" + name + "] is not a number");
        }
    }
    double get_double_or(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }
    long get_int(const std::string& key) const {
        try {
            std::size_t pos = 0;
            long v = std::stol(get(key), &pos);
            if (pos != get(key).size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw config_error("key '" + key + "' in [" + name + "] is not an integer");
        }
    }
    long get_int_or(const std::string& key, long fallback) const {
        return has(key) ? get_int(key) : fallback;
    }
    std::vector<double> get_doubles(const std::string& key, std::size_t expected = 0) const {
        auto toks = split_ws(get(key));
        std::vector<double> out;
        for (auto& t : toks) {
            try {
                out.push_back(std::stod(t));
            } catch (const std::exception&) {
                throw config_error("key '" + key + "' in [" + name + "] has non-numeric token");
            }
        }
        if (expected && out.size() != expected)
            throw config_error("key '" + key + "' in [" + name + "] needs " +
                               std::to_string(expected) + " values");
        return out;
    }
    void set(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }
    void set(const std::string& key, double value) { set(key, fmt_g(value)); }
};

struct config_doc {
    std::vector<config_section> sections;

    static config_doc parse(const std::string& text) {
        config_doc doc;
        doc.sections.push_back({"", {}});
        std::istringstream is(text);
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw config_error("line " + std::to_string(lineno) + ": unterminated section");
                doc.sections.push_back({trim(t.substr(1, t.size() - 2)), {}});
                continue;
            }
            std::size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw config_error("line " + std::to_string(lineno) + ": expected key = value");
            doc.sections.back().entries.emplace_back(trim(t.substr(0, eq)),
                                                     trim(t.substr(eq + 1)));
        }
        return doc;
    }

    static config_doc load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open config file '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    const config_section* find(const std::string& name) const {
        for (auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }
    const config_section& section(const std::string& name) const {
        if (auto* s = find(name)) return *s;
        throw config_error("missing section [" + name + "]");
    }
    std::vector<const config_section*> all(const std::string& name) const {
        std::vector<const config_section*> out;
        for (auto& s : sections)
            if (s.name == name) out.push_back(&s);
        return out;
    }

    std::string to_text() const {
        std::ostringstream os;
        for (auto& s : sections) {
            if (s.name.empty() && s.entries.empty()) continue;
            if (!s.name.empty()) os << "[" << s.name << "]\n";
            for (auto& [k, v] : s.entries) os << k << " = " << v << "\n";
            os << "\n";
        }
        return os.str();
    }
};

}  // namespace pcatdyn
