#pragma once

// Flat `key = value` run configuration. Expression values are double-quoted;
// numeric values are bare. Unknown keys are hard errors so typos cannot
// silently fall back to defaults. `#` starts a comment.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "blowup/errors.hpp"
#include "blowup/expr.hpp"
#include "blowup/io.hpp"
#include "blowup/problem.hpp"

namespace blowup {

struct RunConfig {
    ProblemSpec spec;
    double tol = 1e-10;        // ODE integrator tolerance
    std::string output_dir;    // run directory root ("" = derive from config name)

    // Raw expression text, kept for lossless re-serialization.
    std::string h_text, f_text, g_text;

    std::string resolved_text() const {
        std::ostringstream out;
        out << "n = " << spec.n << "\n";
        out << "h = \"" << h_text << "\"\n";
        out << "f = \"" << f_text << "\"\n";
        if (!g_text.empty()) out << "g = \"" << g_text << "\"\n";
        out << "r0 = " << format_double(spec.r0) << "\n";
        out << "s0 = " << format_double(spec.s0) << "\n";
        out << "quad_tol = " << format_double(spec.quad_tol) << "\n";
        if (spec.R_big > 0.0) out << "R_big = " << format_double(spec.R_big) << "\n";
        out << "tol = " << format_double(tol) << "\n";
        if (!output_dir.empty()) out << "output_dir = " << output_dir << "\n";
        return out.str();
    }
};

namespace detail {

inline std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': '" + value + "' is not a number");
    }
    if (used != value.size() || !std::isfinite(v))
        throw ConfigError("key '" + key + "': '" + value + "' is not a number");
    return v;
}

inline std::string parse_quoted(const std::string& key, const std::string& value) {
    if (value.size() < 2 || value.front() != '"' || value.back() != '"')
        throw ConfigError("key '" + key + "' expects a double-quoted expression");
    return value.substr(1, value.size() - 2);
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    bool have_f = false, have_h = false;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::strip(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::strip(line.substr(0, eq));
        const std::string value = detail::strip(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");

        try {
            if (key == "n") {
                const double v = detail::parse_number(key, value);
                if (v != std::floor(v) || v < 2.0)
                    throw ConfigError("key 'n' must be an integer >= 2");
                cfg.spec.n = static_cast<int>(v);
            } else if (key == "h") {
                cfg.h_text = detail::parse_quoted(key, value);
                cfg.spec.h = Expr::parse(cfg.h_text, {"r"});
                have_h = true;
            } else if (key == "f") {
                cfg.f_text = detail::parse_quoted(key, value);
                cfg.spec.f = Expr::parse(cfg.f_text, {"r", "s"});
                have_f = true;
            } else if (key == "g") {
                cfg.g_text = detail::parse_quoted(key, value);
                cfg.spec.g = Expr::parse(cfg.g_text, {"r", "s"});
            } else if (key == "r0") {
                cfg.spec.r0 = detail::parse_number(key, value);
            } else if (key == "s0") {
                cfg.spec.s0 = detail::parse_number(key, value);
            } else if (key == "quad_tol") {
                cfg.spec.quad_tol = detail::parse_number(key, value);
            } else if (key == "R_big") {
                cfg.spec.R_big = detail::parse_number(key, value);
            } else if (key == "tol") {
                cfg.tol = detail::parse_number(key, value);
            } else if (key == "output_dir") {
                cfg.output_dir = value;
            } else {
                throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
            }
        } catch (const SyntaxError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ", key '" + key +
                              "': " + e.what());
        }
    }
    if (!have_f || !have_h)
        throw ConfigError("config must define both 'h' and 'f'");
    if (!(cfg.tol > 0.0) || !(cfg.spec.quad_tol > 0.0))
        throw ConfigError("all tolerances must be positive");
    cfg.spec.validate();
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace blowup
