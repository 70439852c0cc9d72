#pragma once

// Serialization helpers: lossless double formatting (17 significant digits),
// CSV tables, and atomic write-then-rename file output.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "blowup/errors.hpp"

namespace blowup {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Write content atomically: stage into <path>.tmp, then rename over path.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::FILE* fp = std::fopen(tmp.string().c_str(), "wb");
        if (!fp) throw ConfigError("cannot open '" + tmp.string() + "' for writing");
        const std::size_t n = std::fwrite(content.data(), 1, content.size(), fp);
        const int rc = std::fclose(fp);
        if (n != content.size() || rc != 0)
            throw ConfigError("short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw ConfigError("cannot rename '" + tmp.string() + "' to '" + path.string() + "'");
}

// CSV with a fixed header; every cell serialized at full precision.
inline std::string csv_table(const std::string& header,
                             const std::vector<std::vector<double>>& columns) {
    if (columns.empty()) throw Precondition("csv_table needs at least one column");
    const std::size_t rows = columns.front().size();
    for (const auto& c : columns)
        if (c.size() != rows) throw RangeMismatch("csv_table: ragged columns");
    std::string out = header;
    out += '\n';
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (j) out += ',';
            out += format_double(columns[j][i]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace blowup
