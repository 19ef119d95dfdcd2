#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

namespace flipchain {

/// Full-precision serialization: 17 significant digits round-trip any double.
inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

/// Write-then-rename so readers never observe a partially written file.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("atomic_write_file: cannot open " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("atomic_write_file: write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

/// Minimal CSV assembly; callers format numeric cells with format_full.
class CsvBuilder {
public:
    explicit CsvBuilder(const std::string& header) { body_ = header + "\n"; }
    void add_row(const std::string& row) { body_ += row + "\n"; }
    const std::string& str() const { return body_; }

private:
    std::string body_;
};

} // namespace flipchain
