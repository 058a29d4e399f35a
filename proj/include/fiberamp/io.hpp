#ifndef FIBERAMP_IO_HPP
#define FIBERAMP_IO_HPP

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fiberamp {

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace io {

/// Shortest round-trip decimal representation (17 significant digits).
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// RFC-4180-style quoting: only applied when a field needs it.
inline std::string quote_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace io

/// One CSV table: string header, numeric rows, deterministic output.
/// With `reproducible` the generation-timestamp comment line is suppressed,
/// making files byte-identical across runs of the same config.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(const std::vector<double>& row) {
        if (row.size() != header_.size())
            throw io_error("CsvTable: row width does not match header");
        rows_.push_back(row);
    }

    void write(const std::filesystem::path& path, bool reproducible) const {
        std::ofstream out(path);
        if (!out) throw io_error("cannot open " + path.string() + " for writing");
        if (!reproducible) {
            auto now = std::chrono::system_clock::now();
            std::time_t t = std::chrono::system_clock::to_time_t(now);
            char buf[64];
            std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
            out << "# generated " << buf << "\n";
        }
        for (std::size_t i = 0; i < header_.size(); ++i)
            out << (i ? "," : "") << io::quote_field(header_[i]);
        out << "\n";
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << (i ? "," : "") << io::format_number(row[i]);
            out << "\n";
        }
        if (!out) throw io_error("write failed for " + path.string());
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

/// Tracks the files written into an output directory. On success the
/// MANIFEST marks the run complete; on failure the partial outputs remain
/// listed with the failure reason.
class OutputManifest {
public:
    explicit OutputManifest(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }

    std::filesystem::path path_for(const std::string& name) {
        files_.push_back(name);
        return dir_ / name;
    }

    void finalize_complete() const { write("status,complete", ""); }
    void finalize_incomplete(const std::string& reason) const {
        write("status,incomplete", reason);
    }

private:
    void write(const std::string& status, const std::string& reason) const {
        std::ofstream out(dir_ / "MANIFEST");
        if (!out) throw io_error("cannot write MANIFEST in " + dir_.string());
        out << status << "\n";
        if (!reason.empty()) out << "reason," << io::quote_field(reason) << "\n";
        for (const auto& f : files_) out << "file," << io::quote_field(f) << "\n";
    }

    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

}  // namespace fiberamp

#endif
