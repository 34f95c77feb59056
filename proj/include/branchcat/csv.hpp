#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "branchcat/util.hpp"
#include "branchcat/version.hpp"

namespace branchcat {

// CSV with '#' provenance comments above the mandatory header row. Files are
// opened in binary mode so line endings are LF on every platform and bodies
// can be byte-compared across runs.
class CsvFile {
  public:
    CsvFile(const std::string& path, const std::string& config_digest, std::uint64_t master_seed)
        : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open output file: " + path);
        comment("tool", std::string("branchcat ") + BRANCHCAT_VERSION);
        comment("config_digest", config_digest);
        comment("master_seed", std::to_string(master_seed));
    }

    void comment(const std::string& key, const std::string& value) {
        out_ << "# " << key << " = " << value << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << "\n";
    }

    void close() { out_.close(); }

  private:
    std::ofstream out_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
}

}  // namespace branchcat
