#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "gridlearn/errors.hpp"

namespace gridlearn {

/// Deterministic shortest-ish decimal rendering ("%.12g"); reruns with the
/// same numbers produce byte-identical text.
std::string format_number(double value);

/// Minimal CSV emitter: '#'-prefixed provenance comments, one header, rows.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);

    void comment(const std::string& line);
    void header(const std::vector<std::string>& columns);
    void row(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
    std::string path_;
    std::size_t column_count_ = 0;
};

}  // namespace gridlearn
