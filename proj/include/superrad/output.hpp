#pragma once

// Bit-stable CSV and JSON artifacts. Numbers are written with 17 significant
// digits, '.' as decimal separator and '\n' line endings.

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "superrad/model.hpp"

namespace superrad {

std::string format_number(double x);

struct CsvTable {
    std::vector<std::string> comments;  // written as "# ..." lines before the header
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(const std::vector<double>& values);
};

std::string render_csv(const CsvTable& table);

using JsonScalar = std::variant<double, long long, bool, std::string>;
using JsonRecord = std::vector<std::pair<std::string, JsonScalar>>;

// Flat object, keys in insertion order.
std::string render_json(const JsonRecord& record);

// Provenance lines shared by every artifact: version, solver, parameters.
std::vector<std::pair<std::string, std::string>> provenance(const std::string& command, const SystemParams& p,
                                                            const std::string& solver);

// Writes content to path through a temporary file in the same directory and
// a rename, so readers never see a partial file. "-" writes to stdout.
void write_artifact(const std::string& path, const std::string& content);

}  // namespace superrad
