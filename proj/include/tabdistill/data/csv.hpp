#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tabdistill/data/dataset.hpp"

namespace tabdistill::data {

// Raised for malformed CSV text, sidecars that disagree with the header,
// unparseable numeric cells and empty files.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// RFC-4180 records: comma separated, double-quote quoting with "" escapes,
// CRLF or LF line ends. Every record must have the header's field count.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

// Schema sidecar (JSON):
//   { "label": "<column>",
//     "columns": { "<name>": {"kind": "numerical"|"categorical",
//                             "categories": ["a", "b"]}, ... } }
// "columns" may also be an array of {"name", "kind", "categories"} objects.
// Schema order follows the CSV header, not the sidecar.
struct Sidecar {
    std::string label;
    std::vector<ColumnSchema> columns;
};

Sidecar parse_sidecar(std::string_view json_text);

Dataset parse_dataset(std::string name, std::string_view csv_text, const Sidecar& sidecar);
Dataset load_csv(const std::filesystem::path& csv_path, const std::filesystem::path& sidecar_path);

// Writes `ds` and its sidecar; numerics use 17 significant digits.
void write_csv(const Dataset& ds, const std::filesystem::path& csv_path,
               const std::filesystem::path& sidecar_path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace tabdistill::data
