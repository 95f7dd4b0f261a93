#include "tabdistill/data/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace tabdistill::data {

namespace {

bool is_missing_marker(std::string_view s) { return s.empty() || s == "?"; }

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return std::string(s.substr(b, e - b));
}

double parse_number(const std::string& text, std::size_t line, const std::string& column) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw DataError("line " + std::to_string(line) + ": non-numeric value '" + text +
                        "' in numerical column '" + column + "'");
    return v;
}

std::string quote_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false, field_started = false;
    std::size_t line = 1;

    auto end_record = [&] {
        record.push_back(std::move(field));
        field.clear();
        // a lone empty field means a blank line
        if (!(record.size() == 1 && record[0].empty() && !field_started)) records.push_back(std::move(record));
        record.clear();
        field_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty())
                    throw DataError("line " + std::to_string(line) + ": stray quote inside field");
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                record.push_back(std::move(field));
                field.clear();
                field_started = true;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                end_record();
                ++line;
                break;
            case '\n':
                end_record();
                ++line;
                break;
            default:
                field += c;
                field_started = true;
        }
    }
    if (in_quotes) throw DataError("unterminated quoted field at end of input");
    if (field_started || !field.empty() || !record.empty()) end_record();

    for (std::size_t r = 1; r < records.size(); ++r)
        if (records[r].size() != records[0].size())
            throw DataError("record " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                            " fields, header has " + std::to_string(records[0].size()));
    return records;
}

Sidecar parse_sidecar(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("sidecar: ") + e.what());
    }
    if (!j.is_object() || !j.contains("label") || !j.contains("columns"))
        throw DataError("sidecar must be an object with 'label' and 'columns'");
    Sidecar sc;
    sc.label = j.at("label").get<std::string>();

    auto read_column = [](std::string name, const nlohmann::json& spec) {
        ColumnSchema col;
        col.name = std::move(name);
        if (spec.is_string()) {
            col.kind = parse_column_kind(spec.get<std::string>());
            return col;
        }
        col.kind = parse_column_kind(spec.at("kind").get<std::string>());
        if (spec.contains("categories")) {
            if (col.kind != ColumnKind::categorical)
                throw DataError("sidecar: categories given for numerical column '" + col.name + "'");
            col.categories = spec.at("categories").get<std::vector<std::string>>();
        }
        return col;
    };

    const auto& cols = j.at("columns");
    if (cols.is_object()) {
        for (const auto& [name, spec] : cols.items()) sc.columns.push_back(read_column(name, spec));
    } else if (cols.is_array()) {
        for (const auto& spec : cols) sc.columns.push_back(read_column(spec.at("name").get<std::string>(), spec));
    } else {
        throw DataError("sidecar: 'columns' must be an object or an array");
    }
    return sc;
}

Dataset parse_dataset(std::string name, std::string_view csv_text, const Sidecar& sidecar) {
    const auto records = parse_csv(csv_text);
    if (records.empty()) throw DataError("dataset '" + name + "': missing header row");
    if (records.size() == 1) throw DataError("dataset '" + name + "' has no rows");
    const auto& header = records[0];

    std::map<std::string, std::size_t> position;
    for (std::size_t j = 0; j < header.size(); ++j) {
        const std::string h = trim(header[j]);
        if (!position.emplace(h, j).second) throw DataError("duplicate column '" + h + "' in header");
    }
    for (const auto& col : sidecar.columns)
        if (!position.count(col.name)) throw DataError("sidecar names unknown column '" + col.name + "'");
    if (!position.count(sidecar.label)) throw DataError("label column '" + sidecar.label + "' not in header");

    std::map<std::string, const ColumnSchema*> declared;
    for (const auto& col : sidecar.columns) declared[col.name] = &col;

    Dataset ds;
    ds.name = std::move(name);
    std::vector<std::size_t> source;
    for (std::size_t j = 0; j < header.size(); ++j) {
        const std::string h = trim(header[j]);
        if (h == sidecar.label) continue;
        const auto it = declared.find(h);
        if (it == declared.end()) throw DataError("column '" + h + "' is not declared in the sidecar");
        ds.schema.push_back(*it->second);
        source.push_back(j);
    }
    const std::size_t label_col = position.at(sidecar.label);

    std::map<std::string, int> label_index;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        std::vector<Cell> row;
        row.reserve(source.size());
        for (std::size_t k = 0; k < source.size(); ++k) {
            const std::string v = trim(rec[source[k]]);
            if (is_missing_marker(v)) {
                row.emplace_back(std::monostate{});
            } else if (ds.schema[k].kind == ColumnKind::numerical) {
                row.emplace_back(parse_number(v, r + 1, ds.schema[k].name));
            } else {
                row.emplace_back(v);
            }
        }
        const std::string lab = trim(rec[label_col]);
        if (is_missing_marker(lab)) throw DataError("line " + std::to_string(r + 1) + ": missing label");
        auto [it, inserted] = label_index.emplace(lab, static_cast<int>(ds.label_names.size()));
        if (inserted) ds.label_names.push_back(lab);
        ds.rows.push_back(std::move(row));
        ds.labels.push_back(it->second);
    }
    ds.validate();
    return ds;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Dataset load_csv(const std::filesystem::path& csv_path, const std::filesystem::path& sidecar_path) {
    const Sidecar sc = parse_sidecar(read_text_file(sidecar_path));
    return parse_dataset(csv_path.stem().string(), read_text_file(csv_path), sc);
}

void write_csv(const Dataset& ds, const std::filesystem::path& csv_path,
               const std::filesystem::path& sidecar_path) {
    std::string label = "label";
    while (true) {
        bool clash = false;
        for (const auto& c : ds.schema) clash = clash || c.name == label;
        if (!clash) break;
        label += "_";
    }
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + csv_path.string() + "'");
    for (const auto& c : ds.schema) out << quote_field(c.name) << ',';
    out << label << '\n';
    char buf[32];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (const auto& cell : ds.rows[i]) {
            if (std::holds_alternative<double>(cell)) {
                std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(cell));
                out << buf;
            } else if (std::holds_alternative<std::string>(cell)) {
                out << quote_field(std::get<std::string>(cell));
            }
            out << ',';
        }
        out << quote_field(ds.label_names.at(static_cast<std::size_t>(ds.labels[i]))) << '\n';
    }

    nlohmann::ordered_json side;
    side["label"] = label;
    side["columns"] = nlohmann::ordered_json::array();
    for (const auto& c : ds.schema) {
        nlohmann::ordered_json col{{"name", c.name}, {"kind", to_string(c.kind)}};
        if (!c.categories.empty()) col["categories"] = c.categories;
        side["columns"].push_back(col);
    }
    std::ofstream sout(sidecar_path, std::ios::binary);
    if (!sout) throw DataError("cannot write '" + sidecar_path.string() + "'");
    sout << side.dump(2) << '\n';
}

}  // namespace tabdistill::data
