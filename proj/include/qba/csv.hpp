#pragma once

// Dataset interchange: one header row, comma separated, no quoting.
// Confounders come first under their schema names, categorical values
// written as level labels. Missing values are empty fields.

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qba/dataset.hpp"
#include "qba/design.hpp"
#include "qba/error.hpp"

namespace qba {

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

inline constexpr const char* kRequiredFields[] = {"a_star", "y_star", "r_y"};
inline constexpr const char* kLatentFields[] = {"a_true", "y_true", "u", "e", "s"};

}  // namespace detail

inline void write_csv(const Dataset& data, std::ostream& os) {
    const auto& cov = data.schema().covariates();
    std::vector<Field> latent;
    for (const char* name : detail::kLatentFields) {
        const Field f = *field_from_name(name);
        for (const auto& r : data.records())
            if (field_value(r, f)) {
                latent.push_back(f);
                break;
            }
    }
    std::vector<std::string> header;
    for (const auto& c : cov) header.push_back(c.name);
    for (const char* name : detail::kRequiredFields) header.emplace_back(name);
    for (Field f : latent)
        for (const char* name : detail::kLatentFields)
            if (field_from_name(name) == f) header.emplace_back(name);
    for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
    os << '\n';

    auto put_opt = [&os](std::optional<bool> v) {
        os << ',';
        if (v) os << (*v ? '1' : '0');
    };
    for (const auto& r : data.records()) {
        for (std::size_t j = 0; j < cov.size(); ++j) {
            if (j) os << ',';
            const double v = r.confounders[j];
            switch (cov[j].kind) {
                case CovariateKind::categorical: os << cov[j].levels[static_cast<std::size_t>(v)]; break;
                case CovariateKind::binary: os << (v != 0.0 ? '1' : '0'); break;
                case CovariateKind::continuous: os << detail::format_double(v); break;
            }
        }
        os << ',' << (r.a_star ? '1' : '0');
        put_opt(r.y_star);
        os << ',' << (r.r_y ? '1' : '0');
        for (Field f : latent) put_opt(field_value(r, f));
        os << '\n';
    }
}

inline void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open '" + path + "' for writing");
    write_csv(data, os);
}

inline Dataset read_csv(std::istream& is, const ConfounderSchema& schema,
                        Provenance provenance = Provenance::observed) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("csv: missing header row");
    const auto header = detail::split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (!col.emplace(header[j], j).second)
            throw DataError("csv: duplicate column '" + header[j] + "'");
        if (!schema.index_of(header[j]) && !field_from_name(header[j]))
            throw DataError("csv: unknown column '" + header[j] + "'");
    }
    for (const auto& c : schema.covariates())
        if (!col.count(c.name)) throw DataError("csv: missing confounder column '" + c.name + "'");
    for (const char* name : detail::kRequiredFields)
        if (!col.count(name)) throw DataError(std::string("csv: missing column '") + name + "'");

    std::vector<Record> records;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError("csv line " + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(cells.size()));
        auto where = [&](const std::string& name) {
            return "csv line " + std::to_string(lineno) + ", column '" + name + "'";
        };
        auto parse_bool = [&](const std::string& name) -> std::optional<bool> {
            const auto& cell = cells[col.at(name)];
            if (cell.empty()) return std::nullopt;
            if (cell == "0") return false;
            if (cell == "1") return true;
            throw DataError(where(name) + ": expected 0, 1 or empty, got '" + cell + "'");
        };
        Record r;
        r.confounders.resize(schema.size());
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const auto& c = schema[j];
            const auto& cell = cells[col.at(c.name)];
            if (cell.empty()) throw DataError(where(c.name) + ": missing confounder value");
            if (c.kind == CovariateKind::categorical) {
                auto k = c.level_index(cell);
                if (!k) throw DataError(where(c.name) + ": unknown level '" + cell + "'");
                r.confounders[j] = static_cast<double>(*k);
            } else {
                double v = 0.0;
                auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
                if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
                    throw DataError(where(c.name) + ": not a number: '" + cell + "'");
                r.confounders[j] = v;
            }
        }
        auto a_star = parse_bool("a_star");
        auto r_y = parse_bool("r_y");
        if (!a_star) throw DataError(where("a_star") + ": missing value");
        if (!r_y) throw DataError(where("r_y") + ": missing value");
        r.a_star = *a_star;
        r.r_y = *r_y;
        r.y_star = parse_bool("y_star");
        if (col.count("a_true")) r.a_true = parse_bool("a_true");
        if (col.count("y_true")) r.y_true = parse_bool("y_true");
        if (col.count("u")) r.u = parse_bool("u");
        if (col.count("e")) r.e = parse_bool("e");
        if (col.count("s")) r.s = parse_bool("s");
        records.push_back(std::move(r));
    }
    return Dataset(schema, std::move(records), provenance);
}

inline Dataset read_csv(const std::string& path, const ConfounderSchema& schema,
                        Provenance provenance = Provenance::observed) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open '" + path + "'");
    return read_csv(is, schema, provenance);
}

}  // namespace qba
