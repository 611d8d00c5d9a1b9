#pragma once

#include "l1heat/errors.hpp"

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace l1heat {

/// Rectangular table written as CSV: header row, comma separated, doubles with
/// 17 significant digits, '\n' line ends.
class Table {
public:
    using Cell = std::variant<double, std::int64_t, std::string>;

    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<Cell> row)
    {
        if (row.size() != header_.size()) {
            throw ValidationError("Table: row has " + std::to_string(row.size()) + " cells, header has " +
                                  std::to_string(header_.size()));
        }
        rows_.push_back(std::move(row));
    }

    const std::vector<std::string>& header() const noexcept { return header_; }
    const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }

    static std::string format(const Cell& c)
    {
        char buf[64];
        if (const auto* d = std::get_if<double>(&c)) {
            std::snprintf(buf, sizeof buf, "%.17g", *d);
            return buf;
        }
        if (const auto* i = std::get_if<std::int64_t>(&c)) {
            std::snprintf(buf, sizeof buf, "%" PRId64, *i);
            return buf;
        }
        return std::get<std::string>(c);
    }

    void write(std::ostream& out) const
    {
        write_line(out, header_);
        for (const auto& r : rows_) {
            std::vector<std::string> s;
            s.reserve(r.size());
            for (const auto& c : r) {
                s.push_back(format(c));
            }
            write_line(out, s);
        }
    }

    std::string str() const
    {
        std::ostringstream s;
        write(s);
        return s.str();
    }

    void save(const std::string& path) const
    {
        std::ofstream f(path, std::ios::binary);
        if (!f) {
            throw Error("cannot open '" + path + "' for writing");
        }
        write(f);
        if (!f) {
            throw Error("write to '" + path + "' failed");
        }
    }

private:
    static void write_line(std::ostream& out, const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].find_first_of(",\"\n") != std::string::npos) {
                throw ValidationError("Table: cell '" + cells[i] + "' needs quoting");
            }
            out << (i ? "," : "") << cells[i];
        }
        out << '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

} // namespace l1heat
