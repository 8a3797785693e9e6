#include "ml/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ml {

Dataset::Dataset(std::vector<Column> columns) : cols_(std::move(columns)) {
    for (const auto& c : cols_) {
        if (c.size() != cols_.front().size()) {
            throw std::invalid_argument("Dataset: columns differ in length");
        }
    }
}

const Column& Dataset::column(const std::string& name) const {
    return cols_[column_index(name)];
}

Column& Dataset::column(const std::string& name) { return cols_[column_index(name)]; }

std::size_t Dataset::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < cols_.size(); ++i) {
        if (cols_[i].name == name) return i;
    }
    throw std::invalid_argument("Dataset: no column named '" + name + "'");
}

bool Dataset::has_column(const std::string& name) const {
    for (const auto& c : cols_) {
        if (c.name == name) return true;
    }
    return false;
}

void Dataset::set_label(std::string name) {
    column_index(name);  // validates
    label_ = std::move(name);
}

Matrix Dataset::numeric_matrix(const std::vector<std::string>& names) const {
    std::vector<const Column*> sel;
    if (names.empty()) {
        for (const auto& c : cols_) {
            if (label_ && c.name == *label_) continue;
            if (c.kind == ColumnKind::numeric) sel.push_back(&c);
        }
    } else {
        for (const auto& n : names) sel.push_back(&column(n));
    }
    Matrix out(n_rows(), sel.size());
    for (std::size_t j = 0; j < sel.size(); ++j) {
        const Column& c = *sel[j];
        if (c.kind != ColumnKind::numeric) {
            throw std::invalid_argument("numeric_matrix: column '" + c.name + "' is categorical");
        }
        for (std::size_t i = 0; i < n_rows(); ++i) {
            if (c.missing[i]) {
                throw std::invalid_argument("numeric_matrix: missing cell in '" + c.name + "'");
            }
            out(i, j) = c.num[i];
        }
    }
    return out;
}

Vector Dataset::label_vector() const {
    if (!label_) throw std::invalid_argument("label_vector: no label column set");
    const Column& c = column(*label_);
    if (c.kind != ColumnKind::numeric) {
        throw std::invalid_argument("label_vector: label column is categorical");
    }
    Vector y(n_rows());
    for (std::size_t i = 0; i < n_rows(); ++i) {
        if (c.missing[i]) throw std::invalid_argument("label_vector: missing label");
        y[i] = c.num[i];
    }
    return y;
}

std::vector<std::string> Dataset::feature_names() const {
    std::vector<std::string> out;
    for (const auto& c : cols_) {
        if (label_ && c.name == *label_) continue;
        out.push_back(c.name);
    }
    return out;
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& idx) const {
    std::vector<Column> out;
    out.reserve(cols_.size());
    for (const auto& c : cols_) {
        Column nc;
        nc.name = c.name;
        nc.kind = c.kind;
        nc.missing.reserve(idx.size());
        for (std::size_t i : idx) {
            nc.missing.push_back(c.missing[i]);
            if (c.kind == ColumnKind::numeric) {
                nc.num.push_back(c.num[i]);
            } else {
                nc.cat.push_back(c.cat[i]);
            }
        }
        if (c.kind == ColumnKind::numeric) {
            nc.cat.clear();
        } else {
            nc.num.clear();
        }
        out.push_back(std::move(nc));
    }
    Dataset d(std::move(out));
    d.label_ = label_;
    return d;
}

void Dataset::drop_column(const std::string& name) {
    const std::size_t i = column_index(name);
    if (label_ && *label_ == name) label_.reset();
    cols_.erase(cols_.begin() + static_cast<std::ptrdiff_t>(i));
}

namespace {

// Splits one CSV record honoring double-quote escaping. Returns false on an
// unterminated quoted field.
bool split_record(const std::string& line, std::vector<std::string>& out) {
    out.clear();
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (ch == '\r') {
            // tolerate CRLF
        } else {
            field.push_back(ch);
        }
    }
    out.push_back(std::move(field));
    return !quoted;
}

}  // namespace

Dataset read_csv(const std::string& path, const std::vector<ColumnSpec>& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_csv: missing header in " + path);
    std::vector<std::string> header;
    if (!split_record(line, header)) throw std::runtime_error("read_csv: malformed header");
    if (header.size() != schema.size()) {
        throw std::runtime_error("read_csv: header has " + std::to_string(header.size()) +
                                 " columns, schema expects " + std::to_string(schema.size()));
    }
    for (std::size_t j = 0; j < schema.size(); ++j) {
        if (header[j] != schema[j].name) {
            throw std::runtime_error("read_csv: header column '" + header[j] +
                                     "' does not match schema name '" + schema[j].name + "'");
        }
    }

    std::vector<Column> cols(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        cols[j].name = schema[j].name;
        cols[j].kind = schema[j].kind;
    }

    std::vector<std::string> fields;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        ++row;
        if (!split_record(line, fields)) {
            throw std::runtime_error("read_csv: malformed row " + std::to_string(row));
        }
        if (fields.size() != schema.size()) {
            throw std::runtime_error("read_csv: row " + std::to_string(row) + " has " +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(schema.size()));
        }
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const std::string& f = fields[j];
            if (f.empty()) {
                cols[j].missing.push_back(1);
                if (schema[j].kind == ColumnKind::numeric) {
                    cols[j].num.push_back(0.0);
                } else {
                    cols[j].cat.emplace_back();
                }
                continue;
            }
            cols[j].missing.push_back(0);
            if (schema[j].kind == ColumnKind::numeric) {
                double v = 0.0;
                const char* begin = f.data();
                const char* end = f.data() + f.size();
                auto [ptr, ec] = std::from_chars(begin, end, v);
                if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
                    throw std::runtime_error("read_csv: row " + std::to_string(row) +
                                             ", column '" + schema[j].name +
                                             "': cannot parse numeric value '" + f + "'");
                }
                cols[j].num.push_back(v);
            } else {
                cols[j].cat.push_back(f);
            }
        }
    }
    return Dataset(std::move(cols));
}

namespace {

std::string format_cell(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

void write_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "' for writing");
    for (std::size_t j = 0; j < d.n_cols(); ++j) {
        if (j) out << ',';
        out << quote_if_needed(d.columns()[j].name);
    }
    out << '\n';
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        for (std::size_t j = 0; j < d.n_cols(); ++j) {
            if (j) out << ',';
            const Column& c = d.columns()[j];
            if (c.missing[i]) continue;  // empty field
            if (c.kind == ColumnKind::numeric) {
                out << format_cell(c.num[i]);
            } else {
                out << quote_if_needed(c.cat[i]);
            }
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write_csv: write failed for '" + path + "'");
}

Dataset drop_missing(const Dataset& d) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        bool any = false;
        for (const auto& c : d.columns()) {
            if (c.missing[i]) {
                any = true;
                break;
            }
        }
        if (!any) keep.push_back(i);
    }
    return d.select_rows(keep);
}

}  // namespace ml
