#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ml/matrix.hpp"

namespace ml {

enum class ColumnKind { numeric, categorical };

/// One named column. Missing cells are a distinguished marker, never NaN in
/// the numeric payload.
struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    Vector num;                       // used when kind == numeric
    std::vector<std::string> cat;     // used when kind == categorical
    std::vector<std::uint8_t> missing;

    std::size_t size() const { return missing.size(); }
};

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
};

class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<Column> columns);

    std::size_t n_rows() const { return cols_.empty() ? 0 : cols_.front().size(); }
    std::size_t n_cols() const { return cols_.size(); }

    const std::vector<Column>& columns() const { return cols_; }
    std::vector<Column>& columns() { return cols_; }

    const Column& column(const std::string& name) const;
    Column& column(const std::string& name);
    std::size_t column_index(const std::string& name) const;
    bool has_column(const std::string& name) const;

    const std::optional<std::string>& label() const { return label_; }
    void set_label(std::string name);

    /// Numeric feature matrix over the named columns (label excluded when
    /// names is empty). Throws if a selected column has a missing cell.
    Matrix numeric_matrix(const std::vector<std::string>& names = {}) const;
    Vector label_vector() const;
    std::vector<std::string> feature_names() const;

    Dataset select_rows(const std::vector<std::size_t>& idx) const;
    void drop_column(const std::string& name);

private:
    std::vector<Column> cols_;
    std::optional<std::string> label_;
};

/// RFC-4180-style CSV: UTF-8, mandatory header, '.' decimal separator, empty
/// field = missing. Numeric parse failures are errors naming row and column.
Dataset read_csv(const std::string& path, const std::vector<ColumnSpec>& schema);
void write_csv(const Dataset& d, const std::string& path);

Dataset drop_missing(const Dataset& d);

}  // namespace ml
