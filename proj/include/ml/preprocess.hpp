#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ml/dataset.hpp"
#include "ml/matrix.hpp"

namespace ml {

/// Per-column standardization to zero mean and unit sample (n-1) standard
/// deviation. Fitted on one dataset, applicable to another with the same
/// columns; invert undoes apply.
class StandardScaler {
public:
    static StandardScaler fit(const Dataset& d, const std::vector<std::string>& columns);

    Dataset apply(const Dataset& d) const;
    Dataset invert(const Dataset& d) const;

    /// Single-column helpers for label scaling.
    double apply_value(const std::string& column, double v) const;
    double invert_value(const std::string& column, double v) const;

    const std::vector<std::string>& columns() const { return names_; }
    double mean_of(const std::string& column) const;
    double sd_of(const std::string& column) const;

private:
    std::vector<std::string> names_;
    Vector means_;
    Vector sds_;
    std::size_t find(const std::string& column) const;
};

Dataset minmax_normalize(const Dataset& d, const std::vector<std::string>& columns, double lo,
                         double hi);

/// Pearson correlations over the numeric feature columns (label excluded).
Matrix correlation_matrix(const Dataset& d);

/// Drops, for every unordered pair with |r| > threshold, the later column by
/// column index. All comparisons use the correlation matrix of the input.
Dataset drop_correlated(const Dataset& d, double threshold);

struct SplitSpec {
    double train = 0.7;
    double val = 0.15;
    double test = 0.15;
    bool shuffle = true;
    std::uint64_t seed = 0;
};

struct Split {
    Dataset train;
    Dataset val;
    Dataset test;
};

/// Exhaustive, disjoint partition. Sizes are floor-allocated with the
/// remainder assigned to train; with shuffle = false the splits are contiguous
/// prefixes in row order.
Split train_val_test_split(const Dataset& d, const SplitSpec& spec);

}  // namespace ml
