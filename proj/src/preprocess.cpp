#include "ml/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "ml/rng.hpp"

namespace ml {

namespace {

double column_mean(const Column& c) {
    double s = 0.0;
    for (double v : c.num) s += v;
    return s / static_cast<double>(c.num.size());
}

double column_sd(const Column& c, double mean) {
    if (c.num.size() < 2) return 0.0;
    double s = 0.0;
    for (double v : c.num) s += (v - mean) * (v - mean);
    return std::sqrt(s / static_cast<double>(c.num.size() - 1));
}

void require_numeric_complete(const Column& c) {
    if (c.kind != ColumnKind::numeric) {
        throw std::invalid_argument("column '" + c.name + "' is not numeric");
    }
    for (auto m : c.missing) {
        if (m) throw std::invalid_argument("column '" + c.name + "' has missing values");
    }
}

}  // namespace

StandardScaler StandardScaler::fit(const Dataset& d, const std::vector<std::string>& columns) {
    StandardScaler s;
    for (const auto& name : columns) {
        const Column& c = d.column(name);
        require_numeric_complete(c);
        const double mean = column_mean(c);
        const double sd = column_sd(c, mean);
        if (sd <= 0.0) {
            throw std::invalid_argument("StandardScaler: column '" + name +
                                        "' is constant (zero standard deviation)");
        }
        s.names_.push_back(name);
        s.means_.push_back(mean);
        s.sds_.push_back(sd);
    }
    return s;
}

std::size_t StandardScaler::find(const std::string& column) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == column) return i;
    }
    throw std::invalid_argument("StandardScaler: column '" + column + "' was not fitted");
}

Dataset StandardScaler::apply(const Dataset& d) const {
    Dataset out = d;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        Column& c = out.column(names_[i]);
        require_numeric_complete(c);
        for (double& v : c.num) v = (v - means_[i]) / sds_[i];
    }
    return out;
}

Dataset StandardScaler::invert(const Dataset& d) const {
    Dataset out = d;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        Column& c = out.column(names_[i]);
        require_numeric_complete(c);
        for (double& v : c.num) v = v * sds_[i] + means_[i];
    }
    return out;
}

double StandardScaler::apply_value(const std::string& column, double v) const {
    const std::size_t i = find(column);
    return (v - means_[i]) / sds_[i];
}

double StandardScaler::invert_value(const std::string& column, double v) const {
    const std::size_t i = find(column);
    return v * sds_[i] + means_[i];
}

double StandardScaler::mean_of(const std::string& column) const { return means_[find(column)]; }
double StandardScaler::sd_of(const std::string& column) const { return sds_[find(column)]; }

Dataset minmax_normalize(const Dataset& d, const std::vector<std::string>& columns, double lo,
                         double hi) {
    Dataset out = d;
    for (const auto& name : columns) {
        Column& c = out.column(name);
        require_numeric_complete(c);
        const auto [mn, mx] = std::minmax_element(c.num.begin(), c.num.end());
        if (!(*mx > *mn)) {
            throw std::invalid_argument("minmax_normalize: column '" + name + "' is degenerate");
        }
        const double span = *mx - *mn;
        const double min_v = *mn;
        for (double& v : c.num) v = lo + (hi - lo) * (v - min_v) / span;
    }
    return out;
}

Matrix correlation_matrix(const Dataset& d) {
    std::vector<const Column*> cols;
    for (const auto& c : d.columns()) {
        if (d.label() && c.name == *d.label()) continue;
        if (c.kind == ColumnKind::numeric) cols.push_back(&c);
    }
    if (d.n_rows() < 2) throw std::invalid_argument("correlation_matrix: needs >= 2 rows");
    const std::size_t k = cols.size();
    Vector means(k), sds(k);
    for (std::size_t j = 0; j < k; ++j) {
        require_numeric_complete(*cols[j]);
        means[j] = column_mean(*cols[j]);
        sds[j] = column_sd(*cols[j], means[j]);
        if (sds[j] <= 0.0) {
            throw std::invalid_argument("correlation_matrix: column '" + cols[j]->name +
                                        "' has zero variance");
        }
    }
    Matrix r(k, k);
    const double n1 = static_cast<double>(d.n_rows() - 1);
    for (std::size_t a = 0; a < k; ++a) {
        r(a, a) = 1.0;
        for (std::size_t b = a + 1; b < k; ++b) {
            double cov = 0.0;
            for (std::size_t i = 0; i < d.n_rows(); ++i) {
                cov += (cols[a]->num[i] - means[a]) * (cols[b]->num[i] - means[b]);
            }
            cov /= n1;
            const double val = std::clamp(cov / (sds[a] * sds[b]), -1.0, 1.0);
            r(a, b) = val;
            r(b, a) = val;
        }
    }
    return r;
}

Dataset drop_correlated(const Dataset& d, double threshold) {
    std::vector<std::string> names;
    for (const auto& c : d.columns()) {
        if (d.label() && c.name == *d.label()) continue;
        if (c.kind == ColumnKind::numeric) names.push_back(c.name);
    }
    const Matrix r = correlation_matrix(d);
    std::set<std::string> dropped;
    for (std::size_t i = 0; i < names.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (std::fabs(r(i, j)) > threshold) dropped.insert(names[i]);
        }
    }
    Dataset out = d;
    for (const auto& name : dropped) out.drop_column(name);
    return out;
}

Split train_val_test_split(const Dataset& d, const SplitSpec& spec) {
    if (d.n_rows() == 0) throw std::invalid_argument("train_val_test_split: empty dataset");
    if (spec.train <= 0.0 || spec.val < 0.0 || spec.test < 0.0) {
        throw std::invalid_argument("train_val_test_split: fractions must be positive");
    }
    if (std::fabs(spec.train + spec.val + spec.test - 1.0) > 1e-9) {
        throw std::invalid_argument("train_val_test_split: fractions must sum to 1");
    }
    const std::size_t n = d.n_rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (spec.shuffle) {
        Rng rng(spec.seed);
        rng.shuffle(order);
    }
    const auto n_val = static_cast<std::size_t>(std::floor(spec.val * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::floor(spec.test * static_cast<double>(n)));
    const std::size_t n_train = n - n_val - n_test;

    std::vector<std::size_t> tr(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> va(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                                order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    std::vector<std::size_t> te(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                                order.end());
    return {d.select_rows(tr), d.select_rows(va), d.select_rows(te)};
}

}  // namespace ml
