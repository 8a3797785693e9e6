#include "ml/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ml {

BootstrapSample bootstrap_sample(std::size_t n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("bootstrap_sample: n must be >= 1");
    BootstrapSample s;
    s.in_bag.resize(n);
    std::vector<bool> seen(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = rng.index(n);
        s.in_bag[i] = k;
        seen[k] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!seen[i]) s.oob.push_back(i);
    }
    return s;
}

namespace {

Matrix select_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(rows[i], j);
    }
    return out;
}

Vector select(const Vector& y, const std::vector<std::size_t>& rows) {
    Vector out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = y[rows[i]];
    return out;
}

double majority_vote(const std::vector<double>& values) {
    std::map<double, std::size_t> counts;
    for (double v : values) counts[v]++;
    std::size_t best_n = 0;
    double best_v = values.front();
    for (const auto& [v, n] : counts) {
        if (n > best_n) {
            best_n = n;
            best_v = v;
        }
    }
    return best_v;
}

}  // namespace

double BaggingModel::predict(std::span<const double> x) const {
    std::vector<double> preds;
    preds.reserve(learners.size());
    for (const auto& l : learners) preds.push_back(l(x));
    if (task == EnsembleTask::classification) return majority_vote(preds);
    double s = 0.0;
    for (double p : preds) s += p;
    return s / static_cast<double>(preds.size());
}

BaggingModel fit_bagging(const Matrix& x, const Vector& y, const BaseLearnerSpec& base,
                         std::size_t n_estimators, EnsembleTask task, Rng& rng, bool bootstrap) {
    if (n_estimators < 1) throw std::invalid_argument("fit_bagging: n_estimators must be >= 1");
    const std::size_t n = x.rows();

    BaggingModel m;
    m.task = task;
    m.samples.resize(n_estimators);
    m.learners.resize(n_estimators);

    std::vector<Rng> rngs;
    rngs.reserve(n_estimators);
    for (std::size_t t = 0; t < n_estimators; ++t) rngs.push_back(rng.derive(t + 1));
    // The per-learner sample is drawn from a derived generator, so learners
    // can train in parallel without changing the result.
    for (std::size_t t = 0; t < n_estimators; ++t) {
        if (bootstrap) {
            m.samples[t] = bootstrap_sample(n, rngs[t]);
        } else {
            m.samples[t].in_bag.resize(n);
            std::iota(m.samples[t].in_bag.begin(), m.samples[t].in_bag.end(), 0);
        }
    }
    const std::ptrdiff_t nt = static_cast<std::ptrdiff_t>(n_estimators);
#pragma omp parallel for schedule(dynamic) if (nt > 1)
    for (std::ptrdiff_t t = 0; t < nt; ++t) {
        const auto& sample = m.samples[static_cast<std::size_t>(t)];
        m.learners[static_cast<std::size_t>(t)] =
            base.fit(select_rows(x, sample.in_bag), select(y, sample.in_bag));
    }

    // OOB evaluation in fixed row order.
    double score = 0.0;
    std::size_t evaluated = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> preds;
        for (std::size_t t = 0; t < n_estimators; ++t) {
            if (std::binary_search(m.samples[t].oob.begin(), m.samples[t].oob.end(), i)) {
                preds.push_back(m.learners[t](x.row(i)));
            }
        }
        if (preds.empty()) {
            ++m.oob_skipped;
            continue;
        }
        ++evaluated;
        if (task == EnsembleTask::regression) {
            double mean = 0.0;
            for (double p : preds) mean += p;
            mean /= static_cast<double>(preds.size());
            score += (mean - y[i]) * (mean - y[i]);
        } else if (majority_vote(preds) == y[i]) {
            ++correct;
        }
    }
    if (evaluated > 0) {
        m.oob_score = task == EnsembleTask::regression
                          ? score / static_cast<double>(evaluated)
                          : static_cast<double>(correct) / static_cast<double>(evaluated);
    }
    return m;
}

double RandomForestModel::predict_value(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& t : trees) s += ml::predict_value(*t, x);
    return s / static_cast<double>(trees.size());
}

std::string RandomForestModel::predict_label(std::span<const double> x) const {
    std::map<std::string, std::size_t> votes;
    for (const auto& t : trees) {
        const TreeNode* node = t.get();
        while (!node->leaf) {
            node = x[node->attr_index] < node->threshold ? node->left.get() : node->right.get();
        }
        votes[node->label]++;
    }
    std::size_t best_n = 0;
    std::string best;
    for (const auto& [label, n] : votes) {
        if (n > best_n) {
            best_n = n;
            best = label;
        }
    }
    return best;
}

RandomForestModel fit_random_forest(const Matrix& x, const Vector& y, std::size_t n_estimators,
                                    std::size_t max_features, TreeOptions tree_options, Rng& rng,
                                    TreeTask task, bool bootstrap) {
    if (max_features < 1 || max_features > x.cols()) {
        throw std::invalid_argument("fit_random_forest: max_features out of range");
    }
    tree_options.algorithm = TreeAlgorithm::cart;
    tree_options.max_features = max_features < x.cols() ? max_features : 0;

    const TreeData td = TreeData::from_matrix(x, y, task);
    RandomForestModel m;
    m.task = task;
    m.y_vocab = td.y_vocab;
    for (const auto& a : td.attrs) m.feature_names.push_back(a.name);
    m.trees.resize(n_estimators);

    std::vector<Rng> rngs;
    for (std::size_t t = 0; t < n_estimators; ++t) rngs.push_back(rng.derive(t + 1));

    const std::ptrdiff_t nt = static_cast<std::ptrdiff_t>(n_estimators);
#pragma omp parallel for schedule(dynamic) if (nt > 1)
    for (std::ptrdiff_t t = 0; t < nt; ++t) {
        Rng local = rngs[static_cast<std::size_t>(t)];
        std::vector<std::size_t> rows;
        if (bootstrap) {
            rows = bootstrap_sample(x.rows(), local).in_bag;
        } else {
            rows.resize(x.rows());
            std::iota(rows.begin(), rows.end(), 0);
        }
        m.trees[static_cast<std::size_t>(t)] = fit_tree(td, tree_options, rows, &local);
    }
    return m;
}

namespace {

FeatureImportance normalize_importance(std::vector<std::string> names, Vector sums) {
    double total = 0.0;
    for (double v : sums) total += v;
    if (total > 0.0) {
        for (double& v : sums) v /= total;
    }
    return {std::move(names), std::move(sums)};
}

}  // namespace

FeatureImportance mdi_importance(const RandomForestModel& forest) {
    if (forest.trees.empty()) throw std::invalid_argument("mdi_importance: unfitted model");
    Vector sums(forest.feature_names.size(), 0.0);
    for (const auto& t : forest.trees) accumulate_importance(*t, sums);
    return normalize_importance(forest.feature_names, std::move(sums));
}

FeatureImportance mdi_importance(const GBoostModel& model) {
    if (model.trees.empty()) throw std::invalid_argument("mdi_importance: unfitted model");
    Vector sums(model.feature_names.size(), 0.0);
    Vector local;
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        const auto& map = model.tree_features[t];
        local.assign(map.size(), 0.0);
        accumulate_importance(*model.trees[t], local);
        for (std::size_t j = 0; j < map.size(); ++j) sums[map[j]] += local[j];
    }
    return normalize_importance(model.feature_names, std::move(sums));
}

Stump fit_stump_weighted(const Matrix& x, const Vector& y, const Vector& weights) {
    const std::size_t n = x.rows();
    if (n == 0 || y.size() != n || weights.size() != n) {
        throw std::invalid_argument("fit_stump_weighted: bad shapes");
    }
    double w_pos = 0.0, w_neg = 0.0;
    for (std::size_t i = 0; i < n; ++i) (y[i] > 0 ? w_pos : w_neg) += weights[i];
    const double total = w_pos + w_neg;

    auto weighted_gini = [](double pos, double neg) {
        const double t = pos + neg;
        if (t <= 0.0) return 0.0;
        const double pp = pos / t, pn = neg / t;
        return t * (1.0 - pp * pp - pn * pn);
    };

    Stump best;
    double best_score = weighted_gini(w_pos, w_neg) / total;  // no-split baseline
    best.feature = 0;
    best.threshold = -std::numeric_limits<double>::infinity();
    best.right_value = w_pos >= w_neg ? 1.0 : -1.0;
    best.left_value = best.right_value;

    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < x.cols(); ++j) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return x(a, j) < x(b, j); });
        double lp = 0.0, ln = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const std::size_t r = order[i];
            (y[r] > 0 ? lp : ln) += weights[r];
            const double v = x(r, j), v_next = x(order[i + 1], j);
            if (v_next <= v) continue;
            const double rp = w_pos - lp, rn = w_neg - ln;
            const double score = (weighted_gini(lp, ln) + weighted_gini(rp, rn)) / total;
            if (score < best_score - 1e-15) {
                best_score = score;
                best.feature = j;
                best.threshold = 0.5 * (v + v_next);
                best.left_value = lp >= ln ? 1.0 : -1.0;
                best.right_value = rp >= rn ? 1.0 : -1.0;
            }
        }
    }
    return best;
}

double AdaBoostModel::decision_value(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t t = 0; t < stumps.size(); ++t) {
        s += stump_weights[t] * stumps[t].predict(x);
    }
    return s;
}

int AdaBoostModel::predict(std::span<const double> x) const {
    return decision_value(x) >= 0.0 ? 1 : -1;
}

AdaBoostModel fit_adaboost(const Matrix& x, const Vector& y, std::size_t n_estimators, Rng& rng) {
    (void)rng;  // the stump learner is deterministic
    const std::size_t n = x.rows();
    for (double v : y) {
        if (v != 1.0 && v != -1.0) {
            throw std::invalid_argument("fit_adaboost: labels must be -1 or +1");
        }
    }
    AdaBoostModel m;
    Vector w(n, 1.0 / static_cast<double>(n));
    m.weight_history.push_back(w);
    for (std::size_t t = 0; t < n_estimators; ++t) {
        const Stump stump = fit_stump_weighted(x, y, w);
        double eps = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (stump.predict(x.row(i)) != y[i]) eps += w[i];
        }
        if (eps >= 0.5) break;  // weak learnability violated
        const double eps_safe = std::max(eps, 1e-12);
        const double alpha = 0.5 * std::log((1.0 - eps_safe) / eps_safe);
        m.stumps.push_back(stump);
        m.stump_weights.push_back(alpha);
        if (eps <= 0.0) break;  // perfect learner dominates; stop early

        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] *= std::exp(-alpha * y[i] * stump.predict(x.row(i)));
            z += w[i];
        }
        for (double& wi : w) wi /= z;
        m.weight_history.push_back(w);
    }
    return m;
}

double GBoostModel::predict(std::span<const double> x) const {
    return predict_staged(x, trees.size());
}

double GBoostModel::predict_staged(std::span<const double> x, std::size_t t) const {
    double f = f0;
    Vector sub;
    for (std::size_t k = 0; k < std::min(t, trees.size()); ++k) {
        const auto& map = tree_features[k];
        sub.resize(map.size());
        for (std::size_t j = 0; j < map.size(); ++j) sub[j] = x[map[j]];
        f += learning_rate * ml::predict_value(*trees[k], sub);
    }
    return f;
}

namespace {

void shrink_leaves(TreeNode& node, double lambda) {
    if (node.leaf) {
        const double n = static_cast<double>(node.support);
        node.value *= n / (n + lambda);
        return;
    }
    if (node.left) shrink_leaves(*node.left, lambda);
    if (node.right) shrink_leaves(*node.right, lambda);
    for (auto& [v, child] : node.branches) shrink_leaves(*child, lambda);
}

}  // namespace

GBoostModel fit_gradient_boosting(const Matrix& x, const Vector& y, std::size_t n_estimators,
                                  const GBoostOptions& options) {
    if (options.learning_rate <= 0.0 || options.learning_rate > 1.0) {
        throw std::invalid_argument("fit_gradient_boosting: learning_rate must be in (0, 1]");
    }
    const std::size_t n = x.rows(), p = x.cols();
    GBoostModel m;
    m.learning_rate = options.learning_rate;
    for (std::size_t j = 0; j < p; ++j) m.feature_names.push_back("x" + std::to_string(j));

    double mean = 0.0;
    for (double v : y) mean += v;
    m.f0 = n > 0 ? mean / static_cast<double>(n) : 0.0;

    Vector f(n, m.f0);
    Rng rng(options.seed);
    TreeOptions topt = options.tree;
    topt.algorithm = TreeAlgorithm::cart;

    for (std::size_t t = 0; t < n_estimators; ++t) {
        std::vector<std::size_t> features(p);
        std::iota(features.begin(), features.end(), 0);
        if (options.features_per_tree > 0 && options.features_per_tree < p) {
            rng.shuffle(features);
            features.resize(options.features_per_tree);
            std::sort(features.begin(), features.end());
        }
        Matrix xt(n, features.size());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < features.size(); ++j) xt(i, j) = x(i, features[j]);
        }
        Vector resid(n);
        for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - f[i];

        const TreeData td = TreeData::from_matrix(xt, resid, TreeTask::regression);
        auto tree = fit_tree(td, topt);
        if (options.leaf_lambda > 0.0) shrink_leaves(*tree, options.leaf_lambda);

        for (std::size_t i = 0; i < n; ++i) {
            f[i] += options.learning_rate * ml::predict_value(*tree, xt.row(i));
        }
        m.trees.push_back(std::move(tree));
        m.tree_features.push_back(features);
    }
    return m;
}

Vector nnls(const Matrix& a, const Vector& b, std::size_t max_iter, double tol) {
    const std::size_t n = a.rows(), p = a.cols();
    if (b.size() != n) throw std::invalid_argument("nnls: shape mismatch");
    Vector col_sq(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) col_sq[j] += a(i, j) * a(i, j);
    }
    Vector c(p, 0.0);
    Vector resid = b;  // b - A c
    for (std::size_t it = 0; it < max_iter; ++it) {
        double max_change = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (col_sq[j] == 0.0) continue;
            double rho = 0.0;
            for (std::size_t i = 0; i < n; ++i) rho += a(i, j) * resid[i];
            const double cj = std::max(0.0, c[j] + rho / col_sq[j]);
            const double delta = cj - c[j];
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i) resid[i] -= delta * a(i, j);
                c[j] = cj;
            }
            max_change = std::max(max_change, std::fabs(delta));
        }
        if (max_change < tol) break;
    }
    return c;
}

double StackingModel::predict(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < first_level.size(); ++j) {
        if (coefficients[j] != 0.0) s += coefficients[j] * first_level[j](x);
    }
    return s;
}

StackingModel fit_stacking(const std::vector<BaseLearnerSpec>& first_level_specs, const Matrix& x,
                           const Vector& y, std::size_t k_folds, Rng& rng) {
    if (first_level_specs.size() < 2) {
        throw std::invalid_argument("fit_stacking: needs at least two first-level learners");
    }
    const std::size_t n = x.rows();
    if (k_folds < 2 || k_folds > n) throw std::invalid_argument("fit_stacking: bad k_folds");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<std::size_t> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = i % k_folds;

    const std::size_t L = first_level_specs.size();
    Matrix meta(n, L);
    for (std::size_t f = 0; f < k_folds; ++f) {
        std::vector<std::size_t> tr, te;
        for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? te : tr).push_back(i);
        const Matrix xtr = select_rows(x, tr);
        const Vector ytr = select(y, tr);
        for (std::size_t l = 0; l < L; ++l) {
            const Predictor p = first_level_specs[l].fit(xtr, ytr);
            for (std::size_t i : te) meta(i, l) = p(x.row(i));
        }
    }

    StackingModel m;
    m.coefficients = nnls(meta, y);
    m.oof_mse_each.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += (meta(i, l) - y[i]) * (meta(i, l) - y[i]);
        m.oof_mse_each[l] = s / static_cast<double>(n);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = dot(meta.row(i), m.coefficients);
        s += (pred - y[i]) * (pred - y[i]);
    }
    m.oof_mse_stack = s / static_cast<double>(n);

    for (std::size_t l = 0; l < L; ++l) {
        m.names.push_back(first_level_specs[l].name);
        m.first_level.push_back(first_level_specs[l].fit(x, y));
    }
    return m;
}

}  // namespace ml
