#include "ml/tree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ml {

double entropy(std::span<const std::size_t> class_counts) {
    std::size_t total = 0;
    for (auto c : class_counts) total += c;
    if (total == 0) throw std::invalid_argument("entropy: all counts are zero");
    double h = 0.0;
    for (auto c : class_counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

double gini(std::span<const std::size_t> class_counts) {
    std::size_t total = 0;
    for (auto c : class_counts) total += c;
    if (total == 0) throw std::invalid_argument("gini: all counts are zero");
    double s = 0.0;
    for (auto c : class_counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        s += p * p;
    }
    return 1.0 - s;
}

std::size_t TreeNode::node_count() const {
    std::size_t n = 1;
    for (const auto& [v, child] : branches) n += child->node_count();
    if (left) n += left->node_count();
    if (right) n += right->node_count();
    return n;
}

std::size_t TreeData::n_rows() const {
    if (task == TreeTask::classification) return y_codes.size();
    return y.size();
}

TreeData TreeData::from_dataset(const Dataset& d) {
    if (!d.label()) throw std::invalid_argument("TreeData: dataset has no label column");
    if (d.n_rows() == 0) throw std::invalid_argument("TreeData: empty dataset");
    TreeData td;
    const Column& yc = d.column(*d.label());
    if (yc.kind == ColumnKind::categorical) {
        td.task = TreeTask::classification;
        std::map<std::string, int> code_of;
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            if (yc.missing[i]) throw std::invalid_argument("TreeData: missing label");
            auto it = code_of.find(yc.cat[i]);
            if (it == code_of.end()) {
                it = code_of.emplace(yc.cat[i], static_cast<int>(td.y_vocab.size())).first;
                td.y_vocab.push_back(yc.cat[i]);
            }
            td.y_codes.push_back(it->second);
        }
    } else {
        td.task = TreeTask::regression;
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            if (yc.missing[i]) throw std::invalid_argument("TreeData: missing label");
            td.y.push_back(yc.num[i]);
        }
    }
    for (const auto& c : d.columns()) {
        if (c.name == *d.label()) continue;
        Attr a;
        a.name = c.name;
        if (c.kind == ColumnKind::numeric) {
            a.numeric = true;
            for (std::size_t i = 0; i < d.n_rows(); ++i) {
                if (c.missing[i]) throw std::invalid_argument("TreeData: missing cell in " + c.name);
                a.num.push_back(c.num[i]);
            }
        } else {
            a.numeric = false;
            std::map<std::string, int> code_of;
            for (std::size_t i = 0; i < d.n_rows(); ++i) {
                if (c.missing[i]) throw std::invalid_argument("TreeData: missing cell in " + c.name);
                auto it = code_of.find(c.cat[i]);
                if (it == code_of.end()) {
                    it = code_of.emplace(c.cat[i], static_cast<int>(a.vocab.size())).first;
                    a.vocab.push_back(c.cat[i]);
                }
                a.codes.push_back(it->second);
            }
        }
        td.attrs.push_back(std::move(a));
    }
    return td;
}

TreeData TreeData::from_matrix(const Matrix& x, const Vector& y, TreeTask task,
                               std::vector<std::string> names) {
    if (x.rows() != y.size() || x.rows() == 0) {
        throw std::invalid_argument("TreeData: shape mismatch or empty input");
    }
    TreeData td;
    td.task = task;
    if (task == TreeTask::regression) {
        td.y = y;
    } else {
        std::map<double, int> code_of;
        std::map<int, std::string> name_of;
        for (double v : y) {
            auto it = code_of.find(v);
            if (it == code_of.end()) {
                it = code_of.emplace(v, static_cast<int>(td.y_vocab.size())).first;
                std::ostringstream os;
                os << v;
                td.y_vocab.push_back(os.str());
            }
            td.y_codes.push_back(it->second);
        }
    }
    for (std::size_t j = 0; j < x.cols(); ++j) {
        Attr a;
        a.name = j < names.size() ? names[j] : "x" + std::to_string(j);
        a.numeric = true;
        a.num.resize(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) a.num[i] = x(i, j);
        td.attrs.push_back(std::move(a));
    }
    return td;
}

namespace {

struct NodeStats {
    std::vector<std::size_t> counts;  // classification
    double sum = 0.0, sum_sq = 0.0;   // regression
    std::size_t n = 0;
};

NodeStats gather_stats(const TreeData& td, std::span<const std::size_t> rows) {
    NodeStats s;
    s.n = rows.size();
    if (td.task == TreeTask::classification) {
        s.counts.assign(td.y_vocab.size(), 0);
        for (std::size_t r : rows) s.counts[static_cast<std::size_t>(td.y_codes[r])]++;
    } else {
        for (std::size_t r : rows) {
            s.sum += td.y[r];
            s.sum_sq += td.y[r] * td.y[r];
        }
    }
    return s;
}

double stats_impurity(const NodeStats& s, SplitCriterion crit) {
    switch (crit) {
        case SplitCriterion::entropy_gain:
        case SplitCriterion::gain_ratio:
            return entropy(s.counts);
        case SplitCriterion::gini:
            return gini(s.counts);
        case SplitCriterion::variance: {
            const double mean = s.sum / static_cast<double>(s.n);
            return std::max(0.0, s.sum_sq / static_cast<double>(s.n) - mean * mean);
        }
    }
    throw std::logic_error("stats_impurity");
}

int majority_code(const NodeStats& s) {
    return static_cast<int>(std::max_element(s.counts.begin(), s.counts.end()) -
                            s.counts.begin());
}

struct SplitChoice {
    bool found = false;
    std::size_t attr = 0;
    bool numeric = false;
    double threshold = 0.0;
    double score = 0.0;
    double weighted_child_impurity = 0.0;
};

struct FitContext {
    const TreeData& td;
    TreeOptions opt;
    SplitCriterion crit;
    double n_total = 1.0;
    Rng* rng = nullptr;
};

// Weighted child impurity of a categorical split; negative when unusable.
double categorical_child_impurity(const FitContext& ctx, std::size_t attr,
                                  std::span<const std::size_t> rows) {
    const auto& a = ctx.td.attrs[attr];
    const std::size_t k = a.vocab.size();
    std::vector<std::size_t> group_n(k, 0);
    std::vector<std::vector<std::size_t>> group_counts;
    std::vector<double> group_sum, group_sum_sq;
    if (ctx.td.task == TreeTask::classification) {
        group_counts.assign(k, std::vector<std::size_t>(ctx.td.y_vocab.size(), 0));
    } else {
        group_sum.assign(k, 0.0);
        group_sum_sq.assign(k, 0.0);
    }
    for (std::size_t r : rows) {
        const auto g = static_cast<std::size_t>(a.codes[r]);
        group_n[g]++;
        if (ctx.td.task == TreeTask::classification) {
            group_counts[g][static_cast<std::size_t>(ctx.td.y_codes[r])]++;
        } else {
            group_sum[g] += ctx.td.y[r];
            group_sum_sq[g] += ctx.td.y[r] * ctx.td.y[r];
        }
    }
    std::size_t present = 0;
    for (std::size_t g = 0; g < k; ++g) {
        if (group_n[g] == 0) continue;
        ++present;
        if (group_n[g] < ctx.opt.min_samples_leaf) return -1.0;
    }
    if (present < 2) return -1.0;
    double weighted = 0.0;
    for (std::size_t g = 0; g < k; ++g) {
        if (group_n[g] == 0) continue;
        NodeStats s;
        s.n = group_n[g];
        if (ctx.td.task == TreeTask::classification) {
            s.counts = group_counts[g];
        } else {
            s.sum = group_sum[g];
            s.sum_sq = group_sum_sq[g];
        }
        weighted += static_cast<double>(group_n[g]) / static_cast<double>(rows.size()) *
                    stats_impurity(s, ctx.crit);
    }
    return weighted;
}

// Best threshold for a numeric attribute; returns weighted child impurity and
// the midpoint threshold, or found = false.
struct NumericSplit {
    bool found = false;
    double threshold = 0.0;
    double weighted = 0.0;
};

NumericSplit best_numeric_split(const FitContext& ctx, std::size_t attr,
                                std::span<const std::size_t> rows) {
    const auto& a = ctx.td.attrs[attr];
    const std::size_t n = rows.size();
    std::vector<std::size_t> order(rows.begin(), rows.end());
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a.num[x] < a.num[y]; });

    NumericSplit best;
    const bool classify = ctx.td.task == TreeTask::classification;
    const std::size_t kc = classify ? ctx.td.y_vocab.size() : 0;
    std::vector<std::size_t> left_counts(kc, 0);
    std::vector<std::size_t> total_counts(kc, 0);
    double left_sum = 0.0, left_sq = 0.0, total_sum = 0.0, total_sq = 0.0;
    if (classify) {
        for (std::size_t r : order) total_counts[static_cast<std::size_t>(ctx.td.y_codes[r])]++;
    } else {
        for (std::size_t r : order) {
            total_sum += ctx.td.y[r];
            total_sq += ctx.td.y[r] * ctx.td.y[r];
        }
    }

    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t r = order[i];
        if (classify) {
            left_counts[static_cast<std::size_t>(ctx.td.y_codes[r])]++;
        } else {
            left_sum += ctx.td.y[r];
            left_sq += ctx.td.y[r] * ctx.td.y[r];
        }
        const double v = a.num[r];
        const double v_next = a.num[order[i + 1]];
        if (v_next <= v) continue;  // not a distinct-value boundary
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < ctx.opt.min_samples_leaf || nr < ctx.opt.min_samples_leaf) continue;

        NodeStats ls, rs;
        ls.n = nl;
        rs.n = nr;
        if (classify) {
            ls.counts = left_counts;
            rs.counts.resize(kc);
            for (std::size_t c = 0; c < kc; ++c) rs.counts[c] = total_counts[c] - left_counts[c];
        } else {
            ls.sum = left_sum;
            ls.sum_sq = left_sq;
            rs.sum = total_sum - left_sum;
            rs.sum_sq = total_sq - left_sq;
        }
        const double weighted =
            (static_cast<double>(nl) * stats_impurity(ls, ctx.crit) +
             static_cast<double>(nr) * stats_impurity(rs, ctx.crit)) /
            static_cast<double>(n);
        if (!best.found || weighted < best.weighted - 1e-15) {
            best.found = true;
            best.weighted = weighted;
            best.threshold = 0.5 * (v + v_next);
        }
    }
    return best;
}

std::unique_ptr<TreeNode> make_leaf(const FitContext& ctx, const NodeStats& s) {
    auto node = std::make_unique<TreeNode>();
    node->leaf = true;
    node->support = s.n;
    if (ctx.td.task == TreeTask::classification) {
        node->label = ctx.td.y_vocab[static_cast<std::size_t>(majority_code(s))];
    } else {
        node->value = s.sum / static_cast<double>(s.n);
    }
    return node;
}

std::unique_ptr<TreeNode> fit_node(const FitContext& ctx, std::vector<std::size_t>& rows,
                                   std::size_t depth, std::vector<bool>& attr_used) {
    const NodeStats stats = gather_stats(ctx.td, rows);
    const double node_impurity = stats_impurity(stats, ctx.crit);

    const bool pure = node_impurity <= 1e-12;
    if (pure || rows.size() < ctx.opt.min_samples_split || depth >= ctx.opt.max_depth) {
        return make_leaf(ctx, stats);
    }

    // Candidate attributes, optionally restricted to a random subset.
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < ctx.td.attrs.size(); ++j) {
        if (!attr_used[j]) candidates.push_back(j);
    }
    if (candidates.empty()) return make_leaf(ctx, stats);
    if (ctx.opt.max_features > 0 && ctx.opt.max_features < candidates.size()) {
        if (!ctx.rng) throw std::invalid_argument("fit_tree: max_features needs an Rng");
        ctx.rng->shuffle(candidates);
        candidates.resize(ctx.opt.max_features);
        std::sort(candidates.begin(), candidates.end());
    }

    // Score every candidate; kept deterministic, so the scan may run in
    // parallel with the argmax taken afterwards in index order.
    struct Scored {
        bool usable = false;
        bool numeric = false;
        double threshold = 0.0;
        double weighted = 0.0;
    };
    std::vector<Scored> scored(candidates.size());
    const bool parallel_eval = rows.size() * candidates.size() > 20000;
    const std::ptrdiff_t n_cand = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(dynamic) if (parallel_eval)
    for (std::ptrdiff_t ci = 0; ci < n_cand; ++ci) {
        const std::size_t j = candidates[static_cast<std::size_t>(ci)];
        Scored sc;
        if (ctx.td.attrs[j].numeric) {
            const NumericSplit ns = best_numeric_split(ctx, j, rows);
            if (ns.found) {
                sc.usable = true;
                sc.numeric = true;
                sc.threshold = ns.threshold;
                sc.weighted = ns.weighted;
            }
        } else {
            const double w = categorical_child_impurity(ctx, j, rows);
            if (w >= 0.0) {
                sc.usable = true;
                sc.weighted = w;
            }
        }
        scored[static_cast<std::size_t>(ci)] = sc;
    }

    SplitChoice best;
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        if (!scored[ci].usable) continue;
        const double gain = node_impurity - scored[ci].weighted;
        double score = gain;
        if (ctx.crit == SplitCriterion::gain_ratio) score = gain / node_impurity;
        if (!best.found || score > best.score + 1e-12) {
            best.found = true;
            best.attr = candidates[ci];
            best.numeric = scored[ci].numeric;
            best.threshold = scored[ci].threshold;
            best.score = score;
            best.weighted_child_impurity = scored[ci].weighted;
        }
    }
    if (!best.found || node_impurity - best.weighted_child_impurity <= 1e-12) {
        return make_leaf(ctx, stats);
    }

    auto node = std::make_unique<TreeNode>();
    node->leaf = false;
    node->support = rows.size();
    node->attr = ctx.td.attrs[best.attr].name;
    node->attr_index = best.attr;
    node->numeric_split = best.numeric;
    node->impurity_decrease = static_cast<double>(rows.size()) / ctx.n_total *
                              (node_impurity - best.weighted_child_impurity);
    // Fallback prediction for rows that cannot be routed.
    if (ctx.td.task == TreeTask::classification) {
        node->label = ctx.td.y_vocab[static_cast<std::size_t>(majority_code(stats))];
    } else {
        node->value = stats.sum / static_cast<double>(stats.n);
    }

    if (best.numeric) {
        node->threshold = best.threshold;
        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows) {
            (ctx.td.attrs[best.attr].num[r] < best.threshold ? left_rows : right_rows)
                .push_back(r);
        }
        node->left = fit_node(ctx, left_rows, depth + 1, attr_used);
        node->right = fit_node(ctx, right_rows, depth + 1, attr_used);
    } else {
        // Categorical attributes are used at most once per path.
        attr_used[best.attr] = true;
        const auto& a = ctx.td.attrs[best.attr];
        std::vector<std::vector<std::size_t>> groups(a.vocab.size());
        for (std::size_t r : rows) groups[static_cast<std::size_t>(a.codes[r])].push_back(r);
        for (std::size_t g = 0; g < a.vocab.size(); ++g) {
            if (groups[g].empty()) continue;
            node->branches.emplace_back(a.vocab[g],
                                        fit_node(ctx, groups[g], depth + 1, attr_used));
        }
        attr_used[best.attr] = false;
    }
    return node;
}

SplitCriterion default_criterion(const TreeData& td, const TreeOptions& opt) {
    if (opt.criterion) return *opt.criterion;
    if (td.task == TreeTask::regression) return SplitCriterion::variance;
    switch (opt.algorithm) {
        case TreeAlgorithm::id3:
            return SplitCriterion::entropy_gain;
        case TreeAlgorithm::c45:
            return SplitCriterion::gain_ratio;
        case TreeAlgorithm::cart:
            return SplitCriterion::gini;
    }
    throw std::logic_error("default_criterion");
}

void validate_options(const TreeData& td, const TreeOptions& opt, SplitCriterion crit) {
    if (td.task == TreeTask::regression && crit != SplitCriterion::variance) {
        throw std::invalid_argument("fit_tree: regression requires the variance criterion");
    }
    if (td.task == TreeTask::classification && crit == SplitCriterion::variance) {
        throw std::invalid_argument("fit_tree: variance criterion is regression-only");
    }
    for (const auto& a : td.attrs) {
        if (!a.numeric && opt.algorithm == TreeAlgorithm::cart) {
            throw std::invalid_argument(
                "fit_tree: this CART implementation handles numeric attributes only");
        }
        if (a.numeric && opt.algorithm == TreeAlgorithm::id3) {
            throw std::invalid_argument("fit_tree: ID3 handles categorical attributes only");
        }
    }
}

}  // namespace

std::unique_ptr<TreeNode> fit_tree(const TreeData& td, const TreeOptions& options,
                                   std::span<const std::size_t> rows, Rng* feature_rng) {
    if (rows.empty()) throw std::invalid_argument("fit_tree: empty row set");
    const SplitCriterion crit = default_criterion(td, options);
    validate_options(td, options, crit);
    FitContext ctx{td, options, crit, static_cast<double>(rows.size()), feature_rng};
    std::vector<std::size_t> row_vec(rows.begin(), rows.end());
    std::vector<bool> used(td.attrs.size(), false);
    return fit_node(ctx, row_vec, 0, used);
}

std::unique_ptr<TreeNode> fit_tree(const TreeData& td, const TreeOptions& options,
                                   Rng* feature_rng) {
    std::vector<std::size_t> rows(td.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    return fit_tree(td, options, rows, feature_rng);
}

std::unique_ptr<TreeNode> fit_tree(const Dataset& d, const TreeOptions& options) {
    return fit_tree(TreeData::from_dataset(d), options);
}

double information_gain(const TreeData& td, const std::string& attribute) {
    if (td.task != TreeTask::classification) {
        throw std::invalid_argument("information_gain: classification only");
    }
    std::size_t attr = td.attrs.size();
    for (std::size_t j = 0; j < td.attrs.size(); ++j) {
        if (td.attrs[j].name == attribute) attr = j;
    }
    if (attr == td.attrs.size()) {
        throw std::invalid_argument("information_gain: unknown attribute '" + attribute + "'");
    }
    std::vector<std::size_t> rows(td.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    FitContext ctx{td, TreeOptions{}, SplitCriterion::entropy_gain, static_cast<double>(rows.size()),
                   nullptr};
    const NodeStats stats = gather_stats(td, rows);
    const double parent = entropy(stats.counts);
    const double weighted = categorical_child_impurity(ctx, attr, rows);
    if (weighted < 0.0) throw std::invalid_argument("information_gain: attribute cannot split");
    return parent - weighted;
}

double gain_ratio(const TreeData& td, const std::string& attribute) {
    std::vector<std::size_t> rows(td.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    const NodeStats stats = gather_stats(td, rows);
    const double parent = entropy(stats.counts);
    return information_gain(td, attribute) / parent;
}

namespace {

const TreeNode* descend_categorical(const TreeNode& node, const std::string& value) {
    for (const auto& [v, child] : node.branches) {
        if (v == value) return child.get();
    }
    return nullptr;
}

}  // namespace

std::string predict_label(const TreeNode& tree, const Dataset& d, std::size_t row) {
    const TreeNode* node = &tree;
    while (!node->leaf) {
        const Column& c = d.column(node->attr);  // throws when the attribute is absent
        const TreeNode* next = nullptr;
        if (node->numeric_split) {
            if (c.kind != ColumnKind::numeric) {
                throw std::invalid_argument("predict: attribute kind mismatch for " + node->attr);
            }
            next = c.num[row] < node->threshold ? node->left.get() : node->right.get();
        } else {
            if (c.kind != ColumnKind::categorical) {
                throw std::invalid_argument("predict: attribute kind mismatch for " + node->attr);
            }
            next = descend_categorical(*node, c.cat[row]);
            if (!next) return node->label;  // unseen category: majority fallback
        }
        node = next;
    }
    return node->label;
}

std::string predict_label(const TreeNode& tree, const TreeData& td, std::size_t row) {
    const TreeNode* node = &tree;
    while (!node->leaf) {
        const auto& a = td.attrs[node->attr_index];
        if (node->numeric_split) {
            node = a.num[row] < node->threshold ? node->left.get() : node->right.get();
        } else {
            const TreeNode* next =
                descend_categorical(*node, a.vocab[static_cast<std::size_t>(a.codes[row])]);
            if (!next) return node->label;
            node = next;
        }
    }
    return node->label;
}

double predict_value(const TreeNode& tree, std::span<const double> x) {
    const TreeNode* node = &tree;
    while (!node->leaf) {
        if (!node->numeric_split) {
            throw std::invalid_argument("predict_value: tree has categorical splits");
        }
        if (node->attr_index >= x.size()) {
            throw std::invalid_argument("predict_value: feature vector too short");
        }
        node = x[node->attr_index] < node->threshold ? node->left.get() : node->right.get();
    }
    return node->value;
}

std::unique_ptr<TreeNode> clone_tree(const TreeNode& tree) {
    auto node = std::make_unique<TreeNode>();
    node->leaf = tree.leaf;
    node->support = tree.support;
    node->label = tree.label;
    node->value = tree.value;
    node->attr = tree.attr;
    node->attr_index = tree.attr_index;
    node->numeric_split = tree.numeric_split;
    node->threshold = tree.threshold;
    node->impurity_decrease = tree.impurity_decrease;
    for (const auto& [v, child] : tree.branches) {
        node->branches.emplace_back(v, clone_tree(*child));
    }
    if (tree.left) node->left = clone_tree(*tree.left);
    if (tree.right) node->right = clone_tree(*tree.right);
    return node;
}

double tree_accuracy(const TreeNode& tree, const Dataset& d) {
    if (!d.label()) throw std::invalid_argument("tree_accuracy: no label column");
    const Column& yc = d.column(*d.label());
    if (yc.kind != ColumnKind::categorical) {
        throw std::invalid_argument("tree_accuracy: classification labels required");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        if (predict_label(tree, d, i) == yc.cat[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(d.n_rows());
}

namespace {

// Collapses one all-leaf-children node at a time when validation accuracy
// does not decrease; returns true when something changed.
bool prune_pass(std::unique_ptr<TreeNode>& root, TreeNode& node, const Dataset& val,
                double& best_acc) {
    bool changed = false;
    if (node.leaf) return false;
    for (auto& [v, child] : node.branches) {
        changed |= prune_pass(root, *child, val, best_acc);
    }
    if (node.left) changed |= prune_pass(root, *node.left, val, best_acc);
    if (node.right) changed |= prune_pass(root, *node.right, val, best_acc);

    bool all_leaves = true;
    for (const auto& [v, child] : node.branches) all_leaves &= child->leaf;
    if (node.left) all_leaves &= node.left->leaf && node.right->leaf;
    if (!all_leaves || node.leaf) return changed;

    TreeNode saved = std::move(node);
    node = TreeNode{};
    node.leaf = true;
    node.support = saved.support;
    node.label = saved.label;
    node.value = saved.value;
    const double acc = tree_accuracy(*root, val);
    if (acc >= best_acc) {
        best_acc = acc;
        return true;
    }
    node = std::move(saved);
    return changed;
}

}  // namespace

std::unique_ptr<TreeNode> prune(const TreeNode& tree, const Dataset& validation) {
    if (validation.n_rows() == 0) throw std::invalid_argument("prune: empty validation set");
    auto out = clone_tree(tree);
    double best = tree_accuracy(*out, validation);
    while (prune_pass(out, *out, validation, best)) {
    }
    return out;
}

namespace {

void print_node(const TreeNode& node, std::ostringstream& os, std::size_t indent) {
    const std::string pad(indent * 2, ' ');
    os << pad << node.attr << '\n';
    if (node.numeric_split) {
        os << pad << "  < " << node.threshold << " ->\n";
        if (node.left->leaf) {
            os << pad << "    " << (node.left->label.empty() ? std::to_string(node.left->value)
                                                             : node.left->label)
               << '\n';
        } else {
            print_node(*node.left, os, indent + 2);
        }
        os << pad << "  >= " << node.threshold << " ->\n";
        if (node.right->leaf) {
            os << pad << "    " << (node.right->label.empty() ? std::to_string(node.right->value)
                                                              : node.right->label)
               << '\n';
        } else {
            print_node(*node.right, os, indent + 2);
        }
        return;
    }
    for (const auto& [v, child] : node.branches) {
        if (child->leaf) {
            os << pad << "  " << v << " -> "
               << (child->label.empty() ? std::to_string(child->value) : child->label) << '\n';
        } else {
            os << pad << "  " << v << " ->\n";
            print_node(*child, os, indent + 2);
        }
    }
}

}  // namespace

std::string print_tree(const TreeNode& tree) {
    std::ostringstream os;
    if (tree.leaf) {
        os << (tree.label.empty() ? std::to_string(tree.value) : tree.label) << '\n';
        return os.str();
    }
    print_node(tree, os, 0);
    return os.str();
}

void accumulate_importance(const TreeNode& tree, Vector& sums) {
    if (tree.leaf) return;
    if (tree.attr_index < sums.size()) sums[tree.attr_index] += tree.impurity_decrease;
    for (const auto& [v, child] : tree.branches) accumulate_importance(*child, sums);
    if (tree.left) accumulate_importance(*tree.left, sums);
    if (tree.right) accumulate_importance(*tree.right, sums);
}

}  // namespace ml
