#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ml/dataset.hpp"
#include "ml/matrix.hpp"
#include "ml/rng.hpp"

namespace ml {

enum class TreeAlgorithm { id3, c45, cart };
enum class SplitCriterion { entropy_gain, gain_ratio, gini, variance };
enum class TreeTask { classification, regression };

/// -sum p_i log2 p_i with 0 log 0 = 0. Throws on an all-zero count vector.
double entropy(std::span<const std::size_t> class_counts);
/// 1 - sum p_i^2.
double gini(std::span<const std::size_t> class_counts);

struct TreeNode {
    bool leaf = true;
    std::size_t support = 0;

    // Leaf payload (and the fallback for unseen categorical values).
    std::string label;
    double value = 0.0;

    // Internal payload.
    std::string attr;
    std::size_t attr_index = 0;
    bool numeric_split = false;
    double threshold = 0.0;  // strictly-less goes left
    std::vector<std::pair<std::string, std::unique_ptr<TreeNode>>> branches;  // categorical
    std::unique_ptr<TreeNode> left;
    std::unique_ptr<TreeNode> right;

    // weight * (parent impurity - weighted child impurity), for MDI.
    double impurity_decrease = 0.0;

    std::size_t node_count() const;
};

struct TreeOptions {
    TreeAlgorithm algorithm = TreeAlgorithm::id3;
    std::optional<SplitCriterion> criterion;  // default depends on algorithm and task
    std::size_t max_depth = static_cast<std::size_t>(-1);
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;  // 0 = consider all features at each split
};

/// Columnar view the induction works over; built once per dataset.
struct TreeData {
    struct Attr {
        std::string name;
        bool numeric = true;
        Vector num;
        std::vector<int> codes;
        std::vector<std::string> vocab;  // order of first appearance
    };
    TreeTask task = TreeTask::classification;
    std::vector<Attr> attrs;
    std::vector<int> y_codes;
    std::vector<std::string> y_vocab;
    Vector y;

    std::size_t n_rows() const;

    /// Label column is the dataset label; categorical label => classification.
    static TreeData from_dataset(const Dataset& d);
    static TreeData from_matrix(const Matrix& x, const Vector& y, TreeTask task,
                                std::vector<std::string> names = {});
};

double information_gain(const TreeData& td, const std::string& attribute);
/// Paper form: information gain divided by the parent entropy (not the
/// classical split information).
double gain_ratio(const TreeData& td, const std::string& attribute);

std::unique_ptr<TreeNode> fit_tree(const TreeData& td, const TreeOptions& options,
                                   Rng* feature_rng = nullptr);
std::unique_ptr<TreeNode> fit_tree(const TreeData& td, const TreeOptions& options,
                                   std::span<const std::size_t> rows, Rng* feature_rng = nullptr);
std::unique_ptr<TreeNode> fit_tree(const Dataset& d, const TreeOptions& options);

/// Classification prediction for a dataset row. Unseen categorical values
/// fall back to the node's majority label.
std::string predict_label(const TreeNode& tree, const Dataset& d, std::size_t row);
std::string predict_label(const TreeNode& tree, const TreeData& td, std::size_t row);
/// Regression prediction over numeric features.
double predict_value(const TreeNode& tree, std::span<const double> x);

/// Reduced-error pruning against a validation set: any node whose children
/// are all leaves is collapsed whenever validation accuracy (classification)
/// does not decrease. Repeats to a fixpoint. Returns the pruned copy.
std::unique_ptr<TreeNode> prune(const TreeNode& tree, const Dataset& validation);

double tree_accuracy(const TreeNode& tree, const Dataset& d);

/// Indented rendering: attribute, then one "value ->" line per branch.
std::string print_tree(const TreeNode& tree);

/// Per-feature impurity-decrease sums (unnormalized MDI contribution).
void accumulate_importance(const TreeNode& tree, Vector& sums);

std::unique_ptr<TreeNode> clone_tree(const TreeNode& tree);

}  // namespace ml
