#pragma once

#include <json.hpp>

#include "ml/cluster.hpp"
#include "ml/ensemble.hpp"
#include "ml/linear.hpp"
#include "ml/nn/conv.hpp"
#include "ml/nn/mlp.hpp"
#include "ml/nn/optimizer.hpp"
#include "ml/nn/rnn.hpp"
#include "ml/nn/transformer.hpp"
#include "ml/svm.hpp"
#include "ml/tree.hpp"

namespace ml {

// Plain-text model dumps: shapes, parameter arrays, and activation names,
// written with sorted keys so identical models serialize byte-identically.
using Json = nlohmann::json;

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json linear_to_json(const LinearModel& m);
LinearModel linear_from_json(const Json& j);

Json svm_to_json(const SvmModel& m);
SvmModel svm_from_json(const Json& j);

Json tree_to_json(const TreeNode& t);
std::unique_ptr<TreeNode> tree_from_json(const Json& j);

Json forest_to_json(const RandomForestModel& m);
RandomForestModel forest_from_json(const Json& j);

Json gboost_to_json(const GBoostModel& m);
GBoostModel gboost_from_json(const Json& j);

Json adaboost_to_json(const AdaBoostModel& m);
AdaBoostModel adaboost_from_json(const Json& j);

Json mlp_to_json(const Mlp& m);
Mlp mlp_from_json(const Json& j);

Json rnn_to_json(const RnnRegressor& m);
RnnRegressor rnn_from_json(const Json& j);

Json cnn_to_json(const CnnRegressor& m);
/// Reconstruction needs the input shape stored in the dump.
std::unique_ptr<CnnRegressor> cnn_from_json(const Json& j);

Json transformer_to_json(ToyTransformer& m);
std::unique_ptr<ToyTransformer> transformer_from_json(const Json& j);

Json kmeans_to_json(const KMeansModel& m);
KMeansModel kmeans_from_json(const Json& j);

Json gmm_to_json(const GmmModel& m);
GmmModel gmm_from_json(const Json& j);

Json kpca_to_json(const KernelPcaModel& m);
KernelPcaModel kpca_from_json(const Json& j);

Json rbfn_to_json(const RbfnModel& m);
RbfnModel rbfn_from_json(const Json& j);

Json report_to_json(const FitReport& r);

/// Deterministic text rendering (sorted keys, newline-terminated).
std::string dump_json(const Json& j);
Json load_json_file(const std::string& path);
void write_json_file(const Json& j, const std::string& path);

}  // namespace ml
