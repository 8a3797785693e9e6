#include "ml/serialize.hpp"

#include <fstream>

namespace ml {

Json matrix_to_json(const Matrix& m) {
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const Json& j) {
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<Vector>());
}

Json linear_to_json(const LinearModel& m) {
    return Json{{"kind", "linear"}, {"weights", m.weights}, {"bias", m.bias}};
}

LinearModel linear_from_json(const Json& j) {
    LinearModel m;
    m.weights = j.at("weights").get<Vector>();
    m.bias = j.at("bias").get<double>();
    return m;
}

Json svm_to_json(const SvmModel& m) {
    Json j{{"kind", "svm"},
           {"is_dual", m.is_dual},
           {"b", m.b},
           {"c", m.c},
           {"kernel",
            {{"kind", static_cast<int>(m.kernel.kind)},
             {"gamma", m.kernel.gamma},
             {"coef0", m.kernel.coef0},
             {"degree", m.kernel.degree}}}};
    if (m.is_dual) {
        j["support_vectors"] = matrix_to_json(m.support_vectors);
        j["alpha"] = m.alpha;
        j["sv_y"] = m.sv_y;
    } else {
        j["w"] = m.w;
    }
    return j;
}

SvmModel svm_from_json(const Json& j) {
    SvmModel m;
    m.is_dual = j.at("is_dual").get<bool>();
    m.b = j.at("b").get<double>();
    m.c = j.at("c").get<double>();
    const Json& k = j.at("kernel");
    m.kernel.kind = static_cast<KernelKind>(k.at("kind").get<int>());
    m.kernel.gamma = k.at("gamma").get<double>();
    m.kernel.coef0 = k.at("coef0").get<double>();
    m.kernel.degree = k.at("degree").get<int>();
    if (m.is_dual) {
        m.support_vectors = matrix_from_json(j.at("support_vectors"));
        m.alpha = j.at("alpha").get<Vector>();
        m.sv_y = j.at("sv_y").get<Vector>();
    } else {
        m.w = j.at("w").get<Vector>();
    }
    return m;
}

Json tree_to_json(const TreeNode& t) {
    Json j;
    j["leaf"] = t.leaf;
    j["support"] = t.support;
    j["label"] = t.label;
    j["value"] = t.value;
    if (!t.leaf) {
        j["attr"] = t.attr;
        j["attr_index"] = t.attr_index;
        j["numeric_split"] = t.numeric_split;
        j["impurity_decrease"] = t.impurity_decrease;
        if (t.numeric_split) {
            j["threshold"] = t.threshold;
            j["left"] = tree_to_json(*t.left);
            j["right"] = tree_to_json(*t.right);
        } else {
            Json branches = Json::array();
            for (const auto& [v, child] : t.branches) {
                branches.push_back(Json{{"value", v}, {"child", tree_to_json(*child)}});
            }
            j["branches"] = branches;
        }
    }
    return j;
}

std::unique_ptr<TreeNode> tree_from_json(const Json& j) {
    auto t = std::make_unique<TreeNode>();
    t->leaf = j.at("leaf").get<bool>();
    t->support = j.at("support").get<std::size_t>();
    t->label = j.at("label").get<std::string>();
    t->value = j.at("value").get<double>();
    if (!t->leaf) {
        t->attr = j.at("attr").get<std::string>();
        t->attr_index = j.at("attr_index").get<std::size_t>();
        t->numeric_split = j.at("numeric_split").get<bool>();
        t->impurity_decrease = j.at("impurity_decrease").get<double>();
        if (t->numeric_split) {
            t->threshold = j.at("threshold").get<double>();
            t->left = tree_from_json(j.at("left"));
            t->right = tree_from_json(j.at("right"));
        } else {
            for (const auto& b : j.at("branches")) {
                t->branches.emplace_back(b.at("value").get<std::string>(),
                                         tree_from_json(b.at("child")));
            }
        }
    }
    return t;
}

Json forest_to_json(const RandomForestModel& m) {
    Json trees = Json::array();
    for (const auto& t : m.trees) trees.push_back(tree_to_json(*t));
    return Json{{"kind", "random-forest"},
                {"task", m.task == TreeTask::regression ? "regression" : "classification"},
                {"feature_names", m.feature_names},
                {"y_vocab", m.y_vocab},
                {"trees", trees}};
}

RandomForestModel forest_from_json(const Json& j) {
    RandomForestModel m;
    m.task = j.at("task").get<std::string>() == "regression" ? TreeTask::regression
                                                             : TreeTask::classification;
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.y_vocab = j.at("y_vocab").get<std::vector<std::string>>();
    for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
    return m;
}

Json gboost_to_json(const GBoostModel& m) {
    Json trees = Json::array();
    for (const auto& t : m.trees) trees.push_back(tree_to_json(*t));
    return Json{{"kind", "gboost"},
                {"f0", m.f0},
                {"learning_rate", m.learning_rate},
                {"tree_features", m.tree_features},
                {"feature_names", m.feature_names},
                {"trees", trees}};
}

GBoostModel gboost_from_json(const Json& j) {
    GBoostModel m;
    m.f0 = j.at("f0").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.tree_features = j.at("tree_features").get<std::vector<std::vector<std::size_t>>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
    return m;
}

Json adaboost_to_json(const AdaBoostModel& m) {
    Json stumps = Json::array();
    for (const auto& s : m.stumps) {
        stumps.push_back(Json{{"feature", s.feature},
                              {"threshold", s.threshold},
                              {"left", s.left_value},
                              {"right", s.right_value}});
    }
    return Json{{"kind", "adaboost"}, {"stumps", stumps}, {"weights", m.stump_weights}};
}

AdaBoostModel adaboost_from_json(const Json& j) {
    AdaBoostModel m;
    for (const auto& s : j.at("stumps")) {
        Stump st;
        st.feature = s.at("feature").get<std::size_t>();
        st.threshold = s.at("threshold").get<double>();
        st.left_value = s.at("left").get<double>();
        st.right_value = s.at("right").get<double>();
        m.stumps.push_back(st);
    }
    m.stump_weights = j.at("weights").get<Vector>();
    return m;
}

Json mlp_to_json(const Mlp& m) {
    Json layers = Json::array();
    for (const auto& l : m.layers()) {
        layers.push_back(Json{{"w", matrix_to_json(l.w)},
                              {"b", l.b},
                              {"activation", activation_name(l.act)}});
    }
    return Json{{"kind", "mlp"}, {"layers", layers}};
}

Mlp mlp_from_json(const Json& j) {
    std::vector<DenseLayer> layers;
    for (const auto& l : j.at("layers")) {
        DenseLayer layer;
        layer.w = matrix_from_json(l.at("w"));
        layer.b = l.at("b").get<Vector>();
        layer.act = activation_from_name(l.at("activation").get<std::string>());
        layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
}

namespace {

const char* rnn_kind_name(RnnKind k) {
    switch (k) {
        case RnnKind::simple:
            return "simple";
        case RnnKind::lstm:
            return "lstm";
        case RnnKind::gru:
            return "gru";
    }
    return "simple";
}

RnnKind rnn_kind_from_name(const std::string& name) {
    if (name == "lstm") return RnnKind::lstm;
    if (name == "gru") return RnnKind::gru;
    return RnnKind::simple;
}

}  // namespace

Json rnn_to_json(const RnnRegressor& m) {
    RnnCell& cell = const_cast<RnnRegressor&>(m).cell;
    Json mats = Json::array();
    for (Matrix* mat : cell.matrices()) mats.push_back(matrix_to_json(*mat));
    Json vecs = Json::array();
    for (Vector* v : cell.vectors()) vecs.push_back(*v);
    return Json{{"kind", "rnn"},
                {"cell_kind", rnn_kind_name(m.cell.kind)},
                {"input_size", m.cell.input_size},
                {"hidden_size", m.cell.hidden_size},
                {"matrices", mats},
                {"vectors", vecs},
                {"w_head", matrix_to_json(m.w_head)},
                {"b_head", m.b_head}};
}

RnnRegressor rnn_from_json(const Json& j) {
    RnnRegressor m;
    Rng rng(0);
    m.cell = RnnCell::create(rnn_kind_from_name(j.at("cell_kind").get<std::string>()),
                             j.at("input_size").get<std::size_t>(),
                             j.at("hidden_size").get<std::size_t>(), rng);
    auto mats = m.cell.matrices();
    const Json& jm = j.at("matrices");
    for (std::size_t i = 0; i < mats.size(); ++i) *mats[i] = matrix_from_json(jm.at(i));
    auto vecs = m.cell.vectors();
    const Json& jv = j.at("vectors");
    for (std::size_t i = 0; i < vecs.size(); ++i) *vecs[i] = jv.at(i).get<Vector>();
    m.w_head = matrix_from_json(j.at("w_head"));
    m.b_head = j.at("b_head").get<Vector>();
    return m;
}

Json cnn_to_json(const CnnRegressor& m) {
    CnnRegressor& mm = const_cast<CnnRegressor&>(m);
    Json arch;
    Json conv_blocks = Json::array();
    for (const auto& b : m.architecture().conv_blocks) {
        conv_blocks.push_back(Json{{"filters", b.filters},
                                   {"kernel", b.kernel},
                                   {"pool_window", b.pool_window},
                                   {"batch_norm", b.batch_norm}});
    }
    arch["conv_blocks"] = conv_blocks;
    arch["dense_sizes"] = m.architecture().dense_sizes;
    arch["dense_dropout"] = m.architecture().dense_dropout;

    Json params = Json::array();
    for (const auto& block : mm.param_blocks()) {
        params.push_back(Vector(block.params, block.params + block.size));
    }
    Json bn_stats = Json::array();
    for (auto& b : mm.conv_blocks()) {
        if (b.bn) {
            bn_stats.push_back(
                Json{{"mean", b.bn->running_mean}, {"var", b.bn->running_var}});
        }
    }
    return Json{{"kind", "cnn"},
                {"input_h", mm.conv_blocks().front().in_h},
                {"input_w", mm.conv_blocks().front().in_w},
                {"architecture", arch},
                {"params", params},
                {"bn_stats", bn_stats}};
}

std::unique_ptr<CnnRegressor> cnn_from_json(const Json& j) {
    CnnArchitecture arch;
    for (const auto& b : j.at("architecture").at("conv_blocks")) {
        arch.conv_blocks.push_back({b.at("filters").get<std::size_t>(),
                                    b.at("kernel").get<std::size_t>(),
                                    b.at("pool_window").get<std::size_t>(),
                                    b.at("batch_norm").get<bool>()});
    }
    arch.dense_sizes = j.at("architecture").at("dense_sizes").get<std::vector<std::size_t>>();
    arch.dense_dropout = j.at("architecture").at("dense_dropout").get<double>();
    Rng rng(0);
    auto m = std::make_unique<CnnRegressor>(j.at("input_h").get<std::size_t>(),
                                            j.at("input_w").get<std::size_t>(), arch, rng);
    auto blocks = m->param_blocks();
    const Json& params = j.at("params");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const Vector v = params.at(i).get<Vector>();
        for (std::size_t e = 0; e < blocks[i].size; ++e) blocks[i].params[e] = v[e];
    }
    std::size_t bn_index = 0;
    const Json& bn_stats = j.at("bn_stats");
    for (auto& b : m->conv_blocks()) {
        if (b.bn) {
            b.bn->running_mean = bn_stats.at(bn_index).at("mean").get<Vector>();
            b.bn->running_var = bn_stats.at(bn_index).at("var").get<Vector>();
            ++bn_index;
        }
    }
    return m;
}

Json transformer_to_json(ToyTransformer& m) {
    Json params = Json::array();
    for (const auto& block : m.param_blocks()) {
        params.push_back(Vector(block.params, block.params + block.size));
    }
    return Json{{"kind", "transformer-toy"},
                {"config",
                 {{"vocab", m.config().vocab},
                  {"d_model", m.config().d_model},
                  {"heads", m.config().heads},
                  {"layers", m.config().layers},
                  {"d_ff", m.config().d_ff},
                  {"max_len", m.config().max_len}}},
                {"params", params}};
}

std::unique_ptr<ToyTransformer> transformer_from_json(const Json& j) {
    TransformerConfig cfg;
    const Json& c = j.at("config");
    cfg.vocab = c.at("vocab").get<std::size_t>();
    cfg.d_model = c.at("d_model").get<std::size_t>();
    cfg.heads = c.at("heads").get<std::size_t>();
    cfg.layers = c.at("layers").get<std::size_t>();
    cfg.d_ff = c.at("d_ff").get<std::size_t>();
    cfg.max_len = c.at("max_len").get<std::size_t>();
    Rng rng(0);
    auto m = std::make_unique<ToyTransformer>(cfg, rng);
    auto blocks = m->param_blocks();
    const Json& params = j.at("params");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const Vector v = params.at(i).get<Vector>();
        for (std::size_t e = 0; e < blocks[i].size; ++e) blocks[i].params[e] = v[e];
    }
    return m;
}

Json kmeans_to_json(const KMeansModel& m) {
    return Json{{"kind", "kmeans"},
                {"centroids", matrix_to_json(m.centroids)},
                {"inertia", m.inertia},
                {"iterations", m.iterations}};
}

KMeansModel kmeans_from_json(const Json& j) {
    KMeansModel m;
    m.centroids = matrix_from_json(j.at("centroids"));
    m.inertia = j.at("inertia").get<double>();
    m.iterations = j.at("iterations").get<std::size_t>();
    return m;
}

Json gmm_to_json(const GmmModel& m) {
    Json covs = Json::array();
    for (const auto& c : m.covariances) covs.push_back(matrix_to_json(c));
    return Json{{"kind", "gmm"},
                {"weights", m.weights},
                {"means", matrix_to_json(m.means)},
                {"covariances", covs}};
}

GmmModel gmm_from_json(const Json& j) {
    GmmModel m;
    m.weights = j.at("weights").get<Vector>();
    m.means = matrix_from_json(j.at("means"));
    for (const auto& c : j.at("covariances")) m.covariances.push_back(matrix_from_json(c));
    return m;
}

Json kpca_to_json(const KernelPcaModel& m) {
    return Json{{"kind", "kpca"},
                {"kernel",
                 {{"kind", static_cast<int>(m.kernel.kind)},
                  {"gamma", m.kernel.gamma},
                  {"coef0", m.kernel.coef0},
                  {"degree", m.kernel.degree}}},
                {"train_points", matrix_to_json(m.train_points)},
                {"alphas", matrix_to_json(m.alphas)},
                {"eigenvalues", m.eigenvalues},
                {"row_means", m.row_means},
                {"total_mean", m.total_mean}};
}

KernelPcaModel kpca_from_json(const Json& j) {
    KernelPcaModel m;
    const Json& k = j.at("kernel");
    m.kernel.kind = static_cast<KernelKind>(k.at("kind").get<int>());
    m.kernel.gamma = k.at("gamma").get<double>();
    m.kernel.coef0 = k.at("coef0").get<double>();
    m.kernel.degree = k.at("degree").get<int>();
    m.train_points = matrix_from_json(j.at("train_points"));
    m.alphas = matrix_from_json(j.at("alphas"));
    m.eigenvalues = j.at("eigenvalues").get<Vector>();
    m.row_means = j.at("row_means").get<Vector>();
    m.total_mean = j.at("total_mean").get<double>();
    return m;
}

Json rbfn_to_json(const RbfnModel& m) {
    return Json{{"kind", "rbfn"},
                {"centers", matrix_to_json(m.centers)},
                {"widths", m.widths},
                {"w_out", matrix_to_json(m.w_out)},
                {"bias_out", m.bias_out}};
}

RbfnModel rbfn_from_json(const Json& j) {
    RbfnModel m;
    m.centers = matrix_from_json(j.at("centers"));
    m.widths = j.at("widths").get<Vector>();
    m.w_out = matrix_from_json(j.at("w_out"));
    m.bias_out = j.at("bias_out").get<Vector>();
    return m;
}

Json report_to_json(const FitReport& r) {
    Json j{{"schema_version", 1}, {"seed", r.seed}, {"loss_history", r.loss_history}};
    for (const auto& [key, value] : r.metrics) j[key] = value;
    return j;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    Json j;
    in >> j;
    return j;
}

void write_json_file(const Json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << dump_json(j);
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace ml
