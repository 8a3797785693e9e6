// Workshop command line: synthetic data generation, model training and
// evaluation, grid search, importance tables, and plot-data emission.
//
// Exit codes: 0 success, 2 configuration/validation error, 1 runtime error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "ml/cluster.hpp"
#include "ml/dataset.hpp"
#include "ml/ensemble.hpp"
#include "ml/linear.hpp"
#include "ml/metrics.hpp"
#include "ml/nn/conv.hpp"
#include "ml/nn/mlp.hpp"
#include "ml/nn/rnn.hpp"
#include "ml/nn/smiles.hpp"
#include "ml/nn/transformer.hpp"
#include "ml/preprocess.hpp"
#include "ml/serialize.hpp"
#include "ml/svm.hpp"
#include "ml/synth.hpp"
#include "ml/tree.hpp"

namespace {

using ml::Json;
using ml::Matrix;
using ml::Vector;

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key = value configuration with dotted keys; '#' starts a comment.
class Config {
public:
    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("config: cannot open '" + path + "'");
        Config cfg;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) {
                if (line.find_first_not_of(" \t\r") != std::string::npos) {
                    throw ValidationError("config line " + std::to_string(line_no) +
                                          ": expected key = value");
                }
                continue;
            }
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) {
                throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
            }
            cfg.set(key, value);
        }
        return cfg;
    }

    void set(const std::string& key, const std::string& value) {
        if (!map_.count(key)) order_.push_back(key);
        map_[key] = value;
    }
    bool has(const std::string& key) const { return map_.count(key) > 0; }
    std::string str(const std::string& key, const std::string& fallback = "") const {
        auto it = map_.find(key);
        return it == map_.end() ? fallback : it->second;
    }
    double num(const std::string& key, double fallback) const {
        auto it = map_.find(key);
        if (it == map_.end()) return fallback;
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (...) {
            throw ValidationError(key + ": cannot parse numeric value '" + it->second + "'");
        }
    }
    std::size_t count(const std::string& key, std::size_t fallback) const {
        const double v = num(key, static_cast<double>(fallback));
        if (v < 0.0 || v != std::floor(v)) throw ValidationError(key + ": expected a count");
        return static_cast<std::size_t>(v);
    }
    bool flag(const std::string& key, bool fallback) const {
        const std::string v = str(key, fallback ? "true" : "false");
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ValidationError(key + ": expected true or false");
    }
    const std::vector<std::string>& keys() const { return order_; }

private:
    std::map<std::string, std::string> map_;
    std::vector<std::string> order_;
};

const std::set<std::string> kModels = {
    "ols",     "ridge",    "lasso",           "logistic", "svm",  "svr",
    "tree",    "random-forest", "adaboost",   "gboost",   "stack", "mlp",
    "rbfn",    "lstm",     "gru",             "cnn",      "transformer-toy",
    "kmeans",  "dbscan",   "gmm",             "hierarchical", "kpca"};

std::string registered_models() {
    std::string out;
    for (const auto& m : kModels) {
        if (!out.empty()) out += ", ";
        out += m;
    }
    return out;
}

ml::Dataset load_dataset(const Config& cfg, std::uint64_t seed) {
    const std::string source = cfg.str("data.source");
    if (source.empty()) throw ValidationError("data.source: required");
    const std::size_t n = cfg.count("data.n", 1000);
    if (source == "synth-hdpe") {
        double noise = cfg.num("data.noise_sd", -1.0);
        if (cfg.has("data.noise_frac")) {
            // Noise scaled to a fraction of the noiseless target spread.
            const ml::Dataset clean = ml::synth_hdpe(n, seed, 0.0);
            const Vector mi = clean.column("MI").num;
            double mean = 0.0;
            for (double v : mi) mean += v;
            mean /= static_cast<double>(mi.size());
            double var = 0.0;
            for (double v : mi) var += (v - mean) * (v - mean);
            var /= static_cast<double>(mi.size() - 1);
            noise = cfg.num("data.noise_frac", 0.1) * std::sqrt(var);
        }
        if (noise < 0.0) noise = 0.0;
        return ml::synth_hdpe(n, seed, noise);
    }
    if (source == "synth-quadratic") {
        return ml::synth_quadratic(n, seed, cfg.num("data.noise_sd", 0.1));
    }
    if (source == "synth-smiles") return ml::synth_smiles(n, seed);
    if (source == "file") {
        const std::string path = cfg.str("data.path");
        if (path.empty()) throw ValidationError("data.path: required for data.source = file");
        std::ifstream probe(path);
        if (!probe) throw std::runtime_error("data.path: cannot open '" + path + "'");
        std::string header;
        std::getline(probe, header);
        std::vector<ml::ColumnSpec> schema;
        std::stringstream ss(header);
        std::string name;
        while (std::getline(ss, name, ',')) {
            if (!name.empty() && name.back() == '\r') name.pop_back();
            const auto kind = name == "smiles" || name == cfg.str("data.categorical")
                                  ? ml::ColumnKind::categorical
                                  : ml::ColumnKind::numeric;
            schema.push_back({name, kind});
        }
        ml::Dataset d = ml::read_csv(path, schema);
        const std::string label = cfg.str("data.label");
        if (!label.empty()) d.set_label(label);
        return d;
    }
    throw ValidationError("data.source: unknown source '" + source +
                          "' (file, synth-hdpe, synth-quadratic, synth-smiles)");
}

int cmd_generate(const std::string& source, std::size_t n, std::uint64_t seed, double noise_sd,
                 const std::string& out_path) {
    if (n == 0) throw ValidationError("--n: must be positive");
    Config cfg;
    cfg.set("data.source", source);
    cfg.set("data.n", std::to_string(n));
    cfg.set("data.noise_sd", std::to_string(noise_sd));
    const ml::Dataset d = load_dataset(cfg, seed);
    ml::write_csv(d, out_path);
    std::cout << "wrote " << d.n_rows() << " rows to " << out_path << "\n";
    std::cout << "schema:";
    for (const auto& c : d.columns()) {
        std::cout << ' ' << c.name
                  << (c.kind == ml::ColumnKind::numeric ? "(numeric)" : "(categorical)");
    }
    std::cout << "\n";
    return 0;
}

struct Pipeline {
    std::vector<std::string> features;
    std::string label;
    std::optional<ml::StandardScaler> scaler_x;
    std::optional<ml::StandardScaler> scaler_y;

    Matrix features_of(const ml::Dataset& d) const { return d.numeric_matrix(features); }
    Vector scaled_label(const ml::Dataset& d) const {
        Vector y = d.label_vector();
        if (scaler_y) {
            for (double& v : y) v = scaler_y->apply_value(label, v);
        }
        return y;
    }
    double invert_label(double v) const {
        return scaler_y ? scaler_y->invert_value(label, v) : v;
    }
};

Json pipeline_to_json(const Pipeline& p) {
    Json j{{"features", p.features}, {"label", p.label}};
    auto scaler_json = [](const ml::StandardScaler& s) {
        Json out = Json::array();
        for (const auto& name : s.columns()) {
            out.push_back(Json{{"column", name}, {"mean", s.mean_of(name)},
                               {"sd", s.sd_of(name)}});
        }
        return out;
    };
    if (p.scaler_x) j["scaler_x"] = scaler_json(*p.scaler_x);
    if (p.scaler_y) j["scaler_y"] = scaler_json(*p.scaler_y);
    return j;
}

struct EvalSeries {
    Vector actual;
    Vector predicted;
};

void add_regression_metrics(Json& report, const std::string& prefix, const Vector& y,
                            const Vector& pred) {
    if (y.empty()) return;
    report[prefix + "rmse"] = ml::rmse(y, pred);
    bool constant = true;
    for (double v : y) constant &= v == y.front();
    if (!constant) report[prefix + "r2"] = ml::r2(y, pred);
    double mean = 0.0;
    for (double v : y) mean += v;
    if (mean != 0.0) report[prefix + "nrmse"] = ml::nrmse_percent(y, pred);
}

// Trains the named model on pre-split, pre-scaled regression data and
// returns {model json, predictor in scaled units, loss history}.
struct TrainedRegressor {
    Json model;
    std::function<double(std::span<const double>)> predict;
    Vector loss_history;
};

TrainedRegressor train_regressor(const std::string& model, const Config& cfg, const Matrix& x,
                                 const Vector& y, std::uint64_t seed) {
    TrainedRegressor out;
    if (model == "ols") {
        const ml::LinearModel m = ml::fit_ols(x, y);
        out.model = ml::linear_to_json(m);
        out.predict = [m](std::span<const double> r) { return m.predict(r); };
    } else if (model == "ridge") {
        const double alpha = cfg.num("model.alpha", 1.0);
        if (alpha < 0.0) throw ValidationError("model.alpha: must be >= 0");
        const ml::LinearModel m = ml::fit_ridge(x, y, alpha);
        out.model = ml::linear_to_json(m);
        out.predict = [m](std::span<const double> r) { return m.predict(r); };
    } else if (model == "lasso") {
        const double alpha = cfg.num("model.alpha", 0.1);
        if (alpha < 0.0) throw ValidationError("model.alpha: must be >= 0");
        const ml::LassoResult r = ml::fit_lasso(x, y, alpha);
        out.model = ml::linear_to_json(r.model);
        const ml::LinearModel m = r.model;
        out.predict = [m](std::span<const double> row) { return m.predict(row); };
    } else if (model == "svr") {
        const ml::SvmModel m =
            ml::fit_svr_linear(x, y, cfg.num("model.c", 1.0), cfg.num("model.epsilon", 0.1),
                               cfg.count("model.epochs", 500), cfg.num("model.lr", 0.01));
        out.model = ml::svm_to_json(m);
        out.predict = [m](std::span<const double> r) { return m.decision_value(r); };
    } else if (model == "tree") {
        ml::TreeOptions opt;
        opt.algorithm = ml::TreeAlgorithm::cart;
        if (cfg.has("model.max_depth")) opt.max_depth = cfg.count("model.max_depth", 0);
        opt.min_samples_leaf = cfg.count("model.min_samples_leaf", 1);
        const ml::TreeData td = ml::TreeData::from_matrix(x, y, ml::TreeTask::regression);
        std::shared_ptr<ml::TreeNode> t = ml::fit_tree(td, opt);
        out.model = Json{{"kind", "tree"}, {"task", "regression"}, {"tree", ml::tree_to_json(*t)}};
        out.predict = [t](std::span<const double> r) { return ml::predict_value(*t, r); };
    } else if (model == "random-forest") {
        ml::Rng rng(seed);
        ml::TreeOptions opt;
        opt.min_samples_leaf = cfg.count("model.min_samples_leaf", 1);
        std::size_t max_features = cfg.count("model.max_features", 0);
        if (max_features == 0) max_features = std::max<std::size_t>(1, x.cols() / 3);
        auto forest = std::make_shared<ml::RandomForestModel>(ml::fit_random_forest(
            x, y, cfg.count("model.n_estimators", 100), max_features, opt, rng));
        out.model = ml::forest_to_json(*forest);
        out.predict = [forest](std::span<const double> r) { return forest->predict_value(r); };
    } else if (model == "gboost") {
        ml::GBoostOptions opt;
        opt.learning_rate = cfg.num("model.learning_rate", 0.1);
        opt.tree.max_depth = cfg.count("model.max_depth", 3);
        opt.leaf_lambda = cfg.num("model.leaf_lambda", 0.0);
        opt.features_per_tree = cfg.count("model.features_per_tree", 0);
        opt.seed = seed;
        auto m = std::make_shared<ml::GBoostModel>(
            ml::fit_gradient_boosting(x, y, cfg.count("model.n_estimators", 100), opt));
        out.model = ml::gboost_to_json(*m);
        out.predict = [m](std::span<const double> r) { return m->predict(r); };
    } else if (model == "stack") {
        std::vector<ml::BaseLearnerSpec> level1;
        level1.push_back({"ols", [](const Matrix& xt, const Vector& yt) -> ml::Predictor {
                              const ml::LinearModel m = ml::fit_ols(xt, yt);
                              return [m](std::span<const double> r) { return m.predict(r); };
                          }});
        level1.push_back({"ridge", [](const Matrix& xt, const Vector& yt) -> ml::Predictor {
                              const ml::LinearModel m = ml::fit_ridge(xt, yt, 1.0);
                              return [m](std::span<const double> r) { return m.predict(r); };
                          }});
        level1.push_back({"cart", [](const Matrix& xt, const Vector& yt) -> ml::Predictor {
                              ml::TreeOptions opt;
                              opt.algorithm = ml::TreeAlgorithm::cart;
                              const ml::TreeData td =
                                  ml::TreeData::from_matrix(xt, yt, ml::TreeTask::regression);
                              std::shared_ptr<ml::TreeNode> t = ml::fit_tree(td, opt);
                              return [t](std::span<const double> r) {
                                  return ml::predict_value(*t, r);
                              };
                          }});
        ml::Rng rng(seed);
        auto m = std::make_shared<ml::StackingModel>(
            ml::fit_stacking(level1, x, y, cfg.count("model.k_folds", 5), rng));
        out.model = Json{{"kind", "stack"}, {"names", m->names},
                         {"coefficients", m->coefficients}, {"oof_mse", m->oof_mse_stack}};
        out.predict = [m](std::span<const double> r) { return m->predict(r); };
    } else if (model == "mlp") {
        const std::size_t width = cfg.count("model.width", 64);
        const std::size_t depth = cfg.count("model.depth", 3);
        std::vector<std::size_t> sizes{x.cols()};
        std::vector<ml::Activation> acts;
        for (std::size_t i = 0; i < depth; ++i) {
            sizes.push_back(width);
            acts.push_back(ml::Activation::relu);
        }
        sizes.push_back(1);
        acts.push_back(ml::Activation::linear);
        ml::Rng rng(seed);
        auto net = std::make_shared<ml::Mlp>(sizes, acts, rng);
        ml::TrainConfig tc;
        tc.lr = cfg.num("model.lr", 0.001);
        tc.epochs = cfg.count("model.epochs", 50);
        tc.batch_size = cfg.count("model.batch_size", 150);
        tc.dropout = cfg.num("model.dropout", 0.25);
        tc.seed = seed;
        Matrix targets(y.size(), 1);
        for (std::size_t i = 0; i < y.size(); ++i) targets(i, 0) = y[i];
        const ml::FitReport r = net->train(x, targets, tc);
        out.loss_history = r.loss_history;
        out.model = ml::mlp_to_json(*net);
        out.predict = [net](std::span<const double> row) { return net->predict(row)[0]; };
    } else if (model == "lstm" || model == "gru") {
        // Each observation is a one-step sequence (the workshop windowing).
        const std::size_t hidden = cfg.count("model.hidden", 64);
        ml::Rng rng(seed);
        auto net = std::make_shared<ml::RnnRegressor>(ml::RnnRegressor::create(
            model == "lstm" ? ml::RnnKind::lstm : ml::RnnKind::gru, x.cols(), hidden, 1, rng));
        std::vector<Matrix> seqs;
        std::vector<Matrix> targets;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            Matrix s(1, x.cols());
            for (std::size_t j = 0; j < x.cols(); ++j) s(0, j) = x(i, j);
            seqs.push_back(std::move(s));
            Matrix t(1, 1);
            t(0, 0) = y[i];
            targets.push_back(std::move(t));
        }
        ml::TrainConfig tc;
        tc.lr = cfg.num("model.lr", 0.0001);
        tc.epochs = cfg.count("model.epochs", 10);
        tc.batch_size = cfg.count("model.batch_size", 32);
        tc.clip_threshold = cfg.num("model.clip", 5.0);
        tc.seed = seed;
        const ml::FitReport r = ml::bptt_train(*net, seqs, targets, 1, tc);
        out.loss_history = r.loss_history;
        out.model = ml::rnn_to_json(*net);
        out.predict = [net, cols = x.cols()](std::span<const double> row) {
            Matrix s(1, cols);
            for (std::size_t j = 0; j < cols; ++j) s(0, j) = row[j];
            return net->predict_sequence(s)(0, 0);
        };
    } else {
        throw ValidationError("model: '" + model + "' does not support the regression task");
    }
    return out;
}

int run_regression(const Config& cfg, const std::string& model, std::uint64_t seed,
                   const std::filesystem::path& out_dir) {
    ml::Dataset data = load_dataset(cfg, seed);
    data = ml::drop_missing(data);
    if (!data.label() && cfg.has("data.label")) data.set_label(cfg.str("data.label"));
    if (!data.label()) throw ValidationError("data.label: required for regression");
    if (cfg.has("preprocess.drop_correlated")) {
        data = ml::drop_correlated(data, cfg.num("preprocess.drop_correlated", 0.95));
    }

    ml::SplitSpec split;
    split.train = cfg.num("split.train", 0.7);
    split.val = cfg.num("split.val", 0.15);
    split.test = cfg.num("split.test", 0.15);
    split.shuffle = cfg.flag("split.shuffle", true);
    split.seed = seed;
    const ml::Split parts = ml::train_val_test_split(data, split);

    Pipeline pipe;
    pipe.features = data.feature_names();
    pipe.label = *data.label();
    ml::Dataset train = parts.train, val = parts.val, test = parts.test;
    if (cfg.flag("preprocess.standardize", true)) {
        pipe.scaler_x = ml::StandardScaler::fit(parts.train, pipe.features);
        pipe.scaler_y = ml::StandardScaler::fit(parts.train, {pipe.label});
        train = pipe.scaler_x->apply(train);
        val = val.n_rows() ? pipe.scaler_x->apply(val) : val;
        test = test.n_rows() ? pipe.scaler_x->apply(test) : test;
    }

    const Matrix x_train = pipe.features_of(train);
    const Vector y_train = pipe.scaled_label(train);
    TrainedRegressor fitted = train_regressor(model, cfg, x_train, y_train, seed);

    Json report{{"schema_version", 1}, {"model", model}, {"task", "regression"}, {"seed", seed}};
    report["loss_history"] = fitted.loss_history;
    EvalSeries test_series;
    for (const auto& [name, part_scaled, part_raw] :
         {std::tuple<std::string, const ml::Dataset*, const ml::Dataset*>{"train_", &train,
                                                                          &parts.train},
          {"val_", &val, &parts.val},
          {"", &test, &parts.test}}) {
        if (part_scaled->n_rows() == 0) continue;
        const Matrix xs = pipe.features_of(*part_scaled);
        const Vector actual = part_raw->label_vector();
        Vector pred(xs.rows());
        for (std::size_t i = 0; i < xs.rows(); ++i) {
            pred[i] = pipe.invert_label(fitted.predict(xs.row(i)));
        }
        add_regression_metrics(report, name, actual, pred);
        if (name.empty()) test_series = {actual, pred};
    }

    std::filesystem::create_directories(out_dir);
    Json model_file{{"pipeline", pipeline_to_json(pipe)}, {"model", fitted.model}};
    ml::write_json_file(model_file, (out_dir / "model.json").string());
    ml::write_json_file(report, (out_dir / "report.json").string());
    {
        std::ofstream pred_csv(out_dir / "predictions.csv", std::ios::binary);
        pred_csv << "t,actual,predicted\n";
        char buf[96];
        for (std::size_t i = 0; i < test_series.actual.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g\n", i, test_series.actual[i],
                          test_series.predicted[i]);
            pred_csv << buf;
        }
    }
    std::cout << report.dump(2) << "\n";
    return 0;
}

int run_classification(const Config& cfg, const std::string& model, std::uint64_t seed,
                       const std::filesystem::path& out_dir) {
    ml::Dataset data = load_dataset(cfg, seed);
    data = ml::drop_missing(data);
    if (!data.label() && cfg.has("data.label")) data.set_label(cfg.str("data.label"));
    if (!data.label()) throw ValidationError("data.label: required for classification");

    ml::SplitSpec split;
    split.train = cfg.num("split.train", 0.7);
    split.val = cfg.num("split.val", 0.15);
    split.test = cfg.num("split.test", 0.15);
    split.shuffle = cfg.flag("split.shuffle", true);
    split.seed = seed;
    const ml::Split parts = ml::train_val_test_split(data, split);

    Pipeline pipe;
    pipe.features = data.feature_names();
    pipe.label = *data.label();
    ml::Dataset train = parts.train, test = parts.test;
    if (cfg.flag("preprocess.standardize", true) && model != "tree") {
        pipe.scaler_x = ml::StandardScaler::fit(parts.train, pipe.features);
        train = pipe.scaler_x->apply(train);
        test = test.n_rows() ? pipe.scaler_x->apply(test) : test;
    }

    const Matrix x_train = pipe.features_of(train);
    Vector y_train = parts.train.label_vector();  // 0/1 labels expected
    for (double v : y_train) {
        if (v != 0.0 && v != 1.0) {
            throw ValidationError("classification labels must be 0/1 in column '" + pipe.label +
                                  "'");
        }
    }

    std::function<int(std::span<const double>)> classify;
    Json model_json;
    if (model == "logistic") {
        const ml::LogisticResult r = ml::fit_logistic(
            x_train, y_train, cfg.num("model.lr", 0.1), cfg.count("model.epochs", 500));
        model_json = ml::linear_to_json(r.model);
        const ml::LinearModel m = r.model;
        classify = [m](std::span<const double> row) { return m.predict_class(row); };
    } else if (model == "svm") {
        Vector pm(y_train.size());
        for (std::size_t i = 0; i < y_train.size(); ++i) pm[i] = y_train[i] > 0.5 ? 1.0 : -1.0;
        const std::string kernel_name = cfg.str("model.kernel", "rbf");
        ml::Kernel kernel = ml::Kernel::make_linear();
        if (kernel_name == "rbf") kernel = ml::Kernel::make_rbf(cfg.num("model.gamma", 0.5));
        else if (kernel_name == "polynomial") {
            kernel = ml::Kernel::make_polynomial(cfg.num("model.gamma", 1.0),
                                                 cfg.num("model.coef0", 0.0),
                                                 static_cast<int>(cfg.count("model.degree", 3)));
        } else if (kernel_name != "linear") {
            throw ValidationError("model.kernel: unknown kernel '" + kernel_name + "'");
        }
        const ml::SvmDualResult r =
            ml::fit_svm_dual(x_train, pm, cfg.num("model.c", 1.0), kernel, 200, 1e-5, seed);
        model_json = ml::svm_to_json(r.model);
        const ml::SvmModel m = r.model;
        classify = [m](std::span<const double> row) { return m.predict(row) > 0 ? 1 : 0; };
    } else if (model == "adaboost") {
        Vector pm(y_train.size());
        for (std::size_t i = 0; i < y_train.size(); ++i) pm[i] = y_train[i] > 0.5 ? 1.0 : -1.0;
        ml::Rng rng(seed);
        const ml::AdaBoostModel m =
            ml::fit_adaboost(x_train, pm, cfg.count("model.n_estimators", 50), rng);
        model_json = ml::adaboost_to_json(m);
        classify = [m](std::span<const double> row) { return m.predict(row) > 0 ? 1 : 0; };
    } else if (model == "rbfn") {
        Matrix targets(y_train.size(), 1);
        for (std::size_t i = 0; i < y_train.size(); ++i) targets(i, 0) = y_train[i];
        ml::RbfnConfig rc;
        rc.centers = cfg.count("model.centers", 8);
        rc.width_neighbors = cfg.count("model.width_neighbors", 2);
        rc.kmeans_iters = cfg.count("model.kmeans_iters", 2000);
        rc.epochs = cfg.count("model.epochs", 500);
        rc.lr = cfg.num("model.lr", 0.5);
        rc.seed = seed;
        const ml::RbfnModel m = ml::rbfn_fit(x_train, targets, rc);
        model_json = ml::rbfn_to_json(m);
        classify = [m](std::span<const double> row) {
            return static_cast<int>(m.predict_class(row));
        };
    } else {
        throw ValidationError("model: '" + model + "' does not support the classification task");
    }

    auto evaluate = [&](const ml::Dataset& scaled, const ml::Dataset& raw, Json& report,
                        const std::string& prefix) {
        if (scaled.n_rows() == 0) return;
        const Matrix xs = pipe.features_of(scaled);
        const Vector actual = raw.label_vector();
        std::vector<int> y_true(actual.size()), y_pred(actual.size());
        for (std::size_t i = 0; i < xs.rows(); ++i) {
            y_true[i] = actual[i] > 0.5 ? 1 : 0;
            y_pred[i] = classify(xs.row(i));
        }
        const ml::ConfusionMatrix c = ml::confusion(y_true, y_pred);
        report[prefix + "accuracy"] =
            static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
        if (c.tp + c.fp > 0) report[prefix + "precision"] = ml::precision(c);
        if (c.tp + c.fn > 0) report[prefix + "recall"] = ml::recall(c);
        if (c.tp + c.fp > 0 && c.tp + c.fn > 0 && c.tp > 0) report[prefix + "f1"] = ml::f1(c);
    };

    Json report{{"schema_version", 1}, {"model", model}, {"task", "classification"},
                {"seed", seed}};
    evaluate(train, parts.train, report, "train_");
    evaluate(test, parts.test, report, "");

    std::filesystem::create_directories(out_dir);
    ml::write_json_file(Json{{"pipeline", pipeline_to_json(pipe)}, {"model", model_json}},
                        (out_dir / "model.json").string());
    ml::write_json_file(report, (out_dir / "report.json").string());
    std::cout << report.dump(2) << "\n";
    return 0;
}

int run_unsupervised(const Config& cfg, const std::string& model, std::uint64_t seed,
                     const std::filesystem::path& out_dir) {
    ml::Dataset data = load_dataset(cfg, seed);
    data = ml::drop_missing(data);
    if (cfg.has("data.label")) data.set_label(cfg.str("data.label"));

    Pipeline pipe;
    pipe.features = data.feature_names();
    if (cfg.flag("preprocess.standardize", true)) {
        pipe.scaler_x = ml::StandardScaler::fit(data, pipe.features);
        data = pipe.scaler_x->apply(data);
    }
    const Matrix x = data.numeric_matrix(pipe.features);

    Json report{{"schema_version", 1}, {"model", model}, {"task", "clustering"}, {"seed", seed}};
    Json model_json;
    if (model == "kmeans") {
        ml::Rng rng(seed);
        const ml::KMeansModel m = ml::kmeans_fit(x, cfg.count("model.k", 3),
                                                 cfg.count("model.n_init", 10),
                                                 cfg.count("model.max_iter", 100), rng);
        model_json = ml::kmeans_to_json(m);
        report["inertia"] = m.inertia;
        report["silhouette"] = ml::silhouette_score(x, ml::kmeans_labels(m, x));
    } else if (model == "gmm") {
        ml::Rng rng(seed);
        const ml::GmmModel m =
            ml::gmm_fit(x, cfg.count("model.k", 3), cfg.count("model.max_iter", 100),
                        cfg.num("model.tol", 1e-6), cfg.num("model.reg", 1e-6), rng);
        model_json = ml::gmm_to_json(m);
        report["log_likelihood"] = m.log_likelihood_trace.back();
        std::vector<int> labels(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            labels[i] = static_cast<int>(m.predict(x.row(i)));
        }
        report["silhouette"] = ml::silhouette_score(x, labels);
    } else if (model == "dbscan") {
        const ml::DbscanLabels r =
            ml::dbscan_fit(x, cfg.num("model.eps", 0.5), cfg.count("model.min_samples", 5));
        model_json = Json{{"kind", "dbscan"}, {"labels", r.labels},
                          {"n_clusters", r.n_clusters}};
        report["n_clusters"] = r.n_clusters;
        std::size_t noise = 0;
        for (int l : r.labels) noise += l == ml::DbscanLabels::kNoise ? 1 : 0;
        report["noise_points"] = noise;
    } else if (model == "hierarchical") {
        const std::string linkage_name = cfg.str("model.linkage", "average");
        ml::Linkage linkage = ml::Linkage::average;
        if (linkage_name == "single") linkage = ml::Linkage::single;
        else if (linkage_name == "complete") linkage = ml::Linkage::complete;
        else if (linkage_name != "average") {
            throw ValidationError("model.linkage: unknown linkage '" + linkage_name + "'");
        }
        const ml::Dendrogram d = ml::hierarchical_fit(x, linkage);
        const std::vector<int> labels = ml::cut_k(d, cfg.count("model.k", 2));
        Json merges = Json::array();
        for (const auto& m : d.merges) {
            merges.push_back(Json{{"a", m.a}, {"b", m.b}, {"distance", m.distance},
                                  {"size", m.size}});
        }
        model_json = Json{{"kind", "hierarchical"}, {"merges", merges}, {"labels", labels}};
        report["silhouette"] = ml::silhouette_score(x, labels);
    } else if (model == "kpca") {
        ml::Kernel kernel = ml::Kernel::make_rbf(cfg.num("model.gamma", 0.5));
        if (cfg.str("model.kernel", "rbf") == "linear") kernel = ml::Kernel::make_linear();
        const ml::KernelPcaModel m =
            ml::kernel_pca_fit(x, kernel, cfg.count("model.components", 2));
        model_json = ml::kpca_to_json(m);
        report["eigenvalues"] = m.eigenvalues;
    } else {
        throw ValidationError("model: '" + model + "' does not support the clustering task");
    }

    std::filesystem::create_directories(out_dir);
    ml::write_json_file(Json{{"pipeline", pipeline_to_json(pipe)}, {"model", model_json}},
                        (out_dir / "model.json").string());
    ml::write_json_file(report, (out_dir / "report.json").string());
    std::cout << report.dump(2) << "\n";
    return 0;
}

int run_cnn(const Config& cfg, std::uint64_t seed, const std::filesystem::path& out_dir) {
    ml::Dataset data = load_dataset(cfg, seed);
    data = ml::drop_missing(data);
    const ml::SmilesVocab vocab = cfg.has("data.vocab")
                                      ? ml::SmilesVocab::from_file(cfg.str("data.vocab"))
                                      : ml::SmilesVocab::default_vocab();
    const std::size_t max_len = cfg.count("model.max_len", 16);

    const auto& smiles = data.column("smiles").cat;
    const auto& target = data.column("target").num;
    std::vector<Matrix> images;
    for (const auto& s : smiles) images.push_back(ml::smiles_one_hot(s, vocab, max_len));

    // Sequential split: the synthetic strings carry no time order, so a plain
    // prefix split keeps the run reproducible.
    const std::size_t n = images.size();
    const std::size_t n_train = n - n / 4;
    std::vector<Matrix> train_x(images.begin(), images.begin() + n_train);
    Vector train_y(target.begin(), target.begin() + n_train);
    std::vector<Matrix> test_x(images.begin() + n_train, images.end());
    Vector test_y(target.begin() + n_train, target.end());

    double mean_y = 0.0, sd_y = 0.0;
    for (double v : train_y) mean_y += v;
    mean_y /= static_cast<double>(train_y.size());
    for (double v : train_y) sd_y += (v - mean_y) * (v - mean_y);
    sd_y = std::sqrt(sd_y / static_cast<double>(train_y.size() - 1));
    Vector train_y_std = train_y;
    for (double& v : train_y_std) v = (v - mean_y) / sd_y;

    ml::CnnArchitecture arch;
    arch.conv_blocks = {{cfg.count("model.filters1", 8), 3, 2, true},
                        {cfg.count("model.filters2", 4), 3, 2, true}};
    arch.dense_sizes = {cfg.count("model.dense1", 32), cfg.count("model.dense2", 16)};
    arch.dense_dropout = cfg.num("model.dropout", 0.1);
    ml::Rng rng(seed);
    ml::CnnRegressor net(max_len, vocab.size(), arch, rng);

    ml::TrainConfig tc;
    tc.lr = cfg.num("model.lr", 0.002);
    tc.epochs = cfg.count("model.epochs", 60);
    tc.batch_size = cfg.count("model.batch_size", 16);
    tc.seed = seed;
    const ml::FitReport r = net.fit(train_x, train_y_std, tc);

    Json report{{"schema_version", 1}, {"model", "cnn"}, {"task", "regression"}, {"seed", seed}};
    report["loss_history"] = r.loss_history;
    Vector pred(test_x.size());
    for (std::size_t i = 0; i < test_x.size(); ++i) {
        pred[i] = net.predict(test_x[i]) * sd_y + mean_y;
    }
    add_regression_metrics(report, "", test_y, pred);

    std::filesystem::create_directories(out_dir);
    Json model_file{{"pipeline", Json{{"target_mean", mean_y}, {"target_sd", sd_y}}},
                    {"model", ml::cnn_to_json(net)}};
    ml::write_json_file(model_file, (out_dir / "model.json").string());
    ml::write_json_file(report, (out_dir / "report.json").string());
    std::cout << report.dump(2) << "\n";
    return 0;
}

int run_transformer(const Config& cfg, std::uint64_t seed,
                    const std::filesystem::path& out_dir) {
    ml::TransformerConfig mc;
    mc.vocab = cfg.count("model.vocab", 11);  // data tokens plus start token
    mc.d_model = cfg.count("model.d_model", 16);
    mc.heads = cfg.count("model.heads", 2);
    mc.layers = cfg.count("model.layers", 2);
    mc.d_ff = cfg.count("model.d_ff", 32);
    const std::size_t seq_len = cfg.count("model.seq_len", 6);
    const std::size_t n = cfg.count("data.n", 256);
    const int start = static_cast<int>(mc.vocab - 1);
    const int data_tokens = static_cast<int>(mc.vocab - 1);

    ml::Rng data_rng(seed);
    std::vector<ml::ToyTransformer::Example> examples;
    for (std::size_t s = 0; s < n; ++s) {
        ml::ToyTransformer::Example ex;
        for (std::size_t t = 0; t < seq_len; ++t) {
            ex.src.push_back(static_cast<int>(data_rng.index(data_tokens)));
        }
        ex.tgt_out = ex.src;
        ex.tgt_in.push_back(start);
        for (std::size_t t = 0; t + 1 < seq_len; ++t) ex.tgt_in.push_back(ex.src[t]);
        examples.push_back(std::move(ex));
    }

    ml::Rng rng(seed + 1);
    ml::ToyTransformer model(mc, rng);
    ml::TrainConfig tc;
    tc.lr = cfg.num("model.lr", 0.003);
    tc.epochs = cfg.count("model.epochs", 30);
    tc.batch_size = cfg.count("model.batch_size", 16);
    tc.seed = seed;
    const ml::FitReport r = model.train(examples, tc);

    ml::Rng eval_rng(seed + 2);
    std::size_t correct = 0, total = 0;
    for (int s = 0; s < 40; ++s) {
        std::vector<int> src;
        for (std::size_t t = 0; t < seq_len; ++t) {
            src.push_back(static_cast<int>(eval_rng.index(data_tokens)));
        }
        const std::vector<int> decoded = model.greedy_decode(src, seq_len, start);
        for (std::size_t t = 0; t < seq_len; ++t) {
            ++total;
            if (decoded[t] == src[t]) ++correct;
        }
    }

    Json report{{"schema_version", 1}, {"model", "transformer-toy"}, {"task", "sequence"},
                {"seed", seed}};
    report["loss_history"] = r.loss_history;
    report["token_accuracy"] = static_cast<double>(correct) / static_cast<double>(total);

    std::filesystem::create_directories(out_dir);
    ml::write_json_file(Json{{"model", ml::transformer_to_json(model)}},
                        (out_dir / "model.json").string());
    ml::write_json_file(report, (out_dir / "report.json").string());
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_train(const Config& cfg, std::uint64_t seed, const std::filesystem::path& out_dir) {
    const std::string model = cfg.str("model");
    if (!kModels.count(model)) {
        throw ValidationError("model: unknown model '" + model + "'; registered models: " +
                              registered_models());
    }
    std::string task = cfg.str("task", "regression");
    if (model == "kmeans" || model == "dbscan" || model == "gmm" || model == "hierarchical" ||
        model == "kpca") {
        task = "clustering";
    }
    if (model == "cnn") return run_cnn(cfg, seed, out_dir);
    if (model == "transformer-toy") return run_transformer(cfg, seed, out_dir);
    if (task == "clustering") return run_unsupervised(cfg, model, seed, out_dir);
    if (task == "classification") return run_classification(cfg, model, seed, out_dir);
    if (task == "regression" || task == "sequence") {
        return run_regression(cfg, model, seed, out_dir);
    }
    throw ValidationError("task: unknown task '" + task + "'");
}

int cmd_gridsearch(const Config& cfg, std::uint64_t seed,
                   const std::filesystem::path& out_dir) {
    const std::string model = cfg.str("model");
    if (!kModels.count(model)) {
        throw ValidationError("model: unknown model '" + model + "'; registered models: " +
                              registered_models());
    }
    const std::size_t k_folds = cfg.count("grid.k_folds", 5);
    if (k_folds < 2) throw ValidationError("grid.k_folds: must be >= 2");

    // grid.<param> = v1,v2,... in file order.
    std::vector<std::pair<std::string, std::vector<std::string>>> grid;
    for (const auto& key : cfg.keys()) {
        if (key.rfind("grid.", 0) != 0 || key == "grid.k_folds") continue;
        std::vector<std::string> values;
        std::stringstream ss(cfg.str(key));
        std::string v;
        while (std::getline(ss, v, ',')) values.push_back(v);
        if (values.empty()) throw ValidationError(key + ": empty value list");
        grid.emplace_back("model." + key.substr(5), values);
    }
    if (grid.empty()) throw ValidationError("grid: no grid.<param> entries found");

    ml::Dataset data = load_dataset(cfg, seed);
    data = ml::drop_missing(data);
    if (!data.label() && cfg.has("data.label")) data.set_label(cfg.str("data.label"));
    if (!data.label()) throw ValidationError("data.label: required");
    const std::vector<std::string> features = data.feature_names();
    const ml::StandardScaler sx = ml::StandardScaler::fit(data, features);
    const ml::StandardScaler sy = ml::StandardScaler::fit(data, {*data.label()});
    const ml::Dataset scaled_x = sx.apply(data);
    const Matrix x = scaled_x.numeric_matrix(features);
    Vector y = data.label_vector();
    for (double& v : y) v = sy.apply_value(*data.label(), v);
    const std::size_t n = x.rows();
    if (k_folds > n) throw ValidationError("grid.k_folds: more folds than rows");

    // Fold assignment from a seeded shuffle.
    ml::Rng rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<std::size_t> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = i % k_folds;

    // Exhaustive product, last parameter fastest.
    std::vector<std::size_t> radix(grid.size(), 0);
    std::size_t cells = 1;
    for (const auto& [key, values] : grid) cells *= values.size();

    Json table = Json::array();
    double best_rmse = std::numeric_limits<double>::infinity();
    Json best_cell;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        Config cell_cfg = cfg;
        Json cell_params;
        std::size_t rem = cell;
        for (std::size_t p = grid.size(); p-- > 0;) {
            const auto& [key, values] = grid[p];
            cell_cfg.set(key, values[rem % values.size()]);
            cell_params[key] = values[rem % values.size()];
            rem /= values.size();
        }
        double mse_sum = 0.0;
        for (std::size_t f = 0; f < k_folds; ++f) {
            std::vector<std::size_t> tr, te;
            for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? te : tr).push_back(i);
            Matrix xt(tr.size(), x.cols()), xe(te.size(), x.cols());
            Vector yt(tr.size()), ye(te.size());
            for (std::size_t i = 0; i < tr.size(); ++i) {
                for (std::size_t j = 0; j < x.cols(); ++j) xt(i, j) = x(tr[i], j);
                yt[i] = y[tr[i]];
            }
            for (std::size_t i = 0; i < te.size(); ++i) {
                for (std::size_t j = 0; j < x.cols(); ++j) xe(i, j) = x(te[i], j);
                ye[i] = y[te[i]];
            }
            const TrainedRegressor fitted = train_regressor(model, cell_cfg, xt, yt, seed);
            Vector pred(xe.rows());
            for (std::size_t i = 0; i < xe.rows(); ++i) pred[i] = fitted.predict(xe.row(i));
            mse_sum += ml::mse(ye, pred);
        }
        const double cv_rmse = std::sqrt(mse_sum / static_cast<double>(k_folds));
        Json row = cell_params;
        row["cv_rmse"] = cv_rmse;
        table.push_back(row);
        if (cv_rmse < best_rmse - 1e-15) {  // ties keep the first cell in grid order
            best_rmse = cv_rmse;
            best_cell = cell_params;
        }
    }

    Json out{{"schema_version", 1}, {"model", model}, {"k_folds", k_folds},
             {"best", best_cell}, {"best_cv_rmse", best_rmse}, {"table", table}};
    std::filesystem::create_directories(out_dir);
    ml::write_json_file(out, (out_dir / "gridsearch.json").string());
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_importance(const std::string& model_path, const std::filesystem::path& out_dir) {
    const Json file = ml::load_json_file(model_path);
    const Json& mj = file.contains("model") ? file.at("model") : file;
    const std::string kind = mj.value("kind", "");
    ml::FeatureImportance imp;
    if (kind == "random-forest") {
        const ml::RandomForestModel m = ml::forest_from_json(mj);
        imp = ml::mdi_importance(m);
    } else if (kind == "gboost") {
        const ml::GBoostModel m = ml::gboost_from_json(mj);
        imp = ml::mdi_importance(m);
    } else {
        throw ValidationError("importance unsupported for model kind '" + kind +
                              "' (random-forest and gboost only)");
    }
    if (file.contains("pipeline") && file.at("pipeline").contains("features")) {
        imp.names = file.at("pipeline").at("features").get<std::vector<std::string>>();
    }
    std::vector<std::size_t> order(imp.scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return imp.scores[a] > imp.scores[b]; });

    std::filesystem::create_directories(out_dir);
    std::ofstream csv(out_dir / "importance.csv", std::ios::binary);
    csv << "feature,score\n";
    char buf[128];
    for (std::size_t i : order) {
        const std::string name = i < imp.names.size() ? imp.names[i] : "x" + std::to_string(i);
        std::snprintf(buf, sizeof(buf), "%s,%.12g\n", name.c_str(), imp.scores[i]);
        csv << buf;
        std::cout << name << "\t" << imp.scores[i] << "\n";
    }
    return 0;
}

int cmd_plotdata(const std::string& report_path, const std::string& predictions_path,
                 const std::string& silhouette_data, std::size_t k_min, std::size_t k_max,
                 std::uint64_t seed, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    char buf[96];
    bool did_anything = false;
    if (!report_path.empty()) {
        const Json report = ml::load_json_file(report_path);
        if (!report.contains("loss_history")) {
            throw ValidationError("plotdata: report has no loss_history");
        }
        const Vector loss = report.at("loss_history").get<Vector>();
        std::ofstream out(out_dir / "loss_curve.csv", std::ios::binary);
        out << "epoch,loss\n";
        for (std::size_t e = 0; e < loss.size(); ++e) {
            std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", e + 1, loss[e]);
            out << buf;
        }
        std::cout << "wrote " << (out_dir / "loss_curve.csv").string() << " (" << loss.size()
                  << " rows)\n";
        did_anything = true;
    }
    if (!predictions_path.empty()) {
        std::ifstream in(predictions_path);
        if (!in) throw std::runtime_error("plotdata: cannot open '" + predictions_path + "'");
        std::string line;
        std::getline(in, line);  // header
        std::ofstream actual(out_dir / "actual_series.csv", std::ios::binary);
        std::ofstream predicted(out_dir / "predicted_series.csv", std::ios::binary);
        actual << "t,actual\n";
        predicted << "t,predicted\n";
        std::size_t rows = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string t, a, p;
            std::getline(ss, t, ',');
            std::getline(ss, a, ',');
            std::getline(ss, p, ',');
            actual << t << ',' << a << '\n';
            predicted << t << ',' << p << '\n';
            ++rows;
        }
        std::cout << "wrote prediction series (" << rows << " rows)\n";
        did_anything = true;
    }
    if (!silhouette_data.empty()) {
        if (k_min < 2 || k_max < k_min) throw ValidationError("--k-min/--k-max: bad range");
        std::ifstream probe(silhouette_data);
        if (!probe) throw std::runtime_error("plotdata: cannot open '" + silhouette_data + "'");
        std::string header;
        std::getline(probe, header);
        std::vector<ml::ColumnSpec> schema;
        std::stringstream ss(header);
        std::string name;
        while (std::getline(ss, name, ',')) {
            if (!name.empty() && name.back() == '\r') name.pop_back();
            schema.push_back({name, ml::ColumnKind::numeric});
        }
        const ml::Dataset d = ml::drop_missing(ml::read_csv(silhouette_data, schema));
        const Matrix x = d.numeric_matrix();
        std::ofstream out(out_dir / "silhouette_by_k.csv", std::ios::binary);
        out << "k,silhouette\n";
        for (std::size_t k = k_min; k <= k_max; ++k) {
            ml::Rng rng(seed);
            const ml::KMeansModel m = ml::kmeans_fit(x, k, 5, 100, rng);
            const double s = ml::silhouette_score(x, ml::kmeans_labels(m, x));
            std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", k, s);
            out << buf;
        }
        std::cout << "wrote " << (out_dir / "silhouette_by_k.csv").string() << " ("
                  << (k_max - k_min + 1) << " rows)\n";
        did_anything = true;
    }
    if (!did_anything) {
        throw ValidationError("plotdata: give --report, --predictions, or --silhouette");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"workshop pipeline: generate, train, gridsearch, importance, plotdata"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand name

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    app.add_option("--config", config_path, "configuration file (key = value)");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--out", out_dir, "output directory");

    auto* gen = app.add_subcommand("generate", "write a synthetic dataset as CSV");
    std::string gen_source = "synth-hdpe";
    std::size_t gen_n = 1000;
    double gen_noise = 0.1;
    std::string gen_out = "data.csv";
    gen->add_option("--source", gen_source, "synth-hdpe | synth-quadratic | synth-smiles");
    gen->add_option("--n", gen_n, "row count");
    gen->add_option("--noise-sd", gen_noise, "target noise standard deviation");
    gen->add_option("--out-file", gen_out, "output CSV path");

    auto* train = app.add_subcommand("train", "train a model per the config file");
    auto* grid = app.add_subcommand("gridsearch", "cross-validated hyperparameter grid");
    auto* importance = app.add_subcommand("importance", "MDI feature importances");
    std::string model_path;
    importance->add_option("--model", model_path, "model.json path")->required();
    auto* plot = app.add_subcommand("plotdata", "emit two-column plot series");
    std::string plot_report, plot_predictions, plot_silhouette;
    std::size_t k_min = 2, k_max = 8;
    plot->add_option("--report", plot_report, "report.json to extract the loss curve from");
    plot->add_option("--predictions", plot_predictions, "predictions.csv to split into series");
    plot->add_option("--silhouette", plot_silhouette, "numeric CSV for a silhouette-vs-k sweep");
    plot->add_option("--k-min", k_min, "smallest k");
    plot->add_option("--k-max", k_max, "largest k");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_generate(gen_source, gen_n, seed, gen_noise, gen_out);
        if (importance->parsed()) return cmd_importance(model_path, out_dir);
        if (plot->parsed()) {
            return cmd_plotdata(plot_report, plot_predictions, plot_silhouette, k_min, k_max,
                                seed, out_dir);
        }
        if (config_path.empty()) throw ValidationError("--config: required for this command");
        const Config cfg = Config::from_file(config_path);
        const std::uint64_t run_seed =
            app.count("--seed") ? seed : static_cast<std::uint64_t>(cfg.num("seed", 0));
        if (train->parsed()) return cmd_train(cfg, run_seed, out_dir);
        if (grid->parsed()) return cmd_gridsearch(cfg, run_seed, out_dir);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
