#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "fixtures.hpp"
#include "ml/dataset.hpp"
#include "ml/preprocess.hpp"
#include "ml/rng.hpp"
#include "ml/synth.hpp"

using namespace ml;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& contents) {
        static int counter = 0;
        path = "test_tmp_" + std::to_string(counter++) + ".csv";
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

const std::vector<ColumnSpec> kSchema = {{"a", ColumnKind::numeric},
                                         {"b", ColumnKind::numeric},
                                         {"tag", ColumnKind::categorical}};

}  // namespace

TEST_CASE("read_csv parses well-formed files") {
    TempFile f("a,b,tag\n1,2.5,x\n3,4.5,y\n5,-6,z\n");
    const Dataset d = read_csv(f.path, kSchema);
    CHECK(d.n_rows() == 3);
    CHECK(d.column("a").num[0] == 1.0);
    CHECK(d.column("b").num[2] == -6.0);
    CHECK(d.column("tag").cat[1] == "y");
}

TEST_CASE("read_csv header-only file gives an empty dataset") {
    TempFile f("a,b,tag\n");
    const Dataset d = read_csv(f.path, kSchema);
    CHECK(d.n_rows() == 0);
}

TEST_CASE("read_csv error cases") {
    CHECK_THROWS_WITH_AS(read_csv("does_not_exist.csv", kSchema),
                         doctest::Contains("cannot open"), std::runtime_error);

    TempFile bad_cell("a,b,tag\n1,2,x\n1,huh,y\n");
    CHECK_THROWS_WITH_AS(read_csv(bad_cell.path, kSchema), doctest::Contains("row 2"),
                         std::runtime_error);
    try {
        read_csv(bad_cell.path, kSchema);
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("'b'") != std::string::npos);
    }

    TempFile bad_arity("a,b,tag\n1,2\n");
    CHECK_THROWS(read_csv(bad_arity.path, kSchema));

    TempFile bad_header("a,wrong,tag\n");
    CHECK_THROWS(read_csv(bad_header.path, kSchema));
}

TEST_CASE("csv round trip with quoting and missing markers") {
    std::vector<Column> cols(2);
    cols[0] = {"v", ColumnKind::numeric, {1.5, 0.0, -2.25}, {}, {0, 1, 0}};
    cols[1] = {"s", ColumnKind::categorical, {}, {"plain", "with,comma", "with\"quote"}, {0, 0, 0}};
    const Dataset d{std::vector<Column>(cols)};
    write_csv(d, "round_trip.csv");
    const Dataset back = read_csv(
        "round_trip.csv", {{"v", ColumnKind::numeric}, {"s", ColumnKind::categorical}});
    std::remove("round_trip.csv");
    CHECK(back.n_rows() == 3);
    CHECK(back.column("v").missing[1] == 1);
    CHECK(back.column("v").num[2] == -2.25);
    CHECK(back.column("s").cat[1] == "with,comma");
    CHECK(back.column("s").cat[2] == "with\"quote");
}

TEST_CASE("drop_missing") {
    std::vector<Column> cols(2);
    cols[0] = {"v", ColumnKind::numeric, {1, 2, 3, 4, 5}, {}, {0, 1, 0, 0, 0}};
    cols[1] = {"w", ColumnKind::numeric, {9, 9, 9, 9, 9}, {}, {0, 0, 0, 1, 0}};
    const Dataset d{std::move(cols)};

    const Dataset kept = drop_missing(d);
    CHECK(kept.n_rows() == 3);
    CHECK(kept.column("v").num == Vector{1, 3, 5});

    const Dataset clean = drop_missing(kept);
    CHECK(clean.n_rows() == 3);

    std::vector<Column> all_missing(1);
    all_missing[0] = {"v", ColumnKind::numeric, {0, 0}, {}, {1, 1}};
    CHECK(drop_missing(Dataset{std::move(all_missing)}).n_rows() == 0);
}

TEST_CASE("standardizer golden and contract cases") {
    const Dataset d = fixtures::numeric_dataset({"v"}, {{1, 2, 3}});
    const StandardScaler s = StandardScaler::fit(d, {"v"});
    const Dataset z = s.apply(d);
    CHECK(z.column("v").num[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(z.column("v").num[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(z.column("v").num[2] == doctest::Approx(1.0).epsilon(1e-12));

    // Refit on already-standardized data leaves it unchanged.
    const StandardScaler s2 = StandardScaler::fit(z, {"v"});
    const Dataset z2 = s2.apply(z);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::fabs(z2.column("v").num[i] - z.column("v").num[i]) < 1e-9);
    }

    const Dataset constant = fixtures::numeric_dataset({"v"}, {{5, 5, 5}});
    CHECK_THROWS_WITH_AS(StandardScaler::fit(constant, {"v"}), doctest::Contains("'v'"),
                         std::invalid_argument);
}

TEST_CASE("standardizer mean/std contract and invert round trip on random data") {
    Rng rng(17);
    Vector v(257);
    for (auto& x : v) x = rng.uniform(-30.0, 70.0);
    const Dataset d = fixtures::numeric_dataset({"v"}, {{v}});
    const StandardScaler s = StandardScaler::fit(d, {"v"});
    const Dataset z = s.apply(d);

    double mean = 0.0;
    for (double x : z.column("v").num) mean += x;
    mean /= 257.0;
    double var = 0.0;
    for (double x : z.column("v").num) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / 256.0);
    CHECK(std::fabs(mean) < 1e-9);
    CHECK(std::fabs(sd - 1.0) < 1e-9);

    const Dataset back = s.invert(z);
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(std::fabs(back.column("v").num[i] - v[i]) < 1e-9);
    }
}

TEST_CASE("minmax_normalize") {
    const Dataset d = fixtures::numeric_dataset({"v"}, {{0, 500, 1000}});
    const Dataset n = minmax_normalize(d, {"v"}, 0.0, 1.0);
    CHECK(n.column("v").num == Vector{0.0, 0.5, 1.0});

    // Reactor inlet temperature 300 against a maximum of 1000 maps to 0.3.
    const Dataset t = fixtures::numeric_dataset({"T"}, {{0, 300, 1000}});
    CHECK(minmax_normalize(t, {"T"}, 0.0, 1.0).column("T").num[1] == doctest::Approx(0.3));

    const Dataset u = fixtures::numeric_dataset({"v"}, {{2, 2, 4}});
    CHECK(minmax_normalize(u, {"v"}, 0.0, 1.0).column("v").num == Vector{0.0, 0.0, 1.0});

    const Dataset degenerate = fixtures::numeric_dataset({"v"}, {{3, 3}});
    CHECK_THROWS(minmax_normalize(degenerate, {"v"}, 0.0, 1.0));
}

TEST_CASE("correlation matrix properties and golden cases") {
    Rng rng(23);
    Vector x(64), negx(64), noise(64);
    for (std::size_t i = 0; i < 64; ++i) {
        x[i] = rng.uniform(0.0, 1.0);
        negx[i] = -x[i];
        noise[i] = rng.uniform(0.0, 1.0);
    }
    const Dataset d = fixtures::numeric_dataset({"x", "negx", "noise"}, {x, negx, noise});
    const Matrix r = correlation_matrix(d);
    CHECK(r(0, 0) == doctest::Approx(1.0));
    CHECK(r(0, 1) == doctest::Approx(-1.0));
    CHECK(max_abs_diff(r, transpose(r)) == 0.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(r(i, i) == doctest::Approx(1.0));

    const Dataset zero_var = fixtures::numeric_dataset({"x", "c"}, {x, Vector(64, 1.0)});
    CHECK_THROWS(correlation_matrix(zero_var));
}

TEST_CASE("drop_correlated removes the later column of a duplicated pair") {
    Rng rng(29);
    Vector x(64), other(64);
    for (std::size_t i = 0; i < 64; ++i) {
        x[i] = rng.uniform(0.0, 1.0);
        other[i] = rng.uniform(0.0, 1.0);
    }
    const Dataset d = fixtures::numeric_dataset({"x", "other", "dup"}, {x, other, x});
    const Dataset kept = drop_correlated(d, 0.95);
    CHECK(kept.has_column("x"));
    CHECK(kept.has_column("other"));
    CHECK_FALSE(kept.has_column("dup"));
}

TEST_CASE("train/val/test split sizes and prefix behavior") {
    std::vector<double> id(100);
    std::iota(id.begin(), id.end(), 0.0);
    const Dataset d = fixtures::numeric_dataset({"id"}, {id});

    const Split s = train_val_test_split(d, {0.7, 0.15, 0.15, true, 1});
    CHECK(s.train.n_rows() == 70);
    CHECK(s.val.n_rows() == 15);
    CHECK(s.test.n_rows() == 15);

    std::vector<double> id10(10);
    std::iota(id10.begin(), id10.end(), 0.0);
    const Dataset d10 = fixtures::numeric_dataset({"id"}, {id10});
    const Split s10 = train_val_test_split(d10, {0.75, 0.0, 0.25, false, 0});
    CHECK(s10.train.n_rows() == 8);  // floor allocation, remainder to train
    CHECK(s10.val.n_rows() == 0);
    CHECK(s10.test.n_rows() == 2);
    CHECK(s10.train.column("id").num == Vector{0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(s10.test.column("id").num == Vector{8, 9});

    const Split a = train_val_test_split(d, {0.7, 0.15, 0.15, true, 42});
    const Split b = train_val_test_split(d, {0.7, 0.15, 0.15, true, 42});
    CHECK(a.train.column("id").num == b.train.column("id").num);
    CHECK(a.test.column("id").num == b.test.column("id").num);

    CHECK_THROWS(train_val_test_split(Dataset{}, {0.7, 0.15, 0.15, true, 0}));
    CHECK_THROWS(train_val_test_split(d, {0.5, 0.2, 0.2, true, 0}));
}

TEST_CASE("split partition property: sorting the union by row id recovers the input") {
    std::vector<double> id(57);
    std::iota(id.begin(), id.end(), 0.0);
    const Dataset d = fixtures::numeric_dataset({"id"}, {id});
    const Split s = train_val_test_split(d, {0.6, 0.25, 0.15, true, 99});

    Vector all;
    for (const Dataset* part : {&s.train, &s.val, &s.test}) {
        const auto& v = part->column("id").num;
        all.insert(all.end(), v.begin(), v.end());
    }
    CHECK(all.size() == 57);
    std::sort(all.begin(), all.end());
    CHECK(all == id);
}

TEST_CASE("synth_hdpe determinism, ground truth, and monotonicity in H2") {
    const Dataset a = synth_hdpe(128, 7, 0.1);
    const Dataset b = synth_hdpe(128, 7, 0.1);
    for (std::size_t j = 0; j < a.n_cols(); ++j) {
        CHECK(a.columns()[j].num == b.columns()[j].num);
    }
    const std::vector<std::string> expect_names = {"C2", "H2", "CAT", "HX", "C3",
                                                   "T",  "P",  "H2/C2", "C3/C4", "MI"};
    for (std::size_t j = 0; j < expect_names.size(); ++j) {
        CHECK(a.columns()[j].name == expect_names[j]);
    }

    // noise_sd = 0: the MI column is exactly the documented function.
    const Dataset clean = synth_hdpe(64, 3, 0.0);
    for (std::size_t i = 0; i < clean.n_rows(); ++i) {
        const double mi = synth_hdpe_mi(clean.column("C2").num[i], clean.column("H2").num[i],
                                        clean.column("T").num[i], clean.column("P").num[i]);
        CHECK(clean.column("MI").num[i] == doctest::Approx(mi).epsilon(1e-12));
    }
    // Same seed, different noise_sd: identical features.
    CHECK(clean.column("H2").num == synth_hdpe(64, 3, 0.5).column("H2").num);

    // Perturbing H2 upward raises MI.
    for (double h2 : {30.0, 55.0, 70.0}) {
        CHECK(synth_hdpe_mi(950.0, h2 + 1.0, 84.0, 9.2) > synth_hdpe_mi(950.0, h2, 84.0, 9.2));
    }
}

TEST_CASE("synth_quadratic matches the generating polynomial") {
    auto poly = [](double x) { return 0.3 * x * x - 0.3 * x + 0.3; };
    CHECK(poly(0.0) == doctest::Approx(0.3));
    CHECK(poly(1.0) == doctest::Approx(0.3));

    const Dataset d = synth_quadratic(100, 5, 0.0);
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        const double x = d.column("x").num[i];
        CHECK(x >= -1.0);
        CHECK(x < 2.0);
        CHECK(d.column("y").num[i] == doctest::Approx(poly(x)).epsilon(1e-12));
    }
    const Dataset e = synth_quadratic(100, 5, 0.2);
    CHECK(d.column("x").num == e.column("x").num);
    CHECK(synth_quadratic(50, 9, 0.1).column("y").num ==
          synth_quadratic(50, 9, 0.1).column("y").num);
}

TEST_CASE("synth_smiles emits strings over the default vocabulary") {
    const Dataset d = synth_smiles(20, 4);
    CHECK(d.n_rows() == 20);
    CHECK(d.column("smiles").kind == ColumnKind::categorical);
    CHECK(d.column("smiles").cat == synth_smiles(20, 4).column("smiles").cat);
    for (double t : d.column("target").num) CHECK(t >= 100.0);
}
