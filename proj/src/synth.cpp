#include "ml/synth.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ml/rng.hpp"

namespace ml {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double synth_hdpe_mi(double c2, double h2, double temp, double pres) {
    const double ratio = h2 / c2;
    const double ln_mi =
        6.1 + 1.6 * std::log(ratio) + 0.08 * (temp - 84.0) / 5.0 + 0.05 * (pres - 9.2);
    return std::exp(ln_mi);
}

Dataset synth_hdpe(std::size_t n_rows, std::uint64_t seed, double noise_sd) {
    if (n_rows < 1) throw std::invalid_argument("synth_hdpe: n_rows must be >= 1");
    Rng base(seed);
    Rng feat_rng = base.derive(1);
    Rng noise_rng = base.derive(2);

    const char* names[] = {"C2", "H2", "CAT", "HX", "C3", "T", "P", "H2/C2", "C3/C4", "MI"};
    std::vector<Column> cols(10);
    for (std::size_t j = 0; j < 10; ++j) {
        cols[j].name = names[j];
        cols[j].kind = ColumnKind::numeric;
        cols[j].num.resize(n_rows);
        cols[j].missing.assign(n_rows, 0);
    }

    for (std::size_t i = 0; i < n_rows; ++i) {
        const double t = static_cast<double>(i);
        const double c2 = 950.0 + 40.0 * std::sin(kTwoPi * t / 300.0 + 0.7) +
                          10.0 * std::sin(kTwoPi * t / 37.0) + feat_rng.normal(0.0, 2.0);
        const double h2 = 55.0 + 18.0 * std::sin(kTwoPi * t / 420.0 + 2.1) +
                          6.0 * std::sin(kTwoPi * t / 90.0 + 0.5) + feat_rng.normal(0.0, 0.25);
        const double cat = 5.5 + 0.8 * std::sin(kTwoPi * t / 260.0 + 1.3) +
                           feat_rng.normal(0.0, 0.02);
        const double hx = 1200.0 + 90.0 * std::sin(kTwoPi * t / 510.0 + 2.9) +
                          feat_rng.normal(0.0, 4.0);
        const double c3 = 30.0 + 7.0 * std::sin(kTwoPi * t / 350.0 + 4.2) +
                          feat_rng.normal(0.0, 0.12);
        const double temp = 84.0 + 2.5 * std::sin(kTwoPi * t / 600.0 + 1.1) +
                            feat_rng.normal(0.0, 0.08);
        const double pres = 9.2 + 0.7 * std::sin(kTwoPi * t / 450.0 + 3.5) +
                            feat_rng.normal(0.0, 0.03);
        const double c4 = 12.0 + 2.0 * std::sin(kTwoPi * t / 410.0 + 0.9) +
                          feat_rng.normal(0.0, 0.05);

        cols[0].num[i] = c2;
        cols[1].num[i] = h2;
        cols[2].num[i] = cat;
        cols[3].num[i] = hx;
        cols[4].num[i] = c3;
        cols[5].num[i] = temp;
        cols[6].num[i] = pres;
        cols[7].num[i] = h2 / c2;
        cols[8].num[i] = c3 / c4;
        cols[9].num[i] = synth_hdpe_mi(c2, h2, temp, pres) + noise_rng.normal(0.0, noise_sd);
    }

    Dataset d(std::move(cols));
    d.set_label("MI");
    return d;
}

Dataset synth_quadratic(std::size_t n, std::uint64_t seed, double noise_sd) {
    if (n < 1) throw std::invalid_argument("synth_quadratic: n must be >= 1");
    Rng rng(seed);
    std::vector<Column> cols(2);
    cols[0].name = "x";
    cols[1].name = "y";
    for (auto& c : cols) {
        c.kind = ColumnKind::numeric;
        c.num.resize(n);
        c.missing.assign(n, 0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(-1.0, 2.0);
        cols[0].num[i] = x;
        cols[1].num[i] = 0.3 * x * x - 0.3 * x + 0.3 + rng.normal(0.0, noise_sd);
    }
    Dataset d(std::move(cols));
    d.set_label("y");
    return d;
}

double synth_smiles_target(const std::vector<std::string>& tokens) {
    double v = 100.0;
    for (const auto& t : tokens) {
        if (t == "C") v += 30.0;
        else if (t == "c") v += 20.0;
        else if (t == "O") v += 15.0;
        else if (t == "N") v += 10.0;
        else if (t == "=") v += 5.0;
    }
    return v;
}

Dataset synth_smiles(std::size_t n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("synth_smiles: n must be >= 1");
    static const char* kTokens[] = {"c", "n",  "o", "C", "N", "F", "=", "O", "(",
                                    ")", "1",  "2", "#", "Cl", "/", "S", "Br"};
    Rng rng(seed);
    std::vector<Column> cols(2);
    cols[0].name = "smiles";
    cols[0].kind = ColumnKind::categorical;
    cols[1].name = "target";
    cols[1].kind = ColumnKind::numeric;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t len = 4 + rng.index(9);
        std::vector<std::string> tokens;
        std::string s;
        for (std::size_t k = 0; k < len; ++k) {
            tokens.emplace_back(kTokens[rng.index(17)]);
            s += tokens.back();
        }
        cols[0].cat.push_back(s);
        cols[0].missing.push_back(0);
        cols[1].num.push_back(synth_smiles_target(tokens));
        cols[1].missing.push_back(0);
    }
    Dataset d(std::move(cols));
    d.set_label("target");
    return d;
}

}  // namespace ml
