#pragma once

#include <cstdint>

#include "ml/dataset.hpp"

namespace ml {

/// Ground-truth melt index used by synth_hdpe. Log-linear in the H2/C2 ratio
/// with small additive terms in reactor temperature and pressure:
///   ln MI = 6.1 + 1.6 ln(H2/C2) + 0.08 (T - 84)/5 + 0.05 (P - 9.2)
/// Strictly increasing in H2 when the other inputs are held fixed.
double synth_hdpe_mi(double c2, double h2, double temp, double pres);

/// Synthetic stand-in for the melt-index plant table. Columns C2, H2, CAT,
/// HX, C3, T, P, H2/C2, C3/C4 and label MI. Features follow deterministic
/// smooth trajectories with small seeded jitter; MI is synth_hdpe_mi plus
/// Gaussian noise of the given standard deviation. The feature values do not
/// depend on noise_sd, so the same seed always yields the same table apart
/// from the MI noise.
Dataset synth_hdpe(std::size_t n_rows, std::uint64_t seed, double noise_sd);

/// Samples x uniform on [-1, 2) and y = 0.3 x^2 - 0.3 x + 0.3 + N(0, noise_sd).
/// Columns x, y with label y.
Dataset synth_quadratic(std::size_t n, std::uint64_t seed, double noise_sd);

/// Ground-truth target for synth_smiles: a linear function of token counts,
/// 100 + 30 #C + 20 #c + 15 #O + 10 #N + 5 #= (a stand-in for a glass
/// transition temperature).
double synth_smiles_target(const std::vector<std::string>& tokens);

/// Random token strings over the default SMILES vocabulary (lengths 4..12)
/// with the documented count-based target. Columns smiles, target.
Dataset synth_smiles(std::size_t n, std::uint64_t seed);

}  // namespace ml
