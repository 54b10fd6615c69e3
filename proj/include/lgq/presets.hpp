#pragma once

#include "lgq/model.hpp"
#include "lgq/model_io.hpp"

#include <string>

namespace lgq::presets {

// On-threshold degenerate parametric oscillator, ħ ρ̇ = −i[q̂p̂ + p̂q̂, ρ] + D[q̂ + ip̂]ρ:
// A = diag(0, −2), D = ħI.
SystemModel opo_model(double hbar = 1.0);

/// Observer's homodyne record: η = 0.5 at θ = 3π/8.
Unravelling opo_observed(const SystemModel& model);

/// Unobserved homodyne at θ = −π/8 with efficiency 0.5 (the rest of the output).
Unravelling opo_unobserved_homodyne(const SystemModel& model);

/// Unobserved balanced heterodyne with efficiency 0.5.
Unravelling opo_unobserved_heterodyne(const SystemModel& model);

/// The OPO as a model file, with unravellings "alice", "homodyne:-pi/8" and "heterodyne:balanced".
ModelFile opo_model_file(double hbar = 1.0);

/**
 * Test covariances for the OPO, printed to two decimals:
 *   'a'  (ħ/2)[[2.41, 0], [0, 0.41]]
 *   'b'  (ħ/2)[[3.18, 0.49], [0.49, 0.39]]
 *   'c'  (ħ/3)[[5.02, −0.50], [−0.50, 0.25]]   (prefactor as printed)
 *   'C'  (ħ/2)[[5.02, −0.50], [−0.50, 0.25]]   (ħ/2 variant of 'c')
 *   'd'  (ħ/2)[[1.93, 0.79], [0.79, 0.84]]
 */
CovMatrix opo_fixture(char which, double hbar = 1.0);

/// Fixture lookup by name: "a", "b", "c", "c-half", "d".
CovMatrix opo_fixture(const std::string& name, double hbar = 1.0);

}  // namespace lgq::presets
