#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/models.hpp"

namespace hydroschro {

struct VerifyCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;  // value <= threshold
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_pass = true;
};

// Invariant suite: Einstein residuals on the builtins, discrete-calculus
// identities, rate-functional identities, Hamiltonian conservation and Born
// reversal on a small bridge, the AKNS closed-form residual, and the
// vector/scalar Hamiltonian reduction. `extra_model`, when given, has its
// Einstein residual included (a deliberately corrupted model fails here).
// refine > 1 additionally re-runs the residual checks on refined grids and
// reports the shrink factors (pass when >= 1.5 per refinement).
VerifyReport run_verification(const std::optional<TransportModel>& extra_model,
                              int refine = 1);

std::string format_table(const VerifyReport& report);

}  // namespace hydroschro
