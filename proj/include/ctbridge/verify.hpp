#pragma once

#include <string>
#include <vector>

namespace ctbridge {

struct CheckResult {
  std::string name;
  bool passed;
  double value;      // measured worst-case quantity
  double tolerance;  // bound it was compared against
};

// Fast deterministic oracle checks: adjoint pairs, CG against a dense solve,
// step-coefficient identities, the gamma >= 8 bound, posterior and
// image-domain scores, joint conditioning and the Gaussian Bayes identity.
std::vector<CheckResult> run_oracle_suite();

}  // namespace ctbridge
