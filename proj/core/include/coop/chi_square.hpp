#pragma once

namespace coop {

/// Critical value c with P(X <= c) = confidence for X ~ χ²(dof).
/// chi_square_critical(0.95, 3) ≈ 7.8147.
double chi_square_critical(double confidence, int dof);

}  // namespace coop
