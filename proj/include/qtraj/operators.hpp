#pragma once

// Named operators. Qubit basis: index 0 = ground |0>, index 1 = excited |1>,
// so sigma_minus = |0><1| and sigma_z = |1><1| - |0><0| = [sigma_plus, sigma_minus].

#include "qtraj/linalg.hpp"

#include <optional>
#include <string_view>

namespace qtraj::ops {

CMatrix sigma_minus();
CMatrix sigma_plus();
CMatrix sigma_x();
CMatrix sigma_y();
CMatrix sigma_z();

// Truncated harmonic oscillator on Fock states |0>..|n_max>.
CMatrix annihilation(std::size_t n_max);
CMatrix number(std::size_t n_max);

// Preset lookup by name for dimension `dim`: sx, sy, sz, sp, sm, excited,
// ground (dim 2); a, adag, n, x, p (any dim, Fock ladder); identity.
std::optional<CMatrix> named(std::string_view name, std::size_t dim);

} // namespace qtraj::ops
