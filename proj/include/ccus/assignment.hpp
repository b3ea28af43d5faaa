#pragma once

#include "ccus/core.hpp"

namespace ccus {

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with row/column potentials, O(n^3)). Returns p with p[i] = column matched
/// to row i.
Permutation solve_assignment(const Matrix& cost);

/// Exhaustive counterpart over all n! permutations; keeps the
/// lexicographically first minimizer. For small n only.
Permutation solve_assignment_exhaustive(const Matrix& cost);

double assignment_cost(const Matrix& cost, const Permutation& p);

}  // namespace ccus
