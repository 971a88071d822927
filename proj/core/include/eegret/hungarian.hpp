#pragma once

#include <vector>

#include "eegret/params.hpp"

namespace eegret {

// Exact minimum-cost perfect matching on a square cost matrix by shortest
// augmenting paths with dual potentials (O(n^3)). Entries flagged in
// forbidden (row-major, may be empty) are never used. Among all optimal
// matchings the lexicographically smallest row->column permutation is
// returned. Throws ParameterError for non-square input and DataError when no
// perfect matching avoids the forbidden entries.
std::vector<int> solve_assignment_min(const RowMatrix<double>& cost, const std::vector<char>& forbidden = {});

}  // namespace eegret
