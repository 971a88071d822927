#include "eegret/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eegret/errors.hpp"

namespace eegret {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Lap {
    std::vector<int> row_to_col;
    std::vector<double> u, v;
};

// Classic row-by-row Hungarian method (1-based internally, column 0 is the
// virtual root of each alternating tree).
Lap shortest_augmenting_paths(const RowMatrix<double>& a, const std::vector<char>& forbidden) {
    const int n = static_cast<int>(a.rows());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    auto blocked = [&](int i, int j) {
        return !forbidden.empty() && forbidden[static_cast<std::size_t>(i) * n + j] != 0;
    };
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = kInf;
            int j1 = -1;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                if (!blocked(i0 - 1, j - 1)) {
                    const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                    if (cur < minv[j]) {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if (j1 < 0) throw DataError("no perfect matching avoids the forbidden entries");
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    Lap out;
    out.row_to_col.assign(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) out.row_to_col[static_cast<std::size_t>(p[j] - 1)] = j - 1;
    out.u.assign(u.begin() + 1, u.end());
    out.v.assign(v.begin() + 1, v.end());
    return out;
}

// Walks the tight (zero reduced cost) subgraph to turn one optimal matching
// into the lexicographically smallest optimal one. Rows are fixed in order;
// row i tries columns in ascending order and keeps the first one that still
// admits a perfect matching of the unfixed rows, found as an alternating
// cycle through the tight edges.
class LexMinimiser {
public:
    LexMinimiser(const RowMatrix<double>& a, const std::vector<char>& forbidden, const Lap& lap)
        : n_(static_cast<int>(a.rows())), match_(lap.row_to_col), owner_(static_cast<std::size_t>(n_)) {
        double scale = 1.0;
        for (Eigen::Index i = 0; i < a.size(); ++i)
            if (std::isfinite(a.data()[i])) scale = std::max(scale, std::abs(a.data()[i]));
        const double tol = 1e-9 * scale;
        tight_.resize(static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) {
                if (!forbidden.empty() && forbidden[static_cast<std::size_t>(i) * n_ + j]) continue;
                if (std::abs(a(i, j) - lap.u[i] - lap.v[j]) <= tol) tight_[i].push_back(j);
            }
        for (int i = 0; i < n_; ++i) owner_[static_cast<std::size_t>(match_[i])] = i;
    }

    std::vector<int> run() {
        for (int i = 0; i < n_; ++i) {
            for (int j : tight_[i]) {
                if (match_[i] == j) break;
                std::vector<int> path_cols;
                visited_.assign(static_cast<std::size_t>(n_), 0);
                const int target = match_[i];
                const int displaced = owner_[static_cast<std::size_t>(j)];
                if (displaced <= i) continue;
                visited_[static_cast<std::size_t>(j)] = 1;
                if (find_path(displaced, i, target, path_cols)) {
                    // Rotate: i takes j, displaced row takes path_cols[0], ...
                    int row = displaced;
                    for (int col : path_cols) {
                        const int next = owner_[static_cast<std::size_t>(col)];
                        match_[row] = col;
                        owner_[static_cast<std::size_t>(col)] = row;
                        row = next;
                    }
                    match_[i] = j;
                    owner_[static_cast<std::size_t>(j)] = i;
                    break;
                }
            }
        }
        return match_;
    }

private:
    bool find_path(int row, int fixed_upto, int target, std::vector<int>& cols) {
        for (int c : tight_[row]) {
            if (visited_[static_cast<std::size_t>(c)]) continue;
            visited_[static_cast<std::size_t>(c)] = 1;
            if (c == target) {
                cols.push_back(c);
                return true;
            }
            const int next = owner_[static_cast<std::size_t>(c)];
            if (next <= fixed_upto) continue;
            cols.push_back(c);
            if (find_path(next, fixed_upto, target, cols)) return true;
            cols.pop_back();
        }
        return false;
    }

    int n_;
    std::vector<int> match_;
    std::vector<int> owner_;
    std::vector<std::vector<int>> tight_;
    std::vector<char> visited_;
};

}  // namespace

std::vector<int> solve_assignment_min(const RowMatrix<double>& cost, const std::vector<char>& forbidden) {
    if (cost.rows() != cost.cols()) throw ParameterError("assignment needs a square matrix");
    const auto n = static_cast<std::size_t>(cost.rows());
    if (!forbidden.empty() && forbidden.size() != n * n) throw ShapeError("forbidden mask has the wrong size");
    if (n == 0) return {};
    if (!cost.allFinite()) throw DataError("assignment costs must be finite");
    const Lap lap = shortest_augmenting_paths(cost, forbidden);
    return LexMinimiser(cost, forbidden, lap).run();
}

}  // namespace eegret
