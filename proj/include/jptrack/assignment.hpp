#pragma once

#include <limits>
#include <utility>
#include <vector>

namespace jptrack {

struct CostMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    CostMatrix() = default;
    CostMatrix(int r, int c, double fill = 0.0) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}
    double& at(int i, int j) { return values[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * cols + j]; }
};

struct Assignment {
    std::vector<std::pair<int, int>> pairs;  // (row, col)
    std::vector<int> unmatched_rows;
    std::vector<int> unmatched_cols;
};

namespace detail {

/// Shortest-augmenting-path solver for the square assignment problem.
/// `cost` is n*n row-major; returns the column chosen for each row.
inline std::vector<int> hungarian_square(const std::vector<double>& cost, int n) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
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
        } while (j0);
    }
    std::vector<int> rowsol(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) rowsol[p[j] - 1] = j - 1;
    return rowsol;
}

}  // namespace detail

/// Minimum-total-cost matching. Entries above `gate` never produce a pair;
/// the matrix may be rectangular.
inline Assignment solve_assignment(const CostMatrix& m, double gate) {
    Assignment out;
    if (m.rows == 0 || m.cols == 0) {
        for (int i = 0; i < m.rows; ++i) out.unmatched_rows.push_back(i);
        for (int j = 0; j < m.cols; ++j) out.unmatched_cols.push_back(j);
        return out;
    }

    constexpr double kForbidden = 1e9;  // dominates any admissible total
    const int n = std::max(m.rows, m.cols);
    std::vector<double> padded(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) {
            const double c = m.at(i, j);
            padded[static_cast<std::size_t>(i) * n + j] = (c > gate) ? kForbidden : c;
        }

    const std::vector<int> rowsol = detail::hungarian_square(padded, n);
    std::vector<char> col_used(m.cols, 0);
    for (int i = 0; i < m.rows; ++i) {
        const int j = rowsol[i];
        if (j >= 0 && j < m.cols && m.at(i, j) <= gate) {
            out.pairs.emplace_back(i, j);
            col_used[j] = 1;
        } else {
            out.unmatched_rows.push_back(i);
        }
    }
    for (int j = 0; j < m.cols; ++j)
        if (!col_used[j]) out.unmatched_cols.push_back(j);
    return out;
}

/// Maximum-total-weight matching; pairs with non-positive weight are dropped.
inline std::vector<std::pair<int, int>> max_weight_assignment(const CostMatrix& w) {
    if (w.rows == 0 || w.cols == 0) return {};
    double wmax = 0.0;
    for (double v : w.values) wmax = std::max(wmax, v);
    CostMatrix cost(w.rows, w.cols);
    for (int i = 0; i < w.rows; ++i)
        for (int j = 0; j < w.cols; ++j) cost.at(i, j) = wmax - w.at(i, j);
    const Assignment a = solve_assignment(cost, std::numeric_limits<double>::infinity());
    std::vector<std::pair<int, int>> pairs;
    for (const auto& [i, j] : a.pairs)
        if (w.at(i, j) > 0.0) pairs.emplace_back(i, j);
    return pairs;
}

}  // namespace jptrack
