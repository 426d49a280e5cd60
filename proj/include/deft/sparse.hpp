#pragma once

#include <cstddef>
#include <tuple>
#include <vector>

#include <Eigen/Core>

namespace deft {

/// Compressed sparse row matrix with double values.
///
/// Immutable after construction. Column indices within a row are strictly
/// increasing; row_offsets has n_rows+1 entries with row_offsets.back()
/// equal to the number of stored values.
struct SparseMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<std::size_t> row_offsets{0};
    std::vector<std::size_t> col_indices;
    std::vector<double> values;

    using Entry = std::tuple<std::size_t, std::size_t, double>;

    static SparseMatrix from_edge_list(std::size_t n_rows, std::size_t n_cols,
                                       std::vector<Entry> entries);

    std::vector<Entry> to_edge_list() const;

    std::size_t nnz() const { return values.size(); }

    /// Stored value at (i, j); 0.0 if the position is not stored.
    double at(std::size_t i, std::size_t j) const;

    /// Dense product A * X.
    Eigen::MatrixXd multiply(const Eigen::MatrixXd& x) const;

    Eigen::MatrixXd to_dense() const;

    /// Sum of stored values in row i.
    double row_sum(std::size_t i) const;

    bool operator==(const SparseMatrix& other) const;

    /// Throws std::invalid_argument if any CSR invariant is violated.
    void validate() const;
};

}  // namespace deft
