#include "deft/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace deft {

SparseMatrix SparseMatrix::from_edge_list(std::size_t n_rows, std::size_t n_cols,
                                          std::vector<Entry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) {
                  if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
                  return std::get<1>(a) < std::get<1>(b);
              });
    SparseMatrix m;
    m.n_rows = n_rows;
    m.n_cols = n_cols;
    m.row_offsets.assign(n_rows + 1, 0);
    m.col_indices.reserve(entries.size());
    m.values.reserve(entries.size());
    std::size_t prev_row = 0, prev_col = 0;
    bool first = true;
    for (const auto& [r, c, v] : entries) {
        if (r >= n_rows || c >= n_cols)
            throw std::invalid_argument("sparse: entry index out of range");
        if (!first && r == prev_row && c == prev_col)
            throw std::invalid_argument("sparse: duplicate entry in edge list");
        first = false;
        prev_row = r;
        prev_col = c;
        m.col_indices.push_back(c);
        m.values.push_back(v);
        m.row_offsets[r + 1]++;
    }
    for (std::size_t i = 0; i < n_rows; ++i) m.row_offsets[i + 1] += m.row_offsets[i];
    return m;
}

std::vector<SparseMatrix::Entry> SparseMatrix::to_edge_list() const {
    std::vector<Entry> out;
    out.reserve(nnz());
    for (std::size_t i = 0; i < n_rows; ++i)
        for (std::size_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k)
            out.emplace_back(i, col_indices[k], values[k]);
    return out;
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
    if (i >= n_rows || j >= n_cols) throw std::invalid_argument("sparse: index out of range");
    auto begin = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[i]);
    auto end = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[i + 1]);
    auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return 0.0;
    return values[static_cast<std::size_t>(it - col_indices.begin())];
}

Eigen::MatrixXd SparseMatrix::multiply(const Eigen::MatrixXd& x) const {
    if (static_cast<std::size_t>(x.rows()) != n_cols)
        throw std::invalid_argument("sparse: multiply dimension mismatch");
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_rows), x.cols());
    for (std::size_t i = 0; i < n_rows; ++i)
        for (std::size_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k)
            y.row(static_cast<Eigen::Index>(i)) +=
                values[k] * x.row(static_cast<Eigen::Index>(col_indices[k]));
    return y;
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_rows),
                                              static_cast<Eigen::Index>(n_cols));
    for (std::size_t i = 0; i < n_rows; ++i)
        for (std::size_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k)
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col_indices[k])) = values[k];
    return d;
}

double SparseMatrix::row_sum(std::size_t i) const {
    if (i >= n_rows) throw std::invalid_argument("sparse: row index out of range");
    double s = 0.0;
    for (std::size_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k) s += values[k];
    return s;
}

bool SparseMatrix::operator==(const SparseMatrix& other) const {
    return n_rows == other.n_rows && n_cols == other.n_cols &&
           row_offsets == other.row_offsets && col_indices == other.col_indices &&
           values == other.values;
}

void SparseMatrix::validate() const {
    if (row_offsets.size() != n_rows + 1)
        throw std::invalid_argument("sparse: row_offsets length must be n_rows+1");
    if (row_offsets.front() != 0 || row_offsets.back() != values.size())
        throw std::invalid_argument("sparse: row_offsets endpoints inconsistent");
    if (col_indices.size() != values.size())
        throw std::invalid_argument("sparse: col_indices/values length mismatch");
    for (std::size_t i = 0; i < n_rows; ++i) {
        if (row_offsets[i] > row_offsets[i + 1])
            throw std::invalid_argument("sparse: row_offsets must be non-decreasing");
        for (std::size_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
            if (col_indices[k] >= n_cols)
                throw std::invalid_argument("sparse: column index out of range");
            if (k > row_offsets[i] && col_indices[k] <= col_indices[k - 1])
                throw std::invalid_argument("sparse: columns must be strictly increasing per row");
            if (!std::isfinite(values[k]))
                throw std::invalid_argument("sparse: non-finite value");
        }
    }
}

}  // namespace deft
