#include "deft/graph.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace deft {

void GraphSnapshot::validate() const {
    adjacency.validate();
    if (adjacency.n_rows != adjacency.n_cols)
        throw std::invalid_argument("graph: adjacency must be square");
    for (std::size_t i = 0; i < adjacency.n_rows; ++i) {
        for (std::size_t k = adjacency.row_offsets[i]; k < adjacency.row_offsets[i + 1]; ++k) {
            std::size_t j = adjacency.col_indices[k];
            if (j == i) throw std::invalid_argument("graph: self-loop in adjacency");
            if (adjacency.values[k] < 0.0)
                throw std::invalid_argument("graph: negative edge weight");
            if (adjacency.at(j, i) != adjacency.values[k])
                throw std::invalid_argument("graph: adjacency not symmetric");
        }
    }
    if (static_cast<std::size_t>(features.rows()) != adjacency.n_rows)
        throw std::invalid_argument("graph: feature row count != node count");
    if (!node_labels.empty() && node_labels.size() != adjacency.n_rows)
        throw std::invalid_argument("graph: node label count != node count");
}

void DynamicGraph::validate() const {
    if (snapshots.empty()) throw std::invalid_argument("graph: empty snapshot sequence");
    std::size_t prev_t = 0;
    bool first = true;
    for (const auto& s : snapshots) {
        s.validate();
        if (s.n_nodes() != n_nodes)
            throw std::invalid_argument("graph: snapshot node count != n_nodes");
        if (!first && s.timestep <= prev_t)
            throw std::invalid_argument("graph: timesteps must be strictly increasing");
        prev_t = s.timestep;
        first = false;
    }
    if (!(split.train_end > 0 && split.train_end <= split.val_end &&
          split.val_end <= split.test_end && split.test_end == snapshots.size()))
        throw std::invalid_argument("graph: invalid split");
}

SparseMatrix build_laplacian(const GraphSnapshot& g) {
    const auto& a = g.adjacency;
    std::size_t n = a.n_rows;
    std::vector<SparseMatrix::Entry> entries;
    entries.reserve(a.nnz() + n);
    for (std::size_t i = 0; i < n; ++i) {
        double degree = a.row_sum(i);
        entries.emplace_back(i, i, degree);
        for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
            entries.emplace_back(i, a.col_indices[k], -a.values[k]);
    }
    return SparseMatrix::from_edge_list(n, n, std::move(entries));
}

SparseMatrix build_normalized_laplacian(const GraphSnapshot& g) {
    const auto& a = g.adjacency;
    std::size_t n = a.n_rows;
    std::vector<double> inv_sqrt_deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double d = a.row_sum(i);
        if (d > 0.0) inv_sqrt_deg[i] = 1.0 / std::sqrt(d);
    }
    std::vector<SparseMatrix::Entry> entries;
    entries.reserve(a.nnz() + n);
    for (std::size_t i = 0; i < n; ++i) {
        if (inv_sqrt_deg[i] > 0.0) entries.emplace_back(i, i, 1.0);
        for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
            std::size_t j = a.col_indices[k];
            double v = -a.values[k] * inv_sqrt_deg[i] * inv_sqrt_deg[j];
            if (v != 0.0) entries.emplace_back(i, j, v);
        }
    }
    return SparseMatrix::from_edge_list(n, n, std::move(entries));
}

namespace {

double degree_bound(const SparseMatrix& l) {
    double max_diag = 0.0;
    for (std::size_t i = 0; i < l.n_rows; ++i) max_diag = std::max(max_diag, l.at(i, i));
    return 2.0 * max_diag;
}

}  // namespace

double estimate_lambda_max(const SparseMatrix& laplacian, LambdaMaxMode mode, bool* fell_back) {
    if (fell_back) *fell_back = false;
    if (laplacian.n_rows != laplacian.n_cols)
        throw std::invalid_argument("graph: lambda_max needs a square matrix");
    std::size_t n = laplacian.n_rows;

    switch (mode) {
        case LambdaMaxMode::degree_bound:
            return degree_bound(laplacian);
        case LambdaMaxMode::exact_small: {
            if (n > 2000)
                throw std::runtime_error("graph: exact_small limited to N <= 2000");
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian.to_dense(),
                                                              Eigen::EigenvaluesOnly);
            return es.eigenvalues().maxCoeff();
        }
        case LambdaMaxMode::power_iteration: {
            if (n == 0) return 0.0;
            std::mt19937_64 rng(0x5eed);
            std::uniform_real_distribution<double> unif(-1.0, 1.0);
            Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
            for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) = unif(rng);
            x /= x.norm();
            double estimate = 0.0;
            for (int it = 0; it < 500; ++it) {
                Eigen::MatrixXd y = laplacian.multiply(x);
                double norm = y.norm();
                if (norm == 0.0) return 0.0;  // x in the kernel: spectrum reached
                double next = x.col(0).dot(y.col(0));
                y /= norm;
                x = y;
                // the Rayleigh quotient converges from below and its error can
                // exceed the last step size, so stop tight and pad the result
                if (it > 0 && std::abs(next - estimate) <= 1e-10 * std::max(1.0, std::abs(next)))
                    return std::min(next * (1.0 + 1e-6), degree_bound(laplacian));
                estimate = next;
            }
            if (fell_back) *fell_back = true;
            return degree_bound(laplacian);
        }
    }
    throw std::invalid_argument("graph: unknown lambda_max mode");
}

std::vector<std::pair<std::size_t, double>> neighbors(const GraphSnapshot& g, std::size_t i) {
    if (i >= g.n_nodes()) throw std::out_of_range("graph: node index out of range");
    std::vector<std::pair<std::size_t, double>> out;
    const auto& a = g.adjacency;
    for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
        out.emplace_back(a.col_indices[k], a.values[k]);
    return out;
}

}  // namespace deft
