#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "deft/sparse.hpp"

namespace deft {

/// One snapshot of a dynamic graph: symmetric weighted adjacency (no
/// self-loops), node features, and optional edge/node labels.
struct GraphSnapshot {
    SparseMatrix adjacency;
    Eigen::MatrixXd features;  // N x d
    std::size_t timestep = 0;
    std::map<std::pair<std::size_t, std::size_t>, int> edge_labels;  // empty = absent
    std::vector<int> node_labels;                                    // empty = absent

    std::size_t n_nodes() const { return adjacency.n_rows; }
    bool has_node_labels() const { return !node_labels.empty(); }

    void validate() const;
};

/// Time-ordered snapshot sequence over a fixed node universe.
struct DynamicGraph {
    struct Split {
        std::size_t train_end = 0;
        std::size_t val_end = 0;
        std::size_t test_end = 0;
    };

    std::vector<GraphSnapshot> snapshots;
    std::size_t n_nodes = 0;
    Split split;

    void validate() const;
};

enum class LambdaMaxMode { exact_small, power_iteration, degree_bound };

/// Combinatorial Laplacian L = D - A with an explicit diagonal entry in
/// every row (zero for isolated nodes).
SparseMatrix build_laplacian(const GraphSnapshot& g);

/// Symmetric normalized Laplacian I - D^{-1/2} A D^{-1/2} (zero rows for
/// isolated nodes). Not used by the default pipeline.
SparseMatrix build_normalized_laplacian(const GraphSnapshot& g);

/// Upper estimate of the largest Laplacian eigenvalue.
///
/// exact_small: dense eigensolve, N <= 2000 enforced.
/// power_iteration: relative tolerance 1e-6, at most 500 iterations; on
///   non-convergence falls back to degree_bound and sets *fell_back.
/// degree_bound: 2 * max diagonal entry (Gershgorin bound for Laplacians).
double estimate_lambda_max(const SparseMatrix& laplacian, LambdaMaxMode mode,
                           bool* fell_back = nullptr);

/// Sorted (neighbor, weight) list for node i, matching CSR row i.
std::vector<std::pair<std::size_t, double>> neighbors(const GraphSnapshot& g, std::size_t i);

}  // namespace deft
