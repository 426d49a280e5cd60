#include "deft/fixtures.hpp"

#include <set>
#include <stdexcept>
#include <tuple>

namespace deft {

namespace {

GraphSnapshot from_pairs(std::size_t n, const std::set<std::pair<std::size_t, std::size_t>>& pairs,
                         int feature_dim) {
    std::vector<std::tuple<std::size_t, std::size_t, double>> list;
    list.reserve(2 * pairs.size());
    for (const auto& [u, v] : pairs) {
        list.emplace_back(u, v, 1.0);
        list.emplace_back(v, u, 1.0);
    }
    GraphSnapshot snap;
    snap.adjacency = SparseMatrix::from_edge_list(n, n, list);
    snap.features = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), feature_dim);
    return snap;
}

}  // namespace

GraphSnapshot path_snapshot(std::size_t n, int feature_dim) {
    if (n < 2) throw std::invalid_argument("graph_core: path needs >= 2 nodes");
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i + 1 < n; ++i) pairs.emplace(i, i + 1);
    return from_pairs(n, pairs, feature_dim);
}

GraphSnapshot cycle_snapshot(std::size_t n, int feature_dim) {
    if (n < 3) throw std::invalid_argument("graph_core: cycle needs >= 3 nodes");
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = (i + 1) % n;
        pairs.emplace(std::min(i, j), std::max(i, j));
    }
    return from_pairs(n, pairs, feature_dim);
}

GraphSnapshot grid_snapshot(std::size_t rows, std::size_t cols, int feature_dim) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("graph_core: empty grid");
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    auto id = [cols](std::size_t r, std::size_t c) { return r * cols + c; };
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c + 1 < cols) pairs.emplace(id(r, c), id(r, c + 1));
            if (r + 1 < rows) pairs.emplace(id(r, c), id(r + 1, c));
        }
    }
    return from_pairs(rows * cols, pairs, feature_dim);
}

GraphSnapshot random_connected_snapshot(std::size_t n, double p, std::mt19937_64& rng,
                                        int feature_dim) {
    if (n < 2) throw std::invalid_argument("graph_core: need >= 2 nodes");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i + 1 < n; ++i) pairs.emplace(i, i + 1);  // spanning path
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            if (unit(rng) < p) pairs.emplace(u, v);
        }
    }
    return from_pairs(n, pairs, feature_dim);
}

DynamicGraph dynamic_pair(GraphSnapshot a, GraphSnapshot b) {
    if (a.n_nodes() != b.n_nodes()) {
        throw std::invalid_argument("graph_core: snapshot node counts differ");
    }
    DynamicGraph g;
    g.n_nodes = a.n_nodes();
    b.timestep = 1;
    g.snapshots.push_back(std::move(a));
    g.snapshots.push_back(std::move(b));
    g.split.train_end = 1;
    g.split.val_end = 2;
    g.split.test_end = 2;
    return g;
}

}  // namespace deft
