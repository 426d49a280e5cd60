#pragma once

#include <random>

#include "deft/graph.hpp"

namespace deft {

/// Standard small graphs used by the lemma verifiers and benchmarks.
GraphSnapshot path_snapshot(std::size_t n, int feature_dim = 1);
GraphSnapshot cycle_snapshot(std::size_t n, int feature_dim = 1);
GraphSnapshot grid_snapshot(std::size_t rows, std::size_t cols, int feature_dim = 1);

/// Erdos-Renyi snapshot made connected by adding a spanning path.
GraphSnapshot random_connected_snapshot(std::size_t n, double p, std::mt19937_64& rng,
                                        int feature_dim = 1);

/// Two-snapshot dynamic graph from existing snapshots (shared node count).
DynamicGraph dynamic_pair(GraphSnapshot a, GraphSnapshot b);

}  // namespace deft
