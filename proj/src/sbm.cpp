#include "deft/sbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

namespace deft {

void SbmConfig::validate() const {
    if (n_nodes < 2) throw std::invalid_argument("data_gen: n_nodes must be >= 2");
    if (n_communities < 2) throw std::invalid_argument("data_gen: n_communities must be >= 2");
    if (p_in < 0.0 || p_in > 1.0 || p_out < 0.0 || p_out > 1.0) {
        throw std::invalid_argument("data_gen: block probabilities must lie in [0,1]");
    }
    if (p_out > p_in && !heterophilic) {
        throw std::invalid_argument("data_gen: p_out > p_in requires the heterophilic flag");
    }
    if (n_snapshots < 1) throw std::invalid_argument("data_gen: n_snapshots must be >= 1");
    if (drift_fraction < 0.0 || drift_fraction > 1.0) {
        throw std::invalid_argument("data_gen: drift_fraction must lie in [0,1]");
    }
    if (noise_std < 0.0) throw std::invalid_argument("data_gen: noise_std must be >= 0");
}

namespace {

using EdgeSet = std::set<std::pair<std::size_t, std::size_t>>;  // u < v

void sample_pair(EdgeSet& edges, std::size_t u, std::size_t v, int cu, int cv, double p_in,
                 double p_out, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double p = cu == cv ? p_in : p_out;
    if (unit(rng) < p) edges.emplace(std::min(u, v), std::max(u, v));
}

GraphSnapshot make_snapshot(const SbmConfig& cfg, const EdgeSet& edges,
                            const std::vector<int>& communities, int timestep,
                            std::mt19937_64& rng) {
    const std::size_t n = static_cast<std::size_t>(cfg.n_nodes);
    std::vector<std::tuple<std::size_t, std::size_t, double>> list;
    list.reserve(2 * edges.size());
    for (const auto& [u, v] : edges) {
        list.emplace_back(u, v, 1.0);
        list.emplace_back(v, u, 1.0);
    }
    GraphSnapshot snap;
    snap.adjacency = SparseMatrix::from_edge_list(n, n, list);
    snap.timestep = timestep;
    snap.node_labels.assign(communities.begin(), communities.end());
    for (const auto& [u, v] : edges) {
        snap.edge_labels[{u, v}] = communities[u] == communities[v] ? 1 : 0;
    }

    const int d = cfg.n_communities;
    snap.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), d);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            if (cfg.feature_mode == SbmConfig::FeatureMode::community_onehot_noisy) {
                snap.features(static_cast<Eigen::Index>(i), j) =
                    (communities[i] == j ? 1.0 : 0.0) + cfg.noise_std * gauss(rng);
            } else {
                snap.features(static_cast<Eigen::Index>(i), j) = unit(rng);
            }
        }
    }
    return snap;
}

}  // namespace

DynamicGraph generate_dynamic_sbm(const SbmConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    const std::size_t n = static_cast<std::size_t>(cfg.n_nodes);

    std::vector<int> communities(n);
    std::uniform_int_distribution<int> pick_comm(0, cfg.n_communities - 1);
    for (auto& c : communities) c = pick_comm(rng);

    EdgeSet edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            sample_pair(edges, u, v, communities[u], communities[v], cfg.p_in, cfg.p_out, rng);
        }
    }

    DynamicGraph graph;
    graph.n_nodes = n;
    graph.snapshots.push_back(make_snapshot(cfg, edges, communities, 0, rng));

    const std::size_t n_drift =
        static_cast<std::size_t>(std::ceil(cfg.drift_fraction * static_cast<double>(n)));
    std::vector<std::size_t> all_nodes(n);
    std::iota(all_nodes.begin(), all_nodes.end(), 0);

    for (int t = 1; t < cfg.n_snapshots; ++t) {
        std::shuffle(all_nodes.begin(), all_nodes.end(), rng);
        std::vector<std::size_t> moved(all_nodes.begin(),
                                       all_nodes.begin() + static_cast<std::ptrdiff_t>(n_drift));
        for (std::size_t u : moved) communities[u] = pick_comm(rng);
        // resample only edges incident to the moved nodes
        std::set<std::size_t> moved_set(moved.begin(), moved.end());
        for (auto it = edges.begin(); it != edges.end();) {
            if (moved_set.count(it->first) || moved_set.count(it->second)) {
                it = edges.erase(it);
            } else {
                ++it;
            }
        }
        for (std::size_t u : moved) {
            for (std::size_t v = 0; v < n; ++v) {
                if (v == u) continue;
                // pairs between two moved nodes resample once (from the lower index)
                if (moved_set.count(v) && v < u) continue;
                sample_pair(edges, u, v, communities[u], communities[v], cfg.p_in, cfg.p_out, rng);
            }
        }
        graph.snapshots.push_back(make_snapshot(cfg, edges, communities, t, rng));
    }

    // same truncating 70/10/20 convention as the snapshot file loader
    const std::size_t T = static_cast<std::size_t>(cfg.n_snapshots);
    graph.split.train_end = (7 * T) / 10;
    graph.split.val_end = (8 * T) / 10;
    graph.split.test_end = static_cast<std::size_t>(cfg.n_snapshots);
    graph.split.train_end = std::max<std::size_t>(graph.split.train_end, 1);
    graph.split.val_end = std::max(graph.split.val_end, graph.split.train_end + 1);
    graph.split.val_end = std::min(graph.split.val_end, graph.split.test_end);
    return graph;
}

double homophily_ratio(const GraphSnapshot& snapshot) {
    if (snapshot.node_labels.empty()) {
        throw std::invalid_argument("data_gen: homophily_ratio requires node labels");
    }
    std::size_t same = 0, total = 0;
    for (const auto& [u, v, w] : snapshot.adjacency.to_edge_list()) {
        (void)w;
        if (u >= v) continue;  // undirected edge counted once
        ++total;
        if (snapshot.node_labels[u] == snapshot.node_labels[v]) ++same;
    }
    if (total == 0) throw std::invalid_argument("data_gen: homophily_ratio on empty edge set");
    return static_cast<double>(same) / static_cast<double>(total);
}

}  // namespace deft
