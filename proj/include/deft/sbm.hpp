#pragma once

#include <cstdint>
#include <vector>

#include "deft/graph.hpp"

namespace deft {

struct SbmConfig {
    int n_nodes = 100;
    int n_communities = 3;
    double p_in = 0.2;
    double p_out = 0.02;
    int n_snapshots = 20;
    double drift_fraction = 0.05;
    enum class FeatureMode { community_onehot_noisy, random };
    FeatureMode feature_mode = FeatureMode::community_onehot_noisy;
    double noise_std = 0.1;
    std::uint64_t seed = 7;
    bool heterophilic = false;  // must be set to allow p_out > p_in

    void validate() const;
};

/// Dynamic SBM: snapshot 0 sampled fresh; each step reassigns exactly
/// ceil(drift_fraction * N) nodes to random communities and resamples only
/// the edges incident to them. Split is 70/10/20 over snapshots.
DynamicGraph generate_dynamic_sbm(const SbmConfig& cfg);

/// Fraction of edges whose endpoints share a node label.
double homophily_ratio(const GraphSnapshot& snapshot);

}  // namespace deft
