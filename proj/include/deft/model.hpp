#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "deft/chebyshev.hpp"
#include "deft/graph.hpp"
#include "deft/layers.hpp"
#include "deft/tensor.hpp"

namespace deft {

enum class Aggregator { mlp, gat_style, sparse_transformer };
enum class RnnStyle { weights_as_state, input_driven };

/// Ablation switch for the spectral path: fully dynamic filters, a filter
/// frozen at the first timestep, or no spectral features at all.
enum class SpectralMode { dynamic, static_t0, off };

struct DeftConfig {
    int n_layers = 1;        // {1, 2}
    int hidden_dim = 32;     // {32, 64, 128}
    int n_heads = 4;         // {4, 8, 16}
    int filter_order = 8;    // {4, 8, 16}
    std::vector<double> scales{0.5, 1.0, 2.0};  // each in [0.1, 10]
    int d_t = 16;
    Aggregator aggregator = Aggregator::sparse_transformer;
    RnnStyle rnn_style = RnnStyle::weights_as_state;
    int n_filter_heads = 1;
    SpectralMode spectral_mode = SpectralMode::dynamic;
    ClampMode clamp_mode = ClampMode::clamp;

    void validate() const;
};

/// Neighborhood pattern with self-loops, shared by message passing and
/// sparse attention.
struct NeighborhoodPattern {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> cols;
    std::vector<std::size_t> srcs;  // row index per edge slot
};

NeighborhoodPattern self_loop_pattern(const SparseMatrix& adjacency);

/// Row-normalized propagation operator D_hat^{-1} (A + I).
SparseMatrix mean_propagation_matrix(const SparseMatrix& adjacency);

/// Mean-aggregation message passing: leaky_relu(P H W).
nn::Tensor message_passing_layer(const SparseMatrix& propagation, const nn::Tensor& h,
                                 const nn::Tensor& w);

/// HRM fusion: v_gl = (v_g || v_l || t_enc) W_r; Fourier features
/// sin(v_gl) || cos(v_gl); then the two-layer head.
nn::Tensor hrm_forward(const nn::Tensor& v_g, const nn::Tensor& v_l,
                       const Eigen::RowVectorXd& t_enc, const nn::Tensor& w_r,
                       const nn::Tensor& w_hr1, const nn::Tensor& w_hr2);

/// The DEFT architecture over one fixed node universe.
///
/// Evolving weight state is carried across forward() calls; reset_state()
/// rewinds it to the initial parameters (start of every epoch).
class DeftModel {
public:
    DeftModel(const DeftConfig& config, int feature_dim, std::uint64_t seed);

    void reset_state();

    /// One snapshot forward; evolves weights exactly once per layer.
    nn::Tensor forward(const GraphSnapshot& snapshot);

    /// Iterates forward over snapshots [t_begin, t_end).
    std::vector<nn::Tensor> sequence_forward(const DynamicGraph& graph, std::size_t t_begin,
                                             std::size_t t_end);

    std::vector<nn::Parameter> parameters() const;
    const DeftConfig& config() const { return config_; }
    int feature_dim() const { return feature_dim_; }
    int embedding_dim() const { return config_.hidden_dim; }

    /// Plain-value copy of the filter produced by the last forward()
    /// (first filter head).
    ChebyshevFilter last_filter() const;

    /// Current evolved spatial weights (value copy), mainly for tests.
    nn::Mat spatial_weight_value(int layer) const;

private:
    struct SpectralHead {
        nn::GruParams gru;
        nn::Tensor w_gnn0;   // initial GNN weight, evolved per timestep
        nn::Tensor w_mlp1;
        nn::Tensor w_mlp2;   // zero-initialized so the filter starts all-pass
        nn::Tensor proj;
        nn::Tensor w_state;  // evolving weight (reset to w_gnn0 each epoch)
        nn::Tensor frozen_coefficients;  // static_t0 mode
    };
    struct SpatialLayer {
        nn::GruParams gru;
        nn::Tensor w0;
        nn::Tensor w_state;
    };

    nn::Tensor evolve_weights(const nn::GruParams& gru, const nn::Tensor& w_state,
                              const nn::Tensor* layer_input) const;
    nn::Tensor spectral_coefficients(SpectralHead& head, const SparseMatrix& propagation,
                                     const nn::Tensor& x);
    nn::Tensor aggregate(const NeighborhoodPattern& pattern, const nn::Tensor& h);

    DeftConfig config_;
    int feature_dim_;
    std::vector<SpectralHead> spectral_heads_;
    std::vector<SpatialLayer> spatial_layers_;
    nn::Tensor w_r_, w_hr1_, w_hr2_;                    // HRM
    std::vector<nn::Tensor> w_q_, w_k_, w_v_;           // AM, per attention head
    std::vector<nn::Tensor> w_gat_, a_src_, a_dst_;     // gat_style aggregator
    nn::Tensor w_agg1_, w_agg2_;                        // mlp aggregator
    std::size_t forward_count_ = 0;
    ChebyshevFilter last_filter_;
};

}  // namespace deft
