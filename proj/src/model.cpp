#include "deft/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace deft {

using nn::Mat;
using nn::Tensor;

void DeftConfig::validate() const {
    auto one_of = [](int v, std::initializer_list<int> allowed) {
        return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
    };
    if (!one_of(n_layers, {1, 2})) throw std::invalid_argument("config: n_layers must be 1 or 2");
    if (!one_of(hidden_dim, {32, 64, 128}))
        throw std::invalid_argument("config: hidden_dim must be one of 32, 64, 128");
    if (!one_of(n_heads, {4, 8, 16}))
        throw std::invalid_argument("config: n_heads must be one of 4, 8, 16");
    if (!one_of(filter_order, {4, 8, 16}))
        throw std::invalid_argument("config: filter_order must be one of 4, 8, 16");
    if (hidden_dim % n_heads != 0)
        throw std::invalid_argument("config: hidden_dim must be divisible by n_heads");
    if (scales.empty()) throw std::invalid_argument("config: scales must be non-empty");
    for (double s : scales)
        if (s < 0.1 || s > 10.0)
            throw std::invalid_argument("config: scales must lie in [0.1, 10]");
    if (d_t <= 0 || d_t % 2 != 0)
        throw std::invalid_argument("config: d_t must be positive and even");
    if (n_filter_heads < 1) throw std::invalid_argument("config: n_filter_heads must be >= 1");
}

NeighborhoodPattern self_loop_pattern(const SparseMatrix& adjacency) {
    NeighborhoodPattern p;
    const std::size_t n = adjacency.n_rows;
    p.offsets.reserve(n + 1);
    p.offsets.push_back(0);
    for (std::size_t i = 0; i < n; ++i) {
        bool self_inserted = false;
        for (std::size_t k = adjacency.row_offsets[i]; k < adjacency.row_offsets[i + 1]; ++k) {
            std::size_t j = adjacency.col_indices[k];
            if (!self_inserted && j > i) {
                p.cols.push_back(i);
                p.srcs.push_back(i);
                self_inserted = true;
            }
            p.cols.push_back(j);
            p.srcs.push_back(i);
        }
        if (!self_inserted) {
            p.cols.push_back(i);
            p.srcs.push_back(i);
        }
        p.offsets.push_back(p.cols.size());
    }
    return p;
}

SparseMatrix mean_propagation_matrix(const SparseMatrix& adjacency) {
    const std::size_t n = adjacency.n_rows;
    std::vector<SparseMatrix::Entry> entries;
    entries.reserve(adjacency.nnz() + n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg_hat = adjacency.row_sum(i) + 1.0;  // self-loop of weight 1
        entries.emplace_back(i, i, 1.0 / deg_hat);
        for (std::size_t k = adjacency.row_offsets[i]; k < adjacency.row_offsets[i + 1]; ++k)
            entries.emplace_back(i, adjacency.col_indices[k], adjacency.values[k] / deg_hat);
    }
    return SparseMatrix::from_edge_list(n, n, std::move(entries));
}

Tensor message_passing_layer(const SparseMatrix& propagation, const Tensor& h, const Tensor& w) {
    return nn::leaky_relu(nn::matmul(nn::spmm(propagation, h), w));
}

Tensor hrm_forward(const Tensor& v_g, const Tensor& v_l, const Eigen::RowVectorXd& t_enc,
                   const Tensor& w_r, const Tensor& w_hr1, const Tensor& w_hr2) {
    Mat t_block = t_enc.replicate(v_g.rows(), 1);
    Tensor cat = nn::concat_cols({v_g, v_l, Tensor::constant(std::move(t_block))});
    Tensor v_gl = nn::matmul(cat, w_r);
    Tensor v_ff = nn::concat_cols({nn::sin_map(v_gl), nn::cos_map(v_gl)});
    return nn::mlp2(v_ff, w_hr1, w_hr2);
}

DeftModel::DeftModel(const DeftConfig& config, int feature_dim, std::uint64_t seed)
    : config_(config), feature_dim_(feature_dim) {
    config_.validate();
    if (feature_dim <= 0) throw std::invalid_argument("model: feature_dim must be positive");
    std::mt19937_64 rng(seed);
    const int hid = config_.hidden_dim;
    const int m1 = config_.filter_order + 1;
    const auto j_scales = static_cast<Eigen::Index>(config_.scales.size());

    for (int h = 0; h < config_.n_filter_heads; ++h) {
        SpectralHead head;
        head.gru = nn::GruParams::create(feature_dim, feature_dim, rng);
        head.w_gnn0 = Tensor::variable(nn::glorot_uniform(feature_dim, hid, rng));
        head.w_mlp1 = Tensor::variable(nn::glorot_uniform(hid, hid, rng));
        head.w_mlp2 = Tensor::variable(Mat::Zero(hid, m1));  // all-pass at init
        head.proj = Tensor::variable(nn::glorot_uniform(j_scales * feature_dim, hid, rng));
        spectral_heads_.push_back(std::move(head));
    }

    for (int l = 0; l < config_.n_layers; ++l) {
        SpatialLayer layer;
        const int d_in = (l == 0) ? feature_dim : hid;
        layer.gru = nn::GruParams::create(d_in, d_in, rng);
        layer.w0 = Tensor::variable(nn::glorot_uniform(d_in, hid, rng));
        spatial_layers_.push_back(std::move(layer));
    }

    const int d_g = config_.n_filter_heads * hid;
    const int d_cat = d_g + hid + config_.d_t;
    w_r_ = Tensor::variable(nn::glorot_uniform(d_cat, hid, rng));
    w_hr1_ = Tensor::variable(nn::glorot_uniform(2 * hid, hid, rng));
    w_hr2_ = Tensor::variable(nn::glorot_uniform(hid, hid, rng));

    const int d_out = hid / config_.n_heads;
    for (int h = 0; h < config_.n_heads; ++h) {
        w_q_.push_back(Tensor::variable(nn::glorot_uniform(hid, d_out, rng)));
        w_k_.push_back(Tensor::variable(nn::glorot_uniform(hid, d_out, rng)));
        w_v_.push_back(Tensor::variable(nn::glorot_uniform(hid, d_out, rng)));
        w_gat_.push_back(Tensor::variable(nn::glorot_uniform(hid, d_out, rng)));
        a_src_.push_back(Tensor::variable(nn::glorot_uniform(d_out, 1, rng)));
        a_dst_.push_back(Tensor::variable(nn::glorot_uniform(d_out, 1, rng)));
    }
    w_agg1_ = Tensor::variable(nn::glorot_uniform(hid, hid, rng));
    w_agg2_ = Tensor::variable(nn::glorot_uniform(hid, hid, rng));

    reset_state();
}

void DeftModel::reset_state() {
    for (auto& head : spectral_heads_) {
        head.w_state = head.w_gnn0;
        head.frozen_coefficients = Tensor();
    }
    for (auto& layer : spatial_layers_) layer.w_state = layer.w0;
    forward_count_ = 0;
}

Tensor DeftModel::evolve_weights(const nn::GruParams& gru, const Tensor& w_state,
                                 const Tensor* layer_input) const {
    Tensor state = nn::transpose(w_state);  // columns of W become state rows
    Tensor next;
    if (config_.rnn_style == RnnStyle::weights_as_state) {
        next = nn::gru_cell_stateonly(state, gru);
    } else {
        if (!layer_input)
            throw std::invalid_argument("model: input_driven evolution needs layer input");
        Tensor pooled = nn::mean_rows(*layer_input);  // 1 x d_in
        Tensor broadcast = nn::matmul(Tensor::constant(Mat::Ones(state.rows(), 1)), pooled);
        next = nn::gru_cell(broadcast, state, gru);
    }
    return nn::transpose(next);
}

Tensor DeftModel::spectral_coefficients(SpectralHead& head, const SparseMatrix& propagation,
                                        const Tensor& x) {
    head.w_state = evolve_weights(head.gru, head.w_state, &x);
    Tensor hidden = message_passing_layer(propagation, x, head.w_state);
    Tensor pooled = nn::mean_rows(hidden);
    Tensor delta = nn::mlp2(pooled, head.w_mlp1, head.w_mlp2);  // 1 x (M+1)
    Mat all_pass = Mat::Zero(config_.filter_order + 1, 1);
    all_pass(0, 0) = 2.0;
    return nn::add(nn::transpose(delta), Tensor::constant(std::move(all_pass)));
}

Tensor DeftModel::aggregate(const NeighborhoodPattern& pattern, const Tensor& h) {
    switch (config_.aggregator) {
        case Aggregator::mlp:
            return nn::mlp2(h, w_agg1_, w_agg2_);
        case Aggregator::sparse_transformer: {
            const double d_out = static_cast<double>(config_.hidden_dim / config_.n_heads);
            std::vector<Tensor> heads;
            for (int i = 0; i < config_.n_heads; ++i) {
                Tensor q = nn::matmul(h, w_q_[static_cast<std::size_t>(i)]);
                Tensor k = nn::matmul(h, w_k_[static_cast<std::size_t>(i)]);
                Tensor v = nn::matmul(h, w_v_[static_cast<std::size_t>(i)]);
                Tensor scores = nn::affine(
                    nn::row_sum(nn::mul(nn::gather_rows(q, pattern.srcs),
                                        nn::gather_rows(k, pattern.cols))),
                    1.0 / d_out, 0.0);
                Tensor att = nn::segment_softmax(scores, pattern.offsets);
                heads.push_back(nn::segment_weighted_sum(att, pattern.offsets, pattern.cols, v));
            }
            return nn::concat_cols(heads);
        }
        case Aggregator::gat_style: {
            std::vector<Tensor> heads;
            for (int i = 0; i < config_.n_heads; ++i) {
                Tensor hw = nn::matmul(h, w_gat_[static_cast<std::size_t>(i)]);
                Tensor s_src = nn::matmul(hw, a_src_[static_cast<std::size_t>(i)]);
                Tensor s_dst = nn::matmul(hw, a_dst_[static_cast<std::size_t>(i)]);
                Tensor scores = nn::leaky_relu(
                    nn::add(nn::gather_rows(s_src, pattern.srcs),
                            nn::gather_rows(s_dst, pattern.cols)),
                    0.2);
                Tensor att = nn::segment_softmax(scores, pattern.offsets);
                heads.push_back(nn::segment_weighted_sum(att, pattern.offsets, pattern.cols, hw));
            }
            return nn::concat_cols(heads);
        }
    }
    throw std::invalid_argument("model: unknown aggregator");
}

Tensor DeftModel::forward(const GraphSnapshot& snapshot) {
    if (static_cast<int>(snapshot.features.cols()) != feature_dim_)
        throw std::invalid_argument("model: feature dimension mismatch");
    const NeighborhoodPattern pattern = self_loop_pattern(snapshot.adjacency);
    auto propagation =
        std::make_shared<const SparseMatrix>(mean_propagation_matrix(snapshot.adjacency));
    Tensor x = Tensor::constant(snapshot.features);

    Tensor v_g;
    if (config_.spectral_mode == SpectralMode::off) {
        v_g = Tensor::constant(Mat::Zero(snapshot.features.rows(),
                                         config_.n_filter_heads * config_.hidden_dim));
    } else {
        auto laplacian = std::make_shared<const SparseMatrix>(build_laplacian(snapshot));
        double lambda_hat = estimate_lambda_max(*laplacian, LambdaMaxMode::power_iteration);
        double lambda_max = std::max(1.01 * lambda_hat, 1e-9);
        std::vector<Tensor> head_features;
        for (auto& head : spectral_heads_) {
            Tensor coeffs;
            if (config_.spectral_mode == SpectralMode::static_t0 &&
                head.frozen_coefficients.defined()) {
                coeffs = head.frozen_coefficients;
            } else {
                coeffs = spectral_coefficients(head, *propagation, x);
                if (config_.spectral_mode == SpectralMode::static_t0)
                    head.frozen_coefficients = coeffs;
            }
            std::vector<Tensor> per_scale;
            for (double s : config_.scales) {
                double s_eff = (config_.clamp_mode == ClampMode::clamp) ? std::min(s, 1.0) : s;
                per_scale.push_back(nn::cheb_apply(coeffs, laplacian, s_eff, lambda_max, x));
            }
            head_features.push_back(nn::matmul(nn::concat_cols(per_scale), head.proj));
            if (&head == &spectral_heads_.front()) {
                last_filter_.coefficients.assign(
                    coeffs.value().data(), coeffs.value().data() + coeffs.value().rows());
                last_filter_.lambda_max = lambda_max;
            }
        }
        v_g = head_features.size() == 1 ? head_features[0] : nn::concat_cols(head_features);
    }

    Tensor v_l = x;
    for (auto& layer : spatial_layers_) {
        layer.w_state = evolve_weights(layer.gru, layer.w_state, &v_l);
        v_l = message_passing_layer(*propagation, v_l, layer.w_state);
    }

    Eigen::RowVectorXd t_enc = nn::timestep_encoding(snapshot.timestep, config_.d_t);
    Tensor h = hrm_forward(v_g, v_l, t_enc, w_r_, w_hr1_, w_hr2_);
    ++forward_count_;
    return aggregate(pattern, h);
}

std::vector<Tensor> DeftModel::sequence_forward(const DynamicGraph& graph, std::size_t t_begin,
                                                std::size_t t_end) {
    if (t_begin >= t_end || t_end > graph.snapshots.size())
        throw std::invalid_argument("model: empty or out-of-range timestep range");
    std::vector<Tensor> out;
    out.reserve(t_end - t_begin);
    for (std::size_t t = t_begin; t < t_end; ++t) out.push_back(forward(graph.snapshots[t]));
    return out;
}

std::vector<nn::Parameter> DeftModel::parameters() const {
    std::vector<nn::Parameter> out;
    for (std::size_t i = 0; i < spectral_heads_.size(); ++i) {
        const auto& head = spectral_heads_[i];
        std::string prefix = "spectral." + std::to_string(i);
        head.gru.collect(out, prefix + ".gru");
        out.push_back({prefix + ".w_gnn0", head.w_gnn0});
        out.push_back({prefix + ".w_mlp1", head.w_mlp1});
        out.push_back({prefix + ".w_mlp2", head.w_mlp2});
        out.push_back({prefix + ".proj", head.proj});
    }
    for (std::size_t l = 0; l < spatial_layers_.size(); ++l) {
        std::string prefix = "spatial." + std::to_string(l);
        spatial_layers_[l].gru.collect(out, prefix + ".gru");
        out.push_back({prefix + ".w0", spatial_layers_[l].w0});
    }
    out.push_back({"hrm.w_r", w_r_});
    out.push_back({"hrm.w_hr1", w_hr1_});
    out.push_back({"hrm.w_hr2", w_hr2_});
    for (std::size_t h = 0; h < w_q_.size(); ++h) {
        std::string prefix = "am." + std::to_string(h);
        out.push_back({prefix + ".w_q", w_q_[h]});
        out.push_back({prefix + ".w_k", w_k_[h]});
        out.push_back({prefix + ".w_v", w_v_[h]});
        out.push_back({prefix + ".w_gat", w_gat_[h]});
        out.push_back({prefix + ".a_src", a_src_[h]});
        out.push_back({prefix + ".a_dst", a_dst_[h]});
    }
    out.push_back({"agg.w1", w_agg1_});
    out.push_back({"agg.w2", w_agg2_});
    return out;
}

ChebyshevFilter DeftModel::last_filter() const {
    if (last_filter_.coefficients.empty())
        throw std::logic_error("model: no forward pass has produced a filter yet");
    return last_filter_;
}

nn::Mat DeftModel::spatial_weight_value(int layer) const {
    return spatial_layers_.at(static_cast<std::size_t>(layer)).w_state.value();
}

}  // namespace deft
