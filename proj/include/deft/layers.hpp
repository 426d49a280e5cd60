#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "deft/tensor.hpp"

namespace deft::nn {

enum class Activation { leaky_relu, tanh };

/// Glorot-uniform matrix from a seedable PRNG.
Mat glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

/// GRU cell weights. Row convention: state h is (batch x hidden), input x
/// is (batch x input_dim); weights multiply from the right.
struct GruParams {
    Tensor w_xz, w_hz, b_z;
    Tensor w_xr, w_hr, b_r;
    Tensor w_xh, w_hh, b_h;

    static GruParams create(Eigen::Index input_dim, Eigen::Index hidden_dim,
                            std::mt19937_64& rng);
    void collect(std::vector<Parameter>& out, const std::string& prefix) const;
};

/// Standard GRU update: z and r gates, candidate h~, h' = (1-z) h + z h~.
Tensor gru_cell(const Tensor& x, const Tensor& h, const GruParams& p);

/// State-only GRU step (no external input), used when weights evolve as the
/// recurrent state.
Tensor gru_cell_stateonly(const Tensor& h, const GruParams& p);

/// Two-layer perceptron x W1 -> activation -> W2, biasless by default.
Tensor mlp2(const Tensor& x, const Tensor& w1, const Tensor& w2,
            Activation activation = Activation::leaky_relu);

/// Sinusoidal timestep encoding of even dimension d_t.
Eigen::RowVectorXd timestep_encoding(std::size_t t, int d_t);

/// Adam over a fixed parameter list.
class AdamOptimizer {
public:
    explicit AdamOptimizer(std::vector<Parameter> params, double lr = 1e-3, double beta1 = 0.9,
                           double beta2 = 0.999, double eps = 1e-8);

    void zero_grad();
    void step();
    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }
    const std::vector<Parameter>& params() const { return params_; }

private:
    std::vector<Parameter> params_;
    std::vector<Mat> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    long step_count_ = 0;
};

/// Central-difference check of d f / d params. f must rebuild its graph on
/// every call. Returns the max relative error over all coordinates.
double gradient_check(const std::function<Tensor()>& f, const std::vector<Parameter>& params,
                      double step = 1e-5);

}  // namespace deft::nn
