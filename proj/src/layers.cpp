#include "deft/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace deft::nn {

Mat glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> unif(-bound, bound);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = unif(rng);
    return m;
}

GruParams GruParams::create(Eigen::Index input_dim, Eigen::Index hidden_dim,
                            std::mt19937_64& rng) {
    GruParams p;
    p.w_xz = Tensor::variable(glorot_uniform(input_dim, hidden_dim, rng));
    p.w_hz = Tensor::variable(glorot_uniform(hidden_dim, hidden_dim, rng));
    p.b_z = Tensor::variable(Mat::Zero(1, hidden_dim));
    p.w_xr = Tensor::variable(glorot_uniform(input_dim, hidden_dim, rng));
    p.w_hr = Tensor::variable(glorot_uniform(hidden_dim, hidden_dim, rng));
    p.b_r = Tensor::variable(Mat::Zero(1, hidden_dim));
    p.w_xh = Tensor::variable(glorot_uniform(input_dim, hidden_dim, rng));
    p.w_hh = Tensor::variable(glorot_uniform(hidden_dim, hidden_dim, rng));
    p.b_h = Tensor::variable(Mat::Zero(1, hidden_dim));
    return p;
}

void GruParams::collect(std::vector<Parameter>& out, const std::string& prefix) const {
    out.push_back({prefix + ".w_xz", w_xz});
    out.push_back({prefix + ".w_hz", w_hz});
    out.push_back({prefix + ".b_z", b_z});
    out.push_back({prefix + ".w_xr", w_xr});
    out.push_back({prefix + ".w_hr", w_hr});
    out.push_back({prefix + ".b_r", b_r});
    out.push_back({prefix + ".w_xh", w_xh});
    out.push_back({prefix + ".w_hh", w_hh});
    out.push_back({prefix + ".b_h", b_h});
}

Tensor gru_cell(const Tensor& x, const Tensor& h, const GruParams& p) {
    Tensor z = sigmoid(add_row_bias(add(matmul(x, p.w_xz), matmul(h, p.w_hz)), p.b_z));
    Tensor r = sigmoid(add_row_bias(add(matmul(x, p.w_xr), matmul(h, p.w_hr)), p.b_r));
    Tensor candidate =
        tanh_act(add_row_bias(add(matmul(x, p.w_xh), matmul(mul(r, h), p.w_hh)), p.b_h));
    return add(mul(affine(z, -1.0, 1.0), h), mul(z, candidate));
}

Tensor gru_cell_stateonly(const Tensor& h, const GruParams& p) {
    Tensor z = sigmoid(add_row_bias(matmul(h, p.w_hz), p.b_z));
    Tensor r = sigmoid(add_row_bias(matmul(h, p.w_hr), p.b_r));
    Tensor candidate = tanh_act(add_row_bias(matmul(mul(r, h), p.w_hh), p.b_h));
    return add(mul(affine(z, -1.0, 1.0), h), mul(z, candidate));
}

Tensor mlp2(const Tensor& x, const Tensor& w1, const Tensor& w2, Activation activation) {
    Tensor hidden = matmul(x, w1);
    hidden = activation == Activation::leaky_relu ? leaky_relu(hidden) : tanh_act(hidden);
    return matmul(hidden, w2);
}

Eigen::RowVectorXd timestep_encoding(std::size_t t, int d_t) {
    if (d_t <= 0 || d_t % 2 != 0)
        throw std::invalid_argument("nn: timestep encoding dimension must be positive and even");
    Eigen::RowVectorXd enc(d_t);
    for (int i = 0; i < d_t / 2; ++i) {
        double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / d_t);
        enc(2 * i) = std::sin(static_cast<double>(t) * freq);
        enc(2 * i + 1) = std::cos(static_cast<double>(t) * freq);
    }
    return enc;
}

AdamOptimizer::AdamOptimizer(std::vector<Parameter> params, double lr, double beta1, double beta2,
                             double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.push_back(Mat::Zero(p.tensor.rows(), p.tensor.cols()));
        v_.push_back(Mat::Zero(p.tensor.rows(), p.tensor.cols()));
    }
}

void AdamOptimizer::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

void AdamOptimizer::step() {
    ++step_count_;
    double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const Mat& g = params_[i].tensor.grad();
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
        Mat m_hat = m_[i] / bias1;
        Mat v_hat = v_[i] / bias2;
        params_[i].tensor.value_mut().array() -=
            lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
    }
}

double gradient_check(const std::function<Tensor()>& f, const std::vector<Parameter>& params,
                      double step) {
    for (const auto& p : params) p.tensor.zero_grad();
    f().backward();
    std::vector<Mat> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p.tensor.grad());

    double max_rel = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Mat& v = params[pi].tensor.value_mut();
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            for (Eigen::Index j = 0; j < v.cols(); ++j) {
                double orig = v(i, j);
                v(i, j) = orig + step;
                double plus = f().value()(0, 0);
                v(i, j) = orig - step;
                double minus = f().value()(0, 0);
                v(i, j) = orig;
                double numeric = (plus - minus) / (2.0 * step);
                double a = analytic[pi](i, j);
                double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
                max_rel = std::max(max_rel, rel);
            }
        }
    }
    return max_rel;
}

}  // namespace deft::nn
