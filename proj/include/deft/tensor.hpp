#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "deft/sparse.hpp"

namespace deft::nn {

using Mat = Eigen::MatrixXd;

/// Dense 2-D tensor participating in reverse-mode differentiation.
///
/// A Tensor is a cheap handle onto a graph node; ops build the graph and
/// backward() traverses it in reverse topological order. Forward values are
/// checked finite at op boundaries.
class Tensor {
public:
    Tensor() = default;

    /// Leaf with no gradient.
    static Tensor constant(Mat value);
    /// Leaf that accumulates gradients (a parameter).
    static Tensor variable(Mat value);

    bool defined() const { return node_ != nullptr; }
    const Mat& value() const;
    Mat& value_mut() const;  // optimizer updates; leaves only
    const Mat& grad() const;
    bool requires_grad() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }

    void zero_grad() const;
    /// Seeds a 1x1 root with gradient 1 and runs the tape backwards.
    void backward() const;

    struct Node;
    const std::shared_ptr<Node>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<Node> node_;
};

struct Tensor::Node {
    Mat value;
    Mat grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backprop;

    Mat& grad_buffer();
};

// ---- arithmetic ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor matmul(const Tensor& a, const Tensor& b);
/// alpha * x + beta, elementwise.
Tensor affine(const Tensor& x, double alpha, double beta);
/// Adds a 1 x d bias row to every row of x (the only broadcast supported).
Tensor add_row_bias(const Tensor& x, const Tensor& bias);
Tensor transpose(const Tensor& x);

// ---- nonlinearities ----
Tensor sigmoid(const Tensor& x);
Tensor tanh_act(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope = 0.01);
Tensor sin_map(const Tensor& x);
Tensor cos_map(const Tensor& x);

// ---- shape / reduction ----
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& indices);
Tensor mean_rows(const Tensor& x);  // 1 x d
Tensor row_sum(const Tensor& x);    // N x 1
Tensor sum_all(const Tensor& x);    // 1 x 1

// ---- graph/sparse ops ----
/// a * x for a constant sparse matrix (not differentiable through a).
/// The matrix is shared into the tape so it outlives backward().
Tensor spmm(std::shared_ptr<const SparseMatrix> a, const Tensor& x);
Tensor spmm(const SparseMatrix& a, const Tensor& x);  // copies a

/// Chebyshev polynomial filter application g(s_eff L) x with the c_0/2
/// convention, differentiable with respect to both the coefficient column
/// (order+1 x 1) and x. The caller resolves clamp mode into s_eff.
Tensor cheb_apply(const Tensor& coefficients, std::shared_ptr<const SparseMatrix> laplacian,
                  double s_eff, double lambda_max, const Tensor& x);
Tensor cheb_apply(const Tensor& coefficients, const SparseMatrix& laplacian, double s_eff,
                  double lambda_max, const Tensor& x);  // copies the Laplacian

/// Row-wise softmax over unmasked entries; masked entries are exactly zero;
/// fully-masked rows yield all-zero rows.
Tensor masked_softmax(const Tensor& scores, const Eigen::Matrix<bool, Eigen::Dynamic,
                                                                Eigen::Dynamic>& mask);

/// Softmax within each CSR segment of a column of edge scores.
Tensor segment_softmax(const Tensor& edge_scores, const std::vector<std::size_t>& offsets);

/// out[i] = sum over edges e in segment i of weights[e] * values[cols[e]].
Tensor segment_weighted_sum(const Tensor& weights, const std::vector<std::size_t>& offsets,
                            const std::vector<std::size_t>& cols, const Tensor& values);

/// Mean negative log-softmax of the true class, max-subtraction stabilized.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

/// Named trainable tensor.
struct Parameter {
    std::string name;
    Tensor tensor;
};

}  // namespace deft::nn
