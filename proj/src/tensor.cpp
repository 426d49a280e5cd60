#include "deft/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace deft::nn {

namespace {

using NodePtr = std::shared_ptr<Tensor::Node>;

void check_finite(const Mat& m, const char* op) {
    if (!m.allFinite())
        throw std::runtime_error(std::string("nn: non-finite value produced by ") + op);
}

NodePtr make_node(Mat value, const char* op, std::vector<NodePtr> parents) {
    check_finite(value, op);
    auto node = std::make_shared<Tensor::Node>();
    node->value = std::move(value);
    for (auto& p : parents)
        if (p && p->requires_grad) node->requires_grad = true;
    node->parents = std::move(parents);
    return node;
}

}  // namespace

Mat& Tensor::Node::grad_buffer() {
    if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
    return grad;
}

Tensor Tensor::constant(Mat value) {
    check_finite(value, "constant");
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return Tensor(std::move(node));
}

Tensor Tensor::variable(Mat value) {
    Tensor t = constant(std::move(value));
    t.node_->requires_grad = true;
    return t;
}

const Mat& Tensor::value() const {
    if (!node_) throw std::logic_error("nn: undefined tensor");
    return node_->value;
}

Mat& Tensor::value_mut() const {
    if (!node_) throw std::logic_error("nn: undefined tensor");
    return node_->value;
}

const Mat& Tensor::grad() const {
    if (!node_) throw std::logic_error("nn: undefined tensor");
    return const_cast<Node&>(*node_).grad_buffer();
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::zero_grad() const {
    if (node_) node_->grad = Mat::Zero(node_->value.rows(), node_->value.cols());
}

void Tensor::backward() const {
    if (!node_) throw std::logic_error("nn: undefined tensor");
    if (node_->value.size() != 1)
        throw std::invalid_argument("nn: backward requires a 1x1 root");

    // Reverse topological order via iterative post-order DFS.
    std::vector<Tensor::Node*> order;
    std::unordered_set<Tensor::Node*> seen;
    std::vector<std::pair<Tensor::Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [cur, next_child] = stack.back();
        if (next_child < cur->parents.size()) {
            Tensor::Node* parent = cur->parents[next_child++].get();
            if (parent && parent->requires_grad && !seen.count(parent)) {
                seen.insert(parent);
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(cur);
            stack.pop_back();
        }
    }

    // Interior gradients are scratch for this call; leaves keep accumulating
    // across calls (so repeated backward sums, and shared prefixes of a
    // growing tape never reuse stale values).
    for (auto* n : order)
        if (n->backprop) n->grad = Mat::Zero(n->value.rows(), n->value.cols());

    node_->grad_buffer().array() += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backprop && (*it)->requires_grad) (*it)->backprop();
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string("nn: shape mismatch in ") + op);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    auto node = make_node(a.value() + b.value(), "add", {a.node(), b.node()});
    auto an = a.node(), bn = b.node();
    auto out = node.get();
    node->backprop = [an, bn, out] {
        if (an->requires_grad) an->grad_buffer() += out->grad;
        if (bn->requires_grad) bn->grad_buffer() += out->grad;
    };
    return Tensor(node);
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    auto node = make_node(a.value() - b.value(), "sub", {a.node(), b.node()});
    auto an = a.node(), bn = b.node();
    auto out = node.get();
    node->backprop = [an, bn, out] {
        if (an->requires_grad) an->grad_buffer() += out->grad;
        if (bn->requires_grad) bn->grad_buffer() -= out->grad;
    };
    return Tensor(node);
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    auto node = make_node(a.value().cwiseProduct(b.value()), "mul", {a.node(), b.node()});
    auto an = a.node(), bn = b.node();
    auto out = node.get();
    node->backprop = [an, bn, out] {
        if (an->requires_grad) an->grad_buffer() += out->grad.cwiseProduct(bn->value);
        if (bn->requires_grad) bn->grad_buffer() += out->grad.cwiseProduct(an->value);
    };
    return Tensor(node);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("nn: shape mismatch in matmul");
    auto node = make_node(a.value() * b.value(), "matmul", {a.node(), b.node()});
    auto an = a.node(), bn = b.node();
    auto out = node.get();
    node->backprop = [an, bn, out] {
        if (an->requires_grad) an->grad_buffer() += out->grad * bn->value.transpose();
        if (bn->requires_grad) bn->grad_buffer() += an->value.transpose() * out->grad;
    };
    return Tensor(node);
}

Tensor affine(const Tensor& x, double alpha, double beta) {
    auto node = make_node((alpha * x.value().array() + beta).matrix(), "affine", {x.node()});
    auto xn = x.node();
    auto out = node.get();
    node->backprop = [xn, out, alpha] {
        if (xn->requires_grad) xn->grad_buffer() += alpha * out->grad;
    };
    return Tensor(node);
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
    if (bias.rows() != 1 || bias.cols() != x.cols())
        throw std::invalid_argument("nn: bias must be 1 x cols(x)");
    Mat v = x.value();
    v.rowwise() += bias.value().row(0);
    auto node = make_node(std::move(v), "add_row_bias", {x.node(), bias.node()});
    auto xn = x.node(), bn = bias.node();
    auto out = node.get();
    node->backprop = [xn, bn, out] {
        if (xn->requires_grad) xn->grad_buffer() += out->grad;
        if (bn->requires_grad) bn->grad_buffer().row(0) += out->grad.colwise().sum();
    };
    return Tensor(node);
}

Tensor transpose(const Tensor& x) {
    auto node = make_node(x.value().transpose(), "transpose", {x.node()});
    auto xn = x.node();
    auto out = node.get();
    node->backprop = [xn, out] {
        if (xn->requires_grad) xn->grad_buffer() += out->grad.transpose();
    };
    return Tensor(node);
}

Tensor sigmoid(const Tensor& x) {
    Mat v = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
    auto node = make_node(std::move(v), "sigmoid", {x.node()});
    auto xn = x.node();
    auto out = node.get();
    node->backprop = [xn, out] {
        if (xn->requires_grad)
            xn->grad_buffer().array() +=
                out->grad.array() * out->value.array() * (1.0 - out->value.array());
    };
    return Tensor(node);
}

Tensor tanh_act(const Tensor& x) {
    auto node = make_node(x.value().array().tanh().matrix(), "tanh", {x.node()});
    auto xn = x.node();
    auto out = node.get();
    node->backprop = [xn, out] {
        if (xn->requires_grad)
            xn->grad_buffer().array() +=
                out->grad.array() * (1.0 - out->value.array().square());
    };
    return Tensor(node);
}

Tensor leaky_relu(const Tensor& x, double slope) {
    Mat v = x.value().cwiseMax(slope * x.value());
    auto node = make_node(std::move(v), "leaky_relu", {x.node()});
    auto xn = x.node();
    auto out = node.get();
    node->backprop = [xn, out, slope] {
        if (!xn->requires_grad) return;
        // Subgradient at exactly 0 is the negative-side slope.
        xn->grad_buffer().array() +=
            out->grad.array() * (xn->value.array() > 0.0).select(
                Eigen::ArrayXXd::Ones(out->grad.rows(), out->grad.cols()),
                Eigen::ArrayXXd::Constant(out->grad.rows(), out->grad.cols(), slope));
    };
    return Tensor(node);
}

Tensor sin_map(const Tensor& x) {
    auto node = make_node(x.value().array().sin().matrix(), "sin", {x.node()});
    auto xn = x.node();
    auto out = node.get();
    node->backprop = [xn, out] {
        if (xn->requires_grad)
            xn->grad_buffer().array() += out->grad.array() * xn->value.array().cos();
    };
    return Tensor(node);
}

Tensor cos_map(const Tensor& x) {
    auto node = make_node(x.value().array().cos().matrix(), "cos", {x.node()});
    auto xn = x.node();
    auto out = node.get();
    node->backprop = [xn, out] {
        if (xn->requires_grad)
            xn->grad_buffer().array() -= out->grad.array() * xn->value.array().sin();
    };
    return Tensor(node);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("nn: concat_cols needs at least one part");
    Eigen::Index rows = parts[0].rows(), total = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) throw std::invalid_argument("nn: concat_cols row mismatch");
        total += p.cols();
    }
    Mat v(rows, total);
    Eigen::Index off = 0;
    std::vector<NodePtr> parents;
    for (const auto& p : parts) {
        v.middleCols(off, p.cols()) = p.value();
        off += p.cols();
        parents.push_back(p.node());
    }
    auto node = make_node(std::move(v), "concat_cols", std::move(parents));
    auto out = node.get();
    auto parent_nodes = node->parents;
    node->backprop = [parent_nodes, out] {
        Eigen::Index off = 0;
        for (const auto& p : parent_nodes) {
            if (p->requires_grad)
                p->grad_buffer() += out->grad.middleCols(off, p->value.cols());
            off += p->value.cols();
        }
    };
    return Tensor(node);
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& indices) {
    Mat v(static_cast<Eigen::Index>(indices.size()), x.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= static_cast<std::size_t>(x.rows()))
            throw std::out_of_range("nn: gather_rows index out of range");
        v.row(static_cast<Eigen::Index>(i)) = x.value().row(static_cast<Eigen::Index>(indices[i]));
    }
    auto node = make_node(std::move(v), "gather_rows", {x.node()});
    auto xn = x.node();
    auto out = node.get();
    node->backprop = [xn, out, indices] {
        if (!xn->requires_grad) return;
        Mat& g = xn->grad_buffer();
        for (std::size_t i = 0; i < indices.size(); ++i)
            g.row(static_cast<Eigen::Index>(indices[i])) +=
                out->grad.row(static_cast<Eigen::Index>(i));
    };
    return Tensor(node);
}

Tensor mean_rows(const Tensor& x) {
    auto node = make_node(x.value().colwise().mean(), "mean_rows", {x.node()});
    auto xn = x.node();
    auto out = node.get();
    node->backprop = [xn, out] {
        if (xn->requires_grad)
            xn->grad_buffer() +=
                Mat::Ones(xn->value.rows(), 1) * (out->grad / static_cast<double>(xn->value.rows()));
    };
    return Tensor(node);
}

Tensor row_sum(const Tensor& x) {
    auto node = make_node(x.value().rowwise().sum(), "row_sum", {x.node()});
    auto xn = x.node();
    auto out = node.get();
    node->backprop = [xn, out] {
        if (xn->requires_grad)
            xn->grad_buffer() += out->grad * Mat::Ones(1, xn->value.cols());
    };
    return Tensor(node);
}

Tensor sum_all(const Tensor& x) {
    Mat v(1, 1);
    v(0, 0) = x.value().sum();
    auto node = make_node(std::move(v), "sum_all", {x.node()});
    auto xn = x.node();
    auto out = node.get();
    node->backprop = [xn, out] {
        if (xn->requires_grad)
            xn->grad_buffer().array() += out->grad(0, 0);
    };
    return Tensor(node);
}

Tensor spmm(std::shared_ptr<const SparseMatrix> a, const Tensor& x) {
    auto node = make_node(a->multiply(x.value()), "spmm", {x.node()});
    auto xn = x.node();
    auto out = node.get();
    auto ap = std::move(a);
    node->backprop = [xn, out, ap] {
        if (!xn->requires_grad) return;
        // x.grad += A^T out.grad, scattered row by row.
        Mat& g = xn->grad_buffer();
        for (std::size_t i = 0; i < ap->n_rows; ++i)
            for (std::size_t k = ap->row_offsets[i]; k < ap->row_offsets[i + 1]; ++k)
                g.row(static_cast<Eigen::Index>(ap->col_indices[k])) +=
                    ap->values[k] * out->grad.row(static_cast<Eigen::Index>(i));
    };
    return Tensor(node);
}

Tensor spmm(const SparseMatrix& a, const Tensor& x) {
    return spmm(std::make_shared<const SparseMatrix>(a), x);
}

Tensor cheb_apply(const Tensor& coefficients, std::shared_ptr<const SparseMatrix> laplacian,
                  double s_eff, double lambda_max, const Tensor& x) {
    if (coefficients.cols() != 1)
        throw std::invalid_argument("nn: cheb_apply coefficients must be a column");
    if (static_cast<std::size_t>(x.rows()) != laplacian->n_rows)
        throw std::invalid_argument("nn: cheb_apply shape mismatch");
    const int order = static_cast<int>(coefficients.rows()) - 1;
    const double a = lambda_max / 2.0;

    auto apply_b = [&](const Mat& v) -> Mat { return (s_eff / a) * laplacian->multiply(v) - v; };

    // Forward: keep every T_k(B) x for the coefficient gradients.
    auto terms = std::make_shared<std::vector<Mat>>();
    terms->reserve(static_cast<std::size_t>(order) + 1);
    terms->push_back(x.value());
    if (order >= 1) terms->push_back(apply_b(x.value()));
    for (int k = 2; k <= order; ++k)
        terms->push_back(2.0 * apply_b((*terms)[static_cast<std::size_t>(k) - 1]) -
                         (*terms)[static_cast<std::size_t>(k) - 2]);

    const Mat& c = coefficients.value();
    Mat v = 0.5 * c(0, 0) * (*terms)[0];
    for (int k = 1; k <= order; ++k) v += c(k, 0) * (*terms)[static_cast<std::size_t>(k)];

    auto node = make_node(std::move(v), "cheb_apply", {coefficients.node(), x.node()});
    auto cn = coefficients.node();
    auto xn = x.node();
    auto out = node.get();
    auto lp = std::move(laplacian);
    node->backprop = [cn, xn, out, terms, lp, s_eff, a, order] {
        if (cn->requires_grad) {
            Mat& g = cn->grad_buffer();
            g(0, 0) += 0.5 * out->grad.cwiseProduct((*terms)[0]).sum();
            for (int k = 1; k <= order; ++k)
                g(k, 0) += out->grad.cwiseProduct((*terms)[static_cast<std::size_t>(k)]).sum();
        }
        if (xn->requires_grad) {
            // The operator is symmetric, so grad_x = g(s_eff L) out.grad.
            auto apply_b = [&](const Mat& v) -> Mat { return (s_eff / a) * lp->multiply(v) - v; };
            const Mat& c = cn->value;
            Mat t_prev = out->grad;
            Mat acc = 0.5 * c(0, 0) * t_prev;
            if (order >= 1) {
                Mat t_cur = apply_b(t_prev);
                acc += c(1, 0) * t_cur;
                for (int k = 2; k <= order; ++k) {
                    Mat t_next = 2.0 * apply_b(t_cur) - t_prev;
                    acc += c(k, 0) * t_next;
                    t_prev = std::move(t_cur);
                    t_cur = std::move(t_next);
                }
            }
            xn->grad_buffer() += acc;
        }
    };
    return Tensor(node);
}

Tensor cheb_apply(const Tensor& coefficients, const SparseMatrix& laplacian, double s_eff,
                  double lambda_max, const Tensor& x) {
    return cheb_apply(coefficients, std::make_shared<const SparseMatrix>(laplacian), s_eff,
                      lambda_max, x);
}

Tensor masked_softmax(const Tensor& scores,
                      const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
    if (mask.rows() != scores.rows() || mask.cols() != scores.cols())
        throw std::invalid_argument("nn: masked_softmax mask shape mismatch");
    Mat v = Mat::Zero(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        double max_score = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < scores.cols(); ++j)
            if (mask(i, j)) max_score = std::max(max_score, scores.value()(i, j));
        if (!std::isfinite(max_score)) continue;  // fully masked row stays zero
        double denom = 0.0;
        for (Eigen::Index j = 0; j < scores.cols(); ++j)
            if (mask(i, j)) {
                v(i, j) = std::exp(scores.value()(i, j) - max_score);
                denom += v(i, j);
            }
        for (Eigen::Index j = 0; j < scores.cols(); ++j) v(i, j) /= denom;
    }
    auto node = make_node(std::move(v), "masked_softmax", {scores.node()});
    auto sn = scores.node();
    auto out = node.get();
    node->backprop = [sn, out] {
        if (!sn->requires_grad) return;
        Mat& g = sn->grad_buffer();
        for (Eigen::Index i = 0; i < out->value.rows(); ++i) {
            double dot = out->grad.row(i).cwiseProduct(out->value.row(i)).sum();
            g.row(i).array() +=
                out->value.row(i).array() * (out->grad.row(i).array() - dot);
        }
    };
    return Tensor(node);
}

Tensor segment_softmax(const Tensor& edge_scores, const std::vector<std::size_t>& offsets) {
    if (edge_scores.cols() != 1)
        throw std::invalid_argument("nn: segment_softmax expects a score column");
    if (offsets.empty() || offsets.back() != static_cast<std::size_t>(edge_scores.rows()))
        throw std::invalid_argument("nn: segment offsets inconsistent with scores");
    Mat v = Mat::Zero(edge_scores.rows(), 1);
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
        std::size_t begin = offsets[i], end = offsets[i + 1];
        if (begin == end) continue;
        double max_score = -std::numeric_limits<double>::infinity();
        for (std::size_t e = begin; e < end; ++e)
            max_score = std::max(max_score, edge_scores.value()(static_cast<Eigen::Index>(e), 0));
        double denom = 0.0;
        for (std::size_t e = begin; e < end; ++e) {
            double w = std::exp(edge_scores.value()(static_cast<Eigen::Index>(e), 0) - max_score);
            v(static_cast<Eigen::Index>(e), 0) = w;
            denom += w;
        }
        for (std::size_t e = begin; e < end; ++e) v(static_cast<Eigen::Index>(e), 0) /= denom;
    }
    auto node = make_node(std::move(v), "segment_softmax", {edge_scores.node()});
    auto sn = edge_scores.node();
    auto out = node.get();
    node->backprop = [sn, out, offsets] {
        if (!sn->requires_grad) return;
        Mat& g = sn->grad_buffer();
        for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
            double dot = 0.0;
            for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e)
                dot += out->grad(static_cast<Eigen::Index>(e), 0) *
                       out->value(static_cast<Eigen::Index>(e), 0);
            for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e)
                g(static_cast<Eigen::Index>(e), 0) +=
                    out->value(static_cast<Eigen::Index>(e), 0) *
                    (out->grad(static_cast<Eigen::Index>(e), 0) - dot);
        }
    };
    return Tensor(node);
}

Tensor segment_weighted_sum(const Tensor& weights, const std::vector<std::size_t>& offsets,
                            const std::vector<std::size_t>& cols, const Tensor& values) {
    if (weights.cols() != 1 || cols.size() != static_cast<std::size_t>(weights.rows()))
        throw std::invalid_argument("nn: segment_weighted_sum weight/edge mismatch");
    const std::size_t n_out = offsets.size() - 1;
    Mat v = Mat::Zero(static_cast<Eigen::Index>(n_out), values.cols());
    for (std::size_t i = 0; i < n_out; ++i)
        for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e)
            v.row(static_cast<Eigen::Index>(i)) +=
                weights.value()(static_cast<Eigen::Index>(e), 0) *
                values.value().row(static_cast<Eigen::Index>(cols[e]));
    auto node = make_node(std::move(v), "segment_weighted_sum", {weights.node(), values.node()});
    auto wn = weights.node();
    auto vn = values.node();
    auto out = node.get();
    node->backprop = [wn, vn, out, offsets, cols] {
        for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
            for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) {
                auto gi = out->grad.row(static_cast<Eigen::Index>(i));
                if (wn->requires_grad)
                    wn->grad_buffer()(static_cast<Eigen::Index>(e), 0) +=
                        gi.cwiseProduct(vn->value.row(static_cast<Eigen::Index>(cols[e]))).sum();
                if (vn->requires_grad)
                    vn->grad_buffer().row(static_cast<Eigen::Index>(cols[e])) +=
                        wn->value(static_cast<Eigen::Index>(e), 0) * gi;
            }
        }
    };
    return Tensor(node);
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    const auto batch = logits.rows();
    if (static_cast<Eigen::Index>(labels.size()) != batch)
        throw std::invalid_argument("nn: one label per logit row required");
    auto probs = std::make_shared<Mat>(batch, logits.cols());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < batch; ++i) {
        if (labels[static_cast<std::size_t>(i)] < 0 ||
            labels[static_cast<std::size_t>(i)] >= logits.cols())
            throw std::invalid_argument("nn: label out of range");
        double m = logits.value().row(i).maxCoeff();
        Eigen::ArrayXd e = (logits.value().row(i).array() - m).exp();
        double z = e.sum();
        probs->row(i) = (e / z).matrix().transpose();
        loss -= std::log((*probs)(i, labels[static_cast<std::size_t>(i)]));
    }
    Mat v(1, 1);
    v(0, 0) = loss / static_cast<double>(batch);
    auto node = make_node(std::move(v), "softmax_cross_entropy", {logits.node()});
    auto ln = logits.node();
    auto out = node.get();
    node->backprop = [ln, out, probs, labels] {
        if (!ln->requires_grad) return;
        double scale = out->grad(0, 0) / static_cast<double>(probs->rows());
        Mat delta = *probs;
        for (Eigen::Index i = 0; i < delta.rows(); ++i)
            delta(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
        ln->grad_buffer() += scale * delta;
    };
    return Tensor(node);
}

}  // namespace deft::nn
