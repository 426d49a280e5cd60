#include "deft/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace deft {

SpectralOracle SpectralOracle::decompose(const SparseMatrix& laplacian) {
    if (laplacian.n_rows != laplacian.n_cols)
        throw std::invalid_argument("oracle: matrix must be square");
    if (laplacian.n_rows > 2000)
        throw std::runtime_error("oracle: dense decomposition limited to N <= 2000");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian.to_dense());
    if (es.info() != Eigen::Success)
        throw std::runtime_error("oracle: eigendecomposition failed");
    SpectralOracle o;
    o.eigenvalues = es.eigenvalues();
    o.eigenvectors = es.eigenvectors();
    return o;
}

void SpectralOracle::validate(const SparseMatrix& laplacian) const {
    const auto n = eigenvectors.rows();
    Eigen::MatrixXd gram = eigenvectors.transpose() * eigenvectors;
    if ((gram - Eigen::MatrixXd::Identity(n, n)).norm() > 1e-8)
        throw std::runtime_error("oracle: eigenvectors not orthonormal");
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::MatrixXd col = eigenvectors.col(k);
        Eigen::MatrixXd residual = laplacian.multiply(col) - eigenvalues(k) * col;
        if (residual.lpNorm<Eigen::Infinity>() > 1e-7)
            throw std::runtime_error("oracle: eigenpair residual too large");
        if (eigenvalues(k) < -1e-9) throw std::runtime_error("oracle: negative eigenvalue");
    }
}

Eigen::MatrixXd exact_filter_apply(const SpectralOracle& oracle, const ResponseFn& response,
                                   double s, const Eigen::MatrixXd& x) {
    if (x.rows() != oracle.eigenvectors.rows())
        throw std::invalid_argument("oracle: operand shape mismatch");
    Eigen::VectorXd diag(oracle.eigenvalues.size());
    for (Eigen::Index k = 0; k < diag.size(); ++k) diag(k) = response(s * oracle.eigenvalues(k));
    return oracle.eigenvectors * (diag.asDiagonal() * (oracle.eigenvectors.transpose() * x));
}

Eigen::MatrixXd convolution_support(const SpectralOracle& oracle, const ResponseFn& response,
                                    double s) {
    Eigen::VectorXd diag(oracle.eigenvalues.size());
    for (Eigen::Index k = 0; k < diag.size(); ++k) diag(k) = response(s * oracle.eigenvalues(k));
    return oracle.eigenvectors * diag.asDiagonal() * oracle.eigenvectors.transpose();
}

ApproximationError approximation_error(const ChebyshevFilter& f, double s,
                                       const SpectralOracle& oracle, const ResponseFn& response,
                                       ClampMode mode) {
    ApproximationError err;
    err.per_eigenvalue.reserve(oracle.size());
    for (Eigen::Index k = 0; k < oracle.eigenvalues.size(); ++k) {
        double lambda = oracle.eigenvalues(k);
        double d = std::abs(evaluate_filter(f, s, lambda, mode) - response(s * lambda));
        err.per_eigenvalue.push_back(d);
        err.eps_ca = std::max(err.eps_ca, d);
    }
    return err;
}

namespace {

// Learned convolution support: the fitted series evaluated on the true
// spectrum, realized through the oracle's eigenvectors.
Eigen::MatrixXd learned_support(const SpectralOracle& oracle, const ChebyshevFilter& f, double s) {
    Eigen::VectorXd diag(oracle.eigenvalues.size());
    for (Eigen::Index k = 0; k < diag.size(); ++k)
        diag(k) = evaluate_filter(f, s, oracle.eigenvalues(k), ClampMode::clamp);
    return oracle.eigenvectors * diag.asDiagonal() * oracle.eigenvectors.transpose();
}

}  // namespace

std::vector<InequalityReport> lemma1_part2_check(const DynamicGraph& graphs,
                                                 const std::vector<ResponseFn>& desired_responses,
                                                 const std::vector<ChebyshevFilter>& learned_filters,
                                                 double s) {
    if (graphs.n_nodes > 500)
        throw std::runtime_error("oracle: lemma1_part2_check limited to N <= 500");
    const std::size_t t_count = graphs.snapshots.size();
    if (desired_responses.size() != t_count || learned_filters.size() != t_count)
        throw std::invalid_argument("oracle: one response and filter per snapshot required");

    std::vector<InequalityReport> reports;
    const double sqrt_n = std::sqrt(static_cast<double>(graphs.n_nodes));
    SpectralOracle cur = SpectralOracle::decompose(build_laplacian(graphs.snapshots[0]));
    for (std::size_t t = 0; t + 1 < t_count; ++t) {
        SpectralOracle next = SpectralOracle::decompose(build_laplacian(graphs.snapshots[t + 1]));
        double eps_ca =
            std::max(approximation_error(learned_filters[t], s, cur, desired_responses[t]).eps_ca,
                     approximation_error(learned_filters[t + 1], s, next,
                                         desired_responses[t + 1]).eps_ca);
        InequalityReport r;
        r.eps_ca = eps_ca;
        r.lhs = (learned_support(next, learned_filters[t + 1], s) -
                 learned_support(cur, learned_filters[t], s)).norm();
        r.rhs = (convolution_support(next, desired_responses[t + 1], s) -
                 convolution_support(cur, desired_responses[t], s)).norm() +
                2.0 * sqrt_n * eps_ca;
        r.holds = r.lhs <= r.rhs + 1e-9;
        reports.push_back(r);
        cur = std::move(next);
    }
    return reports;
}

std::vector<InequalityReport> lemma1_part1_check(const DynamicGraph& graphs,
                                                 const std::vector<ResponseFn>& desired_responses,
                                                 double lipschitz,
                                                 const std::vector<ChebyshevFilter>& learned_filters,
                                                 double eps_fa, double s) {
    if (graphs.n_nodes > 200)
        throw std::runtime_error("oracle: lemma1_part1_check limited to N <= 200");
    const std::size_t t_count = graphs.snapshots.size();
    if (desired_responses.size() != t_count || learned_filters.size() != t_count)
        throw std::invalid_argument("oracle: one response and filter per snapshot required");

    std::vector<InequalityReport> reports;
    const double n = static_cast<double>(graphs.n_nodes);
    SpectralOracle cur = SpectralOracle::decompose(build_laplacian(graphs.snapshots[0]));
    for (std::size_t t = 0; t + 1 < t_count; ++t) {
        SpectralOracle next = SpectralOracle::decompose(build_laplacian(graphs.snapshots[t + 1]));
        InequalityReport r;
        r.eps_ca = approximation_error(learned_filters[t], s, cur, desired_responses[t]).eps_ca;
        double dev_t = (learned_support(cur, learned_filters[t], s) -
                        convolution_support(cur, desired_responses[t], s)).norm();
        r.lhs = (learned_support(next, learned_filters[t + 1], s) -
                 convolution_support(next, desired_responses[t + 1], s)).norm();
        // Appendix form of the radical: 2 eps_ca^2 rather than eps_ca^2.
        r.rhs = lipschitz * n * n * std::sqrt(dev_t * dev_t + 2.0 * r.eps_ca * r.eps_ca) + eps_fa;
        r.holds = r.lhs <= r.rhs + 1e-9;
        reports.push_back(r);
        cur = std::move(next);
    }
    return reports;
}

DampingReport lemma2_ratio_check(const SpectralOracle& oracle, const ResponseFn& response,
                                 const Eigen::VectorXd& h, std::size_t n_index, int max_layers) {
    if (n_index >= oracle.size()) throw std::out_of_range("oracle: eigenvector index");
    if (max_layers < 1 || max_layers > 200)
        throw std::invalid_argument("oracle: max_layers must be in [1, 200]");
    Eigen::VectorXd p_n = oracle.eigenvectors.col(static_cast<Eigen::Index>(n_index));
    if (std::abs(h.dot(p_n)) < 1e-12)
        throw std::invalid_argument("oracle: signal has no overlap with p_n");

    DampingReport report;
    // Predicted damping: response at lambda_n over its max across the spectrum.
    double g_max = response(oracle.eigenvalues(0));
    for (Eigen::Index k = 1; k < oracle.eigenvalues.size(); ++k)
        g_max = std::max(g_max, response(oracle.eigenvalues(k)));
    report.predicted = response(oracle.eigenvalues(static_cast<Eigen::Index>(n_index))) / g_max;

    Eigen::MatrixXd support = convolution_support(oracle, response, 1.0);
    Eigen::VectorXd x = h / h.norm();
    double prev_ratio = 0.0;
    double cos_prev = std::abs(x.dot(p_n));
    for (int l = 0; l < max_layers; ++l) {
        Eigen::VectorXd next = support * x;
        next /= next.norm();
        double cos_next = std::abs(next.dot(p_n));
        double ratio = cos_next / cos_prev;
        report.empirical_ratio = ratio;
        report.iterations = l + 1;
        if (l > 0 && std::abs(ratio - prev_ratio) < 1e-9) break;
        // Stop well above the double-precision noise floor: once the
        // alignment is ~1e-16 the dot product is rounding noise and the
        // ratio drifts to 1.
        if (cos_next < 1e-12) break;
        prev_ratio = ratio;
        x = std::move(next);
        cos_prev = cos_next;
    }
    return report;
}

}  // namespace deft
