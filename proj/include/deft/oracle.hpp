#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "deft/chebyshev.hpp"
#include "deft/graph.hpp"
#include "deft/sparse.hpp"

namespace deft {

using ResponseFn = std::function<double(double)>;

/// Exact eigendecomposition L = U diag(Lambda) U^T of a symmetric PSD
/// Laplacian; the ground truth all fast paths are checked against.
struct SpectralOracle {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // columns

    static SpectralOracle decompose(const SparseMatrix& laplacian);  // N <= 2000

    std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }

    void validate(const SparseMatrix& laplacian) const;
};

/// U diag(response(s * lambda_k)) U^T X, computed densely.
Eigen::MatrixXd exact_filter_apply(const SpectralOracle& oracle, const ResponseFn& response,
                                   double s, const Eigen::MatrixXd& x);

/// Dense convolution support C = U diag(response(s * lambda)) U^T.
Eigen::MatrixXd convolution_support(const SpectralOracle& oracle, const ResponseFn& response,
                                    double s);

struct ApproximationError {
    double eps_ca = 0.0;  // max over eigenvalues
    std::vector<double> per_eigenvalue;
};

/// Max over eigenvalues of |evaluate_filter(f, s, lambda_k) - response(s*lambda_k)|.
ApproximationError approximation_error(const ChebyshevFilter& f, double s,
                                       const SpectralOracle& oracle, const ResponseFn& response,
                                       ClampMode mode = ClampMode::clamp);

struct InequalityReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double eps_ca = 0.0;
    bool holds = false;
};

/// Checks ||C^a_{t+1} - C^a_t||_F <= ||C_{t+1} - C_t||_F + 2 sqrt(N) eps_ca
/// for every consecutive snapshot pair; eps_ca is the max measured
/// approximation error over both timesteps.
std::vector<InequalityReport> lemma1_part2_check(const DynamicGraph& graphs,
                                                 const std::vector<ResponseFn>& desired_responses,
                                                 const std::vector<ChebyshevFilter>& learned_filters,
                                                 double s = 1.0);

/// Checks ||C^a_{t+1} - C_{t+1}||_F <= Lip N^2 sqrt(||C^a_t - C_t||_F^2 + 2 eps_ca^2) + eps_fa
/// where the desired response at t+1 is the Markov functional applied to
/// the response at t. eps_fa is measured by the caller.
std::vector<InequalityReport> lemma1_part1_check(const DynamicGraph& graphs,
                                                 const std::vector<ResponseFn>& desired_responses,
                                                 double lipschitz,
                                                 const std::vector<ChebyshevFilter>& learned_filters,
                                                 double eps_fa, double s = 1.0);

struct DampingReport {
    double empirical_ratio = 0.0;
    double predicted = 0.0;
    int iterations = 0;
};

/// Empirically measures the factor by which |cos angle(C^l h, p_n)| dampens
/// per layer and compares it with G(lambda_n) / G(lambda_argmax).
DampingReport lemma2_ratio_check(const SpectralOracle& oracle, const ResponseFn& response,
                                 const Eigen::VectorXd& h, std::size_t n_index, int max_layers);

}  // namespace deft
