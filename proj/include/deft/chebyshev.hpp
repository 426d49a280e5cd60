#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "deft/sparse.hpp"

namespace deft {

enum class ClampMode { clamp, extrapolate };

/// Truncated Chebyshev series for a filter function g on [0, lambda_max].
///
/// The stored coefficients follow the half-weight convention for the
/// constant term: g(x) ~= c_0/2 + sum_{k>=1} c_k T_k((x - a)/a), a = lambda_max/2.
/// An all-pass filter (g == 1) is therefore c = (2, 0, ..., 0).
struct ChebyshevFilter {
    std::vector<double> coefficients;  // c_0 .. c_M
    double lambda_max = 2.0;

    int order() const { return static_cast<int>(coefficients.size()) - 1; }

    static ChebyshevFilter all_pass(int order, double lambda_max);

    void validate() const;
};

/// Wavelet scale multipliers, stored sorted ascending.
struct ScaleSet {
    std::vector<double> scales;
    ClampMode clamp_mode = ClampMode::clamp;

    explicit ScaleSet(std::vector<double> s, ClampMode mode = ClampMode::clamp);
    std::size_t size() const { return scales.size(); }
};

/// Uniform-grid samples of g(s_j * lambda) for each scale, used by the
/// filter-response CSV emitter.
struct FilterResponseTable {
    std::vector<double> lambda_grid;
    std::vector<std::vector<double>> responses;  // one row per scale
};

/// Fits the Chebyshev coefficients of `target` on [0, lambda_max] by
/// trapezoidal quadrature of (2/pi) * int_0^pi cos(k theta) target(a(cos theta + 1)) dtheta.
ChebyshevFilter fit_chebyshev(const std::function<double(double)>& target, double lambda_max,
                              int order, int n_quadrature);

/// Same but with the default quadrature resolution max(64, 8*(order+1)).
ChebyshevFilter fit_chebyshev(const std::function<double(double)>& target, double lambda_max,
                              int order);

/// Scalar series evaluation of g(s * lambda). Under clamp mode the argument
/// s*lambda is capped at lambda_max; under extrapolate mode the recurrence
/// runs outside [-1, 1].
double evaluate_filter(const ChebyshevFilter& f, double s, double lambda, ClampMode mode);

/// Operator application g(sL) X via the three-term recurrence; exactly
/// order sparse matvec sweeps. Clamp mode caps the effective scale at 1
/// so the rescaled spectrum stays inside the fitted domain.
Eigen::MatrixXd apply_filter(const ChebyshevFilter& f, double s, const SparseMatrix& laplacian,
                             const Eigen::MatrixXd& x, ClampMode mode);

/// Wavelet psi_{s,n} = g(sL) delta_n. Exactly zero beyond graph distance
/// order from n.
Eigen::VectorXd wavelet_vector(const ChebyshevFilter& f, double s, const SparseMatrix& laplacian,
                               std::size_t n, ClampMode mode = ClampMode::clamp);

FilterResponseTable filter_response_table(const ChebyshevFilter& f, const ScaleSet& scales,
                                          int n_grid);

}  // namespace deft
