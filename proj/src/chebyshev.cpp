#include "deft/chebyshev.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace deft {

ChebyshevFilter ChebyshevFilter::all_pass(int order, double lambda_max) {
    ChebyshevFilter f;
    f.coefficients.assign(static_cast<std::size_t>(order) + 1, 0.0);
    f.coefficients[0] = 2.0;
    f.lambda_max = lambda_max;
    return f;
}

void ChebyshevFilter::validate() const {
    if (coefficients.empty()) throw std::invalid_argument("chebyshev: empty coefficients");
    if (!(lambda_max > 0.0)) throw std::invalid_argument("chebyshev: lambda_max must be > 0");
    for (double c : coefficients)
        if (!std::isfinite(c)) throw std::invalid_argument("chebyshev: non-finite coefficient");
}

ScaleSet::ScaleSet(std::vector<double> s, ClampMode mode) : scales(std::move(s)), clamp_mode(mode) {
    if (scales.empty()) throw std::invalid_argument("chebyshev: scale set must be non-empty");
    for (double v : scales)
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("chebyshev: scales must be positive and finite");
    std::sort(scales.begin(), scales.end());
}

ChebyshevFilter fit_chebyshev(const std::function<double(double)>& target, double lambda_max,
                              int order, int n_quadrature) {
    if (order < 0) throw std::invalid_argument("chebyshev: order must be >= 0");
    if (!(lambda_max > 0.0)) throw std::invalid_argument("chebyshev: lambda_max must be > 0");
    if (n_quadrature < 4 * (order + 1))
        throw std::invalid_argument("chebyshev: n_quadrature must be >= 4*(order+1)");

    const double a = lambda_max / 2.0;
    const int n = n_quadrature;
    // Sample target(a(cos theta + 1)) on the uniform theta grid once.
    std::vector<double> samples(static_cast<std::size_t>(n) + 1);
    std::vector<double> thetas(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        double theta = std::numbers::pi * static_cast<double>(i) / n;
        double g = target(a * (std::cos(theta) + 1.0));
        if (!std::isfinite(g))
            throw std::runtime_error("chebyshev: target returned a non-finite value");
        thetas[static_cast<std::size_t>(i)] = theta;
        samples[static_cast<std::size_t>(i)] = g;
    }

    ChebyshevFilter f;
    f.lambda_max = lambda_max;
    f.coefficients.resize(static_cast<std::size_t>(order) + 1);
    const double h = std::numbers::pi / n;
    for (int k = 0; k <= order; ++k) {
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            double term = std::cos(k * thetas[static_cast<std::size_t>(i)]) *
                          samples[static_cast<std::size_t>(i)];
            acc += (i == 0 || i == n) ? 0.5 * term : term;
        }
        f.coefficients[static_cast<std::size_t>(k)] = (2.0 / std::numbers::pi) * acc * h;
    }
    return f;
}

ChebyshevFilter fit_chebyshev(const std::function<double(double)>& target, double lambda_max,
                              int order) {
    return fit_chebyshev(target, lambda_max, order, std::max(64, 8 * (order + 1)));
}

double evaluate_filter(const ChebyshevFilter& f, double s, double lambda, ClampMode mode) {
    f.validate();
    double arg = s * lambda;
    if (mode == ClampMode::clamp) arg = std::min(arg, f.lambda_max);
    const double a = f.lambda_max / 2.0;
    const double y = (arg - a) / a;
    // Clenshaw-free direct recurrence; fine at the orders we use.
    double t_prev = 1.0, t_cur = y;
    double acc = 0.5 * f.coefficients[0];
    if (f.order() >= 1) acc += f.coefficients[1] * t_cur;
    for (int k = 2; k <= f.order(); ++k) {
        double t_next = 2.0 * y * t_cur - t_prev;
        acc += f.coefficients[static_cast<std::size_t>(k)] * t_next;
        t_prev = t_cur;
        t_cur = t_next;
    }
    return acc;
}

Eigen::MatrixXd apply_filter(const ChebyshevFilter& f, double s, const SparseMatrix& laplacian,
                             const Eigen::MatrixXd& x, ClampMode mode) {
    f.validate();
    if (laplacian.n_rows != laplacian.n_cols ||
        static_cast<std::size_t>(x.rows()) != laplacian.n_rows)
        throw std::invalid_argument("chebyshev: operand shape mismatch");
    double s_eff = (mode == ClampMode::clamp) ? std::min(s, 1.0) : s;
    const double a = f.lambda_max / 2.0;

    // B = (s_eff L - a I) / a applied as B v = (s_eff/a) L v - v.
    auto apply_b = [&](const Eigen::MatrixXd& v) -> Eigen::MatrixXd {
        return (s_eff / a) * laplacian.multiply(v) - v;
    };

    Eigen::MatrixXd t_prev = x;
    Eigen::MatrixXd acc = 0.5 * f.coefficients[0] * x;
    if (f.order() >= 1) {
        Eigen::MatrixXd t_cur = apply_b(x);
        acc += f.coefficients[1] * t_cur;
        for (int k = 2; k <= f.order(); ++k) {
            Eigen::MatrixXd t_next = 2.0 * apply_b(t_cur) - t_prev;
            acc += f.coefficients[static_cast<std::size_t>(k)] * t_next;
            t_prev = std::move(t_cur);
            t_cur = std::move(t_next);
        }
    }
    return acc;
}

Eigen::VectorXd wavelet_vector(const ChebyshevFilter& f, double s, const SparseMatrix& laplacian,
                               std::size_t n, ClampMode mode) {
    if (n >= laplacian.n_rows) throw std::out_of_range("chebyshev: node index out of range");
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(laplacian.n_rows), 1);
    delta(static_cast<Eigen::Index>(n), 0) = 1.0;
    return apply_filter(f, s, laplacian, delta, mode).col(0);
}

FilterResponseTable filter_response_table(const ChebyshevFilter& f, const ScaleSet& scales,
                                          int n_grid) {
    if (n_grid < 2) throw std::invalid_argument("chebyshev: n_grid must be >= 2");
    FilterResponseTable table;
    table.lambda_grid.resize(static_cast<std::size_t>(n_grid));
    for (int i = 0; i < n_grid; ++i)
        table.lambda_grid[static_cast<std::size_t>(i)] =
            f.lambda_max * static_cast<double>(i) / (n_grid - 1);
    for (double s : scales.scales) {
        std::vector<double> row(static_cast<std::size_t>(n_grid));
        for (int i = 0; i < n_grid; ++i)
            row[static_cast<std::size_t>(i)] =
                evaluate_filter(f, s, table.lambda_grid[static_cast<std::size_t>(i)],
                                scales.clamp_mode);
        table.responses.push_back(std::move(row));
    }
    return table;
}

}  // namespace deft
