#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "deft/chebyshev.hpp"
#include "deft/fixtures.hpp"
#include "deft/graph.hpp"
#include "deft/oracle.hpp"

using namespace deft;

namespace {

SpectralOracle oracle_of(const GraphSnapshot& g) {
    return SpectralOracle::decompose(build_laplacian(g));
}

ChebyshevFilter fit_on(const GraphSnapshot& g, const ResponseFn& r, int order) {
    double lmax = estimate_lambda_max(build_laplacian(g), LambdaMaxMode::exact_small);
    return fit_chebyshev(r, std::max(lmax, 1e-9) * 1.01, order);
}

}  // namespace

TEST_CASE("decomposition satisfies the eigenpair and orthonormality contracts") {
    std::mt19937_64 rng(1);
    auto g = random_connected_snapshot(25, 0.2, rng);
    auto lap = build_laplacian(g);
    auto o = SpectralOracle::decompose(lap);
    CHECK_NOTHROW(o.validate(lap));
    CHECK(o.eigenvalues(0) > -1e-9);
    for (Eigen::Index k = 1; k < o.eigenvalues.size(); ++k) {
        CHECK(o.eigenvalues(k) >= o.eigenvalues(k - 1) - 1e-12);
    }
}

TEST_CASE("exact_filter_apply identities") {
    std::mt19937_64 rng(4);
    auto g = random_connected_snapshot(12, 0.3, rng);
    auto lap = build_laplacian(g);
    auto o = oracle_of(g);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(12, 3);
    CHECK((exact_filter_apply(o, [](double) { return 1.0; }, 1.0, x) - x).cwiseAbs().maxCoeff() <
          1e-9);
    CHECK((exact_filter_apply(o, [](double v) { return v; }, 1.0, x) - lap.multiply(x))
              .cwiseAbs()
              .maxCoeff() < 1e-9);
}

TEST_CASE("convolution support on P2 heat kernel matches the hand computation") {
    auto o = oracle_of(path_snapshot(2));
    Eigen::MatrixXd c = convolution_support(o, [](double v) { return std::exp(-v); }, 1.0);
    const double e2 = std::exp(-2.0);
    CHECK(c(0, 0) == doctest::Approx((1.0 + e2) / 2.0));
    CHECK(c(0, 1) == doctest::Approx((1.0 - e2) / 2.0));
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("convolution support identities") {
    std::mt19937_64 rng(8);
    auto g = random_connected_snapshot(10, 0.4, rng);
    auto lap = build_laplacian(g);
    auto o = oracle_of(g);
    CHECK((convolution_support(o, [](double) { return 1.0; }, 1.0) -
           Eigen::MatrixXd::Identity(10, 10))
              .cwiseAbs()
              .maxCoeff() < 1e-9);
    CHECK((convolution_support(o, [](double v) { return v; }, 1.0) - lap.to_dense())
              .cwiseAbs()
              .maxCoeff() < 1e-9);
}

TEST_CASE("approximation error: exact fits, all-pass, and the constant-fit value") {
    auto g = path_snapshot(2);
    auto o = oracle_of(g);
    const ResponseFn heat = [](double v) { return std::exp(-v); };
    auto f = fit_chebyshev(heat, 2.0, 40);
    CHECK(approximation_error(f, 1.0, o, heat).eps_ca < 1e-8);

    auto ap = ChebyshevFilter::all_pass(6, 2.0);
    CHECK(approximation_error(ap, 1.0, o, [](double) { return 1.0; }).eps_ca == 0.0);

    // order-0 fit of g(x)=x on [0,2]: best constant is 1, eigenvalues {0,2}
    auto c0 = fit_chebyshev([](double v) { return v; }, 2.0, 0);
    auto err = approximation_error(c0, 1.0, o, [](double v) { return v; });
    CHECK(err.eps_ca == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(err.per_eigenvalue.size() == 2);
}

TEST_CASE("apply_filter matches the oracle at high order") {
    std::mt19937_64 rng(21);
    const ResponseFn heat = [](double v) { return std::exp(-v); };
    for (int trial = 0; trial < 10; ++trial) {
        auto g = random_connected_snapshot(20, 0.25, rng);
        auto lap = build_laplacian(g);
        auto o = oracle_of(g);
        auto f = fit_on(g, heat, 40);
        Eigen::MatrixXd x = Eigen::MatrixXd::Random(20, 2);
        for (double s : {0.5, 1.0}) {
            Eigen::MatrixXd fast = apply_filter(f, s, lap, x, ClampMode::clamp);
            Eigen::MatrixXd exact = exact_filter_apply(o, heat, s, x);
            CHECK((fast - exact).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("lemma 1(ii) holds on identical and random graph pairs") {
    const ResponseFn heat = [](double v) { return std::exp(-v); };
    std::mt19937_64 rng(31);

    // identical graphs and filters: lhs is exactly zero
    auto g = random_connected_snapshot(12, 0.3, rng);
    auto f = fit_on(g, heat, 10);
    auto same = dynamic_pair(g, g);
    auto reps = lemma1_part2_check(same, {heat, heat}, {f, f});
    REQUIRE(reps.size() == 1);
    CHECK(reps[0].lhs == doctest::Approx(0.0));
    CHECK(reps[0].holds);

    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n = 6 + rng() % 15;
        auto a = random_connected_snapshot(n, 0.3, rng);
        auto b = random_connected_snapshot(n, 0.3, rng);
        auto pair = dynamic_pair(a, b);
        auto rep = lemma1_part2_check(pair, {heat, heat}, {fit_on(a, heat, 10), fit_on(b, heat, 10)});
        CHECK(rep[0].holds);
    }
}

TEST_CASE("lemma 1(i) Markov fixtures") {
    std::mt19937_64 rng(77);
    auto a = random_connected_snapshot(10, 0.4, rng);
    auto b = random_connected_snapshot(10, 0.4, rng);
    auto pair = dynamic_pair(a, b);
    const ResponseFn heat = [](double v) { return std::exp(-v); };

    auto run = [&](const ResponseFn& r1, double lip) {
        std::vector<ChebyshevFilter> filters{fit_on(a, heat, 20), fit_on(b, r1, 20)};
        auto next = SpectralOracle::decompose(build_laplacian(b));
        double eps_fa = std::sqrt(10.0) * approximation_error(filters[1], 1.0, next, r1).eps_ca;
        return lemma1_part1_check(pair, {heat, r1}, lip, filters, eps_fa)[0];
    };

    CHECK(run(heat, 1.0).holds);                                                 // identity, Lip=1
    CHECK(run([](double) { return 0.5; }, 0.0).holds);                           // constant, Lip=0
    CHECK(run([](double v) { return 0.5 * std::exp(-v); }, 0.5).holds);          // halving
}

TEST_CASE("lemma 2: all-pass ratio is one") {
    auto o = oracle_of(cycle_snapshot(5));
    Eigen::VectorXd h = Eigen::VectorXd::LinSpaced(5, 0.4, 1.3);
    auto rep = lemma2_ratio_check(o, [](double) { return 1.0; }, h, 0, 50);
    CHECK(rep.predicted == doctest::Approx(1.0));
    CHECK(std::abs(rep.empirical_ratio - 1.0) < 1e-9);
}

TEST_CASE("lemma 2: C4 cycle damping 0.1/4.1") {
    auto o = oracle_of(cycle_snapshot(4));
    Eigen::VectorXd h(4);
    h << 1.0, 0.3, 0.8, -0.5;
    auto rep = lemma2_ratio_check(o, [](double v) { return v + 0.1; }, h, 0, 80);
    CHECK(rep.predicted == doctest::Approx(0.1 / 4.1).epsilon(1e-9));
    CHECK(std::abs(rep.empirical_ratio - rep.predicted) < 1e-3);
}

TEST_CASE("lemma 2: P2 heat kernel damping e^-2") {
    auto o = oracle_of(path_snapshot(2));
    Eigen::VectorXd h(2);
    h << 1.0, 0.2;
    auto rep = lemma2_ratio_check(o, [](double v) { return std::exp(-v); }, h, 1, 80);
    CHECK(rep.predicted == doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
    CHECK(std::abs(rep.empirical_ratio - rep.predicted) < 1e-3);
}

TEST_CASE("lemma 2 rejects degenerate overlap") {
    auto o = oracle_of(path_snapshot(2));
    // orthogonal to the lambda=2 eigenvector (1,-1)/sqrt2
    Eigen::VectorXd h(2);
    h << 1.0, 1.0;
    CHECK_THROWS(lemma2_ratio_check(o, [](double v) { return std::exp(-v); }, h, 1, 50));
}
