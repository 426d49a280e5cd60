#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "deft/fixtures.hpp"
#include "deft/graph.hpp"
#include "deft/sparse.hpp"

using namespace deft;

namespace {

GraphSnapshot k3() {
    GraphSnapshot g;
    g.adjacency = SparseMatrix::from_edge_list(
        3, 3, {{0, 1, 1.0}, {1, 0, 1.0}, {0, 2, 1.0}, {2, 0, 1.0}, {1, 2, 1.0}, {2, 1, 1.0}});
    g.features = Eigen::MatrixXd::Ones(3, 1);
    return g;
}

}  // namespace

TEST_CASE("CSR round trip is exact") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = random_connected_snapshot(12, 0.3, rng);
        auto entries = g.adjacency.to_edge_list();
        auto rebuilt = SparseMatrix::from_edge_list(12, 12, entries);
        CHECK(rebuilt == g.adjacency);
    }
}

TEST_CASE("from_edge_list rejects duplicates and bad indices") {
    CHECK_THROWS(SparseMatrix::from_edge_list(2, 2, {{0, 1, 1.0}, {0, 1, 2.0}}));
    CHECK_THROWS(SparseMatrix::from_edge_list(2, 2, {{0, 5, 1.0}}));
}

TEST_CASE("at() returns stored value or zero") {
    auto m = SparseMatrix::from_edge_list(3, 3, {{0, 2, 5.0}, {2, 0, 5.0}});
    CHECK(m.at(0, 2) == 5.0);
    CHECK(m.at(2, 0) == 5.0);
    CHECK(m.at(0, 1) == 0.0);
    CHECK(m.at(1, 1) == 0.0);
}

TEST_CASE("multiply matches dense product") {
    std::mt19937_64 rng(3);
    auto g = random_connected_snapshot(15, 0.25, rng);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(15, 4);
    Eigen::MatrixXd dense = g.adjacency.to_dense();
    CHECK((g.adjacency.multiply(x) - dense * x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("P2 Laplacian") {
    auto g = path_snapshot(2);
    auto lap = build_laplacian(g);
    Eigen::MatrixXd expected(2, 2);
    expected << 1, -1, -1, 1;
    CHECK((lap.to_dense() - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("isolated node Laplacian is a zero matrix with explicit diagonal") {
    GraphSnapshot g;
    g.adjacency = SparseMatrix::from_edge_list(1, 1, {});
    g.features = Eigen::MatrixXd::Zero(1, 1);
    auto lap = build_laplacian(g);
    CHECK(lap.to_dense()(0, 0) == 0.0);
    CHECK(lap.nnz() == 1);  // diagonal stored even when zero
}

TEST_CASE("K3 Laplacian: diag 2, off-diag -1, zero row sums") {
    auto lap = build_laplacian(k3());
    Eigen::MatrixXd d = lap.to_dense();
    for (int i = 0; i < 3; ++i) {
        CHECK(d(i, i) == doctest::Approx(2.0));
        CHECK(std::abs(d.row(i).sum()) < 1e-12);
    }
    CHECK(d(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("Laplacian annihilates the constant vector on random graphs") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        auto g = random_connected_snapshot(30, 0.2, rng);
        auto lap = build_laplacian(g);
        Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(30, 1);
        CHECK(lap.multiply(ones).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("lambda_max modes on small fixtures") {
    auto p2 = build_laplacian(path_snapshot(2));
    CHECK(estimate_lambda_max(p2, LambdaMaxMode::exact_small) == doctest::Approx(2.0));
    CHECK(estimate_lambda_max(p2, LambdaMaxMode::degree_bound) == doctest::Approx(2.0));
    auto lk3 = build_laplacian(k3());
    CHECK(estimate_lambda_max(lk3, LambdaMaxMode::exact_small) == doctest::Approx(3.0));
}

TEST_CASE("power iteration brackets the exact value under the degree bound") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        auto g = random_connected_snapshot(40, 0.15, rng);
        auto lap = build_laplacian(g);
        double exact = estimate_lambda_max(lap, LambdaMaxMode::exact_small);
        double bound = estimate_lambda_max(lap, LambdaMaxMode::degree_bound);
        bool fell_back = false;
        double pi = estimate_lambda_max(lap, LambdaMaxMode::power_iteration, &fell_back);
        CHECK(pi >= exact * (1.0 - 1e-5));
        CHECK(pi <= bound + 1e-9);
        CHECK(bound >= exact - 1e-9);
    }
}

TEST_CASE("neighbors match CSR rows") {
    auto p2 = path_snapshot(2);
    auto n0 = neighbors(p2, 0);
    REQUIRE(n0.size() == 1);
    CHECK(n0[0].first == 1);
    CHECK(n0[0].second == 1.0);

    auto g3 = k3();
    auto n2 = neighbors(g3, 2);
    REQUIRE(n2.size() == 2);
    CHECK(n2[0].first == 0);
    CHECK(n2[1].first == 1);

    GraphSnapshot iso;
    iso.adjacency = SparseMatrix::from_edge_list(2, 2, {});
    iso.features = Eigen::MatrixXd::Zero(2, 1);
    CHECK(neighbors(iso, 0).empty());
    CHECK_THROWS(neighbors(iso, 7));
}

TEST_CASE("snapshot validation rejects asymmetry and self-loops") {
    GraphSnapshot bad;
    bad.adjacency = SparseMatrix::from_edge_list(2, 2, {{0, 1, 1.0}});  // missing (1,0)
    bad.features = Eigen::MatrixXd::Zero(2, 1);
    CHECK_THROWS(bad.validate());

    GraphSnapshot loop;
    loop.adjacency = SparseMatrix::from_edge_list(2, 2, {{0, 0, 1.0}});
    loop.features = Eigen::MatrixXd::Zero(2, 1);
    CHECK_THROWS(loop.validate());
}

TEST_CASE("dynamic graph split invariants") {
    auto g = dynamic_pair(path_snapshot(3), path_snapshot(3));
    CHECK_NOTHROW(g.validate());
    g.split.train_end = 0;
    CHECK_THROWS(g.validate());
}

TEST_CASE("normalized Laplacian has unit diagonal on regular graphs") {
    auto lap = build_normalized_laplacian(k3());
    Eigen::MatrixXd d = lap.to_dense();
    for (int i = 0; i < 3; ++i) CHECK(d(i, i) == doctest::Approx(1.0));
    CHECK(d(0, 1) == doctest::Approx(-0.5));
}
