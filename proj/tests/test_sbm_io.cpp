#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include "deft/fixtures.hpp"
#include "deft/io.hpp"
#include "deft/layers.hpp"
#include "deft/sbm.hpp"

using namespace deft;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string write_file(const std::string& name, const std::string& content) {
    std::string path = temp_path(name);
    std::ofstream out(path);
    out << content;
    return path;
}

bool snapshots_equal(const GraphSnapshot& a, const GraphSnapshot& b) {
    if (a.n_nodes() != b.n_nodes()) return false;
    if (a.adjacency.to_dense() != b.adjacency.to_dense()) return false;
    if (a.features != b.features) return false;
    if (a.edge_labels != b.edge_labels) return false;
    if (a.node_labels != b.node_labels) return false;
    return true;
}

}  // namespace

TEST_CASE("SBM with p_in=1, p_out=0 yields disjoint cliques in every snapshot") {
    SbmConfig cfg;
    cfg.n_nodes = 30;
    cfg.n_communities = 2;
    cfg.p_in = 1.0;
    cfg.p_out = 0.0;
    cfg.n_snapshots = 5;
    cfg.drift_fraction = 0.0;
    cfg.seed = 3;
    DynamicGraph g = generate_dynamic_sbm(cfg);
    REQUIRE(g.snapshots.size() == 5);
    for (const auto& snap : g.snapshots) {
        REQUIRE(snap.node_labels.size() == 30);
        for (std::size_t u = 0; u < 30; ++u) {
            for (std::size_t v = u + 1; v < 30; ++v) {
                bool same = snap.node_labels[u] == snap.node_labels[v];
                CHECK(snap.adjacency.at(u, v) == (same ? 1.0 : 0.0));
            }
        }
        CHECK(homophily_ratio(snap) == doctest::Approx(1.0));
    }
}

TEST_CASE("SBM edge counts match block probabilities on average") {
    // mean over 50 seeds should sit within 3 standard errors of expectation
    SbmConfig cfg;
    cfg.n_nodes = 100;
    cfg.n_communities = 2;
    cfg.p_in = 0.3;
    cfg.p_out = 0.05;
    cfg.n_snapshots = 1;
    cfg.drift_fraction = 0.0;
    double total_edges = 0.0;
    double total_expected = 0.0;
    double total_var = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        cfg.seed = seed;
        DynamicGraph g = generate_dynamic_sbm(cfg);
        const GraphSnapshot& snap = g.snapshots[0];
        std::size_t edges = 0;
        for (std::size_t u = 0; u < 100; ++u) {
            for (std::size_t v = u + 1; v < 100; ++v) {
                bool same = snap.node_labels[u] == snap.node_labels[v];
                double p = same ? cfg.p_in : cfg.p_out;
                total_expected += p;
                total_var += p * (1.0 - p);
                if (snap.adjacency.at(u, v) != 0.0) ++edges;
            }
        }
        total_edges += static_cast<double>(edges);
    }
    CHECK(std::abs(total_edges - total_expected) <= 3.0 * std::sqrt(total_var));
}

TEST_CASE("SBM drift changes at most ceil(drift*N) labels per step") {
    SbmConfig cfg;
    cfg.n_nodes = 40;
    cfg.n_communities = 3;
    cfg.n_snapshots = 8;
    cfg.drift_fraction = 0.1;
    cfg.seed = 9;
    DynamicGraph g = generate_dynamic_sbm(cfg);
    std::size_t budget = static_cast<std::size_t>(std::ceil(0.1 * 40));
    for (std::size_t t = 1; t < g.snapshots.size(); ++t) {
        std::size_t changed = 0;
        for (std::size_t i = 0; i < 40; ++i) {
            if (g.snapshots[t].node_labels[i] != g.snapshots[t - 1].node_labels[i]) ++changed;
        }
        // reassignment can land on the old community, so changed <= budget
        CHECK(changed <= budget);
    }
}

TEST_CASE("SBM is deterministic per seed and respects the heterophilic gate") {
    SbmConfig cfg;
    cfg.n_nodes = 25;
    cfg.n_snapshots = 3;
    cfg.seed = 42;
    DynamicGraph a = generate_dynamic_sbm(cfg);
    DynamicGraph b = generate_dynamic_sbm(cfg);
    REQUIRE(a.snapshots.size() == b.snapshots.size());
    for (std::size_t t = 0; t < a.snapshots.size(); ++t) {
        CHECK(snapshots_equal(a.snapshots[t], b.snapshots[t]));
    }

    SbmConfig het = cfg;
    het.p_in = 0.05;
    het.p_out = 0.4;
    CHECK_THROWS(generate_dynamic_sbm(het));
    het.heterophilic = true;
    DynamicGraph h = generate_dynamic_sbm(het);
    CHECK(homophily_ratio(h.snapshots[0]) < 0.5);
}

TEST_CASE("SBM split follows the 70/10/20 convention") {
    SbmConfig cfg;
    cfg.n_nodes = 10;
    cfg.n_snapshots = 20;
    DynamicGraph g = generate_dynamic_sbm(cfg);
    CHECK(g.split.train_end == 14);
    CHECK(g.split.val_end == 16);
    CHECK(g.split.test_end == 20);
}

TEST_CASE("homophily ratio hand values") {
    // two disjoint same-label triangles
    GraphSnapshot cliques;
    cliques.adjacency = SparseMatrix::from_edge_list(
        6, 6, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}, {3, 4, 1.0}, {3, 5, 1.0}, {4, 5, 1.0},
               {1, 0, 1.0}, {2, 0, 1.0}, {2, 1, 1.0}, {4, 3, 1.0}, {5, 3, 1.0}, {5, 4, 1.0}});
    cliques.features = Eigen::MatrixXd::Zero(6, 1);
    cliques.node_labels = {0, 0, 0, 1, 1, 1};
    CHECK(homophily_ratio(cliques) == doctest::Approx(1.0));

    // complete bipartite K_{2,2} across labels
    GraphSnapshot bip;
    bip.adjacency = SparseMatrix::from_edge_list(
        4, 4, {{0, 2, 1.0}, {0, 3, 1.0}, {1, 2, 1.0}, {1, 3, 1.0},
               {2, 0, 1.0}, {3, 0, 1.0}, {2, 1, 1.0}, {3, 1, 1.0}});
    bip.features = Eigen::MatrixXd::Zero(4, 1);
    bip.node_labels = {0, 0, 1, 1};
    CHECK(homophily_ratio(bip) == doctest::Approx(0.0));

    // triangle with labels {0, 0, 1}: one homophilic edge of three
    GraphSnapshot tri;
    tri.adjacency = SparseMatrix::from_edge_list(
        3, 3, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}, {1, 0, 1.0}, {2, 0, 1.0}, {2, 1, 1.0}});
    tri.features = Eigen::MatrixXd::Zero(3, 1);
    tri.node_labels = {0, 0, 1};
    CHECK(homophily_ratio(tri) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("snapshot file round trip preserves everything") {
    SbmConfig cfg;
    cfg.n_nodes = 15;
    cfg.n_snapshots = 4;
    cfg.seed = 13;
    DynamicGraph g = generate_dynamic_sbm(cfg);
    std::string path = temp_path("deft_roundtrip.snapshots");
    save_snapshots(g, path);
    DynamicGraph loaded = load_snapshots(path);
    REQUIRE(loaded.snapshots.size() == g.snapshots.size());
    CHECK(loaded.n_nodes == g.n_nodes);
    CHECK(loaded.split.train_end == g.split.train_end);
    CHECK(loaded.split.val_end == g.split.val_end);
    for (std::size_t t = 0; t < g.snapshots.size(); ++t) {
        CHECK(snapshots_equal(loaded.snapshots[t], g.snapshots[t]));
    }
    std::remove(path.c_str());
}

TEST_CASE("snapshot parser rejects malformed input with the offending line") {
    std::string good =
        "DEFT-SNAPSHOTS v1\n"
        "T 1 N 2 D 1\n"
        "SNAPSHOT 0\n"
        "E 1\n"
        "0 1 1.0\n"
        "F 2\n"
        "0 0.0\n"
        "1 0.0\n";
    CHECK_NOTHROW(load_snapshots(write_file("deft_good.snapshots", good)));

    std::string truncated =
        "DEFT-SNAPSHOTS v1\n"
        "T 1 N 2 D 1\n"
        "SNAPSHOT 0\n"
        "E 2\n"
        "0 1 1.0\n";
    CHECK_THROWS_WITH_AS(load_snapshots(write_file("deft_trunc.snapshots", truncated)),
                         doctest::Contains("line"), std::runtime_error);

    std::string unknown =
        "DEFT-SNAPSHOTS v1\n"
        "T 1 N 2 D 1\n"
        "SNAPSHOT 0\n"
        "Z 1\n";
    CHECK_THROWS_AS(load_snapshots(write_file("deft_unknown.snapshots", unknown)),
                    std::runtime_error);

    std::string bad_header = "DEFT-SNAPSHOTS v2\nT 1 N 2 D 1\n";
    CHECK_THROWS_AS(load_snapshots(write_file("deft_header.snapshots", bad_header)),
                    std::runtime_error);
}

TEST_CASE("checkpoint round trip restores exact parameter values") {
    std::mt19937_64 rng(21);
    std::vector<nn::Parameter> params;
    nn::Tensor a = nn::Tensor::variable(Eigen::MatrixXd::Random(3, 4));
    nn::Tensor b = nn::Tensor::variable(Eigen::MatrixXd::Random(5, 1) * 1e-17);
    params.push_back({"layer.a", a});
    params.push_back({"layer.b", b});
    std::string path = temp_path("deft_ckpt.ckpt");
    save_checkpoint(params, path);

    Eigen::MatrixXd a0 = a.value();
    Eigen::MatrixXd b0 = b.value();
    a.value_mut().setZero();
    b.value_mut().setZero();
    load_checkpoint(params, path);
    CHECK(a.value() == a0);
    CHECK(b.value() == b0);

    // shape mismatch is an error
    std::vector<nn::Parameter> wrong;
    nn::Tensor c = nn::Tensor::variable(Eigen::MatrixXd::Zero(4, 3));
    wrong.push_back({"layer.a", c});
    wrong.push_back({"layer.b", b});
    CHECK_THROWS(load_checkpoint(wrong, path));

    // missing name is an error
    std::vector<nn::Parameter> fewer;
    fewer.push_back({"layer.a", a});
    CHECK_THROWS(load_checkpoint(fewer, path));
    std::remove(path.c_str());
}

TEST_CASE("config file parsing") {
    auto entries = parse_config_file(
        write_file("deft_cfg.cfg", "# comment\nepochs=20\nfilter.order=8\n\nseed=3 # inline\n"));
    CHECK(entries.at("epochs") == "20");
    CHECK(entries.at("filter.order") == "8");
    CHECK(entries.at("seed") == "3");

    CHECK_THROWS(parse_config_file(write_file("deft_dup.cfg", "a=1\na=2\n")));
    CHECK_THROWS(parse_config_file(write_file("deft_noeq.cfg", "just a line\n")));
}

TEST_CASE("CSV emitters produce the documented shapes") {
    std::string path = temp_path("deft_out.csv");

    write_wavelet_csv({0.5, -0.25}, path);
    {
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        CHECK(line == "node,value");
        std::getline(in, line);
        CHECK(line.rfind("0,", 0) == 0);
    }

    write_loss_csv({1.5, 0.75}, path);
    {
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        CHECK(line == "epoch,loss");
        std::getline(in, line);
        CHECK(line.rfind("1,", 0) == 0);
    }

    write_metrics_csv({{"mrr", 0.625}}, path);
    {
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        CHECK(line == "metric,value");
        std::getline(in, line);
        CHECK(line.rfind("mrr,", 0) == 0);
    }
    std::remove(path.c_str());
}
