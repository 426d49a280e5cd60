#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "deft/fixtures.hpp"
#include "deft/graph.hpp"
#include "deft/layers.hpp"
#include "deft/model.hpp"

using namespace deft;
using nn::Mat;
using nn::Tensor;

namespace {

DeftConfig small_config() {
    DeftConfig cfg;
    cfg.hidden_dim = 32;
    cfg.n_heads = 4;
    cfg.filter_order = 4;
    cfg.scales = {0.5, 1.0};
    return cfg;
}

DynamicGraph small_dynamic(std::mt19937_64& rng, std::size_t n = 8, std::size_t t_count = 3) {
    DynamicGraph g;
    g.n_nodes = n;
    for (std::size_t t = 0; t < t_count; ++t) {
        auto snap = random_connected_snapshot(n, 0.35, rng, 4);
        snap.features = Mat::Random(static_cast<Eigen::Index>(n), 4);
        snap.timestep = t;
        g.snapshots.push_back(std::move(snap));
    }
    g.split.train_end = t_count - 1;
    g.split.val_end = t_count;
    g.split.test_end = t_count;
    return g;
}

}  // namespace

TEST_CASE("config validation enforces the search space") {
    DeftConfig cfg = small_config();
    CHECK_NOTHROW(cfg.validate());
    cfg.hidden_dim = 33;
    CHECK_THROWS(cfg.validate());
    cfg = small_config();
    cfg.scales = {0.01};  // below [0.1, 10]
    CHECK_THROWS(cfg.validate());
    cfg = small_config();
    cfg.n_heads = 5;
    CHECK_THROWS(cfg.validate());
    cfg = small_config();
    cfg.d_t = 7;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("message passing trivial cases") {
    std::mt19937_64 rng(1);
    // isolated node, identity weights: propagation is the self-loop only
    GraphSnapshot iso;
    iso.adjacency = SparseMatrix::from_edge_list(1, 1, {});
    iso.features = Mat::Constant(1, 2, 3.0);
    auto prop = mean_propagation_matrix(iso.adjacency);
    Tensor h = Tensor::constant(iso.features);
    Tensor w = Tensor::constant(Mat::Identity(2, 2));
    Mat out = message_passing_layer(prop, h, w).value();
    CHECK((out - iso.features).cwiseAbs().maxCoeff() < 1e-12);

    // P2 with equal features: symmetric output
    auto p2 = path_snapshot(2, 3);
    auto prop2 = mean_propagation_matrix(p2.adjacency);
    Tensor h2 = Tensor::constant(Mat::Ones(2, 3));
    Tensor w2 = Tensor::variable(nn::glorot_uniform(3, 3, rng));
    Mat out2 = message_passing_layer(prop2, h2, w2).value();
    CHECK((out2.row(0) - out2.row(1)).cwiseAbs().maxCoeff() < 1e-12);

    // zero features in, zero out
    Mat zero = message_passing_layer(prop2, Tensor::constant(Mat::Zero(2, 3)), w2).value();
    CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("untrained model produces the all-pass filter exactly") {
    std::mt19937_64 rng(4);
    auto g = small_dynamic(rng);
    DeftModel model(small_config(), 4, 11);
    model.forward(g.snapshots[0]);
    auto filter = model.last_filter();
    CHECK(filter.coefficients[0] == doctest::Approx(2.0));
    for (std::size_t k = 1; k < filter.coefficients.size(); ++k) {
        CHECK(filter.coefficients[k] == doctest::Approx(0.0));
    }
}

TEST_CASE("forward is deterministic for a fixed seed") {
    std::mt19937_64 rng(5);
    auto g = small_dynamic(rng);
    DeftModel a(small_config(), 4, 99);
    DeftModel b(small_config(), 4, 99);
    Mat ea = a.forward(g.snapshots[0]).value();
    Mat eb = b.forward(g.snapshots[0]).value();
    CHECK((ea - eb).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("output shape is N x hidden for every aggregator") {
    std::mt19937_64 rng(6);
    auto g = small_dynamic(rng);
    for (Aggregator agg : {Aggregator::mlp, Aggregator::gat_style, Aggregator::sparse_transformer}) {
        DeftConfig cfg = small_config();
        cfg.aggregator = agg;
        DeftModel model(cfg, 4, 3);
        Mat e = model.forward(g.snapshots[0]).value();
        CHECK(e.rows() == 8);
        CHECK(e.cols() == cfg.hidden_dim);
        CHECK(e.allFinite());
    }
}

TEST_CASE("zero GRU weights halve evolved weights each step") {
    std::mt19937_64 rng(7);
    auto g = small_dynamic(rng, 8, 3);
    DeftConfig cfg = small_config();
    DeftModel model(cfg, 4, 21);
    // zero every GRU parameter so evolution is h -> h/2
    for (auto& p : model.parameters()) {
        if (p.name.find("gru") != std::string::npos) p.tensor.value_mut().setZero();
    }
    model.reset_state();
    Mat w0 = model.spatial_weight_value(0);
    model.forward(g.snapshots[0]);
    Mat w1 = model.spatial_weight_value(0);
    CHECK((w1 - 0.5 * w0).cwiseAbs().maxCoeff() < 1e-12);
    model.forward(g.snapshots[1]);
    Mat w2 = model.spatial_weight_value(0);
    CHECK((w2 - 0.25 * w0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("embeddings at t=1 depend on the snapshot at t=0") {
    // weights-as-state evolution ignores inputs, so use the input-driven
    // style where the layer input feeds the weight GRU
    std::mt19937_64 rng(8);
    auto g = small_dynamic(rng, 8, 2);
    DeftConfig cfg = small_config();
    cfg.rnn_style = RnnStyle::input_driven;
    DeftModel model(cfg, 4, 17);
    auto embs = model.sequence_forward(g, 0, 2);
    Mat base = embs[1].value();

    DynamicGraph perturbed = g;
    perturbed.snapshots[0].features(0, 0) += 1.0;
    model.reset_state();
    auto embs2 = model.sequence_forward(perturbed, 0, 2);
    CHECK((embs2[1].value() - base).norm() > 1e-9);
}

TEST_CASE("hrm Fourier features are shift invariant") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd x(6), y(6), d(6);
        for (int i = 0; i < 6; ++i) {
            x(i) = gauss(rng);
            y(i) = gauss(rng);
            d(i) = gauss(rng);
        }
        auto ff = [](const Eigen::VectorXd& v) {
            Eigen::VectorXd out(2 * v.size());
            out << v.array().sin().matrix(), v.array().cos().matrix();
            return out;
        };
        double shifted = ff(x + d).dot(ff(y + d));
        double plain = ff(x).dot(ff(y));
        CHECK(std::abs(shifted - plain) < 1e-9);
    }
}

TEST_CASE("attention rows are stochastic and respect the neighborhood") {
    std::mt19937_64 rng(11);
    auto g = small_dynamic(rng);
    DeftConfig cfg = small_config();
    cfg.aggregator = Aggregator::sparse_transformer;
    DeftModel model(cfg, 4, 23);
    // indirect check via forward finiteness plus the segment softmax
    // invariant exercised in the tensor tests; here assert shape/finite
    Mat e = model.forward(g.snapshots[0]).value();
    CHECK(e.allFinite());
}

TEST_CASE("spectral locality: far-node perturbations cannot reach node 0 at init") {
    // At initialization the filter is exactly all-pass independent of the
    // input, so node 0's spectral feature before aggregation depends on its
    // own feature row only; with aggregator=mlp and n_layers=1 the full
    // model output at node 0 on a long path is invariant to perturbing a
    // node more than filter_order+1 hops away (spatial layer adds 1 hop).
    DeftConfig cfg = small_config();
    cfg.aggregator = Aggregator::mlp;
    cfg.n_layers = 1;
    cfg.filter_order = 4;
    auto p12 = path_snapshot(12, 4);
    p12.features = Mat::Random(12, 4);
    DeftModel model(cfg, 4, 31);
    Mat base = model.forward(p12).value();

    GraphSnapshot far = p12;
    far.features(11, 2) += 0.7;  // 11 hops from node 0
    model.reset_state();
    Mat perturbed = model.forward(far).value();
    CHECK((perturbed.row(0) - base.row(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((perturbed.row(11) - base.row(11)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("spectral ablation modes change the embedding path") {
    std::mt19937_64 rng(13);
    auto g = small_dynamic(rng, 8, 2);
    DeftConfig cfg = small_config();
    cfg.spectral_mode = SpectralMode::off;
    DeftModel off(cfg, 4, 41);
    cfg.spectral_mode = SpectralMode::dynamic;
    DeftModel dyn(cfg, 4, 41);
    Mat e_off = off.forward(g.snapshots[0]).value();
    Mat e_dyn = dyn.forward(g.snapshots[0]).value();
    CHECK(e_off.rows() == e_dyn.rows());
    CHECK(e_off.cols() == e_dyn.cols());
    CHECK((e_off - e_dyn).norm() > 1e-9);
}

TEST_CASE("gradient flows to GRU parameters through three timesteps") {
    std::mt19937_64 rng(14);
    auto g = small_dynamic(rng, 6, 3);
    DeftModel model(small_config(), 4, 51);
    auto embs = model.sequence_forward(g, 0, 3);
    Tensor loss = nn::sum_all(nn::mul(embs[2], embs[2]));
    for (auto& p : model.parameters()) p.tensor.zero_grad();
    loss.backward();
    double gru_grad = 0.0;
    for (auto& p : model.parameters()) {
        if (p.name.find("gru") != std::string::npos && p.tensor.grad().size() > 0) {
            gru_grad += p.tensor.grad().norm();
        }
    }
    CHECK(gru_grad > 0.0);
}

TEST_CASE("full one-snapshot loss passes the gradient check") {
    std::mt19937_64 rng(15);
    auto g = small_dynamic(rng, 6, 1);
    DeftConfig cfg = small_config();
    cfg.hidden_dim = 32;
    DeftModel model(cfg, 4, 61);
    auto params = model.parameters();
    auto loss = [&] {
        model.reset_state();
        Tensor e = model.forward(g.snapshots[0]);
        return nn::sum_all(nn::mul(e, e));
    };
    CHECK(nn::gradient_check(loss, params, 1e-5) < 1e-4);
}
