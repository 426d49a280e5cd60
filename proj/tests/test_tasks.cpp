#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "deft/fixtures.hpp"
#include "deft/model.hpp"
#include "deft/sbm.hpp"
#include "deft/tasks.hpp"

using namespace deft;

TEST_CASE("rank with mean ties") {
    CHECK(rank_with_mean_ties(2.0, {1.0, 0.5, 0.0}) == doctest::Approx(1.0));
    CHECK(rank_with_mean_ties(0.5, {1.0, 1.0, 0.0}) == doctest::Approx(3.0));
    // all tied, 1 positive + 3 negatives -> rank 2.5
    CHECK(rank_with_mean_ties(1.0, {1.0, 1.0, 1.0}) == doctest::Approx(2.5));
}

TEST_CASE("mrr") {
    CHECK(mrr_from_ranks({1.0}) == doctest::Approx(1.0));
    CHECK(mrr_from_ranks({1.0, 4.0}) == doctest::Approx(0.625));
    CHECK(mrr_from_ranks({2.5}) == doctest::Approx(0.4));
    CHECK_THROWS(mrr_from_ranks({}));
}

TEST_CASE("average precision") {
    CHECK(average_precision({1, 1, 0}) == doctest::Approx(1.0));
    CHECK(average_precision({0, 1}) == doctest::Approx(0.5));
    CHECK(average_precision({1, 0, 1}) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
    CHECK_THROWS(average_precision({0, 0}));
}

TEST_CASE("micro F1 equals accuracy for single-label classification") {
    CHECK(micro_f1({0, 1, 2}, {0, 1, 2}, 3) == doctest::Approx(1.0));
    CHECK(micro_f1({0, 1, 1, 1}, {0, 0, 1, 1}, 2) == doctest::Approx(0.75));
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> pick(0, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> preds(50), labels(50);
        int correct = 0;
        for (int i = 0; i < 50; ++i) {
            preds[i] = pick(rng);
            labels[i] = pick(rng);
            if (preds[i] == labels[i]) ++correct;
        }
        CHECK(micro_f1(preds, labels, 4) == doctest::Approx(correct / 50.0));
    }
}

TEST_CASE("minority F1") {
    CHECK(minority_f1({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0));
    // all predicted majority while minority present
    CHECK(minority_f1({0, 0, 0, 0}, {0, 0, 0, 1}) == doctest::Approx(0.0));
    // labels [0,0,1,1], preds [0,1,1,1]: minority class 1 (tie -> larger id),
    // tp=2 fp=1 fn=0 -> F1 = 2/(2+0.5) = 0.8
    CHECK(minority_f1({0, 1, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(0.8));
}

TEST_CASE("negative sampling") {
    std::mt19937_64 rng(3);
    // empty 3-node graph: everything except self-loops is a non-edge
    GraphSnapshot empty;
    empty.adjacency = SparseMatrix::from_edge_list(3, 3, {});
    empty.features = Eigen::MatrixXd::Zero(3, 1);
    auto negs = negative_sample(empty, 2, rng);
    CHECK(negs.size() == 2);
    for (const auto& [u, v] : negs) CHECK(u != v);

    // P2 has no non-edges
    auto p2 = path_snapshot(2);
    CHECK_THROWS(negative_sample(p2, 1, rng));

    // determinism
    std::mt19937_64 r1(9), r2(9);
    auto g = cycle_snapshot(6);
    CHECK(negative_sample(g, 10, r1) == negative_sample(g, 10, r2));
}

TEST_CASE("pair head basics") {
    std::mt19937_64 rng(4);
    PairHead head = PairHead::create(8, 8, 2, rng);
    nn::Tensor emb = nn::Tensor::variable(Eigen::MatrixXd::Random(5, 8));
    nn::Tensor logits = head.logits(emb, {{0, 1}, {2, 3}});
    CHECK(logits.rows() == 2);
    CHECK(logits.cols() == 2);

    // zero head weights give zero logits
    PairHead zero = PairHead::create(8, 8, 2, rng);
    zero.w1.value_mut().setZero();
    zero.w2.value_mut().setZero();
    CHECK(zero.logits(emb, {{0, 1}}).value().cwiseAbs().maxCoeff() == 0.0);

    // gradient flows to both endpoint embeddings
    nn::Tensor loss = nn::sum_all(nn::mul(logits, logits));
    emb.zero_grad();
    loss.backward();
    CHECK(emb.grad().row(0).norm() > 0.0);
    CHECK(emb.grad().row(1).norm() > 0.0);
}

namespace {

struct Harness {
    DynamicGraph graph;
    DeftModel model;
    PairHead pair_head;
    NodeHead node_head;
    TaskSpec task;

    static Harness make(TaskSpec::Kind kind, std::uint64_t seed) {
        SbmConfig cfg;
        cfg.n_nodes = 20;
        cfg.n_snapshots = 10;
        cfg.p_in = 0.5;
        cfg.p_out = 0.05;
        cfg.seed = seed;
        DynamicGraph graph = generate_dynamic_sbm(cfg);
        DeftConfig mc;
        mc.hidden_dim = 32;
        mc.filter_order = 4;
        mc.scales = {1.0};
        DeftModel model(mc, 3, seed);
        std::mt19937_64 rng(seed + 1);
        TaskSpec task;
        task.kind = kind;
        task.n_classes = kind == TaskSpec::Kind::node_classification ? 3 : 2;
        PairHead ph = PairHead::create(32, 32, task.n_classes, rng);
        NodeHead nh = NodeHead::create(32, 32, task.n_classes, rng);
        return Harness{std::move(graph), std::move(model), std::move(ph), std::move(nh), task};
    }
};

}  // namespace

TEST_CASE("train_epoch returns a positive finite loss and is deterministic at lr=0") {
    auto h = Harness::make(TaskSpec::Kind::link_prediction, 7);
    auto params = h.model.parameters();
    h.pair_head.collect(params);
    nn::AdamOptimizer opt(params, 0.0);
    std::mt19937_64 r1(5), r2(5);
    double l1 = train_epoch(h.graph, h.model, h.pair_head, h.node_head, h.task, opt, r1);
    double l2 = train_epoch(h.graph, h.model, h.pair_head, h.node_head, h.task, opt, r2);
    CHECK(std::isfinite(l1));
    CHECK(l1 > 0.0);
    CHECK(l1 == doctest::Approx(l2).epsilon(1e-12));
}

TEST_CASE("training reduces the loss on a separable fixture") {
    auto h = Harness::make(TaskSpec::Kind::link_prediction, 11);
    auto params = h.model.parameters();
    h.pair_head.collect(params);
    nn::AdamOptimizer opt(params, 3e-3);
    std::mt19937_64 rng(2);
    double first = train_epoch(h.graph, h.model, h.pair_head, h.node_head, h.task, opt, rng);
    double last = first;
    for (int e = 1; e < 50; ++e) {
        last = train_epoch(h.graph, h.model, h.pair_head, h.node_head, h.task, opt, rng);
    }
    CHECK(last < 0.5 * first);
}

TEST_CASE("evaluate is pure and only fills task-relevant fields") {
    auto h = Harness::make(TaskSpec::Kind::link_prediction, 13);
    auto r1 = evaluate(h.graph, h.model, h.pair_head, h.node_head, h.task, EvalSplit::val);
    auto r2 = evaluate(h.graph, h.model, h.pair_head, h.node_head, h.task, EvalSplit::val);
    REQUIRE(r1.mrr.has_value());
    REQUIRE(r1.map.has_value());
    CHECK(!r1.micro_f1.has_value());
    CHECK(*r1.mrr == *r2.mrr);
    CHECK(*r1.map == *r2.map);
    CHECK(*r1.mrr >= 0.0);
    CHECK(*r1.mrr <= 1.0);
    CHECK(*r1.map >= 0.0);
    CHECK(*r1.map <= 1.0);
}

TEST_CASE("node classification evaluate fills F1 fields only") {
    auto h = Harness::make(TaskSpec::Kind::node_classification, 17);
    auto r = evaluate(h.graph, h.model, h.pair_head, h.node_head, h.task, EvalSplit::test);
    CHECK(r.micro_f1.has_value());
    CHECK(r.minority_f1.has_value());
    CHECK(!r.mrr.has_value());
    CHECK(*r.micro_f1 >= 0.0);
    CHECK(*r.micro_f1 <= 1.0);
}

TEST_CASE("random-scoring link prediction lands near the uniform-rank MRR") {
    // with 10 candidates per query, uniform ranks give E[1/r] = H_10/10
    auto h = Harness::make(TaskSpec::Kind::link_prediction, 23);
    auto r = evaluate(h.graph, h.model, h.pair_head, h.node_head, h.task, EvalSplit::test);
    double expected = 0.0;
    for (int k = 1; k <= 10; ++k) expected += 1.0 / k;
    expected /= 10.0;
    CHECK(*r.mrr > expected - 0.15);
    CHECK(*r.mrr < expected + 0.25);
}
