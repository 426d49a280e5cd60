#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "deft/graph.hpp"
#include "deft/layers.hpp"
#include "deft/model.hpp"
#include "deft/tensor.hpp"

namespace deft {

struct TaskSpec {
    enum class Kind { link_prediction, edge_classification, node_classification };
    Kind kind = Kind::link_prediction;
    int n_classes = 2;              // classification tasks
    int negatives_per_positive = 9;  // link prediction

    void validate() const;
};

struct MetricsReport {
    std::optional<double> mrr;
    std::optional<double> map;
    std::optional<double> micro_f1;
    std::optional<double> minority_f1;
    std::vector<double> loss_per_epoch;
};

/// Two-logit MLP head over concat(h_u, h_v); also used for edge
/// classification with n_classes outputs.
struct PairHead {
    nn::Tensor w1, w2;

    static PairHead create(int embedding_dim, int hidden, int n_out, std::mt19937_64& rng);
    nn::Tensor logits(const nn::Tensor& embeddings,
                      const std::vector<std::pair<std::size_t, std::size_t>>& pairs) const;
    void collect(std::vector<nn::Parameter>& out) const;
};

/// Per-node classification head.
struct NodeHead {
    nn::Tensor w1, w2;

    static NodeHead create(int embedding_dim, int hidden, int n_classes, std::mt19937_64& rng);
    nn::Tensor logits(const nn::Tensor& embeddings) const;
    void collect(std::vector<nn::Parameter>& out) const;
};

/// Uniform non-edge pairs (u != v, (u,v) not an edge), with replacement.
/// Throws after 100*n_neg rejected draws (dense graphs).
std::vector<std::pair<std::size_t, std::size_t>> negative_sample(const GraphSnapshot& snapshot,
                                                                 std::size_t n_neg,
                                                                 std::mt19937_64& rng);

/// Rank of a positive among its negatives by descending score; tied blocks
/// get their mean rank.
double rank_with_mean_ties(double positive_score, const std::vector<double>& negative_scores);

double mrr_from_ranks(const std::vector<double>& ranks);

/// Average precision of one ranked relevance list (1 = relevant).
double average_precision(const std::vector<int>& relevance);

double micro_f1(const std::vector<int>& predictions, const std::vector<int>& labels,
                int n_classes);
/// Binary F1 of the rarer class (ties resolve to the larger label).
double minority_f1(const std::vector<int>& predictions, const std::vector<int>& labels);

/// One pass over the training timesteps: forward, task loss, backward,
/// Adam step per timestep. Weight evolution restarts from t=0.
double train_epoch(const DynamicGraph& graph, DeftModel& model, const PairHead& pair_head,
                   const NodeHead& node_head, const TaskSpec& task, nn::AdamOptimizer& optimizer,
                   std::mt19937_64& rng);

enum class EvalSplit { val, test };

/// Gradient-free evaluation over the chosen split; negatives drawn from a
/// fixed evaluation seed so repeated calls agree exactly.
MetricsReport evaluate(const DynamicGraph& graph, DeftModel& model, const PairHead& pair_head,
                       const NodeHead& node_head, const TaskSpec& task, EvalSplit split,
                       std::uint64_t eval_seed = 0xDEF7u);

}  // namespace deft
