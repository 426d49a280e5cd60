#include "deft/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace deft {

void TaskSpec::validate() const {
    if (kind != Kind::link_prediction && n_classes < 2) {
        throw std::invalid_argument("tasks_eval: n_classes must be >= 2 for classification");
    }
    if (kind == Kind::link_prediction && negatives_per_positive < 1) {
        throw std::invalid_argument("tasks_eval: negatives_per_positive must be >= 1");
    }
}

PairHead PairHead::create(int embedding_dim, int hidden, int n_out, std::mt19937_64& rng) {
    PairHead head;
    head.w1 = nn::Tensor::variable(nn::glorot_uniform(2 * embedding_dim, hidden, rng));
    head.w2 = nn::Tensor::variable(nn::glorot_uniform(hidden, n_out, rng));
    return head;
}

nn::Tensor PairHead::logits(const nn::Tensor& embeddings,
                            const std::vector<std::pair<std::size_t, std::size_t>>& pairs) const {
    std::vector<std::size_t> us, vs;
    us.reserve(pairs.size());
    vs.reserve(pairs.size());
    for (const auto& [u, v] : pairs) {
        us.push_back(u);
        vs.push_back(v);
    }
    nn::Tensor h_u = nn::gather_rows(embeddings, us);
    nn::Tensor h_v = nn::gather_rows(embeddings, vs);
    nn::Tensor x = nn::concat_cols({h_u, h_v});
    return nn::matmul(nn::leaky_relu(nn::matmul(x, w1)), w2);
}

void PairHead::collect(std::vector<nn::Parameter>& out) const {
    out.push_back({"head.pair.w1", w1});
    out.push_back({"head.pair.w2", w2});
}

NodeHead NodeHead::create(int embedding_dim, int hidden, int n_classes, std::mt19937_64& rng) {
    NodeHead head;
    head.w1 = nn::Tensor::variable(nn::glorot_uniform(embedding_dim, hidden, rng));
    head.w2 = nn::Tensor::variable(nn::glorot_uniform(hidden, n_classes, rng));
    return head;
}

nn::Tensor NodeHead::logits(const nn::Tensor& embeddings) const {
    return nn::matmul(nn::leaky_relu(nn::matmul(embeddings, w1)), w2);
}

void NodeHead::collect(std::vector<nn::Parameter>& out) const {
    out.push_back({"head.node.w1", w1});
    out.push_back({"head.node.w2", w2});
}

std::vector<std::pair<std::size_t, std::size_t>> negative_sample(const GraphSnapshot& snapshot,
                                                                 std::size_t n_neg,
                                                                 std::mt19937_64& rng) {
    const std::size_t n = snapshot.adjacency.n_rows;
    if (n_neg < 1) throw std::invalid_argument("tasks_eval: n_neg must be >= 1");
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(n_neg);
    std::size_t rejected = 0;
    const std::size_t budget = 100 * n_neg;
    while (out.size() < n_neg) {
        std::size_t u = pick(rng);
        std::size_t v = pick(rng);
        if (u == v || snapshot.adjacency.at(u, v) != 0.0) {
            if (++rejected > budget) {
                throw std::runtime_error("tasks_eval: negative sampling exhausted (graph too dense)");
            }
            continue;
        }
        out.emplace_back(u, v);
    }
    return out;
}

namespace {

// Same-source corruption: (u, w) with w != u and no edge (u, w).
std::vector<std::size_t> corrupt_targets(const GraphSnapshot& snapshot, std::size_t u,
                                         std::size_t n_neg, std::mt19937_64& rng) {
    const std::size_t n = snapshot.adjacency.n_rows;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> out;
    out.reserve(n_neg);
    std::size_t rejected = 0;
    const std::size_t budget = 100 * n_neg;
    while (out.size() < n_neg) {
        std::size_t w = pick(rng);
        if (w == u || snapshot.adjacency.at(u, w) != 0.0) {
            if (++rejected > budget) {
                throw std::runtime_error("tasks_eval: negative sampling exhausted (node too dense)");
            }
            continue;
        }
        out.push_back(w);
    }
    return out;
}

// Undirected edges, each once with u < v.
std::vector<std::pair<std::size_t, std::size_t>> positive_edges(const GraphSnapshot& snapshot) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& [u, v, w] : snapshot.adjacency.to_edge_list()) {
        (void)w;
        if (u < v) out.emplace_back(u, v);
    }
    return out;
}

}  // namespace

double rank_with_mean_ties(double positive_score, const std::vector<double>& negative_scores) {
    std::size_t greater = 0, tied = 0;
    for (double s : negative_scores) {
        if (s > positive_score) ++greater;
        else if (s == positive_score) ++tied;
    }
    return static_cast<double>(greater) + 1.0 + static_cast<double>(tied) / 2.0;
}

double mrr_from_ranks(const std::vector<double>& ranks) {
    if (ranks.empty()) throw std::invalid_argument("tasks_eval: mrr over empty query set");
    double acc = 0.0;
    for (double r : ranks) acc += 1.0 / r;
    return acc / static_cast<double>(ranks.size());
}

double average_precision(const std::vector<int>& relevance) {
    std::size_t hits = 0;
    double acc = 0.0;
    for (std::size_t k = 0; k < relevance.size(); ++k) {
        if (relevance[k]) {
            ++hits;
            acc += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    if (hits == 0) throw std::invalid_argument("tasks_eval: query with no relevant item");
    return acc / static_cast<double>(hits);
}

double micro_f1(const std::vector<int>& predictions, const std::vector<int>& labels,
                int n_classes) {
    if (predictions.empty() || predictions.size() != labels.size()) {
        throw std::invalid_argument("tasks_eval: micro_f1 input size mismatch");
    }
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= n_classes || predictions[i] < 0 ||
            predictions[i] >= n_classes) {
            throw std::invalid_argument("tasks_eval: label out of range");
        }
        if (predictions[i] == labels[i]) {
            tp += 1;
        } else {
            fp += 1;  // wrong prediction counts against both classes
            fn += 1;
        }
    }
    return tp / (tp + 0.5 * (fp + fn));
}

double minority_f1(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.empty() || predictions.size() != labels.size()) {
        throw std::invalid_argument("tasks_eval: minority_f1 input size mismatch");
    }
    std::map<int, std::size_t> counts;
    for (int y : labels) ++counts[y];
    int minority = counts.begin()->first;
    std::size_t best = counts.begin()->second;
    for (const auto& [cls, cnt] : counts) {
        if (cnt < best || (cnt == best && cls > minority)) {
            minority = cls;
            best = cnt;
        }
    }
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pred_pos = predictions[i] == minority;
        const bool true_pos = labels[i] == minority;
        if (pred_pos && true_pos) tp += 1;
        else if (pred_pos) fp += 1;
        else if (true_pos) fn += 1;
    }
    const double denom = tp + 0.5 * (fp + fn);
    return denom == 0.0 ? 0.0 : tp / denom;
}

namespace {

// Per-timestep loss for the task, given embeddings at t.
nn::Tensor timestep_loss(const DynamicGraph& graph, std::size_t t, const nn::Tensor& embeddings,
                         const PairHead& pair_head, const NodeHead& node_head,
                         const TaskSpec& task, std::mt19937_64& rng) {
    using Kind = TaskSpec::Kind;
    if (task.kind == Kind::link_prediction) {
        const GraphSnapshot& target = graph.snapshots.at(t + 1);
        auto positives = positive_edges(target);
        if (positives.empty()) {
            throw std::runtime_error("tasks_eval: no positive edges at target timestep");
        }
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        std::vector<int> labels;
        for (const auto& [u, v] : positives) {
            pairs.emplace_back(u, v);
            labels.push_back(1);
            for (std::size_t w :
                 corrupt_targets(target, u, static_cast<std::size_t>(task.negatives_per_positive),
                                 rng)) {
                pairs.emplace_back(u, w);
                labels.push_back(0);
            }
        }
        return nn::softmax_cross_entropy(pair_head.logits(embeddings, pairs), labels);
    }
    if (task.kind == Kind::edge_classification) {
        const GraphSnapshot& snap = graph.snapshots.at(t);
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        std::vector<int> labels;
        for (const auto& [edge, label] : snap.edge_labels) {
            pairs.push_back(edge);
            labels.push_back(label);
        }
        if (pairs.empty()) throw std::runtime_error("tasks_eval: no edge labels at timestep");
        return nn::softmax_cross_entropy(pair_head.logits(embeddings, pairs), labels);
    }
    const GraphSnapshot& snap = graph.snapshots.at(t);
    if (snap.node_labels.empty()) throw std::runtime_error("tasks_eval: no node labels at timestep");
    return nn::softmax_cross_entropy(node_head.logits(embeddings), snap.node_labels);
}

}  // namespace

double train_epoch(const DynamicGraph& graph, DeftModel& model, const PairHead& pair_head,
                   const NodeHead& node_head, const TaskSpec& task, nn::AdamOptimizer& optimizer,
                   std::mt19937_64& rng) {
    task.validate();
    model.reset_state();
    const std::size_t train_end = graph.split.train_end;
    // LP predicts t+1, so the last usable embedding is at train_end - 2.
    const std::size_t last =
        task.kind == TaskSpec::Kind::link_prediction ? train_end - 1 : train_end;
    if (last == 0) throw std::runtime_error("tasks_eval: empty training range");
    double total = 0.0;
    std::size_t steps = 0;
    for (std::size_t t = 0; t < last; ++t) {
        nn::Tensor embeddings = model.forward(graph.snapshots.at(t));
        nn::Tensor loss =
            timestep_loss(graph, t, embeddings, pair_head, node_head, task, rng);
        optimizer.zero_grad();
        loss.backward();
        optimizer.step();
        total += loss.value()(0, 0);
        ++steps;
    }
    return total / static_cast<double>(steps);
}

MetricsReport evaluate(const DynamicGraph& graph, DeftModel& model, const PairHead& pair_head,
                       const NodeHead& node_head, const TaskSpec& task, EvalSplit split,
                       std::uint64_t eval_seed) {
    task.validate();
    using Kind = TaskSpec::Kind;
    const std::size_t begin = split == EvalSplit::val ? graph.split.train_end : graph.split.val_end;
    const std::size_t end = split == EvalSplit::val ? graph.split.val_end : graph.split.test_end;
    if (begin >= end) throw std::runtime_error("tasks_eval: empty evaluation split");

    // Re-run weight evolution from t=0 so repeated calls agree exactly.
    model.reset_state();
    std::vector<nn::Mat> embeddings(end);
    for (std::size_t t = 0; t < end; ++t) {
        embeddings[t] = model.forward(graph.snapshots.at(t)).value();
    }

    std::mt19937_64 rng(eval_seed);
    MetricsReport report;

    auto score_pairs = [&](const nn::Mat& emb,
                           const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
        nn::Tensor e = nn::Tensor::constant(emb);
        nn::Mat logits = pair_head.logits(e, pairs).value();
        std::vector<double> scores(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) scores[i] = logits(i, 1) - logits(i, 0);
        return scores;
    };

    if (task.kind == Kind::link_prediction) {
        std::vector<double> mrr_per_t, map_per_t;
        for (std::size_t t = begin; t < end; ++t) {
            if (t + 1 >= graph.snapshots.size()) break;
            const GraphSnapshot& target = graph.snapshots.at(t + 1);
            auto positives = positive_edges(target);
            if (positives.empty()) continue;
            std::vector<double> ranks;
            // source node -> (score, relevant) candidate list
            std::map<std::size_t, std::vector<std::pair<double, int>>> by_source;
            for (const auto& [u, v] : positives) {
                std::vector<std::pair<std::size_t, std::size_t>> pairs{{u, v}};
                for (std::size_t w : corrupt_targets(
                         target, u, static_cast<std::size_t>(task.negatives_per_positive), rng)) {
                    pairs.emplace_back(u, w);
                }
                auto scores = score_pairs(embeddings[t], pairs);
                std::vector<double> negs(scores.begin() + 1, scores.end());
                ranks.push_back(rank_with_mean_ties(scores[0], negs));
                by_source[u].emplace_back(scores[0], 1);
                for (double s : negs) by_source[u].emplace_back(s, 0);
            }
            if (ranks.empty()) continue;
            std::vector<double> aps;
            for (auto& [src, cands] : by_source) {
                // descending score; ties rank negatives first (pessimistic)
                std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
                    if (a.first != b.first) return a.first > b.first;
                    return a.second < b.second;
                });
                std::vector<int> rel;
                rel.reserve(cands.size());
                for (const auto& [s, r] : cands) rel.push_back(r);
                aps.push_back(average_precision(rel));
            }
            mrr_per_t.push_back(mrr_from_ranks(ranks));
            map_per_t.push_back(std::accumulate(aps.begin(), aps.end(), 0.0) /
                                static_cast<double>(aps.size()));
        }
        if (mrr_per_t.empty()) throw std::runtime_error("tasks_eval: no evaluable timesteps");
        report.mrr = std::accumulate(mrr_per_t.begin(), mrr_per_t.end(), 0.0) /
                     static_cast<double>(mrr_per_t.size());
        report.map = std::accumulate(map_per_t.begin(), map_per_t.end(), 0.0) /
                     static_cast<double>(map_per_t.size());
        return report;
    }

    std::vector<int> all_preds, all_labels;
    for (std::size_t t = begin; t < end; ++t) {
        const GraphSnapshot& snap = graph.snapshots.at(t);
        nn::Mat logits;
        std::vector<int> labels;
        if (task.kind == Kind::edge_classification) {
            std::vector<std::pair<std::size_t, std::size_t>> pairs;
            for (const auto& [edge, label] : snap.edge_labels) {
                pairs.push_back(edge);
                labels.push_back(label);
            }
            if (pairs.empty()) continue;
            logits = pair_head.logits(nn::Tensor::constant(embeddings[t]), pairs).value();
        } else {
            if (snap.node_labels.empty()) continue;
            labels = snap.node_labels;
            logits = node_head.logits(nn::Tensor::constant(embeddings[t])).value();
        }
        for (Eigen::Index i = 0; i < logits.rows(); ++i) {
            Eigen::Index arg = 0;
            logits.row(i).maxCoeff(&arg);
            all_preds.push_back(static_cast<int>(arg));
            all_labels.push_back(labels[static_cast<std::size_t>(i)]);
        }
    }
    if (all_preds.empty()) throw std::runtime_error("tasks_eval: no labeled data in split");
    report.micro_f1 = micro_f1(all_preds, all_labels, task.n_classes);
    report.minority_f1 = minority_f1(all_preds, all_labels);
    return report;
}

}  // namespace deft
