// deft: learnable spectral wavelet filters on dynamic graphs.
//
// Subcommands: generate, train, eval, verify-lemmas, filter-response,
// wavelet, bench. All artifacts are plain text (DEFT-SNAPSHOTS, DEFT-CKPT,
// CSV) under --out.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deft/chebyshev.hpp"
#include "deft/fixtures.hpp"
#include "deft/graph.hpp"
#include "deft/io.hpp"
#include "deft/model.hpp"
#include "deft/oracle.hpp"
#include "deft/sbm.hpp"
#include "deft/tasks.hpp"

namespace fs = std::filesystem;

namespace {

struct RunConfig {
    std::string config_path;
    std::string input_path;
    std::string out_dir = ".";
    std::string task = "lp";
    int epochs = 50;
    std::uint64_t seed = 7;
    int runs = 1;
    deft::DeftConfig model;
    deft::SbmConfig sbm;
    std::string checkpoint_path;
    std::size_t timestep = 0;
    std::size_t node = 0;
    std::string spectral = "dynamic";  // dynamic | static | off
};

[[noreturn]] void config_error(const std::string& msg) {
    std::cerr << "ERROR cli: " << msg << "\n";
    std::exit(2);
}

int int_key(const std::map<std::string, std::string>& cfg, const std::string& key, int fallback) {
    auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        config_error("config key " + key + ": expected integer, got '" + it->second + "'");
    }
}

double real_key(const std::map<std::string, std::string>& cfg, const std::string& key,
                double fallback) {
    auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        config_error("config key " + key + ": expected number, got '" + it->second + "'");
    }
}

std::vector<double> parse_scales(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            config_error("bad scale value '" + item + "'");
        }
    }
    if (out.empty()) config_error("empty scale list");
    return out;
}

deft::Aggregator parse_aggregator(const std::string& name) {
    if (name == "mlp") return deft::Aggregator::mlp;
    if (name == "gat") return deft::Aggregator::gat_style;
    if (name == "transformer") return deft::Aggregator::sparse_transformer;
    config_error("unknown aggregator '" + name + "' (expected mlp|gat|transformer)");
}

std::string aggregator_name(deft::Aggregator a) {
    switch (a) {
        case deft::Aggregator::mlp: return "mlp";
        case deft::Aggregator::gat_style: return "gat";
        default: return "transformer";
    }
}

deft::SpectralMode parse_spectral(const std::string& name) {
    if (name == "dynamic") return deft::SpectralMode::dynamic;
    if (name == "static") return deft::SpectralMode::static_t0;
    if (name == "off") return deft::SpectralMode::off;
    config_error("unknown spectral mode '" + name + "' (expected dynamic|static|off)");
}

// Merge config-file keys under the CLI flags (flag > file > default).
void apply_config_file(RunConfig& rc, const std::set<std::string>& flags_set) {
    if (rc.config_path.empty()) return;
    std::map<std::string, std::string> cfg;
    try {
        cfg = deft::parse_config_file(rc.config_path);
    } catch (const std::exception& e) {
        config_error(e.what());
    }
    static const std::set<std::string> known = {
        "task", "epochs", "seed", "runs", "hidden_dim", "n_layers", "n_heads", "filter_order",
        "scales", "aggregator", "spectral", "d_t", "rnn_style", "clamp_mode",
        "sbm.n_nodes", "sbm.n_communities", "sbm.p_in", "sbm.p_out", "sbm.n_snapshots",
        "sbm.drift_fraction", "sbm.feature_mode", "sbm.noise_std", "sbm.seed"};
    for (const auto& [k, v] : cfg) {
        if (!known.count(k)) config_error("unknown config key '" + k + "'");
    }
    auto unset = [&](const std::string& f) { return !flags_set.count(f); };
    if (unset("task") && cfg.count("task")) rc.task = cfg.at("task");
    if (unset("epochs")) rc.epochs = int_key(cfg, "epochs", rc.epochs);
    if (unset("seed")) rc.seed = static_cast<std::uint64_t>(int_key(cfg, "seed", static_cast<int>(rc.seed)));
    if (unset("runs")) rc.runs = int_key(cfg, "runs", rc.runs);
    rc.model.hidden_dim = int_key(cfg, "hidden_dim", rc.model.hidden_dim);
    rc.model.n_layers = int_key(cfg, "n_layers", rc.model.n_layers);
    rc.model.n_heads = int_key(cfg, "n_heads", rc.model.n_heads);
    if (unset("filter-order")) rc.model.filter_order = int_key(cfg, "filter_order", rc.model.filter_order);
    if (unset("scales") && cfg.count("scales")) rc.model.scales = parse_scales(cfg.at("scales"));
    if (unset("aggregator") && cfg.count("aggregator")) {
        rc.model.aggregator = parse_aggregator(cfg.at("aggregator"));
    }
    if (unset("spectral") && cfg.count("spectral")) rc.spectral = cfg.at("spectral");
    rc.model.d_t = int_key(cfg, "d_t", rc.model.d_t);
    if (cfg.count("rnn_style")) {
        const std::string& s = cfg.at("rnn_style");
        if (s == "weights_as_state") rc.model.rnn_style = deft::RnnStyle::weights_as_state;
        else if (s == "input_driven") rc.model.rnn_style = deft::RnnStyle::input_driven;
        else config_error("unknown rnn_style '" + s + "'");
    }
    if (cfg.count("clamp_mode")) {
        const std::string& s = cfg.at("clamp_mode");
        if (s == "clamp") rc.model.clamp_mode = deft::ClampMode::clamp;
        else if (s == "extrapolate") rc.model.clamp_mode = deft::ClampMode::extrapolate;
        else config_error("unknown clamp_mode '" + s + "'");
    }
    rc.sbm.n_nodes = int_key(cfg, "sbm.n_nodes", rc.sbm.n_nodes);
    rc.sbm.n_communities = int_key(cfg, "sbm.n_communities", rc.sbm.n_communities);
    rc.sbm.p_in = real_key(cfg, "sbm.p_in", rc.sbm.p_in);
    rc.sbm.p_out = real_key(cfg, "sbm.p_out", rc.sbm.p_out);
    rc.sbm.n_snapshots = int_key(cfg, "sbm.n_snapshots", rc.sbm.n_snapshots);
    rc.sbm.drift_fraction = real_key(cfg, "sbm.drift_fraction", rc.sbm.drift_fraction);
    rc.sbm.noise_std = real_key(cfg, "sbm.noise_std", rc.sbm.noise_std);
    rc.sbm.seed = static_cast<std::uint64_t>(int_key(cfg, "sbm.seed", static_cast<int>(rc.sbm.seed)));
    if (cfg.count("sbm.feature_mode")) {
        const std::string& s = cfg.at("sbm.feature_mode");
        if (s == "community_onehot_noisy") rc.sbm.feature_mode = deft::SbmConfig::FeatureMode::community_onehot_noisy;
        else if (s == "random") rc.sbm.feature_mode = deft::SbmConfig::FeatureMode::random;
        else config_error("unknown sbm.feature_mode '" + s + "'");
    }
}

std::string scales_string(const std::vector<double>& scales) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (i) ss << ",";
        ss << scales[i];
    }
    return ss.str();
}

void write_resolved_config(const RunConfig& rc) {
    std::map<std::string, std::string> out;
    out["task"] = rc.task;
    out["epochs"] = std::to_string(rc.epochs);
    out["seed"] = std::to_string(rc.seed);
    out["runs"] = std::to_string(rc.runs);
    out["hidden_dim"] = std::to_string(rc.model.hidden_dim);
    out["n_layers"] = std::to_string(rc.model.n_layers);
    out["n_heads"] = std::to_string(rc.model.n_heads);
    out["filter_order"] = std::to_string(rc.model.filter_order);
    out["scales"] = scales_string(rc.model.scales);
    out["aggregator"] = aggregator_name(rc.model.aggregator);
    out["spectral"] = rc.spectral;
    out["d_t"] = std::to_string(rc.model.d_t);
    out["sbm.n_nodes"] = std::to_string(rc.sbm.n_nodes);
    out["sbm.n_communities"] = std::to_string(rc.sbm.n_communities);
    out["sbm.p_in"] = std::to_string(rc.sbm.p_in);
    out["sbm.p_out"] = std::to_string(rc.sbm.p_out);
    out["sbm.n_snapshots"] = std::to_string(rc.sbm.n_snapshots);
    out["sbm.drift_fraction"] = std::to_string(rc.sbm.drift_fraction);
    out["sbm.noise_std"] = std::to_string(rc.sbm.noise_std);
    out["sbm.seed"] = std::to_string(rc.sbm.seed);
    deft::write_config_file(out, (fs::path(rc.out_dir) / "config.resolved").string());
}

deft::TaskSpec make_task(const RunConfig& rc, const deft::DynamicGraph& graph) {
    deft::TaskSpec task;
    if (rc.task == "lp") {
        task.kind = deft::TaskSpec::Kind::link_prediction;
        task.n_classes = 2;
    } else if (rc.task == "ec") {
        task.kind = deft::TaskSpec::Kind::edge_classification;
        int n_classes = 2;
        for (const auto& snap : graph.snapshots) {
            for (const auto& [e, y] : snap.edge_labels) n_classes = std::max(n_classes, y + 1);
        }
        task.n_classes = n_classes;
    } else if (rc.task == "nc") {
        task.kind = deft::TaskSpec::Kind::node_classification;
        int n_classes = 2;
        for (const auto& snap : graph.snapshots) {
            for (int y : snap.node_labels) n_classes = std::max(n_classes, y + 1);
        }
        task.n_classes = n_classes;
    } else {
        config_error("unknown task '" + rc.task + "' (expected lp|ec|nc)");
    }
    return task;
}

struct TrainResult {
    deft::MetricsReport val;
    deft::MetricsReport test;
    std::vector<double> losses;
};

TrainResult run_training(const RunConfig& rc, const deft::DynamicGraph& graph,
                         std::uint64_t seed) {
    deft::DeftConfig model_cfg = rc.model;
    model_cfg.spectral_mode = parse_spectral(rc.spectral);
    deft::DeftModel model(model_cfg, static_cast<int>(graph.snapshots.front().features.cols()),
                          seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    deft::PairHead pair_head;
    deft::NodeHead node_head;
    deft::TaskSpec task = make_task(rc, graph);
    const int hid = model_cfg.hidden_dim;
    if (task.kind == deft::TaskSpec::Kind::node_classification) {
        node_head = deft::NodeHead::create(hid, hid, task.n_classes, rng);
    } else {
        pair_head = deft::PairHead::create(hid, hid, task.n_classes, rng);
    }

    std::vector<deft::nn::Parameter> params = model.parameters();
    if (task.kind == deft::TaskSpec::Kind::node_classification) node_head.collect(params);
    else pair_head.collect(params);
    deft::nn::AdamOptimizer opt(params, 1e-3);

    TrainResult result;
    for (int epoch = 0; epoch < rc.epochs; ++epoch) {
        result.losses.push_back(
            deft::train_epoch(graph, model, pair_head, node_head, task, opt, rng));
    }
    result.val = deft::evaluate(graph, model, pair_head, node_head, task, deft::EvalSplit::val);
    result.test = deft::evaluate(graph, model, pair_head, node_head, task, deft::EvalSplit::test);

    const fs::path out(rc.out_dir);
    deft::save_checkpoint(params, (out / ("checkpoint_seed" + std::to_string(seed) + ".ckpt")).string());
    return result;
}

void append_metric(std::vector<std::pair<std::string, double>>& rows, const std::string& prefix,
                   const deft::MetricsReport& r) {
    if (r.mrr) rows.emplace_back(prefix + "_mrr", *r.mrr);
    if (r.map) rows.emplace_back(prefix + "_map", *r.map);
    if (r.micro_f1) rows.emplace_back(prefix + "_micro_f1", *r.micro_f1);
    if (r.minority_f1) rows.emplace_back(prefix + "_minority_f1", *r.minority_f1);
}

int cmd_generate(const RunConfig& rc) {
    deft::DynamicGraph graph = deft::generate_dynamic_sbm(rc.sbm);
    fs::create_directories(rc.out_dir);
    deft::save_snapshots(graph, (fs::path(rc.out_dir) / "snapshots.deft").string());
    write_resolved_config(rc);
    double h = 0.0;
    for (const auto& s : graph.snapshots) h += deft::homophily_ratio(s);
    std::cout << "generated " << graph.snapshots.size() << " snapshots, N=" << graph.n_nodes
              << ", mean homophily " << h / static_cast<double>(graph.snapshots.size()) << "\n";
    return 0;
}

int cmd_train(const RunConfig& rc) {
    deft::DynamicGraph graph =
        rc.input_path.empty() ? deft::generate_dynamic_sbm(rc.sbm) : deft::load_snapshots(rc.input_path);
    fs::create_directories(rc.out_dir);
    write_resolved_config(rc);

    std::vector<TrainResult> results;
    for (int r = 0; r < rc.runs; ++r) {
        results.push_back(run_training(rc, graph, rc.seed + static_cast<std::uint64_t>(r)));
    }
    deft::write_loss_csv(results.front().losses, (fs::path(rc.out_dir) / "loss.csv").string());

    std::vector<std::pair<std::string, double>> rows;
    if (rc.runs == 1) {
        append_metric(rows, "val", results[0].val);
        append_metric(rows, "test", results[0].test);
    } else {
        auto stat = [&](const std::string& name, auto getter) {
            std::vector<double> vals;
            for (const auto& r : results) {
                if (auto v = getter(r)) vals.push_back(*v);
            }
            if (vals.empty()) return;
            double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            double sd = vals.size() > 1 ? std::sqrt(var / (vals.size() - 1)) : 0.0;
            rows.emplace_back(name + "_mean", mean);
            rows.emplace_back(name + "_std", sd);
        };
        stat("val_mrr", [](const TrainResult& r) { return r.val.mrr; });
        stat("val_map", [](const TrainResult& r) { return r.val.map; });
        stat("val_micro_f1", [](const TrainResult& r) { return r.val.micro_f1; });
        stat("val_minority_f1", [](const TrainResult& r) { return r.val.minority_f1; });
        stat("test_mrr", [](const TrainResult& r) { return r.test.mrr; });
        stat("test_map", [](const TrainResult& r) { return r.test.map; });
        stat("test_micro_f1", [](const TrainResult& r) { return r.test.micro_f1; });
        stat("test_minority_f1", [](const TrainResult& r) { return r.test.minority_f1; });
    }
    deft::write_metrics_csv(rows, (fs::path(rc.out_dir) / "metrics.csv").string());
    for (const auto& [k, v] : rows) std::cout << k << " = " << v << "\n";
    return 0;
}

int cmd_eval(const RunConfig& rc) {
    if (rc.input_path.empty()) config_error("eval requires --input snapshots");
    deft::DynamicGraph graph = deft::load_snapshots(rc.input_path);
    fs::create_directories(rc.out_dir);
    write_resolved_config(rc);

    deft::DeftConfig model_cfg = rc.model;
    model_cfg.spectral_mode = parse_spectral(rc.spectral);
    deft::DeftModel model(model_cfg, static_cast<int>(graph.snapshots.front().features.cols()),
                          rc.seed);
    std::mt19937_64 rng(rc.seed ^ 0x9e3779b97f4a7c15ULL);
    deft::TaskSpec task = make_task(rc, graph);
    const int hid = model_cfg.hidden_dim;
    deft::PairHead pair_head;
    deft::NodeHead node_head;
    if (task.kind == deft::TaskSpec::Kind::node_classification) {
        node_head = deft::NodeHead::create(hid, hid, task.n_classes, rng);
    } else {
        pair_head = deft::PairHead::create(hid, hid, task.n_classes, rng);
    }
    std::vector<deft::nn::Parameter> params = model.parameters();
    if (task.kind == deft::TaskSpec::Kind::node_classification) node_head.collect(params);
    else pair_head.collect(params);
    if (!rc.checkpoint_path.empty()) deft::load_checkpoint(params, rc.checkpoint_path);

    deft::MetricsReport val = deft::evaluate(graph, model, pair_head, node_head, task, deft::EvalSplit::val);
    deft::MetricsReport test = deft::evaluate(graph, model, pair_head, node_head, task, deft::EvalSplit::test);
    std::vector<std::pair<std::string, double>> rows;
    append_metric(rows, "val", val);
    append_metric(rows, "test", test);
    deft::write_metrics_csv(rows, (fs::path(rc.out_dir) / "metrics.csv").string());
    for (const auto& [k, v] : rows) std::cout << k << " = " << v << "\n";
    return 0;
}

// Fits the desired response on the snapshot's own spectrum domain.
deft::ChebyshevFilter fit_on(const deft::GraphSnapshot& snap, const deft::ResponseFn& response,
                             int order) {
    deft::SparseMatrix lap = deft::build_laplacian(snap);
    double lmax = deft::estimate_lambda_max(lap, deft::LambdaMaxMode::exact_small);
    return deft::fit_chebyshev(response, std::max(lmax, 1e-9), order);
}

int cmd_verify_lemmas(const RunConfig& rc) {
    fs::create_directories(rc.out_dir);
    std::ofstream out(fs::path(rc.out_dir) / "lemmas.txt");
    std::mt19937_64 rng(rc.seed);
    bool all_pass = true;
    auto report = [&](const std::string& name, bool pass, double lhs, double rhs) {
        all_pass = all_pass && pass;
        std::ostringstream row;
        row << (pass ? "PASS" : "FAIL") << " " << name << " lhs=" << lhs << " rhs=" << rhs;
        out << row.str() << "\n";
        std::cout << row.str() << "\n";
    };
    const deft::ResponseFn heat = [](double x) { return std::exp(-x); };

    // Lemma 1(ii): random dynamic graph pairs, heat-kernel filters.
    for (int i = 0; i < 20; ++i) {
        const std::size_t n = 8 + rng() % 24;
        auto graph = deft::dynamic_pair(deft::random_connected_snapshot(n, 0.3, rng),
                                        deft::random_connected_snapshot(n, 0.3, rng));
        std::vector<deft::ChebyshevFilter> filters{fit_on(graph.snapshots[0], heat, 8),
                                                   fit_on(graph.snapshots[1], heat, 8)};
        auto reps = deft::lemma1_part2_check(graph, {heat, heat}, filters);
        report("lemma1_part2_" + std::to_string(i), reps[0].holds, reps[0].lhs, reps[0].rhs);
    }

    // Lemma 1(i): Markov evolution of the desired response with a known
    // Lipschitz constant. eps_fa is measured from the fitted filter at t+1.
    for (const auto& [name, lip, factor] : std::vector<std::tuple<std::string, double, double>>{
             {"identity", 1.0, 1.0}, {"constant", 0.0, 0.0}, {"halving", 0.5, 0.5}}) {
        auto graph = deft::dynamic_pair(deft::random_connected_snapshot(10, 0.4, rng),
                                        deft::random_connected_snapshot(10, 0.4, rng));
        const double f = factor;
        deft::ResponseFn resp0 = heat;
        deft::ResponseFn resp1 = name == std::string("constant")
                                     ? deft::ResponseFn([](double) { return 0.5; })
                                     : deft::ResponseFn([f](double x) { return f * std::exp(-x); });
        std::vector<deft::ChebyshevFilter> filters{fit_on(graph.snapshots[0], resp0, 12),
                                                   fit_on(graph.snapshots[1], resp1, 12)};
        auto next = deft::SpectralOracle::decompose(deft::build_laplacian(graph.snapshots[1]));
        const double eps1 = deft::approximation_error(filters[1], 1.0, next, resp1).eps_ca;
        const double eps_fa = std::sqrt(10.0) * eps1;
        auto reps = deft::lemma1_part1_check(graph, {resp0, resp1}, lip, filters, eps_fa);
        report("lemma1_part1_" + name, reps[0].holds, reps[0].lhs, reps[0].rhs);
    }

    // Lemma 2 damping ratios on analytic fixtures.
    {
        auto oracle = deft::SpectralOracle::decompose(deft::build_laplacian(deft::cycle_snapshot(4)));
        Eigen::VectorXd h(4);
        h << 1.0, 0.3, 0.8, -0.5;
        auto rep = deft::lemma2_ratio_check(oracle, [](double x) { return 0.1 + x; }, h, 0, 80);
        const double expected = 0.1 / 4.1;
        report("lemma2_c4", std::abs(rep.empirical_ratio - expected) < 1e-3,
               rep.empirical_ratio, expected);
    }
    {
        auto oracle = deft::SpectralOracle::decompose(deft::build_laplacian(deft::path_snapshot(2)));
        Eigen::VectorXd h(2);
        h << 1.0, 0.2;
        auto rep = deft::lemma2_ratio_check(oracle, heat, h, 1, 80);
        const double expected = std::exp(-2.0);
        report("lemma2_p2", std::abs(rep.empirical_ratio - expected) < 1e-3,
               rep.empirical_ratio, expected);
    }
    return all_pass ? 0 : 1;
}

int cmd_filter_response(const RunConfig& rc) {
    fs::create_directories(rc.out_dir);
    deft::DynamicGraph graph =
        rc.input_path.empty() ? deft::generate_dynamic_sbm(rc.sbm) : deft::load_snapshots(rc.input_path);
    if (rc.timestep >= graph.snapshots.size()) config_error("timestep out of range");
    deft::DeftConfig model_cfg = rc.model;
    model_cfg.spectral_mode = parse_spectral(rc.spectral);
    deft::DeftModel model(model_cfg, static_cast<int>(graph.snapshots.front().features.cols()),
                          rc.seed);
    std::vector<deft::nn::Parameter> params = model.parameters();
    if (!rc.checkpoint_path.empty()) {
        // checkpoint includes head parameters; load only matching model names
        deft::PairHead pair_head;
        std::mt19937_64 rng(rc.seed ^ 0x9e3779b97f4a7c15ULL);
        pair_head = deft::PairHead::create(model_cfg.hidden_dim, model_cfg.hidden_dim, 2, rng);
        pair_head.collect(params);
        deft::load_checkpoint(params, rc.checkpoint_path);
    }
    for (std::size_t t = 0; t <= rc.timestep; ++t) model.forward(graph.snapshots.at(t));
    deft::ChebyshevFilter filter = model.last_filter();
    deft::ScaleSet scales(model_cfg.scales, model_cfg.clamp_mode);
    deft::FilterResponseTable table = deft::filter_response_table(filter, scales, 200);
    deft::write_filter_response_csv(table, (fs::path(rc.out_dir) / "filter_response.csv").string());
    std::cout << "filter response written for timestep " << rc.timestep << "\n";
    return 0;
}

int cmd_wavelet(const RunConfig& rc) {
    fs::create_directories(rc.out_dir);
    deft::DynamicGraph graph =
        rc.input_path.empty() ? deft::generate_dynamic_sbm(rc.sbm) : deft::load_snapshots(rc.input_path);
    if (rc.timestep >= graph.snapshots.size()) config_error("timestep out of range");
    const deft::GraphSnapshot& snap = graph.snapshots.at(rc.timestep);
    if (rc.node >= snap.n_nodes()) config_error("node out of range");
    deft::SparseMatrix lap = deft::build_laplacian(snap);
    const double lmax = deft::estimate_lambda_max(
        lap, snap.n_nodes() <= 2000 ? deft::LambdaMaxMode::exact_small
                                    : deft::LambdaMaxMode::power_iteration);
    deft::ChebyshevFilter filter = deft::fit_chebyshev(
        [](double x) { return std::exp(-x); }, std::max(lmax, 1e-9), rc.model.filter_order);
    for (std::size_t j = 0; j < rc.model.scales.size(); ++j) {
        Eigen::VectorXd psi =
            deft::wavelet_vector(filter, rc.model.scales[j], lap, rc.node, rc.model.clamp_mode);
        std::vector<double> values(psi.data(), psi.data() + psi.size());
        deft::write_wavelet_csv(
            values, (fs::path(rc.out_dir) / ("wavelet_s" + std::to_string(j + 1) + ".csv")).string());
    }
    std::cout << "wavelets written for node " << rc.node << " at timestep " << rc.timestep << "\n";
    return 0;
}

deft::GraphSnapshot random_regular_snapshot(std::size_t n, std::size_t degree,
                                            std::mt19937_64& rng) {
    // permutation-union construction: degree/2 random perfect matchings on a
    // ring give a connected near-regular multigraph; duplicates collapse
    std::vector<std::size_t> perm(n);
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i) edges.emplace(i, (i + 1) % n);  // base ring
    for (std::size_t r = 0; r + 2 <= degree; r += 2) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t u = perm[i], v = perm[(i + 1) % n];
            if (u != v) edges.emplace(std::min(u, v), std::max(u, v));
        }
    }
    std::vector<std::tuple<std::size_t, std::size_t, double>> list;
    for (const auto& [u, v] : edges) {
        list.emplace_back(u, v, 1.0);
        list.emplace_back(v, u, 1.0);
    }
    deft::GraphSnapshot snap;
    snap.adjacency = deft::SparseMatrix::from_edge_list(n, n, list);
    snap.features = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(n), 8);
    return snap;
}

int cmd_bench(const RunConfig& rc) {
    fs::create_directories(rc.out_dir);
    std::vector<std::size_t> sizes{1024, 2048, 4096, 8192};
    std::mt19937_64 rng(rc.seed);
    std::ofstream out(fs::path(rc.out_dir) / "bench.csv");
    out << "n,edges,median_seconds\n";
    std::vector<double> log_n, log_t;
    for (std::size_t n : sizes) {
        deft::GraphSnapshot snap = random_regular_snapshot(n, 8, rng);
        deft::DeftConfig cfg = rc.model;
        deft::DeftModel model(cfg, 8, rc.seed);
        std::vector<double> times;
        for (int rep = 0; rep < 5; ++rep) {
            model.reset_state();
            auto t0 = std::chrono::steady_clock::now();
            model.forward(snap);
            auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
        std::sort(times.begin(), times.end());
        const double median = times[times.size() / 2];
        const std::size_t n_edges = snap.adjacency.values.size() / 2;
        out << n << "," << n_edges << "," << median << "\n";
        std::cout << "N=" << n << " E=" << n_edges << " median " << median << " s\n";
        log_n.push_back(std::log(static_cast<double>(n)));
        log_t.push_back(std::log(median));
    }
    // least-squares slope of log t vs log N
    const double k = static_cast<double>(log_n.size());
    const double mx = std::accumulate(log_n.begin(), log_n.end(), 0.0) / k;
    const double my = std::accumulate(log_t.begin(), log_t.end(), 0.0) / k;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < log_n.size(); ++i) {
        num += (log_n[i] - mx) * (log_t[i] - my);
        den += (log_n[i] - mx) * (log_n[i] - mx);
    }
    const double slope = num / den;
    out << "slope," << slope << ",\n";
    std::cout << "log-log slope " << slope << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DEFT: dynamic-graph spectral wavelet networks"};
    app.require_subcommand(1);

    RunConfig rc;
    std::string scales_csv, aggregator_name_str;
    std::set<std::string> flags_set;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", rc.config_path, "key=value config file");
        sub->add_option("--task", rc.task, "lp|ec|nc")->check(CLI::IsMember({"lp", "ec", "nc"}));
        sub->add_option("--epochs", rc.epochs)->check(CLI::PositiveNumber);
        sub->add_option("--seed", rc.seed);
        sub->add_option("--runs", rc.runs)->check(CLI::PositiveNumber);
        sub->add_option("--filter-order", rc.model.filter_order);
        sub->add_option("--scales", scales_csv, "comma-separated scale list");
        sub->add_option("--aggregator", aggregator_name_str)
            ->check(CLI::IsMember({"mlp", "gat", "transformer"}));
        sub->add_option("--spectral", rc.spectral, "dynamic|static|off")
            ->check(CLI::IsMember({"dynamic", "static", "off"}));
        sub->add_option("--hidden-dim", rc.model.hidden_dim);
        sub->add_option("--input", rc.input_path, "DEFT-SNAPSHOTS input file");
        sub->add_option("--checkpoint", rc.checkpoint_path, "DEFT-CKPT file");
        sub->add_option("--timestep", rc.timestep);
        sub->add_option("--node", rc.node);
        sub->add_option("--out", rc.out_dir, "output directory");
        sub->add_option("--sbm-nodes", rc.sbm.n_nodes);
        sub->add_option("--sbm-communities", rc.sbm.n_communities);
        sub->add_option("--sbm-p-in", rc.sbm.p_in);
        sub->add_option("--sbm-p-out", rc.sbm.p_out);
        sub->add_option("--sbm-snapshots", rc.sbm.n_snapshots);
        sub->add_option("--sbm-drift", rc.sbm.drift_fraction);
        sub->add_option("--sbm-noise-std", rc.sbm.noise_std);
        sub->add_option("--sbm-seed", rc.sbm.seed);
    };

    CLI::App* c_generate = app.add_subcommand("generate", "sample a drifting SBM dataset");
    CLI::App* c_train = app.add_subcommand("train", "train and evaluate");
    CLI::App* c_eval = app.add_subcommand("eval", "evaluate a checkpoint");
    CLI::App* c_verify = app.add_subcommand("verify-lemmas", "run the lemma verifiers");
    CLI::App* c_response = app.add_subcommand("filter-response", "emit learned filter response CSV");
    CLI::App* c_wavelet = app.add_subcommand("wavelet", "emit wavelet vector CSVs");
    CLI::App* c_bench = app.add_subcommand("bench", "forward-pass scaling benchmark");
    for (CLI::App* sub : {c_generate, c_train, c_eval, c_verify, c_response, c_wavelet, c_bench}) {
        add_common(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "ERROR cli: " << e.what() << "\n";
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    for (const auto& name : {"--task", "--epochs", "--seed", "--runs", "--filter-order",
                             "--scales", "--aggregator", "--spectral"}) {
        if (sub->count(name) > 0) flags_set.insert(std::string(name).substr(2));
    }
    // normalise: flags_set uses config-file key names
    if (flags_set.count("filter-order")) flags_set.insert("filter-order");

    try {
        apply_config_file(rc, flags_set);
        if (!scales_csv.empty()) rc.model.scales = parse_scales(scales_csv);
        if (!aggregator_name_str.empty()) rc.model.aggregator = parse_aggregator(aggregator_name_str);
        try {
            rc.model.validate();
            rc.sbm.validate();
        } catch (const std::exception& e) {
            config_error(e.what());
        }

        if (const char* threads = std::getenv("DEFT_THREADS")) {
            Eigen::setNbThreads(std::max(1, std::atoi(threads)));
        }

        const std::string name = sub->get_name();
        if (name == "generate") return cmd_generate(rc);
        if (name == "train") return cmd_train(rc);
        if (name == "eval") return cmd_eval(rc);
        if (name == "verify-lemmas") return cmd_verify_lemmas(rc);
        if (name == "filter-response") return cmd_filter_response(rc);
        if (name == "wavelet") return cmd_wavelet(rc);
        if (name == "bench") return cmd_bench(rc);
        config_error("unknown command");
    } catch (const std::exception& e) {
        std::string msg = e.what();
        // library errors are prefixed "<module>: <message>"
        auto colon = msg.find(": ");
        std::string module = colon == std::string::npos ? "cli" : msg.substr(0, colon);
        std::string rest = colon == std::string::npos ? msg : msg.substr(colon + 2);
        if (module.find(' ') != std::string::npos) {
            module = "cli";
            rest = msg;
        }
        std::cerr << "ERROR " << module << ": " << rest << "\n";
        return 1;
    }
    return 0;
}
