#include "deft/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace deft {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line_no,
                             const std::string& what) {
    throw std::runtime_error("data_gen: parse error in " + path + " line " +
                             std::to_string(line_no) + ": " + what);
}

// Shortest round-trip representation of a double (%.17g round-trips exactly;
// try shorter forms first so files stay readable and deterministic).
std::string fmt_double(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_sig(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

struct LineReader {
    std::ifstream in;
    std::string path;
    std::size_t line_no = 0;
    std::vector<std::string> pushed;
    bool has_pushed = false;

    explicit LineReader(const std::string& p) : in(p), path(p) {
        if (!in) throw std::runtime_error("data_gen: cannot open " + p);
    }

    void push_back(std::vector<std::string> tokens) {
        pushed = std::move(tokens);
        has_pushed = true;
    }

    bool next(std::vector<std::string>& tokens) {
        if (has_pushed) {
            tokens = std::move(pushed);
            has_pushed = false;
            return true;
        }
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            std::istringstream ss(line);
            tokens.assign(std::istream_iterator<std::string>(ss),
                          std::istream_iterator<std::string>());
            if (!tokens.empty()) return true;  // blank lines skipped
        }
        return false;
    }

    std::vector<std::string> require(const std::string& what) {
        std::vector<std::string> tokens;
        if (!next(tokens)) parse_fail(path, line_no + 1, "unexpected end of file, expected " + what);
        return tokens;
    }
};

std::size_t parse_count(LineReader& r, const std::string& tok, const std::string& what) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(tok, &pos);
        if (pos != tok.size() || v < 0) throw std::invalid_argument(tok);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        parse_fail(r.path, r.line_no, "expected non-negative integer for " + what + ", got '" + tok + "'");
    }
}

double parse_real(LineReader& r, const std::string& tok, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        parse_fail(r.path, r.line_no, "expected finite number for " + what + ", got '" + tok + "'");
    }
}

}  // namespace

DynamicGraph load_snapshots(const std::string& path) {
    LineReader r(path);

    auto header = r.require("DEFT-SNAPSHOTS header");
    if (header.size() != 2 || header[0] != "DEFT-SNAPSHOTS" || header[1] != "v1") {
        parse_fail(r.path, r.line_no, "expected 'DEFT-SNAPSHOTS v1' header");
    }
    auto dims = r.require("T/N/D line");
    if (dims.size() != 6 || dims[0] != "T" || dims[2] != "N" || dims[4] != "D") {
        parse_fail(r.path, r.line_no, "expected 'T <n> N <n> D <d>'");
    }
    const std::size_t n_snapshots = parse_count(r, dims[1], "T");
    const std::size_t n_nodes = parse_count(r, dims[3], "N");
    const std::size_t feature_dim = parse_count(r, dims[5], "D");
    if (n_snapshots == 0 || n_nodes == 0) parse_fail(r.path, r.line_no, "T and N must be positive");

    DynamicGraph graph;
    graph.n_nodes = n_nodes;

    for (std::size_t t = 0; t < n_snapshots; ++t) {
        auto snap_line = r.require("SNAPSHOT directive");
        if (snap_line.size() != 2 || snap_line[0] != "SNAPSHOT") {
            parse_fail(r.path, r.line_no, "expected 'SNAPSHOT <t>'");
        }
        GraphSnapshot snap;
        snap.timestep = parse_count(r, snap_line[1], "snapshot index");

        auto e_line = r.require("E directive");
        if (e_line.size() != 2 || e_line[0] != "E") parse_fail(r.path, r.line_no, "expected 'E <count>'");
        const std::size_t n_edges = parse_count(r, e_line[1], "edge count");

        std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
        edges.reserve(2 * n_edges);
        for (std::size_t e = 0; e < n_edges; ++e) {
            auto tok = r.require("edge line");
            if (tok.size() != 3 && tok.size() != 4) {
                parse_fail(r.path, r.line_no, "expected '<src> <dst> <weight> [<label>]'");
            }
            const std::size_t u = parse_count(r, tok[0], "src");
            const std::size_t v = parse_count(r, tok[1], "dst");
            if (u >= n_nodes || v >= n_nodes) parse_fail(r.path, r.line_no, "node id out of range");
            if (u == v) parse_fail(r.path, r.line_no, "self-loop edge");
            const double w = parse_real(r, tok[2], "edge weight");
            edges.emplace_back(u, v, w);
            edges.emplace_back(v, u, w);
            if (tok.size() == 4) {
                const int label = static_cast<int>(parse_count(r, tok[3], "edge label"));
                snap.edge_labels[{std::min(u, v), std::max(u, v)}] = label;
            }
        }
        try {
            snap.adjacency = SparseMatrix::from_edge_list(n_nodes, n_nodes, edges);
        } catch (const std::exception& e) {
            parse_fail(r.path, r.line_no, e.what());
        }
        snap.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_nodes),
                                              static_cast<Eigen::Index>(feature_dim));

        // optional F / Y blocks, then either the next SNAPSHOT or EOF
        std::vector<std::string> tok;
        while (r.next(tok)) {
            if (tok[0] == "SNAPSHOT") {
                r.push_back(tok);
                break;
            }
            if (tok[0] == "F") {
                if (tok.size() != 2) parse_fail(r.path, r.line_no, "expected 'F <count>'");
                const std::size_t rows = parse_count(r, tok[1], "feature row count");
                for (std::size_t i = 0; i < rows; ++i) {
                    auto f = r.require("feature row");
                    if (f.size() != feature_dim + 1) {
                        parse_fail(r.path, r.line_no, "expected node id plus " +
                                                          std::to_string(feature_dim) + " values");
                    }
                    const std::size_t node = parse_count(r, f[0], "node id");
                    if (node >= n_nodes) parse_fail(r.path, r.line_no, "node id out of range");
                    for (std::size_t j = 0; j < feature_dim; ++j) {
                        snap.features(static_cast<Eigen::Index>(node),
                                      static_cast<Eigen::Index>(j)) =
                            parse_real(r, f[j + 1], "feature value");
                    }
                }
            } else if (tok[0] == "Y") {
                if (tok.size() != 2) parse_fail(r.path, r.line_no, "expected 'Y <count>'");
                const std::size_t rows = parse_count(r, tok[1], "label count");
                snap.node_labels.assign(n_nodes, 0);
                for (std::size_t i = 0; i < rows; ++i) {
                    auto y = r.require("node label row");
                    if (y.size() != 2) parse_fail(r.path, r.line_no, "expected '<node> <class>'");
                    const std::size_t node = parse_count(r, y[0], "node id");
                    if (node >= n_nodes) parse_fail(r.path, r.line_no, "node id out of range");
                    snap.node_labels[node] = static_cast<int>(parse_count(r, y[1], "class id"));
                }
            } else {
                parse_fail(r.path, r.line_no, "unknown directive '" + tok[0] + "'");
            }
        }
        graph.snapshots.push_back(std::move(snap));
    }

    std::vector<std::string> extra;
    if (r.next(extra)) parse_fail(r.path, r.line_no, "more snapshots than declared");
    if (graph.snapshots.size() != n_snapshots) {
        parse_fail(r.path, r.line_no, "snapshot count mismatch");
    }
    graph.split.train_end = std::max<std::size_t>(1, (7 * n_snapshots) / 10);
    graph.split.val_end = std::min(n_snapshots, std::max(graph.split.train_end + 1,
                                                         (8 * n_snapshots) / 10));
    graph.split.test_end = n_snapshots;
    graph.validate();
    return graph;
}

void save_snapshots(const DynamicGraph& graph, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("data_gen: cannot write " + path);
    const std::size_t d = graph.snapshots.empty()
                              ? 0
                              : static_cast<std::size_t>(graph.snapshots.front().features.cols());
    out << "DEFT-SNAPSHOTS v1\n";
    out << "T " << graph.snapshots.size() << " N " << graph.n_nodes << " D " << d << "\n";
    for (const auto& snap : graph.snapshots) {
        out << "SNAPSHOT " << snap.timestep << "\n";
        std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
        for (const auto& [u, v, w] : snap.adjacency.to_edge_list()) {
            if (u < v) edges.emplace_back(u, v, w);
        }
        out << "E " << edges.size() << "\n";
        for (const auto& [u, v, w] : edges) {
            out << u << " " << v << " " << fmt_double(w);
            auto it = snap.edge_labels.find({u, v});
            if (it != snap.edge_labels.end()) out << " " << it->second;
            out << "\n";
        }
        if (snap.features.size() > 0 && !snap.features.isZero(0.0)) {
            out << "F " << snap.features.rows() << "\n";
            for (Eigen::Index i = 0; i < snap.features.rows(); ++i) {
                out << i;
                for (Eigen::Index j = 0; j < snap.features.cols(); ++j) {
                    out << " " << fmt_double(snap.features(i, j));
                }
                out << "\n";
            }
        }
        if (!snap.node_labels.empty()) {
            out << "Y " << snap.node_labels.size() << "\n";
            for (std::size_t i = 0; i < snap.node_labels.size(); ++i) {
                out << i << " " << snap.node_labels[i] << "\n";
            }
        }
    }
    if (!out) throw std::runtime_error("data_gen: write failed for " + path);
}

void save_checkpoint(const std::vector<nn::Parameter>& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("nn_core: cannot write " + path);
    out << "DEFT-CKPT v1\n";
    for (const auto& p : params) {
        const nn::Mat& v = p.tensor.value();
        out << "P " << p.name << " " << v.rows() << " " << v.cols() << "\n";
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            for (Eigen::Index j = 0; j < v.cols(); ++j) {
                out << (j ? " " : "") << fmt_double(v(i, j));
            }
            out << "\n";
        }
    }
    if (!out) throw std::runtime_error("nn_core: write failed for " + path);
}

void load_checkpoint(std::vector<nn::Parameter>& params, const std::string& path) {
    LineReader r(path);
    auto header = r.require("DEFT-CKPT header");
    if (header.size() != 2 || header[0] != "DEFT-CKPT" || header[1] != "v1") {
        parse_fail(r.path, r.line_no, "expected 'DEFT-CKPT v1' header");
    }
    std::map<std::string, nn::Mat> loaded;
    std::vector<std::string> tok;
    while (r.next(tok)) {
        if (tok.size() != 4 || tok[0] != "P") parse_fail(r.path, r.line_no, "expected 'P <name> <rows> <cols>'");
        const std::string name = tok[1];
        const std::size_t rows = parse_count(r, tok[2], "rows");
        const std::size_t cols = parse_count(r, tok[3], "cols");
        nn::Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::size_t i = 0; i < rows; ++i) {
            auto row = r.require("parameter row");
            if (row.size() != cols) parse_fail(r.path, r.line_no, "row length mismatch for " + name);
            for (std::size_t j = 0; j < cols; ++j) {
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    parse_real(r, row[j], "parameter value");
            }
        }
        if (!loaded.emplace(name, std::move(m)).second) {
            parse_fail(r.path, r.line_no, "duplicate parameter " + name);
        }
    }
    for (auto& p : params) {
        auto it = loaded.find(p.name);
        if (it == loaded.end()) {
            throw std::runtime_error("nn_core: checkpoint missing parameter " + p.name);
        }
        if (it->second.rows() != p.tensor.rows() || it->second.cols() != p.tensor.cols()) {
            throw std::runtime_error("nn_core: checkpoint shape mismatch for " + p.name);
        }
        p.tensor.value_mut() = it->second;
        loaded.erase(it);
    }
    if (!loaded.empty()) {
        throw std::runtime_error("nn_core: checkpoint has unknown parameter " +
                                 loaded.begin()->first);
    }
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cli: cannot open config file " + path);
    std::map<std::string, std::string> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("cli: config line " + std::to_string(line_no) +
                                     ": expected key=value");
        }
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t");
            auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw std::runtime_error("cli: config line " + std::to_string(line_no) + ": empty key");
        }
        if (!entries.emplace(key, value).second) {
            throw std::runtime_error("cli: config line " + std::to_string(line_no) +
                                     ": duplicate key " + key);
        }
    }
    return entries;
}

void write_config_file(const std::map<std::string, std::string>& entries,
                       const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cli: cannot write " + path);
    for (const auto& [k, v] : entries) out << k << "=" << v << "\n";
}

void write_filter_response_csv(const FilterResponseTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cli: cannot write " + path);
    out << "lambda";
    for (std::size_t j = 0; j < table.responses.size(); ++j) out << ",s_" << (j + 1);
    out << "\n";
    for (std::size_t i = 0; i < table.lambda_grid.size(); ++i) {
        out << fmt_sig(table.lambda_grid[i], 12);
        for (const auto& row : table.responses) out << "," << fmt_sig(row[i], 12);
        out << "\n";
    }
}

void write_wavelet_csv(const std::vector<double>& psi, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cli: cannot write " + path);
    out << "node,value\n";
    for (std::size_t i = 0; i < psi.size(); ++i) {
        out << i << "," << fmt_sig(psi[i], 12) << "\n";
    }
}

void write_loss_csv(const std::vector<double>& loss_per_epoch, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cli: cannot write " + path);
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < loss_per_epoch.size(); ++i) {
        out << (i + 1) << "," << fmt_sig(loss_per_epoch[i], 12) << "\n";
    }
}

void write_metrics_csv(const std::vector<std::pair<std::string, double>>& metrics,
                       const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cli: cannot write " + path);
    out << "metric,value\n";
    for (const auto& [name, value] : metrics) {
        out << name << "," << fmt_sig(value, 8) << "\n";
    }
}

}  // namespace deft
