#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pam/errors.hpp"
#include "pam/graph.hpp"
#include "pam/pam_matrix.hpp"
#include "pam/parallel.hpp"
#include "pam/rng.hpp"
#include "pam/svm.hpp"

namespace pam {

// Per-graph fingerprint: log_g[m] = sum of log(value) over the non-zero
// entries of the (m+1)-hop matrix. Exact scalar mode additionally keeps the
// raw big-integer products, whose prime factorizations are lossless.
struct GraphFeature {
    std::vector<double> log_g;
    std::vector<mpz_class> exact_g;  // empty in float mode
    bool zero_edges = false;
    uint32_t max_hop = 0;

    bool has_exact() const { return !exact_g.empty(); }
};

namespace detail {

inline double log_value(double v) { return std::log(v); }

inline double log_value(const mpz_class& v) {
    long exp2 = 0;
    double mant = mpz_get_d_2exp(&exp2, v.get_mpz_t());
    return std::log(mant) + static_cast<double>(exp2) * 0.6931471805599453;
}

}  // namespace detail

// Fingerprint of one graph from its sum-aggregation power stack. A graph
// with no edges yields the empty products: log_g all zero, flagged.
template <typename T>
GraphFeature graph_feature(const KnowledgeGraph& graph, const RelationMapping& mapping,
                           uint32_t max_hop, PowerOptions opts = {}) {
    if (graph.node_count == 0) throw ArgumentError("graph has no nodes");
    GraphFeature f;
    f.max_hop = max_hop;
    f.log_g.assign(max_hop, 0.0);
    if constexpr (ScalarTraits<T>::exact) f.exact_g.assign(max_hop, mpz_class(1));
    if (graph.triples.empty()) {
        f.zero_edges = true;
        return f;
    }
    PamMatrix<T> base = build_pam<T>(graph, mapping, Aggregation::sum);
    PowerStack<T> stack = compute_powers(base, max_hop, opts);
    for (uint32_t hop = 1; hop <= max_hop; ++hop) {
        const auto& vals = stack.at_hop(hop).storage.val;
        // Summing in sorted order makes log_g a function of the value multiset
        // alone, independent of storage layout and node numbering.
        std::vector<double> logs(vals.size());
        std::transform(vals.begin(), vals.end(), logs.begin(),
                       [](const T& v) { return detail::log_value(v); });
        std::sort(logs.begin(), logs.end());
        double acc = 0.0;
        for (double l : logs) acc += l;
        f.log_g[hop - 1] = acc;
        if constexpr (ScalarTraits<T>::exact) {
            mpz_class prod = 1;
            for (const T& v : vals) prod *= v;
            f.exact_g[hop - 1] = std::move(prod);
        }
    }
    return f;
}

// Fingerprints for a whole collection; graphs are independent, so they fan
// out across threads (each graph's own stack is computed single-threaded).
template <typename T>
std::vector<GraphFeature> collection_features(const GraphCollection& collection,
                                              const RelationMapping& mapping, uint32_t max_hop,
                                              unsigned threads = 0) {
    std::vector<GraphFeature> features(collection.size());
    parallel_chunks(collection.size(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t g = lo; g < hi; ++g) {
            features[g] = graph_feature<T>(collection.graphs[g], mapping, max_hop, {1, 0.5});
        }
    });
    return features;
}

struct KernelMatrix {
    uint32_t n = 0;
    std::vector<double> values;  // row-major, n x n
    std::string kind;            // pp-rbf | vh | pp-vh-sum
    double gamma = 0.0;          // pp-rbf only
    std::vector<uint32_t> dropped_dims;  // zero-variance feature dims left out

    double at(uint32_t a, uint32_t b) const { return values[static_cast<std::size_t>(a) * n + b]; }
    double& at(uint32_t a, uint32_t b) { return values[static_cast<std::size_t>(a) * n + b]; }
};

// RBF kernel over standardized log fingerprints. Dimensions that are
// constant across the input set carry no distance and are dropped (recorded
// in dropped_dims). The diagonal is exactly 1.
inline KernelMatrix rbf_kernel(const std::vector<GraphFeature>& features, double gamma) {
    if (features.empty()) throw ArgumentError("no features given");
    if (gamma <= 0.0) throw ArgumentError("gamma must be positive");
    const uint32_t n = static_cast<uint32_t>(features.size());
    const uint32_t dims = features.front().max_hop;
    for (const auto& f : features) {
        if (f.max_hop != dims) throw ArgumentError("features disagree on stack depth");
    }

    // Standardize per dimension over the input set (population statistics).
    std::vector<double> mean(dims, 0.0), sd(dims, 0.0);
    for (const auto& f : features) {
        for (uint32_t d = 0; d < dims; ++d) mean[d] += f.log_g[d];
    }
    for (uint32_t d = 0; d < dims; ++d) mean[d] /= n;
    for (const auto& f : features) {
        for (uint32_t d = 0; d < dims; ++d) {
            double c = f.log_g[d] - mean[d];
            sd[d] += c * c;
        }
    }
    KernelMatrix km;
    km.n = n;
    km.kind = "pp-rbf";
    km.gamma = gamma;
    std::vector<uint32_t> kept;
    for (uint32_t d = 0; d < dims; ++d) {
        sd[d] = std::sqrt(sd[d] / n);
        if (sd[d] > 0.0) kept.push_back(d);
        else km.dropped_dims.push_back(d);
    }

    std::vector<double> z(static_cast<std::size_t>(n) * kept.size());
    for (uint32_t g = 0; g < n; ++g) {
        for (std::size_t d = 0; d < kept.size(); ++d) {
            uint32_t dim = kept[d];
            z[g * kept.size() + d] = (features[g].log_g[dim] - mean[dim]) / sd[dim];
        }
    }

    km.values.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (uint32_t a = 0; a < n; ++a) {
        km.at(a, a) = 1.0;
        for (uint32_t b = a + 1; b < n; ++b) {
            double dist2 = 0.0;
            for (std::size_t d = 0; d < kept.size(); ++d) {
                double diff = z[a * kept.size() + d] - z[b * kept.size() + d];
                dist2 += diff * diff;
            }
            double v = std::exp(-gamma * dist2);
            km.at(a, b) = v;
            km.at(b, a) = v;
        }
    }
    return km;
}

// Dot product of node-label count histograms over the shared vocabulary.
inline KernelMatrix vertex_histogram_kernel(const std::vector<KnowledgeGraph>& graphs) {
    if (graphs.empty()) throw ArgumentError("no graphs given");
    uint32_t label_count = 0;
    for (std::size_t g = 0; g < graphs.size(); ++g) {
        if (!graphs[g].has_node_labels()) {
            throw ArgumentError("graph " + std::to_string(g) + " carries no node labels");
        }
        for (uint32_t l : graphs[g].node_labels) label_count = std::max(label_count, l + 1);
    }
    const uint32_t n = static_cast<uint32_t>(graphs.size());
    std::vector<double> hist(static_cast<std::size_t>(n) * label_count, 0.0);
    for (uint32_t g = 0; g < n; ++g) {
        for (uint32_t l : graphs[g].node_labels) hist[static_cast<std::size_t>(g) * label_count + l] += 1.0;
    }
    KernelMatrix km;
    km.n = n;
    km.kind = "vh";
    km.values.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (uint32_t a = 0; a < n; ++a) {
        for (uint32_t b = a; b < n; ++b) {
            double dot = 0.0;
            for (uint32_t l = 0; l < label_count; ++l) {
                dot += hist[static_cast<std::size_t>(a) * label_count + l] *
                       hist[static_cast<std::size_t>(b) * label_count + l];
            }
            km.at(a, b) = dot;
            km.at(b, a) = dot;
        }
    }
    return km;
}

// Cosine-normalizes each kernel so self-similarity is 1, then sums them.
inline KernelMatrix combine_pp_vh(const KernelMatrix& pp, const KernelMatrix& vh) {
    if (pp.n != vh.n) throw ArgumentError("kernel dimensions differ");
    auto normalized_at = [](const KernelMatrix& k, uint32_t a, uint32_t b) {
        double da = k.at(a, a), db = k.at(b, b);
        if (da <= 0.0 || db <= 0.0) {
            throw DomainError("cannot normalize " + k.kind + " kernel: graph " +
                              std::to_string(da <= 0.0 ? a : b) + " has non-positive self-similarity");
        }
        return k.at(a, b) / std::sqrt(da * db);
    };
    KernelMatrix km;
    km.n = pp.n;
    km.kind = "pp-vh-sum";
    km.gamma = pp.gamma;
    km.values.assign(static_cast<std::size_t>(km.n) * km.n, 0.0);
    for (uint32_t a = 0; a < km.n; ++a) {
        for (uint32_t b = a; b < km.n; ++b) {
            double v = normalized_at(pp, a, b) + normalized_at(vh, a, b);
            km.at(a, b) = v;
            km.at(b, a) = v;
        }
    }
    return km;
}

// Matrix Market array format, lower triangle (the file declares symmetric).
inline void save_kernel_matrix_market(const KernelMatrix& km, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "%%MatrixMarket matrix array real symmetric\n";
    out << km.n << ' ' << km.n << '\n';
    char buf[64];
    for (uint32_t j = 0; j < km.n; ++j) {
        for (uint32_t i = j; i < km.n; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", km.at(i, j));
            out << buf << '\n';
        }
    }
    out.flush();
    if (!out) throw IoError("write to " + path + " failed");
}

struct KernelCandidate {
    std::string name;
    KernelMatrix matrix;
};

struct ClassificationReport {
    std::vector<double> per_fold;
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<std::string> fold_kernel;  // inner-CV choice per outer fold
    std::vector<double> fold_c;
    uint32_t outer_folds = 0;
    uint32_t inner_folds = 0;
    uint64_t seed = 0;
};

inline nlohmann::json to_json(const ClassificationReport& r) {
    nlohmann::json choices = nlohmann::json::array();
    for (std::size_t f = 0; f < r.per_fold.size(); ++f) {
        choices.push_back({{"kernel", r.fold_kernel[f]}, {"c", r.fold_c[f]}});
    }
    return nlohmann::json{
        {"per_fold", r.per_fold},
        {"mean", r.mean},
        {"std", r.stddev},
        {"params",
         {{"outer_folds", r.outer_folds},
          {"inner_folds", r.inner_folds},
          {"seed", r.seed},
          {"fold_choices", choices}}}};
}

namespace detail {

// Stratified assignment: shuffle each class's members, deal them round-robin.
// Every fold must receive every class, otherwise downstream training sets
// could be single-class.
inline std::vector<std::vector<uint32_t>> stratified_folds(const std::vector<uint32_t>& items,
                                                           const std::vector<uint32_t>& labels,
                                                           uint32_t folds, uint64_t seed) {
    std::map<uint32_t, std::vector<uint32_t>> by_class;
    for (uint32_t item : items) by_class[labels[item]].push_back(item);
    for (const auto& [cls, members] : by_class) {
        if (members.size() < folds) {
            throw ArgumentError("stratification failed: class " + std::to_string(cls) + " has " +
                                std::to_string(members.size()) + " members for " +
                                std::to_string(folds) + " folds");
        }
    }
    SplitMix64 rng(seed);
    std::vector<std::vector<uint32_t>> out(folds);
    for (auto& [cls, members] : by_class) {
        shuffle(members, rng);
        for (std::size_t i = 0; i < members.size(); ++i) {
            out[i % folds].push_back(members[i]);
        }
    }
    return out;
}

inline double fold_accuracy(const KernelMatrix& km, const std::vector<uint32_t>& train,
                            const std::vector<uint32_t>& test, const std::vector<int>& sign,
                            double c) {
    auto kernel = [&](uint32_t a, uint32_t b) { return km.at(a, b); };
    std::vector<int> y;
    y.reserve(train.size());
    for (uint32_t i : train) y.push_back(sign[i]);
    KernelSvm svm;
    svm.train(kernel, y, train, {.c = c});
    std::size_t correct = 0;
    for (uint32_t i : test) {
        if (svm.predict(kernel, i) == sign[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace detail

// Nested stratified cross-validation: the outer folds measure accuracy, the
// inner folds pick the kernel candidate (e.g. the RBF width) and the box
// constraint. Ties keep the earliest grid position. Fully determined by seed.
inline ClassificationReport evaluate_classification(
    const std::vector<KernelCandidate>& candidates, const std::vector<uint32_t>& labels,
    const std::vector<double>& c_grid = {0.01, 0.1, 1.0, 10.0, 100.0}, uint32_t outer_folds = 5,
    uint32_t inner_folds = 3, uint64_t seed = 0) {
    if (candidates.empty()) throw ArgumentError("no kernel candidates given");
    if (c_grid.empty()) throw ArgumentError("empty regularization grid");
    if (outer_folds < 2 || inner_folds < 2) throw ArgumentError("folds must be at least 2");
    const uint32_t n = candidates.front().matrix.n;
    for (const auto& cand : candidates) {
        if (cand.matrix.n != n) throw ArgumentError("kernel candidates disagree on dimension");
    }
    if (labels.size() != n) throw ArgumentError("label count does not match kernel dimension");

    std::vector<uint32_t> classes(labels);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() != 2) {
        throw ArgumentError("expected exactly 2 classes, found " + std::to_string(classes.size()));
    }
    std::vector<int> sign(n);
    for (uint32_t i = 0; i < n; ++i) sign[i] = labels[i] == classes[1] ? 1 : -1;

    std::vector<uint32_t> all(n);
    for (uint32_t i = 0; i < n; ++i) all[i] = i;
    auto outer = detail::stratified_folds(all, labels, outer_folds, seed);

    ClassificationReport report;
    report.outer_folds = outer_folds;
    report.inner_folds = inner_folds;
    report.seed = seed;

    for (uint32_t f = 0; f < outer_folds; ++f) {
        std::vector<uint32_t> train;
        for (uint32_t g = 0; g < outer_folds; ++g) {
            if (g != f) train.insert(train.end(), outer[g].begin(), outer[g].end());
        }
        std::sort(train.begin(), train.end());
        const std::vector<uint32_t>& test = outer[f];

        auto inner = detail::stratified_folds(train, labels, inner_folds, mix_seed(seed, f + 1));
        std::size_t best_cand = 0;
        double best_c = c_grid.front();
        double best_acc = -1.0;
        for (std::size_t cand = 0; cand < candidates.size(); ++cand) {
            for (double c : c_grid) {
                double acc = 0.0;
                for (uint32_t g = 0; g < inner_folds; ++g) {
                    std::vector<uint32_t> inner_train;
                    for (uint32_t h = 0; h < inner_folds; ++h) {
                        if (h != g) inner_train.insert(inner_train.end(), inner[h].begin(), inner[h].end());
                    }
                    std::sort(inner_train.begin(), inner_train.end());
                    acc += detail::fold_accuracy(candidates[cand].matrix, inner_train, inner[g], sign, c);
                }
                acc /= inner_folds;
                if (acc > best_acc) {
                    best_acc = acc;
                    best_cand = cand;
                    best_c = c;
                }
            }
        }
        report.per_fold.push_back(
            detail::fold_accuracy(candidates[best_cand].matrix, train, test, sign, best_c));
        report.fold_kernel.push_back(candidates[best_cand].name);
        report.fold_c.push_back(best_c);
    }

    for (double a : report.per_fold) report.mean += a;
    report.mean /= report.per_fold.size();
    for (double a : report.per_fold) report.stddev += (a - report.mean) * (a - report.mean);
    report.stddev = std::sqrt(report.stddev / report.per_fold.size());
    return report;
}

inline ClassificationReport evaluate_classification(const KernelMatrix& kernel,
                                                    const std::vector<uint32_t>& labels,
                                                    const std::vector<double>& c_grid = {0.01, 0.1, 1.0,
                                                                                         10.0, 100.0},
                                                    uint32_t outer_folds = 5, uint32_t inner_folds = 3,
                                                    uint64_t seed = 0) {
    return evaluate_classification(std::vector<KernelCandidate>{{kernel.kind, kernel}}, labels, c_grid,
                                   outer_folds, inner_folds, seed);
}

// The default RBF width grid from the evaluation protocol.
inline std::vector<double> default_gamma_grid() { return {1e-3, 1e-2, 1e-1, 1.0, 10.0}; }

// RBF candidates across a gamma grid, named by their width.
inline std::vector<KernelCandidate> rbf_candidates(const std::vector<GraphFeature>& features,
                                                   const std::vector<double>& gammas) {
    std::vector<KernelCandidate> out;
    out.reserve(gammas.size());
    for (double g : gammas) {
        char name[48];
        std::snprintf(name, sizeof(name), "pp-rbf(gamma=%g)", g);
        out.push_back({name, rbf_kernel(features, g)});
    }
    return out;
}

}  // namespace pam
