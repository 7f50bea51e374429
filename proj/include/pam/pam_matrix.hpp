#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pam/csr.hpp"
#include "pam/errors.hpp"
#include "pam/graph.hpp"
#include "pam/primes.hpp"

namespace pam {

enum class Aggregation { product, sum };

inline const char* to_string(Aggregation a) { return a == Aggregation::product ? "product" : "sum"; }

namespace detail {

// Lazily built transpose, shared between copies (the underlying data is
// immutable once a matrix is built, so sharing is safe).
template <typename T>
class TransposeCache {
public:
    TransposeCache() = default;
    TransposeCache(const TransposeCache& other) : cached_(other.snapshot()) {}
    TransposeCache& operator=(const TransposeCache& other) {
        if (this != &other) {
            std::lock_guard<std::mutex> lock(mutex_);
            cached_ = other.snapshot();
        }
        return *this;
    }
    TransposeCache(TransposeCache&& other) noexcept : cached_(other.snapshot()) {}
    TransposeCache& operator=(TransposeCache&& other) noexcept {
        if (this != &other) {
            std::lock_guard<std::mutex> lock(mutex_);
            cached_ = other.snapshot();
        }
        return *this;
    }

    std::shared_ptr<const CsrMatrix<T>> get(const CsrMatrix<T>& source) const {
        std::lock_guard<std::mutex> lock(mutex_);
        if (!cached_) cached_ = std::make_shared<const CsrMatrix<T>>(source.transposed());
        return cached_;
    }

    void reset() {
        std::lock_guard<std::mutex> lock(mutex_);
        cached_.reset();
    }

private:
    std::shared_ptr<const CsrMatrix<T>> snapshot() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return cached_;
    }
    mutable std::mutex mutex_;
    mutable std::shared_ptr<const CsrMatrix<T>> cached_;
};

}  // namespace detail

template <typename T>
struct RowProfile {
    int64_t count = 0;
    std::vector<T> values;
};

// One PAM: an N x N sparse matrix of prime aggregates at a fixed hop depth.
// T selects the scalar mode: mpz_class for exact integers, double for float64
// (where the overflow flag reports values at or past 2^53).
template <typename T>
class PamMatrix {
public:
    CsrMatrix<T> storage;
    Aggregation aggregation = Aggregation::sum;
    uint32_t hop = 1;
    // Upper-triangular storage convention for an undirected graph. Power
    // computation symmetrizes first; queries see the stored triangle.
    bool triangular_undirected = false;
    bool overflow = false;
    bool density_warning = false;
    std::shared_ptr<const RelationMapping> mapping;

    uint32_t dimension() const { return storage.n; }
    int64_t nnz() const { return storage.nnz(); }

    T cell(uint32_t i, uint32_t j) const {
        check_node(i);
        check_node(j);
        return storage.at(i, j);
    }

    // Occurrence count of each distinct non-zero value.
    std::map<T, int64_t> value_histogram() const {
        std::map<T, int64_t> hist;
        for (const T& v : storage.val) ++hist[v];
        return hist;
    }

    // Outgoing edge values of node i, in column order.
    RowProfile<T> row_profile(uint32_t i) const {
        check_node(i);
        RowProfile<T> p;
        p.count = storage.row_end(i) - storage.row_begin(i);
        p.values.assign(storage.val.begin() + storage.row_begin(i),
                        storage.val.begin() + storage.row_end(i));
        return p;
    }

    // Incoming edge values of node j, served by a lazily built CSC mirror.
    RowProfile<T> col_profile(uint32_t j) const {
        check_node(j);
        auto t = transpose_.get(storage);
        RowProfile<T> p;
        p.count = t->row_end(j) - t->row_begin(j);
        p.values.assign(t->val.begin() + t->row_begin(j), t->val.begin() + t->row_end(j));
        return p;
    }

    std::shared_ptr<const CsrMatrix<T>> transposed() const { return transpose_.get(storage); }

private:
    void check_node(uint32_t i) const {
        if (i >= storage.n) {
            throw ArgumentError("node " + std::to_string(i) + " outside [0, " +
                                std::to_string(storage.n) + ")");
        }
    }
    detail::TransposeCache<T> transpose_;
};

// One-hop PAM of a graph: cell (i, j) aggregates p_r over the relations
// connecting i to j, by product or by sum. Undirected graphs populate the
// upper triangle only (triples arrive in canonical head <= tail orientation).
template <typename T>
PamMatrix<T> build_pam(const KnowledgeGraph& graph, const RelationMapping& mapping, Aggregation agg) {
    if (graph.relation_count > mapping.size()) {
        throw MappingError("graph has " + std::to_string(graph.relation_count) +
                           " relations but the mapping covers only " + std::to_string(mapping.size()));
    }
    std::vector<std::tuple<uint32_t, uint32_t, T>> entries;
    entries.reserve(graph.triples.size());

    if (agg == Aggregation::sum) {
        for (const auto& t : graph.triples) {
            entries.emplace_back(t.head, t.tail, ScalarTraits<T>::from_u64(mapping.prime_for(t.relation)));
        }
    } else {
        // Group parallel edges per (head, tail) and take the prime product.
        std::map<std::pair<uint32_t, uint32_t>, T> products;
        for (const auto& t : graph.triples) {
            uint64_t p = mapping.prime_for(t.relation);
            auto key = std::make_pair(t.head, t.tail);
            auto it = products.find(key);
            if (it == products.end()) {
                products.emplace(key, ScalarTraits<T>::from_u64(p));
            } else {
                it->second *= ScalarTraits<T>::from_u64(p);
            }
        }
        for (auto& [key, v] : products) {
            entries.emplace_back(key.first, key.second, std::move(v));
        }
    }

    PamMatrix<T> m;
    m.storage = csr_from_coo(graph.node_count, std::move(entries));
    m.aggregation = agg;
    m.hop = 1;
    m.triangular_undirected = !graph.directed;
    m.mapping = std::make_shared<RelationMapping>(mapping);
    for (const T& v : m.storage.val) {
        if (ScalarTraits<T>::exceeds_exact_bound(v)) m.overflow = true;
    }
    return m;
}

struct PowerOptions {
    unsigned threads = 0;                        // 0 = all available cores
    double density_guard = 0.5;                  // warn when nnz exceeds this fraction of N^2
    std::vector<double>* hop_seconds = nullptr;  // per-hop wall clock, when wanted
};

// The ordered sequence P^1 ... P^k, sharing one mapping and scalar mode.
template <typename T>
class PowerStack {
public:
    std::vector<PamMatrix<T>> matrices;  // matrices[i] has hop i + 1
    uint32_t max_hop = 0;
    uint32_t overflow_hop = 0;  // first hop whose values reached 2^53; 0 = none

    uint32_t dimension() const { return matrices.empty() ? 0 : matrices.front().dimension(); }
    Aggregation aggregation() const { return matrices.front().aggregation; }
    const RelationMapping& mapping() const { return *matrices.front().mapping; }
    std::size_t relation_count() const { return mapping().size(); }

    const PamMatrix<T>& at_hop(uint32_t hop) const {
        if (hop < 1 || hop > max_hop) {
            throw ArgumentError("hop " + std::to_string(hop) + " outside [1, " + std::to_string(max_hop) + "]");
        }
        return matrices[hop - 1];
    }

    T cell(uint32_t hop, uint32_t i, uint32_t j) const { return at_hop(hop).cell(i, j); }
};

// P^1 ... P^max_hop by iterated sparse multiplication (each hop is needed, so
// no squaring shortcut). Undirected bases are symmetrized first; the stack
// holds the symmetrized one-hop matrix. In float64 mode overflow_hop records
// the first hop where any value reached 2^53.
template <typename T>
PowerStack<T> compute_powers(const PamMatrix<T>& base, uint32_t max_hop, PowerOptions opts = {}) {
    if (max_hop < 1) throw ArgumentError("max_hop must be at least 1");
    if (base.hop != 1) throw ArgumentError("compute_powers requires a one-hop base matrix");
    if (!base.mapping) throw StateError("base matrix carries no relation mapping");

    auto mark = std::chrono::steady_clock::now();
    auto lap = [&mark]() {
        auto now = std::chrono::steady_clock::now();
        double s = std::chrono::duration<double>(now - mark).count();
        mark = now;
        return s;
    };
    if (opts.hop_seconds) opts.hop_seconds->clear();

    PamMatrix<T> first = base;
    if (base.triangular_undirected) {
        first.storage = symmetrized(base.storage);
        first.triangular_undirected = false;
    }

    const uint32_t n = first.dimension();
    const double guard_nnz = opts.density_guard * static_cast<double>(n) * static_cast<double>(n);
    first.density_warning = static_cast<double>(first.nnz()) > guard_nnz;

    PowerStack<T> stack;
    stack.max_hop = max_hop;
    if (first.overflow) stack.overflow_hop = 1;
    stack.matrices.push_back(std::move(first));
    if (opts.hop_seconds) opts.hop_seconds->push_back(lap());

    for (uint32_t hop = 2; hop <= max_hop; ++hop) {
        const PamMatrix<T>& prev = stack.matrices.back();
        SpGemmInfo info;
        PamMatrix<T> next;
        try {
            next.storage = multiply(prev.storage, stack.matrices.front().storage, opts.threads, &info);
        } catch (const std::bad_alloc&) {
            throw ResourceError("memory exhausted computing hop " + std::to_string(hop) + " (completed " +
                                std::to_string(hop - 1) + " hops)");
        }
        next.aggregation = prev.aggregation;
        next.hop = hop;
        next.mapping = prev.mapping;
        next.overflow = info.overflow || prev.overflow;
        next.density_warning = static_cast<double>(next.nnz()) > guard_nnz;
        if (next.overflow && stack.overflow_hop == 0) stack.overflow_hop = hop;
        stack.matrices.push_back(std::move(next));
        if (opts.hop_seconds) opts.hop_seconds->push_back(lap());
    }
    return stack;
}

// Summary document for a computed stack: dimension, modes, and per-hop
// non-zero counts with overflow/density flags. Deterministic.
template <typename T>
nlohmann::json stack_manifest(const PowerStack<T>& stack) {
    nlohmann::json hops = nlohmann::json::array();
    for (const auto& m : stack.matrices) {
        hops.push_back({{"hop", m.hop},
                        {"nnz", m.nnz()},
                        {"overflow", m.overflow},
                        {"density_warning", m.density_warning}});
    }
    return nlohmann::json{{"dimension", stack.dimension()},
                          {"max_hop", stack.max_hop},
                          {"scalar", ScalarTraits<T>::mode_name},
                          {"aggregation", to_string(stack.aggregation())},
                          {"relations", stack.relation_count()},
                          {"overflow_hop", stack.overflow_hop},
                          {"hops", hops}};
}

}  // namespace pam
