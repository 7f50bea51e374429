#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pam/errors.hpp"
#include "pam/graph.hpp"
#include "pam/pam_matrix.hpp"
#include "pam/parallel.hpp"

namespace pam {

// Feature vector of a node pair over a depth-k power stack, laid out
// [Path(h,t) | Path(t,h) | R(h) | R(t)], length 4k. Entries are categorical:
// only equality between them is ever used. Node-profile products are taken in
// floating point, so enormous products saturate to +inf; saturated dimensions
// compare equal to each other.
struct PairFeature {
    std::vector<double> values;
    uint32_t head = 0;
    uint32_t tail = 0;
};

namespace detail {

inline double to_double(double v) { return v; }
inline double to_double(const mpz_class& v) { return v.get_d(); }

template <typename T>
void require_sum_stack(const PowerStack<T>& stack) {
    if (stack.matrices.empty()) throw StateError("empty power stack");
    if (stack.aggregation() != Aggregation::sum) {
        throw ArgumentError("pair features require a sum-aggregation stack");
    }
}

// Per-hop products of the non-zero entries of every row and every column,
// multiplied in a fixed order (row-major) so results are reproducible.
struct ProfileTables {
    std::vector<std::vector<double>> row;  // [hop - 1][node]
    std::vector<std::vector<double>> col;

    template <typename T>
    static ProfileTables build(const PowerStack<T>& stack) {
        const uint32_t n = stack.dimension();
        ProfileTables t;
        t.row.assign(stack.max_hop, std::vector<double>(n, 1.0));
        t.col.assign(stack.max_hop, std::vector<double>(n, 1.0));
        for (uint32_t hop = 1; hop <= stack.max_hop; ++hop) {
            const auto& m = stack.at_hop(hop).storage;
            auto& r = t.row[hop - 1];
            auto& c = t.col[hop - 1];
            for (uint32_t i = 0; i < n; ++i) {
                for (int64_t k = m.row_begin(i); k < m.row_end(i); ++k) {
                    double v = to_double(m.val[k]);
                    r[i] *= v;
                    c[m.col[k]] *= v;
                }
            }
        }
        return t;
    }
};

}  // namespace detail

// Feature of one pair, computed directly from the stack. Columns are read
// through each matrix's transpose mirror, which is built on first use.
template <typename T>
PairFeature pair_feature(const PowerStack<T>& stack, uint32_t h, uint32_t t) {
    detail::require_sum_stack(stack);
    const uint32_t n = stack.dimension();
    if (h >= n || t >= n) {
        throw ArgumentError("pair (" + std::to_string(h) + ", " + std::to_string(t) +
                            ") outside [0, " + std::to_string(n) + ")");
    }
    const uint32_t k = stack.max_hop;
    PairFeature f;
    f.head = h;
    f.tail = t;
    f.values.assign(4 * static_cast<std::size_t>(k), 0.0);
    for (uint32_t hop = 1; hop <= k; ++hop) {
        const auto& pm = stack.at_hop(hop);
        f.values[hop - 1] = detail::to_double(pm.cell(h, t));
        f.values[k + hop - 1] = detail::to_double(pm.cell(t, h));
        const auto& s = pm.storage;
        double rp = 1.0;
        for (int64_t e = s.row_begin(h); e < s.row_end(h); ++e) rp *= detail::to_double(s.val[e]);
        f.values[2 * k + hop - 1] = rp;
        auto tr = pm.transposed();
        double cp = 1.0;
        for (int64_t e = tr->row_begin(t); e < tr->row_end(t); ++e) cp *= detail::to_double(tr->val[e]);
        f.values[3 * k + hop - 1] = cp;
    }
    return f;
}

class NeighborIndex;

template <typename T>
NeighborIndex build_index(const PowerStack<T>& stack, const std::vector<Triple>& training,
                          bool one_hot = true);

// Exact nearest-neighbor index over training pair features. Distance is the
// number of feature dimensions whose categorical values differ; one-hot mode
// compares integer codes from per-dimension vocabularies instead of raw
// values (the orderings are identical, codes are just cheaper to compare).
class NeighborIndex {
public:
    static constexpr uint32_t kUnknownCode = UINT32_MAX;

    std::size_t sample_count() const { return labels_.size(); }
    uint32_t feature_length() const { return feature_length_; }
    uint32_t relation_count() const { return relation_count_; }
    uint32_t max_hop() const { return max_hop_; }
    uint32_t dimension() const { return dimension_; }
    bool one_hot() const { return one_hot_; }
    const std::vector<int64_t>& relation_frequency() const { return frequency_; }
    const std::vector<uint32_t>& labels() const { return labels_; }
    const std::vector<std::pair<uint32_t, uint32_t>>& pairs() const { return pairs_; }
    const std::vector<std::map<double, uint32_t>>& vocabularies() const { return vocabularies_; }

    // Query-side feature from stored node profiles plus per-hop path lookups.
    template <typename T>
    std::vector<double> query_feature(const PowerStack<T>& stack, uint32_t h, uint32_t t) const {
        check_stack(stack);
        const uint32_t k = max_hop_;
        std::vector<double> q(feature_length_, 0.0);
        for (uint32_t hop = 1; hop <= k; ++hop) {
            const auto& pm = stack.at_hop(hop);
            q[hop - 1] = detail::to_double(pm.cell(h, t));
            q[k + hop - 1] = detail::to_double(pm.cell(t, h));
            q[2 * k + hop - 1] = profiles_.row[hop - 1][h];
            q[3 * k + hop - 1] = profiles_.col[hop - 1][t];
        }
        return q;
    }

    std::vector<uint32_t> encode(const std::vector<double>& feature) const {
        std::vector<uint32_t> codes(feature.size(), kUnknownCode);
        for (std::size_t d = 0; d < feature.size(); ++d) {
            auto it = vocabularies_[d].find(feature[d]);
            if (it != vocabularies_[d].end()) codes[d] = it->second;
        }
        return codes;
    }

    const double* raw_sample(std::size_t i) const { return raw_.data() + i * feature_length_; }
    const uint32_t* coded_sample(std::size_t i) const { return codes_.data() + i * feature_length_; }

    template <typename T>
    void check_stack(const PowerStack<T>& stack) const {
        detail::require_sum_stack(stack);
        if (stack.dimension() != dimension_ || stack.max_hop != max_hop_) {
            throw ArgumentError("power stack does not match the one this index was built from");
        }
    }

private:
    template <typename T>
    friend NeighborIndex build_index(const PowerStack<T>&, const std::vector<Triple>&, bool);

    uint32_t feature_length_ = 0;
    uint32_t relation_count_ = 0;
    uint32_t max_hop_ = 0;
    uint32_t dimension_ = 0;
    bool one_hot_ = false;
    std::vector<double> raw_;      // sample features, row-major
    std::vector<uint32_t> codes_;  // vocabulary codes, row-major (one-hot mode)
    std::vector<uint32_t> labels_;
    std::vector<std::pair<uint32_t, uint32_t>> pairs_;
    std::vector<int64_t> frequency_;  // per relation-id label count
    std::vector<std::map<double, uint32_t>> vocabularies_;
    detail::ProfileTables profiles_;
};

// One labeled sample per training triple. Duplicate pairs with different
// relations become distinct samples sharing a feature vector.
template <typename T>
NeighborIndex build_index(const PowerStack<T>& stack, const std::vector<Triple>& training,
                          bool one_hot) {
    detail::require_sum_stack(stack);
    const uint32_t n = stack.dimension();
    const uint32_t r_count = static_cast<uint32_t>(stack.relation_count());

    NeighborIndex index;
    index.feature_length_ = 4 * stack.max_hop;
    index.relation_count_ = r_count;
    index.max_hop_ = stack.max_hop;
    index.dimension_ = n;
    index.one_hot_ = one_hot;
    index.frequency_.assign(r_count, 0);
    index.profiles_ = detail::ProfileTables::build(stack);
    index.vocabularies_.assign(index.feature_length_, {});

    const uint32_t k = stack.max_hop;
    index.raw_.reserve(training.size() * index.feature_length_);
    index.labels_.reserve(training.size());
    index.pairs_.reserve(training.size());
    for (const auto& tr : training) {
        if (tr.head >= n || tr.tail >= n) {
            throw ArgumentError("training entity outside the stack dimension");
        }
        if (tr.relation >= r_count) {
            throw ArgumentError("training relation " + std::to_string(tr.relation) +
                                " outside the mapped range");
        }
        for (uint32_t hop = 1; hop <= k; ++hop) {
            const auto& pm = stack.at_hop(hop);
            index.raw_.push_back(detail::to_double(pm.cell(tr.head, tr.tail)));
        }
        for (uint32_t hop = 1; hop <= k; ++hop) {
            const auto& pm = stack.at_hop(hop);
            index.raw_.push_back(detail::to_double(pm.cell(tr.tail, tr.head)));
        }
        for (uint32_t hop = 1; hop <= k; ++hop) {
            index.raw_.push_back(index.profiles_.row[hop - 1][tr.head]);
        }
        for (uint32_t hop = 1; hop <= k; ++hop) {
            index.raw_.push_back(index.profiles_.col[hop - 1][tr.tail]);
        }
        index.labels_.push_back(tr.relation);
        index.pairs_.emplace_back(tr.head, tr.tail);
        index.frequency_[tr.relation] += 1;
    }

    // Vocabulary codes by first appearance, walking samples in input order.
    index.codes_.assign(index.raw_.size(), NeighborIndex::kUnknownCode);
    for (std::size_t s = 0; s < index.labels_.size(); ++s) {
        for (uint32_t d = 0; d < index.feature_length_; ++d) {
            double v = index.raw_[s * index.feature_length_ + d];
            auto [it, inserted] =
                index.vocabularies_[d].try_emplace(v, static_cast<uint32_t>(index.vocabularies_[d].size()));
            index.codes_[s * index.feature_length_ + d] = it->second;
        }
    }
    return index;
}

namespace detail {

inline uint32_t hamming_bounded(const double* a, const double* b, uint32_t len, uint32_t bound) {
    uint32_t d = 0;
    for (uint32_t i = 0; i < len; ++i) {
        d += (a[i] != b[i]);
        if (d >= bound) return d;
    }
    return d;
}

inline uint32_t hamming_bounded(const uint32_t* a, const uint32_t* b, uint32_t len, uint32_t bound) {
    uint32_t d = 0;
    for (uint32_t i = 0; i < len; ++i) {
        d += (a[i] != b[i]);
        if (d >= bound) return d;
    }
    return d;
}

struct Neighbor {
    uint32_t distance;
    uint32_t sample;
};

// Top-k scan over all samples: keeps the k smallest (distance, sample-index)
// pairs, so ties always resolve to the earlier sample.
template <typename Dist>
std::vector<Neighbor> nearest(std::size_t samples, uint32_t k_neighbors, Dist&& distance_to) {
    std::vector<Neighbor> best;
    best.reserve(k_neighbors + 1);
    for (std::size_t i = 0; i < samples; ++i) {
        uint32_t bound = best.size() == k_neighbors ? best.back().distance : UINT32_MAX;
        uint32_t d = distance_to(i, bound);
        if (best.size() == k_neighbors && d >= bound) continue;
        auto pos = std::upper_bound(best.begin(), best.end(), d,
                                    [](uint32_t v, const Neighbor& nb) { return v < nb.distance; });
        best.insert(pos, Neighbor{d, static_cast<uint32_t>(i)});
        if (best.size() > k_neighbors) best.pop_back();
    }
    return best;
}

}  // namespace detail

// Total order over all relation-ids for the pair (h, t): the k nearest
// training samples vote for their label with weight 1/(1 + distance); voted
// relations rank by score (higher first, lower id on ties), and relations
// with no votes follow, ordered by training frequency, carrying a negative
// score derived from that prior. Set exclude_exact to ignore training
// samples whose pair is exactly (h, t).
template <typename T>
std::vector<std::pair<uint32_t, double>> rank_relations(const NeighborIndex& index,
                                                        const PowerStack<T>& stack, uint32_t h,
                                                        uint32_t t, uint32_t k_neighbors,
                                                        bool exclude_exact = false) {
    if (index.sample_count() == 0) throw StateError("neighbor index is empty");
    if (k_neighbors < 1) throw ArgumentError("k_neighbors must be at least 1");
    const uint32_t n = index.dimension();
    if (h >= n || t >= n) {
        throw ArgumentError("pair (" + std::to_string(h) + ", " + std::to_string(t) +
                            ") outside [0, " + std::to_string(n) + ")");
    }

    const std::vector<double> q = index.query_feature(stack, h, t);
    const uint32_t len = index.feature_length();
    const auto skip = [&](std::size_t i) {
        return exclude_exact && index.pairs()[i] == std::make_pair(h, t);
    };

    std::vector<detail::Neighbor> best;
    if (index.one_hot()) {
        const std::vector<uint32_t> qc = index.encode(q);
        best = detail::nearest(index.sample_count(), k_neighbors, [&](std::size_t i, uint32_t bound) {
            if (skip(i)) return UINT32_MAX;
            return detail::hamming_bounded(qc.data(), index.coded_sample(i), len, bound);
        });
    } else {
        best = detail::nearest(index.sample_count(), k_neighbors, [&](std::size_t i, uint32_t bound) {
            if (skip(i)) return UINT32_MAX;
            return detail::hamming_bounded(q.data(), index.raw_sample(i), len, bound);
        });
    }
    // An all-excluded scan can leave UINT32_MAX placeholders; drop them.
    while (!best.empty() && best.back().distance == UINT32_MAX) best.pop_back();

    const uint32_t r_count = index.relation_count();
    std::vector<double> votes(r_count, 0.0);
    for (const auto& nb : best) {
        votes[index.labels()[nb.sample]] += 1.0 / (1.0 + static_cast<double>(nb.distance));
    }

    std::vector<std::pair<uint32_t, double>> voted, unvoted;
    int64_t total = static_cast<int64_t>(index.sample_count());
    for (uint32_t r = 0; r < r_count; ++r) {
        if (votes[r] > 0.0) {
            voted.emplace_back(r, votes[r]);
        } else {
            // Strictly below every vote weight, ordered by the prior.
            double prior = static_cast<double>(index.relation_frequency()[r]) / static_cast<double>(total);
            unvoted.emplace_back(r, prior - 1.0);
        }
    }
    auto by_score = [](const std::pair<uint32_t, double>& a, const std::pair<uint32_t, double>& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    };
    std::sort(voted.begin(), voted.end(), by_score);
    std::sort(unvoted.begin(), unvoted.end(), by_score);
    voted.insert(voted.end(), unvoted.begin(), unvoted.end());
    return voted;
}

struct EvalReport {
    double mrr = 0.0;
    std::map<uint32_t, double> hits_at;
    int64_t evaluated = 0;
    int64_t skipped = 0;
    uint32_t k_neighbors = 0;
    uint32_t max_hop = 0;
};

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json hits = nlohmann::json::object();
    for (const auto& [c, v] : r.hits_at) hits[std::to_string(c)] = v;
    return nlohmann::json{{"mrr", r.mrr},           {"hits", hits},
                          {"evaluated", r.evaluated}, {"skipped", r.skipped},
                          {"k_neighbors", r.k_neighbors}, {"max_hop", r.max_hop}};
}

// Ranks every test triple's ground-truth relation; 1/rank feeds MRR and
// rank <= c feeds Hits@c. Triples whose entities (or relation) fall outside
// the index vocabulary are counted as skipped. Queries are independent, so
// they fan out across threads; the reduction order is fixed.
template <typename T>
EvalReport evaluate(const NeighborIndex& index, const PowerStack<T>& stack,
                    const std::vector<Triple>& test, uint32_t k_neighbors,
                    const std::vector<uint32_t>& cutoffs, unsigned threads = 0,
                    bool exclude_exact = false) {
    if (test.empty()) throw ArgumentError("test set is empty");
    if (cutoffs.empty()) throw ArgumentError("cutoffs list is empty");
    if (index.sample_count() == 0) throw StateError("neighbor index is empty");
    if (k_neighbors < 1) throw ArgumentError("k_neighbors must be at least 1");
    index.check_stack(stack);

    const uint32_t n = index.dimension();
    std::vector<int64_t> ranks(test.size(), 0);  // 0 = skipped
    parallel_chunks(test.size(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const Triple& tr = test[i];
            if (tr.head >= n || tr.tail >= n || tr.relation >= index.relation_count()) continue;
            auto ranking = rank_relations(index, stack, tr.head, tr.tail, k_neighbors, exclude_exact);
            for (std::size_t pos = 0; pos < ranking.size(); ++pos) {
                if (ranking[pos].first == tr.relation) {
                    ranks[i] = static_cast<int64_t>(pos) + 1;
                    break;
                }
            }
        }
    });

    EvalReport report;
    report.k_neighbors = k_neighbors;
    report.max_hop = stack.max_hop;
    for (uint32_t c : cutoffs) report.hits_at[c] = 0.0;
    for (int64_t rank : ranks) {
        if (rank == 0) {
            ++report.skipped;
            continue;
        }
        ++report.evaluated;
        report.mrr += 1.0 / static_cast<double>(rank);
        for (auto& [c, v] : report.hits_at) {
            if (rank <= static_cast<int64_t>(c)) v += 1.0;
        }
    }
    if (report.evaluated > 0) {
        report.mrr /= static_cast<double>(report.evaluated);
        for (auto& [c, v] : report.hits_at) v /= static_cast<double>(report.evaluated);
    }
    return report;
}

// Picks the neighbor count with the best validation MRR (smaller k wins ties).
template <typename T>
uint32_t select_k_neighbors(const NeighborIndex& index, const PowerStack<T>& stack,
                            const std::vector<Triple>& validation,
                            const std::vector<uint32_t>& grid = {1, 3, 5, 10, 20},
                            unsigned threads = 0) {
    if (grid.empty()) throw ArgumentError("neighbor grid is empty");
    if (validation.empty()) throw ArgumentError("validation set is empty");
    uint32_t best_k = grid.front();
    double best_mrr = -1.0;
    for (uint32_t k : grid) {
        EvalReport r = evaluate(index, stack, validation, k, {1}, threads);
        if (r.mrr > best_mrr) {
            best_mrr = r.mrr;
            best_k = k;
        }
    }
    return best_k;
}

}  // namespace pam
