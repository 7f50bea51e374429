#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>
#include <tuple>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "pam/errors.hpp"
#include "pam/parallel.hpp"

namespace pam {

template <typename T>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
    static constexpr bool exact = false;
    // Largest integer magnitude a double represents exactly (2^53). Values at
    // or above it may have been rounded.
    static constexpr double exact_bound = 9007199254740992.0;
    static bool is_zero(double v) { return v == 0.0; }
    static bool exceeds_exact_bound(double v) { return v >= exact_bound; }
    static double from_u64(uint64_t v) { return static_cast<double>(v); }
    static constexpr const char* mode_name = "float";
};

template <>
struct ScalarTraits<mpz_class> {
    static constexpr bool exact = true;
    static bool is_zero(const mpz_class& v) { return sgn(v) == 0; }
    static bool exceeds_exact_bound(const mpz_class&) { return false; }
    static mpz_class from_u64(uint64_t v) {
        mpz_class out;
        mpz_import(out.get_mpz_t(), 1, -1, sizeof(v), 0, 0, &v);
        return out;
    }
    static constexpr const char* mode_name = "int";
};

// Square sparse matrix in compressed-sparse-row form. Column indices are
// strictly increasing within each row; no explicit zeros are stored.
template <typename T>
struct CsrMatrix {
    uint32_t n = 0;
    std::vector<int64_t> row_ptr;  // size n + 1
    std::vector<uint32_t> col;
    std::vector<T> val;

    CsrMatrix() : row_ptr(1, 0) {}
    explicit CsrMatrix(uint32_t dim) : n(dim), row_ptr(dim + 1, 0) {}

    int64_t nnz() const { return static_cast<int64_t>(col.size()); }

    int64_t row_begin(uint32_t i) const { return row_ptr[i]; }
    int64_t row_end(uint32_t i) const { return row_ptr[i + 1]; }

    // Stored value at (i, j), or zero when absent. O(log row-degree).
    T at(uint32_t i, uint32_t j) const {
        auto first = col.begin() + row_ptr[i];
        auto last = col.begin() + row_ptr[i + 1];
        auto it = std::lower_bound(first, last, j);
        if (it != last && *it == j) return val[it - col.begin()];
        return T{};
    }

    bool operator==(const CsrMatrix& other) const {
        return n == other.n && row_ptr == other.row_ptr && col == other.col && val == other.val;
    }

    // Sorted, in-range, strictly increasing columns per row, no stored zeros.
    bool well_formed() const {
        if (row_ptr.size() != static_cast<std::size_t>(n) + 1) return false;
        if (row_ptr.front() != 0 || row_ptr.back() != nnz()) return false;
        if (col.size() != val.size()) return false;
        for (uint32_t i = 0; i < n; ++i) {
            if (row_ptr[i] > row_ptr[i + 1]) return false;
            for (int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
                if (col[k] >= n) return false;
                if (k > row_ptr[i] && col[k] <= col[k - 1]) return false;
                if (ScalarTraits<T>::is_zero(val[k])) return false;
            }
        }
        return true;
    }

    CsrMatrix transposed() const {
        CsrMatrix t(n);
        t.row_ptr.assign(n + 1, 0);
        for (uint32_t c : col) ++t.row_ptr[c + 1];
        for (uint32_t i = 0; i < n; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
        t.col.resize(col.size());
        t.val.resize(col.size());
        std::vector<int64_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
        for (uint32_t i = 0; i < n; ++i) {
            for (int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
                int64_t pos = cursor[col[k]]++;
                t.col[pos] = i;
                t.val[pos] = val[k];
            }
        }
        return t;
    }
};

// Builds a CSR matrix from unordered (row, col, value) entries. Entries that
// share a coordinate are summed; resulting zeros are dropped.
template <typename T>
CsrMatrix<T> csr_from_coo(uint32_t n, std::vector<std::tuple<uint32_t, uint32_t, T>> entries) {
    for (const auto& [i, j, v] : entries) {
        if (i >= n || j >= n) {
            throw ArgumentError("coordinate (" + std::to_string(i) + ", " + std::to_string(j) +
                                ") outside a " + std::to_string(n) + "-dimensional matrix");
        }
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    CsrMatrix<T> m(n);
    m.row_ptr.assign(n + 1, 0);
    std::size_t k = 0;
    while (k < entries.size()) {
        auto [i, j, v] = entries[k++];
        while (k < entries.size() && std::get<0>(entries[k]) == i && std::get<1>(entries[k]) == j) {
            v += std::get<2>(entries[k++]);
        }
        if (ScalarTraits<T>::is_zero(v)) continue;
        m.col.push_back(j);
        m.val.push_back(std::move(v));
        ++m.row_ptr[i + 1];
    }
    for (uint32_t i = 0; i < n; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
    return m;
}

struct SpGemmInfo {
    bool overflow = false;  // float only: some result value reached 2^53
};

// C = A * B, row-wise Gustavson with a dense accumulator per row.
//
// Two phases: an exact symbolic pass counts the result pattern, then the
// numeric pass fills preallocated storage. Output rows are partitioned across
// workers; each row is accumulated in a fixed traversal order (A's row in CSR
// order, B's rows in CSR order), so the result is bit-identical for any
// thread count. Assumes a cancellation-free semiring: with strictly positive
// inputs (every PAM), an accumulated entry can never come out zero.
template <typename T>
CsrMatrix<T> multiply(const CsrMatrix<T>& a, const CsrMatrix<T>& b, unsigned threads = 0,
                      SpGemmInfo* info = nullptr) {
    if (a.n != b.n) throw ArgumentError("dimension mismatch in sparse multiply");
    const uint32_t n = a.n;
    CsrMatrix<T> c(n);

    constexpr uint32_t kUnseen = std::numeric_limits<uint32_t>::max();
    std::vector<int64_t> counts(n, 0);

    parallel_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<uint32_t> marker(n, kUnseen);
        for (std::size_t i = begin; i < end; ++i) {
            int64_t count = 0;
            for (int64_t ka = a.row_ptr[i]; ka < a.row_ptr[i + 1]; ++ka) {
                uint32_t j = a.col[ka];
                for (int64_t kb = b.row_ptr[j]; kb < b.row_ptr[j + 1]; ++kb) {
                    uint32_t cc = b.col[kb];
                    if (marker[cc] != static_cast<uint32_t>(i)) {
                        marker[cc] = static_cast<uint32_t>(i);
                        ++count;
                    }
                }
            }
            counts[i] = count;
        }
    });

    c.row_ptr.resize(n + 1);
    c.row_ptr[0] = 0;
    for (uint32_t i = 0; i < n; ++i) c.row_ptr[i + 1] = c.row_ptr[i] + counts[i];
    c.col.resize(c.row_ptr[n]);
    c.val.resize(c.row_ptr[n]);

    std::atomic<bool> overflow{false};

    parallel_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<T> acc(n);
        std::vector<uint32_t> marker(n, kUnseen);
        std::vector<uint32_t> touched;
        bool local_overflow = false;
        for (std::size_t i = begin; i < end; ++i) {
            touched.clear();
            for (int64_t ka = a.row_ptr[i]; ka < a.row_ptr[i + 1]; ++ka) {
                uint32_t j = a.col[ka];
                const T& av = a.val[ka];
                for (int64_t kb = b.row_ptr[j]; kb < b.row_ptr[j + 1]; ++kb) {
                    uint32_t cc = b.col[kb];
                    if (marker[cc] != static_cast<uint32_t>(i)) {
                        marker[cc] = static_cast<uint32_t>(i);
                        acc[cc] = av * b.val[kb];
                        touched.push_back(cc);
                    } else {
                        acc[cc] += av * b.val[kb];
                    }
                }
            }
            std::sort(touched.begin(), touched.end());
            int64_t pos = c.row_ptr[i];
            for (uint32_t cc : touched) {
                if (ScalarTraits<T>::exceeds_exact_bound(acc[cc])) local_overflow = true;
                c.col[pos] = cc;
                c.val[pos] = std::move(acc[cc]);
                ++pos;
            }
        }
        if (local_overflow) overflow.store(true, std::memory_order_relaxed);
    });

    if (info) info->overflow = overflow.load();
    return c;
}

// A + A^T with the diagonal kept once: expands triangular storage of an
// undirected graph into the full symmetric matrix.
template <typename T>
CsrMatrix<T> symmetrized(const CsrMatrix<T>& a) {
    std::vector<std::tuple<uint32_t, uint32_t, T>> entries;
    entries.reserve(static_cast<std::size_t>(a.nnz()) * 2);
    for (uint32_t i = 0; i < a.n; ++i) {
        for (int64_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
            entries.emplace_back(i, a.col[k], a.val[k]);
            if (a.col[k] != i) entries.emplace_back(a.col[k], i, a.val[k]);
        }
    }
    return csr_from_coo(a.n, std::move(entries));
}

}  // namespace pam
