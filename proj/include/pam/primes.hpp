#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <gmpxx.h>

#include "pam/errors.hpp"

namespace pam {

namespace detail {

inline uint64_t mulmod_u64(uint64_t a, uint64_t b, uint64_t m) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

inline uint64_t powmod_u64(uint64_t base, uint64_t exp, uint64_t m) {
    uint64_t result = 1 % m;
    base %= m;
    while (exp > 0) {
        if (exp & 1) result = mulmod_u64(result, base, m);
        base = mulmod_u64(base, base, m);
        exp >>= 1;
    }
    return result;
}

}  // namespace detail

// Deterministic Miller-Rabin, valid for the full 64-bit range.
inline bool is_prime(uint64_t n) {
    if (n < 2) return false;
    for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n == p) return true;
        if (n % p == 0) return false;
    }
    uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        uint64_t x = detail::powmod_u64(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            x = detail::mulmod_u64(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

// First `count` primes in ascending order, starting from 3 when skip_two.
inline std::vector<uint64_t> first_primes(std::size_t count, bool skip_two = true) {
    std::vector<uint64_t> primes;
    primes.reserve(count);
    uint64_t candidate = skip_two ? 3 : 2;
    while (primes.size() < count) {
        if (is_prime(candidate)) primes.push_back(candidate);
        candidate += (candidate == 2) ? 1 : 2;
    }
    return primes;
}

// The bijection between relation ids and distinct primes: primes[r] = p_r.
class RelationMapping {
public:
    RelationMapping() = default;

    // Default assignment: the first `relation_count` primes in ascending
    // order, odd primes only when skip_two. An explicit list overrides and is
    // validated (length, primality, distinctness, parity under skip_two).
    static RelationMapping build(std::size_t relation_count, bool skip_two = true,
                                 const std::vector<uint64_t>* explicit_primes = nullptr) {
        RelationMapping m;
        m.skip_two_ = skip_two;
        if (explicit_primes) {
            if (explicit_primes->size() != relation_count) {
                throw MappingError("explicit prime list has length " +
                                   std::to_string(explicit_primes->size()) + ", expected " +
                                   std::to_string(relation_count));
            }
            for (uint64_t p : *explicit_primes) {
                if (!is_prime(p)) {
                    throw MappingError("explicit mapping entry " + std::to_string(p) + " is not prime");
                }
                if (skip_two && p == 2) {
                    throw MappingError("explicit mapping contains 2 but skip_two is set");
                }
            }
            m.primes_ = *explicit_primes;
        } else {
            m.primes_ = first_primes(relation_count, skip_two);
        }
        for (uint32_t r = 0; r < m.primes_.size(); ++r) {
            auto [it, inserted] = m.relation_of_.emplace(m.primes_[r], r);
            if (!inserted) {
                throw MappingError("duplicate prime " + std::to_string(m.primes_[r]) + " in mapping");
            }
        }
        return m;
    }

    std::size_t size() const { return primes_.size(); }
    bool skip_two() const { return skip_two_; }
    const std::vector<uint64_t>& primes() const { return primes_; }

    uint64_t prime_for(uint32_t relation) const {
        if (relation >= primes_.size()) {
            throw MappingError("relation id " + std::to_string(relation) + " has no assigned prime (R = " +
                               std::to_string(primes_.size()) + ")");
        }
        return primes_[relation];
    }

    // Relation id for a prime, or -1 when the prime is not in the mapping.
    int64_t relation_for(uint64_t prime) const {
        auto it = relation_of_.find(prime);
        return it == relation_of_.end() ? -1 : static_cast<int64_t>(it->second);
    }

    bool operator==(const RelationMapping& other) const {
        return primes_ == other.primes_ && skip_two_ == other.skip_two_;
    }

private:
    std::vector<uint64_t> primes_;
    bool skip_two_ = true;
    std::unordered_map<uint64_t, uint32_t> relation_of_;
};

// Result of factoring a one-hop cell value over a mapping's primes.
// relations holds the recovered multiset; residue is what remains after all
// vocabulary primes are divided out (1 when the value factored completely; a
// residue > 1 signals a P+ sum or an out-of-vocabulary factor).
struct Factorization {
    std::map<uint32_t, uint32_t> relations;
    mpz_class residue = 1;

    bool complete() const { return residue == 1; }
};

// Trial division over the mapping's primes only, ascending.
inline Factorization factorize_cell(const mpz_class& value, const RelationMapping& mapping) {
    if (sgn(value) <= 0) {
        throw DomainError("factorize_cell requires a positive value (0 encodes the absence of an edge)");
    }
    Factorization f;
    f.residue = value;
    for (uint32_t r = 0; r < mapping.size() && f.residue != 1; ++r) {
        unsigned long p = static_cast<unsigned long>(mapping.primes()[r]);
        uint32_t count = 0;
        while (mpz_divisible_ui_p(f.residue.get_mpz_t(), p)) {
            mpz_divexact_ui(f.residue.get_mpz_t(), f.residue.get_mpz_t(), p);
            ++count;
        }
        if (count > 0) f.relations.emplace(r, count);
    }
    return f;
}

inline Factorization factorize_cell(uint64_t value, const RelationMapping& mapping) {
    mpz_class v;
    mpz_import(v.get_mpz_t(), 1, 1, sizeof(value), 0, 0, &value);
    return factorize_cell(v, mapping);
}

// Product of p_r over a relation multiset; the inverse of factorize_cell.
inline mpz_class relation_product(const std::map<uint32_t, uint32_t>& relations,
                                  const RelationMapping& mapping) {
    mpz_class product = 1;
    for (const auto& [relation, count] : relations) {
        uint64_t p = mapping.prime_for(relation);
        for (uint32_t i = 0; i < count; ++i) {
            mpz_mul_ui(product.get_mpz_t(), product.get_mpz_t(), static_cast<unsigned long>(p));
        }
    }
    return product;
}

}  // namespace pam
