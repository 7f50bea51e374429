#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <set>
#include <vector>

#include <pam/graph_io.hpp>
#include <pam/primes.hpp>

#include "testutil.hpp"

TEST_CASE("primality check agrees with trial division") {
    auto slow_is_prime = [](uint64_t n) {
        if (n < 2) return false;
        for (uint64_t d = 2; d * d <= n; ++d) {
            if (n % d == 0) return false;
        }
        return true;
    };
    for (uint64_t n = 0; n < 2000; ++n) {
        CAPTURE(n);
        REQUIRE(pam::is_prime(n) == slow_is_prime(n));
    }
    REQUIRE(pam::is_prime(2147483647ull));      // 2^31 - 1
    REQUIRE_FALSE(pam::is_prime(2147483649ull));
}

TEST_CASE("first primes with and without two") {
    REQUIRE(pam::first_primes(5, false) == std::vector<uint64_t>{2, 3, 5, 7, 11});
    REQUIRE(pam::first_primes(5, true) == std::vector<uint64_t>{3, 5, 7, 11, 13});
    REQUIRE(pam::first_primes(0, true).empty());
}

TEST_CASE("default mapping assigns ascending primes") {
    auto m = pam::RelationMapping::build(3, true);
    REQUIRE(m.primes() == std::vector<uint64_t>{3, 5, 7});
    auto m2 = pam::RelationMapping::build(3, false);
    REQUIRE(m2.primes() == std::vector<uint64_t>{2, 3, 5});
    auto empty = pam::RelationMapping::build(0, true);
    REQUIRE(empty.size() == 0);
}

TEST_CASE("mapping lookups run both directions") {
    auto m = pam::RelationMapping::build(4, true);  // 3 5 7 11
    REQUIRE(m.prime_for(0) == 3);
    REQUIRE(m.prime_for(3) == 11);
    REQUIRE_THROWS_AS(m.prime_for(4), pam::MappingError);
    REQUIRE(m.relation_for(7) == 2);
    REQUIRE(m.relation_for(13) == -1);
}

TEST_CASE("explicit prime lists are validated") {
    std::vector<uint64_t> good{17, 3, 101};
    auto m = pam::RelationMapping::build(3, true, &good);
    REQUIRE(m.prime_for(0) == 17);
    REQUIRE(m.relation_for(101) == 2);

    std::vector<uint64_t> composite{4, 5, 7};
    REQUIRE_THROWS_AS(pam::RelationMapping::build(3, true, &composite), pam::MappingError);
    std::vector<uint64_t> duplicate{5, 5, 7};
    REQUIRE_THROWS_AS(pam::RelationMapping::build(3, true, &duplicate), pam::MappingError);
    std::vector<uint64_t> short_list{3, 5};
    REQUIRE_THROWS_AS(pam::RelationMapping::build(3, true, &short_list), pam::MappingError);
    std::vector<uint64_t> with_two{2, 5, 7};
    REQUIRE_THROWS_AS(pam::RelationMapping::build(3, true, &with_two), pam::MappingError);
    REQUIRE_NOTHROW(pam::RelationMapping::build(3, false, &with_two));
}

TEST_CASE("factorize splits products over the mapped primes") {
    auto m = pam::RelationMapping::build(3, true);  // 3 5 7

    auto f35 = pam::factorize_cell(mpz_class(35), m);
    REQUIRE(f35.complete());
    REQUIRE(f35.relations == std::map<uint32_t, uint32_t>{{1, 1}, {2, 1}});

    auto f15 = pam::factorize_cell(mpz_class(15), m);
    REQUIRE(f15.complete());
    REQUIRE(f15.relations == std::map<uint32_t, uint32_t>{{0, 1}, {1, 1}});

    auto f1 = pam::factorize_cell(mpz_class(1), m);
    REQUIRE(f1.complete());
    REQUIRE(f1.relations.empty());
}

TEST_CASE("sums leave a residue instead of factors") {
    auto m = pam::RelationMapping::build(3, true);
    auto f8 = pam::factorize_cell(mpz_class(8), m);
    REQUIRE_FALSE(f8.complete());
    REQUIRE(f8.residue == 8);
    REQUIRE(f8.relations.empty());

    // Partially factorable: 3 * 11 with 11 outside the vocabulary.
    auto f33 = pam::factorize_cell(mpz_class(33), m);
    REQUIRE_FALSE(f33.complete());
    REQUIRE(f33.residue == 11);
    REQUIRE(f33.relations == std::map<uint32_t, uint32_t>{{0, 1}});
}

TEST_CASE("zero and negatives are rejected") {
    auto m = pam::RelationMapping::build(3, true);
    REQUIRE_THROWS_AS(pam::factorize_cell(mpz_class(0), m), pam::DomainError);
    REQUIRE_THROWS_AS(pam::factorize_cell(mpz_class(-15), m), pam::DomainError);
}

TEST_CASE("factorization round-trips random relation multisets") {
    std::mt19937_64 rng(20240817);
    auto mapping = pam::RelationMapping::build(50, true);
    for (int trial = 0; trial < 500; ++trial) {
        std::map<uint32_t, uint32_t> multiset;
        uint32_t size = 1 + static_cast<uint32_t>(rng() % 6);
        for (uint32_t i = 0; i < size; ++i) multiset[static_cast<uint32_t>(rng() % 50)] += 1;
        mpz_class product = pam::relation_product(multiset, mapping);
        auto f = pam::factorize_cell(product, mapping);
        CAPTURE(product.get_str());
        REQUIRE(f.complete());
        REQUIRE(f.relations == multiset);
    }
}

TEST_CASE("distinct multisets give distinct products") {
    std::mt19937_64 rng(7);
    auto mapping = pam::RelationMapping::build(20, true);
    std::map<std::string, std::map<uint32_t, uint32_t>> seen;
    for (int trial = 0; trial < 2000; ++trial) {
        std::map<uint32_t, uint32_t> multiset;
        uint32_t size = 1 + static_cast<uint32_t>(rng() % 5);
        for (uint32_t i = 0; i < size; ++i) multiset[static_cast<uint32_t>(rng() % 20)] += 1;
        std::string key = pam::relation_product(multiset, mapping).get_str();
        auto [it, inserted] = seen.emplace(key, multiset);
        if (!inserted) REQUIRE(it->second == multiset);
    }
}

TEST_CASE("even sum values imply at least two odd primes") {
    // With skip_two every prime is odd, so a sum of relations is even exactly
    // when it has an even number of terms (>= 2 among positives).
    auto mapping = pam::RelationMapping::build(10, true);
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        uint32_t terms = 1 + static_cast<uint32_t>(rng() % 4);
        uint64_t sum = 0;
        for (uint32_t i = 0; i < terms; ++i) sum += mapping.primes()[rng() % 10];
        if (sum % 2 == 0) REQUIRE(terms >= 2);
        if (terms == 1) REQUIRE(sum % 2 == 1);
    }
}

TEST_CASE("mapping files round-trip") {
    testutil::TempDir dir("mapping");
    auto mapping = pam::RelationMapping::build(3, true);
    std::vector<std::string> names{"green", "blue", "magenta"};
    pam::save_mapping(mapping, names, dir.file("map.tsv"));

    auto loaded = pam::load_mapping(dir.file("map.tsv"));
    REQUIRE(loaded.mapping == mapping);
    REQUIRE(loaded.names == names);

    // A mapping that uses 2 comes back with skip_two off.
    auto m2 = pam::RelationMapping::build(2, false);
    pam::save_mapping(m2, {"a", "b"}, dir.file("map2.tsv"));
    REQUIRE(pam::load_mapping(dir.file("map2.tsv")).mapping.skip_two() == false);

    testutil::write_file(dir.file("bad.tsv"), "only-one-column\n");
    REQUIRE_THROWS_AS(pam::load_mapping(dir.file("bad.tsv")), pam::ParseError);
    testutil::write_file(dir.file("composite.tsv"), "a\t4\n");
    REQUIRE_THROWS_AS(pam::load_mapping(dir.file("composite.tsv")), pam::MappingError);
    REQUIRE_THROWS_AS(pam::load_mapping(dir.file("missing.tsv")), pam::IoError);
}
