#pragma once

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "pam/csr.hpp"
#include "pam/errors.hpp"

namespace pam {

namespace detail {

inline std::string mm_value(const mpz_class& v) { return v.get_str(); }

inline std::string mm_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T>
constexpr const char* mm_field() {
    return ScalarTraits<T>::exact ? "integer" : "real";
}

}  // namespace detail

// Writes a square CSR matrix in Matrix Market coordinate format (1-indexed,
// general symmetry). Exact matrices use the integer field, float the real one.
template <typename T>
void save_matrix_market(const CsrMatrix<T>& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "%%MatrixMarket matrix coordinate " << detail::mm_field<T>() << " general\n";
    out << m.n << ' ' << m.n << ' ' << m.nnz() << '\n';
    for (uint32_t i = 0; i < m.n; ++i) {
        for (int64_t k = m.row_begin(i); k < m.row_end(i); ++k) {
            out << (i + 1) << ' ' << (m.col[k] + 1) << ' ' << detail::mm_value(m.val[k]) << '\n';
        }
    }
    out.flush();
    if (!out) throw IoError("write to " + path + " failed");
}

// Reads a coordinate-format Matrix Market file into CSR. Accepts integer and
// real fields; requires a square general matrix.
template <typename T>
CsrMatrix<T> load_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    {
        std::istringstream head(line);
        std::string banner, object, format, field, symmetry;
        head >> banner >> object >> format >> field >> symmetry;
        if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate") {
            throw ParseError(path + ": not a coordinate MatrixMarket file");
        }
        if (field != "integer" && field != "real") {
            throw ParseError(path + ": unsupported field '" + field + "'");
        }
        if (symmetry != "general") {
            throw ParseError(path + ": unsupported symmetry '" + symmetry + "'");
        }
    }

    uint64_t line_no = 1;
    do {
        if (!std::getline(in, line)) throw ParseError(path + ": missing size line");
        ++line_no;
    } while (!line.empty() && line[0] == '%');

    uint64_t rows = 0, cols = 0, entries = 0;
    {
        std::istringstream sizes(line);
        if (!(sizes >> rows >> cols >> entries)) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad size line");
        }
        if (rows != cols) throw ParseError(path + ": matrix is not square");
        if (rows > UINT32_MAX) throw ParseError(path + ": dimension too large");
    }

    std::vector<std::tuple<uint32_t, uint32_t, T>> coo;
    coo.reserve(entries);
    for (uint64_t e = 0; e < entries; ++e) {
        if (!std::getline(in, line)) {
            throw ParseError(path + ": expected " + std::to_string(entries) + " entries, got " +
                             std::to_string(e));
        }
        ++line_no;
        if (!line.empty() && line[0] == '%') { --e; continue; }
        std::istringstream row(line);
        uint64_t i = 0, j = 0;
        std::string value;
        if (!(row >> i >> j >> value) || i < 1 || j < 1 || i > rows || j > cols) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad entry");
        }
        T v;
        try {
            if constexpr (ScalarTraits<T>::exact) {
                v = mpz_class(value);
            } else {
                std::size_t used = 0;
                v = std::stod(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
            }
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad value '" + value + "'");
        }
        coo.emplace_back(static_cast<uint32_t>(i - 1), static_cast<uint32_t>(j - 1), std::move(v));
    }
    return csr_from_coo(static_cast<uint32_t>(rows), std::move(coo));
}

}  // namespace pam
