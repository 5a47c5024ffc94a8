#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "dense.hpp"
#include "error.hpp"
#include "types.hpp"

namespace jmpgcf {

/// Compressed sparse row matrix. Column indices are strictly increasing within a row.
struct SparseMatrix {
    std::size_t num_rows = 0;
    std::size_t num_cols = 0;
    std::vector<std::size_t> row_offsets{0};
    std::vector<Index> col_indices;
    std::vector<double> values;

    std::size_t nnz() const noexcept { return col_indices.size(); }

    std::size_t row_nnz(std::size_t r) const noexcept {
        return row_offsets[r + 1] - row_offsets[r];
    }

    /// Stored value at (r, c) or 0 when the entry is structurally absent.
    double at(std::size_t r, std::size_t c) const {
        const auto first = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[r]);
        const auto last = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[r + 1]);
        auto it = std::lower_bound(first, last, static_cast<Index>(c));
        if (it == last || *it != c) return 0.0;
        return values[static_cast<std::size_t>(it - col_indices.begin())];
    }

    /// Throws DimensionError when the CSR invariants do not hold.
    void validate() const {
        if (row_offsets.size() != num_rows + 1 || row_offsets.front() != 0 ||
            row_offsets.back() != nnz() || values.size() != nnz())
            throw DimensionError("inconsistent CSR array lengths");
        for (std::size_t r = 0; r < num_rows; ++r) {
            if (row_offsets[r] > row_offsets[r + 1])
                throw DimensionError("row_offsets decreasing at row " + std::to_string(r));
            for (std::size_t p = row_offsets[r]; p < row_offsets[r + 1]; ++p) {
                if (col_indices[p] >= num_cols)
                    throw DimensionError("column index out of range in row " + std::to_string(r));
                if (p > row_offsets[r] && col_indices[p - 1] >= col_indices[p])
                    throw DimensionError("column indices not strictly increasing in row " +
                                         std::to_string(r));
                if (!std::isfinite(values[p]))
                    throw DimensionError("non-finite value in row " + std::to_string(r));
            }
        }
    }

    friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;
};

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// Builds a CSR matrix from unordered coordinates. Duplicate coordinates are rejected.
inline SparseMatrix from_triplets(std::size_t num_rows, std::size_t num_cols,
                                  std::vector<Triplet> entries) {
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix m;
    m.num_rows = num_rows;
    m.num_cols = num_cols;
    m.row_offsets.assign(num_rows + 1, 0);
    m.col_indices.reserve(entries.size());
    m.values.reserve(entries.size());
    for (std::size_t p = 0; p < entries.size(); ++p) {
        const auto& e = entries[p];
        if (e.row >= num_rows || e.col >= num_cols)
            throw DimensionError("triplet outside the matrix bounds");
        if (p > 0 && entries[p - 1].row == e.row && entries[p - 1].col == e.col)
            throw DimensionError("duplicate triplet coordinate");
        ++m.row_offsets[e.row + 1];
        m.col_indices.push_back(e.col);
        m.values.push_back(e.value);
    }
    for (std::size_t r = 0; r < num_rows; ++r) m.row_offsets[r + 1] += m.row_offsets[r];
    return m;
}

inline SparseMatrix identity_matrix(std::size_t n) {
    SparseMatrix m;
    m.num_rows = m.num_cols = n;
    m.row_offsets.resize(n + 1);
    m.col_indices.resize(n);
    m.values.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        m.row_offsets[i + 1] = i + 1;
        m.col_indices[i] = static_cast<Index>(i);
    }
    return m;
}

/// out = M * X. Rows are processed independently, one writer per output row.
inline void spmm(const SparseMatrix& m, const DenseMatrix& x, DenseMatrix& out) {
    if (m.num_cols != x.rows())
        throw DimensionError("spmm: matrix has " + std::to_string(m.num_cols) +
                             " columns but the dense operand has " + std::to_string(x.rows()) +
                             " rows");
    if (out.rows() != m.num_rows || out.cols() != x.cols()) out = DenseMatrix(m.num_rows, x.cols());
    const std::size_t d = x.cols();
    const auto rows = static_cast<std::ptrdiff_t>(m.num_rows);
#pragma omp parallel for schedule(dynamic, 256)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        auto dst = out.row(static_cast<std::size_t>(r));
        std::fill(dst.begin(), dst.end(), 0.0);
        for (std::size_t p = m.row_offsets[r]; p < m.row_offsets[r + 1]; ++p) {
            const double w = m.values[p];
            const double* src = x.row(m.col_indices[p]).data();
            for (std::size_t c = 0; c < d; ++c) dst[c] += w * src[c];
        }
    }
}

inline DenseMatrix spmm(const SparseMatrix& m, const DenseMatrix& x) {
    DenseMatrix out(m.num_rows, x.cols());
    spmm(m, x, out);
    return out;
}

/// Counting-sort transpose; output rows keep strictly increasing column order.
inline SparseMatrix transpose(const SparseMatrix& m) {
    SparseMatrix t;
    t.num_rows = m.num_cols;
    t.num_cols = m.num_rows;
    t.row_offsets.assign(m.num_cols + 1, 0);
    t.col_indices.resize(m.nnz());
    t.values.resize(m.nnz());
    for (std::size_t p = 0; p < m.nnz(); ++p) ++t.row_offsets[m.col_indices[p] + 1];
    for (std::size_t r = 0; r < t.num_rows; ++r) t.row_offsets[r + 1] += t.row_offsets[r];
    std::vector<std::size_t> cursor(t.row_offsets.begin(), t.row_offsets.end() - 1);
    for (std::size_t r = 0; r < m.num_rows; ++r) {
        for (std::size_t p = m.row_offsets[r]; p < m.row_offsets[r + 1]; ++p) {
            const std::size_t dst = cursor[m.col_indices[p]]++;
            t.col_indices[dst] = static_cast<Index>(r);
            t.values[dst] = m.values[p];
        }
    }
    return t;
}

/// Coordinate text dump, one `row col value` line per stored entry.
inline void write_coordinate(std::ostream& out, const SparseMatrix& m) {
    const auto old_precision = out.precision(17);
    for (std::size_t r = 0; r < m.num_rows; ++r)
        for (std::size_t p = m.row_offsets[r]; p < m.row_offsets[r + 1]; ++p)
            out << r << ' ' << m.col_indices[p] << ' ' << m.values[p] << '\n';
    out.precision(old_precision);
}

}  // namespace jmpgcf
