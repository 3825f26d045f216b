#ifndef MATSAMPLE_SPARSE_MATRIX_HPP
#define MATSAMPLE_SPARSE_MATRIX_HPP

#include "matsample/types.hpp"

#include <span>
#include <tuple>
#include <utility>
#include <vector>

namespace matsample {

struct Triplet {
    index_t row;
    index_t col;
    value_t value;
};

// Compressed sparse row matrix. Rows are sorted and free of duplicate
// columns; every constructor path validates this. Immutable once built.
class SparseMatrix {
public:
    SparseMatrix() = default;

    // Validates the CSR invariants and throws ContractViolation on failure.
    SparseMatrix(index_t n_rows, index_t n_cols,
                 std::vector<index_t> row_offsets,
                 std::vector<index_t> col_indices,
                 std::vector<value_t> values);

    static SparseMatrix zeros(index_t n_rows, index_t n_cols);
    static SparseMatrix identity(index_t n);

    // Duplicate coordinates are summed.
    static SparseMatrix from_triplets(index_t n_rows, index_t n_cols,
                                      std::vector<Triplet> triplets);

    // Builds from a row-major dense buffer, keeping entries != 0.
    static SparseMatrix from_dense(index_t n_rows, index_t n_cols,
                                   std::span<const value_t> dense);

    index_t n_rows() const { return n_rows_; }
    index_t n_cols() const { return n_cols_; }
    index_t nnz() const { return static_cast<index_t>(col_indices_.size()); }
    bool empty() const { return col_indices_.empty(); }

    const std::vector<index_t>& row_offsets() const { return row_offsets_; }
    const std::vector<index_t>& col_indices() const { return col_indices_; }
    const std::vector<value_t>& values() const { return values_; }

    index_t row_nnz(index_t row) const {
        return row_offsets_[row + 1] - row_offsets_[row];
    }
    std::span<const index_t> row_cols(index_t row) const;
    std::span<const value_t> row_values(index_t row) const;

    // Value at (row, col), zero when absent. Binary search within the row.
    value_t at(index_t row, index_t col) const;

    // Rows [begin, end) as a standalone matrix with the same column count.
    SparseMatrix slice_rows(index_t begin, index_t end) const;

    // Columns [begin, end), renumbered to start at zero.
    SparseMatrix slice_columns(index_t begin, index_t end) const;

    // Same pattern with every stored value replaced by `value`.
    SparseMatrix with_values(value_t value) const;

    std::vector<value_t> to_dense() const;

    // Exact comparison: same shape, same pattern and bitwise-equal values.
    friend bool operator==(const SparseMatrix& a, const SparseMatrix& b);

private:
    void validate() const;

    index_t n_rows_ = 0;
    index_t n_cols_ = 0;
    std::vector<index_t> row_offsets_{0};
    std::vector<index_t> col_indices_;
    std::vector<value_t> values_;
};

// Entries whose accumulated magnitude falls below this are dropped by spgemm
// and add.
inline constexpr value_t kDropTolerance = 1e-12;

SparseMatrix spgemm(const SparseMatrix& left, const SparseMatrix& right);

// Elementwise sum of two matrices of identical shape.
SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b);

// Divides each entry by its row sum.
SparseMatrix norm_rows_sage(const SparseMatrix& probabilities);

// Replaces each entry v by v^2 / sum(row^2).
SparseMatrix norm_rows_ladies(const SparseMatrix& counts);

// Vertically stacks blocks that all have `n_cols` columns.
SparseMatrix vstack(std::span<const SparseMatrix> blocks, index_t n_cols);

SparseMatrix block_diag(std::span<const SparseMatrix> blocks);

struct CompactedColumns {
    SparseMatrix matrix;
    std::vector<index_t> column_map;  // new column -> original column
};

// Drops empty columns, keeping the relative order of the rest.
CompactedColumns compact_columns(const SparseMatrix& m);

// Sorted distinct column ids that hold at least one entry.
std::vector<index_t> nonzero_columns(const SparseMatrix& m);

// One output row per stored entry of `q`, a one-hot at that entry's column.
SparseMatrix expand_row_extraction(const SparseMatrix& q);

// n x width matrix whose column j holds a single 1 at row sampled_cols[j].
// Columns past sampled_cols.size() are empty; width defaults to the count.
SparseMatrix build_column_extraction(std::span<const index_t> sampled_cols,
                                     index_t n, index_t width = -1);

// block_diag(lefts) * vstack(rights), computed in chunks of at most
// `chunk_blocks` diagonal blocks so the stacked right operand is never
// materialised whole. Each rights[i] must have lefts[i].n_cols() rows and all
// rights share one column count.
SparseMatrix block_diag_product(std::span<const SparseMatrix> lefts,
                                std::span<const SparseMatrix> rights,
                                std::size_t chunk_blocks = 64);

}  // namespace matsample

#endif  // MATSAMPLE_SPARSE_MATRIX_HPP
