#include "matsample/sparse_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

namespace matsample {

SparseMatrix::SparseMatrix(index_t n_rows, index_t n_cols,
                           std::vector<index_t> row_offsets,
                           std::vector<index_t> col_indices,
                           std::vector<value_t> values)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
    validate();
}

void SparseMatrix::validate() const {
    require(n_rows_ >= 0 && n_cols_ >= 0, "matrix dimensions must be non-negative");
    require(static_cast<index_t>(row_offsets_.size()) == n_rows_ + 1,
            "row_offsets must have n_rows + 1 entries");
    require(row_offsets_.front() == 0, "row_offsets[0] must be 0");
    require(row_offsets_.back() == nnz(), "row_offsets[n_rows] must equal nnz");
    require(values_.size() == col_indices_.size(),
            "values and col_indices must have equal length");
    for (index_t r = 0; r < n_rows_; ++r) {
        const index_t begin = row_offsets_[r];
        const index_t end = row_offsets_[r + 1];
        require(begin <= end, "row_offsets must be non-decreasing");
        for (index_t e = begin; e < end; ++e) {
            const index_t c = col_indices_[e];
            require(c >= 0 && c < n_cols_,
                    "column index " + std::to_string(c) + " out of range in row " +
                        std::to_string(r));
            if (e > begin) {
                require(col_indices_[e - 1] < c,
                        "columns must be strictly increasing within row " +
                            std::to_string(r));
            }
            require(std::isfinite(values_[e]), "matrix values must be finite");
        }
    }
}

SparseMatrix SparseMatrix::zeros(index_t n_rows, index_t n_cols) {
    return SparseMatrix(n_rows, n_cols, std::vector<index_t>(n_rows + 1, 0), {}, {});
}

SparseMatrix SparseMatrix::identity(index_t n) {
    std::vector<index_t> offsets(n + 1);
    std::iota(offsets.begin(), offsets.end(), index_t{0});
    std::vector<index_t> cols(n);
    std::iota(cols.begin(), cols.end(), index_t{0});
    return SparseMatrix(n, n, std::move(offsets), std::move(cols),
                        std::vector<value_t>(n, 1.0));
}

SparseMatrix SparseMatrix::from_triplets(index_t n_rows, index_t n_cols,
                                         std::vector<Triplet> triplets) {
    for (const auto& t : triplets) {
        require(t.row >= 0 && t.row < n_rows && t.col >= 0 && t.col < n_cols,
                "triplet coordinate out of range");
    }
    std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    std::vector<index_t> offsets(n_rows + 1, 0);
    std::vector<index_t> cols;
    std::vector<value_t> vals;
    cols.reserve(triplets.size());
    vals.reserve(triplets.size());
    index_t last_row = -1;
    index_t last_col = -1;
    for (const auto& t : triplets) {
        if (t.row == last_row && t.col == last_col) {
            vals.back() += t.value;
            continue;
        }
        cols.push_back(t.col);
        vals.push_back(t.value);
        ++offsets[t.row + 1];
        last_row = t.row;
        last_col = t.col;
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return SparseMatrix(n_rows, n_cols, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix SparseMatrix::from_dense(index_t n_rows, index_t n_cols,
                                      std::span<const value_t> dense) {
    require(static_cast<index_t>(dense.size()) == n_rows * n_cols,
            "dense buffer size must equal n_rows * n_cols");
    std::vector<index_t> offsets(n_rows + 1, 0);
    std::vector<index_t> cols;
    std::vector<value_t> vals;
    for (index_t r = 0; r < n_rows; ++r) {
        for (index_t c = 0; c < n_cols; ++c) {
            const value_t v = dense[r * n_cols + c];
            if (v != 0.0) {
                cols.push_back(c);
                vals.push_back(v);
            }
        }
        offsets[r + 1] = static_cast<index_t>(cols.size());
    }
    return SparseMatrix(n_rows, n_cols, std::move(offsets), std::move(cols), std::move(vals));
}

std::span<const index_t> SparseMatrix::row_cols(index_t row) const {
    return {col_indices_.data() + row_offsets_[row],
            static_cast<std::size_t>(row_nnz(row))};
}

std::span<const value_t> SparseMatrix::row_values(index_t row) const {
    return {values_.data() + row_offsets_[row], static_cast<std::size_t>(row_nnz(row))};
}

value_t SparseMatrix::at(index_t row, index_t col) const {
    const auto cols = row_cols(row);
    const auto it = std::lower_bound(cols.begin(), cols.end(), col);
    if (it == cols.end() || *it != col) return 0.0;
    return values_[row_offsets_[row] + (it - cols.begin())];
}

SparseMatrix SparseMatrix::slice_rows(index_t begin, index_t end) const {
    require(0 <= begin && begin <= end && end <= n_rows_, "row slice out of range");
    const index_t first = row_offsets_[begin];
    const index_t last = row_offsets_[end];
    std::vector<index_t> offsets(row_offsets_.begin() + begin, row_offsets_.begin() + end + 1);
    for (auto& o : offsets) o -= first;
    return SparseMatrix(end - begin, n_cols_, std::move(offsets),
                        {col_indices_.begin() + first, col_indices_.begin() + last},
                        {values_.begin() + first, values_.begin() + last});
}

SparseMatrix SparseMatrix::slice_columns(index_t begin, index_t end) const {
    require(0 <= begin && begin <= end && end <= n_cols_, "column slice out of range");
    std::vector<index_t> offsets(n_rows_ + 1, 0);
    std::vector<index_t> cols;
    std::vector<value_t> vals;
    for (index_t r = 0; r < n_rows_; ++r) {
        const auto rc = row_cols(r);
        const auto lo = std::lower_bound(rc.begin(), rc.end(), begin);
        const auto hi = std::lower_bound(lo, rc.end(), end);
        const auto base = row_offsets_[r];
        for (auto it = lo; it != hi; ++it) {
            cols.push_back(*it - begin);
            vals.push_back(values_[base + (it - rc.begin())]);
        }
        offsets[r + 1] = static_cast<index_t>(cols.size());
    }
    return SparseMatrix(n_rows_, end - begin, std::move(offsets), std::move(cols),
                        std::move(vals));
}

SparseMatrix SparseMatrix::with_values(value_t value) const {
    return SparseMatrix(n_rows_, n_cols_, row_offsets_, col_indices_,
                        std::vector<value_t>(col_indices_.size(), value));
}

std::vector<value_t> SparseMatrix::to_dense() const {
    std::vector<value_t> dense(static_cast<std::size_t>(n_rows_ * n_cols_), 0.0);
    for (index_t r = 0; r < n_rows_; ++r) {
        for (index_t e = row_offsets_[r]; e < row_offsets_[r + 1]; ++e) {
            dense[r * n_cols_ + col_indices_[e]] = values_[e];
        }
    }
    return dense;
}

bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.n_rows_ != b.n_rows_ || a.n_cols_ != b.n_cols_) return false;
    if (a.row_offsets_ != b.row_offsets_ || a.col_indices_ != b.col_indices_) return false;
    // Bitwise, so that -0.0 vs 0.0 or differing NaN payloads count as changes.
    return a.values_.size() == b.values_.size() &&
           (a.values_.empty() ||
            std::memcmp(a.values_.data(), b.values_.data(),
                        a.values_.size() * sizeof(value_t)) == 0);
}

SparseMatrix spgemm(const SparseMatrix& left, const SparseMatrix& right) {
    require(left.n_cols() == right.n_rows(),
            "spgemm dimension mismatch: left has " + std::to_string(left.n_cols()) +
                " columns, right has " + std::to_string(right.n_rows()) + " rows");
    const index_t n_cols = right.n_cols();

    // Gustavson row-by-row with a dense accumulator. Each output entry is
    // summed in ascending order of the left operand's column index.
    std::vector<value_t> accumulator(static_cast<std::size_t>(n_cols), 0.0);
    std::vector<char> occupied(static_cast<std::size_t>(n_cols), 0);
    std::vector<index_t> touched;

    std::vector<index_t> offsets(left.n_rows() + 1, 0);
    std::vector<index_t> cols;
    std::vector<value_t> vals;

    for (index_t r = 0; r < left.n_rows(); ++r) {
        touched.clear();
        const auto lcols = left.row_cols(r);
        const auto lvals = left.row_values(r);
        for (std::size_t e = 0; e < lcols.size(); ++e) {
            const index_t mid = lcols[e];
            const value_t lv = lvals[e];
            const auto rcols = right.row_cols(mid);
            const auto rvals = right.row_values(mid);
            for (std::size_t f = 0; f < rcols.size(); ++f) {
                const index_t c = rcols[f];
                if (!occupied[c]) {
                    occupied[c] = 1;
                    accumulator[c] = lv * rvals[f];
                    touched.push_back(c);
                } else {
                    accumulator[c] += lv * rvals[f];
                }
            }
        }
        std::sort(touched.begin(), touched.end());
        for (const index_t c : touched) {
            if (std::abs(accumulator[c]) >= kDropTolerance) {
                cols.push_back(c);
                vals.push_back(accumulator[c]);
            }
            occupied[c] = 0;
        }
        offsets[r + 1] = static_cast<index_t>(cols.size());
    }
    return SparseMatrix(left.n_rows(), n_cols, std::move(offsets), std::move(cols),
                        std::move(vals));
}

SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b) {
    require(a.n_rows() == b.n_rows() && a.n_cols() == b.n_cols(),
            "add requires matrices of identical shape");
    std::vector<index_t> offsets(a.n_rows() + 1, 0);
    std::vector<index_t> cols;
    std::vector<value_t> vals;
    cols.reserve(a.nnz() + b.nnz());
    vals.reserve(a.nnz() + b.nnz());
    auto emit = [&](index_t c, value_t v) {
        if (std::abs(v) >= kDropTolerance) {
            cols.push_back(c);
            vals.push_back(v);
        }
    };
    for (index_t r = 0; r < a.n_rows(); ++r) {
        const auto ac = a.row_cols(r);
        const auto av = a.row_values(r);
        const auto bc = b.row_cols(r);
        const auto bv = b.row_values(r);
        std::size_t i = 0;
        std::size_t j = 0;
        while (i < ac.size() || j < bc.size()) {
            if (j == bc.size() || (i < ac.size() && ac[i] < bc[j])) {
                emit(ac[i], av[i]);
                ++i;
            } else if (i == ac.size() || bc[j] < ac[i]) {
                emit(bc[j], bv[j]);
                ++j;
            } else {
                emit(ac[i], av[i] + bv[j]);
                ++i;
                ++j;
            }
        }
        offsets[r + 1] = static_cast<index_t>(cols.size());
    }
    return SparseMatrix(a.n_rows(), a.n_cols(), std::move(offsets), std::move(cols),
                        std::move(vals));
}

namespace {

void require_non_negative(const SparseMatrix& m) {
    for (const value_t v : m.values()) {
        require(v >= 0.0, "row normalization requires non-negative values");
    }
}

template <typename Transform>
SparseMatrix normalize_rows(const SparseMatrix& m, Transform transform) {
    require_non_negative(m);
    std::vector<value_t> vals(m.values().size());
    for (index_t r = 0; r < m.n_rows(); ++r) {
        const auto rv = m.row_values(r);
        value_t total = 0.0;
        for (const value_t v : rv) total += transform(v);
        const index_t base = m.row_offsets()[r];
        for (std::size_t e = 0; e < rv.size(); ++e) {
            vals[base + e] = total > 0.0 ? transform(rv[e]) / total : 0.0;
        }
    }
    return SparseMatrix(m.n_rows(), m.n_cols(), m.row_offsets(), m.col_indices(),
                        std::move(vals));
}

}  // namespace

SparseMatrix norm_rows_sage(const SparseMatrix& probabilities) {
    return normalize_rows(probabilities, [](value_t v) { return v; });
}

SparseMatrix norm_rows_ladies(const SparseMatrix& counts) {
    return normalize_rows(counts, [](value_t v) { return v * v; });
}

SparseMatrix vstack(std::span<const SparseMatrix> blocks, index_t n_cols) {
    index_t rows = 0;
    index_t nnz = 0;
    for (const auto& b : blocks) {
        require(b.n_cols() == n_cols, "vstack blocks must share the column count");
        rows += b.n_rows();
        nnz += b.nnz();
    }
    std::vector<index_t> offsets;
    offsets.reserve(rows + 1);
    offsets.push_back(0);
    std::vector<index_t> cols;
    std::vector<value_t> vals;
    cols.reserve(nnz);
    vals.reserve(nnz);
    for (const auto& b : blocks) {
        const index_t base = static_cast<index_t>(cols.size());
        for (index_t r = 0; r < b.n_rows(); ++r) offsets.push_back(base + b.row_offsets()[r + 1]);
        cols.insert(cols.end(), b.col_indices().begin(), b.col_indices().end());
        vals.insert(vals.end(), b.values().begin(), b.values().end());
    }
    return SparseMatrix(rows, n_cols, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix block_diag(std::span<const SparseMatrix> blocks) {
    index_t rows = 0;
    index_t total_cols = 0;
    for (const auto& b : blocks) {
        rows += b.n_rows();
        total_cols += b.n_cols();
    }
    std::vector<index_t> offsets;
    offsets.reserve(rows + 1);
    offsets.push_back(0);
    std::vector<index_t> cols;
    std::vector<value_t> vals;
    index_t col_base = 0;
    for (const auto& b : blocks) {
        const index_t base = static_cast<index_t>(cols.size());
        for (index_t r = 0; r < b.n_rows(); ++r) offsets.push_back(base + b.row_offsets()[r + 1]);
        for (const index_t c : b.col_indices()) cols.push_back(c + col_base);
        vals.insert(vals.end(), b.values().begin(), b.values().end());
        col_base += b.n_cols();
    }
    return SparseMatrix(rows, total_cols, std::move(offsets), std::move(cols), std::move(vals));
}

std::vector<index_t> nonzero_columns(const SparseMatrix& m) {
    std::vector<index_t> cols(m.col_indices());
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    return cols;
}

CompactedColumns compact_columns(const SparseMatrix& m) {
    auto column_map = nonzero_columns(m);
    std::vector<index_t> remap(static_cast<std::size_t>(m.n_cols()), -1);
    for (std::size_t j = 0; j < column_map.size(); ++j) remap[column_map[j]] = static_cast<index_t>(j);
    std::vector<index_t> cols;
    cols.reserve(m.col_indices().size());
    for (const index_t c : m.col_indices()) cols.push_back(remap[c]);
    const auto width = static_cast<index_t>(column_map.size());
    return {SparseMatrix(m.n_rows(), width, m.row_offsets(), std::move(cols), m.values()),
            std::move(column_map)};
}

SparseMatrix expand_row_extraction(const SparseMatrix& q) {
    const index_t rows = q.nnz();
    std::vector<index_t> offsets(rows + 1);
    std::iota(offsets.begin(), offsets.end(), index_t{0});
    return SparseMatrix(rows, q.n_cols(), std::move(offsets), q.col_indices(),
                        std::vector<value_t>(static_cast<std::size_t>(rows), 1.0));
}

SparseMatrix build_column_extraction(std::span<const index_t> sampled_cols, index_t n,
                                     index_t width) {
    const auto count = static_cast<index_t>(sampled_cols.size());
    if (width < 0) width = count;
    require(width >= count, "column extraction width smaller than the sample count");
    std::vector<index_t> row_of(static_cast<std::size_t>(n), -1);
    for (index_t j = 0; j < count; ++j) {
        const index_t v = sampled_cols[j];
        require(v >= 0 && v < n, "column extraction vertex " + std::to_string(v) + " out of range");
        require(row_of[v] < 0, "column extraction vertex " + std::to_string(v) + " repeated");
        row_of[v] = j;
    }
    std::vector<index_t> offsets(n + 1, 0);
    std::vector<index_t> cols;
    cols.reserve(count);
    for (index_t v = 0; v < n; ++v) {
        if (row_of[v] >= 0) cols.push_back(row_of[v]);
        offsets[v + 1] = static_cast<index_t>(cols.size());
    }
    return SparseMatrix(n, width, std::move(offsets), std::move(cols),
                        std::vector<value_t>(static_cast<std::size_t>(count), 1.0));
}

SparseMatrix block_diag_product(std::span<const SparseMatrix> lefts,
                                std::span<const SparseMatrix> rights,
                                std::size_t chunk_blocks) {
    require(lefts.size() == rights.size(), "block_diag_product needs one right block per left block");
    require(chunk_blocks >= 1, "chunk size must be positive");
    if (lefts.empty()) return SparseMatrix::zeros(0, 0);
    const index_t width = rights.front().n_cols();
    for (std::size_t i = 0; i < lefts.size(); ++i) {
        require(rights[i].n_cols() == width, "right blocks must share the column count");
        require(rights[i].n_rows() == lefts[i].n_cols(),
                "right block rows must match left block columns");
    }
    std::vector<SparseMatrix> pieces;
    for (std::size_t first = 0; first < lefts.size(); first += chunk_blocks) {
        const std::size_t count = std::min(chunk_blocks, lefts.size() - first);
        const auto diag = block_diag(lefts.subspan(first, count));
        const auto stacked = vstack(rights.subspan(first, count), width);
        pieces.push_back(spgemm(diag, stacked));
    }
    return vstack(pieces, width);
}

}  // namespace matsample
