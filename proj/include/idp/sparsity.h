#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace idp
{
  /// Row-compressed adjacency list. Column order inside a row is whatever
  /// the producer chose; consumers that need a canonical order sort it.
  struct Connectivity
  {
    std::vector<std::size_t> row_start{0};
    std::vector<unsigned> columns;

    std::size_t n_rows() const { return row_start.size() - 1; }
    std::size_t n_nonzero() const { return columns.size(); }

    std::span<const unsigned> row(std::size_t i) const
    {
      return {columns.data() + row_start[i], row_start[i + 1] - row_start[i]};
    }

    void append_row(std::span<const unsigned> cols)
    {
      columns.insert(columns.end(), cols.begin(), cols.end());
      row_start.push_back(columns.size());
    }

    static Connectivity from_rows(const std::vector<std::vector<unsigned>> &rows);

    /// True if every (i, j) with j < n_rows has a matching (j, i).
    bool is_symmetric() const;
  };

  /// Cuthill-McKee order of a symmetric graph: per connected component start
  /// at the unvisited row of minimal degree, visit neighbours by ascending
  /// (degree, index). Columns >= n_rows are ignored. Returns old indices in
  /// visiting order.
  std::vector<unsigned> cuthill_mckee(const Connectivity &graph);


  /**
   * Local numbering of the owned rows of one partition.
   *
   * New layout: [0, N_e) exported regular rows, [N_e, N_i) other regular
   * rows, [N_i, N_lo) irregular rows and regular rows that did not fill a
   * complete SIMD chunk, [N_lo, N_lr) ghosts (unchanged relative order).
   */
  struct LocalNumbering
  {
    std::vector<unsigned> new_index; // old -> new, size N_lr
    std::vector<unsigned> old_index; // new -> old, size N_lr
    unsigned n_export = 0;           // N_e
    unsigned n_internal = 0;         // N_i
    unsigned n_owned = 0;            // N_lo
    unsigned n_relevant = 0;         // N_lr
    unsigned lanes = 1;              // k
  };

  /**
   * graph: rows are the owned indices [0, n_owned), columns >= n_owned are
   * ghosts in [n_owned, n_relevant). A row is regular if its length equals
   * regular_length. exported has one flag per owned row.
   */
  LocalNumbering renumber(const Connectivity &graph,
                          unsigned lanes,
                          const std::vector<bool> &exported,
                          unsigned regular_length,
                          unsigned n_relevant);


  /**
   * Hybrid sparsity pattern. Rows [0, N_i) are stored sliced-ELL with slice
   * height k and uniform row length; row i, slot s lives at position
   *   (i / k * L + s) * k + i % k.
   * Rows [N_i, N_lr) are CSR and follow at position N_i * L. The slot order
   * of a row is the order given by the caller.
   */
  class SparsityPattern
  {
  public:
    static constexpr std::size_t invalid = std::size_t(-1);

    SparsityPattern() = default;

    /// rows: graph in local numbering with n_relevant rows. The first
    /// n_internal rows must all have length regular_length.
    SparsityPattern(const Connectivity &rows,
                    unsigned lanes,
                    unsigned n_export,
                    unsigned n_internal,
                    unsigned n_owned);

    unsigned lanes() const { return lanes_; }
    unsigned n_export() const { return n_export_; }
    unsigned n_internal() const { return n_internal_; }
    unsigned n_owned() const { return n_owned_; }
    unsigned n_relevant() const { return n_relevant_; }
    unsigned regular_length() const { return regular_length_; }
    std::size_t n_nonzero() const { return columns_.size(); }
    std::size_t n_simd_positions() const
    {
      return std::size_t(n_internal_) * regular_length_;
    }

    unsigned row_length(unsigned row) const
    {
      return row < n_internal_ ? regular_length_
                               : unsigned(csr_start_[row - n_internal_ + 1] -
                                          csr_start_[row - n_internal_]);
    }

    std::size_t position(unsigned row, unsigned slot) const
    {
      if (row < n_internal_)
        return (std::size_t(row / lanes_) * regular_length_ + slot) * lanes_ +
               row % lanes_;
      return csr_start_[row - n_internal_] + slot;
    }

    unsigned column(std::size_t position) const { return columns_[position]; }
    std::size_t transpose(std::size_t position) const { return transpose_[position]; }

    /// Row owning a position (linear search free, O(log n) for CSR).
    unsigned row_of(std::size_t position) const;

    /// Position of (row, col) or invalid.
    std::size_t find(unsigned row, unsigned col) const;

    const std::vector<unsigned> &columns() const { return columns_; }
    const std::vector<unsigned> &transposes() const { return transpose_; }

  private:
    unsigned lanes_ = 1;
    unsigned n_export_ = 0;
    unsigned n_internal_ = 0;
    unsigned n_owned_ = 0;
    unsigned n_relevant_ = 0;
    unsigned regular_length_ = 0;

    std::vector<std::size_t> csr_start_;
    std::vector<unsigned> columns_;
    std::vector<unsigned> transpose_;
  };


  /**
   * Values over a SparsityPattern with n_comp components per entry, stored
   * array-of-struct-of-array in the SELL region: for a k-slice the k values
   * of one component are contiguous, so a SIMD load fetches component c of
   * slot s for k consecutive rows. CSR entries store their components
   * contiguously.
   */
  template <int n_comp, typename Value = double>
  class StencilMatrix
  {
  public:
    StencilMatrix() = default;
    explicit StencilMatrix(const SparsityPattern &pattern)
    {
      reinit(pattern);
    }

    void reinit(const SparsityPattern &pattern)
    {
      lanes_ = pattern.lanes();
      simd_positions_ = pattern.n_simd_positions();
      values_.assign(pattern.n_nonzero() * n_comp, Value(0));
    }

    std::size_t index(std::size_t position, int comp) const
    {
      if (position < simd_positions_)
        return ((position / lanes_) * n_comp + comp) * lanes_ + position % lanes_;
      return position * n_comp + comp;
    }

    Value &operator()(std::size_t position, int comp = 0)
    {
      return values_[index(position, comp)];
    }
    const Value &operator()(std::size_t position, int comp = 0) const
    {
      return values_[index(position, comp)];
    }

    /// First value of component comp for the k-slice starting at a
    /// position that is a multiple of k inside the SELL region.
    Value *slice(std::size_t position, int comp)
    {
      return values_.data() + index(position, comp);
    }
    const Value *slice(std::size_t position, int comp) const
    {
      return values_.data() + index(position, comp);
    }

    std::size_t size() const { return values_.size(); }
    std::vector<Value> &values() { return values_; }
    const std::vector<Value> &values() const { return values_; }

  private:
    unsigned lanes_ = 1;
    std::size_t simd_positions_ = 0;
    std::vector<Value> values_;
  };

} // namespace idp
