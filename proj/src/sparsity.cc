#include <idp/sparsity.h>

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

namespace idp
{
  Connectivity Connectivity::from_rows(const std::vector<std::vector<unsigned>> &rows)
  {
    Connectivity c;
    c.row_start.reserve(rows.size() + 1);
    for (const auto &r : rows)
      c.append_row(r);
    return c;
  }

  bool Connectivity::is_symmetric() const
  {
    const std::size_t n = n_rows();
    for (std::size_t i = 0; i < n; ++i)
      for (unsigned j : row(i))
      {
        if (j >= n)
          continue;
        const auto rj = row(j);
        if (std::find(rj.begin(), rj.end(), unsigned(i)) == rj.end())
          return false;
      }
    return true;
  }

  std::vector<unsigned> cuthill_mckee(const Connectivity &graph)
  {
    const unsigned n = unsigned(graph.n_rows());
    std::vector<unsigned> degree(n, 0);
    for (unsigned i = 0; i < n; ++i)
      for (unsigned j : graph.row(i))
        if (j < n && j != i)
          ++degree[i];

    auto by_degree = [&](unsigned a, unsigned b) {
      return degree[a] != degree[b] ? degree[a] < degree[b] : a < b;
    };

    std::vector<unsigned> start_order(n);
    for (unsigned i = 0; i < n; ++i)
      start_order[i] = i;
    std::sort(start_order.begin(), start_order.end(), by_degree);

    std::vector<bool> visited(n, false);
    std::vector<unsigned> order;
    order.reserve(n);
    std::vector<unsigned> neighbours;

    for (unsigned seed : start_order)
    {
      if (visited[seed])
        continue;
      visited[seed] = true;
      std::size_t head = order.size();
      order.push_back(seed);
      while (head < order.size())
      {
        const unsigned i = order[head++];
        neighbours.clear();
        for (unsigned j : graph.row(i))
          if (j < n && !visited[j])
          {
            visited[j] = true;
            neighbours.push_back(j);
          }
        std::sort(neighbours.begin(), neighbours.end(), by_degree);
        order.insert(order.end(), neighbours.begin(), neighbours.end());
      }
    }
    return order;
  }

  LocalNumbering renumber(const Connectivity &graph,
                          unsigned lanes,
                          const std::vector<bool> &exported,
                          unsigned regular_length,
                          unsigned n_relevant)
  {
    if (lanes == 0)
      throw std::invalid_argument("renumber: lane width must be positive");
    const unsigned n = unsigned(graph.n_rows());
    if (exported.size() != n)
      throw std::invalid_argument("renumber: export flags do not match rows");
    if (n_relevant < n)
      throw std::invalid_argument("renumber: n_relevant below owned count");

    const std::vector<unsigned> cm = cuthill_mckee(graph);

    auto is_regular = [&](unsigned i) {
      return graph.row(i).size() == regular_length;
    };

    std::vector<unsigned> order(cm);
    std::stable_partition(order.begin(), order.end(), is_regular);
    const unsigned n_regular =
      unsigned(std::count_if(order.begin(), order.end(), is_regular));
    const unsigned n_internal = n_regular / lanes * lanes;

    auto first_internal = order.begin();
    auto last_internal = order.begin() + n_internal;
    std::stable_partition(first_internal, last_internal, [&](unsigned i) {
      return bool(exported[i]);
    });
    const unsigned n_export = unsigned(
      std::count_if(first_internal, last_internal, [&](unsigned i) {
        return bool(exported[i]);
      }));

    LocalNumbering numbering;
    numbering.lanes = lanes;
    numbering.n_export = n_export;
    numbering.n_internal = n_internal;
    numbering.n_owned = n;
    numbering.n_relevant = n_relevant;
    numbering.old_index.resize(n_relevant);
    numbering.new_index.resize(n_relevant);
    for (unsigned k = 0; k < n; ++k)
      numbering.old_index[k] = order[k];
    for (unsigned k = n; k < n_relevant; ++k)
      numbering.old_index[k] = k;
    for (unsigned k = 0; k < n_relevant; ++k)
      numbering.new_index[numbering.old_index[k]] = k;
    return numbering;
  }


  SparsityPattern::SparsityPattern(const Connectivity &rows,
                                   unsigned lanes,
                                   unsigned n_export,
                                   unsigned n_internal,
                                   unsigned n_owned)
    : lanes_(lanes)
    , n_export_(n_export)
    , n_internal_(n_internal)
    , n_owned_(n_owned)
    , n_relevant_(unsigned(rows.n_rows()))
  {
    if (lanes_ == 0 || n_internal_ % lanes_ != 0)
      throw std::invalid_argument("SparsityPattern: N_i must be a multiple of k");
    if (!(n_export_ <= n_internal_ && n_internal_ <= n_owned_ &&
          n_owned_ <= n_relevant_))
      throw std::invalid_argument("SparsityPattern: inconsistent markers");

    regular_length_ = n_internal_ > 0 ? unsigned(rows.row(0).size()) : 0;
    for (unsigned i = 0; i < n_internal_; ++i)
      if (rows.row(i).size() != regular_length_)
        throw std::invalid_argument("SparsityPattern: row " + std::to_string(i) +
                                    " in the SIMD region has irregular length");

    const std::size_t simd = std::size_t(n_internal_) * regular_length_;
    csr_start_.assign(n_relevant_ - n_internal_ + 1, simd);
    for (unsigned i = n_internal_; i < n_relevant_; ++i)
      csr_start_[i - n_internal_ + 1] =
        csr_start_[i - n_internal_] + rows.row(i).size();

    columns_.assign(csr_start_.back(), 0);
    for (unsigned i = 0; i < n_relevant_; ++i)
    {
      const auto r = rows.row(i);
      for (unsigned s = 0; s < r.size(); ++s)
      {
        if (r[s] >= n_relevant_)
          throw std::invalid_argument("SparsityPattern: column out of range");
        columns_[position(i, s)] = r[s];
      }
    }

    // Transpose table. Every row is short, so a scan of row j is cheap.
    if (columns_.size() >= std::numeric_limits<unsigned>::max())
      throw std::length_error("SparsityPattern: too many entries");
    transpose_.assign(columns_.size(), std::numeric_limits<unsigned>::max());
    for (unsigned i = 0; i < n_relevant_; ++i)
    {
      const unsigned len = row_length(i);
      for (unsigned s = 0; s < len; ++s)
      {
        const std::size_t p = position(i, s);
        const std::size_t q = find(columns_[p], i);
        if (q == invalid)
        {
          // Ghost rows only hold owned columns; a ghost-ghost pair has no
          // transpose and is never stored.
          throw std::invalid_argument("SparsityPattern: pattern is not symmetric");
        }
        transpose_[p] = unsigned(q);
      }
    }
  }

  std::size_t SparsityPattern::find(unsigned row, unsigned col) const
  {
    const unsigned len = row_length(row);
    for (unsigned s = 0; s < len; ++s)
    {
      const std::size_t p = position(row, s);
      if (columns_[p] == col)
        return p;
    }
    return invalid;
  }

  unsigned SparsityPattern::row_of(std::size_t position) const
  {
    const std::size_t simd = n_simd_positions();
    if (position < simd)
    {
      const std::size_t slice = position / (std::size_t(lanes_) * regular_length_);
      return unsigned(slice * lanes_ + position % lanes_);
    }
    const auto it = std::upper_bound(csr_start_.begin(), csr_start_.end(), position);
    return unsigned(it - csr_start_.begin() - 1) + n_internal_;
  }

} // namespace idp
