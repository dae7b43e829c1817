#include <idp/stepper.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace idp
{
  namespace
  {
    template <typename Number>
    constexpr int width_v = NumberTraits<Number>::width;

    template <typename Number>
    Number gather(const double *base, const unsigned *rows, unsigned stride, int comp)
    {
      if constexpr (width_v<Number> == 1)
        return base[std::size_t(rows[0]) * stride + comp];
      else
      {
        Number r;
        for (int l = 0; l < width_v<Number>; ++l)
          r[l] = base[std::size_t(rows[l]) * stride + comp];
        return r;
      }
    }

    template <typename Number>
    void scatter(double *base, const unsigned *rows, unsigned stride, int comp, const Number &v)
    {
      if constexpr (width_v<Number> == 1)
        base[std::size_t(rows[0]) * stride + comp] = v;
      else
        for (int l = 0; l < width_v<Number>; ++l)
          base[std::size_t(rows[l]) * stride + comp] = v[l];
    }

    template <int n, typename Number>
    Vec<n, Number> gather_vec(const std::vector<double> &U, const unsigned *rows)
    {
      Vec<n, Number> r;
      for (int c = 0; c < n; ++c)
        r[c] = gather<Number>(U.data(), rows, n, c);
      return r;
    }

    template <int n, typename Number>
    void scatter_vec(std::vector<double> &U, const unsigned *rows, const Vec<n, Number> &v)
    {
      for (int c = 0; c < n; ++c)
        scatter<Number>(U.data(), rows, n, c, v[c]);
    }

    /// Matrix entry of k consecutive rows at slot position p of the first.
    template <typename Number, int nc>
    Number load(const StencilMatrix<nc> &M, std::size_t p, int c)
    {
      if constexpr (width_v<Number> == 1)
        return M(p, c);
      else
      {
        const double *v = M.slice(p, c);
        Number r;
        for (int l = 0; l < width_v<Number>; ++l)
          r[l] = v[l];
        return r;
      }
    }

    template <typename Number, int nc>
    void store(StencilMatrix<nc> &M, std::size_t p, int c, const Number &x)
    {
      if constexpr (width_v<Number> == 1)
        M(p, c) = x;
      else
      {
        double *v = M.slice(p, c);
        for (int l = 0; l < width_v<Number>; ++l)
          v[l] = x[l];
      }
    }

    template <typename Number, int nc>
    Number load_transposed(const StencilMatrix<nc> &M,
                           const SparsityPattern &pattern,
                           std::size_t p,
                           int c)
    {
      if constexpr (width_v<Number> == 1)
        return M(pattern.transpose(p), c);
      else
      {
        Number r;
        for (int l = 0; l < width_v<Number>; ++l)
          r[l] = M(pattern.transpose(p + l), c);
        return r;
      }
    }

    template <int n, typename Number, int nc>
    Vec<n, Number> load_vec(const StencilMatrix<nc> &M, std::size_t p)
    {
      Vec<n, Number> r;
      for (int c = 0; c < n; ++c)
        r[c] = load<Number>(M, p, c);
      return r;
    }

    template <int n, typename Number, int nc>
    void store_vec(StencilMatrix<nc> &M, std::size_t p, const Vec<n, Number> &v)
    {
      for (int c = 0; c < n; ++c)
        store<Number>(M, p, c, v[c]);
    }

    template <int n, typename Number, int nc>
    Vec<n, Number> load_vec_transposed(const StencilMatrix<nc> &M,
                                       const SparsityPattern &pattern,
                                       std::size_t p)
    {
      Vec<n, Number> r;
      for (int c = 0; c < n; ++c)
        r[c] = load_transposed<Number>(M, pattern, p, c);
      return r;
    }

    template <typename Number>
    double lane_min(const Number &x)
    {
      double r = NumberTraits<Number>::lane(x, 0);
      for (int l = 1; l < width_v<Number>; ++l)
        r = std::min(r, NumberTraits<Number>::lane(x, l));
      return r;
    }

    using Clock = std::chrono::steady_clock;

    double seconds_since(Clock::time_point start)
    {
      return std::chrono::duration<double>(Clock::now() - start).count();
    }
  } // namespace


  template <int dim>
  std::vector<LocalProblem<dim>> distribute(const PrecomputedMatrices<dim> &M,
                                            const Partition &partition,
                                            unsigned lanes)
  {
    const unsigned n_ranks = partition.n_ranks;
    const auto &key_of = partition.key_of_node;
    const auto &node_of = partition.node_of_key;
    std::vector<LocalProblem<dim>> problems(n_ranks);

    // Graph rows in global key order.
    const unsigned n = unsigned(M.m_i.size());
    std::vector<std::vector<unsigned>> key_rows(n);
    for (unsigned key = 0; key < n; ++key)
    {
      for (unsigned node : M.graph.row(node_of[key]))
        key_rows[key].push_back(key_of[node]);
      std::sort(key_rows[key].begin(), key_rows[key].end());
    }

    for (unsigned r = 0; r < n_ranks; ++r)
    {
      LocalProblem<dim> &local = problems[r];
      local.rank = r;
      const unsigned first = partition.range_start[r];
      const unsigned last = partition.range_start[r + 1];
      const unsigned n_owned = last - first;
      const auto &ghosts = partition.ghosts[r];
      const unsigned n_relevant = n_owned + unsigned(ghosts.size());

      auto pre_local = [&](unsigned key) -> unsigned {
        if (key >= first && key < last)
          return key - first;
        const auto it = std::lower_bound(ghosts.begin(), ghosts.end(), key);
        if (it == ghosts.end() || *it != key)
          throw std::logic_error("distribute: key is not locally relevant");
        return n_owned + unsigned(it - ghosts.begin());
      };

      std::vector<bool> exported(n_owned, false);
      for (unsigned s = 0; s < n_ranks; ++s)
        for (unsigned key : partition.exports[r][s])
          exported[key - first] = true;

      std::vector<std::vector<unsigned>> owned_rows(n_owned);
      for (unsigned key = first; key < last; ++key)
        for (unsigned c : key_rows[key])
          owned_rows[key - first].push_back(pre_local(c));

      local.numbering = renumber(Connectivity::from_rows(owned_rows),
                                 lanes,
                                 exported,
                                 standard_stencil(dim),
                                 n_relevant);
      const LocalNumbering &num = local.numbering;

      local.global_key.resize(n_relevant);
      local.mesh_dof.resize(n_relevant);
      for (unsigned i = 0; i < n_relevant; ++i)
      {
        const unsigned pre = num.old_index[i];
        local.global_key[i] = pre < n_owned ? first + pre : ghosts[pre - n_owned];
        local.mesh_dof[i] = node_of[local.global_key[i]];
      }
      auto local_of = [&](unsigned key) { return num.new_index[pre_local(key)]; };
      auto is_owned = [&](unsigned key) { return key >= first && key < last; };

      // Rows in slot order: diagonal first, then ascending key; ghost rows
      // hold their owned columns only.
      std::vector<std::vector<unsigned>> rows(n_relevant);
      for (unsigned i = 0; i < n_relevant; ++i)
      {
        const unsigned key = local.global_key[i];
        if (i < n_owned)
        {
          rows[i].push_back(i);
          for (unsigned c : key_rows[key])
            if (c != key)
              rows[i].push_back(local_of(c));
        }
        else
          for (unsigned c : key_rows[key])
            if (is_owned(c))
              rows[i].push_back(local_of(c));
      }
      local.pattern = SparsityPattern(Connectivity::from_rows(rows),
                                      lanes,
                                      num.n_export,
                                      num.n_internal,
                                      n_owned);
      local.ranges = RowRanges{num.n_export, num.n_internal, n_owned, lanes};

      const SparsityPattern &pattern = local.pattern;
      local.m_ij.reinit(pattern);
      local.c_ij.reinit(pattern);
      for (unsigned i = 0; i < n_relevant; ++i)
        for (unsigned s = 0; s < pattern.row_length(i); ++s)
        {
          const std::size_t p = pattern.position(i, s);
          const std::size_t q =
            M.find(local.mesh_dof[i], local.mesh_dof[pattern.column(p)]);
          local.m_ij(p) = M.m_ij[q];
          for (int d = 0; d < dim; ++d)
            local.c_ij(p, d) = M.c_ij[q][d];
        }

      local.m_i.resize(n_relevant);
      local.inv_m_i.resize(n_relevant);
      for (unsigned i = 0; i < n_relevant; ++i)
      {
        local.m_i[i] = M.m_i[local.mesh_dof[i]];
        local.inv_m_i[i] = M.inv_m_i[local.mesh_dof[i]];
      }
      local.card.resize(n_owned);
      local.boundary_kind.resize(n_owned);
      local.boundary_normal.resize(n_owned);
      for (unsigned i = 0; i < n_owned; ++i)
      {
        local.card[i] = pattern.row_length(i);
        local.boundary_kind[i] = M.boundary_kind[local.mesh_dof[i]];
        local.boundary_normal[i] = M.boundary_normal[local.mesh_dof[i]];
      }

      GhostExchange &ex = local.exchange;
      ex.rank = r;
      ex.send_nodes.assign(n_ranks, {});
      ex.receive_nodes.assign(n_ranks, {});
      ex.send_entries.assign(n_ranks, {});
      ex.receive_entries.assign(n_ranks, {});
      for (unsigned s = 0; s < n_ranks; ++s)
      {
        for (unsigned key : partition.exports[r][s])
        {
          ex.send_nodes[s].push_back(local_of(key));
          for (unsigned c : key_rows[key])
            if (c != key && partition.owner(c) == s)
              ex.send_entries[s].push_back(
                pattern.find(local_of(key), local_of(c)));
        }
        for (unsigned key : partition.exports[s][r])
        {
          ex.receive_nodes[s].push_back(local_of(key));
          for (unsigned c : key_rows[key])
            if (is_owned(c))
              ex.receive_entries[s].push_back(
                pattern.find(local_of(key), local_of(c)));
        }
      }
    }
    return problems;
  }

  template <int dim>
  void scatter_to_local(const LocalProblem<dim> &local,
                        const std::vector<double> &global,
                        std::vector<double> &values,
                        unsigned stride)
  {
    values.resize(std::size_t(local.n_relevant()) * stride);
    for (unsigned i = 0; i < local.n_relevant(); ++i)
      for (unsigned c = 0; c < stride; ++c)
        values[std::size_t(i) * stride + c] =
          global[std::size_t(local.mesh_dof[i]) * stride + c];
  }

  template <int dim>
  void gather_owned(const LocalProblem<dim> &local,
                    const std::vector<double> &values,
                    std::vector<double> &global,
                    unsigned stride)
  {
    for (unsigned i = 0; i < local.n_owned(); ++i)
      for (unsigned c = 0; c < stride; ++c)
        global[std::size_t(local.mesh_dof[i]) * stride + c] =
          values[std::size_t(i) * stride + c];
  }


  /**
   * Row kernels. A kernel instantiated with Number = Lanes<k> processes the
   * k rows [i, i + k) of one SELL slice; with Number = double it processes
   * row i alone. Both run the same operations in the same order.
   */
  template <int dim>
  struct EulerStepper<dim>::Impl
  {
    using S = EulerStepper<dim>;
    static constexpr int n = dim + 2;
    template <typename Number>
    using StateN = State<dim, Number>;

    template <typename Number>
    static void rows_of(unsigned i, unsigned *rows)
    {
      for (int l = 0; l < width_v<Number>; ++l)
        rows[l] = i + l;
    }

    /* Step 0: entropy quantities of every locally relevant node. */
    static void step0(S &s, const Vector &U, unsigned i)
    {
      StateN<double> Ui;
      for (int c = 0; c < n; ++c)
        Ui[c] = U[std::size_t(i) * n + c];
      s.eta_over_rho_[i] = s.gas_.harten_entropy(Ui) / Ui[0];
      s.phi_[i] = s.gas_.specific_entropy_phi(Ui);
    }

    /* Step 1: off-diagonal d_ij and the indicator alpha_i. */
    template <typename Number>
    static void step1(S &s, const Vector &U, unsigned i)
    {
      const LocalProblem<dim> &L = s.local_;
      const SparsityPattern &pattern = L.pattern;
      const RiemannSolver riemann(s.gas_);
      unsigned rows[width_v<Number>];
      rows_of<Number>(i, rows);
      const bool simd = i < pattern.n_internal();

      const StateN<Number> Ui = gather_vec<n, Number>(U, rows);
      Indicator<dim, Number> indicator(s.gas_);
      indicator.reset(Ui);

      const unsigned length = pattern.row_length(i);
      for (unsigned slot = 0; slot < length; ++slot)
      {
        const std::size_t p = pattern.position(i, slot);
        const unsigned *cols = pattern.columns().data() + p;
        const StateN<Number> Uj = gather_vec<n, Number>(U, cols);
        const Vec<dim, Number> c_ij = load_vec<dim, Number>(L.c_ij, p);
        indicator.accumulate(Uj, gather<Number>(s.eta_over_rho_.data(), cols, 1, 0), c_ij);
        if (slot == 0)
          continue;
        if (!simd)
        {
          // Entries mirrored in step 2 from a row that computes them.
          const unsigned j = cols[0];
          if (j < pattern.n_internal() || (j < pattern.n_owned() && j < i))
            continue;
        }
        const Vec<dim, Number> c_ji = load_vec_transposed<dim, Number>(L.c_ij, pattern, p);
        store<Number>(s.d_, p, 0, riemann.d_ij_low(Ui, Uj, c_ij, c_ji));
      }
      scatter<Number>(s.alpha_.data(), rows, 1, 0, indicator.result());
    }

    /* Step 2: mirror, diagonal, local time step bound. */
    template <typename Number>
    static double step2(S &s, unsigned i)
    {
      const SparsityPattern &pattern = s.local_.pattern;
      unsigned rows[width_v<Number>];
      rows_of<Number>(i, rows);
      const bool simd = i < pattern.n_internal();
      const unsigned length = pattern.row_length(i);

      Number sum(0.);
      for (unsigned slot = 1; slot < length; ++slot)
      {
        const std::size_t p = pattern.position(i, slot);
        if (!simd)
        {
          const unsigned j = pattern.column(p);
          if (j < pattern.n_internal() || (j < pattern.n_owned() && j < i))
            s.d_(p) = s.d_(pattern.transpose(p));
        }
        sum += load<Number>(s.d_, p, 0);
      }
      const Number d_ii = -sum;
      store<Number>(s.d_, pattern.position(i, 0), 0, d_ii);

      const Number m_i = gather<Number>(s.local_.m_i.data(), rows, 1, 0);
      const Number inf(std::numeric_limits<double>::infinity());
      const Number tau = select(d_ii < Number(0.),
                                Number(s.parameters_.cfl) * m_i /
                                  (Number(-2.) * select(d_ii < Number(0.), d_ii, Number(-1.))),
                                inf);
      return lane_min(tau);
    }

    /* Step 3: low-order update, high-order residual, limiter bounds. */
    template <typename Number>
    static void step3(S &s, const Vector &U, double tau, unsigned i)
    {
      const LocalProblem<dim> &L = s.local_;
      const SparsityPattern &pattern = L.pattern;
      unsigned rows[width_v<Number>];
      rows_of<Number>(i, rows);

      const StateN<Number> Ui = gather_vec<n, Number>(U, rows);
      const Flux<dim, Number> f_i = s.gas_.flux(Ui);
      const Number alpha_i = gather<Number>(s.alpha_.data(), rows, 1, 0);
      const Number zero(0.), half(0.5);

      StateN<Number> update, R;
      for (int c = 0; c < n; ++c)
        update[c] = R[c] = zero;
      Bounds<Number> bounds;

      const unsigned length = pattern.row_length(i);
      for (unsigned slot = 0; slot < length; ++slot)
      {
        const std::size_t p = pattern.position(i, slot);
        const unsigned *cols = pattern.columns().data() + p;
        const StateN<Number> Uj = gather_vec<n, Number>(U, cols);
        const Vec<dim, Number> c_ij = load_vec<dim, Number>(L.c_ij, p);
        const Number d = load<Number>(s.d_, p, 0);
        const Number alpha_j = gather<Number>(s.alpha_.data(), cols, 1, 0);

        const StateN<Number> F = contract(s.gas_.flux(Uj) - f_i, c_ij);
        const StateN<Number> dU = Uj - Ui;
        const Number d_high = d * (alpha_i + alpha_j) * half;
        update += d * dU - F;
        R += d_high * dU - F;

        const MaskOf<Number> positive = d > zero;
        const Number scale = half / select(positive, d, Number(1.));
        StateN<Number> Ubar;
        for (int c = 0; c < n; ++c)
          Ubar[c] = select(positive, half * (Ui[c] + Uj[c]) - F[c] * scale, Ui[c]);
        Limiter<dim>::accumulate_bounds(bounds, Ubar,
                                        gather<Number>(s.phi_.data(), cols, 1, 0));
      }

      const Number factor =
        Number(tau) * gather<Number>(L.inv_m_i.data(), rows, 1, 0);
      scatter_vec<n, Number>(s.U_low_, rows, StateN<Number>(Ui + factor * update));
      scatter_vec<n, Number>(s.R_, rows, R);
      scatter<Number>(s.bounds_.data(), rows, 3, 0, bounds.rho_min);
      scatter<Number>(s.bounds_.data(), rows, 3, 1, bounds.rho_max);
      scatter<Number>(s.bounds_.data(), rows, 3, 2, bounds.phi_min);
    }

    template <typename Number>
    static Bounds<Number> load_bounds(const S &s, const unsigned *rows)
    {
      Bounds<Number> b;
      b.rho_min = gather<Number>(s.bounds_.data(), rows, 3, 0);
      b.rho_max = gather<Number>(s.bounds_.data(), rows, 3, 1);
      b.phi_min = gather<Number>(s.bounds_.data(), rows, 3, 2);
      return b;
    }

    template <typename Number>
    static Number row_card(const S &s, unsigned i, const unsigned *rows)
    {
      if constexpr (width_v<Number> == 1)
        return double(s.local_.card[rows[0]]);
      else
        return Number(double(s.local_.pattern.row_length(i)));
    }

    /* Step 4: antidiffusive fluxes P_ij and first limiter pass. */
    template <typename Number>
    static void step4(S &s, const Vector &U, double tau, unsigned i)
    {
      const LocalProblem<dim> &L = s.local_;
      const SparsityPattern &pattern = L.pattern;
      const Limiter<dim> limiter(s.gas_, s.parameters_.newton_steps);
      unsigned rows[width_v<Number>];
      rows_of<Number>(i, rows);

      const StateN<Number> Ui = gather_vec<n, Number>(U, rows);
      const StateN<Number> Ri = gather_vec<n, Number>(s.R_, rows);
      const StateN<Number> U_low = gather_vec<n, Number>(s.U_low_, rows);
      const Number alpha_i = gather<Number>(s.alpha_.data(), rows, 1, 0);
      const Number inv_m_i = gather<Number>(L.inv_m_i.data(), rows, 1, 0);
      const Bounds<Number> bounds = load_bounds<Number>(s, rows);
      const Number factor =
        Number(tau) * inv_m_i * (row_card<Number>(s, i, rows) - Number(1.));
      const Number zero(0.), half(0.5);

      StateN<Number> P0;
      for (int c = 0; c < n; ++c)
        P0[c] = zero;
      const std::size_t p0 = pattern.position(i, 0);
      store_vec<n, Number>(s.P_, p0, P0);
      store<Number>(s.l_[0], p0, 0, zero);

      const unsigned length = pattern.row_length(i);
      for (unsigned slot = 1; slot < length; ++slot)
      {
        const std::size_t p = pattern.position(i, slot);
        const unsigned *cols = pattern.columns().data() + p;
        const StateN<Number> Uj = gather_vec<n, Number>(U, cols);
        const StateN<Number> Rj = gather_vec<n, Number>(s.R_, cols);
        const Number alpha_j = gather<Number>(s.alpha_.data(), cols, 1, 0);
        const Number inv_m_j = gather<Number>(L.inv_m_i.data(), cols, 1, 0);
        const Number d = load<Number>(s.d_, p, 0);
        const Number m_ij = load<Number>(L.m_ij, p, 0);

        const Number d_high = d * (alpha_i + alpha_j) * half;
        const Number b_ij = -(m_ij * inv_m_j);
        const Number b_ji = -(m_ij * inv_m_i);
        const StateN<Number> P =
          factor * StateN<Number>((d_high - d) * (Uj - Ui) + b_ij * Rj - b_ji * Ri);
        store_vec<n, Number>(s.P_, p, P);
        store<Number>(s.l_[0], p, 0, limiter.compute(U_low, P, bounds));
      }
    }

    /* Steps 5 and 6: one limiter pass. Non-final passes rescale P and
     * recompute l into the other buffer; the final pass writes U_out with
     * boundary conditions applied. */
    template <typename Number>
    static void pass(S &s, unsigned current, bool final, Vector &U_out, unsigned i)
    {
      const LocalProblem<dim> &L = s.local_;
      const SparsityPattern &pattern = L.pattern;
      unsigned rows[width_v<Number>];
      rows_of<Number>(i, rows);
      const StencilMatrix<1> &l = s.l_[current];
      const Number one(1.);

      const StateN<Number> U_low = gather_vec<n, Number>(s.U_low_, rows);
      const Number lambda = one / (row_card<Number>(s, i, rows) - one);

      StateN<Number> sum;
      for (int c = 0; c < n; ++c)
        sum[c] = Number(0.);
      const unsigned length = pattern.row_length(i);
      for (unsigned slot = 1; slot < length; ++slot)
      {
        const std::size_t p = pattern.position(i, slot);
        const Number l_ij =
          min(load<Number>(l, p, 0), load_transposed<Number>(l, pattern, p, 0));
        const StateN<Number> P = load_vec<n, Number>(s.P_, p);
        sum += l_ij * P;
        if (!final)
          store_vec<n, Number>(s.P_, p, StateN<Number>((one - l_ij) * P));
      }
      const StateN<Number> U_new = U_low + lambda * sum;

      if (final)
      {
        scatter_vec<n, Number>(U_out, rows, U_new);
        for (int k = 0; k < width_v<Number>; ++k)
          s.apply_boundary_condition_row(U_out, rows[k]);
        return;
      }

      scatter_vec<n, Number>(s.U_low_, rows, U_new);
      const Limiter<dim> limiter(s.gas_, s.parameters_.newton_steps);
      const Bounds<Number> bounds = load_bounds<Number>(s, rows);
      StencilMatrix<1> &l_next = s.l_[1 - current];
      store<Number>(l_next, pattern.position(i, 0), 0, Number(0.));
      for (unsigned slot = 1; slot < length; ++slot)
      {
        const std::size_t p = pattern.position(i, slot);
        const StateN<Number> P = load_vec<n, Number>(s.P_, p);
        store<Number>(l_next, p, 0, limiter.compute(U_new, P, bounds));
      }
    }

    /* Low-order output when no limiter pass is requested. */
    static void copy_low_order(S &s, Vector &U_out, unsigned i)
    {
      for (int c = 0; c < n; ++c)
        U_out[std::size_t(i) * n + c] = s.U_low_[std::size_t(i) * n + c];
      s.apply_boundary_condition_row(U_out, i);
    }
  };


  template <int dim>
  EulerStepper<dim>::EulerStepper(const LocalProblem<dim> &local,
                                  Communicator &comm,
                                  const StepperParameters &parameters)
    : local_(local)
    , comm_(comm)
    , parameters_(parameters)
    , gas_(parameters.gamma)
    , pool_(std::make_unique<WorkerPool>(parameters.workers))
  {
    if (!(parameters_.cfl > 0. && parameters_.cfl <= 1.))
      throw std::invalid_argument("EulerStepper: c_cfl must lie in (0, 1]");
    if (parameters_.lanes != local.pattern.lanes())
      throw std::invalid_argument("EulerStepper: lane width differs from the pattern");
    const unsigned k = parameters_.lanes;
    if (k != 1 && k != 2 && k != 4 && k != 8)
      throw std::invalid_argument("EulerStepper: lane width must be 1, 2, 4 or 8");

    const unsigned n_relevant = local.n_relevant();
    const unsigned n_owned = local.n_owned();
    eta_over_rho_.assign(n_relevant, 0.);
    phi_.assign(n_relevant, 0.);
    alpha_.assign(n_relevant, 0.);
    R_.assign(std::size_t(n_relevant) * n_comp, 0.);
    U_low_.assign(std::size_t(n_owned) * n_comp, 0.);
    bounds_.assign(std::size_t(n_owned) * 3, 0.);
    d_.reinit(local.pattern);
    P_.reinit(local.pattern);
    l_[0].reinit(local.pattern);
    l_[1].reinit(local.pattern);
  }

  template <int dim>
  EulerStepper<dim>::~EulerStepper() = default;

  template <int dim>
  void EulerStepper<dim>::apply_boundary_condition_row(Vector &U, unsigned i) const
  {
    double *u = U.data() + std::size_t(i) * n_comp;
    switch (local_.boundary_kind[i])
    {
      case BoundaryKind::dirichlet:
        if (dirichlet_)
          for (int c = 0; c < n_comp; ++c)
            u[c] = (*dirichlet_)[c];
        break;
      case BoundaryKind::slip:
      {
        const Point<dim> &normal = local_.boundary_normal[i];
        double m_n = 0.;
        for (int d = 0; d < dim; ++d)
          m_n += u[1 + d] * normal[d];
        for (int d = 0; d < dim; ++d)
          u[1 + d] -= m_n * normal[d];
        break;
      }
      case BoundaryKind::none:
      case BoundaryKind::do_nothing:
        break;
    }
  }

  template <int dim>
  void EulerStepper<dim>::apply_boundary_conditions(Vector &U) const
  {
    for (unsigned i = 0; i < local_.n_owned(); ++i)
      apply_boundary_condition_row(U, i);
  }

  template <int dim>
  void EulerStepper<dim>::combine(Vector &out,
                                  double a,
                                  const Vector &x,
                                  double b,
                                  const Vector &y) const
  {
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = a * x[k] + b * y[k];
  }

  template <int dim>
  void EulerStepper<dim>::check_admissible(const Vector &U, const char *where) const
  {
    for (unsigned i = 0; i < local_.n_owned(); ++i)
    {
      State<dim> u;
      for (int c = 0; c < n_comp; ++c)
        u[c] = U[std::size_t(i) * n_comp + c];
      bool finite = true;
      for (int c = 0; c < n_comp; ++c)
        finite = finite && std::isfinite(u[c]);
      if (finite && gas_.is_admissible(u))
        continue;
      std::ostringstream msg;
      msg.precision(17);
      msg << where << ": inadmissible state at node " << local_.mesh_dof[i];
      if (!local_.node_points.empty())
      {
        msg << " (";
        for (int d = 0; d < dim; ++d)
          msg << (d ? ", " : "") << local_.node_points[i][d];
        msg << ")";
      }
      msg << ": rho = " << u[0] << ", epsilon = " << gas_.internal_energy(u);
      throw std::domain_error(msg.str());
    }
  }

  template <int dim>
  StageResult EulerStepper<dim>::euler(const Vector &U,
                                       Vector &U_out,
                                       double tau_limit,
                                       bool fixed)
  {
    if (U.size() != std::size_t(local_.n_relevant()) * n_comp)
      throw std::invalid_argument("EulerStepper::euler: input has wrong size");
    U_out.resize(U.size());
    StageResult result;
    switch (parameters_.lanes)
    {
      case 1:
        result = run<1>(U, U_out, tau_limit, fixed);
        break;
      case 2:
        result = run<2>(U, U_out, tau_limit, fixed);
        break;
      case 4:
        result = run<4>(U, U_out, tau_limit, fixed);
        break;
      default:
        result = run<8>(U, U_out, tau_limit, fixed);
        break;
    }
    if (!result.restart)
    {
      check_admissible(U_out, "euler stage");
      ++timers_.stages;
      if (stage_observer)
        stage_observer(U, U_out);
    }
    return result;
  }

  template <int dim>
  template <int k>
  StageResult EulerStepper<dim>::run(const Vector &U, Vector &U_out, double tau_limit, bool fixed)
  {
    using Wide = std::conditional_t<k == 1, double, Lanes<k>>;
    WorkerPool &pool = *pool_;
    const RowRanges &ranges = local_.ranges;
    const GhostExchange &ex = local_.exchange;
    const bool overlap = parameters_.overlap;
    const unsigned n_internal = ranges.n_internal;

    auto for_rows = [&](auto &&simd_kernel, auto &&scalar_kernel) {
      return [&, simd_kernel, scalar_kernel](unsigned begin, unsigned end) {
        if (begin < n_internal)
          for (unsigned i = begin; i < end; i += k)
            simd_kernel(i);
        else
          for (unsigned i = begin; i < end; ++i)
            scalar_kernel(i);
      };
    };

    auto node_sync = [&](double *data, unsigned stride, std::uint64_t &tag) {
      return [&, data, stride]() { tag = ex.start_nodes(comm_, data, stride); };
    };
    auto entry_sync = [&](StencilMatrix<1> &M, std::uint64_t &tag) {
      return [&]() { tag = ex.start_entries(comm_, [&](std::size_t p) { return M(p); }); };
    };
    auto finish_entries = [&](StencilMatrix<1> &M, std::uint64_t tag) {
      ex.finish_entries(comm_, tag, [&](std::size_t p, double v) { M(p) = v; });
      ++timers_.entry_syncs;
    };

    std::uint64_t tag = 0;
    auto t0 = Clock::now();

    /* Step 0 */
    {
      const unsigned n_relevant = local_.n_relevant();
      pool.run([&](unsigned w) {
        const auto [b, e] = WorkerPool::chunk(0, n_relevant, 1, w, pool.size());
        for (unsigned i = b; i < e; ++i)
          Impl::step0(*this, U, i);
      });
      timers_.seconds[0] += seconds_since(t0);
      ++timers_.calls[0];
    }

    /* Step 1, sync alpha */
    t0 = Clock::now();
    overlapped_loop(pool,
                    ranges,
                    for_rows([&](unsigned i) { Impl::template step1<Wide>(*this, U, i); },
                             [&](unsigned i) { Impl::template step1<double>(*this, U, i); }),
                    node_sync(alpha_.data(), 1, tag),
                    overlap);
    ex.finish_nodes(comm_, tag, alpha_.data(), 1);
    ++timers_.node_syncs;
    timers_.seconds[1] += seconds_since(t0);
    ++timers_.calls[1];

    /* Step 2, reduce tau */
    t0 = Clock::now();
    std::vector<double> tau_worker(pool.size(), std::numeric_limits<double>::infinity());
    pool.run([&](unsigned w) {
      double tau = std::numeric_limits<double>::infinity();
      auto [b, e] = WorkerPool::chunk(0, n_internal, k, w, pool.size());
      for (unsigned i = b; i < e; i += k)
        tau = std::min(tau, Impl::template step2<Wide>(*this, i));
      std::tie(b, e) = WorkerPool::chunk(n_internal, ranges.n_owned, 1, w, pool.size());
      for (unsigned i = b; i < e; ++i)
        tau = std::min(tau, Impl::template step2<double>(*this, i));
      tau_worker[w] = tau;
    });
    double tau_max = *std::min_element(tau_worker.begin(), tau_worker.end());
    tau_max = comm_.allreduce_min(local_.rank, tau_max);
    last_tau_max_ = tau_max;
    timers_.seconds[2] += seconds_since(t0);
    ++timers_.calls[2];

    if (!(tau_max < std::numeric_limits<double>::infinity()) && !fixed &&
        !(tau_limit < std::numeric_limits<double>::infinity()))
      throw std::domain_error("compute_tau: constant field, time step unbounded");

    StageResult result;
    result.tau_max = tau_max;
    if (fixed)
    {
      result.tau = tau_limit;
      // The invariant domain needs tau <= tau_max / c_cfl.
      if (tau_limit > tau_max / parameters_.cfl)
      {
        result.restart = true;
        return result;
      }
    }
    else
      result.tau = std::min(tau_max, tau_limit);
    const double tau = result.tau;

    /* Step 3, sync R */
    t0 = Clock::now();
    overlapped_loop(pool,
                    ranges,
                    for_rows([&](unsigned i) { Impl::template step3<Wide>(*this, U, tau, i); },
                             [&](unsigned i) { Impl::template step3<double>(*this, U, tau, i); }),
                    node_sync(R_.data(), n_comp, tag),
                    overlap);
    ex.finish_nodes(comm_, tag, R_.data(), n_comp);
    ++timers_.node_syncs;
    timers_.seconds[3] += seconds_since(t0);
    ++timers_.calls[3];

    const unsigned passes = parameters_.limiter_passes;
    if (passes == 0)
    {
      t0 = Clock::now();
      overlapped_loop(pool,
                      ranges,
                      [&](unsigned b, unsigned e) {
                        for (unsigned i = b; i < e; ++i)
                          Impl::copy_low_order(*this, U_out, i);
                      },
                      node_sync(U_out.data(), n_comp, tag),
                      overlap);
      ex.finish_nodes(comm_, tag, U_out.data(), n_comp);
      ++timers_.node_syncs;
      timers_.seconds[6] += seconds_since(t0);
      ++timers_.calls[6];
      return result;
    }

    /* Step 4, sync l */
    t0 = Clock::now();
    overlapped_loop(pool,
                    ranges,
                    for_rows([&](unsigned i) { Impl::template step4<Wide>(*this, U, tau, i); },
                             [&](unsigned i) { Impl::template step4<double>(*this, U, tau, i); }),
                    entry_sync(l_[0], tag),
                    overlap);
    finish_entries(l_[0], tag);
    timers_.seconds[4] += seconds_since(t0);
    ++timers_.calls[4];

    /* Steps 5 (intermediate passes) and 6 (final pass, sync U) */
    unsigned current = 0;
    for (unsigned pass = 0; pass < passes; ++pass)
    {
      const bool final = pass + 1 == passes;
      const int step = final ? 6 : 5;
      t0 = Clock::now();
      auto body = for_rows(
        [&](unsigned i) { Impl::template pass<Wide>(*this, current, final, U_out, i); },
        [&](unsigned i) { Impl::template pass<double>(*this, current, final, U_out, i); });
      if (final)
      {
        overlapped_loop(pool, ranges, body, node_sync(U_out.data(), n_comp, tag), overlap);
        ex.finish_nodes(comm_, tag, U_out.data(), n_comp);
        ++timers_.node_syncs;
      }
      else
      {
        overlapped_loop(pool, ranges, body, entry_sync(l_[1 - current], tag), overlap);
        finish_entries(l_[1 - current], tag);
        current = 1 - current;
      }
      timers_.seconds[step] += seconds_since(t0);
      ++timers_.calls[step];
    }
    return result;
  }

#define IDP_INSTANTIATE(dim)                                                   \
  template struct LocalProblem<dim>;                                           \
  template std::vector<LocalProblem<dim>> distribute<dim>(                     \
    const PrecomputedMatrices<dim> &, const Partition &, unsigned);            \
  template void scatter_to_local<dim>(const LocalProblem<dim> &,               \
                                      const std::vector<double> &,             \
                                      std::vector<double> &, unsigned);        \
  template void gather_owned<dim>(const LocalProblem<dim> &,                   \
                                  const std::vector<double> &,                 \
                                  std::vector<double> &, unsigned);            \
  template class EulerStepper<dim>;
  IDP_INSTANTIATE(1)
  IDP_INSTANTIATE(2)
  IDP_INSTANTIATE(3)
#undef IDP_INSTANTIATE

} // namespace idp
