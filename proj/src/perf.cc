#include <idp/perf.h>

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace idp
{
  std::array<Transfer, 7> predicted_transfer(int dim, unsigned card)
  {
    const double d = dim;
    const double nc = dim + 2;
    const double v = 1. / double(card);
    const double idx = 0.5;

    std::array<Transfer, 7> t;
    // 0: U_i -> eta_i / rho_i, phi_i
    t[0] = {nc * v, 2. * v};
    // 1: j, c_ij, j^T, c_ji, U_j, eta_j / rho_j -> d_ij, alpha_i
    t[1] = {idx + d + idx + d + (nc + 1.) * v, 1. + v};
    // 2: d_ij, j^T, m_i -> d_ii
    t[2] = {1. + idx + v, v};
    // 3: j, c_ij, d_ij, U_j, alpha_j, alpha_i, 1/m_i -> U_low_i, R_i, 3 bounds
    t[3] = {idx + d + 1. + (nc + 3.) * v, (2. * nc + 3.) * v};
    // 4: j, j^T, d_ij, m_ij, U_j, R_j, alpha_j, 1/m_j, U_low_i, bounds -> P_ij, l_ij
    t[4] = {idx + idx + 2. + (2. * nc + 2.) * v + (nc + 3.) * v, nc + 1.};
    // 5: P_ij, l_ij, j^T, U_low_i, bounds -> U_low_i, P_ij, l_ij
    t[5] = {nc + 1. + idx + (nc + 3.) * v, nc * v + nc + 1.};
    // 6: P_ij, l_ij, j^T, U_low_i -> U_i
    t[6] = {nc + 1. + idx + nc * v, nc * v};
    return t;
  }

  std::string transfer_formulas()
  {
    return "doubles per stencil entry; n_c = d + 2 components, v = 1/card (per-node data),\n"
           "index = 0.5 (32-bit), transposed values cached, no read for ownership\n"
           "  step 0: read n_c v                                write 2 v\n"
           "  step 1: read 2 index + 2 d + (n_c + 1) v          write 1 + v\n"
           "  step 2: read 1 + index + v                        write v\n"
           "  step 3: read index + d + 1 + (n_c + 3) v          write (2 n_c + 3) v\n"
           "  step 4: read 2 index + 2 + (3 n_c + 5) v          write n_c + 1\n"
           "  step 5: read n_c + 1 + index + (n_c + 3) v        write n_c v + n_c + 1\n"
           "  step 6: read n_c + 1 + index + n_c v              write n_c v\n";
  }

  PerfReport perf_report(const std::vector<StepTimers> &timers,
                         int dim,
                         unsigned card,
                         unsigned n_dofs,
                         std::size_t nonzeros,
                         std::uint64_t messages,
                         std::uint64_t doubles_sent)
  {
    PerfReport r;
    for (const StepTimers &t : timers)
    {
      for (int s = 0; s < 7; ++s)
      {
        r.seconds[s] = std::max(r.seconds[s], t.seconds[s]);
        r.calls[s] = std::max(r.calls[s], t.calls[s]);
      }
      r.stages = std::max(r.stages, t.stages);
      r.node_syncs = std::max(r.node_syncs, t.node_syncs);
      r.entry_syncs = std::max(r.entry_syncs, t.entry_syncs);
    }
    for (double s : r.seconds)
      r.total_seconds += s;
    r.predicted = predicted_transfer(dim, card);
    r.n_dofs = n_dofs;
    r.nonzeros = nonzeros;
    r.dofs_per_second =
      r.total_seconds > 0. ? double(n_dofs) * double(r.stages) / r.total_seconds : 0.;
    r.messages = messages;
    r.doubles_sent = doubles_sent;
    return r;
  }

  void write_perf_table(std::ostream &out, const PerfReport &r)
  {
    char line[160];
    out << "step      calls     seconds   share   predicted read  write [double/nnz]\n";
    for (int s = 0; s < 7; ++s)
    {
      std::snprintf(line, sizeof(line), "%4d %10llu %11.4f %6.1f%% %14.3f %6.3f\n", s,
                    static_cast<unsigned long long>(r.calls[s]), r.seconds[s],
                    r.total_seconds > 0. ? 100. * r.seconds[s] / r.total_seconds : 0.,
                    r.predicted[s].read, r.predicted[s].write);
      out << line;
    }
    std::snprintf(line, sizeof(line),
                  "total %20.4f s, %llu stages, %u dofs, %zu nnz, %.4g dofs/s\n",
                  r.total_seconds, static_cast<unsigned long long>(r.stages), r.n_dofs,
                  r.nonzeros, r.dofs_per_second);
    out << line;
    std::snprintf(line, sizeof(line),
                  "syncs: %llu node, %llu entry; %llu messages, %llu doubles sent\n",
                  static_cast<unsigned long long>(r.node_syncs),
                  static_cast<unsigned long long>(r.entry_syncs),
                  static_cast<unsigned long long>(r.messages),
                  static_cast<unsigned long long>(r.doubles_sent));
    out << line << transfer_formulas();
  }

  void write_perf_csv(std::ostream &out, const PerfReport &r)
  {
    out << "step,calls,seconds,predicted_read,predicted_write\n";
    char line[160];
    for (int s = 0; s < 7; ++s)
    {
      std::snprintf(line, sizeof(line), "%d,%llu,%.9g,%.6g,%.6g\n", s,
                    static_cast<unsigned long long>(r.calls[s]), r.seconds[s],
                    r.predicted[s].read, r.predicted[s].write);
      out << line;
    }
    std::snprintf(line, sizeof(line), "total,%llu,%.9g,,\n",
                  static_cast<unsigned long long>(r.stages), r.total_seconds);
    out << line;
  }

} // namespace idp
