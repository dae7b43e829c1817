#pragma once

#include <idp/stepper.h>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace idp
{
  /// Predicted memory traffic in doubles per stencil entry.
  struct Transfer
  {
    double read = 0.;
    double write = 0.;
  };

  /**
   * Traffic model of steps 0..6 for a stencil of `card` entries per row in
   * dimension dim (n_c = dim + 2 components). Counting rules:
   *  - a per-entry double counts 1, a 32-bit column index 0.5;
   *  - per-node quantities are loaded once per row and count 1/card;
   *  - entries reached through the transpose (c_ji, l_ji) are counted only
   *    where the kernel needs their index (0.5), the value itself is
   *    assumed cached;
   *  - stores do not incur a read for ownership.
   */
  std::array<Transfer, 7> predicted_transfer(int dim, unsigned card);

  /// Human readable statement of the per-step formulas.
  std::string transfer_formulas();

  struct PerfReport
  {
    std::array<double, 7> seconds{};
    std::array<std::uint64_t, 7> calls{};
    std::array<Transfer, 7> predicted{};
    double total_seconds = 0.;
    std::uint64_t stages = 0;
    unsigned n_dofs = 0;
    std::size_t nonzeros = 0;
    double dofs_per_second = 0.; // n_dofs * stages / total_seconds
    std::uint64_t node_syncs = 0, entry_syncs = 0;
    std::uint64_t messages = 0, doubles_sent = 0;
  };

  /// Timers are taken as the per-step maximum over ranks.
  PerfReport perf_report(const std::vector<StepTimers> &timers,
                         int dim,
                         unsigned card,
                         unsigned n_dofs,
                         std::size_t nonzeros,
                         std::uint64_t messages,
                         std::uint64_t doubles_sent);

  void write_perf_table(std::ostream &out, const PerfReport &report);
  void write_perf_csv(std::ostream &out, const PerfReport &report);

} // namespace idp
