#pragma once

#include <idp/sparsity.h>

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace idp
{
  /**
   * Distribution of a global stencil graph over R simulated ranks. Nodes
   * are keyed by their position in a global Cuthill-McKee order; rank r
   * owns the contiguous key range [range_start[r], range_start[r + 1]).
   * All key lists are sorted ascending.
   */
  struct Partition
  {
    unsigned n_ranks = 1;
    std::vector<unsigned> node_of_key; // key -> graph row
    std::vector<unsigned> key_of_node; // graph row -> key
    std::vector<unsigned> range_start;

    /// ghosts[r]: keys read by rank r's stencils but owned elsewhere.
    std::vector<std::vector<unsigned>> ghosts;
    /// exports[r][s]: keys owned by r that rank s imports.
    std::vector<std::vector<std::vector<unsigned>>> exports;

    unsigned owner(unsigned key) const;
    unsigned n_owned(unsigned rank) const
    {
      return range_start[rank + 1] - range_start[rank];
    }
  };

  /// Contiguous balanced split of the Cuthill-McKee order of a symmetric
  /// graph. Throws std::invalid_argument for n_ranks == 0 or more ranks
  /// than rows.
  Partition partition(const Connectivity &graph, unsigned n_ranks);


  /// Thrown in every rank once another rank has failed.
  struct CommunicationAborted : std::runtime_error
  {
    CommunicationAborted()
      : std::runtime_error("communication aborted by another rank")
    {}
  };

  /**
   * In-process message passing between simulated ranks. Each ordered pair
   * of ranks has a FIFO channel. Messages carry a tag made of a kind and a
   * per-rank collective sequence number; receiving a message with an
   * unexpected tag is a hard error, so all ranks must issue collectives in
   * the same order.
   */
  class Communicator
  {
  public:
    enum class Kind : std::uint32_t
    {
      vector_sync = 1,
      matrix_sync = 2,
      allreduce = 3,
      gather = 4,
    };

    explicit Communicator(unsigned n_ranks);

    unsigned size() const { return n_ranks_; }

    /// Next collective tag of this rank. Every rank must call this once per
    /// collective, in the same order.
    std::uint64_t next_tag(unsigned rank, Kind kind);

    void send(unsigned from, unsigned to, std::uint64_t tag, std::vector<double> data);
    std::vector<double> receive(unsigned to, unsigned from, std::uint64_t tag);

    /// Every rank sends its value to all others and takes the minimum in
    /// rank order.
    double allreduce_min(unsigned rank, double value);

    /// Wakes all blocked receivers; they throw CommunicationAborted.
    void abort();
    bool aborted() const { return aborted_.load(); }

    /// Traffic counters per sending rank.
    std::uint64_t messages_sent(unsigned rank) const { return messages_[rank]; }
    std::uint64_t doubles_sent(unsigned rank) const { return doubles_[rank]; }

  private:
    struct Message
    {
      std::uint64_t tag;
      std::vector<double> data;
    };
    struct Channel
    {
      std::mutex mutex;
      std::condition_variable ready;
      std::deque<Message> queue;
    };

    Channel &channel(unsigned from, unsigned to)
    {
      return channels_[std::size_t(from) * n_ranks_ + to];
    }

    unsigned n_ranks_;
    std::vector<Channel> channels_;
    std::vector<std::uint64_t> sequence_;
    std::vector<std::uint64_t> messages_;
    std::vector<std::uint64_t> doubles_;
    std::atomic<bool> aborted_{false};
  };

  /// Runs n_ranks functions, one per thread. If one throws, the
  /// communicator is aborted and the first exception (by rank) that is not
  /// CommunicationAborted is rethrown after all threads joined.
  void run_ranks(Communicator &comm, const std::function<void(unsigned)> &body);


  /**
   * Fixed set of worker threads. run(f) calls f(w) for w in [0, size) with
   * worker 0 on the calling thread and returns once all calls finished.
   * An exception from any worker is rethrown by run().
   */
  class WorkerPool
  {
  public:
    explicit WorkerPool(unsigned n_workers);
    ~WorkerPool();
    WorkerPool(const WorkerPool &) = delete;
    WorkerPool &operator=(const WorkerPool &) = delete;

    unsigned size() const { return n_workers_; }
    void run(const std::function<void(unsigned)> &task);

    /// Static chunk [begin, end) of worker w when splitting [first, last)
    /// into pieces aligned to `align` (relative to first).
    static std::pair<unsigned, unsigned>
    chunk(unsigned first, unsigned last, unsigned align, unsigned w, unsigned n);

  private:
    void loop(unsigned worker);

    unsigned n_workers_;
    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable start_, done_;
    const std::function<void(unsigned)> *task_ = nullptr;
    std::uint64_t generation_ = 0;
    unsigned pending_ = 0;
    bool stop_ = false;
    std::exception_ptr error_;
  };

  /// Row-range markers of a rank, see LocalNumbering.
  struct RowRanges
  {
    unsigned n_export = 0;
    unsigned n_internal = 0;
    unsigned n_owned = 0;
    unsigned lanes = 1;
  };

  /**
   * Parallel loop over the owned rows [0, N_lo) that hides communication:
   * every worker first processes its share of the irregular rows
   * [N_i, N_lo) and of the exported SIMD rows [0, N_e) (rounded up to a
   * multiple of k), then increments a shared counter; the worker that
   * completes the count calls start_sync exactly once, and all continue
   * with [N_e, N_i). Without overlap all rows are processed first and
   * start_sync runs after the join. body(begin, end) receives ranges that
   * never straddle N_i; ranges below N_i are k-aligned.
   * Returns the number of times start_sync was invoked (always 1).
   */
  unsigned overlapped_loop(WorkerPool &pool,
                           const RowRanges &ranges,
                           const std::function<void(unsigned, unsigned)> &body,
                           const std::function<void()> &start_sync,
                           bool overlap);

  /// Plain parallel loop over [0, N_lo) with the same range conventions.
  void parallel_loop(WorkerPool &pool,
                     const RowRanges &ranges,
                     const std::function<void(unsigned, unsigned)> &body);


  /**
   * Ghost exchange lists of one rank in local indices. For node vectors,
   * send_nodes[s] are owned local rows sent to rank s, receive_nodes[s]
   * the ghost local rows filled from rank s (both in ascending global key
   * order, so they pair up). For matrices, send_entries[s] / receive_entries
   * [s] are pattern positions of ghost-row entries.
   */
  struct GhostExchange
  {
    unsigned rank = 0;
    std::vector<std::vector<unsigned>> send_nodes;
    std::vector<std::vector<unsigned>> receive_nodes;
    std::vector<std::vector<std::size_t>> send_entries;
    std::vector<std::vector<std::size_t>> receive_entries;

    /// Packs and sends owned entries of an array with `stride` doubles per
    /// node. Returns the tag to pass to finish_*.
    std::uint64_t start_nodes(Communicator &comm, const double *data, unsigned stride) const;
    void finish_nodes(Communicator &comm, std::uint64_t tag, double *data, unsigned stride) const;

    /// Same for a matrix with one value per entry, addressed by index(p).
    std::uint64_t start_entries(Communicator &comm,
                                const std::function<double(std::size_t)> &read) const;
    void finish_entries(Communicator &comm,
                        std::uint64_t tag,
                        const std::function<void(std::size_t, double)> &write) const;

    std::size_t doubles_per_node_sync() const;
    std::size_t doubles_per_entry_sync() const;
  };

} // namespace idp
