#include <idp/exchange.h>

#include <algorithm>
#include <limits>
#include <string>

namespace idp
{
  unsigned Partition::owner(unsigned key) const
  {
    const auto it = std::upper_bound(range_start.begin(), range_start.end(), key);
    return unsigned(it - range_start.begin()) - 1;
  }

  Partition partition(const Connectivity &graph, unsigned n_ranks)
  {
    const unsigned n = unsigned(graph.n_rows());
    if (n_ranks == 0)
      throw std::invalid_argument("partition: need at least one rank");
    if (n_ranks > n)
      throw std::invalid_argument("partition: more ranks than rows");

    Partition p;
    p.n_ranks = n_ranks;
    p.node_of_key = cuthill_mckee(graph);
    p.key_of_node.resize(n);
    for (unsigned k = 0; k < n; ++k)
      p.key_of_node[p.node_of_key[k]] = k;

    p.range_start.resize(n_ranks + 1);
    for (unsigned r = 0; r <= n_ranks; ++r)
      p.range_start[r] = unsigned(std::uint64_t(n) * r / n_ranks);

    p.ghosts.assign(n_ranks, {});
    p.exports.assign(n_ranks, std::vector<std::vector<unsigned>>(n_ranks));
    for (unsigned r = 0; r < n_ranks; ++r)
    {
      std::vector<unsigned> &ghosts = p.ghosts[r];
      for (unsigned key = p.range_start[r]; key < p.range_start[r + 1]; ++key)
        for (unsigned node : graph.row(p.node_of_key[key]))
        {
          const unsigned other = p.key_of_node[node];
          if (other < p.range_start[r] || other >= p.range_start[r + 1])
            ghosts.push_back(other);
        }
      std::sort(ghosts.begin(), ghosts.end());
      ghosts.erase(std::unique(ghosts.begin(), ghosts.end()), ghosts.end());
      for (unsigned key : ghosts)
        p.exports[p.owner(key)][r].push_back(key);
    }
    return p;
  }


  Communicator::Communicator(unsigned n_ranks)
    : n_ranks_(n_ranks)
    , channels_(std::size_t(n_ranks) * n_ranks)
    , sequence_(n_ranks, 0)
    , messages_(n_ranks, 0)
    , doubles_(n_ranks, 0)
  {
    if (n_ranks == 0)
      throw std::invalid_argument("Communicator: need at least one rank");
  }

  std::uint64_t Communicator::next_tag(unsigned rank, Kind kind)
  {
    return (std::uint64_t(kind) << 56) | sequence_[rank]++;
  }

  void Communicator::send(unsigned from,
                          unsigned to,
                          std::uint64_t tag,
                          std::vector<double> data)
  {
    if (aborted_)
      throw CommunicationAborted();
    messages_[from] += 1;
    doubles_[from] += data.size();
    Channel &c = channel(from, to);
    {
      std::lock_guard<std::mutex> lock(c.mutex);
      c.queue.push_back({tag, std::move(data)});
    }
    c.ready.notify_all();
  }

  std::vector<double> Communicator::receive(unsigned to, unsigned from, std::uint64_t tag)
  {
    Channel &c = channel(from, to);
    std::unique_lock<std::mutex> lock(c.mutex);
    c.ready.wait(lock, [&] { return !c.queue.empty() || aborted_.load(); });
    if (c.queue.empty())
      throw CommunicationAborted();
    Message m = std::move(c.queue.front());
    c.queue.pop_front();
    if (m.tag != tag)
      throw std::logic_error("Communicator: collective mismatch between rank " +
                             std::to_string(from) + " and rank " +
                             std::to_string(to) + " (expected tag " +
                             std::to_string(tag) + ", got " +
                             std::to_string(m.tag) + ")");
    return std::move(m.data);
  }

  double Communicator::allreduce_min(unsigned rank, double value)
  {
    const std::uint64_t tag = next_tag(rank, Kind::allreduce);
    for (unsigned r = 0; r < n_ranks_; ++r)
      if (r != rank)
        send(rank, r, tag, {value});
    double result = std::numeric_limits<double>::infinity();
    for (unsigned r = 0; r < n_ranks_; ++r)
      result = std::min(result, r == rank ? value : receive(rank, r, tag)[0]);
    return result;
  }

  void Communicator::abort()
  {
    aborted_ = true;
    for (auto &c : channels_)
    {
      std::lock_guard<std::mutex> lock(c.mutex);
      c.ready.notify_all();
    }
  }

  void run_ranks(Communicator &comm, const std::function<void(unsigned)> &body)
  {
    const unsigned n = comm.size();
    std::vector<std::exception_ptr> errors(n);
    std::vector<bool> secondary(n, false);
    auto guarded = [&](unsigned r) {
      try
      {
        body(r);
      }
      catch (const CommunicationAborted &)
      {
        errors[r] = std::current_exception();
        secondary[r] = true;
        comm.abort();
      }
      catch (...)
      {
        errors[r] = std::current_exception();
        comm.abort();
      }
    };
    if (n == 1)
      guarded(0);
    else
    {
      std::vector<std::thread> threads;
      for (unsigned r = 0; r < n; ++r)
        threads.emplace_back(guarded, r);
      for (auto &t : threads)
        t.join();
    }
    for (unsigned r = 0; r < n; ++r)
      if (errors[r] && !secondary[r])
        std::rethrow_exception(errors[r]);
    for (unsigned r = 0; r < n; ++r)
      if (errors[r])
        std::rethrow_exception(errors[r]);
  }


  WorkerPool::WorkerPool(unsigned n_workers)
    : n_workers_(std::max(1u, n_workers))
  {
    for (unsigned w = 1; w < n_workers_; ++w)
      threads_.emplace_back([this, w] { loop(w); });
  }

  WorkerPool::~WorkerPool()
  {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    start_.notify_all();
    for (auto &t : threads_)
      t.join();
  }

  void WorkerPool::loop(unsigned worker)
  {
    std::uint64_t seen = 0;
    for (;;)
    {
      const std::function<void(unsigned)> *task;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        start_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_)
          return;
        seen = generation_;
        task = task_;
      }
      std::exception_ptr error;
      try
      {
        (*task)(worker);
      }
      catch (...)
      {
        error = std::current_exception();
      }
      {
        std::lock_guard<std::mutex> lock(mutex_);
        if (error && !error_)
          error_ = error;
        if (--pending_ == 0)
          done_.notify_all();
      }
    }
  }

  void WorkerPool::run(const std::function<void(unsigned)> &task)
  {
    if (n_workers_ == 1)
    {
      task(0);
      return;
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      task_ = &task;
      pending_ = n_workers_ - 1;
      error_ = nullptr;
      ++generation_;
    }
    start_.notify_all();
    std::exception_ptr own;
    try
    {
      task(0);
    }
    catch (...)
    {
      own = std::current_exception();
    }
    std::exception_ptr other;
    {
      std::unique_lock<std::mutex> lock(mutex_);
      done_.wait(lock, [&] { return pending_ == 0; });
      other = error_;
      task_ = nullptr;
    }
    if (own)
      std::rethrow_exception(own);
    if (other)
      std::rethrow_exception(other);
  }

  std::pair<unsigned, unsigned>
  WorkerPool::chunk(unsigned first, unsigned last, unsigned align, unsigned w, unsigned n)
  {
    if (last <= first)
      return {first, first};
    const unsigned blocks = (last - first + align - 1) / align;
    const unsigned b0 = unsigned(std::uint64_t(blocks) * w / n);
    const unsigned b1 = unsigned(std::uint64_t(blocks) * (w + 1) / n);
    return {std::min(last, first + b0 * align), std::min(last, first + b1 * align)};
  }


  namespace
  {
    void run_range(const std::function<void(unsigned, unsigned)> &body,
                   std::pair<unsigned, unsigned> range)
    {
      if (range.first < range.second)
        body(range.first, range.second);
    }
  } // namespace

  unsigned overlapped_loop(WorkerPool &pool,
                           const RowRanges &ranges,
                           const std::function<void(unsigned, unsigned)> &body,
                           const std::function<void()> &start_sync,
                           bool overlap)
  {
    const unsigned k = ranges.lanes;
    const unsigned n_i = ranges.n_internal;
    const unsigned n_e = std::min(n_i, (ranges.n_export + k - 1) / k * k);
    const unsigned n = pool.size();

    if (!overlap)
    {
      parallel_loop(pool, ranges, body);
      start_sync();
      return 1;
    }

    std::atomic<unsigned> arrived{0};
    std::atomic<unsigned> fired{0};
    pool.run([&](unsigned w) {
      run_range(body, WorkerPool::chunk(n_i, ranges.n_owned, 1, w, n));
      run_range(body, WorkerPool::chunk(0, n_e, k, w, n));
      // The last worker to pass the exported range starts the exchange.
      if (arrived.fetch_add(1) + 1 == n)
      {
        fired.fetch_add(1);
        start_sync();
      }
      run_range(body, WorkerPool::chunk(n_e, n_i, k, w, n));
    });
    return fired.load();
  }

  void parallel_loop(WorkerPool &pool,
                     const RowRanges &ranges,
                     const std::function<void(unsigned, unsigned)> &body)
  {
    const unsigned n = pool.size();
    pool.run([&](unsigned w) {
      run_range(body, WorkerPool::chunk(0, ranges.n_internal, ranges.lanes, w, n));
      run_range(body, WorkerPool::chunk(ranges.n_internal, ranges.n_owned, 1, w, n));
    });
  }


  std::uint64_t GhostExchange::start_nodes(Communicator &comm,
                                           const double *data,
                                           unsigned stride) const
  {
    const std::uint64_t tag = comm.next_tag(rank, Communicator::Kind::vector_sync);
    for (unsigned s = 0; s < send_nodes.size(); ++s)
    {
      if (send_nodes[s].empty())
        continue;
      std::vector<double> buffer;
      buffer.reserve(send_nodes[s].size() * stride);
      for (unsigned i : send_nodes[s])
        buffer.insert(buffer.end(), data + std::size_t(i) * stride,
                      data + std::size_t(i + 1) * stride);
      comm.send(rank, s, tag, std::move(buffer));
    }
    return tag;
  }

  void GhostExchange::finish_nodes(Communicator &comm,
                                   std::uint64_t tag,
                                   double *data,
                                   unsigned stride) const
  {
    for (unsigned s = 0; s < receive_nodes.size(); ++s)
    {
      if (receive_nodes[s].empty())
        continue;
      const std::vector<double> buffer = comm.receive(rank, s, tag);
      if (buffer.size() != receive_nodes[s].size() * stride)
        throw std::logic_error("GhostExchange: message size mismatch");
      for (std::size_t k = 0; k < receive_nodes[s].size(); ++k)
        std::copy(buffer.begin() + k * stride, buffer.begin() + (k + 1) * stride,
                  data + std::size_t(receive_nodes[s][k]) * stride);
    }
  }

  std::uint64_t
  GhostExchange::start_entries(Communicator &comm,
                               const std::function<double(std::size_t)> &read) const
  {
    const std::uint64_t tag = comm.next_tag(rank, Communicator::Kind::matrix_sync);
    for (unsigned s = 0; s < send_entries.size(); ++s)
    {
      if (send_entries[s].empty())
        continue;
      std::vector<double> buffer;
      buffer.reserve(send_entries[s].size());
      for (std::size_t p : send_entries[s])
        buffer.push_back(read(p));
      comm.send(rank, s, tag, std::move(buffer));
    }
    return tag;
  }

  void GhostExchange::finish_entries(Communicator &comm,
                                     std::uint64_t tag,
                                     const std::function<void(std::size_t, double)> &write) const
  {
    for (unsigned s = 0; s < receive_entries.size(); ++s)
    {
      if (receive_entries[s].empty())
        continue;
      const std::vector<double> buffer = comm.receive(rank, s, tag);
      if (buffer.size() != receive_entries[s].size())
        throw std::logic_error("GhostExchange: message size mismatch");
      for (std::size_t k = 0; k < buffer.size(); ++k)
        write(receive_entries[s][k], buffer[k]);
    }
  }

  std::size_t GhostExchange::doubles_per_node_sync() const
  {
    std::size_t n = 0;
    for (const auto &s : send_nodes)
      n += s.size();
    return n;
  }

  std::size_t GhostExchange::doubles_per_entry_sync() const
  {
    std::size_t n = 0;
    for (const auto &s : send_entries)
      n += s.size();
    return n;
  }

} // namespace idp
