#include "bschain/stats.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "bschain/errors.hpp"

namespace bschain {

EnsembleResult ensemble(std::size_t observables, const EnsembleOptions& opts, const ReplicaFn& fn) {
  if (opts.replicas < 2) throw InvalidParameter("ensemble needs at least 2 replicas");
  const std::uint64_t bs = std::max<std::uint64_t>(opts.block_size, 1);
  const std::uint64_t nblocks = (opts.replicas + bs - 1) / bs;
  std::vector<std::vector<RunningStats>> blocks(nblocks, std::vector<RunningStats>(observables));
  std::vector<char> done(nblocks, 0);

  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex err_mu;
  std::optional<std::string> failure;
  std::uint64_t failed_replica = 0;

  auto work = [&] {
    std::vector<double> out(observables);
    for (;;) {
      if (abort.load()) return;
      const std::uint64_t b = next.fetch_add(1);
      if (b >= nblocks) return;
      const std::uint64_t lo = b * bs, hi = std::min(opts.replicas, lo + bs);
      auto& stats = blocks[b];
      for (std::uint64_t r = lo; r < hi; ++r) {
        try {
          std::fill(out.begin(), out.end(), 0.0);
          fn(r, out);
        } catch (const std::exception& e) {
          std::lock_guard lock(err_mu);
          if (!failure || r < failed_replica) {
            failure = e.what();
            failed_replica = r;
          }
          abort.store(true);
          return;
        }
        for (std::size_t i = 0; i < observables; ++i) stats[i].add(out[i]);
      }
      done[b] = 1;
    }
  };

  const int workers = std::max(1, opts.workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  EnsembleResult res;
  res.total.resize(observables);
  for (std::uint64_t b = 0; b < nblocks; ++b) {
    if (!done[b]) continue;
    for (std::size_t i = 0; i < observables; ++i) res.total[i].merge(blocks[b][i]);
    res.completed_replicas += blocks[b].empty() ? 0 : blocks[b][0].count();
    res.blocks.push_back(std::move(blocks[b]));
  }
  res.failure = failure;
  res.failed_replica = failed_replica;
  return res;
}

double batch_means_stderr(std::span<const double> block_values) {
  RunningStats s;
  for (double v : block_values) s.add(v);
  return s.stderr_();
}

std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidParameter("fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw NumericalError("degenerate fit abscissae");
  const double b = (n * sxy - sx * sy) / den;
  return {(sy - b * sx) / n, b};
}

}  // namespace bschain
