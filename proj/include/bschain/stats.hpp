#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bschain {

/// Welford accumulator with the pairwise merge of Chan et al.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStats& o) noexcept {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
  }

  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stderr_() const noexcept { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct EnsembleOptions {
  std::uint64_t replicas = 0;
  std::uint64_t seed = 0;
  int workers = 1;
  /// Replicas per block. Blocks are the unit of scheduling and of the fixed-order merge.
  std::uint64_t block_size = 1000;
};

struct EnsembleResult {
  std::vector<RunningStats> total;
  /// Per-block statistics in block order, for batch-means error estimates.
  std::vector<std::vector<RunningStats>> blocks;
  std::uint64_t completed_replicas = 0;
  std::optional<std::string> failure;
  std::uint64_t failed_replica = 0;
};

/// Fills `out` (sized to the observable count) for one replica.
using ReplicaFn = std::function<void(std::uint64_t replica, std::span<double> out)>;

/// Runs replicas 0..R-1 on `workers` threads. The reduction is done per block in replica
/// order and then across blocks in block order, so results do not depend on the worker count.
/// A throwing replica stops the run; statistics of the blocks completed so far are kept.
EnsembleResult ensemble(std::size_t observables, const EnsembleOptions& opts, const ReplicaFn& fn);

/// Standard error of f(block means) over blocks, for estimators that are not plain means.
double batch_means_stderr(std::span<const double> block_values);

/// Least-squares line y = a + b x; returns {a, b}.
std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace bschain
