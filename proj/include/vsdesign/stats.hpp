// Copyright 2026 The vsdesign Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VSDESIGN_STATS_HPP
#define VSDESIGN_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "vsdesign/linalg.hpp"

namespace vsdesign {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MeanEstimate {
  double mean = 0.0;
  /// Standard error of the mean.
  double se = 0.0;
  std::size_t count = 0;
};

inline MeanEstimate summarize(std::span<const double> values) {
  MeanEstimate m;
  m.count = values.size();
  if (values.empty()) return m;
  CompensatedSum s;
  for (double v : values) s.add(v);
  m.mean = s.value() / static_cast<double>(values.size());
  if (values.size() > 1) {
    CompensatedSum ss;
    for (double v : values) ss.add((v - m.mean) * (v - m.mean));
    const double var = ss.value() / static_cast<double>(values.size() - 1);
    m.se = std::sqrt(var / static_cast<double>(values.size()));
  }
  return m;
}

/// Element-wise mean and standard error over a list of equally shaped
/// matrices.
struct MatrixMeanEstimate {
  Matrix mean;
  Matrix se;
  std::size_t count = 0;
};

inline MatrixMeanEstimate summarize(const std::vector<Matrix>& samples) {
  MatrixMeanEstimate out;
  out.count = samples.size();
  if (samples.empty()) return out;
  const auto rows = samples.front().rows();
  const auto cols = samples.front().cols();
  out.mean.resize(rows, cols);
  out.se.resize(rows, cols);
  std::vector<double> column(samples.size());
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (std::size_t t = 0; t < samples.size(); ++t) column[t] = samples[t](i, j);
      const MeanEstimate m = summarize(column);
      out.mean(i, j) = m.mean;
      out.se(i, j) = m.se;
    }
  }
  return out;
}

/// Runs body(t) for t in [0, trials) on `workers` threads and returns the
/// results in trial order, so any reduction over them is independent of the
/// worker count.
template <typename R>
std::vector<R> run_trials(std::size_t trials, unsigned workers, const std::function<R(std::size_t)>& body) {
  std::vector<R> results(trials);
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(trials, 1))));
  if (workers == 1) {
    for (std::size_t t = 0; t < trials; ++t) results[t] = body(t);
    return results;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t t = w; t < trials; t += workers) results[t] = body(t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace vsdesign

#endif  // VSDESIGN_STATS_HPP
