#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "latwalk/lattice.hpp"
#include "latwalk/parallel.hpp"
#include "latwalk/rng.hpp"
#include "latwalk/step_measure.hpp"

namespace latwalk {

// Determinant renormalization interval along a trajectory.
inline constexpr int kRenormInterval = 32;
// Trajectories per accumulation chunk.  Fixed, so sums are combined in the
// same order for any thread count.
inline constexpr std::uint64_t kChunkSize = 1024;
// Noise floor coefficient: |deviation| below kNoiseFloor / sqrt(N) is
// treated as Monte Carlo noise.
inline constexpr double kNoiseFloorCoefficient = 5.0;
// Points with |deviation| <= kFitSigma * std_error are excluded from decay
// fits; fits with fewer than kFitMinPoints surviving points are flagged.
inline constexpr double kFitSigma = 3.0;
inline constexpr int kFitMinPoints = 5;

using Observable = std::function<double(const LatticePoint&)>;

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
};

struct ObservableSeries {
  std::vector<int> steps;
  std::vector<double> estimates;
  std::vector<double> std_errors;
  std::uint64_t samples_per_point = 0;
};

// Neumaier compensated accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

// Stream id layout: trajectory i of step-block k draws from stream
// (k << 40) | i.  Sub-experiments needing full independence derive their own
// seed via derive_seed.
inline std::uint64_t trajectory_stream(std::uint64_t block, std::uint64_t index) {
  return (block << 40) | index;
}

// Atom indices of one sampled trajectory.
inline std::vector<int> sample_atom_indices(const StepMeasure& mu, int n,
                                            std::uint64_t seed, std::uint64_t stream) {
  if (n < 0) throw validation_error("step count must be >= 0");
  Philox rng(seed, stream);
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) idx[static_cast<std::size_t>(k)] = mu.sample_index(rng);
  return idx;
}

// Advances a basis n steps, re-reducing after every step so the stored basis
// stays well conditioned whenever the lattice point itself is, and pinning
// the determinant every kRenormInterval products.
inline Mat walk_basis(const StepMeasure& mu, int n, const Mat& start, Philox& rng) {
  Mat b = start;
  for (int k = 0; k < n; ++k) {
    b = mu.atom(static_cast<std::size_t>(mu.sample_index(rng))).matrix() * b;
    reduce_in_place(b);
    if ((k + 1) % kRenormInterval == 0) renormalize_det(b);
  }
  return b;
}

inline LatticePoint sample_trajectory(const StepMeasure& mu, int n,
                                      const LatticePoint& x0, std::uint64_t seed,
                                      std::uint64_t stream = 0) {
  if (n < 0) throw validation_error("step count must be >= 0");
  if (mu.dim() != x0.dim()) throw validation_error("measure/start dimension mismatch");
  Philox rng(seed, stream);
  return LatticePoint(walk_basis(mu, n, x0.basis(), rng));
}

// Monte Carlo estimate of E[f(walk_n x0)] over N independent trajectories.
// Trajectory i draws from stream (stream_block << 40) | i; chunk sums are
// combined in chunk order, so the result is bit-identical for any thread
// count.
inline Estimate estimate_pushforward(const StepMeasure& mu, int n,
                                     const LatticePoint& x0, const Observable& f,
                                     std::uint64_t samples, std::uint64_t seed,
                                     int threads = 0, std::uint64_t stream_block = 0) {
  if (n < 0) throw validation_error("step count must be >= 0");
  if (samples == 0) throw validation_error("sample count must be >= 1");
  if (mu.dim() != x0.dim()) throw validation_error("measure/start dimension mismatch");
  if (n == 0) return {f(x0), 0.0, samples};

  const auto chunks =
      static_cast<int>((samples + kChunkSize - 1) / kChunkSize);
  std::vector<double> chunk_sum(static_cast<std::size_t>(chunks));
  std::vector<double> chunk_sq(static_cast<std::size_t>(chunks));
  parallel_for_chunks(chunks, threads, [&](int c) {
    const std::uint64_t begin = static_cast<std::uint64_t>(c) * kChunkSize;
    const std::uint64_t end = std::min(samples, begin + kChunkSize);
    CompensatedSum s, sq;
    for (std::uint64_t i = begin; i < end; ++i) {
      Philox rng(seed, trajectory_stream(stream_block, i));
      const double v = f(LatticePoint(walk_basis(mu, n, x0.basis(), rng)));
      s.add(v);
      sq.add(v * v);
    }
    chunk_sum[static_cast<std::size_t>(c)] = s.value();
    chunk_sq[static_cast<std::size_t>(c)] = sq.value();
  });
  CompensatedSum s, sq;
  for (int c = 0; c < chunks; ++c) {
    s.add(chunk_sum[static_cast<std::size_t>(c)]);
    sq.add(chunk_sq[static_cast<std::size_t>(c)]);
  }
  const double nd = static_cast<double>(samples);
  const double mean = s.value() / nd;
  double var = 0.0;
  if (samples > 1) var = std::max(0.0, (sq.value() - nd * mean * mean) / (nd - 1.0));
  return {mean, std::sqrt(var / nd), samples};
}

// Per-step estimates for n = 0..n_max, fresh trajectories per step.
inline ObservableSeries pushforward_series(const StepMeasure& mu,
                                           const LatticePoint& x0,
                                           const Observable& f, int n_max,
                                           std::uint64_t samples, std::uint64_t seed,
                                           int threads = 0) {
  if (n_max < 0) throw validation_error("step count must be >= 0");
  ObservableSeries out;
  out.samples_per_point = samples;
  for (int n = 0; n <= n_max; ++n) {
    const Estimate e = estimate_pushforward(mu, n, x0, f, samples, seed, threads,
                                            static_cast<std::uint64_t>(n));
    out.steps.push_back(n);
    out.estimates.push_back(e.value);
    out.std_errors.push_back(e.std_error);
  }
  return out;
}

struct CesaroEstimate {
  ObservableSeries per_step;
  Estimate average;
};

// Cesaro average (1/n) sum_{k<n} E[f(walk_k x0)], fresh trajectories per k.
// Per-step estimates are independent, so the averaged std error is
// sqrt(sum se_k^2) / n.
inline CesaroEstimate cesaro_estimate(const StepMeasure& mu, const LatticePoint& x0,
                                      const Observable& f, int n,
                                      std::uint64_t samples, std::uint64_t seed,
                                      int threads = 0) {
  if (n < 1) throw validation_error("Cesaro average needs n >= 1");
  CesaroEstimate out;
  out.per_step.samples_per_point = samples;
  CompensatedSum total;
  double var = 0.0;
  for (int k = 0; k < n; ++k) {
    const Estimate e = estimate_pushforward(mu, k, x0, f, samples, seed, threads,
                                            static_cast<std::uint64_t>(k));
    out.per_step.steps.push_back(k);
    out.per_step.estimates.push_back(e.value);
    out.per_step.std_errors.push_back(e.std_error);
    total.add(e.value);
    var += e.std_error * e.std_error;
  }
  out.average = {total.value() / n, std::sqrt(var) / n,
                 samples * static_cast<std::uint64_t>(n)};
  return out;
}

// Cesaro average along the arithmetic progression period*k + residue,
// k = 0..n-1.
inline CesaroEstimate arithmetic_cesaro_estimate(const StepMeasure& mu,
                                                 const LatticePoint& x0,
                                                 const Observable& f, int period,
                                                 int residue, int n,
                                                 std::uint64_t samples,
                                                 std::uint64_t seed, int threads = 0) {
  if (period < 1) throw validation_error("progression period must be >= 1");
  if (residue < 0 || residue >= period)
    throw validation_error("progression residue must be in [0, period)");
  if (n < 1) throw validation_error("Cesaro average needs n >= 1");
  CesaroEstimate out;
  out.per_step.samples_per_point = samples;
  CompensatedSum total;
  double var = 0.0;
  for (int k = 0; k < n; ++k) {
    const int step = period * k + residue;
    const Estimate e = estimate_pushforward(mu, step, x0, f, samples, seed, threads,
                                            static_cast<std::uint64_t>(k));
    out.per_step.steps.push_back(step);
    out.per_step.estimates.push_back(e.value);
    out.per_step.std_errors.push_back(e.std_error);
    total.add(e.value);
    var += e.std_error * e.std_error;
  }
  out.average = {total.value() / n, std::sqrt(var) / n,
                 samples * static_cast<std::uint64_t>(n)};
  return out;
}

struct DiscrepancyReport {
  ObservableSeries deviations;  // estimate_n - reference_mean
  double reference_mean = 0.0;
  double noise_floor = 0.0;     // kNoiseFloorCoefficient / sqrt(N)
  double fitted_rate = std::numeric_limits<double>::quiet_NaN();
  bool noise_dominated = false;
  int first_below_floor = -1;
};

// Deviations of the n-step estimates from a reference mean, with an
// exponential decay-rate fit: least squares slope of log |dev_n| against n,
// using only points more than kFitSigma std errors away from zero.
inline DiscrepancyReport discrepancy_series(const StepMeasure& mu,
                                            const LatticePoint& x0,
                                            const Observable& f,
                                            double reference_mean, int n_max,
                                            std::uint64_t samples,
                                            std::uint64_t seed, int threads = 0) {
  DiscrepancyReport report;
  report.reference_mean = reference_mean;
  report.noise_floor =
      kNoiseFloorCoefficient / std::sqrt(static_cast<double>(samples));
  report.deviations = pushforward_series(mu, x0, f, n_max, samples, seed, threads);
  for (double& e : report.deviations.estimates) e -= reference_mean;

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < report.deviations.steps.size(); ++i) {
    const double dev = std::abs(report.deviations.estimates[i]);
    const double se = report.deviations.std_errors[i];
    if (report.first_below_floor < 0 && dev < report.noise_floor)
      report.first_below_floor = report.deviations.steps[i];
    if (dev > kFitSigma * se && dev > 0.0) {
      const double xn = static_cast<double>(report.deviations.steps[i]);
      const double yn = std::log(dev);
      sx += xn;
      sy += yn;
      sxx += xn * xn;
      sxy += xn * yn;
      ++count;
    }
  }
  if (count < kFitMinPoints) {
    report.noise_dominated = true;
  } else {
    const double denom = count * sxx - sx * sx;
    if (denom > 0.0) report.fitted_rate = (count * sxy - sx * sy) / denom;
  }
  return report;
}

}  // namespace latwalk
