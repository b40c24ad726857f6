#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "latwalk/errors.hpp"
#include "latwalk/haar.hpp"
#include "latwalk/lyapunov.hpp"
#include "latwalk/parallel.hpp"
#include "latwalk/rng.hpp"
#include "latwalk/siegel.hpp"
#include "latwalk/step_measure.hpp"
#include "latwalk/walk.hpp"

namespace latwalk {

struct EquidistributionReport {
  double haar_mean = 0.0;
  double radius = 0.0;
  DiscrepancyReport discrepancy;
};

// Deviation of the n-step averages of a lattice-sum observable from its
// Haar expectation, with a decay-rate fit.
inline EquidistributionReport equidistribution_report(
    const StepMeasure& mu, const LatticePoint& x0, const SiegelObservable& obs,
    int n_max, std::uint64_t samples, std::uint64_t seed, int threads = 0) {
  EquidistributionReport report;
  report.haar_mean = obs.haar_expectation();
  report.radius = obs.radius();
  report.discrepancy = discrepancy_series(mu, x0, obs.as_observable(),
                                          report.haar_mean, n_max, samples, seed,
                                          threads);
  return report;
}

struct UniformCesaroStart {
  double target_v = 0.0;
  double start_v = 0.0;
  double cesaro = 0.0;
  double std_error = 0.0;
};

struct UniformCesaroRow {
  int n = 0;
  double phi = 0.0;
  double sup_discrepancy = 0.0;
  double se_at_sup = 0.0;
  double start_v_at_sup = 0.0;
  std::vector<UniformCesaroStart> starts;
};

struct UniformCesaroReport {
  double haar_mean = 0.0;
  std::vector<UniformCesaroRow> rows;
};

// Worst-case time-averaged discrepancy over start points spread through
// the sublevel set {V <= phi(n)}: each start runs independent
// trajectories whose per-path time averages (1/n) sum_{k<n} f(X_k) are
// averaged across paths.
inline UniformCesaroReport uniform_cesaro_experiment(
    const StepMeasure& mu, const LyapunovSpec& spec, const SiegelObservable& obs,
    const std::function<double(int)>& phi, const std::vector<int>& steps,
    int starts_per_step, std::uint64_t samples, std::uint64_t seed,
    int threads = 0) {
  validate_spec(spec);
  if (steps.empty()) throw validation_error("need at least one step count");
  if (starts_per_step < 1) throw validation_error("need at least one start per step");
  if (samples < 2) throw validation_error("need at least two samples");

  const int dim = mu.dim();
  const double floor_v = sublevel_floor(spec, dim);
  const Observable f = obs.as_observable();
  const int thread_count = resolve_thread_count(threads);

  UniformCesaroReport report;
  report.haar_mean = obs.haar_expectation();

  for (std::size_t row_index = 0; row_index < steps.size(); ++row_index) {
    const int n = steps[row_index];
    if (n < 1) throw validation_error("step counts must be positive");
    UniformCesaroRow row;
    row.n = n;
    row.phi = phi(n);
    const double lo = floor_v * 1.2;
    const double hi = std::max(row.phi, lo * 1.01);
    if (!(hi > 1.0)) throw validation_error("phi must exceed one on the grid");

    for (int j = 0; j < starts_per_step; ++j) {
      const double ratio = starts_per_step == 1
                               ? 1.0
                               : static_cast<double>(j) /
                                     static_cast<double>(starts_per_step - 1);
      const double target = lo * std::pow(hi / lo, ratio);
      const LatticePoint x0 = sublevel_sample(
          spec, dim, target, derive_seed(seed, 100 + row_index),
          static_cast<std::uint64_t>(j));

      UniformCesaroStart start;
      start.target_v = target;
      start.start_v = evaluate_V(spec, x0);

      const double f0 = f(x0);
      const std::size_t chunk_count = (samples + kChunkSize - 1) / kChunkSize;
      std::vector<double> chunk_sum(chunk_count, 0.0);
      std::vector<double> chunk_sq(chunk_count, 0.0);
      parallel_for_chunks(chunk_count, thread_count, [&](std::size_t c) {
        const std::size_t begin = c * kChunkSize;
        const std::size_t end = std::min<std::size_t>(samples, begin + kChunkSize);
        CompensatedSum sum, sq;
        for (std::size_t t = begin; t < end; ++t) {
          Philox rng(derive_seed(seed, 200 + row_index),
                     trajectory_stream(static_cast<std::uint64_t>(j), t));
          Mat basis = x0.basis();
          CompensatedSum path;
          path.add(f0);
          for (int k = 1; k < n; ++k) {
            basis = mu.atom(mu.sample_index(rng)).matrix() * basis;
            reduce_in_place(basis);
            if (k % kRenormInterval == 0) renormalize_det(basis);
            path.add(f(LatticePoint(basis)));
          }
          const double q = path.value() / static_cast<double>(n);
          sum.add(q);
          sq.add(q * q);
        }
        chunk_sum[c] = sum.value();
        chunk_sq[c] = sq.value();
      });
      CompensatedSum sum, sq;
      for (std::size_t c = 0; c < chunk_count; ++c) {
        sum.add(chunk_sum[c]);
        sq.add(chunk_sq[c]);
      }
      const double count = static_cast<double>(samples);
      start.cesaro = sum.value() / count;
      const double var = std::max(
          0.0, (sq.value() - count * start.cesaro * start.cesaro) / (count - 1.0));
      start.std_error = std::sqrt(var / count);
      row.starts.push_back(start);

      const double disc = std::abs(start.cesaro - report.haar_mean);
      if (disc > row.sup_discrepancy) {
        row.sup_discrepancy = disc;
        row.se_at_sup = start.std_error;
        row.start_v_at_sup = start.start_v;
      }
    }
    report.rows.push_back(row);
  }
  return report;
}

struct GenericityRow {
  int n = 0;
  double threshold = 0.0;
  double exceed_fraction = 0.0;
};

struct GenericityReport {
  double haar_mean = 0.0;
  double decay_rate = 0.0;
  double scale = 0.0;
  int start_count = 0;
  std::vector<GenericityRow> rows;
};

// Fraction of Haar-random starts whose n-step deviation exceeds a
// threshold shrinking like decay_rate^(n/2), floored at the Monte Carlo
// noise level.
inline GenericityReport genericity_survey(const StepMeasure& mu,
                                          const SiegelObservable& obs,
                                          const std::vector<int>& steps,
                                          int start_count, std::uint64_t samples,
                                          double decay_rate, double scale,
                                          std::uint64_t seed, int threads = 0) {
  if (steps.empty()) throw validation_error("need at least one step count");
  if (start_count < 1) throw validation_error("need at least one start");
  if (!(decay_rate > 0.0) || !(decay_rate < 1.0))
    throw validation_error("decay rate must lie in (0, 1)");
  if (!(scale > 0.0)) throw validation_error("threshold scale must be positive");
  if (mu.dim() != 2) throw validation_error("the Haar start survey is planar");

  const HaarSampler2D sampler(derive_seed(seed, 7));
  std::vector<LatticePoint> starts;
  starts.reserve(static_cast<std::size_t>(start_count));
  for (int i = 0; i < start_count; ++i)
    starts.push_back(sampler.sample(static_cast<std::uint64_t>(i)));

  GenericityReport report;
  report.haar_mean = obs.haar_expectation();
  report.decay_rate = decay_rate;
  report.scale = scale;
  report.start_count = start_count;
  const double noise_floor =
      kNoiseFloorCoefficient / std::sqrt(static_cast<double>(samples));

  for (std::size_t row_index = 0; row_index < steps.size(); ++row_index) {
    const int n = steps[row_index];
    if (n < 0) throw validation_error("step counts must be nonnegative");
    GenericityRow row;
    row.n = n;
    row.threshold =
        std::max(scale * std::pow(decay_rate, 0.5 * n), noise_floor);
    int exceed = 0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
      const Estimate e = estimate_pushforward(
          mu, n, starts[i], obs.as_observable(), samples,
          derive_seed(seed, 300 + row_index), threads, i);
      if (std::abs(e.value - report.haar_mean) > row.threshold) ++exceed;
    }
    row.exceed_fraction =
        static_cast<double>(exceed) / static_cast<double>(start_count);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace latwalk
