#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "latwalk/errors.hpp"
#include "latwalk/group.hpp"
#include "latwalk/lattice.hpp"
#include "latwalk/parallel.hpp"
#include "latwalk/rng.hpp"
#include "latwalk/step_measure.hpp"
#include "latwalk/walk.hpp"

namespace latwalk {

inline constexpr double kDriftZ = 1.645;  // one-sided 95% envelope
inline constexpr double kAlphaFloor = 1e-6;
inline constexpr int kMaxSublevelAttempts = 10'000;
inline constexpr int kBurnInMoves = 5;
inline constexpr double kBurnInShear = 0.3;
// Largest long-to-short basis scale ratio at which double precision can
// still resolve the lattice shape: reduction steps carry an absolute
// error of roughly (long scale) * machine epsilon, which must stay well
// below the short scale for the reduced shape to be meaningful.
inline constexpr double kMaxSublevelAspect = 1e15;

// Height potential V(x) = 1 + eps * lambda1(x)^-delta, or the
// multi-minima variant summing inverse powers of the partial products
// of the successive minima.
struct LyapunovSpec {
  double epsilon = 1.0;
  double delta = 0.5;
  int n0 = 1;  // walk steps per drift application
  bool multi_minima = false;
};

inline void validate_spec(const LyapunovSpec& spec) {
  if (!(spec.epsilon > 0.0)) throw validation_error("epsilon must be positive");
  if (!(spec.delta > 0.0)) throw validation_error("delta must be positive");
  if (spec.n0 < 1) throw validation_error("n0 must be at least 1");
}

inline double evaluate_V(const LyapunovSpec& spec, const LatticePoint& x) {
  validate_spec(spec);
  if (!spec.multi_minima) {
    return 1.0 + spec.epsilon * std::pow(x.shortest_length(), -spec.delta);
  }
  const Vec minima = successive_minima(x);
  double acc = 0.0;
  double product = 1.0;
  for (int i = 0; i + 1 < x.dim(); ++i) {
    product *= minima(i);
    acc += std::pow(product, -spec.delta);
  }
  return 1.0 + spec.epsilon * acc;
}

inline Observable lyapunov_observable(const LyapunovSpec& spec) {
  validate_spec(spec);
  return [spec](const LatticePoint& x) { return evaluate_V(spec, x); };
}

// Monte Carlo estimate of E[V(X_{n0}) | X_0 = x].
inline Estimate estimate_drift(const StepMeasure& mu, const LyapunovSpec& spec,
                               const LatticePoint& x, std::size_t samples,
                               std::uint64_t seed, int threads = 0,
                               std::uint64_t stream_block = 0) {
  validate_spec(spec);
  return estimate_pushforward(mu, spec.n0, x, lyapunov_observable(spec), samples,
                              seed, threads, stream_block);
}

struct ProbeDrift {
  double v = 0.0;
  Estimate after;
};

struct ContractionFit {
  LyapunovSpec spec;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  bool contracting = false;
  double z = kDriftZ;
  std::vector<ProbeDrift> probes;

  double bound() const {
    if (!contracting) return std::numeric_limits<double>::infinity();
    return beta / (1.0 - alpha);
  }
};

// Envelope fit of E[V after n0 steps] <= alpha V + beta over drift
// probes: beta absorbs the low-level probes (V within a factor two of
// the lowest), alpha is the worst upper-confidence drift ratio among
// the rest.  alpha >= 1 is an honest "no contraction detected".
inline ContractionFit fit_contraction(const StepMeasure& mu, const LyapunovSpec& spec,
                                      const std::vector<LatticePoint>& probes,
                                      std::size_t samples, std::uint64_t seed,
                                      int threads = 0) {
  validate_spec(spec);
  if (probes.size() < 2) throw validation_error("need at least two drift probes");

  ContractionFit fit;
  fit.spec = spec;
  fit.probes.reserve(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    ProbeDrift p;
    p.v = evaluate_V(spec, probes[i]);
    p.after = estimate_drift(mu, spec, probes[i], samples, seed, threads, i);
    fit.probes.push_back(p);
  }

  double v_min = fit.probes.front().v;
  for (const ProbeDrift& p : fit.probes) v_min = std::min(v_min, p.v);
  const double base_cut = 2.0 * v_min;

  double beta = 0.0;
  bool has_low = false, has_high = false;
  for (const ProbeDrift& p : fit.probes)
    if (p.v <= base_cut) {
      has_low = true;
      beta = std::max(beta, p.after.value + fit.z * p.after.std_error);
    } else {
      has_high = true;
    }
  if (!has_low || !has_high)
    throw validation_error("drift probes must span low and high levels");

  double alpha = kAlphaFloor;
  for (const ProbeDrift& p : fit.probes)
    if (p.v > base_cut) {
      const double upper = p.after.value + fit.z * p.after.std_error;
      alpha = std::max(alpha, (upper - beta) / p.v);
    }
  fit.alpha = alpha;
  fit.beta = beta;
  fit.contracting = alpha < 1.0;
  return fit;
}

// Smallest level the sublevel sampling family can reach.
inline double sublevel_floor(const LyapunovSpec& spec, int dim) {
  validate_spec(spec);
  check_dimension(dim);
  if (!spec.multi_minima && dim == 2)
    return 1.0 + spec.epsilon * std::pow(hermite_bound(2), -spec.delta);
  if (!spec.multi_minima) return 1.0 + spec.epsilon;
  return 1.0 + spec.epsilon * static_cast<double>(dim - 1);
}

// Deterministic lattice with V approximately equal to target_v: a
// rotated diagonal squeeze hit with a few accepted random moves, kept
// inside [target_v / 2, target_v].
inline LatticePoint sublevel_sample(const LyapunovSpec& spec, int dim, double target_v,
                                    std::uint64_t seed, std::uint64_t index) {
  validate_spec(spec);
  check_dimension(dim);
  if (!(target_v > 1.0) || !std::isfinite(target_v))
    throw validation_error("target level must exceed one");
  if (target_v < sublevel_floor(spec, dim))
    throw validation_error("target level is below the reachable floor");

  // Solve for the squeeze parameter: the first diagonal entry is the
  // shortest vector length of the start lattice.
  double ell;
  if (!spec.multi_minima) {
    ell = std::pow(spec.epsilon / (target_v - 1.0), 1.0 / spec.delta);
  } else {
    double lo = 1e-14, hi = 1.0;
    const auto value = [&](double l) {
      double acc = 0.0;
      for (int i = 1; i < dim; ++i)
        acc += std::pow(l, -spec.delta * static_cast<double>(dim - i) /
                                 static_cast<double>(dim - 1));
      return 1.0 + spec.epsilon * acc;
    };
    for (int it = 0; it < 200; ++it) {
      const double mid = std::sqrt(lo * hi);
      (value(mid) > target_v ? lo : hi) = mid;
    }
    ell = std::sqrt(lo * hi);
  }

  Mat basis = Mat::Zero(dim, dim);
  if (dim == 2 && ell > 1.0) {
    // Short vector longer than one needs a hexagonal-leaning shape.
    basis(0, 0) = ell;
    basis(0, 1) = 0.5 * ell;
    basis(1, 1) = 1.0 / ell;
  } else {
    const double rest = std::pow(ell, -1.0 / static_cast<double>(dim - 1));
    basis(0, 0) = ell;
    for (int i = 1; i < dim; ++i) basis(i, i) = rest;
  }
  double scale_min = basis(0, 0), scale_max = basis(0, 0);
  for (int i = 0; i < dim; ++i) {
    scale_min = std::min(scale_min, basis(i, i));
    scale_max = std::max(scale_max, basis(i, i));
  }
  if (scale_max > kMaxSublevelAspect * scale_min)
    throw numerical_error(
        "sublevel depth exceeds the representable basis aspect ratio");

  Philox rng(seed, index);
  const auto random_move = [&]() {
    Mat g = Mat::Identity(dim, dim);
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    int i = static_cast<int>(rng.uniform() * dim) % dim;
    int j = static_cast<int>(rng.uniform() * (dim - 1)) % (dim - 1);
    if (j >= i) ++j;
    const double c = std::cos(theta), s = std::sin(theta);
    g(i, i) = c;
    g(j, j) = c;
    g(i, j) = -s;
    g(j, i) = s;
    Mat shear = Mat::Identity(dim, dim);
    int k = static_cast<int>(rng.uniform() * dim) % dim;
    int l = static_cast<int>(rng.uniform() * (dim - 1)) % (dim - 1);
    if (l >= k) ++l;
    shear(k, l) = kBurnInShear * (2.0 * rng.uniform() - 1.0);
    Mat out = g * shear;
    return out;
  };

  // Random rotation of the squeeze, then a handful of accepted moves.
  LatticePoint x(basis);
  {
    Mat g = random_move();
    const LatticePoint candidate = apply_group(GroupElement(g), x);
    const double v = evaluate_V(spec, candidate);
    if (v >= 0.5 * target_v && v <= target_v) x = candidate;
  }
  int accepted = 0;
  for (int attempt = 0; attempt < kMaxSublevelAttempts && accepted < kBurnInMoves;
       ++attempt) {
    const LatticePoint candidate = apply_group(GroupElement(random_move()), x);
    const double v = evaluate_V(spec, candidate);
    if (v >= 0.5 * target_v && v <= target_v) {
      x = candidate;
      ++accepted;
    }
  }
  return x;
}

inline std::vector<LatticePoint> sublevel_probes(const LyapunovSpec& spec, int dim,
                                                 const std::vector<double>& targets,
                                                 std::uint64_t seed) {
  std::vector<LatticePoint> out;
  out.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i)
    out.push_back(sublevel_sample(spec, dim, targets[i], seed, i));
  return out;
}

struct SweepOutcome {
  bool found = false;
  ContractionFit fit;  // the first contracting parameter pair, when found
  std::vector<ContractionFit> attempts;
};

// Scans delta values and step counts for a contracting drift envelope.
inline SweepOutcome sweep_contraction(const StepMeasure& mu, int dim,
                                      const std::vector<double>& deltas, int n0_max,
                                      const std::vector<double>& targets,
                                      std::size_t samples, std::uint64_t seed,
                                      int threads = 0, bool multi_minima = false,
                                      double alpha_threshold = 0.99) {
  if (deltas.empty()) throw validation_error("sweep needs at least one delta");
  if (n0_max < 1) throw validation_error("sweep needs at least one step count");
  SweepOutcome outcome;
  for (double delta : deltas) {
    LyapunovSpec spec{1.0, delta, 1, multi_minima};
    // Small exponents can push the deepest probe level beyond the
    // representable cusp depth; such deltas are skipped, not fatal.
    std::vector<LatticePoint> probes;
    try {
      probes = sublevel_probes(spec, dim, targets, derive_seed(seed, 1));
    } catch (const numerical_error&) {
      continue;
    }
    for (int n0 = 1; n0 <= n0_max; ++n0) {
      spec.n0 = n0;
      ContractionFit fit =
          fit_contraction(mu, spec, probes, samples, derive_seed(seed, 2), threads);
      outcome.attempts.push_back(fit);
      if (fit.alpha <= alpha_threshold) {
        outcome.found = true;
        outcome.fit = std::move(fit);
        return outcome;
      }
    }
  }
  return outcome;
}

// Multi-step lift W(x) = sum_k alpha^((n0-1-k)/n0) E[V(X_k)], which
// turns an n0-step drift bound into a one-step one with rate
// alpha^(1/n0) and the same additive constant.
inline Estimate evaluate_lift(const StepMeasure& mu, const LyapunovSpec& spec,
                              double alpha, const LatticePoint& x,
                              std::size_t samples, std::uint64_t seed,
                              int threads = 0) {
  validate_spec(spec);
  if (!(alpha > 0.0)) throw validation_error("lift needs a positive alpha");
  const Observable v_obs = lyapunov_observable(spec);
  const double n0 = static_cast<double>(spec.n0);
  double value = std::pow(alpha, (n0 - 1.0) / n0) * v_obs(x);
  double var = 0.0;
  for (int k = 1; k < spec.n0; ++k) {
    const double coeff = std::pow(alpha, (n0 - 1.0 - k) / n0);
    const Estimate term = estimate_pushforward(mu, k, x, v_obs, samples, seed,
                                               threads, static_cast<std::uint64_t>(k));
    value += coeff * term.value;
    var += coeff * coeff * term.std_error * term.std_error;
  }
  return Estimate{value, std::sqrt(var), samples};
}

struct RecurrenceRow {
  int n = 0;
  double phi = 0.0;
  double start_v = 0.0;
  double escape_fraction = 0.0;  // P(V(X_n) > level), empirical
  double escape_se = 0.0;
  double escape_bound = 0.0;  // (eps / 2B) alpha^n V0 + eps / 2
  double cesaro_escape = 0.0;  // mean over trajectories of time outside M
  double cesaro_se = 0.0;
  double cesaro_bound = 0.0;
};

struct RecurrenceReport {
  double level = 0.0;  // 2B / eps, the recurrent set cutoff
  double drift_bound = 0.0;  // B = beta / (1 - alpha)
  double level_epsilon = 0.0;
  int threshold_step = -1;  // first n with alpha^n phi(n) <= B
  std::vector<RecurrenceRow> rows;
};

// Starts near the sublevel boundary phi(n) and measures how much mass
// escapes the recurrent set after n steps, against the drift bound.
// A step here is one block of fit.spec.n0 base moves: the envelope
// certifies contraction per n0 moves, so the bounds alpha^n phi(n) and
// the geometric Cesaro sum are exact only for that subsampled chain.
inline RecurrenceReport recurrence_experiment(
    const StepMeasure& mu, const ContractionFit& fit, double level_epsilon,
    const std::function<double(int)>& phi, const std::vector<int>& steps,
    std::size_t samples, std::uint64_t seed, int threads = 0) {
  validate_spec(fit.spec);
  if (!fit.contracting) throw validation_error("recurrence needs a contracting fit");
  if (!(level_epsilon > 0.0) || !(level_epsilon < 1.0))
    throw validation_error("level epsilon must lie in (0, 1)");
  if (steps.empty()) throw validation_error("need at least one step count");
  if (samples < 2) throw validation_error("need at least two samples");

  RecurrenceReport report;
  report.drift_bound = fit.bound();
  report.level = 2.0 * report.drift_bound / level_epsilon;
  report.level_epsilon = level_epsilon;
  for (int n = 1; n <= 100000; ++n)
    if (std::pow(fit.alpha, n) * phi(n) <= report.drift_bound) {
      report.threshold_step = n;
      break;
    }

  const int dim = mu.dim();
  const int thread_count = resolve_thread_count(threads);
  for (std::size_t row_index = 0; row_index < steps.size(); ++row_index) {
    const int n = steps[static_cast<std::size_t>(row_index)];
    if (n < 1) throw validation_error("step counts must be positive");
    RecurrenceRow row;
    row.n = n;
    row.phi = phi(n);
    if (!(row.phi > 1.0)) throw validation_error("phi must exceed one on the grid");

    const LatticePoint x0 =
        sublevel_sample(fit.spec, dim, row.phi, derive_seed(seed, 10), row_index);
    row.start_v = evaluate_V(fit.spec, x0);

    const std::size_t chunk_count = (samples + kChunkSize - 1) / kChunkSize;
    std::vector<std::int64_t> chunk_escape(chunk_count, 0);
    std::vector<double> chunk_cesaro(chunk_count, 0.0);
    std::vector<double> chunk_cesaro_sq(chunk_count, 0.0);

    parallel_for_chunks(chunk_count, thread_count, [&](std::size_t c) {
      const std::size_t begin = c * kChunkSize;
      const std::size_t end = std::min(samples, begin + kChunkSize);
      std::int64_t escaped = 0;
      CompensatedSum cesaro_sum, cesaro_sq_sum;
      for (std::size_t t = begin; t < end; ++t) {
        Philox rng(seed, trajectory_stream(row_index, t));
        Mat basis = x0.basis();
        int outside = 0;
        int base_steps = 0;
        double last_v = row.start_v;
        for (int k = 1; k <= n; ++k) {
          for (int s = 0; s < fit.spec.n0; ++s) {
            basis = mu.atom(mu.sample_index(rng)).matrix() * basis;
            reduce_in_place(basis);
            if (++base_steps % kRenormInterval == 0) renormalize_det(basis);
          }
          const LatticePoint point(basis);
          last_v = evaluate_V(fit.spec, point);
          if (last_v > report.level) ++outside;
        }
        if (last_v > report.level) ++escaped;
        const double q = static_cast<double>(outside) / static_cast<double>(n);
        cesaro_sum.add(q);
        cesaro_sq_sum.add(q * q);
      }
      chunk_escape[c] = escaped;
      chunk_cesaro[c] = cesaro_sum.value();
      chunk_cesaro_sq[c] = cesaro_sq_sum.value();
    });

    std::int64_t escaped = 0;
    CompensatedSum cesaro_sum, cesaro_sq_sum;
    for (std::size_t c = 0; c < chunk_count; ++c) {
      escaped += chunk_escape[c];
      cesaro_sum.add(chunk_cesaro[c]);
      cesaro_sq_sum.add(chunk_cesaro_sq[c]);
    }
    const double count = static_cast<double>(samples);
    row.escape_fraction = static_cast<double>(escaped) / count;
    row.escape_se = std::sqrt(
        std::max(0.0, row.escape_fraction * (1.0 - row.escape_fraction)) / count);
    row.escape_bound = 0.5 * level_epsilon *
                           (std::pow(fit.alpha, n) * row.start_v / report.drift_bound) +
                       0.5 * level_epsilon;
    row.cesaro_escape = cesaro_sum.value() / count;
    const double var = std::max(
        0.0, (cesaro_sq_sum.value() - count * row.cesaro_escape * row.cesaro_escape) /
                 (count - 1.0));
    row.cesaro_se = std::sqrt(var / count);
    double geometric = 0.0;
    for (int k = 1; k <= n; ++k) geometric += std::pow(fit.alpha, k);
    row.cesaro_bound = 0.5 * level_epsilon +
                       0.5 * level_epsilon * row.start_v * geometric /
                           (static_cast<double>(n) * report.drift_bound);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace latwalk
