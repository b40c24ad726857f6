#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <map>
#include <numeric>
#include <vector>

#include "latwalk/errors.hpp"
#include "latwalk/group.hpp"
#include "latwalk/matrix.hpp"
#include "latwalk/rational.hpp"

namespace latwalk {

inline constexpr std::size_t kMaxChainStates = 1'000'000;
inline constexpr int kExactPowerLimit = 64;
inline constexpr int kSpectrumCrossCheckLimit = 12;
inline constexpr double kSpectrumResidualTolerance = 1e-8;
inline constexpr double kIntegralTolerance = 1e-9;

// Group element with entries reduced modulo q.  Used as the state of a
// congruence quotient chain and as an ordered map key.
class ModGroupElement {
 public:
  ModGroupElement(const GroupElement& g, int q)
      : q_(q), d_(g.dim()),
        e_(static_cast<std::size_t>(g.dim()) * static_cast<std::size_t>(g.dim())) {
    if (q < 2) throw validation_error("modulus must be at least 2");
    const Mat& m = g.matrix();
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) {
        const double v = m(i, j);
        const double r = std::round(v);
        if (std::abs(v - r) > kIntegralTolerance)
          throw validation_error("matrix entry is not integral");
        e_[idx(i, j)] = reduce(static_cast<std::int64_t>(r));
      }
  }

  static ModGroupElement identity(int d, int q) {
    return ModGroupElement(GroupElement::identity(d), q);
  }

  int modulus() const { return q_; }
  int dim() const { return d_; }
  std::int32_t entry(int i, int j) const { return e_[idx(i, j)]; }

  friend ModGroupElement operator*(const ModGroupElement& a, const ModGroupElement& b) {
    if (a.q_ != b.q_ || a.d_ != b.d_)
      throw validation_error("mod element mismatch in product");
    ModGroupElement out(a.q_, a.d_);
    for (int i = 0; i < a.d_; ++i)
      for (int j = 0; j < a.d_; ++j) {
        std::int64_t acc = 0;
        for (int k = 0; k < a.d_; ++k)
          acc += static_cast<std::int64_t>(a.entry(i, k)) * b.entry(k, j);
        out.e_[out.idx(i, j)] = out.reduce(acc);
      }
    return out;
  }

  friend bool operator==(const ModGroupElement& a, const ModGroupElement& b) {
    return a.q_ == b.q_ && a.d_ == b.d_ && a.e_ == b.e_;
  }
  friend bool operator<(const ModGroupElement& a, const ModGroupElement& b) {
    if (a.d_ != b.d_) return a.d_ < b.d_;
    if (a.q_ != b.q_) return a.q_ < b.q_;
    return a.e_ < b.e_;
  }

 private:
  ModGroupElement(int q, int d)
      : q_(q), d_(d),
        e_(static_cast<std::size_t>(d) * static_cast<std::size_t>(d)) {}

  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(d_) +
           static_cast<std::size_t>(j);
  }
  std::int32_t reduce(std::int64_t v) const {
    const std::int64_t q = q_;
    return static_cast<std::int32_t>(((v % q) + q) % q);
  }

  int q_, d_;
  std::vector<std::int32_t> e_;
};

// Finite Markov chain on a congruence quotient orbit, with an exact
// rational transition matrix.
struct FiniteChain {
  int modulus;
  std::vector<ModGroupElement> states;
  RationalMatrix transition;
  int start = 0;
};

inline void validate_chain(const FiniteChain& chain) {
  const int n = static_cast<int>(chain.states.size());
  if (n < 1) throw validation_error("chain has no states");
  if (chain.transition.rows() != n || chain.transition.cols() != n)
    throw validation_error("transition matrix size mismatch");
  if (chain.start < 0 || chain.start >= n)
    throw validation_error("chain start index out of range");
  for (int i = 0; i < n; ++i) {
    Rational row_sum = 0;
    for (int j = 0; j < n; ++j) {
      if (chain.transition(i, j) < 0)
        throw validation_error("transition entries must be nonnegative");
      row_sum += chain.transition(i, j);
    }
    if (row_sum != 1) throw validation_error("transition rows must sum to one");
  }
}

// Breadth-first closure of the start state under the given generators,
// with exact transition weights.
inline FiniteChain enumerate_orbit(const std::vector<GroupElement>& generators,
                                   const std::vector<Rational>& weights, int q,
                                   const GroupElement& start_element,
                                   std::size_t max_states = kMaxChainStates) {
  if (generators.empty()) throw validation_error("need at least one generator");
  if (generators.size() != weights.size())
    throw validation_error("generator/weight count mismatch");
  Rational total = 0;
  for (const Rational& w : weights) {
    if (w <= 0) throw validation_error("weights must be positive");
    total += w;
  }
  if (total != 1) throw validation_error("weights must sum to one");

  const int d = generators.front().dim();
  for (const GroupElement& g : generators)
    if (g.dim() != d) throw validation_error("generators must share a dimension");

  std::vector<ModGroupElement> gens;
  gens.reserve(generators.size());
  for (const GroupElement& g : generators) gens.emplace_back(g, q);

  std::vector<ModGroupElement> states;
  std::map<ModGroupElement, int> index;
  std::deque<int> frontier;
  const ModGroupElement start(start_element, q);
  states.push_back(start);
  index.emplace(start, 0);
  frontier.push_back(0);

  struct Edge {
    int from, to;
    Rational weight;
  };
  std::vector<Edge> edges;

  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop_front();
    const ModGroupElement current = states[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < gens.size(); ++k) {
      const ModGroupElement next = gens[k] * current;
      auto [it, inserted] = index.emplace(next, static_cast<int>(states.size()));
      if (inserted) {
        if (states.size() >= max_states)
          throw validation_error("orbit exceeds the state budget");
        states.push_back(next);
        frontier.push_back(it->second);
      }
      edges.push_back({i, it->second, weights[k]});
    }
  }

  FiniteChain chain{q, std::move(states),
                    RationalMatrix(static_cast<int>(index.size()),
                                   static_cast<int>(index.size())),
                    0};
  for (const Edge& e : edges) chain.transition(e.from, e.to) += e.weight;
  validate_chain(chain);
  return chain;
}

inline FiniteChain enumerate_orbit(const std::vector<GroupElement>& generators,
                                   const std::vector<Rational>& weights, int q,
                                   std::size_t max_states = kMaxChainStates) {
  if (generators.empty()) throw validation_error("need at least one generator");
  return enumerate_orbit(generators, weights, q,
                         GroupElement::identity(generators.front().dim()),
                         max_states);
}

namespace detail {

// Forward and backward reachability from the start state; both must
// cover the chain for irreducibility.
inline std::vector<int> bfs_distances(const FiniteChain& chain, bool forward) {
  const int n = static_cast<int>(chain.states.size());
  std::vector<int> dist(static_cast<std::size_t>(n), -1);
  std::deque<int> frontier;
  dist[static_cast<std::size_t>(chain.start)] = 0;
  frontier.push_back(chain.start);
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop_front();
    for (int v = 0; v < n; ++v) {
      const bool edge = forward ? chain.transition(u, v) > 0 : chain.transition(v, u) > 0;
      if (edge && dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        frontier.push_back(v);
      }
    }
  }
  return dist;
}

inline void require_irreducible(const FiniteChain& chain) {
  for (bool forward : {true, false}) {
    const std::vector<int> dist = bfs_distances(chain, forward);
    for (int d : dist)
      if (d < 0) throw validation_error("chain is not irreducible");
  }
}

}  // namespace detail

// Period of an irreducible chain: gcd of (dist(u) + 1 - dist(v)) over
// all edges u -> v, with BFS distances from the start state.
inline int chain_period(const FiniteChain& chain) {
  validate_chain(chain);
  detail::require_irreducible(chain);
  const std::vector<int> dist = detail::bfs_distances(chain, true);
  const int n = static_cast<int>(chain.states.size());
  int g = 0;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (chain.transition(u, v) > 0)
        g = std::gcd(g, std::abs(dist[static_cast<std::size_t>(u)] + 1 -
                                 dist[static_cast<std::size_t>(v)]));
  return g == 0 ? 1 : g;
}

// Cyclic classes of an irreducible chain, indexed by BFS distance mod
// the period; the start state lands in class 0.
inline std::vector<std::vector<int>> cyclic_classes(const FiniteChain& chain) {
  const int period = chain_period(chain);
  const std::vector<int> dist = detail::bfs_distances(chain, true);
  std::vector<std::vector<int>> classes(static_cast<std::size_t>(period));
  for (std::size_t i = 0; i < dist.size(); ++i)
    classes[static_cast<std::size_t>(dist[i] % period)].push_back(static_cast<int>(i));
  return classes;
}

// Exact n-step distribution started from the chain's start state.
inline std::vector<Rational> exact_distribution(const FiniteChain& chain, int n) {
  validate_chain(chain);
  if (n < 0 || n > kExactPowerLimit)
    throw validation_error("exact distribution limited to 64 steps");
  std::vector<Rational> p(chain.states.size());
  p[static_cast<std::size_t>(chain.start)] = 1;
  for (int k = 0; k < n; ++k) p = chain.transition.left_apply(p);
  return p;
}

// n-step distribution in floating point; exact up to the rational step
// limit, then iterated in doubles.
inline std::vector<double> distribution(const FiniteChain& chain, int n) {
  validate_chain(chain);
  if (n < 0) throw validation_error("step count must be nonnegative");
  const int exact_steps = std::min(n, kExactPowerLimit);
  const std::vector<Rational> head = exact_distribution(chain, exact_steps);
  std::vector<double> p(head.size());
  for (std::size_t i = 0; i < head.size(); ++i) p[i] = head[i].get_d();
  const int m = static_cast<int>(p.size());
  Eigen::MatrixXd t(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) t(i, j) = chain.transition(i, j).get_d();
  Eigen::RowVectorXd row = Eigen::Map<Eigen::RowVectorXd>(p.data(), m);
  for (int k = exact_steps; k < n; ++k) row = row * t;
  return std::vector<double>(row.data(), row.data() + m);
}

// Exact stationary distribution of an irreducible chain, via the
// transposed balance equations with one row replaced by normalization.
inline std::vector<Rational> stationary_distribution(const FiniteChain& chain) {
  validate_chain(chain);
  detail::require_irreducible(chain);
  const int n = static_cast<int>(chain.states.size());
  RationalMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = chain.transition(j, i);
  for (int i = 0; i < n; ++i) a(i, i) -= 1;
  std::vector<Rational> rhs(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) a(0, j) = 1;
  rhs[0] = 1;
  return a.solve(std::move(rhs));
}

struct ChainSpectrum {
  std::vector<std::complex<double>> eigenvalues;  // sorted by modulus, descending
  double second_modulus = 0.0;
};

// Transition spectrum with an exact characteristic polynomial
// cross-check on small chains.
inline ChainSpectrum chain_spectrum(const FiniteChain& chain) {
  validate_chain(chain);
  const int n = static_cast<int>(chain.states.size());
  Eigen::MatrixXd t(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t(i, j) = chain.transition(i, j).get_d();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(t, false);
  if (solver.info() != Eigen::Success)
    throw numerical_error("eigenvalue computation failed");

  ChainSpectrum out;
  out.eigenvalues.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.eigenvalues.push_back(solver.eigenvalues()(i));
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              const double ma = std::abs(a), mb = std::abs(b);
              if (ma != mb) return ma > mb;
              if (a.real() != b.real()) return a.real() > b.real();
              return a.imag() > b.imag();
            });

  if (n <= kSpectrumCrossCheckLimit) {
    RationalMatrix rm(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) rm(i, j) = chain.transition(i, j);
    const std::vector<Rational> poly = rm.char_poly();
    for (const std::complex<double>& ev : out.eigenvalues)
      if (std::abs(evaluate_poly(poly, ev)) > kSpectrumResidualTolerance)
        throw numerical_error("spectrum cross-check failed");
  }

  std::size_t drop = 0;
  double best = std::abs(out.eigenvalues[0] - 1.0);
  for (std::size_t i = 1; i < out.eigenvalues.size(); ++i) {
    const double dist = std::abs(out.eigenvalues[i] - 1.0);
    if (dist < best) {
      best = dist;
      drop = i;
    }
  }
  double second = 0.0;
  for (std::size_t i = 0; i < out.eigenvalues.size(); ++i)
    if (i != drop) second = std::max(second, std::abs(out.eigenvalues[i]));
  out.second_modulus = second;
  return out;
}

struct PeriodicityWitness {
  int period = 1;
  std::vector<std::vector<int>> classes;
  int checked_steps = 0;
  bool alternation_exact = true;
  int first_violation = -1;
};

// Verifies, in exact arithmetic, that the n-step distribution is
// supported on the cyclic class of index n mod period.
inline PeriodicityWitness periodicity_witness(const FiniteChain& chain, int n_max) {
  if (n_max < 0 || n_max > kExactPowerLimit)
    throw validation_error("periodicity witness limited to 64 steps");
  PeriodicityWitness w;
  w.classes = cyclic_classes(chain);
  w.period = static_cast<int>(w.classes.size());
  w.checked_steps = n_max;

  std::vector<int> class_of(chain.states.size(), -1);
  for (std::size_t c = 0; c < w.classes.size(); ++c)
    for (int i : w.classes[c]) class_of[static_cast<std::size_t>(i)] = static_cast<int>(c);

  std::vector<Rational> p(chain.states.size());
  p[static_cast<std::size_t>(chain.start)] = 1;
  for (int n = 0; n <= n_max; ++n) {
    const int expected = n % w.period;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] != 0 && class_of[i] != expected) {
        w.alternation_exact = false;
        if (w.first_violation < 0) w.first_violation = n;
      }
    if (n < n_max) p = chain.transition.left_apply(p);
  }
  return w;
}

// Exact k-step transition chain over the same states.
inline FiniteChain chain_power(const FiniteChain& chain, int k) {
  validate_chain(chain);
  if (k < 1 || k > kExactPowerLimit)
    throw validation_error("chain power limited to 64 steps");
  RationalMatrix p = chain.transition;
  for (int i = 1; i < k; ++i) p = p * chain.transition;
  FiniteChain out{chain.modulus, chain.states, std::move(p), chain.start};
  validate_chain(out);
  return out;
}

// Restriction to a subset of states; the subset must be closed under
// the dynamics (rows restricted to it still sum to one).
inline FiniteChain restrict_chain(const FiniteChain& chain, const std::vector<int>& indices) {
  validate_chain(chain);
  if (indices.empty()) throw validation_error("restriction needs at least one state");
  const int n = static_cast<int>(chain.states.size());
  std::vector<int> position(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const int i = indices[k];
    if (i < 0 || i >= n) throw validation_error("restriction index out of range");
    if (position[static_cast<std::size_t>(i)] >= 0)
      throw validation_error("restriction indices must be distinct");
    position[static_cast<std::size_t>(i)] = static_cast<int>(k);
  }
  const int m = static_cast<int>(indices.size());
  FiniteChain out{chain.modulus, {}, RationalMatrix(m, m), 0};
  out.states.reserve(indices.size());
  for (int i : indices) out.states.push_back(chain.states[static_cast<std::size_t>(i)]);
  for (int a = 0; a < m; ++a) {
    Rational row_sum = 0;
    for (int b = 0; b < m; ++b) {
      out.transition(a, b) =
          chain.transition(indices[static_cast<std::size_t>(a)],
                           indices[static_cast<std::size_t>(b)]);
      row_sum += out.transition(a, b);
    }
    if (row_sum != 1)
      throw validation_error("restriction subset is not closed under the chain");
  }
  const int start_pos = position[static_cast<std::size_t>(chain.start)];
  out.start = start_pos >= 0 ? start_pos : 0;
  validate_chain(out);
  return out;
}

inline Rational l1_distance(const std::vector<Rational>& a, const std::vector<Rational>& b) {
  if (a.size() != b.size()) throw validation_error("vector size mismatch");
  Rational acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += abs(a[i] - b[i]);
  return acc;
}

inline double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw validation_error("vector size mismatch");
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc;
}

}  // namespace latwalk
