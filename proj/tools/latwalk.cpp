// Experiment harness for the lattice random walk laboratory.
//
// Every run takes an experiment family (a named preset or an explicit
// matrix list in the config), executes one experiment kind, and writes
// two artifacts into --out:
//   <kind>.csv        the data table, %.17g floats, byte-stable per seed
//   <kind>_meta.json  the resolved configuration and summary results
//
// Exit codes: 0 success, 2 invalid configuration, 3 numerical failure
// (enumeration overflow, cusp excursion, or no contracting envelope).

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "latwalk/equidist.hpp"
#include "latwalk/errors.hpp"
#include "latwalk/finite_chain.hpp"
#include "latwalk/lyapunov.hpp"
#include "latwalk/presets.hpp"
#include "latwalk/siegel.hpp"
#include "latwalk/walk.hpp"

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

struct RunOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::string preset;
  std::uint64_t seed = 1;
  int threads = 0;
};

// ---------------------------------------------------------------------------
// Config file: flat key = value lines, '#' comments, no sections.

std::map<std::string, std::string> parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw latwalk::validation_error("cannot open config file: " + path);
  std::map<std::string, std::string> entries;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw latwalk::validation_error("config line " + std::to_string(line_no) +
                                      " is not key = value: " + stripped);
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw latwalk::validation_error("config line " + std::to_string(line_no) +
                                      " has an empty key");
    if (!entries.emplace(key, value).second)
      throw latwalk::validation_error("duplicate config key: " + key);
  }
  if (entries.empty())
    throw latwalk::validation_error("config file has no entries: " + path);
  return entries;
}

// Typed access to config entries.  Every lookup records the resolved
// value so the metadata JSON reflects defaults as well as overrides, and
// unknown keys are rejected after the run is wired up.
class Params {
 public:
  explicit Params(std::map<std::string, std::string> entries)
      : entries_(std::move(entries)) {}

  std::string str(const std::string& key, const std::string& def) {
    const std::string v = raw(key, def);
    resolved_[key] = v;
    return v;
  }

  long long integer(const std::string& key, long long def) {
    const std::string v = raw(key, std::to_string(def));
    const long long out = parse_int(key, v);
    resolved_[key] = out;
    return out;
  }

  double real(const std::string& key, double def) {
    const std::string v = raw(key, format_double(def));
    const double out = parse_real(key, v);
    resolved_[key] = out;
    return out;
  }

  bool boolean(const std::string& key, bool def) {
    const std::string v = raw(key, def ? "true" : "false");
    bool out = false;
    if (v == "true" || v == "1")
      out = true;
    else if (v == "false" || v == "0")
      out = false;
    else
      throw latwalk::validation_error("config key " + key + " is not a boolean: " + v);
    resolved_[key] = out;
    return out;
  }

  std::vector<long long> int_list(const std::string& key, const std::string& def) {
    const std::string v = raw(key, def);
    std::vector<long long> out;
    for (const std::string& part : split(v, ',')) out.push_back(parse_int(key, part));
    resolved_[key] = out;
    return out;
  }

  std::vector<double> real_list(const std::string& key, const std::string& def) {
    const std::string v = raw(key, def);
    std::vector<double> out;
    for (const std::string& part : split(v, ',')) out.push_back(parse_real(key, part));
    resolved_[key] = out;
    return out;
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  // Raw access without resolution bookkeeping (used for the atom list).
  std::string raw(const std::string& key, const std::string& def) {
    used_.insert(key);
    const auto it = entries_.find(key);
    return it == entries_.end() ? def : it->second;
  }

  void note(const std::string& key, const json& value) { resolved_[key] = value; }

  void require_all_used() const {
    for (const auto& [key, value] : entries_)
      if (used_.count(key) == 0)
        throw latwalk::validation_error("unknown config key: " + key);
  }

  const json& resolved() const { return resolved_; }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream stream(s);
    std::string item;
    while (std::getline(stream, item, sep)) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      parts.push_back(b == std::string::npos ? std::string()
                                             : item.substr(b, e - b + 1));
    }
    return parts;
  }

 private:
  static long long parse_int(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const long long out = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw latwalk::validation_error("config key " + key + " is not an integer: " + v);
    }
  }

  static double parse_real(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double out = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw latwalk::validation_error("config key " + key + " is not a number: " + v);
    }
  }

  static std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }

  std::map<std::string, std::string> entries_;
  std::set<std::string> used_;
  json resolved_ = json::object();
};

// ---------------------------------------------------------------------------
// Experiment family resolution: named preset, or explicit matrix list.

struct Family {
  latwalk::StepMeasure measure;
  std::vector<latwalk::Rational> rational_weights;
  int default_modulus = 2;
  std::string label;
};

latwalk::Rational parse_rational(const std::string& text) {
  try {
    if (text.find('/') != std::string::npos) {
      latwalk::Rational r(text);
      r.canonicalize();
      if (r <= 0) throw latwalk::validation_error("weights must be positive");
      return r;
    }
    std::size_t pos = 0;
    const double x = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return latwalk::Rational(x);
  } catch (const latwalk::validation_error&) {
    throw;
  } catch (const std::exception&) {
    throw latwalk::validation_error("cannot parse weight: " + text);
  }
}

Family resolve_family(const RunOptions& opts, Params& params) {
  if (!opts.preset.empty()) {
    if (params.has("atoms") || params.has("weights") || params.has("dim"))
      throw latwalk::validation_error(
          "give either --preset or an explicit atoms/weights list, not both");
    latwalk::Preset p = latwalk::make_preset(opts.preset);
    params.note("family", p.name);
    return Family{std::move(p.measure), std::move(p.rational_weights),
                  p.default_modulus, p.name};
  }
  if (!params.has("atoms"))
    throw latwalk::validation_error(
        "no experiment family: pass --preset or set atoms/weights/dim in the config");
  const auto dim = static_cast<int>(params.integer("dim", 0));
  if (dim < 2) throw latwalk::validation_error("explicit atom lists need dim >= 2");
  const std::string atom_text = params.str("atoms", "");
  const std::string weight_text = params.str("weights", "");
  if (weight_text.empty())
    throw latwalk::validation_error("explicit atom lists need a weights entry");

  std::vector<latwalk::GroupElement> atoms;
  for (const std::string& block : Params::split(atom_text, ';')) {
    const std::vector<std::string> cells = Params::split(block, ',');
    if (static_cast<int>(cells.size()) != dim * dim)
      throw latwalk::validation_error("atom needs " + std::to_string(dim * dim) +
                                      " row-major entries: " + block);
    latwalk::Mat m(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        const std::string& cell = cells[static_cast<std::size_t>(i * dim + j)];
        try {
          std::size_t pos = 0;
          m(i, j) = std::stod(cell, &pos);
          if (pos != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
          throw latwalk::validation_error("cannot parse atom entry: " + cell);
        }
      }
    atoms.emplace_back(m);
  }

  std::vector<latwalk::Rational> rweights;
  std::vector<double> weights;
  for (const std::string& cell : Params::split(weight_text, ',')) {
    rweights.push_back(parse_rational(cell));
    weights.push_back(rweights.back().get_d());
  }
  latwalk::Rational total(0);
  for (const auto& w : rweights) total += w;
  if (total != latwalk::Rational(1))
    throw latwalk::validation_error("explicit weights must sum to exactly 1");
  params.note("family", "explicit");
  return Family{latwalk::StepMeasure(std::move(atoms), std::move(weights)),
                std::move(rweights), 2, "explicit"};
}

// ---------------------------------------------------------------------------
// Output helpers.

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw latwalk::validation_error("cannot write " + path.string());
  out << content;
  if (!out) throw latwalk::validation_error("write failed: " + path.string());
}

json base_metadata(const std::string& kind, const RunOptions& opts,
                   const Params& params) {
  json meta;
  meta["experiment"] = kind;
  meta["version"] = kVersion;
  meta["seed"] = opts.seed;
  meta["preset"] = opts.preset;
  meta["threads_requested"] = opts.threads;
  meta["threads_resolved"] = latwalk::resolve_thread_count(opts.threads);
  meta["chunk_layout"] = {
      {"chunk_size", latwalk::kChunkSize},
      {"stream", "counter high word = (block << 40) | trajectory index"}};
  meta["config"] = params.resolved();
  return meta;
}

void emit(const RunOptions& opts, const std::string& kind, const std::string& csv,
          const json& meta) {
  const std::filesystem::path dir(opts.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw latwalk::validation_error("cannot create output dir: " + opts.out_dir);
  write_file(dir / (kind + ".csv"), csv);
  write_file(dir / (kind + "_meta.json"), meta.dump(2) + "\n");
}

std::function<double(int)> make_phi(const std::string& name) {
  if (name == "n") return [](int n) { return static_cast<double>(n); };
  if (name == "n^2")
    return [](int n) { return static_cast<double>(n) * static_cast<double>(n); };
  if (name == "n^3") return [](int n) { return std::pow(static_cast<double>(n), 3.0); };
  if (name == "2^n") return [](int n) { return std::pow(2.0, n); };
  throw latwalk::validation_error("phi must be one of n, n^2, n^3, 2^n: " + name);
}

latwalk::ProfileKind parse_profile(const std::string& name) {
  if (name == "indicator") return latwalk::ProfileKind::indicator;
  if (name == "bump") return latwalk::ProfileKind::bump;
  throw latwalk::validation_error("profile must be indicator or bump: " + name);
}

std::vector<int> to_int_vector(const std::vector<long long>& xs, const char* what) {
  std::vector<int> out;
  for (long long x : xs) {
    if (x < 0 || x > 1'000'000'000)
      throw latwalk::validation_error(std::string(what) + " out of range");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

latwalk::LatticePoint standard_start(int dim) {
  return latwalk::LatticePoint(latwalk::Mat::Identity(dim, dim));
}

// ---------------------------------------------------------------------------
// chain: enumerate the congruence quotient orbit and its exact law.

void run_chain(const RunOptions& opts, Params& params, const Family& family) {
  const int modulus =
      static_cast<int>(params.integer("modulus", family.default_modulus));
  const int n_max = static_cast<int>(params.integer("n_max", 40));
  if (n_max < 1) throw latwalk::validation_error("n_max must be positive");
  params.require_all_used();

  std::vector<latwalk::GroupElement> gens;
  for (std::size_t i = 0; i < family.measure.size(); ++i)
    gens.push_back(family.measure.atom(i));
  const latwalk::FiniteChain chain =
      latwalk::enumerate_orbit(gens, family.rational_weights, modulus);

  const int period = latwalk::chain_period(chain);
  const auto classes = latwalk::cyclic_classes(chain);
  const auto stationary = latwalk::stationary_distribution(chain);
  const auto spectrum = latwalk::chain_spectrum(chain);
  const int witness_steps = std::min(n_max, latwalk::kExactPowerLimit);
  const auto witness = latwalk::periodicity_witness(chain, witness_steps);
  const std::vector<double> p_final = latwalk::distribution(chain, n_max);

  std::vector<int> class_of(chain.states.size(), -1);
  for (std::size_t c = 0; c < classes.size(); ++c)
    for (int s : classes[c]) class_of[static_cast<std::size_t>(s)] = static_cast<int>(c);

  std::ostringstream csv;
  csv << "state,matrix,class,period,stationary,p_n\n";
  for (std::size_t s = 0; s < chain.states.size(); ++s) {
    const auto& g = chain.states[s];
    std::string mat_text;
    for (int i = 0; i < g.dim(); ++i) {
      if (i > 0) mat_text += ';';
      for (int j = 0; j < g.dim(); ++j) {
        if (j > 0) mat_text += ' ';
        mat_text += std::to_string(g.entry(i, j));
      }
    }
    csv << s << ',' << mat_text << ',' << class_of[s] << ',' << period << ','
        << stationary[s].get_str() << ',' << fmt(p_final[s]) << '\n';
  }

  json meta = base_metadata("chain", opts, params);
  meta["modulus"] = modulus;
  meta["n_max"] = n_max;
  meta["state_count"] = chain.states.size();
  meta["period"] = period;
  meta["second_modulus"] = spectrum.second_modulus;
  json eigs = json::array();
  for (const auto& z : spectrum.eigenvalues) eigs.push_back({z.real(), z.imag()});
  meta["eigenvalues"] = eigs;
  meta["classes"] = classes;
  meta["alternation_exact"] = witness.alternation_exact;
  meta["alternation_checked_steps"] = witness.checked_steps;
  meta["alternation_first_violation"] = witness.first_violation;
  json stat = json::array();
  for (const auto& r : stationary) stat.push_back(r.get_str());
  meta["stationary"] = stat;
  emit(opts, "chain", csv.str(), meta);
}

// ---------------------------------------------------------------------------
// walk: raw n-step averages of the lattice-sum observable.

void run_walk(const RunOptions& opts, Params& params, const Family& family) {
  const double radius = params.real("radius", 1.5);
  const auto profile = parse_profile(params.str("profile", "indicator"));
  const int n_max = static_cast<int>(params.integer("n_max", 50));
  const auto samples = static_cast<std::uint64_t>(params.integer("samples", 100000));
  if (n_max < 0) throw latwalk::validation_error("n_max must be nonnegative");
  params.require_all_used();

  const latwalk::SiegelObservable obs(family.measure.dim(), radius, profile);
  const auto series = latwalk::pushforward_series(
      family.measure, standard_start(family.measure.dim()), obs.as_observable(),
      n_max, samples, opts.seed, opts.threads);

  std::ostringstream csv;
  csv << "n,estimate,std_error\n";
  for (std::size_t i = 0; i < series.steps.size(); ++i)
    csv << series.steps[i] << ',' << fmt(series.estimates[i]) << ','
        << fmt(series.std_errors[i]) << '\n';

  json meta = base_metadata("walk", opts, params);
  meta["haar_mean"] = obs.haar_expectation();
  meta["samples_per_point"] = series.samples_per_point;
  emit(opts, "walk", csv.str(), meta);
}

// ---------------------------------------------------------------------------
// equidist: deviations from the Haar mean, or the genericity survey.

void run_equidist(const RunOptions& opts, Params& params, const Family& family) {
  const double radius = params.real("radius", 1.5);
  const auto profile = parse_profile(params.str("profile", "indicator"));
  const auto samples = static_cast<std::uint64_t>(params.integer("samples", 100000));
  const std::string mode = params.str("mode", "series");
  const latwalk::SiegelObservable obs(family.measure.dim(), radius, profile);

  if (mode == "series") {
    const int n_max = static_cast<int>(params.integer("n_max", 50));
    params.require_all_used();
    const auto report = latwalk::equidistribution_report(
        family.measure, standard_start(family.measure.dim()), obs, n_max, samples,
        opts.seed, opts.threads);
    std::ostringstream csv;
    csv << "n,deviation,std_error\n";
    const auto& dev = report.discrepancy.deviations;
    for (std::size_t i = 0; i < dev.steps.size(); ++i)
      csv << dev.steps[i] << ',' << fmt(dev.estimates[i]) << ','
          << fmt(dev.std_errors[i]) << '\n';
    json meta = base_metadata("equidist", opts, params);
    meta["haar_mean"] = report.haar_mean;
    meta["noise_floor"] = report.discrepancy.noise_floor;
    meta["noise_dominated"] = report.discrepancy.noise_dominated;
    meta["fitted_rate"] = report.discrepancy.fitted_rate;
    meta["first_below_floor"] = report.discrepancy.first_below_floor;
    emit(opts, "equidist", csv.str(), meta);
    return;
  }
  if (mode == "genericity") {
    const auto steps = to_int_vector(params.int_list("steps", "5,10,20,40"), "steps");
    const int start_count = static_cast<int>(params.integer("start_count", 20));
    const double decay_rate = params.real("decay_rate", 0.5);
    const double scale = params.real("scale", 1.0);
    params.require_all_used();
    const auto survey =
        latwalk::genericity_survey(family.measure, obs, steps, start_count, samples,
                                   decay_rate, scale, opts.seed, opts.threads);
    std::ostringstream csv;
    csv << "n,threshold,exceed_fraction\n";
    for (const auto& row : survey.rows)
      csv << row.n << ',' << fmt(row.threshold) << ',' << fmt(row.exceed_fraction)
          << '\n';
    json meta = base_metadata("equidist", opts, params);
    meta["haar_mean"] = survey.haar_mean;
    meta["start_count"] = survey.start_count;
    emit(opts, "equidist", csv.str(), meta);
    return;
  }
  throw latwalk::validation_error("mode must be series or genericity: " + mode);
}

// ---------------------------------------------------------------------------
// lyapunov: sweep for a contracting drift envelope.

latwalk::ContractionFit fitted_sweep(const RunOptions& opts, Params& params,
                                     const Family& family, json* meta_out) {
  const auto deltas = params.real_list("deltas", "0.125,0.25,0.5");
  const int n0_max = static_cast<int>(params.integer("n0_max", 20));
  // Repeated deep targets draw several short-vector orientations per level,
  // so the fitted envelope tracks the worst direction rather than a lucky one.
  const auto targets = params.real_list(
      "targets",
      "2,2,2,5,5,20,20,100,100,100,300,300,300,1000,1000,1000,1000,1000,1000");
  const auto samples = static_cast<std::uint64_t>(params.integer("samples", 2000));
  const bool multi = params.boolean("multi_minima", false);
  const double alpha_threshold = params.real("alpha_threshold", 0.99);

  const auto outcome = latwalk::sweep_contraction(
      family.measure, family.measure.dim(), deltas, n0_max, targets, samples,
      opts.seed, opts.threads, multi, alpha_threshold);
  if (meta_out) {
    (*meta_out)["sweep_attempts"] = outcome.attempts.size();
    (*meta_out)["sweep_found"] = outcome.found;
  }
  if (!outcome.found)
    throw latwalk::numerical_error("sweep found no contracting drift envelope");
  return outcome.fit;
}

void run_lyapunov(const RunOptions& opts, Params& params, const Family& family) {
  json extra;
  const latwalk::ContractionFit fit = fitted_sweep(opts, params, family, &extra);
  params.require_all_used();

  std::ostringstream csv;
  csv << "v,estimate,std_error,bound\n";
  for (const auto& probe : fit.probes)
    csv << fmt(probe.v) << ',' << fmt(probe.after.value) << ','
        << fmt(probe.after.std_error) << ',' << fmt(fit.alpha * probe.v + fit.beta)
        << '\n';

  json meta = base_metadata("lyapunov", opts, params);
  meta.update(extra);
  meta["delta"] = fit.spec.delta;
  meta["n0"] = fit.spec.n0;
  meta["epsilon"] = fit.spec.epsilon;
  meta["alpha"] = fit.alpha;
  meta["beta"] = fit.beta;
  meta["drift_bound"] = fit.bound();
  meta["contracting"] = fit.contracting;
  emit(opts, "lyapunov", csv.str(), meta);
}

// ---------------------------------------------------------------------------
// recurrence: escape mass from the recurrent set against the drift bound.

void run_recurrence(const RunOptions& opts, Params& params, const Family& family) {
  json extra;
  const latwalk::ContractionFit fit = fitted_sweep(opts, params, family, &extra);
  const double level_epsilon = params.real("level_epsilon", 0.1);
  const std::string phi_name = params.str("phi", "n^2");
  const auto steps = to_int_vector(params.int_list("steps", "5,10,20,40"), "steps");
  const auto samples =
      static_cast<std::uint64_t>(params.integer("recurrence_samples", 5000));
  params.require_all_used();

  const auto report = latwalk::recurrence_experiment(
      family.measure, fit, level_epsilon, make_phi(phi_name), steps, samples,
      latwalk::derive_seed(opts.seed, 3), opts.threads);

  std::ostringstream csv;
  csv << "n,phi,start_v,escape_fraction,escape_se,escape_bound,"
         "cesaro_escape,cesaro_se,cesaro_bound\n";
  for (const auto& row : report.rows)
    csv << row.n << ',' << fmt(row.phi) << ',' << fmt(row.start_v) << ','
        << fmt(row.escape_fraction) << ',' << fmt(row.escape_se) << ','
        << fmt(row.escape_bound) << ',' << fmt(row.cesaro_escape) << ','
        << fmt(row.cesaro_se) << ',' << fmt(row.cesaro_bound) << '\n';

  json meta = base_metadata("recurrence", opts, params);
  meta.update(extra);
  meta["delta"] = fit.spec.delta;
  meta["n0"] = fit.spec.n0;
  meta["alpha"] = fit.alpha;
  meta["beta"] = fit.beta;
  meta["drift_bound"] = report.drift_bound;
  meta["level"] = report.level;
  meta["level_epsilon"] = report.level_epsilon;
  meta["threshold_step"] = report.threshold_step;
  emit(opts, "recurrence", csv.str(), meta);
}

// ---------------------------------------------------------------------------
// uniform-cesaro: worst-case time-averaged discrepancy over growing
// sublevel sets.

void run_uniform_cesaro(const RunOptions& opts, Params& params,
                        const Family& family) {
  const double delta = params.real("delta", 4.0);
  const double epsilon = params.real("epsilon", 1.0);
  const bool multi = params.boolean("multi_minima", false);
  const double radius = params.real("radius", 0.5);
  const auto profile = parse_profile(params.str("profile", "indicator"));
  const std::string phi_name = params.str("phi", "n");
  const auto steps = to_int_vector(params.int_list("steps", "10,100"), "steps");
  const int points = static_cast<int>(params.integer("points_per_level", 20));
  const auto samples = static_cast<std::uint64_t>(params.integer("samples", 10000));
  params.require_all_used();

  const latwalk::LyapunovSpec spec{epsilon, delta, 1, multi};
  const latwalk::SiegelObservable obs(family.measure.dim(), radius, profile);
  const auto report = latwalk::uniform_cesaro_experiment(
      family.measure, spec, obs, make_phi(phi_name), steps, points, samples,
      opts.seed, opts.threads);

  std::ostringstream csv;
  csv << "n,point,target_v,start_v,estimate,std_error,abs_deviation\n";
  for (const auto& row : report.rows)
    for (std::size_t j = 0; j < row.starts.size(); ++j) {
      const auto& s = row.starts[j];
      csv << row.n << ',' << j << ',' << fmt(s.target_v) << ',' << fmt(s.start_v)
          << ',' << fmt(s.cesaro) << ',' << fmt(s.std_error) << ','
          << fmt(std::abs(s.cesaro - report.haar_mean)) << '\n';
    }

  json meta = base_metadata("uniform_cesaro", opts, params);
  meta["haar_mean"] = report.haar_mean;
  json sup = json::array();
  for (const auto& row : report.rows)
    sup.push_back({{"n", row.n},
                   {"phi", row.phi},
                   {"sup_discrepancy", row.sup_discrepancy},
                   {"se_at_sup", row.se_at_sup},
                   {"start_v_at_sup", row.start_v_at_sup}});
  meta["sup_rows"] = sup;
  emit(opts, "uniform_cesaro", csv.str(), meta);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random walks on spaces of lattices: simulation laboratory"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunOptions opts;
  auto add_common = [&opts](CLI::App* sub) {
    sub->add_option("--config", opts.config_path,
                    "flat key = value config file (documented in the README)");
    sub->add_option("--preset", opts.preset,
                    "named experiment family (see `latwalk list-presets`)");
    sub->add_option("--seed", opts.seed, "base seed for all trajectory streams")
        ->capture_default_str();
    sub->add_option("--out", opts.out_dir, "output directory for csv + json")
        ->capture_default_str();
    sub->add_option("--threads", opts.threads, "worker threads (0 = all cores)")
        ->capture_default_str();
  };

  CLI::App* chain = app.add_subcommand(
      "chain", "exact law of the walk on a finite congruence quotient");
  CLI::App* walk = app.add_subcommand(
      "walk", "n-step averages of the lattice-sum observable");
  CLI::App* equidist = app.add_subcommand(
      "equidist", "deviation from the Haar mean, or the genericity survey");
  CLI::App* lyapunov = app.add_subcommand(
      "lyapunov", "sweep for a contracting drift envelope");
  CLI::App* recurrence = app.add_subcommand(
      "recurrence", "escape mass from the recurrent set vs the drift bound");
  CLI::App* uniform = app.add_subcommand(
      "uniform-cesaro", "worst-case time-averaged discrepancy over sublevel sets");
  CLI::App* list = app.add_subcommand("list-presets", "print the preset ids");
  for (CLI::App* sub : {chain, walk, equidist, lyapunov, recurrence, uniform})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (list->parsed()) {
      for (const auto& name : latwalk::preset_names()) {
        const latwalk::Preset p = latwalk::make_preset(name);
        std::printf("%-22s %s\n", p.name.c_str(), p.description.c_str());
      }
      return 0;
    }
    Params params(opts.config_path.empty()
                      ? std::map<std::string, std::string>{}
                      : parse_config(opts.config_path));
    const Family family = resolve_family(opts, params);
    if (chain->parsed())
      run_chain(opts, params, family);
    else if (walk->parsed())
      run_walk(opts, params, family);
    else if (equidist->parsed())
      run_equidist(opts, params, family);
    else if (lyapunov->parsed())
      run_lyapunov(opts, params, family);
    else if (recurrence->parsed())
      run_recurrence(opts, params, family);
    else if (uniform->parsed())
      run_uniform_cesaro(opts, params, family);
    return 0;
  } catch (const latwalk::validation_error& e) {
    std::fprintf(stderr, "error (validation): %s\n", e.what());
    return 2;
  } catch (const latwalk::numerical_error& e) {
    std::fprintf(stderr, "error (numerical): %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
