#include "madmm/io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "madmm/problems.hpp"

namespace madmm {

std::string format_general(double v, int precision) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, precision);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double v, int precision) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// LIBSVM

namespace {

[[noreturn]] void parse_fail(Index line, std::size_t col, const std::string& what) {
  throw InputError("libsvm parse error at line " + std::to_string(line) + ", column " +
                   std::to_string(col + 1) + ": " + what);
}

// from_chars with an explicit leading '+' allowed (common in label tokens)
template <typename T>
bool parse_number(const char* first, const char* last, T& value) {
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  return res.ec == std::errc() && res.ptr == last;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, Index n_override) {
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<double> raw_labels;
  Index max_index = 0;
  std::string line;
  Index lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t pos = 0;
    auto skip_ws = [&] {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) {
        ++pos;
      }
    };
    skip_ws();
    if (pos == line.size() || line[pos] == '#') continue;  // blank / comment line

    auto take_token = [&]() -> std::pair<std::size_t, std::string> {
      const std::size_t start = pos;
      while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r') {
        ++pos;
      }
      return {start, line.substr(start, pos - start)};
    };

    const auto [label_col, label_tok] = take_token();
    double label = 0.0;
    if (!parse_number(label_tok.data(), label_tok.data() + label_tok.size(), label)) {
      parse_fail(lineno, label_col, "bad label token '" + label_tok + "'");
    }
    raw_labels.push_back(label);
    const Index sample = static_cast<Index>(raw_labels.size()) - 1;

    Index prev_index = 0;
    for (;;) {
      skip_ws();
      if (pos == line.size() || line[pos] == '#') break;
      const auto [tok_col, tok] = take_token();
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos) parse_fail(lineno, tok_col, "expected index:value");
      long idx = 0;
      if (!parse_number(tok.data(), tok.data() + colon, idx) || idx <= 0) {
        parse_fail(lineno, tok_col, "bad feature index in '" + tok + "'");
      }
      double value = 0.0;
      if (!parse_number(tok.data() + colon + 1, tok.data() + tok.size(), value)) {
        parse_fail(lineno, tok_col + colon + 1, "bad feature value in '" + tok + "'");
      }
      if (idx <= prev_index) {
        parse_fail(lineno, tok_col, "feature indices must be strictly increasing");
      }
      prev_index = static_cast<Index>(idx);
      max_index = std::max(max_index, static_cast<Index>(idx));
      entries.emplace_back(static_cast<Index>(idx) - 1, sample, value);
    }
  }
  if (raw_labels.empty()) throw InputError("libsvm: dataset must be nonempty");

  // label normalization: two raw classes map onto -1/+1, smaller first
  std::set<double> classes(raw_labels.begin(), raw_labels.end());
  Vector labels(static_cast<Index>(raw_labels.size()));
  if (classes == std::set<double>{-1.0, 1.0} || classes == std::set<double>{-1.0} ||
      classes == std::set<double>{1.0}) {
    for (Index i = 0; i < labels.size(); ++i) labels[i] = raw_labels[static_cast<std::size_t>(i)];
  } else if (classes.size() == 2) {
    const double lo = *classes.begin();
    for (Index i = 0; i < labels.size(); ++i) {
      labels[i] = raw_labels[static_cast<std::size_t>(i)] == lo ? -1.0 : 1.0;
    }
  } else {
    throw InputError("libsvm: unmappable label set (need exactly two classes)");
  }

  Dataset ds;
  ds.num_samples = labels.size();
  ds.num_features = std::max(max_index, n_override);
  ds.labels = std::move(labels);
  ds.features.resize(ds.num_features, ds.num_samples);
  ds.features.setFromTriplets(entries.begin(), entries.end());
  return ds;
}

Dataset parse_libsvm_file(const std::string& path, Index n_override) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file: " + path);
  return parse_libsvm(in, n_override);
}

std::string serialize_libsvm(const Dataset& ds) {
  std::ostringstream out;
  for (Index j = 0; j < ds.num_samples; ++j) {
    out << (ds.labels[j] > 0 ? "+1" : "-1");
    for (SparseMatrix::InnerIterator it(ds.features, j); it; ++it) {
      out << ' ' << (it.row() + 1) << ':' << format_general(it.value(), 17);
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// synthetic data

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// draw order: features (column major), then the sparse truth, then labels
Dataset synth_core(Index n_samples, Index n_features, Rng& rng) {
  if (n_samples <= 0 || n_features <= 0) throw InputError("synth: dimensions must be positive");
  Matrix b(n_features, n_samples);
  for (Index j = 0; j < n_samples; ++j) {
    for (Index i = 0; i < n_features; ++i) b(i, j) = rng.normal();
  }
  const std::size_t support =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.1 * n_features)));
  const auto idx = rng.sample_without_replacement(static_cast<std::size_t>(n_features), support);
  Vector truth = Vector::Zero(n_features);
  for (std::size_t i : idx) truth[static_cast<Index>(i)] = rng.normal();

  Dataset ds;
  ds.num_samples = n_samples;
  ds.num_features = n_features;
  ds.labels = Vector(n_samples);
  for (Index j = 0; j < n_samples; ++j) {
    const double p = sigmoid(b.col(j).dot(truth));
    ds.labels[j] = rng.uniform() < p ? 1.0 : -1.0;
  }
  ds.features = b.sparseView();
  return ds;
}

}  // namespace

Dataset synth_logistic(Index n_samples, Index n_features, std::uint64_t seed) {
  Rng rng(seed);
  return synth_core(n_samples, n_features, rng);
}

SynthConstrained synth_constrained(Index n_samples, Index n_features, Index n_constraints,
                                   std::uint64_t seed) {
  if (n_constraints <= 0) throw InputError("synth_constrained: m must be positive");
  Rng rng(seed);
  SynthConstrained out;
  // features first, then D row-major, then d, then truth and labels
  Matrix b(n_features, n_samples);
  for (Index j = 0; j < n_samples; ++j) {
    for (Index i = 0; i < n_features; ++i) b(i, j) = rng.normal();
  }
  out.D.resize(n_constraints, n_features);
  for (Index i = 0; i < n_constraints; ++i) {
    for (Index j = 0; j < n_features; ++j) out.D(i, j) = rng.normal();
  }
  out.d.resize(n_constraints);
  for (Index i = 0; i < n_constraints; ++i) out.d[i] = rng.normal();

  const std::size_t support =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.1 * n_features)));
  const auto idx = rng.sample_without_replacement(static_cast<std::size_t>(n_features), support);
  Vector truth = Vector::Zero(n_features);
  for (std::size_t i : idx) truth[static_cast<Index>(i)] = rng.normal();

  out.data.num_samples = n_samples;
  out.data.num_features = n_features;
  out.data.labels = Vector(n_samples);
  for (Index j = 0; j < n_samples; ++j) {
    const double p = sigmoid(b.col(j).dot(truth));
    out.data.labels[j] = rng.uniform() < p ? 1.0 : -1.0;
  }
  out.data.features = b.sparseView();
  return out;
}

// ---------------------------------------------------------------------------
// trace

void write_trace(const std::vector<TraceRow>& rows, std::ostream& out) {
  if (rows.empty()) throw InputError("write_trace: no rows");
  out << "iter,eta,eta_P,eta_D,eta_C,objective,lyapunov,seconds\n";
  for (const auto& r : rows) {
    out << r.iter << ',' << format_general(r.eta) << ',' << format_general(r.eta_P) << ','
        << format_general(r.eta_D) << ',' << format_general(r.eta_C) << ','
        << format_general(r.objective) << ',';
    if (r.has_lyapunov) out << format_general(r.lyapunov);
    out << ',' << format_fixed(r.seconds) << '\n';
  }
}

void write_trace_file(const std::vector<TraceRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // LF endings everywhere
  if (!out) throw InputError("cannot open trace file for writing: " + path);
  write_trace(rows, out);
}

// ---------------------------------------------------------------------------
// bench

std::vector<BenchScenario> parse_scenarios(std::istream& in) {
  std::vector<BenchScenario> out;
  std::string line;
  Index lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string token;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    BenchScenario sc;
    if (!(ls >> sc.n_samples)) continue;  // blank line
    if (!(ls >> sc.n_features >> sc.n_constraints >> sc.gamma)) {
      throw InputError("scenario file line " + std::to_string(lineno) +
                       ": expected N,n,m,gamma");
    }
    out.push_back(sc);
  }
  if (out.empty()) throw InputError("scenario file: no scenarios");
  return out;
}

BenchTable bench(const std::vector<BenchScenario>& scenarios, const BenchOptions& options) {
  if (scenarios.empty()) throw InputError("bench: no scenarios");
  if (options.repeats <= 0) throw InputError("bench: repeats must be positive");
  BenchTable table;
  table.scenarios = scenarios;
  table.variants = options.variants;
  if (table.variants.empty()) {
    table.variants = {VariantKind::IPADMM, VariantKind::SPADMM, VariantKind::LIPADMM,
                      VariantKind::LSPADMM};
  }
  std::uint64_t instance_counter = 0;
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    const BenchScenario& sc = scenarios[si];
    std::vector<BenchCell> row(table.variants.size());
    for (int rep = 0; rep < options.repeats; ++rep) {
      const std::uint64_t seed = Rng::derive(options.seed, instance_counter++);
      const SynthConstrained inst =
          synth_constrained(sc.n_samples, sc.n_features, sc.n_constraints, seed);
      const LogisticData data = inst.data.to_logistic();
      const double lambda = lambda_from_gamma(data, sc.gamma);
      for (std::size_t vi = 0; vi < table.variants.size(); ++vi) {
        ConstrainedModel model =
            build_constrained_logistic(data, inst.D, inst.d, lambda, options.sigma, options.r,
                                       table.variants[vi], options.tol, options.max_iter);
        model.config.tau = options.tau;
        SolveOptions sopt;
        sopt.residual = model.residual;
        sopt.record_trace = false;
        const auto t0 = std::chrono::steady_clock::now();
        const SolveResult res =
            solve(model.problem, model.config, IterateState::zeros(model.problem), sopt);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row[vi].mean_iters += static_cast<double>(res.state.iter);
        row[vi].mean_seconds += options.include_timing ? secs : 0.0;
        if (res.status != SolveStatus::Converged) row[vi].failures += 1;
      }
    }
    for (auto& cell : row) {
      cell.mean_iters /= options.repeats;
      cell.mean_seconds /= options.repeats;
    }
    table.cells.push_back(std::move(row));
  }
  return table;
}

std::string bench_csv(const BenchTable& table) {
  std::ostringstream out;
  out << "scenario,variant,gamma,mean_iters,mean_seconds,failures\n";
  for (std::size_t si = 0; si < table.scenarios.size(); ++si) {
    const auto& sc = table.scenarios[si];
    for (std::size_t vi = 0; vi < table.variants.size(); ++vi) {
      const auto& c = table.cells[si][vi];
      out << sc.n_samples << 'x' << sc.n_features << 'x' << sc.n_constraints << ','
          << variant_name(table.variants[vi]) << ',' << format_general(sc.gamma) << ','
          << format_fixed(c.mean_iters, 1) << ',' << format_fixed(c.mean_seconds, 3) << ','
          << c.failures << '\n';
    }
  }
  return out.str();
}

std::string bench_text(const BenchTable& table) {
  std::ostringstream out;
  out << "scenario          gamma     ";
  for (auto v : table.variants) {
    std::string name = variant_name(v);
    name.resize(18, ' ');
    out << name;
  }
  out << '\n';
  for (std::size_t si = 0; si < table.scenarios.size(); ++si) {
    const auto& sc = table.scenarios[si];
    std::string scen = std::to_string(sc.n_samples) + "x" + std::to_string(sc.n_features) + "x" +
                       std::to_string(sc.n_constraints);
    scen.resize(18, ' ');
    std::string g = format_general(sc.gamma, 4);
    g.resize(10, ' ');
    out << scen << g;
    for (std::size_t vi = 0; vi < table.variants.size(); ++vi) {
      const auto& c = table.cells[si][vi];
      std::string cell = format_fixed(c.mean_iters, 1) + "/" + format_fixed(c.mean_seconds, 2) +
                         "s";
      if (c.failures > 0) cell += "(" + std::to_string(c.failures) + "F)";
      cell.resize(18, ' ');
      out << cell;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace madmm
