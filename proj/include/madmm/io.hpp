#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "madmm/ipadmm.hpp"
#include "madmm/losses.hpp"
#include "madmm/rng.hpp"

namespace madmm {

struct Dataset {
  Index num_samples = 0;
  Index num_features = 0;
  Vector labels;           // -1 / +1
  SparseMatrix features;   // num_features x num_samples, column per sample

  LogisticData to_logistic() const { return LogisticData(features, labels); }
};

// LIBSVM text format: "<label> <index>:<value> ...", indices 1-based and
// strictly increasing per line. Labels are normalized to -1/+1 (with two raw
// classes the smaller one maps to -1). Malformed tokens report line/column.
Dataset parse_libsvm(std::istream& in, Index n_override = 0);
Dataset parse_libsvm_file(const std::string& path, Index n_override = 0);
std::string serialize_libsvm(const Dataset& ds);

// Synthetic logistic data: standard normal features, labels drawn from a
// sparse ground-truth coefficient vector (10% support) through the logistic
// link. Deterministic in the seed.
Dataset synth_logistic(Index n_samples, Index n_features, std::uint64_t seed);

struct SynthConstrained {
  Dataset data;
  Matrix D;
  Vector d;
};

SynthConstrained synth_constrained(Index n_samples, Index n_features, Index n_constraints,
                                   std::uint64_t seed);

// trace CSV, header "iter,eta,eta_P,eta_D,eta_C,objective,lyapunov,seconds"
void write_trace(const std::vector<TraceRow>& rows, std::ostream& out);
void write_trace_file(const std::vector<TraceRow>& rows, const std::string& path);

struct BenchScenario {
  Index n_samples = 0;
  Index n_features = 0;
  Index n_constraints = 0;
  double gamma = 1e-2;
};

// scenario file: one "N,n,m,gamma" per line, '#' comments
std::vector<BenchScenario> parse_scenarios(std::istream& in);

struct BenchOptions {
  int repeats = 10;
  std::uint64_t seed = 0;
  bool include_timing = true;  // false pins the seconds column to zero
  std::vector<VariantKind> variants;  // empty -> all four
  double sigma = 1.0;
  double tau = 1.618;
  double r = 1e-6;
  double tol = 1e-5;
  int max_iter = 50000;
};

struct BenchCell {
  double mean_iters = 0.0;
  double mean_seconds = 0.0;
  int failures = 0;
};

struct BenchTable {
  std::vector<BenchScenario> scenarios;
  std::vector<VariantKind> variants;
  std::vector<std::vector<BenchCell>> cells;  // [scenario][variant]
};

// constrained-model benchmark; per-instance seeds derive from the master
// seed, and every variant sees identical instances
BenchTable bench(const std::vector<BenchScenario>& scenarios, const BenchOptions& options);

std::string bench_csv(const BenchTable& table);
std::string bench_text(const BenchTable& table);

// locale-independent float formatting used by every emitter
std::string format_general(double v, int precision = 12);
std::string format_fixed(double v, int precision = 6);

}  // namespace madmm
