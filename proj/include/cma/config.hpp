#pragma once

// Experiment configuration: a sectioned key = value text format.
//
//   # comment
//   [torus]
//   n = 1
//   N = 64
//
// Lists are comma separated.  Unknown sections and keys are rejected with
// the offending line number.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cma {

struct ExperimentConfig {
  struct {
    int n = 1;
    int N = 64;
  } torus;
  struct {
    std::string kind = "flat";  // flat | conformal
    double amplitude = 0.0;
  } metric;
  struct {
    std::string name = "manufactured";  // identity | manufactured | random | lp | hoelder
    double amplitude = 0.05;
    double p = 2.0;
    double s = 0.5;
    std::uint64_t seed = 1;
  } fixture;
  struct {
    double tol = 1e-11;
    int max_iter = 50;
    /// Continuation radii; empty runs a single solve.
    std::vector<double> continuation;
  } solver;
  struct {
    double tau = 1.0;
    std::vector<double> deltas = {0.125, 0.0625, 0.03125};
  } certificate;
  struct {
    double tau = 1.0;
    std::vector<double> amplitudes = {1e-2, 1e-3};
    std::vector<double> eps = {0.1, 0.2, 0.3};
    int points = 5;
    int capacity_budget = 10;
    bool ledger = true;
    /// Multiplies the measure by this factor to violate the precondition.
    double corrupt = 1.0;
  } stability;
  struct {
    int sets = 8;
    int budget = 40;
    double tau = 1.0;
  } capacity;
  struct {
    double amplitude = 0.03;
    double c1 = 1.0;
    double c2 = 2.0;
    double tol = 1e-10;
  } mixture;
  struct {
    std::string command = "certificate";
    std::vector<int> N;
    std::vector<double> tau;
  } sweep;
  struct {
    std::string dir = "out";
    bool dump_stages = false;
  } output;
};

/// Parses and validates; throws InvalidInput with "line L: ..." messages.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Range checks shared by the parser and programmatic callers.
void validate(const ExperimentConfig& config);

}  // namespace cma
