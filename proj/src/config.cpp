#include "cma/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "cma/error.hpp"

namespace cma {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw InvalidInput(fmt::format("config line {}: {}", line, what));
}

double to_double(const std::string& v, int line) {
  double x = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
    fail(line, fmt::format("'{}' is not a number", v));
  return x;
}

long long to_int(const std::string& v, int line) {
  long long x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) fail(line, fmt::format("'{}' is not an integer", v));
  return x;
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(line, fmt::format("'{}' is not a boolean", v));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_doubles(const std::string& v, int line) {
  std::vector<double> out;
  for (auto& s : split_list(v)) out.push_back(to_double(s, line));
  return out;
}

using Setter = std::function<void(const std::string&, int)>;

std::map<std::string, std::map<std::string, Setter>> setters(ExperimentConfig& c) {
  auto num = [](double& x) { return Setter([&x](const std::string& v, int l) { x = to_double(v, l); }); };
  auto integer = [](int& x) { return Setter([&x](const std::string& v, int l) { x = static_cast<int>(to_int(v, l)); }); };
  auto text = [](std::string& x) { return Setter([&x](const std::string& v, int) { x = v; }); };
  auto flag = [](bool& x) { return Setter([&x](const std::string& v, int l) { x = to_bool(v, l); }); };
  auto list = [](std::vector<double>& x) { return Setter([&x](const std::string& v, int l) { x = to_doubles(v, l); }); };
  return {
      {"torus", {{"n", integer(c.torus.n)}, {"N", integer(c.torus.N)}}},
      {"metric", {{"kind", text(c.metric.kind)}, {"amplitude", num(c.metric.amplitude)}}},
      {"fixture",
       {{"name", text(c.fixture.name)},
        {"amplitude", num(c.fixture.amplitude)},
        {"p", num(c.fixture.p)},
        {"s", num(c.fixture.s)},
        {"seed", Setter([&c](const std::string& v, int l) {
           long long x = to_int(v, l);
           if (x < 0) fail(l, "seed must be nonnegative");
           c.fixture.seed = static_cast<std::uint64_t>(x);
         })}}},
      {"solver",
       {{"tol", num(c.solver.tol)}, {"max_iter", integer(c.solver.max_iter)}, {"continuation", list(c.solver.continuation)}}},
      {"certificate", {{"tau", num(c.certificate.tau)}, {"deltas", list(c.certificate.deltas)}}},
      {"stability",
       {{"tau", num(c.stability.tau)},
        {"amplitudes", list(c.stability.amplitudes)},
        {"eps", list(c.stability.eps)},
        {"points", integer(c.stability.points)},
        {"capacity_budget", integer(c.stability.capacity_budget)},
        {"ledger", flag(c.stability.ledger)},
        {"corrupt", num(c.stability.corrupt)}}},
      {"capacity", {{"sets", integer(c.capacity.sets)}, {"budget", integer(c.capacity.budget)}, {"tau", num(c.capacity.tau)}}},
      {"mixture",
       {{"amplitude", num(c.mixture.amplitude)}, {"c1", num(c.mixture.c1)}, {"c2", num(c.mixture.c2)}, {"tol", num(c.mixture.tol)}}},
      {"sweep",
       {{"command", text(c.sweep.command)},
        {"N", Setter([&c](const std::string& v, int l) {
           c.sweep.N.clear();
           for (auto& s : split_list(v)) c.sweep.N.push_back(static_cast<int>(to_int(s, l)));
         })},
        {"tau", list(c.sweep.tau)}}},
      {"output", {{"dir", text(c.output.dir)}, {"dump_stages", flag(c.output.dump_stages)}}},
  };
}

bool power_of_two(int N) { return N > 0 && (N & (N - 1)) == 0; }

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput("config: " + what);
}

bool decreasing_positive(const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) return false;
    if (i > 0 && !(v[i] < v[i - 1])) return false;
  }
  return true;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  require(c.torus.n == 1 || c.torus.n == 2, "torus.n must be 1 or 2");
  require(c.torus.N >= 8 && power_of_two(c.torus.N), "torus.N must be a power of two >= 8");
  require(c.metric.kind == "flat" || c.metric.kind == "conformal", "metric.kind must be flat or conformal");
  require(std::abs(c.metric.amplitude) < 0.5, "metric.amplitude must satisfy |a| < 0.5");
  const std::vector<std::string> fixtures = {"identity", "manufactured", "random", "lp", "hoelder"};
  require(std::find(fixtures.begin(), fixtures.end(), c.fixture.name) != fixtures.end(),
          "fixture.name must be one of identity, manufactured, random, lp, hoelder");
  require(c.fixture.p > 1.0, "fixture.p must exceed 1");
  require(c.fixture.s >= 0.0, "fixture.s must be nonnegative");
  require(c.solver.tol > 0.0, "solver.tol must be positive");
  require(c.solver.max_iter >= 1, "solver.max_iter must be at least 1");
  require(decreasing_positive(c.solver.continuation), "solver.continuation must be positive and decreasing");
  require(c.certificate.tau > 0.0, "certificate.tau must be positive");
  require(!c.certificate.deltas.empty() && decreasing_positive(c.certificate.deltas),
          "certificate.deltas must be a nonempty decreasing list of positive radii");
  require(c.stability.tau > 0.0, "stability.tau must be positive");
  require(!c.stability.amplitudes.empty(), "stability.amplitudes must not be empty");
  for (double a : c.stability.amplitudes) require(a > 0.0, "stability.amplitudes must be positive");
  for (double e : c.stability.eps) require(e > 0.0 && e < 1.0, "stability.eps must lie in (0, 1)");
  require(c.stability.points >= 1, "stability.points must be at least 1");
  require(c.stability.capacity_budget >= 1, "stability.capacity_budget must be at least 1");
  require(c.stability.corrupt > 0.0, "stability.corrupt must be positive");
  require(c.capacity.sets >= 5, "capacity.sets must be at least 5");
  require(c.capacity.budget >= 1, "capacity.budget must be at least 1");
  require(c.capacity.tau > 0.0, "capacity.tau must be positive");
  require(c.mixture.c1 > 0.0 && c.mixture.c2 > 0.0, "mixture.c1 and mixture.c2 must be positive");
  require(c.mixture.tol >= 0.0, "mixture.tol must be nonnegative");
  for (int N : c.sweep.N) require(N >= 8 && power_of_two(N), "sweep.N entries must be powers of two >= 8");
  for (double t : c.sweep.tau) require(t > 0.0, "sweep.tau entries must be positive");
  require(!c.output.dir.empty(), "output.dir must not be empty");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  auto table = setters(c);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find_first_of("#;");
    std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!table.count(section)) fail(line, fmt::format("unknown section [{}]", section));
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (section.empty()) fail(line, fmt::format("key '{}' outside of any section", key));
    auto& keys = table.at(section);
    auto it = keys.find(key);
    if (it == keys.end()) fail(line, fmt::format("unknown key '{}' in [{}]", key, section));
    if (value.empty()) fail(line, fmt::format("empty value for '{}'", key));
    it->second(value, line);
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(fmt::format("cannot open config file {}", path.string()));
  return parse_config(in);
}

}  // namespace cma
