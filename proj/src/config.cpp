#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "flowdesign/csv.hpp"
#include "flowdesign/errors.hpp"
#include "flowdesign/harness.hpp"

namespace flowdesign {

namespace {

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw FormatError(key, fmt::format("'{}' is not a nonnegative integer", v));
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_u64(key, v)); }

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw FormatError(key, fmt::format("'{}' is not a number", v));
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw FormatError(key, fmt::format("'{}' is not a boolean", v));
}

template <class F>
auto wrap(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(key, e.what());
  }
}

std::string resolve(const std::filesystem::path& base, const std::string& v) {
  if (v == "synth" || base.empty()) return v;
  const std::filesystem::path p(v);
  return p.is_absolute() ? v : (base / p).string();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (horizon < 1) throw FormatError("horizon", "must be >= 1");
  if (block_size < 1) throw FormatError("block_size", "must be >= 1");
  if (replications < 1) throw FormatError("replications", "must be >= 1");
  if (schemes.empty()) throw FormatError("schemes", "at least one scheme is required");
  if (!(median_from_fraction >= 0.0 && median_from_fraction < 1.0))
    throw FormatError("median_from_fraction", "must lie in [0, 1)");
  if (!(mu_floor > 0.0)) throw FormatError("mu_floor", "must be positive");
  if (!(tol_theta > 0.0)) throw FormatError("tol_theta", "must be positive");
}

ExperimentConfig parse_config(std::istream& is, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"topology", [&](auto&, auto& v) { cfg.topology = resolve(base_dir, v); }},
      {"synth_kind", [&](auto& k, auto& v) { cfg.synth.kind = wrap(k, [&] { return parse_topology_kind(v); }); }},
      {"synth_nodes", [&](auto& k, auto& v) { cfg.synth.nodes = to_size(k, v); }},
      {"synth_links", [&](auto& k, auto& v) { cfg.synth.links = to_size(k, v); }},
      {"synth_rows", [&](auto& k, auto& v) { cfg.synth.rows = to_size(k, v); }},
      {"synth_cols", [&](auto& k, auto& v) { cfg.synth.cols = to_size(k, v); }},
      {"synth_seed", [&](auto& k, auto& v) { cfg.synth_seed = to_u64(k, v); }},
      {"synth_top_fraction", [&](auto& k, auto& v) { cfg.synth.top_fraction = to_double(k, v); }},
      {"synth_budget", [&](auto& k, auto& v) { cfg.synth.budget = to_double(k, v); }},
      {"synth_mu_log_mean", [&](auto& k, auto& v) { cfg.synth.mu_log_mean = to_double(k, v); }},
      {"synth_mu_log_sd", [&](auto& k, auto& v) { cfg.synth.mu_log_sd = to_double(k, v); }},
      {"synth_innovation_cv", [&](auto& k, auto& v) { cfg.synth.innovation_cv = to_double(k, v); }},
      {"trace", [&](auto&, auto& v) { cfg.trace = resolve(base_dir, v); }},
      {"trace_seed", [&](auto& k, auto& v) { cfg.trace_seed = to_u64(k, v); }},
      {"trace_floor", [&](auto& k, auto& v) { cfg.trace_floor = to_double(k, v); }},
      {"schemes",
       [&](auto& k, auto& v) {
         cfg.schemes.clear();
         for (const auto& s : csv::split(v))
           if (!s.empty()) cfg.schemes.push_back(wrap(k, [&] { return parse_scheme(s); }));
       }},
      {"horizon", [&](auto& k, auto& v) { cfg.horizon = to_size(k, v); }},
      {"block_size", [&](auto& k, auto& v) { cfg.block_size = to_size(k, v); }},
      {"warmup_scheme",
       [&](auto& k, auto& v) {
         if (v == "none")
           cfg.warmup_scheme.reset();
         else
           cfg.warmup_scheme = wrap(k, [&] { return parse_scheme(v); });
       }},
      {"replications", [&](auto& k, auto& v) { cfg.replications = to_size(k, v); }},
      {"seed", [&](auto& k, auto& v) { cfg.seed = to_u64(k, v); }},
      {"mu_mode",
       [&](auto& k, auto& v) {
         if (v == "true_mu")
           cfg.mu_mode = MuMode::true_mu;
         else if (v == "plugin")
           cfg.mu_mode = MuMode::plugin;
         else
           throw FormatError(k, fmt::format("'{}' is not one of true_mu, plugin", v));
       }},
      {"constraint_mode",
       [&](auto& k, auto& v) { cfg.constraint_mode = wrap(k, [&] { return parse_constraint_mode(v); }); }},
      {"mu_floor", [&](auto& k, auto& v) { cfg.mu_floor = to_double(k, v); }},
      {"median_from_fraction", [&](auto& k, auto& v) { cfg.median_from_fraction = to_double(k, v); }},
      {"use_prediction", [&](auto& k, auto& v) { cfg.use_prediction = to_bool(k, v); }},
      {"tol_theta", [&](auto& k, auto& v) { cfg.tol_theta = to_double(k, v); }},
      {"threads", [&](auto& k, auto& v) { cfg.threads = static_cast<unsigned>(to_u64(k, v)); }},
  };

  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string s = csv::trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw FormatError(fmt::format("line {}", lineno), fmt::format("expected key = value, got '{}'", s));
    const std::string key = csv::trim(s.substr(0, eq));
    const std::string value = csv::trim(s.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw FormatError(key, "unknown config key");
    if (value.empty()) throw FormatError(key, "missing value");
    it->second(key, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("config", fmt::format("cannot open {}", path.string()));
  return parse_config(in, path.parent_path());
}

std::string to_text(const ExperimentConfig& cfg) {
  std::ostringstream os;
  auto kind = [](TopologyKind k) {
    switch (k) {
      case TopologyKind::line: return "line";
      case TopologyKind::star: return "star";
      case TopologyKind::grid: return "grid";
      case TopologyKind::random: return "random";
    }
    return "random";
  };
  os << "topology = " << cfg.topology << '\n';
  os << "synth_kind = " << kind(cfg.synth.kind) << '\n';
  os << "synth_nodes = " << cfg.synth.nodes << '\n';
  os << "synth_links = " << cfg.synth.links << '\n';
  os << "synth_rows = " << cfg.synth.rows << '\n';
  os << "synth_cols = " << cfg.synth.cols << '\n';
  os << "synth_seed = " << cfg.synth_seed << '\n';
  os << fmt::format("synth_top_fraction = {:.17g}\n", cfg.synth.top_fraction);
  os << fmt::format("synth_budget = {:.17g}\n", cfg.synth.budget);
  os << fmt::format("synth_mu_log_mean = {:.17g}\n", cfg.synth.mu_log_mean);
  os << fmt::format("synth_mu_log_sd = {:.17g}\n", cfg.synth.mu_log_sd);
  os << fmt::format("synth_innovation_cv = {:.17g}\n", cfg.synth.innovation_cv);
  os << "trace = " << cfg.trace << '\n';
  os << "trace_seed = " << cfg.trace_seed << '\n';
  os << fmt::format("trace_floor = {:.17g}\n", cfg.trace_floor);
  os << "schemes = ";
  for (std::size_t i = 0; i < cfg.schemes.size(); ++i) os << (i ? "," : "") << to_string(cfg.schemes[i]);
  os << '\n';
  os << "horizon = " << cfg.horizon << '\n';
  os << "block_size = " << cfg.block_size << '\n';
  os << "warmup_scheme = " << (cfg.warmup_scheme ? to_string(*cfg.warmup_scheme) : "none") << '\n';
  os << "replications = " << cfg.replications << '\n';
  os << "seed = " << cfg.seed << '\n';
  os << "mu_mode = " << (cfg.mu_mode == MuMode::true_mu ? "true_mu" : "plugin") << '\n';
  os << "constraint_mode = " << to_string(cfg.constraint_mode) << '\n';
  os << fmt::format("mu_floor = {:.17g}\n", cfg.mu_floor);
  os << fmt::format("median_from_fraction = {:.17g}\n", cfg.median_from_fraction);
  os << "use_prediction = " << (cfg.use_prediction ? "true" : "false") << '\n';
  os << fmt::format("tol_theta = {:.17g}\n", cfg.tol_theta);
  os << "threads = " << cfg.threads << '\n';
  return os.str();
}

}  // namespace flowdesign
