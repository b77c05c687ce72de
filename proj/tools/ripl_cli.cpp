// ripl: command-line runner for matrix generation, restricted isometry
// checks, nets and reconstruction sweeps.
//
// Every command takes its parameters from an optional JSON file (--config)
// and from flags; flags win. Data goes to files, a short summary to stdout,
// diagnostics to stderr.

#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ripl/ensembles.hpp"
#include "ripl/errors.hpp"
#include "ripl/geometry.hpp"
#include "ripl/io.hpp"
#include "ripl/nets.hpp"
#include "ripl/parallel.hpp"
#include "ripl/recon.hpp"
#include "ripl/spectral.hpp"

using nlohmann::json;
using namespace ripl;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kBudget = 3, kVerifyFailed = 4 };

constexpr int kFormatVersion = 1;

// Flag text to JSON: numbers, booleans and arrays parse as JSON; a bare
// comma list becomes an array; anything else stays a string.
json parse_flag_value(const std::string& text) {
  std::string t = text;
  if (t.find(',') != std::string::npos && t.front() != '[') t = "[" + t + "]";
  json j = json::parse(t, nullptr, false);
  if (j.is_discarded()) return text;
  return j;
}

json load_json_file(const std::string& path) {
  const std::string text = io::read_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw IoError("cannot parse JSON in " + path);
  return j;
}

class Command {
 public:
  Command(CLI::App& app, const std::string& name, const std::string& description)
      : sub_(app.add_subcommand(name, description)) {
    sub_->add_option("--config", config_path_, "JSON file with parameters (flags override it)");
  }

  CLI::App* app() const { return sub_; }

  // A flag stored at JSON pointer `pointer` of the config.
  void flag(const std::string& name, const std::string& pointer, const std::string& help) {
    auto entry = std::make_unique<Entry>();
    entry->pointer = pointer;
    entry->option = sub_->add_option(name, entry->value, help);
    entries_.push_back(std::move(entry));
  }

  json config() const {
    json j = config_path_.empty() ? json::object() : load_json_file(config_path_);
    if (!j.is_object()) throw IoError("config file must hold a JSON object");
    for (const auto& e : entries_)
      if (e->option->count() > 0) j[json::json_pointer(e->pointer)] = parse_flag_value(e->value);
    return j;
  }

 private:
  struct Entry {
    std::string pointer;
    std::string value;
    CLI::Option* option = nullptr;
  };
  CLI::App* sub_;
  std::string config_path_;
  std::vector<std::unique_ptr<Entry>> entries_;
};

template <class T>
T get_or(const json& j, const std::string& pointer, const T& fallback) {
  const json::json_pointer p(pointer);
  return j.contains(p) ? j.at(p).get<T>() : fallback;
}

std::string require_string(const json& j, const std::string& pointer, const std::string& what) {
  const json::json_pointer p(pointer);
  require(j.contains(p), "missing " + what);
  return j.at(p).get<std::string>();
}

std::pair<std::uint64_t, std::uint64_t> seed_range(const json& j) {
  require(j.contains("seeds"), "missing seeds [lo, hi)");
  const json& s = j.at("seeds");
  require(s.is_array() && s.size() == 2, "seeds must be [lo, hi)");
  const auto lo = s[0].get<std::uint64_t>(), hi = s[1].get<std::uint64_t>();
  require(hi > lo, "empty seed range");
  return {lo, hi};
}

// Ensemble from an object with kind, n, k, seed and an optional law.
EnsembleSpec ensemble_from(const json& e) {
  require(e.is_object(), "ensemble must be an object");
  json full = e;
  if (!full.contains("seed")) full["seed"] = 0;
  EnsembleSpec spec = full.get<EnsembleSpec>();
  spec.validate();
  return spec;
}

std::vector<std::size_t> size_list(const json& j, const std::string& key) {
  require(j.contains(key), "missing " + key);
  const json& v = j.at(key);
  std::vector<std::size_t> out = v.is_array() ? v.get<std::vector<std::size_t>>()
                                              : std::vector<std::size_t>{v.get<std::size_t>()};
  require(!out.empty(), key + " must not be empty");
  return out;
}

std::vector<double> real_list(const json& j, const std::string& key) {
  require(j.contains(key), "missing " + key);
  const json& v = j.at(key);
  std::vector<double> out =
      v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
  require(!out.empty(), key + " must not be empty");
  return out;
}

// ---------------------------------------------------------------- gen

int run_gen(const json& j) {
  EnsembleSpec spec = ensemble_from(j);
  const std::string output = require_string(j, "/output", "output path");
  const std::string format = get_or<std::string>(j, "/format", "binary");
  const std::string normalization = get_or<std::string>(j, "/normalization", "raw");
  require(format == "binary" || format == "csv", "format must be binary or csv");
  require(normalization == "raw" || normalization == "row-normalized",
          "normalization must be raw or row-normalized");
  MeasurementMatrix m = generate(spec);
  if (normalization == "row-normalized") m = row_normalize(m);
  io::write_file_atomic(output, format == "csv" ? io::matrix_to_csv(m) : io::matrix_to_binary(m));
  std::cout << "wrote " << spec.k << " x " << spec.n << " " << to_string(spec.kind) << " matrix to "
            << output << "\n";
  return kOk;
}

// ---------------------------------------------------------------- rip

int run_rip(const json& j) {
  const std::string output = require_string(j, "/output", "output path");
  const MeasurementMatrix m = j.contains("matrix")
                                  ? io::read_matrix(j.at("matrix").get<std::string>())
                                  : generate(ensemble_from(j.value("ensemble", json::object())));
  const std::vector<std::size_t> sparsities = size_list(j, "sparsity");
  const std::string method = get_or<std::string>(j, "/method", "exact");
  require(method == "exact" || method == "monte-carlo", "method must be exact or monte-carlo");
  const std::string sampling = get_or<std::string>(j, "/sampling", "uniform");
  require(sampling == "uniform" || sampling == "stratified", "sampling must be uniform or stratified");
  RipExactOptions exact;
  exact.budget = get_or<double>(j, "/budget", exact.budget);
  const std::size_t trials = get_or<std::size_t>(j, "/trials", 2000);
  const std::uint64_t seed = get_or<std::uint64_t>(j, "/mc_seed", 0);

  std::string csv = "m,theta,theta_lower,theta_upper,method\n";
  for (std::size_t s : sparsities) {
    const RipReport r = method == "exact"
                            ? rip_exact(m, s, exact)
                            : rip_monte_carlo(m, s, trials, seed,
                                              sampling == "uniform" ? SupportSampling::uniform
                                                                    : SupportSampling::stratified);
    csv += std::to_string(r.m) + "," + io::format_double(r.theta) + "," +
           io::format_double(r.theta_lower) + "," + io::format_double(r.theta_upper) + "," +
           to_string(r.method) + "\n";
    std::cout << "m=" << r.m << " theta=" << io::format_double(r.theta) << "\n";
  }
  io::write_file_atomic(output, csv);
  return kOk;
}

// ---------------------------------------------------------------- uup

int run_uup(const json& j) {
  const std::string output = require_string(j, "/output", "output path");
  const EnsembleSpec base = ensemble_from(j.value("ensemble", json::object()));
  const auto [lo, hi] = seed_range(j);
  const double theta = get_or<double>(j, "/theta", 0.5);
  require(theta > 0.0 && theta < 1.0, "theta must lie in (0, 1)");
  const double lambda =
      j.contains("lambda") ? j.at("lambda").get<double>() : uup_lambda(base.n, base.k, theta);
  UupOptions options;
  const std::string route = get_or<std::string>(j, "/route", "auto");
  require(route == "auto" || route == "exact" || route == "monte-carlo",
          "route must be auto, exact or monte-carlo");
  options.route = route == "auto" ? UupRoute::automatic
                                  : (route == "exact" ? UupRoute::exact : UupRoute::monte_carlo);
  options.budget = get_or<double>(j, "/budget", options.budget);
  options.trials = get_or<std::size_t>(j, "/trials", options.trials);

  const std::size_t count = hi - lo;
  std::vector<UupResult> results(count);
  parallel_for(count, [&](std::size_t i) {
    EnsembleSpec spec = base;
    spec.seed = lo + i;
    UupOptions o = options;
    o.seed = lo + i;
    results[i] = check_uup(generate(spec), theta, lambda, o);
  });

  std::string csv = "seed,holds,sparsity,theta,degenerate,lower_bound_only\n";
  std::size_t passed = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const UupResult& r = results[i];
    passed += r.holds ? 1 : 0;
    csv += std::to_string(lo + i) + "," + (r.holds ? "true" : "false") + "," +
           std::to_string(r.sparsity) + "," + io::format_double(r.report.theta) + "," +
           (r.degenerate ? "true" : "false") + "," + (r.lower_bound_only ? "true" : "false") + "\n";
  }
  io::write_file_atomic(output, csv);
  std::cout << "lambda=" << io::format_double(lambda) << " pass fraction " << passed << "/" << count
            << "\n";
  return kOk;
}

// ---------------------------------------------------------------- recon

int run_recon(const json& j) {
  const std::string output = require_string(j, "/output", "output path");
  json c = j;
  require(c.contains("ensemble") && c["ensemble"].is_object(), "missing ensemble");
  if (!c["ensemble"].contains("seed")) c["ensemble"]["seed"] = 0;
  const std::vector<std::size_t> ks = size_list(c, "k_list");
  c["k_list"] = ks;
  if (!c["ensemble"].contains("k")) c["ensemble"]["k"] = ks.front();
  require(c.contains("ball") && c["ball"].is_object(), "missing ball");
  if (!c["ball"].contains("dim")) c["ball"]["dim"] = c["ensemble"].at("n");
  seed_range(c);
  ReconSweepConfig config = c.get<ReconSweepConfig>();
  for (std::size_t k : ks) {
    EnsembleSpec probe = config.ensemble;
    probe.k = k;
    probe.validate();
  }
  const std::vector<ReconRow> rows = recon_sweep(config);
  io::write_file_atomic(output, recon_rows_to_csv(rows));
  std::cout << rows.size() << " rows written to " << output << "\n";
  if (config.k_list.size() >= 2) {
    try {
      const SlopeFit fit = error_exponent_fit(rows);
      std::cout << "log-error vs log-k slope " << io::format_double(fit.slope) << "\n";
    } catch (const InvalidArgument&) {
      std::cout << "log-error vs log-k slope undefined (zero median error)\n";
    }
  }
  return kOk;
}

// ---------------------------------------------------------------- nets

int run_nets_build(const json& j) {
  const std::string output = require_string(j, "/output", "output path");
  const std::vector<std::size_t> dims = size_list(j, "dim");
  const std::vector<double> epsilons = real_list(j, "epsilon");
  const std::string ambient = get_or<std::string>(j, "/ambient", "ball");
  require(ambient == "ball" || ambient == "sphere", "ambient must be ball or sphere");
  const std::uint64_t seed = get_or<std::uint64_t>(j, "/seed", 0);
  const std::optional<std::size_t> sparse_m =
      j.contains("sparse_m") ? std::optional(j.at("sparse_m").get<std::size_t>()) : std::nullopt;
  NetOptions options;
  options.cover_probes = get_or<std::size_t>(j, "/cover_probes", options.cover_probes);
  const double budget = get_or<double>(j, "/budget", 2e6);

  struct Job {
    std::size_t dim;
    double epsilon;
  };
  std::vector<Job> jobs;
  for (std::size_t d : dims)
    for (double e : epsilons) jobs.push_back({d, e});
  std::vector<Net> nets(jobs.size());
  std::vector<double> bounds(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const Job& job = jobs[i];
    const std::uint64_t s = derive_seed(seed, {i});
    if (sparse_m) {
      nets[i] = sparse_set_net(job.dim, *sparse_m, job.epsilon,
                               ambient == "ball" ? SparseTarget::ball : SparseTarget::sphere, s,
                               options, budget);
      bounds[i] = sparse_net_bound(job.dim, *sparse_m, job.epsilon);
    } else {
      nets[i] = greedy_separated_net(job.dim, job.epsilon,
                                     ambient == "ball" ? NetAmbient::ball : NetAmbient::sphere, s,
                                     options);
      bounds[i] = separated_net_bound(job.dim, job.epsilon);
    }
  });

  json doc{{"format_version", kFormatVersion}, {"nets", json::array()}};
  std::string table = "dim,epsilon,size,bound\n";
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    doc["nets"].push_back(nets[i]);
    table += std::to_string(jobs[i].dim) + "," + io::format_double(jobs[i].epsilon) + "," +
             std::to_string(nets[i].points.size()) + "," + io::format_double(bounds[i]) + "\n";
  }
  const std::string table_path = get_or<std::string>(j, "/table", "");
  io::write_file_atomic(output, doc.dump(1) + "\n");
  if (!table_path.empty()) io::write_file_atomic(table_path, table);
  std::cout << table;
  return kOk;
}

int run_nets_verify(const json& j) {
  const std::string input = require_string(j, "/input", "input path");
  const std::size_t probes = get_or<std::size_t>(j, "/probes", 10000);
  const std::uint64_t seed = get_or<std::uint64_t>(j, "/seed", 0);
  const json doc = load_json_file(input);
  std::vector<Net> nets;
  try {
    if (doc.at("format_version").get<int>() != kFormatVersion)
      throw IoError("unsupported net file version in " + input);
    for (const json& n : doc.at("nets")) nets.push_back(n.get<Net>());
  } catch (const json::exception& e) {
    throw IoError("malformed net file " + input + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw IoError("malformed net file " + input + ": " + e.what());
  }
  // Exact claims (membership, separation when claimed) decide the exit code;
  // the probe-based cover check only does so with strict_cover.
  const bool strict_cover = get_or<bool>(j, "/strict_cover", false);
  bool all = true;
  for (std::size_t i = 0; i < nets.size(); ++i) {
    const Net& net = nets[i];
    bool inside = true;
    for (std::size_t p = 0; p < net.points.size(); ++p) inside = inside && member(net.points[p], net.ambient);
    const bool separated = min_pairwise_distance(net.points) > net.epsilon;
    const CoverCheck cover = cover_check(net, probes, derive_seed(seed, {i}));
    all = all && inside && (separated || !net.certified_separated) && (cover.pass || !strict_cover);
    std::cout << "net " << i << ": " << net.points.size() << " points, inside "
              << (inside ? "yes" : "no") << ", separated " << (separated ? "yes" : "no")
              << (net.certified_separated ? " (claimed)" : " (not claimed)") << ", cover "
              << (cover.pass ? "yes" : "no") << " (max probe distance "
              << io::format_double(cover.max_observed_distance) << ")\n";
  }
  return all ? kOk : kVerifyFailed;
}

int run_nets(const json& j) {
  const std::string mode = get_or<std::string>(j, "/mode", "build");
  require(mode == "build" || mode == "verify", "mode must be build or verify");
  return mode == "build" ? run_nets_build(j) : run_nets_verify(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ripl: random measurement matrices, restricted isometry and reconstruction"};
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = 1;
  app.add_option("--threads", threads, "worker threads (results do not depend on it)")
      ->check(CLI::Range(1u, 1024u));

  Command gen(app, "gen", "write a measurement matrix file");
  gen.flag("--kind", "/kind", "gaussian, bernoulli, uniform-sphere-row, custom-bounded-symmetric");
  gen.flag("--n", "/n", "columns");
  gen.flag("--k", "/k", "rows");
  gen.flag("--seed", "/seed", "seed");
  gen.flag("--normalization", "/normalization", "raw or row-normalized");
  gen.flag("--format", "/format", "binary or csv");
  gen.flag("--output", "/output", "output file");

  Command rip(app, "rip", "restricted isometry constants over a sparsity grid (CSV)");
  rip.flag("--matrix", "/matrix", "matrix file; otherwise one is generated");
  rip.flag("--kind", "/ensemble/kind", "ensemble kind");
  rip.flag("--n", "/ensemble/n", "columns");
  rip.flag("--k", "/ensemble/k", "rows");
  rip.flag("--seed", "/ensemble/seed", "matrix seed");
  rip.flag("--sparsity", "/sparsity", "sparsity list, e.g. 1,2,3");
  rip.flag("--method", "/method", "exact or monte-carlo");
  rip.flag("--trials", "/trials", "monte carlo trials");
  rip.flag("--mc-seed", "/mc_seed", "monte carlo seed");
  rip.flag("--sampling", "/sampling", "uniform or stratified");
  rip.flag("--budget", "/budget", "maximal supports for exact enumeration");
  rip.flag("--output", "/output", "output CSV");

  Command uup(app, "uup", "uniform uncertainty check over a seed range (CSV)");
  uup.flag("--kind", "/ensemble/kind", "ensemble kind");
  uup.flag("--n", "/ensemble/n", "columns");
  uup.flag("--k", "/ensemble/k", "rows");
  uup.flag("--theta", "/theta", "isometry constant target");
  uup.flag("--lambda", "/lambda", "oversampling factor (default from the fitted formula)");
  uup.flag("--seeds", "/seeds", "seed range lo,hi (hi exclusive)");
  uup.flag("--route", "/route", "auto, exact or monte-carlo");
  uup.flag("--trials", "/trials", "monte carlo trials");
  uup.flag("--budget", "/budget", "maximal supports for exact enumeration");
  uup.flag("--output", "/output", "output CSV");

  Command recon(app, "recon", "l1 reconstruction sweep (CSV)");
  recon.flag("--kind", "/ensemble/kind", "ensemble kind");
  recon.flag("--n", "/ensemble/n", "columns");
  recon.flag("--ensemble-seed", "/ensemble/seed", "extra seed mixed into every matrix");
  recon.flag("--ball", "/ball/family", "l1 or weak-lp");
  recon.flag("--p", "/ball/p", "weak-lp exponent");
  recon.flag("--radius", "/ball/radius", "ball radius");
  recon.flag("--t0-model", "/t0_model", "sparse, weak-lp-extremal, random-ball or zero");
  recon.flag("--sparsity", "/sparsity", "support size of sparse signals");
  recon.flag("--solver", "/solver", "exact or iterative");
  recon.flag("--certify", "/certify", "true to certify the kernel radius per instance");
  recon.flag("--theta", "/theta", "certificate theta");
  recon.flag("--seeds", "/seeds", "seed range lo,hi (hi exclusive)");
  recon.flag("--k-list", "/k_list", "measurement counts, e.g. 32,64,128");
  recon.flag("--output", "/output", "output CSV");

  Command nets(app, "nets", "build or verify separated nets (JSON plus size table)");
  nets.flag("--mode", "/mode", "build or verify");
  nets.flag("--dim", "/dim", "dimension list");
  nets.flag("--epsilon", "/epsilon", "epsilon list");
  nets.flag("--ambient", "/ambient", "ball or sphere");
  nets.flag("--sparse-m", "/sparse_m", "build sparse nets with this support size");
  nets.flag("--seed", "/seed", "seed");
  nets.flag("--cover-probes", "/cover_probes", "saturation probe batch size (0 skips)");
  nets.flag("--budget", "/budget", "point budget for sparse nets");
  nets.flag("--output", "/output", "output JSON");
  nets.flag("--table", "/table", "output CSV with dim,epsilon,size,bound");
  nets.flag("--input", "/input", "net JSON to verify");
  nets.flag("--probes", "/probes", "cover probes for verification");
  nets.flag("--strict-cover", "/strict_cover", "true to fail verification on an uncovered probe");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  set_max_threads(threads);

  try {
    if (gen.app()->parsed()) return run_gen(gen.config());
    if (rip.app()->parsed()) return run_rip(rip.config());
    if (uup.app()->parsed()) return run_uup(uup.config());
    if (recon.app()->parsed()) return run_recon(recon.config());
    if (nets.app()->parsed()) return run_nets(nets.config());
  } catch (const BudgetExceeded& e) {
    std::cerr << "ripl: budget exceeded: " << e.what() << "\n";
    return kBudget;
  } catch (const IoError& e) {
    std::cerr << "ripl: io error: " << e.what() << "\n";
    return kIo;
  } catch (const InvalidArgument& e) {
    std::cerr << "ripl: invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const json::exception& e) {
    std::cerr << "ripl: invalid configuration: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "ripl: error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
