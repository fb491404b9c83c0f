#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "bimh/bimh.hpp"

namespace bimh::cli {

struct Options {
  std::string model = "toy";
  std::vector<std::size_t> p;
  std::size_t r = 0;
  std::vector<std::size_t> blocks;
  std::size_t replications = 1000;
  std::vector<std::string> schemes;
  std::vector<double> scale_c;
  std::uint64_t seed = 1;
  std::size_t burn_in_blocks = 0;
  std::string output;
  std::string data;
  std::vector<std::string> covariates{"glu", "bp", "ped"};
  std::size_t workers = 1;
  bool normalized_densities = false;
  bool dump_config = false;
};

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void add_common_flags(CLI::App& cmd, Options& o) {
  cmd.add_option("--model", o.model, "toy or probit")->check(CLI::IsMember({"toy", "probit"}));
  cmd.add_option("--p", o.p, "block size(s), comma separated")->delimiter(',');
  cmd.add_option("--r", o.r, "chains per block (0 = p)");
  cmd.add_option("--blocks", o.blocks, "number(s) of blocks, comma separated")->delimiter(',');
  cmd.add_option("--replications", o.replications, "independent replications");
  cmd.add_option("--perm-scheme", o.schemes,
                 "same|circular|random|half-reversed|stratified (comma separated)")
      ->delimiter(',')
      ->check(CLI::IsMember({"same", "circular", "random", "half-reversed", "stratified"}));
  cmd.add_option("--scale-c", o.scale_c, "probit proposal scale(s)")->delimiter(',');
  cmd.add_option("--seed", o.seed, "root seed");
  cmd.add_option("--burn-in-blocks", o.burn_in_blocks, "blocks discarded before estimation");
  cmd.add_option("--output", o.output, "output CSV path (default stdout)");
  cmd.add_option("--data", o.data, "probit CSV file");
  cmd.add_option("--covariates", o.covariates, "probit covariate columns")->delimiter(',');
  cmd.add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd.add_flag("--normalized-densities", o.normalized_densities,
               "densities carry their constants: use the unnormalized IS form");
  cmd.add_flag("--dump-config", o.dump_config, "echo the resolved configuration atop the CSV");
}

template <typename T>
std::vector<T> or_default(const std::vector<T>& v, std::vector<T> fallback) {
  return v.empty() ? fallback : v;
}

inline harness::ExperimentConfig to_config(const Options& o) {
  harness::ExperimentConfig cfg;
  cfg.model = harness::parse_model(o.model);
  cfg.data_path = o.data;
  cfg.covariates = o.covariates;
  cfg.p = o.p.empty() ? 16 : o.p.front();
  cfg.r = o.r;
  cfg.blocks = o.blocks.empty() ? 1 : o.blocks.front();
  cfg.replications = o.replications;
  cfg.seed = o.seed;
  cfg.schemes.clear();
  for (const auto& s : or_default(o.schemes, {"random"})) cfg.schemes.push_back(parse_scheme(s));
  cfg.scale_c = o.scale_c.empty() ? 3.0 : o.scale_c.front();
  cfg.burn_in_blocks = o.burn_in_blocks;
  cfg.workers = o.workers;
  cfg.normalized_densities = o.normalized_densities;
  return cfg;
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

inline void validate(const Options& o, bool bench) {
  if (o.model == "probit") require(!o.data.empty(), "--model probit requires --data");
  for (auto p : o.p) require(p >= 1, "--p must be >= 1");
  for (auto b : o.blocks) require(b >= 1, "--blocks must be >= 1");
  for (auto c : o.scale_c) require(c > 0, "--scale-c must be positive");
  if (bench) require(o.replications >= 2, "--replications must be >= 2");
  for (auto b : or_default(o.blocks, {1}))
    require(o.burn_in_blocks < b, "--burn-in-blocks must be smaller than --blocks");
  require(!o.covariates.empty(), "--covariates must not be empty");
}

class OutputSink {
 public:
  OutputSink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot open output file " + path);
      out_ = file_.get();
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
};

inline void write_values(std::ostream& os, const std::string& kind, std::size_t index,
                         const std::vector<double>& v) {
  for (std::size_t j = 0; j < v.size(); ++j)
    os << kind << ',' << index << ',' << j + 1 << ',' << harness::format_number(v[j]) << '\n';
}

inline int run_sample(const Options& o, std::ostream& out) {
  auto cfg = to_config(o);
  const auto model = harness::build_model(cfg);
  BlockImhConfig bc;
  bc.p = cfg.p;
  bc.r = cfg.r;
  bc.blocks = o.blocks.empty() ? 100 : o.blocks.front();
  bc.scheme = cfg.schemes.front();
  bc.seed = cfg.seed;
  bc.workers = cfg.workers;
  cfg.blocks = bc.blocks;

  const auto run = run_block_imh(model, model.initial_point, bc);
  const auto rep = estimate_all(run, identity_coordinates(), bc, cfg.normalized_densities,
                                cfg.burn_in_blocks);

  OutputSink sink(o.output, out);
  auto& os = sink.stream();
  if (o.dump_config) os << "# config: " << cfg.describe() << '\n';
  os << "kind,index,coord,value\n";
  for (std::size_t t = 0; t < run.selected_chain.size(); ++t) {
    const auto c = run.selected_chain[t].coords();
    write_values(os, "chain", t + 1, std::vector<double>(c.begin(), c.end()));
  }
  write_values(os, "tau1", 0, rep.tau1);
  write_values(os, "tau2", 0, rep.tau2);
  write_values(os, "tau3", 0, rep.tau3);
  write_values(os, "tau4", 0, rep.tau4);
  write_values(os, "tau_is", 0, rep.tau_is);
  write_values(os, "acceptance_rate", 0, {run.acceptance_rate()});
  write_values(os, "target_evaluations", 0,
               {static_cast<double>(model.target_evaluations())});
  return 0;
}

inline int run_probit_mle(const Options& o, std::ostream& out) {
  const auto data = probit::load_probit_csv(o.data, o.covariates, "type");
  const auto fit = probit::fit_mle(data);
  OutputSink sink(o.output, out);
  auto& os = sink.stream();
  os << "quantity,row,col,value\n";
  const auto& names = data.covariate_names;
  for (Eigen::Index i = 0; i < fit.theta_hat.size(); ++i)
    os << "theta_hat," << names[i] << ",," << harness::format_number(fit.theta_hat[i]) << '\n';
  for (Eigen::Index i = 0; i < fit.sigma_hat.rows(); ++i)
    for (Eigen::Index j = 0; j < fit.sigma_hat.cols(); ++j)
      os << "sigma_hat," << names[i] << ',' << names[j] << ','
         << harness::format_number(fit.sigma_hat(i, j)) << '\n';
  return 0;
}

inline int emit_table(const Options& o, const harness::ExperimentConfig& cfg,
                      const harness::VarianceTable& table, std::ostream& out) {
  OutputSink sink(o.output, out);
  harness::write_csv(table, sink.stream(), o.dump_config ? cfg.describe() : std::string());
  return 0;
}

}  // namespace detail

// Parses argv (argv[0] is the program name), runs the subcommand and writes
// its CSV. Exit codes: 0 success, 1 runtime failure, 2 usage error.
inline int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out,
                              std::ostream& err) {
  CLI::App app{"Block independent Metropolis-Hastings sampler and benchmarks", "bimh"};
  app.require_subcommand(1);

  Options o;
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const char* name : {"sample", "bench-perms", "bench-estimators", "bench-is",
                           "bench-probit", "probit-mle"}) {
    auto* cmd = app.add_subcommand(name);
    detail::add_common_flags(*cmd, o);
    subs.emplace_back(name, cmd);
  }
  subs[0].second->description("run block IMH and print the selected chain and all estimators");
  subs[1].second->description("variance reduction of tau2 per permutation scheme");
  subs[2].second->description("variance reduction of tau2, tau3, tau4");
  subs[3].second->description("block estimators versus importance sampling over --blocks");
  subs[4].second->description("probit posterior experiment over --scale-c");
  subs[5].second->description("fit the probit MLE and print theta_hat and Sigma_hat");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  std::string which;
  for (const auto& [name, cmd] : subs)
    if (cmd->parsed()) which = name;

  try {
    const bool bench = which.rfind("bench", 0) == 0;
    if (which == "bench-probit" || which == "probit-mle") o.model = "probit";
    detail::validate(o, bench);
    auto cfg = detail::to_config(o);
    if (bench || which == "sample") {
      auto check = cfg;
      if (which == "sample") check.replications = 2;
      if (which == "bench-perms" && o.schemes.empty())
        check.schemes.assign(kAllSchemes.begin(), kAllSchemes.end());
      check.validate();
    }

    if (which == "sample") return detail::run_sample(o, out);
    if (which == "probit-mle") return detail::run_probit_mle(o, out);

    if (which == "bench-perms") {
      std::vector<PermutationScheme> schemes(kAllSchemes.begin(), kAllSchemes.end());
      if (!o.schemes.empty()) schemes = cfg.schemes;
      return detail::emit_table(
          o, cfg, harness::permutation_sweep(cfg, schemes, detail::or_default(o.p, {16})), out);
    }
    if (which == "bench-estimators")
      return detail::emit_table(o, cfg,
                                harness::estimator_sweep(cfg, detail::or_default(o.p, {16})), out);
    if (which == "bench-is")
      return detail::emit_table(
          o, cfg, harness::is_comparison(cfg, detail::or_default(o.blocks, {1, 10, 100})), out);
    if (which == "bench-probit")
      return detail::emit_table(
          o, cfg, harness::probit_experiment(cfg, detail::or_default(o.scale_c, {1.0, 3.0, 10.0})),
          out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "error: no subcommand\n";
  return 2;
}

}  // namespace bimh::cli
