#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bimh/block_engine.hpp"
#include "bimh/estimators.hpp"
#include "bimh/imh.hpp"
#include "bimh/models.hpp"
#include "bimh/parallel.hpp"
#include "bimh/permutations.hpp"
#include "bimh/probit.hpp"
#include "bimh/rao_blackwell.hpp"
#include "bimh/rng.hpp"

namespace bimh::harness {

enum class ModelKind { Toy, Probit };
enum class Estimator { Tau1, Tau2, Tau3, Tau4, TauIS };

inline constexpr std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::Tau1: return "tau1";
    case Estimator::Tau2: return "tau2";
    case Estimator::Tau3: return "tau3";
    case Estimator::Tau4: return "tau4";
    case Estimator::TauIS: return "tau_is";
  }
  return "unknown";
}

inline constexpr std::string_view to_string(ModelKind m) {
  return m == ModelKind::Toy ? "toy" : "probit";
}

inline ModelKind parse_model(std::string_view name) {
  if (name == "toy") return ModelKind::Toy;
  if (name == "probit") return ModelKind::Probit;
  throw std::invalid_argument("unknown model: " + std::string(name));
}

struct ExperimentConfig {
  ModelKind model = ModelKind::Toy;
  // probit only
  std::string data_path;
  std::vector<std::string> covariates{"glu", "bp", "ped"};
  std::string response = "type";
  double scale_c = 3.0;
  bool intercept = false;
  bool standardize = false;

  std::size_t p = 16;
  std::size_t r = 0;  // 0 = square blocks
  std::size_t blocks = 1;
  std::size_t replications = 1000;
  std::uint64_t seed = 1;
  std::vector<PermutationScheme> schemes{PermutationScheme::Random};
  std::vector<Estimator> estimators{Estimator::Tau1, Estimator::Tau2, Estimator::Tau3,
                                    Estimator::Tau4, Estimator::TauIS};
  std::string h = "identity";
  std::size_t burn_in_blocks = 0;
  // Models without an exact target sampler start every replication from their
  // initial point (the MLE for probit), optionally after this many IMH steps.
  std::size_t warmup_steps = 0;
  std::size_t workers = 1;
  bool normalized_densities = false;

  std::size_t rows() const noexcept { return r == 0 ? p : r; }

  void validate() const {
    if (p < 1) throw std::invalid_argument("p must be >= 1");
    if (blocks < 1) throw std::invalid_argument("blocks must be >= 1");
    if (replications < 2) throw std::invalid_argument("replications must be >= 2");
    if (burn_in_blocks >= blocks)
      throw std::invalid_argument("burn-in must leave at least one block");
    if (schemes.empty()) throw std::invalid_argument("at least one permutation scheme needed");
    if (estimators.empty()) throw std::invalid_argument("at least one estimator needed");
    if (model == ModelKind::Probit) {
      if (data_path.empty()) throw std::invalid_argument("probit model needs a data file");
      if (covariates.empty()) throw std::invalid_argument("probit model needs covariates");
      if (!(scale_c > 0)) throw std::invalid_argument("scale c must be positive");
    }
    for (auto s : schemes)
      if (s == PermutationScheme::HalfRandomHalfReversed && rows() % 2 != 0)
        throw std::invalid_argument("half-reversed scheme needs an even number of chains");
  }

  std::string describe() const {
    std::ostringstream os;
    os << "model=" << to_string(model) << " p=" << p << " r=" << rows() << " blocks=" << blocks
       << " replications=" << replications << " seed=" << seed << " schemes=";
    for (std::size_t i = 0; i < schemes.size(); ++i)
      os << (i ? "," : "") << bimh::to_string(schemes[i]);
    os << " h=" << h << " burn_in_blocks=" << burn_in_blocks << " workers=" << workers
       << " normalized_densities=" << (normalized_densities ? 1 : 0);
    if (model == ModelKind::Probit) {
      os << " data=" << data_path << " covariates=";
      for (std::size_t i = 0; i < covariates.size(); ++i) os << (i ? "," : "") << covariates[i];
      os << " scale_c=" << scale_c << " warmup_steps=" << warmup_steps;
    }
    return os.str();
  }
};

struct VarianceRow {
  std::string scheme;  // "none" for tau1 and tau_is
  Estimator estimator = Estimator::Tau1;
  std::size_t p = 0, r = 0, b = 0;
  std::size_t coord = 1;  // 1-based output coordinate of h
  double mean = 0.0;
  double variance = 0.0;
  double reduction_pct = 0.0;
  double se_variance = 0.0;
  double acceptance_rate = 0.0;
};

struct VarianceTable {
  std::vector<VarianceRow> rows;
  std::size_t replications = 0;
  bool low_precision = false;

  void append(const VarianceTable& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
    replications = std::max(replications, other.replications);
    low_precision = low_precision || other.low_precision;
  }

  const VarianceRow* find(std::string_view scheme, Estimator e, std::size_t coord = 1,
                          std::optional<std::size_t> p = std::nullopt,
                          std::optional<std::size_t> b = std::nullopt) const {
    for (const auto& row : rows)
      if (row.scheme == scheme && row.estimator == e && row.coord == coord &&
          (!p || row.p == *p) && (!b || row.b == *b))
        return &row;
    return nullptr;
  }

  const VarianceRow& at(std::string_view scheme, Estimator e, std::size_t coord = 1,
                        std::optional<std::size_t> p = std::nullopt,
                        std::optional<std::size_t> b = std::nullopt) const {
    const auto* row = find(scheme, e, coord, p, b);
    if (!row) throw std::out_of_range("no such row: " + std::string(scheme) + "/" +
                                      std::string(to_string(e)));
    return *row;
  }
};

inline constexpr std::size_t kLowPrecisionReplications = 30;

struct SampleStats {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double se_variance = 0.0;
};

// Sample variance with its standard error from the fourth central moment:
//   se^2 = (m4 - s^4 (R - 3) / (R - 1)) / R.
inline SampleStats sample_stats(const std::vector<double>& v) {
  SampleStats s;
  const auto n = static_cast<double>(v.size());
  if (v.size() < 2) throw std::invalid_argument("need at least two replications");
  s.mean = pairwise_sum<double>(0, v.size(), [&](std::size_t i) { return v[i]; }) / n;
  const double ss = pairwise_sum<double>(0, v.size(), [&](std::size_t i) {
    const double d = v[i] - s.mean;
    return d * d;
  });
  const double m4 = pairwise_sum<double>(0, v.size(), [&](std::size_t i) {
                      const double d = v[i] - s.mean;
                      return d * d * d * d;
                    }) /
                    n;
  s.variance = ss / (n - 1.0);
  const double var_of_var = (m4 - s.variance * s.variance * (n - 3.0) / (n - 1.0)) / n;
  s.se_variance = std::sqrt(std::max(0.0, var_of_var));
  return s;
}

// Estimates produced by one replication.
struct SchemeEstimates {
  std::vector<double> tau2, tau3, tau4;
  double acceptance_rate = 0.0;
};

struct ReplicationResult {
  std::vector<double> tau1, tau_is;
  double acceptance_rate = 0.0;  // standard chain
  std::vector<SchemeEstimates> schemes;
};

inline bool wants(const ExperimentConfig& cfg, Estimator e) {
  return std::find(cfg.estimators.begin(), cfg.estimators.end(), e) != cfg.estimators.end();
}

// Start state for a replication: an exact target draw when available, else
// the model's initial point, advanced by warmup_steps IMH steps if any.
inline ChainState replication_start(const ModelPair& model, const ExperimentConfig& cfg,
                                    std::uint64_t rep_seed) {
  Point x0;
  if (model.sample_target) {
    auto rng = substream(rep_seed, StreamTag::Start);
    x0 = model.sample_target(rng);
  } else if (cfg.warmup_steps > 0) {
    auto rng = substream(rep_seed, StreamTag::Warmup);
    x0 = run_chain(model, model.initial_point, cfg.warmup_steps, rng).states.back();
  } else {
    x0 = model.initial_point;
  }
  return initial_state(model, x0);
}

// One replication: a single set of proposals and uniform substreams is shared
// by tau1, tau_is and every scheme's block estimators.
inline ReplicationResult run_one_replication(const ModelPair& model, const ExperimentConfig& cfg,
                                             const TestFunction& h, std::size_t rep) {
  const std::uint64_t rep_seed = derive_seed(cfg.seed, StreamTag::Replication, rep);
  const ChainState start = replication_start(model, cfg, rep_seed);

  std::vector<ProposalBatch> batches;
  batches.reserve(cfg.blocks);
  for (std::size_t i = 0; i < cfg.blocks; ++i)
    batches.push_back(generate_batch(model, rep_seed, i, cfg.p));

  const std::size_t first = cfg.burn_in_blocks;
  const std::size_t kept_blocks = cfg.blocks - first;
  ReplicationResult out;

  const auto standard = replay_standard_imh(start, batches, rep_seed);
  out.tau1 = tau1(std::span<const Point>(standard.states.data() + first * cfg.p,
                                         kept_blocks * cfg.p),
                  h);
  out.acceptance_rate = standard.trace.acceptance_rate();

  if (wants(cfg, Estimator::TauIS)) {
    std::vector<Point> pts;
    std::vector<double> lws;
    for (std::size_t i = first; i < cfg.blocks; ++i) {
      pts.insert(pts.end(), batches[i].points.begin(), batches[i].points.end());
      lws.insert(lws.end(), batches[i].log_ws.begin(), batches[i].log_ws.end());
    }
    out.tau_is = tau_is(pts, lws, h, cfg.normalized_densities);
  }

  const bool need_block =
      wants(cfg, Estimator::Tau2) || wants(cfg, Estimator::Tau3) || wants(cfg, Estimator::Tau4);
  if (!need_block) return out;

  for (auto scheme : cfg.schemes) {
    BlockImhConfig bc;
    bc.p = cfg.p;
    bc.r = cfg.r;
    bc.blocks = cfg.blocks;
    bc.scheme = scheme;
    bc.seed = rep_seed;
    const auto run = run_block_imh(start, batches, bc);

    std::span<const BlockResult> blocks(run.blocks.data() + first, kept_blocks);
    std::vector<CandidateValues> cands;
    cands.reserve(kept_blocks);
    for (std::size_t i = first; i < cfg.blocks; ++i)
      cands.push_back(evaluate_candidates(h, run.blocks[i], run.batches[i]));

    SchemeEstimates est;
    est.acceptance_rate = run.block_acceptance_rate();
    if (wants(cfg, Estimator::Tau2)) est.tau2 = tau2(blocks, cands);
    if (wants(cfg, Estimator::Tau3)) est.tau3 = tau3(blocks, cands);
    if (wants(cfg, Estimator::Tau4)) {
      std::vector<RbOccupancy> rb;
      rb.reserve(kept_blocks);
      for (std::size_t i = first; i < cfg.blocks; ++i)
        rb.push_back(block_occupancy(run.blocks[i], run.batches[i], run.permutations[i]));
      est.tau4 = tau4(blocks, rb, cands);
    }
    out.schemes.push_back(std::move(est));
  }
  return out;
}

namespace detail {

template <typename Get>
std::vector<double> column(const std::vector<ReplicationResult>& reps, std::size_t coord,
                           Get&& get) {
  std::vector<double> v;
  v.reserve(reps.size());
  for (const auto& rep : reps) v.push_back(get(rep)[coord]);
  return v;
}

inline double mean_of(const std::vector<ReplicationResult>& reps, auto&& get) {
  return pairwise_sum<double>(0, reps.size(), [&](std::size_t i) { return get(reps[i]); }) /
         static_cast<double>(reps.size());
}

}  // namespace detail

// R independent replications; variances are taken across replications per
// output coordinate and compared with tau1.
inline VarianceTable run_replications(const ModelPair& model, const ExperimentConfig& cfg) {
  cfg.validate();
  const TestFunction h = test_function_by_name(cfg.h);

  std::vector<ReplicationResult> reps(cfg.replications);
  parallel_for(cfg.replications, cfg.workers,
               [&](std::size_t i) { reps[i] = run_one_replication(model, cfg, h, i); });

  VarianceTable table;
  table.replications = cfg.replications;
  table.low_precision = cfg.replications < kLowPrecisionReplications;
  const std::size_t m = reps.front().tau1.size();
  const double acc1 = detail::mean_of(reps, [](const auto& r) { return r.acceptance_rate; });

  for (std::size_t j = 0; j < m; ++j) {
    const auto base = sample_stats(detail::column(reps, j, [](const auto& r) { return r.tau1; }));
    auto make_row = [&](std::string scheme, Estimator e, const SampleStats& st, double acc) {
      VarianceRow row;
      row.scheme = std::move(scheme);
      row.estimator = e;
      row.p = cfg.p;
      row.r = cfg.rows();
      row.b = cfg.blocks;
      row.coord = j + 1;
      row.mean = st.mean;
      row.variance = st.variance;
      row.se_variance = st.se_variance;
      row.reduction_pct =
          e == Estimator::Tau1 ? 0.0 : 100.0 * (1.0 - st.variance / base.variance);
      row.acceptance_rate = acc;
      table.rows.push_back(std::move(row));
    };

    if (wants(cfg, Estimator::Tau1)) make_row("none", Estimator::Tau1, base, acc1);
    if (wants(cfg, Estimator::TauIS))
      make_row("none", Estimator::TauIS,
               sample_stats(detail::column(reps, j, [](const auto& r) { return r.tau_is; })),
               acc1);
    if (reps.front().schemes.empty()) continue;

    for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
      const std::string name(bimh::to_string(cfg.schemes[s]));
      const double acc =
          detail::mean_of(reps, [s](const auto& r) { return r.schemes[s].acceptance_rate; });
      if (wants(cfg, Estimator::Tau2))
        make_row(name, Estimator::Tau2,
                 sample_stats(detail::column(reps, j,
                                             [s](const auto& r) { return r.schemes[s].tau2; })),
                 acc);
      if (wants(cfg, Estimator::Tau3))
        make_row(name, Estimator::Tau3,
                 sample_stats(detail::column(reps, j,
                                             [s](const auto& r) { return r.schemes[s].tau3; })),
                 acc);
      if (wants(cfg, Estimator::Tau4))
        make_row(name, Estimator::Tau4,
                 sample_stats(detail::column(reps, j,
                                             [s](const auto& r) { return r.schemes[s].tau4; })),
                 acc);
    }
  }
  return table;
}

inline ModelPair build_model(const ExperimentConfig& cfg) {
  if (cfg.model == ModelKind::Toy) return toy_model();
  const auto data = probit::load_probit_csv(cfg.data_path, cfg.covariates, cfg.response,
                                            {cfg.intercept, cfg.standardize});
  return probit::probit_model(data, cfg.scale_c);
}

inline VarianceTable run_replications(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_replications(build_model(cfg), cfg);
}

// tau2 for every scheme at every p.
inline VarianceTable permutation_sweep(ExperimentConfig cfg,
                                       const std::vector<PermutationScheme>& schemes,
                                       const std::vector<std::size_t>& p_values) {
  cfg.schemes = schemes;
  cfg.estimators = {Estimator::Tau1, Estimator::Tau2};
  const ModelPair model = (cfg.validate(), build_model(cfg));
  VarianceTable out;
  for (auto p : p_values) {
    cfg.p = p;
    out.append(run_replications(model, cfg));
  }
  return out;
}

// tau2, tau3, tau4 against tau1 at every p.
inline VarianceTable estimator_sweep(ExperimentConfig cfg, const std::vector<std::size_t>& p_values) {
  cfg.estimators = {Estimator::Tau1, Estimator::Tau2, Estimator::Tau3, Estimator::Tau4};
  const ModelPair model = (cfg.validate(), build_model(cfg));
  VarianceTable out;
  for (auto p : p_values) {
    cfg.p = p;
    out.append(run_replications(model, cfg));
  }
  return out;
}

// Block estimators and importance sampling for several numbers of blocks.
inline VarianceTable is_comparison(ExperimentConfig cfg, const std::vector<std::size_t>& b_values) {
  cfg.estimators = {Estimator::Tau1, Estimator::Tau2, Estimator::Tau3, Estimator::Tau4,
                    Estimator::TauIS};
  const ModelPair model = (cfg.validate(), build_model(cfg));
  VarianceTable out;
  for (auto b : b_values) {
    cfg.blocks = b;
    out.append(run_replications(model, cfg));
  }
  return out;
}

// Probit posterior means for several proposal scales. The data are loaded and
// the MLE fitted once; rows are labelled "<scheme>/c=<c>".
inline VarianceTable probit_experiment(ExperimentConfig cfg, const std::vector<double>& c_values) {
  cfg.model = ModelKind::Probit;
  cfg.estimators = {Estimator::Tau1, Estimator::Tau2, Estimator::Tau3, Estimator::Tau4};
  cfg.validate();
  const auto data = probit::load_probit_csv(cfg.data_path, cfg.covariates, cfg.response,
                                            {cfg.intercept, cfg.standardize});
  const auto fit = probit::fit_mle(data);
  VarianceTable out;
  for (double c : c_values) {
    cfg.scale_c = c;
    auto t = run_replications(probit::probit_model(data, fit, c), cfg);
    char label[32];
    std::snprintf(label, sizeof label, "/c=%g", c);
    for (auto& row : t.rows) row.scheme += label;
    out.append(t);
  }
  return out;
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline constexpr std::string_view kCsvHeader =
    "scheme,estimator,p,r,b,coord,variance,reduction_pct,se_variance,acceptance_rate";

inline void write_csv(const VarianceTable& table, std::ostream& os,
                      const std::string& config_comment = {}) {
  if (!config_comment.empty()) os << "# config: " << config_comment << '\n';
  if (table.low_precision)
    os << "# low-precision: variances from " << table.replications << " replications\n";
  os << kCsvHeader << '\n';
  for (const auto& r : table.rows)
    os << r.scheme << ',' << to_string(r.estimator) << ',' << r.p << ',' << r.r << ',' << r.b
       << ',' << r.coord << ',' << format_number(r.variance) << ','
       << format_number(r.reduction_pct) << ',' << format_number(r.se_variance) << ','
       << format_number(r.acceptance_rate) << '\n';
}

}  // namespace bimh::harness
