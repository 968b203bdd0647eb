#include "mixmodal/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixmodal/data_io.hpp"
#include "mixmodal/datasets.hpp"
#include "mixmodal/errors.hpp"
#include "mixmodal/gibbs.hpp"
#include "mixmodal/model_select.hpp"
#include "mixmodal/report.hpp"

namespace mixmodal {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr std::size_t kMaxComponents = 10;

struct RunOptions {
  std::string data;
  std::string builtin;
  std::optional<std::string> family;
  bool shared_precision = false;
  std::optional<std::string> poisson_prior;
  std::optional<std::size_t> k;
  std::optional<std::size_t> k_min;
  std::optional<std::size_t> k_max;
  double alpha = 2.0;
  SamplerConfig sampler;
  std::string init = "quantile";
  std::string label_prior = "exchangeable";
  std::string summaries = "gibbs";
  std::string out = ".";
  bool densities = false;
  double coverage_threshold = kDefaultCoverageThreshold;
  PriorSpec priors = PriorSpec::defaults(1);
};

struct SimulateOptions {
  std::string family = "gaussian";
  std::vector<double> means;
  std::vector<double> precisions;
  std::vector<std::size_t> sizes;
  std::uint64_t seed = 1;
  std::string out = "simulated.csv";
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  auto* data = cmd->add_option("--data", o.data, "CSV file with a single column \"y\"");
  auto* builtin = cmd->add_option("--builtin", o.builtin, "packaged dataset: galaxies | earthquakes");
  data->excludes(builtin);
  cmd->add_option("--family", o.family, "gaussian | poisson (default: the dataset's usual family, else gaussian)")
      ->check(CLI::IsMember({"gaussian", "poisson"}));
  cmd->add_flag("--shared-precision", o.shared_precision, "one precision shared by all Gaussian components");
  cmd->add_option("--poisson-prior", o.poisson_prior, "gamma | lognormal")
      ->check(CLI::IsMember({"gamma", "lognormal"}));
  cmd->add_option("--alpha", o.alpha, "symmetric Dirichlet concentration (> 1)")->capture_default_str();
  cmd->add_option("--burn-in", o.sampler.burn_in, "sweeps discarded before retention")->capture_default_str();
  cmd->add_option("--iters", o.sampler.iterations, "sweeps after burn-in")->capture_default_str();
  cmd->add_option("--thin", o.sampler.thin, "retain every thin-th sweep")->capture_default_str();
  cmd->add_option("--seed", o.sampler.seed, "random seed")->capture_default_str();
  cmd->add_option("--init", o.init, "quantile | random")->check(CLI::IsMember({"quantile", "random"}));
  cmd->add_option("--label-prior", o.label_prior,
                  "exchangeable | ordered (unnormalized ordering constraint: evidences shift by -log K!)")
      ->check(CLI::IsMember({"exchangeable", "ordered"}))
      ->capture_default_str();
  cmd->add_option("--summaries", o.summaries,
                  "allocation posterior weighting parameter summaries: gibbs | renormalized | switch")
      ->check(CLI::IsMember({"gibbs", "renormalized", "switch"}))
      ->capture_default_str();
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_flag("--densities", o.densities, "also write marginal density CSVs");
  cmd->add_option("--coverage-threshold", o.coverage_threshold, "TV above which the diagnostic is flagged")
      ->capture_default_str();
  cmd->add_option("--mean-prior-mean", o.priors.gaussian_mean.mean, "Gaussian component mean prior: mean");
  cmd->add_option("--mean-prior-precision", o.priors.gaussian_mean.precision,
                  "Gaussian component mean prior: precision");
  cmd->add_option("--precision-shape", o.priors.gaussian_precision.shape, "Gaussian precision prior: shape");
  cmd->add_option("--precision-rate", o.priors.gaussian_precision.rate, "Gaussian precision prior: rate");
  cmd->add_option("--gamma-shape", o.priors.poisson_gamma.shape, "Poisson rate Gamma prior: shape");
  cmd->add_option("--gamma-rate", o.priors.poisson_gamma.rate, "Poisson rate Gamma prior: rate");
  cmd->add_option("--log-rate-mean", o.priors.poisson_log_mean.mean, "Poisson log-rate normal prior: mean");
  cmd->add_option("--log-rate-precision", o.priors.poisson_log_mean.precision,
                  "Poisson log-rate normal prior: precision");
}

struct Loaded {
  Observations y;
  FamilySpec fam;
  std::string source;
};

Loaded load(const RunOptions& o) {
  if (o.data.empty() == o.builtin.empty()) throw ConfigError("exactly one of --data or --builtin is required");
  Loaded l;
  std::optional<FamilySpec> dataset_family;
  if (!o.builtin.empty()) {
    auto ds = builtin_dataset(o.builtin);
    if (!ds) throw ConfigError("unknown builtin dataset: " + o.builtin);
    l.y = ds->data;
    dataset_family = ds->family;
    l.source = "builtin:" + o.builtin;
  } else {
    l.y = read_observations_csv(o.data);
    l.source = o.data;
  }

  if (o.family) {
    l.fam = *o.family == "gaussian" ? FamilySpec::gaussian(o.shared_precision) : FamilySpec::poisson();
  } else if (dataset_family) {
    l.fam = *dataset_family;
    if (o.shared_precision) l.fam.shared_precision = true;
  } else {
    l.fam = FamilySpec::gaussian(o.shared_precision);
  }
  if (o.shared_precision && l.fam.family != Family::Gaussian)
    throw ConfigError("--shared-precision applies to the gaussian family only");
  if (o.poisson_prior) {
    if (l.fam.family != Family::Poisson) throw ConfigError("--poisson-prior applies to the poisson family only");
    l.fam.poisson_prior = *o.poisson_prior == "gamma" ? PoissonPrior::GammaConjugate : PoissonPrior::LogNormal;
  }
  l.y.validate(l.fam);
  return l;
}

std::vector<std::size_t> k_range(const RunOptions& o, std::size_t default_min, std::size_t default_max) {
  if (o.k && (o.k_min || o.k_max)) throw ConfigError("--k cannot be combined with --k-min/--k-max");
  std::size_t lo = default_min, hi = default_max;
  if (o.k) lo = hi = *o.k;
  if (o.k_min) lo = *o.k_min;
  if (o.k_max) hi = *o.k_max;
  if (lo < 1 || hi > kMaxComponents || lo > hi) throw ConfigError("k range must lie within [1, 10]");
  std::vector<std::size_t> ks;
  for (std::size_t k = lo; k <= hi; ++k) ks.push_back(k);
  return ks;
}

SelectOptions select_options(const RunOptions& o, std::vector<std::size_t> ks) {
  SelectOptions s;
  s.k_range = std::move(ks);
  s.sampler = o.sampler;
  s.sampler.init = o.init == "random" ? SamplerConfig::Init::RandomUniform : SamplerConfig::Init::Quantile;
  s.sampler.validate();
  s.coverage_threshold = o.coverage_threshold;
  s.summaries = o.summaries == "renormalized" ? SummaryPosterior::Renormalized
                : o.summaries == "switch"     ? SummaryPosterior::SwitchWhenFlagged
                                              : SummaryPosterior::Gibbs;
  if (!(s.coverage_threshold > 0.0 && s.coverage_threshold < 1.0))
    throw ConfigError("coverage threshold must lie in (0, 1)");
  return s;
}

PriorSpec base_priors(const RunOptions& o) {
  PriorSpec p = o.priors;
  p.alpha.assign(1, o.alpha);
  p.label_prior = o.label_prior == "ordered" ? LabelPrior::Ordered : LabelPrior::Exchangeable;
  p.validate(true);
  return p;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw ConfigError("cannot write " + path.string());
}

double elapsed_ms(std::chrono::steady_clock::time_point started) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
}

void print_table(const ModelComparisonReport& r, std::ostream& out) {
  out << "  K      log_I    chib_G    chib_M   prob_I   prob_G   prob_M     TV\n";
  out << std::fixed;
  for (const auto& row : r.rows) {
    out << std::setw(3) << row.K << std::setprecision(2) << std::setw(11) << row.log_evidence_I << std::setw(10)
        << row.log_evidence_chib_G << std::setw(10) << row.log_evidence_chib_M << std::setprecision(4)
        << std::setw(9) << row.prob_I << std::setw(9) << row.prob_G << std::setw(9) << row.prob_M
        << std::setprecision(3) << std::setw(7) << row.diagnostic.tv_distance << (row.diagnostic.flagged ? " *" : "")
        << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

struct Outcome {
  ModelComparisonReport report;
  ordered_json json;
  fs::path dir;
};

// Shared by fit, select and diagnose.
Outcome run_selection(const RunOptions& o, std::vector<std::size_t> ks, const std::string& command) {
  const auto started = std::chrono::steady_clock::now();
  const Loaded l = load(o);
  const PriorSpec base = base_priors(o);
  const fs::path dir = prepare_out(o.out);
  Outcome res;
  res.report = select_k(l.y, l.fam, base, o.alpha, select_options(o, std::move(ks)));
  res.json = report_to_json(res.report, 0.0);
  res.json["command"] = command;
  res.json["data"] = l.source;
  res.json["label_prior"] = o.label_prior;
  res.json["alpha"] = o.alpha;
  if (o.densities) {
    std::vector<std::string> names;
    for (const auto& p : write_density_csvs(res.report, dir)) names.push_back(p.filename().string());
    res.json["density_files"] = names;
  }
  res.json["runtime_ms"] = std::llround(elapsed_ms(started));
  res.dir = dir;
  return res;
}

int cmd_simulate(const SimulateOptions& s, std::ostream& out) {
  SimulationSpec spec;
  spec.family = s.family == "poisson" ? Family::Poisson : Family::Gaussian;
  spec.means = s.means;
  spec.precisions = s.precisions;
  spec.sizes = s.sizes;
  if (spec.family == Family::Poisson && !spec.precisions.empty())
    throw ConfigError("--precisions applies to the gaussian family only");
  const Observations y = simulate(spec, s.seed);
  const fs::path path(s.out);
  if (path.has_parent_path()) prepare_out(path.parent_path().string());
  write_observations_csv(path, y);
  out << "wrote " << y.n() << " observations to " << path.string() << '\n';
  return 0;
}

int cmd_fit_or_select(const RunOptions& o, std::vector<std::size_t> ks, const std::string& command,
                      std::ostream& out) {
  Outcome res = run_selection(o, std::move(ks), command);
  write_json(res.dir / "report.json", res.json);
  print_table(res.report, out);
  out << "wrote " << (res.dir / "report.json").string() << '\n';
  return 0;
}

int cmd_diagnose(const RunOptions& o, std::vector<std::size_t> ks, std::ostream& out) {
  Outcome res = run_selection(o, std::move(ks), "diagnose");
  ordered_json coverage = ordered_json::array();
  for (const auto& row : res.report.rows) {
    const double gap = row.log_evidence_chib_G - row.log_evidence_I;
    ordered_json c;
    c["model"] = row.K;
    c["tv_distance"] = row.diagnostic.tv_distance;
    c["flagged"] = row.diagnostic.flagged;
    c["log_evidence_gap_G_minus_I"] = gap;
    // The largest per-allocation disagreements.
    std::vector<CoverageEntry> entries = row.diagnostic.entries;
    std::stable_sort(entries.begin(), entries.end(), [](const CoverageEntry& a, const CoverageEntry& b) {
      return std::abs(a.gibbs - a.renormalized) > std::abs(b.gibbs - b.renormalized);
    });
    ordered_json top = ordered_json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(entries.size(), 5); ++i) {
      ordered_json e;
      e["allocation"] = key_to_labels(entries[i].key);
      e["gibbs"] = entries[i].gibbs;
      e["renormalized"] = entries[i].renormalized;
      top.push_back(std::move(e));
    }
    c["largest_differences"] = std::move(top);
    coverage.push_back(std::move(c));
    out << "K=" << row.K << "  TV=" << row.diagnostic.tv_distance << "  log pi_G - log pi_I = " << gap
        << (row.diagnostic.flagged ? "  FLAGGED" : "") << '\n';
  }
  res.json["coverage"] = std::move(coverage);
  write_json(res.dir / "report.json", res.json);
  out << "wrote " << (res.dir / "report.json").string() << '\n';
  return 0;
}

int cmd_oracle(const RunOptions& o, std::vector<std::size_t> ks, std::ostream& out) {
  const Loaded l = load(o);
  // Enumerate first so that oversized inputs fail before any sampling.
  std::map<std::size_t, ExactPosterior> exacts;
  for (std::size_t K : ks) {
    PriorSpec priors = base_priors(o);
    priors.alpha.assign(K, o.alpha);
    exacts.emplace(K, enumerate_exact(l.y, K, l.fam, priors));
  }
  Outcome res = run_selection(o, ks, "oracle");
  ordered_json oracle = ordered_json::array();
  double max_tv = 0.0;
  for (const auto& row : res.report.rows) {
    PriorSpec priors = base_priors(o);
    priors.alpha.assign(row.K, o.alpha);
    const ExactPosterior& exact = exacts.at(row.K);
    // Rebuild both allocation estimators from this row's chain.
    SamplerConfig cfg = select_options(o, {row.K}).sampler;
    cfg.seed = row.seed;
    const AllocationTrace trace = row.K == 1 ? single_component_trace(l.y, l.fam, priors, cfg)
                                             : run_modal_gibbs(l.y, row.K, l.fam, priors, cfg);
    const double tv_G = total_variation(empirical_allocation_posterior(trace).entries, exact.probabilities);
    const double tv_I =
        total_variation(renormalized_allocation_posterior(trace, priors.alpha, priors.label_prior).entries,
                        exact.probabilities);
    max_tv = std::max({max_tv, tv_G, tv_I});
    ordered_json e;
    e["model"] = row.K;
    e["exact_log_evidence"] = exact.log_evidence;
    e["log_evidence_I_error"] = row.log_evidence_I - exact.log_evidence;
    e["tv_gibbs_vs_exact"] = tv_G;
    e["tv_renormalized_vs_exact"] = tv_I;
    e["canonical_allocations"] = exact.probabilities.size();
    e["visited_allocations"] = row.visited;
    oracle.push_back(std::move(e));
    out << "K=" << row.K << "  exact log evidence " << exact.log_evidence << "  TV(G, exact) " << tv_G
        << "  TV(I, exact) " << tv_I << '\n';
  }
  res.json["oracle"] = std::move(oracle);
  res.json["oracle_max_tv"] = max_tv;
  write_json(res.dir / "report.json", res.json);
  out << "max TV " << max_tv << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian finite mixtures by modal Gibbs sampling over allocations", "mixctl"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "draw a synthetic mixture sample to CSV");
  simulate_cmd->add_option("--family", sim.family, "gaussian | poisson")
      ->check(CLI::IsMember({"gaussian", "poisson"}))
      ->capture_default_str();
  simulate_cmd->add_option("--means", sim.means, "component means")->required()->delimiter(',');
  simulate_cmd->add_option("--precisions", sim.precisions, "Gaussian component precisions (default 1)")
      ->delimiter(',');
  simulate_cmd->add_option("--sizes", sim.sizes, "observations per component")->required()->delimiter(',');
  simulate_cmd->add_option("--seed", sim.seed, "random seed")->capture_default_str();
  simulate_cmd->add_option("--out", sim.out, "output CSV path")->capture_default_str();

  RunOptions fit_o, select_o, diag_o, oracle_o;
  auto* fit_cmd = app.add_subcommand("fit", "fit a single K");
  add_run_options(fit_cmd, fit_o);
  fit_cmd->add_option("--k", fit_o.k, "number of components")->required();

  auto* select_cmd = app.add_subcommand("select", "compare K over a range");
  add_run_options(select_cmd, select_o);
  select_cmd->add_option("--k", select_o.k, "single number of components");
  select_cmd->add_option("--k-min", select_o.k_min, "smallest K (default 1)");
  select_cmd->add_option("--k-max", select_o.k_max, "largest K (default 4)");

  auto* diag_cmd = app.add_subcommand("diagnose", "coverage diagnostic between visit frequencies and evidences");
  add_run_options(diag_cmd, diag_o);
  diag_cmd->add_option("--k", diag_o.k, "single number of components");
  diag_cmd->add_option("--k-min", diag_o.k_min, "smallest K (default 2)");
  diag_cmd->add_option("--k-max", diag_o.k_max, "largest K (default 4)");

  auto* oracle_cmd = app.add_subcommand("oracle", "cross-check against exhaustive enumeration (small n)");
  add_run_options(oracle_cmd, oracle_o);
  oracle_cmd->add_option("--k", oracle_o.k, "number of components (default 2)");
  oracle_cmd->add_option("--k-min", oracle_o.k_min, "smallest K");
  oracle_cmd->add_option("--k-max", oracle_o.k_max, "largest K");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate_cmd) return cmd_simulate(sim, out);
    if (*fit_cmd) return cmd_fit_or_select(fit_o, k_range(fit_o, 1, 1), "fit", out);
    if (*select_cmd) return cmd_fit_or_select(select_o, k_range(select_o, 1, 4), "select", out);
    if (*diag_cmd) return cmd_diagnose(diag_o, k_range(diag_o, 2, 4), out);
    if (*oracle_cmd) return cmd_oracle(oracle_o, k_range(oracle_o, 2, 2), out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return 3;
  }
  return 2;
}

}  // namespace mixmodal
