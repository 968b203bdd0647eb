#include "mixmodal/model_select.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mixmodal/errors.hpp"
#include "mixmodal/gibbs.hpp"
#include "mixmodal/rng.hpp"

namespace mixmodal {

namespace {

double log_joint(const TraceEntry& entry, std::span<const double> alpha, LabelPrior label_prior) {
  return entry.fit.log_cond_evidence + log_canonical_prior(entry.fit.allocation.counts(), alpha, label_prior);
}

}  // namespace

double log_evidence_I(const AllocationTrace& trace, std::span<const double> alpha, LabelPrior label_prior) {
  if (trace.table.empty()) throw ConfigError("empty trace");
  std::vector<double> terms;
  terms.reserve(trace.table.size());
  for (const auto& [key, entry] : trace.table) terms.push_back(log_joint(entry, alpha, label_prior));
  return log_sum_exp(terms);
}

double log_evidence_chib(const AllocationTrace& trace, std::span<const double> alpha, ChibVariant variant,
                         LabelPrior label_prior) {
  const AllocationPosterior post = variant == ChibVariant::G
                                       ? empirical_allocation_posterior(trace)
                                       : renormalized_allocation_posterior(trace, alpha, label_prior);
  const AllocationKey& zm = post.mode();
  const double p = post.at(zm);
  if (!(p > 0.0)) throw NumericalError("Chib denominator zero");
  return log_joint(trace.table.at(zm), alpha, label_prior) - std::log(p);
}

std::vector<double> model_posterior_probs(std::span<const double> log_evidences, std::span<const double> model_priors) {
  if (log_evidences.size() != model_priors.size()) throw ConfigError("one prior per model is required");
  std::vector<double> score(log_evidences.size());
  for (std::size_t k = 0; k < score.size(); ++k) {
    if (!(model_priors[k] > 0.0)) throw ConfigError("model priors must be positive");
    score[k] = log_evidences[k] + std::log(model_priors[k]);
  }
  const double norm = log_sum_exp(score);
  for (auto& s : score) s = std::exp(s - norm);
  return score;
}

ModelRow summarize_trace(const AllocationTrace& trace, const PriorSpec& priors, const FamilySpec& fam,
                         double coverage_threshold, SummaryPosterior summaries) {
  ModelRow row;
  row.K = trace.K;
  row.visited = trace.table.size();
  row.seed = trace.config.seed;
  const LabelPrior lp = priors.label_prior;
  row.log_evidence_I = log_evidence_I(trace, priors.alpha, lp);
  row.log_evidence_chib_G = log_evidence_chib(trace, priors.alpha, ChibVariant::G, lp);
  row.log_evidence_chib_M = log_evidence_chib(trace, priors.alpha, ChibVariant::M, lp);

  const auto gibbs = empirical_allocation_posterior(trace);
  const auto renorm = renormalized_allocation_posterior(trace, priors.alpha, lp);
  row.modal_allocation = renorm.mode();
  row.diagnostic = coverage_diagnostic(gibbs, renorm, coverage_threshold);
  const bool renormalized = summaries == SummaryPosterior::Renormalized ||
                            (summaries == SummaryPosterior::SwitchWhenFlagged && row.diagnostic.flagged);
  const AllocationPosterior& used = renormalized ? renorm : gibbs;
  row.summary_estimator = used.estimator;

  const auto weights = weight_posterior_summary(trace, used, priors.alpha);
  for (std::size_t j = 0; j < trace.K; ++j) {
    ComponentSummary cs;
    ComponentMarginals cm;
    auto loc = bma_marginal(trace, used, j, Parameter::Location);
    cs.location = {loc.mean, loc.sd};
    cm.location = std::move(loc.density);
    if (fam.family == Family::Gaussian) {
      auto prec = bma_marginal(trace, used, j, Parameter::Precision);
      cs.precision = ParameterSummary{prec.mean, prec.sd};
      cm.precision = std::move(prec.density);
    }
    cs.weight = {weights.mean[j], weights.sd[j]};
    row.components.push_back(cs);
    row.marginals.push_back(std::move(cm));
  }
  return row;
}

ModelComparisonReport select_k(const Observations& y, const FamilySpec& fam, const PriorSpec& base, double alpha_value,
                               const SelectOptions& opts) {
  if (opts.k_range.empty()) throw ConfigError("k_range must not be empty");
  y.validate(fam);
  ModelComparisonReport report;
  report.family = fam;
  report.seed = opts.sampler.seed;
  report.n = y.n();

  std::vector<std::size_t> ks = opts.k_range;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  for (std::size_t K : ks) {
    PriorSpec priors = base;
    priors.alpha.assign(K, alpha_value);
    const auto started = std::chrono::steady_clock::now();
    SamplerConfig cfg = opts.sampler;
    cfg.seed = CounterRng::derive(opts.sampler.seed, K);
    const AllocationTrace trace = K == 1 ? single_component_trace(y, fam, priors, cfg, opts.quadrature)
                                         : run_modal_gibbs(y, K, fam, priors, cfg, opts.quadrature);
    report.rows.push_back(summarize_trace(trace, priors, fam, opts.coverage_threshold, opts.summaries));
    report.rows.back().runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  }

  std::vector<double> ev_I, ev_G, ev_M;
  for (const auto& r : report.rows) {
    ev_I.push_back(r.log_evidence_I);
    ev_G.push_back(r.log_evidence_chib_G);
    ev_M.push_back(r.log_evidence_chib_M);
  }
  const std::vector<double> uniform(report.rows.size(), 1.0);
  const auto pI = model_posterior_probs(ev_I, uniform);
  const auto pG = model_posterior_probs(ev_G, uniform);
  const auto pM = model_posterior_probs(ev_M, uniform);
  for (std::size_t k = 0; k < report.rows.size(); ++k) {
    report.rows[k].prob_I = pI[k];
    report.rows[k].prob_G = pG[k];
    report.rows[k].prob_M = pM[k];
  }
  return report;
}

}  // namespace mixmodal
