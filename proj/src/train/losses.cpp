#include "bopo/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace bopo::loss {

namespace {

void require_strict(const PairLogliks& p) {
  if (!(p.g_w < p.g_l)) throw std::domain_error("loss: requires strict preference g_w < g_l");
  if (!(p.g_w > 0.0)) throw std::domain_error("loss: objectives must be positive");
}

}  // namespace

double bopo(const PairLogliks& p) {
  require_strict(p);
  const double z = (p.g_l / p.g_w) * (p.f_w - p.f_l);
  return neg_log_sigmoid(z);
}

double bopo_minus(const PairLogliks& p) {
  require_strict(p);
  return neg_log_sigmoid(p.f_w - p.f_l);
}

std::pair<double, double> bopo_gradient_factors(const PairLogliks& p) {
  require_strict(p);
  const double scaling = p.g_l / p.g_w;
  const double z = scaling * (p.f_w - p.f_l);
  return {scaling, 1.0 - sigmoid(z)};
}

double dpo(const PairLogliks& p, double ref_total_w, double ref_total_l, double beta) {
  const double dw = double(p.len_w) * p.f_w - ref_total_w;
  const double dl = double(p.len_l) * p.f_l - ref_total_l;
  if (!std::isfinite(dw) || !std::isfinite(dl))
    throw std::domain_error("dpo: non-finite log-ratio");
  return neg_log_sigmoid(beta * (dw - dl));
}

double simpo(const PairLogliks& p, double beta, double gamma) {
  if (!(beta > 0.0)) throw std::domain_error("simpo: beta must be > 0");
  return neg_log_sigmoid(beta * p.f_w - beta * p.f_l - gamma);
}

double sll(double avg_loglik_best) { return -avg_loglik_best; }

std::vector<double> shared_baseline_advantages(std::span<const double> objectives) {
  if (objectives.size() < 2)
    throw std::domain_error("reinforce_shared_baseline: needs at least 2 solutions");
  double mean = 0.0;
  for (double g : objectives) mean += g;
  mean /= double(objectives.size());
  std::vector<double> adv(objectives.size());
  for (std::size_t i = 0; i < objectives.size(); ++i) adv[i] = objectives[i] - mean;
  return adv;
}

double reinforce_shared_baseline(std::span<const double> objectives,
                                 std::span<const double> total_logliks) {
  const auto adv = shared_baseline_advantages(objectives);
  if (total_logliks.size() != objectives.size())
    throw std::domain_error("reinforce_shared_baseline: size mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < adv.size(); ++i) loss += adv[i] * total_logliks[i];
  return loss / double(adv.size());
}

ad::Value bopo_t(ad::Tape& t, ad::Value f_w, ad::Value f_l, double g_w, double g_l) {
  PairLogliks chk{0, 0, 1, 1, g_w, g_l};
  require_strict(chk);
  ad::Value z = t.scale(t.sub(f_w, f_l), g_l / g_w);
  return t.softplus(t.scale(z, -1.0));
}

ad::Value bopo_minus_t(ad::Tape& t, ad::Value f_w, ad::Value f_l, double g_w, double g_l) {
  PairLogliks chk{0, 0, 1, 1, g_w, g_l};
  require_strict(chk);
  return t.softplus(t.scale(t.sub(f_w, f_l), -1.0));
}

ad::Value dpo_t(ad::Tape& t, ad::Value total_w, ad::Value total_l, double ref_total_w,
                double ref_total_l, double beta) {
  ad::Value dw = t.sub(total_w, t.input(ad::Mat(1, 1, {ref_total_w})));
  ad::Value dl = t.sub(total_l, t.input(ad::Mat(1, 1, {ref_total_l})));
  ad::Value z = t.scale(t.sub(dw, dl), beta);
  return t.softplus(t.scale(z, -1.0));
}

ad::Value simpo_t(ad::Tape& t, ad::Value f_w, ad::Value f_l, double beta, double gamma) {
  if (!(beta > 0.0)) throw std::domain_error("simpo: beta must be > 0");
  ad::Value z = t.sub(t.scale(t.sub(f_w, f_l), beta), t.input(ad::Mat(1, 1, {gamma})));
  return t.softplus(t.scale(z, -1.0));
}

ad::Value sll_t(ad::Tape& t, ad::Value f_best) { return t.scale(f_best, -1.0); }

ad::Value reinforce_t(ad::Tape& t, std::span<const double> objectives,
                      const std::vector<ad::Value>& total_logliks) {
  const auto adv = shared_baseline_advantages(objectives);
  if (total_logliks.size() != objectives.size())
    throw std::domain_error("reinforce_t: size mismatch");
  std::vector<ad::Value> terms;
  terms.reserve(adv.size());
  for (std::size_t i = 0; i < adv.size(); ++i)
    terms.push_back(t.scale(total_logliks[i], adv[i]));
  return t.scale(t.add_scalars(terms), 1.0 / double(adv.size()));
}

}  // namespace bopo::loss
