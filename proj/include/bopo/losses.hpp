#pragma once

#include <span>
#include <utility>
#include <vector>

#include "bopo/tape.hpp"

// Preference-optimization losses over per-solution average log-likelihoods,
// as scalar functions (used directly and as oracles) and as tape builders
// (used for training). The scalar and tape forms are the same formulas.

namespace bopo::loss {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// -log(sigmoid(z)) = softplus(-z), computed stably
inline double neg_log_sigmoid(double z) {
  if (z > 0.0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

// Everything a pairwise loss needs about one preference pair.
struct PairLogliks {
  double f_w = 0.0, f_l = 0.0;  // average per-step log-likelihoods, <= 0
  int len_w = 1, len_l = 1;     // solution lengths
  double g_w = 0.0, g_l = 0.0;  // objectives, g_w < g_l
};

// -log sigmoid( (g_l / g_w) * (f_w - f_l) )
double bopo(const PairLogliks& p);

// Scaling fixed to 1.
double bopo_minus(const PairLogliks& p);

// (scaling, confidence) = (g_l/g_w, 1 - sigmoid(z)); the gradient of bopo()
// w.r.t. (f_w, f_l) is (-scaling*confidence, +scaling*confidence).
std::pair<double, double> bopo_gradient_factors(const PairLogliks& p);

// Total (not length-normalized) log-ratios against a frozen reference.
double dpo(const PairLogliks& p, double ref_total_w, double ref_total_l, double beta);

// -log sigmoid( beta*f_w - beta*f_l - gamma )
double simpo(const PairLogliks& p, double beta, double gamma);

// Cross-entropy on the best solution: -avg_loglik_best.
double sll(double avg_loglik_best);

// (1/B) * sum_i (g_i - mean(g)) * total_loglik_i ; minimizing raises the
// probability of below-average-objective solutions. B >= 2.
double reinforce_shared_baseline(std::span<const double> objectives,
                                 std::span<const double> total_logliks);

std::vector<double> shared_baseline_advantages(std::span<const double> objectives);

// ---- tape builders ----

ad::Value bopo_t(ad::Tape& t, ad::Value f_w, ad::Value f_l, double g_w, double g_l);
ad::Value bopo_minus_t(ad::Tape& t, ad::Value f_w, ad::Value f_l, double g_w, double g_l);
ad::Value dpo_t(ad::Tape& t, ad::Value total_w, ad::Value total_l, double ref_total_w,
                double ref_total_l, double beta);
ad::Value simpo_t(ad::Tape& t, ad::Value f_w, ad::Value f_l, double beta, double gamma);
ad::Value sll_t(ad::Tape& t, ad::Value f_best);
ad::Value reinforce_t(ad::Tape& t, std::span<const double> objectives,
                      const std::vector<ad::Value>& total_logliks);

}  // namespace bopo::loss
