#pragma once

#include <string>
#include <vector>

#include "bopo/tape.hpp"
#include "bopo/tsp.hpp"

// Transformer encoder with a single multi-head-attention decoding step per
// construction step. The decoder context is the concatenation of the first
// and last visited nodes' embeddings; the first node of a rollout is
// assigned (probability 1), and the policy scores steps 2..n.

namespace bopo::model {

struct TspConfig {
  int dim = 128;
  int layers = 3;
  int heads = 8;
  int ff = 512;
  std::string to_json() const;
};

class TspModel {
 public:
  TspModel(TspConfig cfg, ad::ParameterSet& ps, Rng& init_rng);

  const TspConfig& config() const { return cfg_; }

  template <class E>
  ad::Value encode(E& eng, ad::ParameterSet& ps, const ad::Mat& coords) const {
    ad::Value x = eng.add_rowvec(eng.matmul(eng.input(coords), eng.param(ps, "embed.W")),
                                 eng.param(ps, "embed.b"));
    const int n = coords.rows;
    const std::vector<std::uint8_t> full(std::size_t(n) * std::size_t(n), 1);
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = "enc" + std::to_string(l);
      ad::Value a = mha(eng, ps, x, x, p, full);
      x = eng.layer_norm_rows(eng.add(x, a), eng.param(ps, p + ".ln1.g"),
                              eng.param(ps, p + ".ln1.b"));
      ad::Value f = eng.add_rowvec(
          eng.matmul(eng.relu(eng.add_rowvec(eng.matmul(x, eng.param(ps, p + ".ff.W1")),
                                             eng.param(ps, p + ".ff.b1"))),
                     eng.param(ps, p + ".ff.W2")),
          eng.param(ps, p + ".ff.b2"));
      x = eng.layer_norm_rows(eng.add(x, f), eng.param(ps, p + ".ln2.g"),
                              eng.param(ps, p + ".ln2.b"));
    }
    return x;
  }

  // Per-instance decoder projections of the embeddings.
  template <class E>
  struct DecCache {
    ad::Value gk, gv, pk;  // glimpse keys/values and pointer keys, [n, dim]
  };

  template <class E>
  DecCache<E> decode_cache(E& eng, ad::ParameterSet& ps, ad::Value emb) const {
    return {eng.matmul(emb, eng.param(ps, "dec.Wgk")),
            eng.matmul(emb, eng.param(ps, "dec.Wgv")),
            eng.matmul(emb, eng.param(ps, "dec.Wpk"))};
  }

  // first/last: node per rollout; mask: [R * n] feasibility (unvisited).
  template <class E>
  ad::Value decode_logits(E& eng, ad::ParameterSet& ps, ad::Value emb, const DecCache<E>& cache,
                          const std::vector<int>& first, const std::vector<int>& last,
                          const std::vector<std::uint8_t>& mask) const {
    ad::Value ctx = eng.concat_cols(eng.gather_rows(emb, first), eng.gather_rows(emb, last));
    ad::Value q = eng.matmul(ctx, eng.param(ps, "dec.Wq"));
    const int dh = cfg_.dim / cfg_.heads;
    ad::Value gl;
    for (int h = 0; h < cfg_.heads; ++h) {
      ad::Value qh = eng.slice_cols(q, h * dh, (h + 1) * dh);
      ad::Value kh = eng.slice_cols(cache.gk, h * dh, (h + 1) * dh);
      ad::Value vh = eng.slice_cols(cache.gv, h * dh, (h + 1) * dh);
      ad::Value scores = eng.scale(eng.matmul_nt(qh, kh), 1.0 / std::sqrt(double(dh)));
      ad::Value probs = eng.masked_softmax_rows(scores, mask);
      ad::Value at = eng.matmul(probs, vh);
      gl = h == 0 ? at : eng.concat_cols(gl, at);
    }
    ad::Value g2 = eng.matmul(gl, eng.param(ps, "dec.Wgo"));
    return eng.scale(eng.matmul_nt(g2, cache.pk), 1.0 / std::sqrt(double(cfg_.dim)));
  }

 private:
  // Full multi-head attention of queries `xq` against keys/values `xkv`.
  template <class E>
  ad::Value mha(E& eng, ad::ParameterSet& ps, ad::Value xq, ad::Value xkv, const std::string& p,
                const std::vector<std::uint8_t>& mask) const {
    ad::Value q = eng.matmul(xq, eng.param(ps, p + ".Wq"));
    ad::Value k = eng.matmul(xkv, eng.param(ps, p + ".Wk"));
    ad::Value v = eng.matmul(xkv, eng.param(ps, p + ".Wv"));
    const int dh = cfg_.dim / cfg_.heads;
    ad::Value cat;
    for (int h = 0; h < cfg_.heads; ++h) {
      ad::Value qh = eng.slice_cols(q, h * dh, (h + 1) * dh);
      ad::Value kh = eng.slice_cols(k, h * dh, (h + 1) * dh);
      ad::Value vh = eng.slice_cols(v, h * dh, (h + 1) * dh);
      ad::Value scores = eng.scale(eng.matmul_nt(qh, kh), 1.0 / std::sqrt(double(dh)));
      ad::Value probs = eng.masked_softmax_rows(scores, mask);
      ad::Value at = eng.matmul(probs, vh);
      cat = h == 0 ? at : eng.concat_cols(cat, at);
    }
    return eng.matmul(cat, eng.param(ps, p + ".Wo"));
  }

  TspConfig cfg_;
};

class TspPolicy {
 public:
  TspPolicy(const TspModel& model, ad::ParameterSet& ps, const tsp::Instance& inst);

  // Greedy rollouts start at the given nodes (default {0} when greedy is
  // requested); sampled rollouts draw their start node from their stream.
  struct Spec {
    std::vector<int> greedy_starts;  // one greedy rollout per entry
    int n_sampled = 0;
    std::uint64_t base_seed = 0;
  };

  std::vector<Solution> rollout(const Spec& spec);

  // Best greedy tour over the given start nodes (ties: earliest start).
  Solution greedy_multistart(const std::vector<int>& starts);

  ad::Value replay_avg_logliks(ad::Tape& t, const std::vector<std::vector<std::int32_t>>& actions);
  std::vector<double> replay_avg_logliks_plain(const std::vector<std::vector<std::int32_t>>& actions);

  const tsp::Instance& instance() const { return *inst_; }

 private:
  template <class E>
  ad::Value run(E& eng, int rollouts, const std::vector<std::vector<std::int32_t>>* replay,
                std::vector<Solution>* out, const Spec* spec);

  const TspModel* model_;
  ad::ParameterSet* ps_;
  const tsp::Instance* inst_;
  ad::Mat coords_;
};

}  // namespace bopo::model
