#pragma once

#include <string>
#include <vector>

#include "bopo/fjsp.hpp"
#include "bopo/jsp.hpp"
#include "bopo/tape.hpp"

// Graph-attention encoder with a recurrent context-attention decoder for the
// scheduling problems. The encoder stacks two multi-graph GAT blocks with
// skip concatenation; the decoder queries job (or operation-machine) keys
// with an LSTM state driven by the previously selected node's embedding.
//
// All forward code is templated over the engine so the sampling fast path
// (PlainEval) and the differentiated replay path (Tape) share one
// implementation.

namespace bopo::model {

// Edge list grouped by destination; each node's segment starts with its
// self-loop. Attention at a node runs over this segment.
struct EdgeSetCsr {
  std::vector<int> src;
  std::vector<int> dst;
  std::vector<int> offsets;  // n_nodes + 1
};

EdgeSetCsr make_csr(int n_nodes, const std::vector<std::pair<int, int>>& edges, bool undirected);

struct MglConfig {
  int head_dim = 12;     // per-head GAT width; 2 heads per graph layer
  int lstm_in = 64;
  int lstm_hidden = 64;
  int query_dim = 64;
  int ctx_dim = 16;      // context projection width
  double feature_scale = 0.01;  // applied to all raw features at the model input
  bool fjsp = false;

  int state_dim() const { return 15; }
  int n_graphs() const { return fjsp ? 3 : 2; }
  int gat_out() const { return n_graphs() * 2 * head_dim; }
  int emb_dim() const { return state_dim() + gat_out(); }
  std::string to_json() const;
};

class MglModel {
 public:
  MglModel(MglConfig cfg, ad::ParameterSet& ps, Rng& init_rng);

  const MglConfig& config() const { return cfg_; }

  // One 2-head GAT over a single edge set. feats: [N, in].
  template <class E>
  ad::Value gat_layer(E& eng, ad::ParameterSet& ps, ad::Value feats, const EdgeSetCsr& g,
                      const std::string& prefix) const {
    std::vector<ad::Value> heads;
    for (int h = 0; h < 2; ++h) {
      const std::string p = prefix + ".h" + std::to_string(h);
      ad::Value hm = eng.matmul(feats, eng.param(ps, p + ".W"));
      ad::Value al_dst = eng.matmul(hm, eng.param(ps, p + ".a_dst"));
      ad::Value al_src = eng.matmul(hm, eng.param(ps, p + ".a_src"));
      ad::Value logits = eng.leaky_relu(
          eng.add(eng.gather_rows(al_dst, g.dst), eng.gather_rows(al_src, g.src)), 0.2);
      ad::Value w = eng.segment_softmax(logits, g.offsets);
      ad::Value agg = eng.segment_weighted_sum(eng.gather_rows(hm, g.src), w, g.offsets,
                                               int(g.offsets.size()) - 1);
      heads.push_back(agg);
    }
    return eng.concat_cols(heads[0], heads[1]);
  }

  // Multi-graph block: relu'd per-graph GAT outputs, concatenated.
  template <class E>
  ad::Value gat_multi(E& eng, ad::ParameterSet& ps, ad::Value feats,
                      const std::vector<EdgeSetCsr>& graphs, const std::string& prefix) const {
    ad::Value out;
    for (std::size_t g = 0; g < graphs.size(); ++g) {
      ad::Value part = eng.relu(
          gat_layer(eng, ps, feats, graphs[g], prefix + ".g" + std::to_string(g)));
      out = g == 0 ? part : eng.concat_cols(out, part);
    }
    return out;
  }

  // feats_raw: [N, 15] as produced by the environment; the model scales them.
  template <class E>
  ad::Value encode(E& eng, ad::ParameterSet& ps, const ad::Mat& feats_raw,
                   const std::vector<EdgeSetCsr>& graphs) const {
    ad::Value s = eng.scale(eng.input(feats_raw), cfg_.feature_scale);
    ad::Value u1 = gat_multi(eng, ps, s, graphs, "enc1");
    ad::Value x2 = eng.concat_cols(s, u1);
    ad::Value u2 = gat_multi(eng, ps, x2, graphs, "enc2");
    return eng.concat_cols(s, u2);
  }

  template <class E>
  struct DecoderState {
    ad::Value h, c;  // [R, hidden]
  };

  template <class E>
  DecoderState<E> initial_state(E& eng, int rollouts) const {
    return {eng.input(ad::Mat(rollouts, cfg_.lstm_hidden)),
            eng.input(ad::Mat(rollouts, cfg_.lstm_hidden))};
  }

  // prev_emb: [R, emb_dim] embedding of the previously selected node (zeros
  // at the first step). Advances the recurrent state and returns the query.
  template <class E>
  ad::Value decode_query(E& eng, ad::ParameterSet& ps, DecoderState<E>& st,
                         ad::Value prev_emb) const {
    const int H = cfg_.lstm_hidden;
    ad::Value x = eng.relu(eng.matmul(prev_emb, eng.param(ps, "dec.W1")));
    ad::Value gates = eng.add_rowvec(
        eng.add(eng.matmul(x, eng.param(ps, "dec.lstm.Wih")),
                eng.matmul(st.h, eng.param(ps, "dec.lstm.Whh"))),
        eng.param(ps, "dec.lstm.b"));
    ad::Value gi = eng.sigmoid_(eng.slice_cols(gates, 0, H));
    ad::Value gf = eng.sigmoid_(eng.slice_cols(gates, H, 2 * H));
    ad::Value gg = eng.tanh_(eng.slice_cols(gates, 2 * H, 3 * H));
    ad::Value go = eng.sigmoid_(eng.slice_cols(gates, 3 * H, 4 * H));
    st.c = eng.add(eng.mul(gf, st.c), eng.mul(gi, gg));
    st.h = eng.mul(go, eng.tanh_(st.c));
    ad::Value normed =
        eng.layer_norm_rows(st.h, eng.param(ps, "dec.ln.g"), eng.param(ps, "dec.ln.b"));
    return eng.matmul(normed, eng.param(ps, "dec.W2"));
  }

  // JSP keys: ctx_raw [R*J, 11], emb_rows [R*J, emb_dim] (pending op per job).
  template <class E>
  ad::Value jsp_keys(E& eng, ad::ParameterSet& ps, const ad::Mat& ctx_raw,
                     ad::Value emb_rows) const {
    ad::Value c = eng.scale(eng.input(ctx_raw), cfg_.feature_scale);
    ad::Value cp = eng.relu(eng.matmul(c, eng.param(ps, "dec.W3")));
    return eng.matmul(eng.concat_cols(cp, emb_rows), eng.param(ps, "dec.W4"));
  }

  // FJSP keys: job and machine context projections gathered per node.
  template <class E>
  ad::Value fjsp_keys(E& eng, ad::ParameterSet& ps, const ad::Mat& job_ctx_raw,
                      const ad::Mat& mach_ctx_raw, const std::vector<int>& node_job_row,
                      const std::vector<int>& node_mach_row, ad::Value emb_rows) const {
    ad::Value cj = eng.relu(eng.matmul(eng.scale(eng.input(job_ctx_raw), cfg_.feature_scale),
                                       eng.param(ps, "dec.W3")));
    ad::Value cm = eng.relu(eng.matmul(eng.scale(eng.input(mach_ctx_raw), cfg_.feature_scale),
                                       eng.param(ps, "dec.W4m")));
    ad::Value cat = eng.concat_cols(
        eng.concat_cols(eng.gather_rows(cj, node_job_row), eng.gather_rows(cm, node_mach_row)),
        emb_rows);
    return eng.matmul(cat, eng.param(ps, "dec.W5"));
  }

 private:
  MglConfig cfg_;
};

// ---- rollout / replay drivers ----

struct RolloutBatchSpec {
  int n_greedy = 1;            // 0 or 1
  int n_sampled = 0;
  std::uint64_t base_seed = 0; // sample i uses stream derive_seed(base_seed, i)
};

class JspPolicy {
 public:
  JspPolicy(const MglModel& model, ad::ParameterSet& ps, const jsp::Instance& inst);

  // Greedy first (if requested), then samples; objectives recomputed by the
  // environment.
  std::vector<Solution> rollout(const RolloutBatchSpec& spec);

  // Average log-likelihood per solution, [K,1] on the tape.
  ad::Value replay_avg_logliks(ad::Tape& t, const std::vector<std::vector<std::int32_t>>& actions);
  // Same, without gradients.
  std::vector<double> replay_avg_logliks_plain(const std::vector<std::vector<std::int32_t>>& actions);

  const jsp::Instance& instance() const { return *inst_; }

 private:
  template <class E>
  ad::Value run(E& eng, int rollouts, const std::vector<std::vector<std::int32_t>>* replay,
                std::vector<Solution>* out, const RolloutBatchSpec* spec);

  const MglModel* model_;
  ad::ParameterSet* ps_;
  const jsp::Instance* inst_;
  std::vector<EdgeSetCsr> graphs_;
  ad::Mat feats_;
};

class FjspPolicy {
 public:
  FjspPolicy(const MglModel& model, ad::ParameterSet& ps, const fjsp::Instance& inst);

  std::vector<Solution> rollout(const RolloutBatchSpec& spec);
  ad::Value replay_avg_logliks(ad::Tape& t, const std::vector<std::vector<std::int32_t>>& actions);
  std::vector<double> replay_avg_logliks_plain(const std::vector<std::vector<std::int32_t>>& actions);

  const fjsp::Instance& instance() const { return *inst_; }
  const fjsp::Graph& graph() const { return graph_; }

  // Actions are graph-node ids; convert for the environment.
  std::vector<std::pair<int, int>> to_op_machine(const std::vector<std::int32_t>& actions) const;

 private:
  template <class E>
  ad::Value run(E& eng, int rollouts, const std::vector<std::vector<std::int32_t>>* replay,
                std::vector<Solution>* out, const RolloutBatchSpec* spec);

  const MglModel* model_;
  ad::ParameterSet* ps_;
  const fjsp::Instance* inst_;
  fjsp::Graph graph_;
  std::vector<EdgeSetCsr> graphs_;
  ad::Mat feats_;
};

}  // namespace bopo::model
