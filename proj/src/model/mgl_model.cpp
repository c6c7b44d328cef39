#include "bopo/mgl_model.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

namespace bopo::model {

EdgeSetCsr make_csr(int n_nodes, const std::vector<std::pair<int, int>>& edges, bool undirected) {
  std::vector<std::vector<int>> in(size_t(n_nodes));
  for (int v = 0; v < n_nodes; ++v) in[size_t(v)].push_back(v);  // self-loop first
  for (auto [a, b] : edges) {
    in[size_t(b)].push_back(a);
    if (undirected) in[size_t(a)].push_back(b);
  }
  EdgeSetCsr csr;
  csr.offsets.push_back(0);
  for (int v = 0; v < n_nodes; ++v) {
    for (int s : in[size_t(v)]) {
      csr.src.push_back(s);
      csr.dst.push_back(v);
    }
    csr.offsets.push_back(int(csr.src.size()));
  }
  return csr;
}

std::string MglConfig::to_json() const {
  std::ostringstream o;
  o << "{\"model\":\"mgl\",\"fjsp\":" << (fjsp ? "true" : "false")
    << ",\"head_dim\":" << head_dim << ",\"lstm_in\":" << lstm_in
    << ",\"lstm_hidden\":" << lstm_hidden << ",\"query_dim\":" << query_dim
    << ",\"ctx_dim\":" << ctx_dim << ",\"feature_scale\":" << feature_scale << "}";
  return o.str();
}

MglModel::MglModel(MglConfig cfg, ad::ParameterSet& ps, Rng& rng) : cfg_(cfg) {
  const int in1 = cfg_.state_dim();
  const int in2 = cfg_.state_dim() + cfg_.gat_out();
  for (auto [enc, in] : {std::pair{"enc1", in1}, std::pair{"enc2", in2}}) {
    for (int g = 0; g < cfg_.n_graphs(); ++g) {
      for (int h = 0; h < 2; ++h) {
        std::string p = std::string(enc) + ".g" + std::to_string(g) + ".h" + std::to_string(h);
        ps.create(p + ".W", in, cfg_.head_dim, rng);
        ps.create(p + ".a_src", cfg_.head_dim, 1, rng);
        ps.create(p + ".a_dst", cfg_.head_dim, 1, rng);
      }
    }
  }
  const int H = cfg_.lstm_hidden;
  ps.create("dec.W1", cfg_.emb_dim(), cfg_.lstm_in, rng);
  ps.create("dec.lstm.Wih", cfg_.lstm_in, 4 * H, rng);
  ps.create("dec.lstm.Whh", H, 4 * H, rng);
  ps.create_zeros("dec.lstm.b", 1, 4 * H);
  ps.create_const("dec.ln.g", 1, H, 1.0);
  ps.create_zeros("dec.ln.b", 1, H);
  ps.create("dec.W2", H, cfg_.query_dim, rng);
  if (!cfg_.fjsp) {
    ps.create("dec.W3", 11, cfg_.ctx_dim, rng);
    ps.create("dec.W4", cfg_.ctx_dim + cfg_.emb_dim(), cfg_.query_dim, rng);
  } else {
    ps.create("dec.W3", 5, cfg_.ctx_dim, rng);
    ps.create("dec.W4m", 5, cfg_.ctx_dim, rng);
    ps.create("dec.W5", 2 * cfg_.ctx_dim + cfg_.emb_dim(), cfg_.query_dim, rng);
  }
}

namespace {

int argmax_feasible(const ad::Mat& probs, int row, const std::vector<std::uint8_t>& mask) {
  int best = -1;
  double bp = -1.0;
  const std::size_t base = std::size_t(row) * std::size_t(probs.cols);
  for (int c = 0; c < probs.cols; ++c) {
    if (!mask[base + std::size_t(c)]) continue;
    if (probs.at(row, c) > bp) {
      bp = probs.at(row, c);
      best = c;
    }
  }
  return best;
}

int sample_row(const ad::Mat& probs, int row, Rng& rng) {
  const double* p = probs.data() + std::size_t(row) * std::size_t(probs.cols);
  return int(rng.categorical(std::span<const double>(p, std::size_t(probs.cols))));
}

}  // namespace

JspPolicy::JspPolicy(const MglModel& model, ad::ParameterSet& ps, const jsp::Instance& inst)
    : model_(&model), ps_(&ps), inst_(&inst) {
  const jsp::DisjunctiveGraph g = jsp::build_graph(inst);
  graphs_.push_back(make_csr(g.n_nodes, g.conjunctive, false));
  graphs_.push_back(make_csr(g.n_nodes, g.disjunctive, true));
  feats_ = ad::Mat(inst.n_ops(), 15, jsp::state_features(inst));
}

template <class E>
ad::Value JspPolicy::run(E& eng, int rollouts,
                         const std::vector<std::vector<std::int32_t>>* replay,
                         std::vector<Solution>* out, const RolloutBatchSpec* spec) {
  const jsp::Instance& inst = *inst_;
  const int J = inst.n_jobs;
  const int horizon = inst.n_ops();
  const int R = rollouts;

  ad::Value emb = model_->encode(eng, *ps_, feats_, graphs_);
  auto dstate = model_->template initial_state<E>(eng, R);

  std::vector<jsp::ScheduleState> states(std::size_t(R), jsp::ScheduleState(inst));
  std::vector<Rng> rngs;
  if (!replay) {
    for (int i = 0; i < spec->n_sampled; ++i)
      rngs.emplace_back(derive_seed(spec->base_seed, std::uint64_t(i)));
  }
  std::vector<std::vector<std::int32_t>> acts(std::size_t(R));
  std::vector<int> prev_op(std::size_t(R), -1);
  ad::Value total;

  for (int step = 0; step < horizon; ++step) {
    ad::Value prev_emb;
    if (step == 0) {
      prev_emb = eng.input(ad::Mat(R, model_->config().emb_dim()));
    } else {
      prev_emb = eng.gather_rows(emb, prev_op);
    }
    ad::Value q = model_->decode_query(eng, *ps_, dstate, prev_emb);

    ad::Mat ctx(R * J, 11);
    std::vector<int> pending(std::size_t(R) * std::size_t(J), 0);
    std::vector<std::uint8_t> mask(std::size_t(R) * std::size_t(J), 0);
    for (int r = 0; r < R; ++r) {
      const auto cf = jsp::context_features(states[std::size_t(r)]);
      std::memcpy(ctx.data() + std::size_t(r) * std::size_t(J) * 11, cf.data(),
                  cf.size() * sizeof(double));
      for (int j = 0; j < J; ++j) {
        const int pos = states[std::size_t(r)].next_op[std::size_t(j)];
        if (pos < inst.n_machines) {
          pending[std::size_t(r * J + j)] = inst.op_id(j, pos);
          mask[std::size_t(r * J + j)] = 1;
        }
      }
    }
    ad::Value keys = model_->jsp_keys(eng, *ps_, ctx, eng.gather_rows(emb, pending));
    ad::Value logits = eng.rowblock_dot(q, keys, J);

    std::vector<int> chosen(std::size_t(R), 0);
    if (replay) {
      for (int r = 0; r < R; ++r) chosen[std::size_t(r)] = (*replay)[std::size_t(r)][std::size_t(step)];
      ad::Value picked = eng.masked_log_softmax_pick(logits, mask, chosen);
      total = step == 0 ? picked : eng.add(total, picked);
    } else {
      const ad::Mat probs = ad::fwd::masked_softmax_rows(eng.value(logits), mask);
      for (int r = 0; r < R; ++r) {
        chosen[std::size_t(r)] = r < spec->n_greedy
                                     ? argmax_feasible(probs, r, mask)
                                     : sample_row(probs, r, rngs[std::size_t(r - spec->n_greedy)]);
      }
    }
    for (int r = 0; r < R; ++r) {
      const int j = chosen[std::size_t(r)];
      prev_op[std::size_t(r)] = inst.op_id(j, states[std::size_t(r)].next_op[std::size_t(j)]);
      jsp::apply_action(states[std::size_t(r)], j);
      acts[std::size_t(r)].push_back(j);
    }
  }

  if (out) {
    out->clear();
    for (int r = 0; r < R; ++r) {
      Solution s;
      s.actions = std::move(acts[std::size_t(r)]);
      s.objective = states[std::size_t(r)].partial_makespan;
      s.origin = (!replay && r < spec->n_greedy) ? Origin::greedy : Origin::sampled;
      out->push_back(std::move(s));
    }
  }
  if (replay) return eng.scale(total, 1.0 / double(horizon));
  return {};
}

std::vector<Solution> JspPolicy::rollout(const RolloutBatchSpec& spec) {
  ad::PlainEval eng;
  std::vector<Solution> out;
  run(eng, spec.n_greedy + spec.n_sampled, nullptr, &out, &spec);
  return out;
}

ad::Value JspPolicy::replay_avg_logliks(ad::Tape& t,
                                        const std::vector<std::vector<std::int32_t>>& actions) {
  return run(t, int(actions.size()), &actions, nullptr, nullptr);
}

std::vector<double> JspPolicy::replay_avg_logliks_plain(
    const std::vector<std::vector<std::int32_t>>& actions) {
  ad::PlainEval eng;
  ad::Value v = run(eng, int(actions.size()), &actions, nullptr, nullptr);
  return eng.value(v).a;
}

FjspPolicy::FjspPolicy(const MglModel& model, ad::ParameterSet& ps, const fjsp::Instance& inst)
    : model_(&model), ps_(&ps), inst_(&inst) {
  graph_ = fjsp::build_graph(inst);
  graphs_.push_back(make_csr(graph_.n_nodes, graph_.job_edges, false));
  graphs_.push_back(make_csr(graph_.n_nodes, graph_.machine_edges, true));
  graphs_.push_back(make_csr(graph_.n_nodes, graph_.op_edges, true));
  feats_ = ad::Mat(graph_.n_nodes, 15, fjsp::state_features(inst, graph_));
}

std::vector<std::pair<int, int>> FjspPolicy::to_op_machine(
    const std::vector<std::int32_t>& actions) const {
  std::vector<std::pair<int, int>> seq;
  seq.reserve(actions.size());
  for (auto a : actions)
    seq.emplace_back(graph_.node_op[std::size_t(a)], graph_.node_machine[std::size_t(a)]);
  return seq;
}

template <class E>
ad::Value FjspPolicy::run(E& eng, int rollouts,
                          const std::vector<std::vector<std::int32_t>>* replay,
                          std::vector<Solution>* out, const RolloutBatchSpec* spec) {
  const fjsp::Instance& inst = *inst_;
  const fjsp::Graph& g = graph_;
  const int N = g.n_nodes;
  const int J = inst.n_jobs;
  const int M = inst.n_machines;
  const int horizon = inst.n_ops();
  const int R = rollouts;

  ad::Value emb = model_->encode(eng, *ps_, feats_, graphs_);
  auto dstate = model_->template initial_state<E>(eng, R);

  // static per-rollout tilings
  std::vector<int> node_ids(std::size_t(R) * std::size_t(N));
  std::vector<int> node_job_row(std::size_t(R) * std::size_t(N));
  std::vector<int> node_mach_row(std::size_t(R) * std::size_t(N));
  for (int r = 0; r < R; ++r)
    for (int v = 0; v < N; ++v) {
      node_ids[std::size_t(r * N + v)] = v;
      node_job_row[std::size_t(r * N + v)] = r * J + inst.ops[std::size_t(g.node_op[std::size_t(v)])].job;
      node_mach_row[std::size_t(r * N + v)] = r * M + g.node_machine[std::size_t(v)];
    }
  ad::Value emb_rows = eng.gather_rows(emb, node_ids);

  std::vector<fjsp::ScheduleState> states(std::size_t(R), fjsp::ScheduleState(inst));
  std::vector<Rng> rngs;
  if (!replay) {
    for (int i = 0; i < spec->n_sampled; ++i)
      rngs.emplace_back(derive_seed(spec->base_seed, std::uint64_t(i)));
  }
  std::vector<std::vector<std::int32_t>> acts(std::size_t(R));
  std::vector<int> prev_node(std::size_t(R), -1);
  ad::Value total;

  for (int step = 0; step < horizon; ++step) {
    ad::Value prev_emb = step == 0 ? eng.input(ad::Mat(R, model_->config().emb_dim()))
                                   : eng.gather_rows(emb, prev_node);
    ad::Value q = model_->decode_query(eng, *ps_, dstate, prev_emb);

    ad::Mat jctx(R * J, 5);
    ad::Mat mctx(R * M, 5);
    std::vector<std::uint8_t> mask(std::size_t(R) * std::size_t(N), 0);
    for (int r = 0; r < R; ++r) {
      const auto jc = fjsp::job_context_features(states[std::size_t(r)]);
      const auto mc = fjsp::machine_context_features(states[std::size_t(r)]);
      std::memcpy(jctx.data() + std::size_t(r) * std::size_t(J) * 5, jc.data(),
                  jc.size() * sizeof(double));
      std::memcpy(mctx.data() + std::size_t(r) * std::size_t(M) * 5, mc.data(),
                  mc.size() * sizeof(double));
      for (int j = 0; j < J; ++j) {
        const int pos = states[std::size_t(r)].next_pos[std::size_t(j)];
        if (pos >= inst.job_op_count[std::size_t(j)]) continue;
        const int op = inst.op_id(j, pos);
        for (int v = g.op_first_node[std::size_t(op)]; v < g.op_first_node[std::size_t(op) + 1]; ++v)
          mask[std::size_t(r * N + v)] = 1;
      }
    }
    ad::Value keys = model_->fjsp_keys(eng, *ps_, jctx, mctx, node_job_row, node_mach_row, emb_rows);
    ad::Value logits = eng.rowblock_dot(q, keys, N);

    std::vector<int> chosen(std::size_t(R), 0);
    if (replay) {
      for (int r = 0; r < R; ++r) chosen[std::size_t(r)] = (*replay)[std::size_t(r)][std::size_t(step)];
      ad::Value picked = eng.masked_log_softmax_pick(logits, mask, chosen);
      total = step == 0 ? picked : eng.add(total, picked);
    } else {
      const ad::Mat probs = ad::fwd::masked_softmax_rows(eng.value(logits), mask);
      for (int r = 0; r < R; ++r) {
        chosen[std::size_t(r)] = r < spec->n_greedy
                                     ? argmax_feasible(probs, r, mask)
                                     : sample_row(probs, r, rngs[std::size_t(r - spec->n_greedy)]);
      }
    }
    for (int r = 0; r < R; ++r) {
      const int v = chosen[std::size_t(r)];
      prev_node[std::size_t(r)] = v;
      fjsp::apply_action(states[std::size_t(r)], g.node_op[std::size_t(v)],
                         g.node_machine[std::size_t(v)]);
      acts[std::size_t(r)].push_back(v);
    }
  }

  if (out) {
    out->clear();
    for (int r = 0; r < R; ++r) {
      Solution s;
      s.actions = std::move(acts[std::size_t(r)]);
      s.objective = states[std::size_t(r)].partial_makespan;
      s.origin = (!replay && r < spec->n_greedy) ? Origin::greedy : Origin::sampled;
      out->push_back(std::move(s));
    }
  }
  if (replay) return eng.scale(total, 1.0 / double(horizon));
  return {};
}

std::vector<Solution> FjspPolicy::rollout(const RolloutBatchSpec& spec) {
  ad::PlainEval eng;
  std::vector<Solution> out;
  run(eng, spec.n_greedy + spec.n_sampled, nullptr, &out, &spec);
  return out;
}

ad::Value FjspPolicy::replay_avg_logliks(ad::Tape& t,
                                         const std::vector<std::vector<std::int32_t>>& actions) {
  return run(t, int(actions.size()), &actions, nullptr, nullptr);
}

std::vector<double> FjspPolicy::replay_avg_logliks_plain(
    const std::vector<std::vector<std::int32_t>>& actions) {
  ad::PlainEval eng;
  ad::Value v = run(eng, int(actions.size()), &actions, nullptr, nullptr);
  return eng.value(v).a;
}

}  // namespace bopo::model
