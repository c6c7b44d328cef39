#include "bopo/fjsp.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <sstream>

#include "bopo/jsp.hpp"  // quantile_sorted

namespace bopo::fjsp {

void Instance::rebuild_index() {
  job_first_op.assign(size_t(n_jobs), 0);
  job_op_count.assign(size_t(n_jobs), 0);
  for (size_t i = 0; i < ops.size(); ++i) job_op_count[size_t(ops[i].job)] += 1;
  int acc = 0;
  for (int j = 0; j < n_jobs; ++j) {
    job_first_op[size_t(j)] = acc;
    acc += job_op_count[size_t(j)];
  }
  for (auto& op : ops) {
    op.avg_time = 0.0;
    for (int t : op.times) op.avg_time += t;
    op.avg_time /= double(op.times.size());
  }
}

Graph build_graph(const Instance& inst) {
  Graph g;
  g.op_first_node.assign(size_t(inst.n_ops()) + 1, 0);
  for (int o = 0; o < inst.n_ops(); ++o) {
    g.op_first_node[size_t(o)] = g.n_nodes;
    const auto& op = inst.ops[size_t(o)];
    for (size_t s = 0; s < op.machines.size(); ++s) {
      g.node_op.push_back(o);
      g.node_machine.push_back(op.machines[s]);
      g.node_machine_slot.push_back(int(s));
      ++g.n_nodes;
    }
  }
  g.op_first_node[size_t(inst.n_ops())] = g.n_nodes;

  for (int j = 0; j < inst.n_jobs; ++j) {
    for (int p = 0; p + 1 < inst.job_op_count[size_t(j)]; ++p) {
      const int a = inst.op_id(j, p), b = inst.op_id(j, p + 1);
      for (int u = g.op_first_node[size_t(a)]; u < g.op_first_node[size_t(a) + 1]; ++u)
        for (int v = g.op_first_node[size_t(b)]; v < g.op_first_node[size_t(b) + 1]; ++v)
          g.job_edges.emplace_back(u, v);
    }
  }

  std::vector<std::vector<int>> by_machine(size_t(inst.n_machines));
  for (int v = 0; v < g.n_nodes; ++v) by_machine[size_t(g.node_machine[size_t(v)])].push_back(v);
  for (const auto& nodes : by_machine)
    for (size_t a = 0; a < nodes.size(); ++a)
      for (size_t b = a + 1; b < nodes.size(); ++b) g.machine_edges.emplace_back(nodes[a], nodes[b]);

  for (int o = 0; o < inst.n_ops(); ++o)
    for (int u = g.op_first_node[size_t(o)]; u < g.op_first_node[size_t(o) + 1]; ++u)
      for (int v = u + 1; v < g.op_first_node[size_t(o) + 1]; ++v) g.op_edges.emplace_back(u, v);

  return g;
}

std::vector<bool> feasible_actions(const ScheduleState& state, const Graph& graph) {
  if (state.done()) throw std::domain_error("feasible_actions: terminal state");
  const Instance& inst = *state.inst;
  std::vector<bool> mask(size_t(graph.n_nodes), false);
  for (int j = 0; j < inst.n_jobs; ++j) {
    if (state.next_pos[size_t(j)] >= inst.job_op_count[size_t(j)]) continue;
    const int op = inst.op_id(j, state.next_pos[size_t(j)]);
    for (int v = graph.op_first_node[size_t(op)]; v < graph.op_first_node[size_t(op) + 1]; ++v)
      mask[size_t(v)] = true;
  }
  return mask;
}

void apply_action(ScheduleState& state, int op, int machine) {
  const Instance& inst = *state.inst;
  if (op < 0 || op >= inst.n_ops()) throw std::domain_error("apply_action: bad operation");
  const Operation& o = inst.ops[size_t(op)];
  if (state.next_pos[size_t(o.job)] != o.pos)
    throw std::domain_error("apply_action: operation is not its job's pending one");
  int slot = -1;
  for (size_t s = 0; s < o.machines.size(); ++s)
    if (o.machines[s] == machine) slot = int(s);
  if (slot < 0) throw std::domain_error("apply_action: machine is not a candidate");
  const double start = std::max(state.machine_ready[size_t(machine)], state.job_ready[size_t(o.job)]);
  const double end = start + o.times[size_t(slot)];
  state.machine_ready[size_t(machine)] = end;
  state.job_ready[size_t(o.job)] = end;
  state.partial_makespan = std::max(state.partial_makespan, end);
  state.next_pos[size_t(o.job)] += 1;
  state.step += 1;
}

double makespan(const Instance& inst, const std::vector<std::pair<int, int>>& seq) {
  if (int(seq.size()) != inst.n_ops()) throw std::domain_error("makespan: wrong action count");
  ScheduleState st(inst);
  for (auto [op, mach] : seq) apply_action(st, op, mach);
  return st.partial_makespan;
}

namespace {

std::array<double, 3> quartiles(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return {jsp::quantile_sorted(v, 0.25), jsp::quantile_sorted(v, 0.50),
          jsp::quantile_sorted(v, 0.75)};
}

}  // namespace

std::vector<double> state_features(const Instance& inst, const Graph& graph) {
  std::vector<double> job_total(size_t(inst.n_jobs), 0.0);
  std::vector<std::array<double, 3>> job_q(size_t(inst.n_jobs));
  for (int j = 0; j < inst.n_jobs; ++j) {
    std::vector<double> avg;
    for (int p = 0; p < inst.job_op_count[size_t(j)]; ++p) {
      const double t = inst.ops[size_t(inst.op_id(j, p))].avg_time;
      avg.push_back(t);
      job_total[size_t(j)] += t;
    }
    job_q[size_t(j)] = quartiles(avg);
  }

  // machine statistics over node-specific times
  std::vector<std::array<double, 3>> mach_q(size_t(inst.n_machines), {0.0, 0.0, 0.0});
  {
    std::vector<std::vector<double>> per_mach(size_t(inst.n_machines));
    for (int v = 0; v < graph.n_nodes; ++v) {
      const auto& op = inst.ops[size_t(graph.node_op[size_t(v)])];
      per_mach[size_t(graph.node_machine[size_t(v)])].push_back(
          op.times[size_t(graph.node_machine_slot[size_t(v)])]);
    }
    for (int k = 0; k < inst.n_machines; ++k)
      if (!per_mach[size_t(k)].empty()) mach_q[size_t(k)] = quartiles(per_mach[size_t(k)]);
  }

  // per-job prefix of average times, inclusive
  std::vector<double> prefix(size_t(inst.n_ops()), 0.0);
  for (int j = 0; j < inst.n_jobs; ++j) {
    double acc = 0.0;
    for (int p = 0; p < inst.job_op_count[size_t(j)]; ++p) {
      acc += inst.ops[size_t(inst.op_id(j, p))].avg_time;
      prefix[size_t(inst.op_id(j, p))] = acc;
    }
  }

  std::vector<double> out(size_t(graph.n_nodes) * 15, 0.0);
  for (int v = 0; v < graph.n_nodes; ++v) {
    const int o = graph.node_op[size_t(v)];
    const auto& op = inst.ops[size_t(o)];
    const double t_node = op.times[size_t(graph.node_machine_slot[size_t(v)])];
    const double t_avg = op.avg_time;
    const double total = job_total[size_t(op.job)];
    double* f = &out[size_t(v) * 15];
    f[0] = t_node;
    f[1] = prefix[size_t(o)] / total;
    f[2] = (total - prefix[size_t(o)]) / total;
    const auto& jq = job_q[size_t(op.job)];
    const auto& mq = mach_q[size_t(graph.node_machine[size_t(v)])];
    for (int q = 0; q < 3; ++q) {
      f[3 + q] = jq[size_t(q)];
      f[6 + q] = mq[size_t(q)];
      f[9 + q] = t_avg - jq[size_t(q)];
      f[12 + q] = t_avg - mq[size_t(q)];
    }
  }
  return out;
}

std::vector<double> job_context_features(const ScheduleState& state) {
  const Instance& inst = *state.inst;
  const double denom = state.partial_makespan > 0.0 ? state.partial_makespan : 1.0;
  const auto& cj = state.job_ready;
  const double avg = std::accumulate(cj.begin(), cj.end(), 0.0) / double(inst.n_jobs);
  const auto q = quartiles(cj);
  std::vector<double> out(size_t(inst.n_jobs) * 5, 0.0);
  for (int j = 0; j < inst.n_jobs; ++j) {
    double* f = &out[size_t(j) * 5];
    f[0] = cj[size_t(j)] / denom;
    f[1] = cj[size_t(j)] - avg;
    for (int k = 0; k < 3; ++k) f[2 + k] = cj[size_t(j)] - q[size_t(k)];
  }
  return out;
}

std::vector<double> machine_context_features(const ScheduleState& state) {
  const Instance& inst = *state.inst;
  const double denom = state.partial_makespan > 0.0 ? state.partial_makespan : 1.0;
  const auto& cm = state.machine_ready;
  const double avg = std::accumulate(cm.begin(), cm.end(), 0.0) / double(inst.n_machines);
  const auto q = quartiles(cm);
  std::vector<double> out(size_t(inst.n_machines) * 5, 0.0);
  for (int k = 0; k < inst.n_machines; ++k) {
    double* f = &out[size_t(k) * 5];
    f[0] = cm[size_t(k)] / denom;
    f[1] = cm[size_t(k)] - avg;
    for (int t = 0; t < 3; ++t) f[2 + t] = cm[size_t(k)] - q[size_t(t)];
  }
  return out;
}

Instance parse_fjs(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r\n") != std::string::npos) return true;
    }
    return false;
  };

  if (!next_line()) throw ParseError("missing header", 1);
  Instance inst;
  {
    std::istringstream hs(line);
    if (!(hs >> inst.n_jobs >> inst.n_machines) || inst.n_jobs < 1 || inst.n_machines < 1)
      throw ParseError("expected header \"n m\"", lineno);
    // some published files append an average-flexibility value; ignore it
  }
  for (int j = 0; j < inst.n_jobs; ++j) {
    if (!next_line()) throw ParseError("missing job line", lineno + 1);
    std::istringstream ls(line);
    int op_count = 0;
    if (!(ls >> op_count) || op_count < 1) throw ParseError("expected operation count", lineno);
    for (int p = 0; p < op_count; ++p) {
      int cand = 0;
      if (!(ls >> cand) || cand < 1) throw ParseError("expected candidate count", lineno);
      Operation op;
      op.job = j;
      op.pos = p;
      for (int c = 0; c < cand; ++c) {
        int mach = 0, t = 0;
        if (!(ls >> mach >> t)) throw ParseError("expected (machine time) pair", lineno);
        if (mach < 1 || mach > inst.n_machines)
          throw ParseError("machine index out of range", lineno);
        if (t < 1) throw ParseError("processing time must be >= 1", lineno);
        op.machines.push_back(mach - 1);
        op.times.push_back(t);
      }
      inst.ops.push_back(std::move(op));
    }
    int extra;
    if (ls >> extra) throw ParseError("trailing tokens on job line", lineno);
  }
  inst.rebuild_index();
  return inst;
}

std::string emit_fjs(const Instance& inst) {
  std::ostringstream out;
  out << inst.n_jobs << ' ' << inst.n_machines << '\n';
  for (int j = 0; j < inst.n_jobs; ++j) {
    out << inst.job_op_count[size_t(j)];
    for (int p = 0; p < inst.job_op_count[size_t(j)]; ++p) {
      const auto& op = inst.ops[size_t(inst.op_id(j, p))];
      out << ' ' << op.machines.size();
      for (size_t c = 0; c < op.machines.size(); ++c)
        out << ' ' << (op.machines[c] + 1) << ' ' << op.times[c];
    }
    out << '\n';
  }
  return out.str();
}

Instance generate(int n_jobs, int n_machines, int max_ops, Flavor flavor, Rng& rng) {
  Instance inst;
  inst.n_jobs = n_jobs;
  inst.n_machines = n_machines;
  int max_cand = 0;
  switch (flavor) {
    case Flavor::e_data: max_cand = std::min(2, n_machines); break;
    case Flavor::r_data: max_cand = std::min(3, n_machines); break;
    case Flavor::v_data: max_cand = n_machines; break;
  }
  std::vector<int> machines(size_t(n_machines));
  for (int j = 0; j < n_jobs; ++j) {
    const int n_ops = int(rng.uniform_int(1, max_ops));
    for (int p = 0; p < n_ops; ++p) {
      Operation op;
      op.job = j;
      op.pos = p;
      const int cand = int(rng.uniform_int(1, max_cand));
      std::iota(machines.begin(), machines.end(), 0);
      rng.shuffle(std::span<int>(machines));
      for (int c = 0; c < cand; ++c) {
        op.machines.push_back(machines[size_t(c)]);
        op.times.push_back(int(rng.uniform_int(1, 99)));
      }
      inst.ops.push_back(std::move(op));
    }
  }
  inst.rebuild_index();
  return inst;
}

}  // namespace bopo::fjsp
