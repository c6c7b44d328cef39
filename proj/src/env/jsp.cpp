#include "bopo/jsp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bopo::jsp {

DisjunctiveGraph build_graph(const Instance& inst) {
  DisjunctiveGraph g;
  g.n_nodes = inst.n_ops();
  for (int j = 0; j < inst.n_jobs; ++j)
    for (int p = 0; p + 1 < inst.n_machines; ++p)
      g.conjunctive.emplace_back(inst.op_id(j, p), inst.op_id(j, p + 1));
  std::vector<std::vector<int>> by_machine(size_t(inst.n_machines));
  for (int op = 0; op < inst.n_ops(); ++op) by_machine[size_t(inst.machine[size_t(op)])].push_back(op);
  for (const auto& ops : by_machine)
    for (size_t a = 0; a < ops.size(); ++a)
      for (size_t b = a + 1; b < ops.size(); ++b) g.disjunctive.emplace_back(ops[a], ops[b]);
  return g;
}

std::vector<bool> feasible_actions(const ScheduleState& state) {
  if (state.done()) throw std::domain_error("feasible_actions: terminal state");
  std::vector<bool> mask(size_t(state.inst->n_jobs));
  for (int j = 0; j < state.inst->n_jobs; ++j)
    mask[size_t(j)] = state.next_op[size_t(j)] < state.inst->n_machines;
  return mask;
}

void apply_action(ScheduleState& state, int job) {
  const Instance& inst = *state.inst;
  if (job < 0 || job >= inst.n_jobs || state.next_op[size_t(job)] >= inst.n_machines)
    throw std::domain_error("apply_action: job has no pending operation");
  const int op = inst.op_id(job, state.next_op[size_t(job)]);
  const int mach = inst.machine[size_t(op)];
  const double start = std::max(state.machine_ready[size_t(mach)], state.job_ready[size_t(job)]);
  const double end = start + inst.proc_time[size_t(op)];
  state.op_start[size_t(op)] = start;
  state.machine_ready[size_t(mach)] = end;
  state.job_ready[size_t(job)] = end;
  state.partial_makespan = std::max(state.partial_makespan, end);
  state.next_op[size_t(job)] += 1;
  state.step += 1;
}

double makespan(const Instance& inst, const std::vector<std::int32_t>& actions) {
  if (int(actions.size()) != inst.n_ops())
    throw std::domain_error("makespan: action count != n*m");
  std::vector<int> count(size_t(inst.n_jobs), 0);
  for (auto a : actions) {
    if (a < 0 || a >= inst.n_jobs) throw std::domain_error("makespan: job index out of range");
    if (++count[size_t(a)] > inst.n_machines)
      throw std::domain_error("makespan: job appears more than m times");
  }
  ScheduleState st(inst);
  for (auto a : actions) apply_action(st, a);
  return st.partial_makespan;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const size_t n = sorted.size();
  if (n == 0) throw std::domain_error("quantile of empty set");
  if (n == 1) return sorted[0];
  const double h = p * double(n - 1);
  const size_t lo = size_t(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - double(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

// Q1,Q2,Q3 of an unsorted sample.
std::array<double, 3> quartiles(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return {quantile_sorted(v, 0.25), quantile_sorted(v, 0.50), quantile_sorted(v, 0.75)};
}

}  // namespace

std::vector<double> state_features(const Instance& inst) {
  const int n_ops = inst.n_ops();
  std::vector<double> out(size_t(n_ops) * 15, 0.0);

  std::vector<std::array<double, 3>> job_q(size_t(inst.n_jobs));
  std::vector<double> job_total(size_t(inst.n_jobs), 0.0);
  for (int j = 0; j < inst.n_jobs; ++j) {
    std::vector<double> times;
    for (int p = 0; p < inst.n_machines; ++p) {
      double t = inst.proc_time[size_t(inst.op_id(j, p))];
      times.push_back(t);
      job_total[size_t(j)] += t;
    }
    job_q[size_t(j)] = quartiles(times);
  }

  std::vector<std::array<double, 3>> mach_q(size_t(inst.n_machines));
  {
    std::vector<std::vector<double>> per_mach(size_t(inst.n_machines));
    for (int op = 0; op < n_ops; ++op)
      per_mach[size_t(inst.machine[size_t(op)])].push_back(inst.proc_time[size_t(op)]);
    for (int k = 0; k < inst.n_machines; ++k) mach_q[size_t(k)] = quartiles(per_mach[size_t(k)]);
  }

  for (int j = 0; j < inst.n_jobs; ++j) {
    double before = 0.0;
    for (int p = 0; p < inst.n_machines; ++p) {
      const int op = inst.op_id(j, p);
      const double t = inst.proc_time[size_t(op)];
      before += t;
      double* f = &out[size_t(op) * 15];
      f[0] = t;
      f[1] = before / job_total[size_t(j)];
      f[2] = (job_total[size_t(j)] - before) / job_total[size_t(j)];
      const auto& jq = job_q[size_t(j)];
      const auto& mq = mach_q[size_t(inst.machine[size_t(op)])];
      for (int q = 0; q < 3; ++q) {
        f[3 + q] = jq[size_t(q)];
        f[6 + q] = mq[size_t(q)];
        f[9 + q] = t - jq[size_t(q)];
        f[12 + q] = t - mq[size_t(q)];
      }
    }
  }
  return out;
}

std::vector<double> context_features(const ScheduleState& state) {
  const Instance& inst = *state.inst;
  const double denom = state.partial_makespan > 0.0 ? state.partial_makespan : 1.0;

  // completion time per job / per machine under the partial schedule
  const std::vector<double>& cj = state.job_ready;
  const std::vector<double>& cm = state.machine_ready;

  const double avg_job = std::accumulate(cj.begin(), cj.end(), 0.0) / double(inst.n_jobs);
  const double avg_mach = std::accumulate(cm.begin(), cm.end(), 0.0) / double(inst.n_machines);
  const auto jq = quartiles(cj);
  const auto mq = quartiles(cm);

  std::vector<double> out(size_t(inst.n_jobs) * 11, 0.0);
  for (int j = 0; j < inst.n_jobs; ++j) {
    double* f = &out[size_t(j) * 11];
    // machine required by the job's pending operation; exhausted jobs keep 0s
    int pos = state.next_op[size_t(j)];
    double cmach = 0.0;
    if (pos < inst.n_machines) cmach = cm[size_t(inst.machine[size_t(inst.op_id(j, pos))])];
    const double c = cj[size_t(j)];
    f[0] = c - cmach;
    f[1] = c / denom;
    f[2] = c - avg_job;
    for (int q = 0; q < 3; ++q) f[3 + q] = c - jq[size_t(q)];
    f[6] = cmach / denom;
    f[7] = cmach - avg_mach;
    for (int q = 0; q < 3; ++q) f[8 + q] = cmach - mq[size_t(q)];
  }
  return out;
}

Solution pdr_schedule(const Instance& inst, Pdr rule) {
  ScheduleState st(inst);
  Solution sol;
  sol.origin = Origin::greedy;
  std::vector<double> remaining_work(size_t(inst.n_jobs), 0.0);
  std::vector<int> remaining_ops(size_t(inst.n_jobs), inst.n_machines);
  for (int op = 0; op < inst.n_ops(); ++op)
    remaining_work[size_t(inst.job_of(op))] += inst.proc_time[size_t(op)];

  while (!st.done()) {
    int best = -1;
    double best_key = 0.0;
    for (int j = 0; j < inst.n_jobs; ++j) {
      if (st.next_op[size_t(j)] >= inst.n_machines) continue;
      double key = 0.0;
      switch (rule) {
        case Pdr::spt:
          key = -double(inst.proc_time[size_t(inst.op_id(j, st.next_op[size_t(j)]))]);
          break;
        case Pdr::mor:
          key = double(remaining_ops[size_t(j)]);
          break;
        case Pdr::mwr:
          key = remaining_work[size_t(j)];
          break;
      }
      if (best < 0 || key > best_key) {  // ties keep the lowest job index
        best = j;
        best_key = key;
      }
    }
    const int op = inst.op_id(best, st.next_op[size_t(best)]);
    remaining_work[size_t(best)] -= inst.proc_time[size_t(op)];
    remaining_ops[size_t(best)] -= 1;
    apply_action(st, best);
    sol.actions.push_back(best);
  }
  sol.objective = st.partial_makespan;
  return sol;
}

Instance parse_taillard(const std::string& text) {
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
  }
  inst.machine.assign(size_t(inst.n_ops()), 0);
  inst.proc_time.assign(size_t(inst.n_ops()), 0);
  for (int j = 0; j < inst.n_jobs; ++j) {
    if (!next_line()) throw ParseError("missing job line", lineno + 1);
    std::istringstream ls(line);
    for (int p = 0; p < inst.n_machines; ++p) {
      int mach = 0, t = 0;
      if (!(ls >> mach >> t)) throw ParseError("expected (machine time) pair", lineno);
      if (mach < 0 || mach >= inst.n_machines)
        throw ParseError("machine index out of range", lineno);
      if (t < 1) throw ParseError("processing time must be >= 1", lineno);
      inst.machine[size_t(inst.op_id(j, p))] = mach;
      inst.proc_time[size_t(inst.op_id(j, p))] = t;
    }
    int extra;
    if (ls >> extra) throw ParseError("trailing tokens on job line", lineno);
  }
  // standard JSP: each machine once per job
  for (int j = 0; j < inst.n_jobs; ++j) {
    std::vector<bool> seen(size_t(inst.n_machines), false);
    for (int p = 0; p < inst.n_machines; ++p) {
      int mach = inst.machine[size_t(inst.op_id(j, p))];
      if (seen[size_t(mach)]) throw ParseError("job visits machine twice", lineno);
      seen[size_t(mach)] = true;
    }
  }
  return inst;
}

std::string emit_taillard(const Instance& inst) {
  std::ostringstream out;
  out << inst.n_jobs << ' ' << inst.n_machines << '\n';
  for (int j = 0; j < inst.n_jobs; ++j) {
    for (int p = 0; p < inst.n_machines; ++p) {
      const int op = inst.op_id(j, p);
      if (p) out << ' ';
      out << inst.machine[size_t(op)] << ' ' << inst.proc_time[size_t(op)];
    }
    out << '\n';
  }
  return out.str();
}

Instance generate(int n_jobs, int n_machines, Rng& rng) {
  Instance inst;
  inst.n_jobs = n_jobs;
  inst.n_machines = n_machines;
  inst.machine.resize(size_t(inst.n_ops()));
  inst.proc_time.resize(size_t(inst.n_ops()));
  std::vector<int> perm(size_t(n_machines));
  for (int j = 0; j < n_jobs; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<int>(perm));
    for (int p = 0; p < n_machines; ++p) {
      inst.machine[size_t(inst.op_id(j, p))] = perm[size_t(p)];
      inst.proc_time[size_t(inst.op_id(j, p))] = int(rng.uniform_int(1, 99));
    }
  }
  return inst;
}

}  // namespace bopo::jsp
