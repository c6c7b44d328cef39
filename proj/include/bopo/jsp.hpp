#pragma once

#include <string>
#include <vector>

#include "bopo/core.hpp"
#include "bopo/rng.hpp"

namespace bopo::jsp {

// Standard job shop: n jobs, m machines, each job visits every machine
// exactly once. Operation id = job * m + position-in-job.
struct Instance {
  int n_jobs = 0;
  int n_machines = 0;
  std::vector<int> machine;     // per operation
  std::vector<int> proc_time;   // per operation, >= 1

  int n_ops() const { return n_jobs * n_machines; }
  int op_id(int job, int pos) const { return job * n_machines + pos; }
  int job_of(int op) const { return op / n_machines; }
  int pos_of(int op) const { return op % n_machines; }
};

// Node set = operations; conjunctive arcs are the job-precedence chains,
// disjunctive links pair operations sharing a machine.
struct DisjunctiveGraph {
  int n_nodes = 0;
  std::vector<std::pair<int, int>> conjunctive;  // directed (from, to)
  std::vector<std::pair<int, int>> disjunctive;  // undirected, from < to
};

DisjunctiveGraph build_graph(const Instance& inst);

// Mutable partial schedule. Single owner per rollout.
struct ScheduleState {
  const Instance* inst = nullptr;
  int step = 0;
  std::vector<int> next_op;          // pending position per job; m = exhausted
  std::vector<double> machine_ready; // earliest free time per machine
  std::vector<double> job_ready;     // completion of each job's last scheduled op
  std::vector<double> op_start;      // per operation, -1 if unscheduled
  double partial_makespan = 0.0;

  explicit ScheduleState(const Instance& i)
      : inst(&i),
        next_op(size_t(i.n_jobs), 0),
        machine_ready(size_t(i.n_machines), 0.0),
        job_ready(size_t(i.n_jobs), 0.0),
        op_start(size_t(i.n_ops()), -1.0) {}

  bool done() const { return step == inst->n_ops(); }
};

// Mask over jobs: true iff the job still has pending operations.
std::vector<bool> feasible_actions(const ScheduleState& state);

// Schedule the pending operation of `job` at max(machine ready, job ready).
void apply_action(ScheduleState& state, int job);

// Replay a complete job sequence; validates multiplicities.
double makespan(const Instance& inst, const std::vector<std::int32_t>& actions);

// Static per-operation features, 15 per node (see feature indices below).
//  0: processing time
//  1: fraction of the job's total time completed up to and including this op
//  2: fraction of the job's total time after this op
//  3-5:  Q1,Q2,Q3 of processing times within the job
//  6-8:  Q1,Q2,Q3 of processing times on the op's machine
//  9-11: proc time minus features 3-5
// 12-14: proc time minus features 6-8
std::vector<double> state_features(const Instance& inst);  // row-major [n_ops, 15]

// Per-job context features, 11 per job, row-major [n_jobs, 11]. Computed for
// every job; only assignable jobs are consumed downstream. Divisions by the
// partial makespan use denominator 1 before anything is scheduled.
std::vector<double> context_features(const ScheduleState& state);

enum class Pdr { spt, mor, mwr };

Solution pdr_schedule(const Instance& inst, Pdr rule);

// Text format: header "n m", then n lines of m "(machine time)" pairs with
// 0-based machine indices.
Instance parse_taillard(const std::string& text);
std::string emit_taillard(const Instance& inst);

// Random machine permutation per job; times uniform in [1, 99].
Instance generate(int n_jobs, int n_machines, Rng& rng);

// Linear interpolation between order statistics at p in [0,1].
double quantile_sorted(const std::vector<double>& sorted, double p);

}  // namespace bopo::jsp
