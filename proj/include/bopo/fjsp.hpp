#pragma once

#include <string>
#include <vector>

#include "bopo/core.hpp"
#include "bopo/rng.hpp"

namespace bopo::fjsp {

// Flexible job shop: jobs own ordered operations; each operation runs on one
// of its candidate machines with a machine-specific time.
struct Operation {
  int job = 0;
  int pos = 0;                 // position within the job
  std::vector<int> machines;   // candidate machine ids
  std::vector<int> times;      // aligned with machines, >= 1
  double avg_time = 0.0;
};

struct Instance {
  int n_jobs = 0;
  int n_machines = 0;
  std::vector<Operation> ops;           // grouped by job, job-order within group
  std::vector<int> job_first_op;        // index into ops per job
  std::vector<int> job_op_count;

  int n_ops() const { return int(ops.size()); }
  int op_id(int job, int pos) const { return job_first_op[size_t(job)] + pos; }
  void rebuild_index();                 // fills job_first_op/job_op_count/avg_time
};

// Graph over (operation, machine) nodes. node_op/node_machine map node id to
// its pair; op_first_node gives each operation's contiguous node range.
struct Graph {
  int n_nodes = 0;
  std::vector<int> node_op;
  std::vector<int> node_machine;        // machine id (global)
  std::vector<int> node_machine_slot;   // index into op.machines
  std::vector<int> op_first_node;       // size n_ops + 1
  std::vector<std::pair<int, int>> job_edges;   // directed, consecutive ops (all node pairs)
  std::vector<std::pair<int, int>> machine_edges;  // undirected, same machine, a < b
  std::vector<std::pair<int, int>> op_edges;       // undirected, same operation, a < b
};

Graph build_graph(const Instance& inst);

struct ScheduleState {
  const Instance* inst = nullptr;
  int step = 0;
  std::vector<int> next_pos;            // pending position per job
  std::vector<double> machine_ready;
  std::vector<double> job_ready;
  double partial_makespan = 0.0;

  explicit ScheduleState(const Instance& i)
      : inst(&i),
        next_pos(size_t(i.n_jobs), 0),
        machine_ready(size_t(i.n_machines), 0.0),
        job_ready(size_t(i.n_jobs), 0.0) {}

  bool done() const { return step == inst->n_ops(); }
};

// Mask over graph nodes: true iff the node's operation is its job's pending
// operation.
std::vector<bool> feasible_actions(const ScheduleState& state, const Graph& graph);

void apply_action(ScheduleState& state, int op, int machine);

// Actions encode (op, machine slot): action = op * max_slots + slot.
// Replay uses explicit pairs instead.
double makespan(const Instance& inst, const std::vector<std::pair<int, int>>& op_machine_seq);

// 15 features per graph node, mirroring the JSP state features with the
// node's machine-specific time and job statistics over average times.
std::vector<double> state_features(const Instance& inst, const Graph& graph);

// 5 features per job and 5 per machine.
std::vector<double> job_context_features(const ScheduleState& state);
std::vector<double> machine_context_features(const ScheduleState& state);

enum class Flavor { e_data, r_data, v_data };

// .fjs layout: "n m" header, then per job: op count, then per op: candidate
// count followed by (machine, time) pairs with 1-based machine ids.
Instance parse_fjs(const std::string& text);
std::string emit_fjs(const Instance& inst);

// Ops per job uniform in [1, max_ops]; candidate-set size uniform in the
// flavor's range (e: 1-2, r: 1-3, v: 1-m); times uniform in [1, 99].
Instance generate(int n_jobs, int n_machines, int max_ops, Flavor flavor, Rng& rng);

}  // namespace bopo::fjsp
