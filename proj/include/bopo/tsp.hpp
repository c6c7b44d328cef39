#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bopo/core.hpp"
#include "bopo/rng.hpp"

namespace bopo::tsp {

struct Instance {
  std::vector<double> xs;  // n >= 2
  std::vector<double> ys;

  int n() const { return int(xs.size()); }
  double dist(int a, int b) const {
    const double dx = xs[size_t(a)] - xs[size_t(b)];
    const double dy = ys[size_t(a)] - ys[size_t(b)];
    return std::sqrt(dx * dx + dy * dy);
  }
};

struct Tour {
  std::vector<int> order;  // permutation of 0..n-1
  double length = 0.0;
};

// Euclidean cycle length including the closing edge. Throws if `order` is
// not a permutation.
double tour_length(const Instance& inst, const std::vector<int>& order);

// Step-wise construction state.
struct ConstructState {
  const Instance* inst = nullptr;
  std::vector<int> order;
  std::vector<bool> visited;

  explicit ConstructState(const Instance& i) : inst(&i), visited(size_t(i.n()), false) {
    order.reserve(size_t(i.n()));
  }
  bool done() const { return int(order.size()) == inst->n(); }
  int first() const { return order.front(); }
  int last() const { return order.back(); }
};

void construct_step(ConstructState& state, int node);

// The 8 isometries of the unit square applied to the coordinates; index 0 is
// the identity. Every tour keeps its length under each transform.
std::array<Instance, 8> augment_8(const Instance& inst);

// Exact optimum by bitmask dynamic programming; n <= 20.
Tour exact_tsp(const Instance& inst);

// Nearest-neighbour start from node 0, then 2-opt to a local optimum.
Tour two_opt_reference(const Instance& inst, std::uint64_t seed);

// EUC_2D subset of the TSPLIB format.
Instance parse_tsplib(const std::string& text);
std::string emit_tsplib(const Instance& inst, const std::string& name = "generated");

// n i.i.d. points uniform on the unit square.
Instance generate(int n, Rng& rng);

}  // namespace bopo::tsp
