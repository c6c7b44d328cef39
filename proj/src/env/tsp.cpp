#include "bopo/tsp.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <sstream>

namespace bopo::tsp {

double tour_length(const Instance& inst, const std::vector<int>& order) {
  const int n = inst.n();
  if (int(order.size()) != n) throw std::domain_error("tour_length: order size != n");
  std::vector<bool> seen(size_t(n), false);
  for (int v : order) {
    if (v < 0 || v >= n || seen[size_t(v)]) throw std::domain_error("tour_length: not a permutation");
    seen[size_t(v)] = true;
  }
  double len = 0.0;
  for (int i = 0; i < n; ++i) len += inst.dist(order[size_t(i)], order[size_t((i + 1) % n)]);
  return len;
}

void construct_step(ConstructState& state, int node) {
  if (node < 0 || node >= state.inst->n() || state.visited[size_t(node)])
    throw std::domain_error("construct_step: node already visited");
  state.order.push_back(node);
  state.visited[size_t(node)] = true;
}

std::array<Instance, 8> augment_8(const Instance& inst) {
  std::array<Instance, 8> out;
  for (int t = 0; t < 8; ++t) {
    Instance& a = out[size_t(t)];
    a.xs.resize(size_t(inst.n()));
    a.ys.resize(size_t(inst.n()));
    for (int i = 0; i < inst.n(); ++i) {
      double x = inst.xs[size_t(i)], y = inst.ys[size_t(i)];
      if (t & 1) x = 1.0 - x;
      if (t & 2) y = 1.0 - y;
      if (t & 4) std::swap(x, y);
      a.xs[size_t(i)] = x;
      a.ys[size_t(i)] = y;
    }
  }
  return out;
}

Tour exact_tsp(const Instance& inst) {
  const int n = inst.n();
  if (n > 20) throw CapabilityError("exact_tsp: n > 20 exceeds the DP size cap");
  if (n == 2) return {{0, 1}, tour_length(inst, {0, 1})};

  // Fix node 0 as the start; states are subsets of {1..n-1} x last node.
  const int m = n - 1;
  const std::size_t n_masks = std::size_t(1) << m;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(n_masks * std::size_t(m), inf);
  std::vector<std::uint8_t> parent(n_masks * std::size_t(m), 0);

  for (int j = 0; j < m; ++j)
    dp[(std::size_t(1) << j) * std::size_t(m) + std::size_t(j)] = inst.dist(0, j + 1);

  for (std::size_t mask = 1; mask < n_masks; ++mask) {
    for (int last = 0; last < m; ++last) {
      if (!(mask & (std::size_t(1) << last))) continue;
      const double cur = dp[mask * std::size_t(m) + std::size_t(last)];
      if (cur == inf) continue;
      for (int nxt = 0; nxt < m; ++nxt) {
        if (mask & (std::size_t(1) << nxt)) continue;
        const std::size_t nmask = mask | (std::size_t(1) << nxt);
        double cand = cur + inst.dist(last + 1, nxt + 1);
        double& slot = dp[nmask * std::size_t(m) + std::size_t(nxt)];
        if (cand < slot) {
          slot = cand;
          parent[nmask * std::size_t(m) + std::size_t(nxt)] = std::uint8_t(last);
        }
      }
    }
  }

  const std::size_t full = n_masks - 1;
  int best_last = 0;
  double best = inf;
  for (int last = 0; last < m; ++last) {
    double cand = dp[full * std::size_t(m) + std::size_t(last)] + inst.dist(last + 1, 0);
    if (cand < best) {
      best = cand;
      best_last = last;
    }
  }

  Tour tour;
  tour.length = best;
  tour.order.assign(size_t(n), 0);
  std::size_t mask = full;
  int last = best_last;
  for (int i = n - 1; i >= 1; --i) {
    tour.order[size_t(i)] = last + 1;
    const int prev = parent[mask * std::size_t(m) + std::size_t(last)];
    mask ^= std::size_t(1) << last;
    last = mask ? prev : 0;
  }
  return tour;
}

Tour two_opt_reference(const Instance& inst, std::uint64_t seed) {
  const int n = inst.n();
  Rng rng(seed);
  // nearest-neighbour start (node 0); the seed only breaks exact distance ties
  std::vector<int> order;
  std::vector<bool> used(size_t(n), false);
  int cur = 0;
  order.push_back(0);
  used[0] = true;
  for (int k = 1; k < n; ++k) {
    int best = -1;
    double bd = 0.0;
    int ties = 0;
    for (int j = 0; j < n; ++j) {
      if (used[size_t(j)]) continue;
      double d = inst.dist(cur, j);
      if (best < 0 || d < bd) {
        best = j;
        bd = d;
        ties = 1;
      } else if (d == bd && rng.uniform_int(0, ties++) == 0) {
        best = j;
      }
    }
    order.push_back(best);
    used[size_t(best)] = true;
    cur = best;
  }

  // 2-opt: reverse segments while an improving move exists
  bool improved = true;
  while (improved) {
    improved = false;
    for (int i = 0; i + 1 < n; ++i) {
      for (int j = i + 2; j < n; ++j) {
        if (i == 0 && j == n - 1) continue;  // same edge pair
        const int a = order[size_t(i)], b = order[size_t(i + 1)];
        const int c = order[size_t(j)], d = order[size_t((j + 1) % n)];
        const double delta =
            inst.dist(a, c) + inst.dist(b, d) - inst.dist(a, b) - inst.dist(c, d);
        if (delta < -1e-12) {
          std::reverse(order.begin() + i + 1, order.begin() + j + 1);
          improved = true;
        }
      }
    }
  }
  return {order, tour_length(inst, order)};
}

Instance parse_tsplib(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  int dimension = -1;
  bool saw_type = false, saw_ewt = false, in_coords = false;
  Instance inst;

  while (std::getline(in, line)) {
    ++lineno;
    std::string t = line;
    // strip comments are not part of tsplib; just trim whitespace
    auto b = t.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = t.find_last_not_of(" \t\r");
    t = t.substr(b, e - b + 1);
    if (t == "EOF") break;

    if (!in_coords) {
      auto colon = t.find(':');
      std::string key = colon == std::string::npos ? t : t.substr(0, t.find_first_of(" \t:"));
      auto val_of = [&]() {
        std::string v = t.substr(colon + 1);
        auto vb = v.find_first_not_of(" \t");
        return vb == std::string::npos ? std::string() : v.substr(vb);
      };
      if (key == "TYPE") {
        saw_type = true;
        if (val_of() != "TSP") throw CapabilityError("tsplib: only TYPE: TSP is supported");
      } else if (key == "EDGE_WEIGHT_TYPE") {
        saw_ewt = true;
        if (val_of() != "EUC_2D")
          throw CapabilityError("tsplib: only EDGE_WEIGHT_TYPE: EUC_2D is supported");
      } else if (key == "DIMENSION") {
        dimension = std::atoi(val_of().c_str());
        if (dimension < 2) throw ParseError("DIMENSION must be >= 2", lineno);
      } else if (t == "NODE_COORD_SECTION") {
        if (!saw_type || !saw_ewt || dimension < 0)
          throw ParseError("NODE_COORD_SECTION before TYPE/EDGE_WEIGHT_TYPE/DIMENSION", lineno);
        in_coords = true;
      }
      continue;
    }

    std::istringstream ls(t);
    int id;
    double x, y;
    if (!(ls >> id >> x >> y)) throw ParseError("expected \"id x y\"", lineno);
    inst.xs.push_back(x);
    inst.ys.push_back(y);
  }

  if (!in_coords) throw ParseError("missing NODE_COORD_SECTION", lineno);
  if (dimension != inst.n()) throw ParseError("DIMENSION does not match coordinate count", lineno);
  return inst;
}

std::string emit_tsplib(const Instance& inst, const std::string& name) {
  std::ostringstream out;
  out.precision(17);
  out << "NAME : " << name << "\n"
      << "TYPE : TSP\n"
      << "DIMENSION : " << inst.n() << "\n"
      << "EDGE_WEIGHT_TYPE : EUC_2D\n"
      << "NODE_COORD_SECTION\n";
  for (int i = 0; i < inst.n(); ++i)
    out << (i + 1) << ' ' << inst.xs[size_t(i)] << ' ' << inst.ys[size_t(i)] << '\n';
  out << "EOF\n";
  return out.str();
}

Instance generate(int n, Rng& rng) {
  Instance inst;
  inst.xs.resize(size_t(n));
  inst.ys.resize(size_t(n));
  for (int i = 0; i < n; ++i) {
    inst.xs[size_t(i)] = rng.uniform();
    inst.ys[size_t(i)] = rng.uniform();
  }
  return inst;
}

}  // namespace bopo::tsp
