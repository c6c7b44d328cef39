#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Problem-agnostic solution abstractions shared by all environments.

namespace bopo {

// Input text could not be parsed; line is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// The request is valid but outside what this build can do (e.g. exact
// solver size cap, unsupported file variant).
class CapabilityError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Origin : std::uint8_t { greedy, sampled };

// A completed construction: the action sequence and its cached objective.
struct Solution {
  std::vector<std::int32_t> actions;
  double objective = 0.0;  // makespan or tour length; > 0
  Origin origin = Origin::sampled;
};

// Solutions ordered by non-decreasing objective; ties keep the order of the
// original sample index, so sorting is deterministic given the input.
struct SortedSolutionSet {
  std::vector<Solution> solutions;
  std::vector<int> sample_index;  // original position of solutions[i]
};

struct PreferencePair {
  Solution winner;
  Solution loser;  // winner.objective < loser.objective, strictly
};

// (obj - ref) / ref * 100
double gap_percent(double obj, double ref_obj);

SortedSolutionSet sort_solutions(const std::vector<Solution>& set);

}  // namespace bopo
