#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "bopo/rng.hpp"

namespace bopo::ad {

// Row-major dense matrix of doubles. Vectors are [1,n] or [n,1].
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(std::size_t(r) * std::size_t(c), 0.0) {}
  Mat(int r, int c, std::vector<double> data) : rows(r), cols(c), a(std::move(data)) {
    if (a.size() != std::size_t(r) * std::size_t(c)) throw std::invalid_argument("Mat: bad data size");
  }

  double& at(int r, int c) { return a[std::size_t(r) * std::size_t(cols) + std::size_t(c)]; }
  double at(int r, int c) const { return a[std::size_t(r) * std::size_t(cols) + std::size_t(c)]; }
  std::size_t size() const { return a.size(); }
  double* data() { return a.data(); }
  const double* data() const { return a.data(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// All learnable weights as named dense arrays, each with a gradient buffer
// of the same shape plus Adam moment accumulators.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Mat value;
    Mat grad;
    Mat m1, m2;  // Adam moments
  };

  // Creates a parameter initialized uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
  int create(const std::string& name, int rows, int cols, Rng& rng);
  int create_zeros(const std::string& name, int rows, int cols);
  int create_const(const std::string& name, int rows, int cols, double fill);

  int index_of(const std::string& name) const;
  bool contains(const std::string& name) const { return by_name_.count(name) != 0; }
  Entry& entry(int i) { return entries_[std::size_t(i)]; }
  const Entry& entry(int i) const { return entries_[std::size_t(i)]; }
  Mat& value(const std::string& name) { return entries_[std::size_t(index_of(name))].value; }
  const Mat& value(const std::string& name) const {
    return entries_[std::size_t(index_of(name))].value;
  }
  int count() const { return int(entries_.size()); }
  std::size_t scalar_count() const;

  void zero_grad();
  bool all_finite() const;

  // One adaptive-moment update; increments the internal step counter.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  std::int64_t adam_steps() const { return adam_t_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> by_name_;
  std::int64_t adam_t_ = 0;
};

// Versioned checkpoint container: named arrays plus a config hash; loading
// verifies the hash and every shape.
void save_checkpoint(const ParameterSet& ps, const std::string& config_json,
                     const std::string& path);
// Returns the stored config json. `ps` must already contain identically
// shaped parameters (built from the same config).
std::string load_checkpoint(ParameterSet& ps, const std::string& path);
// Reads only the embedded config json.
std::string peek_checkpoint_config(const std::string& path);

std::uint64_t fnv1a64(const std::string& s);

}  // namespace bopo::ad
