#include "bopo/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace bopo::ad {

int ParameterSet::create(const std::string& name, int rows, int cols, Rng& rng) {
  const int idx = create_zeros(name, rows, cols);
  const double bound = 1.0 / std::sqrt(double(rows));  // rows = fan_in for x*W layouts
  Mat& v = entries_[std::size_t(idx)].value;
  for (auto& w : v.a) w = (rng.uniform() * 2.0 - 1.0) * bound;
  return idx;
}

int ParameterSet::create_zeros(const std::string& name, int rows, int cols) {
  if (by_name_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  Entry e;
  e.name = name;
  e.value = Mat(rows, cols);
  e.grad = Mat(rows, cols);
  e.m1 = Mat(rows, cols);
  e.m2 = Mat(rows, cols);
  entries_.push_back(std::move(e));
  by_name_[name] = int(entries_.size()) - 1;
  return int(entries_.size()) - 1;
}

int ParameterSet::create_const(const std::string& name, int rows, int cols, double fill) {
  const int idx = create_zeros(name, rows, cols);
  for (auto& w : entries_[std::size_t(idx)].value.a) w = fill;
  return idx;
}

int ParameterSet::index_of(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) std::fill(e.grad.a.begin(), e.grad.a.end(), 0.0);
}

bool ParameterSet::all_finite() const {
  for (const auto& e : entries_)
    for (double w : e.value.a)
      if (!std::isfinite(w)) return false;
  return true;
}

void ParameterSet::adam_step(double lr, double beta1, double beta2, double eps) {
  adam_t_ += 1;
  const double c1 = 1.0 - std::pow(beta1, double(adam_t_));
  const double c2 = 1.0 - std::pow(beta2, double(adam_t_));
  for (auto& e : entries_) {
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double g = e.grad.a[i];
      e.m1.a[i] = beta1 * e.m1.a[i] + (1.0 - beta1) * g;
      e.m2.a[i] = beta2 * e.m2.a[i] + (1.0 - beta2) * g * g;
      const double mhat = e.m1.a[i] / c1;
      const double vhat = e.m2.a[i] / c2;
      e.value.a[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

constexpr char kMagic[8] = {'B', 'O', 'P', 'O', 'C', 'K', 'P', '1'};

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void get(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
}

}  // namespace

void save_checkpoint(const ParameterSet& ps, const std::string& config_json,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  put(out, fnv1a64(config_json));
  put(out, std::uint64_t(config_json.size()));
  out.write(config_json.data(), std::streamsize(config_json.size()));
  put(out, std::uint64_t(ps.count()));
  for (int i = 0; i < ps.count(); ++i) {
    const auto& e = ps.entry(i);
    put(out, std::uint64_t(e.name.size()));
    out.write(e.name.data(), std::streamsize(e.name.size()));
    put(out, std::int64_t(e.value.rows));
    put(out, std::int64_t(e.value.cols));
    out.write(reinterpret_cast<const char*>(e.value.data()),
              std::streamsize(e.value.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

std::string peek_checkpoint_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  std::uint64_t hash = 0, len = 0;
  get(in, hash);
  get(in, len);
  std::string cfg(len, '\0');
  in.read(cfg.data(), std::streamsize(len));
  if (!in) throw std::runtime_error("checkpoint: truncated config in " + path);
  if (fnv1a64(cfg) != hash) throw std::runtime_error("checkpoint: config hash mismatch");
  return cfg;
}

std::string load_checkpoint(ParameterSet& ps, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  std::uint64_t hash = 0, len = 0;
  get(in, hash);
  get(in, len);
  std::string cfg(len, '\0');
  in.read(cfg.data(), std::streamsize(len));
  if (!in || fnv1a64(cfg) != hash) throw std::runtime_error("checkpoint: config hash mismatch");

  std::uint64_t count = 0;
  get(in, count);
  if (count != std::uint64_t(ps.count()))
    throw std::runtime_error("checkpoint: parameter count mismatch");
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t name_len = 0;
    get(in, name_len);
    std::string name(name_len, '\0');
    in.read(name.data(), std::streamsize(name_len));
    std::int64_t rows = 0, cols = 0;
    get(in, rows);
    get(in, cols);
    if (!ps.contains(name)) throw std::runtime_error("checkpoint: unexpected parameter " + name);
    Mat& v = ps.value(name);
    if (v.rows != rows || v.cols != cols)
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    in.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated data for " + name);
  }
  return cfg;
}

}  // namespace bopo::ad
