#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bopo/params.hpp"

// Minimal reverse-mode differentiation over dense matrices, plus a
// gradient-free twin with the same interface. Model code is templated over
// the engine, so the rollout fast path and the differentiated replay path
// run the exact same forward math.

namespace bopo::ad {

struct Value {
  int id = -1;
  bool valid() const { return id >= 0; }
};

namespace fwd {
// Shared forward computations (both engines call these).
Mat add(const Mat&, const Mat&);
Mat sub(const Mat&, const Mat&);
Mat mul(const Mat&, const Mat&);
Mat add_rowvec(const Mat&, const Mat&);
Mat scale(const Mat&, double);
Mat matmul(const Mat&, const Mat&);
Mat matmul_nt(const Mat&, const Mat&);
Mat concat_cols(const Mat&, const Mat&);
Mat slice_cols(const Mat&, int c0, int c1);
Mat gather_rows(const Mat&, const std::vector<int>&);
Mat leaky_relu(const Mat&, double slope);
Mat tanh_m(const Mat&);
Mat sigmoid_m(const Mat&);
Mat log_m(const Mat&);
Mat softplus_m(const Mat&);
Mat layer_norm_rows(const Mat& x, const Mat& gain, const Mat& bias, Mat* xhat_out);
Mat segment_softmax(const Mat& logits, const std::vector<int>& offsets);
Mat segment_weighted_sum(const Mat& values, const Mat& weights, const std::vector<int>& offsets,
                         int nseg);
Mat rowblock_dot(const Mat& q, const Mat& k, int block);
Mat masked_softmax_rows(const Mat& logits, const std::vector<std::uint8_t>& mask);
Mat masked_log_softmax_pick(const Mat& logits, const std::vector<std::uint8_t>& mask,
                            const std::vector<int>& chosen);
Mat sum_all(const Mat&);
}  // namespace fwd

class Tape {
 public:
  using value_type = Value;

  Value input(Mat v);
  Value param(ParameterSet& ps, const std::string& name);

  Value add(Value, Value);
  Value sub(Value, Value);
  Value mul(Value, Value);
  Value add_rowvec(Value, Value);
  Value scale(Value, double);
  Value matmul(Value, Value);
  Value matmul_nt(Value, Value);
  Value concat_cols(Value, Value);
  Value slice_cols(Value, int c0, int c1);
  Value gather_rows(Value, std::vector<int> idx);
  Value leaky_relu(Value, double slope);
  Value relu(Value v) { return leaky_relu(v, 0.0); }
  Value tanh_(Value);
  Value sigmoid_(Value);
  Value log_(Value);
  Value softplus(Value);
  Value layer_norm_rows(Value x, Value gain, Value bias);
  Value segment_softmax(Value logits, std::vector<int> offsets);
  Value segment_weighted_sum(Value values, Value weights, std::vector<int> offsets, int nseg);
  Value rowblock_dot(Value q, Value k, int block);
  Value masked_softmax_rows(Value logits, std::vector<std::uint8_t> mask);
  Value masked_log_softmax_pick(Value logits, std::vector<std::uint8_t> mask,
                                std::vector<int> chosen);
  Value sum_all(Value);
  Value mean_all(Value);
  Value pick(Value, int r, int c);
  Value add_scalars(const std::vector<Value>&);

  const Mat& value(Value v) const { return nodes_[std::size_t(v.id)].val; }
  const Mat& grad(Value v) const { return nodes_[std::size_t(v.id)].grad; }

  // Accumulates parameter gradients into the bound ParameterSet entries.
  // `root` must be 1x1.
  void backward(Value root);

  void clear();
  int size() const { return int(nodes_.size()); }
  std::size_t live_bytes() const { return live_bytes_; }
  std::size_t peak_bytes() const { return peak_bytes_; }

 private:
  struct Node {
    Mat val;
    Mat grad;
    std::function<void(Tape&)> bwd;  // empty for constant leaves
    ParameterSet* ps = nullptr;
    int pslot = -1;
  };

  Value push(Mat val, std::function<void(Tape&)> bwd);
  Mat& grad_mut(Value v) { return nodes_[std::size_t(v.id)].grad; }

  std::vector<Node> nodes_;
  std::size_t live_bytes_ = 0;
  std::size_t peak_bytes_ = 0;
};

// Same interface, no gradients. Used for rollouts and reference replays.
class PlainEval {
 public:
  using value_type = Value;

  Value input(Mat v) { return push(std::move(v)); }
  Value param(ParameterSet& ps, const std::string& name) { return push(ps.value(name)); }

  Value add(Value a, Value b) { return push(fwd::add(val(a), val(b))); }
  Value sub(Value a, Value b) { return push(fwd::sub(val(a), val(b))); }
  Value mul(Value a, Value b) { return push(fwd::mul(val(a), val(b))); }
  Value add_rowvec(Value a, Value b) { return push(fwd::add_rowvec(val(a), val(b))); }
  Value scale(Value a, double c) { return push(fwd::scale(val(a), c)); }
  Value matmul(Value a, Value b) { return push(fwd::matmul(val(a), val(b))); }
  Value matmul_nt(Value a, Value b) { return push(fwd::matmul_nt(val(a), val(b))); }
  Value concat_cols(Value a, Value b) { return push(fwd::concat_cols(val(a), val(b))); }
  Value slice_cols(Value a, int c0, int c1) { return push(fwd::slice_cols(val(a), c0, c1)); }
  Value gather_rows(Value a, std::vector<int> idx) { return push(fwd::gather_rows(val(a), idx)); }
  Value leaky_relu(Value a, double s) { return push(fwd::leaky_relu(val(a), s)); }
  Value relu(Value a) { return leaky_relu(a, 0.0); }
  Value tanh_(Value a) { return push(fwd::tanh_m(val(a))); }
  Value sigmoid_(Value a) { return push(fwd::sigmoid_m(val(a))); }
  Value log_(Value a) { return push(fwd::log_m(val(a))); }
  Value softplus(Value a) { return push(fwd::softplus_m(val(a))); }
  Value layer_norm_rows(Value x, Value g, Value b) {
    return push(fwd::layer_norm_rows(val(x), val(g), val(b), nullptr));
  }
  Value segment_softmax(Value l, std::vector<int> off) {
    return push(fwd::segment_softmax(val(l), off));
  }
  Value segment_weighted_sum(Value v, Value w, std::vector<int> off, int nseg) {
    return push(fwd::segment_weighted_sum(val(v), val(w), off, nseg));
  }
  Value rowblock_dot(Value q, Value k, int block) {
    return push(fwd::rowblock_dot(val(q), val(k), block));
  }
  Value masked_softmax_rows(Value l, std::vector<std::uint8_t> mask) {
    return push(fwd::masked_softmax_rows(val(l), mask));
  }
  Value masked_log_softmax_pick(Value l, std::vector<std::uint8_t> mask, std::vector<int> chosen) {
    return push(fwd::masked_log_softmax_pick(val(l), mask, chosen));
  }
  Value sum_all(Value a) { return push(fwd::sum_all(val(a))); }
  Value mean_all(Value a) {
    return push(fwd::scale(fwd::sum_all(val(a)), 1.0 / double(val(a).size())));
  }
  Value pick(Value a, int r, int c) { return push(Mat(1, 1, {val(a).at(r, c)})); }
  Value add_scalars(const std::vector<Value>& xs) {
    double s = 0.0;
    for (Value v : xs) s += val(v).at(0, 0);
    return push(Mat(1, 1, {s}));
  }

  const Mat& value(Value v) const { return vals_[std::size_t(v.id)]; }
  void clear() { vals_.clear(); }

 private:
  const Mat& val(Value v) const { return vals_[std::size_t(v.id)]; }
  Value push(Mat m) {
    vals_.push_back(std::move(m));
    return Value{int(vals_.size()) - 1};
  }
  std::vector<Mat> vals_;
};

}  // namespace bopo::ad
