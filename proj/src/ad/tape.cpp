#include "bopo/tape.hpp"

#include <cmath>
#include <stdexcept>

#include "bopo/kernels.hpp"

namespace bopo::ad {

namespace {

void check_same(const Mat& a, const Mat& b, const char* op) {
  if (!a.same_shape(b)) throw std::domain_error(std::string(op) + ": shape mismatch");
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

namespace fwd {

Mat add(const Mat& a, const Mat& b) {
  check_same(a, b, "add");
  Mat o(a.rows, a.cols);
  kern::add(a.data(), b.data(), o.data(), a.size());
  return o;
}

Mat sub(const Mat& a, const Mat& b) {
  check_same(a, b, "sub");
  Mat o(a.rows, a.cols);
  kern::sub(a.data(), b.data(), o.data(), a.size());
  return o;
}

Mat mul(const Mat& a, const Mat& b) {
  check_same(a, b, "mul");
  Mat o(a.rows, a.cols);
  kern::mul(a.data(), b.data(), o.data(), a.size());
  return o;
}

Mat add_rowvec(const Mat& a, const Mat& v) {
  if (v.rows != 1 || v.cols != a.cols) throw std::domain_error("add_rowvec: shape mismatch");
  Mat o(a.rows, a.cols);
  for (int r = 0; r < a.rows; ++r)
    kern::add(a.data() + std::size_t(r) * std::size_t(a.cols), v.data(),
              o.data() + std::size_t(r) * std::size_t(a.cols), std::size_t(a.cols));
  return o;
}

Mat scale(const Mat& a, double c) {
  Mat o(a.rows, a.cols);
  kern::scale(a.data(), c, o.data(), a.size());
  return o;
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols != b.rows) throw std::domain_error("matmul: inner dimensions differ");
  Mat o(a.rows, b.cols);
  kern::matmul_nn(a.data(), b.data(), o.data(), std::size_t(a.rows), std::size_t(a.cols),
                  std::size_t(b.cols), false);
  return o;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols != b.cols) throw std::domain_error("matmul_nt: inner dimensions differ");
  Mat o(a.rows, b.rows);
  kern::matmul_nt(a.data(), b.data(), o.data(), std::size_t(a.rows), std::size_t(a.cols),
                  std::size_t(b.rows), false);
  return o;
}

Mat concat_cols(const Mat& a, const Mat& b) {
  if (a.rows != b.rows) throw std::domain_error("concat_cols: row counts differ");
  Mat o(a.rows, a.cols + b.cols);
  for (int r = 0; r < a.rows; ++r) {
    double* dst = o.data() + std::size_t(r) * std::size_t(o.cols);
    std::copy_n(a.data() + std::size_t(r) * std::size_t(a.cols), std::size_t(a.cols), dst);
    std::copy_n(b.data() + std::size_t(r) * std::size_t(b.cols), std::size_t(b.cols),
                dst + a.cols);
  }
  return o;
}

Mat slice_cols(const Mat& a, int c0, int c1) {
  if (c0 < 0 || c1 > a.cols || c0 >= c1) throw std::domain_error("slice_cols: bad range");
  Mat o(a.rows, c1 - c0);
  for (int r = 0; r < a.rows; ++r)
    std::copy_n(a.data() + std::size_t(r) * std::size_t(a.cols) + std::size_t(c0),
                std::size_t(c1 - c0), o.data() + std::size_t(r) * std::size_t(o.cols));
  return o;
}

Mat gather_rows(const Mat& a, const std::vector<int>& idx) {
  Mat o(int(idx.size()), a.cols);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= a.rows) throw std::domain_error("gather_rows: index out of range");
    std::copy_n(a.data() + std::size_t(idx[r]) * std::size_t(a.cols), std::size_t(a.cols),
                o.data() + r * std::size_t(a.cols));
  }
  return o;
}

Mat leaky_relu(const Mat& a, double slope) {
  Mat o(a.rows, a.cols);
  kern::leaky_relu(a.data(), slope, o.data(), a.size());
  return o;
}

Mat tanh_m(const Mat& a) {
  Mat o(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) o.a[i] = std::tanh(a.a[i]);
  return o;
}

Mat sigmoid_m(const Mat& a) {
  Mat o(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) o.a[i] = stable_sigmoid(a.a[i]);
  return o;
}

Mat log_m(const Mat& a) {
  Mat o(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) o.a[i] = std::log(a.a[i]);
  return o;
}

Mat softplus_m(const Mat& a) {
  Mat o(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) o.a[i] = stable_softplus(a.a[i]);
  return o;
}

Mat layer_norm_rows(const Mat& x, const Mat& gain, const Mat& bias, Mat* xhat_out) {
  if (gain.rows != 1 || gain.cols != x.cols || bias.rows != 1 || bias.cols != x.cols)
    throw std::domain_error("layer_norm_rows: gain/bias must be [1, cols]");
  constexpr double kEps = 1e-5;
  Mat o(x.rows, x.cols);
  if (xhat_out) *xhat_out = Mat(x.rows, x.cols + 1);  // last column stores 1/s per row
  for (int r = 0; r < x.rows; ++r) {
    const double* xr = x.data() + std::size_t(r) * std::size_t(x.cols);
    double mean = kern::sum(xr, std::size_t(x.cols)) / double(x.cols);
    double var = 0.0;
    for (int c = 0; c < x.cols; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= double(x.cols);
    const double inv_s = 1.0 / std::sqrt(var + kEps);
    for (int c = 0; c < x.cols; ++c) {
      const double xh = (xr[c] - mean) * inv_s;
      if (xhat_out) xhat_out->at(r, c) = xh;
      o.at(r, c) = xh * gain.at(0, c) + bias.at(0, c);
    }
    if (xhat_out) xhat_out->at(r, x.cols) = inv_s;
  }
  return o;
}

Mat segment_softmax(const Mat& logits, const std::vector<int>& offsets) {
  if (logits.cols != 1) throw std::domain_error("segment_softmax: logits must be [E,1]");
  if (offsets.empty() || offsets.back() != logits.rows)
    throw std::domain_error("segment_softmax: offsets do not cover logits");
  Mat o(logits.rows, 1);
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    const int lo = offsets[s], hi = offsets[s + 1];
    if (lo == hi) continue;
    double mx = logits.at(lo, 0);
    for (int e = lo + 1; e < hi; ++e) mx = std::max(mx, logits.at(e, 0));
    double z = 0.0;
    for (int e = lo; e < hi; ++e) z += (o.at(e, 0) = std::exp(logits.at(e, 0) - mx));
    for (int e = lo; e < hi; ++e) o.at(e, 0) /= z;
  }
  return o;
}

Mat segment_weighted_sum(const Mat& values, const Mat& weights, const std::vector<int>& offsets,
                         int nseg) {
  if (weights.cols != 1 || weights.rows != values.rows)
    throw std::domain_error("segment_weighted_sum: weights must be [E,1]");
  if (int(offsets.size()) != nseg + 1 || offsets.back() != values.rows)
    throw std::domain_error("segment_weighted_sum: bad offsets");
  Mat o(nseg, values.cols);
  for (int s = 0; s < nseg; ++s)
    for (int e = offsets[std::size_t(s)]; e < offsets[std::size_t(s) + 1]; ++e)
      kern::axpy(weights.at(e, 0), values.data() + std::size_t(e) * std::size_t(values.cols),
                 o.data() + std::size_t(s) * std::size_t(o.cols), std::size_t(values.cols));
  return o;
}

Mat rowblock_dot(const Mat& q, const Mat& k, int block) {
  if (k.rows != q.rows * block || k.cols != q.cols)
    throw std::domain_error("rowblock_dot: k must be [rows*block, cols]");
  Mat o(q.rows, block);
  for (int r = 0; r < q.rows; ++r)
    for (int j = 0; j < block; ++j)
      o.at(r, j) = kern::dot(q.data() + std::size_t(r) * std::size_t(q.cols),
                             k.data() + std::size_t(r * block + j) * std::size_t(k.cols),
                             std::size_t(q.cols));
  return o;
}

Mat masked_softmax_rows(const Mat& logits, const std::vector<std::uint8_t>& mask) {
  if (mask.size() != logits.size()) throw std::domain_error("masked_softmax_rows: bad mask size");
  Mat o(logits.rows, logits.cols);
  for (int r = 0; r < logits.rows; ++r) {
    const std::size_t base = std::size_t(r) * std::size_t(logits.cols);
    double mx = 0.0;
    bool any = false;
    for (int c = 0; c < logits.cols; ++c)
      if (mask[base + std::size_t(c)]) {
        mx = any ? std::max(mx, logits.at(r, c)) : logits.at(r, c);
        any = true;
      }
    if (!any) throw std::domain_error("masked_softmax_rows: empty feasible set in a row");
    double z = 0.0;
    for (int c = 0; c < logits.cols; ++c)
      if (mask[base + std::size_t(c)]) z += (o.at(r, c) = std::exp(logits.at(r, c) - mx));
    for (int c = 0; c < logits.cols; ++c)
      if (mask[base + std::size_t(c)]) o.at(r, c) /= z;
  }
  return o;
}

Mat masked_log_softmax_pick(const Mat& logits, const std::vector<std::uint8_t>& mask,
                            const std::vector<int>& chosen) {
  if (mask.size() != logits.size()) throw std::domain_error("masked_log_softmax_pick: bad mask");
  if (int(chosen.size()) != logits.rows)
    throw std::domain_error("masked_log_softmax_pick: chosen size != rows");
  Mat o(logits.rows, 1);
  for (int r = 0; r < logits.rows; ++r) {
    const std::size_t base = std::size_t(r) * std::size_t(logits.cols);
    const int ch = chosen[std::size_t(r)];
    if (ch < 0 || ch >= logits.cols || !mask[base + std::size_t(ch)])
      throw std::domain_error("masked_log_softmax_pick: chosen action infeasible");
    double mx = 0.0;
    bool any = false;
    for (int c = 0; c < logits.cols; ++c)
      if (mask[base + std::size_t(c)]) {
        mx = any ? std::max(mx, logits.at(r, c)) : logits.at(r, c);
        any = true;
      }
    double z = 0.0;
    for (int c = 0; c < logits.cols; ++c)
      if (mask[base + std::size_t(c)]) z += std::exp(logits.at(r, c) - mx);
    o.at(r, 0) = logits.at(r, ch) - mx - std::log(z);
  }
  return o;
}

Mat sum_all(const Mat& a) { return Mat(1, 1, {kern::sum(a.data(), a.size())}); }

}  // namespace fwd

Value Tape::push(Mat val, std::function<void(Tape&)> bwd) {
  Node n;
  n.grad = Mat(val.rows, val.cols);
  n.val = std::move(val);
  n.bwd = std::move(bwd);
  live_bytes_ += n.val.size() * 2 * sizeof(double);
  peak_bytes_ = std::max(peak_bytes_, live_bytes_);
  nodes_.push_back(std::move(n));
  return Value{int(nodes_.size()) - 1};
}

Value Tape::input(Mat v) { return push(std::move(v), {}); }

Value Tape::param(ParameterSet& ps, const std::string& name) {
  const int slot = ps.index_of(name);
  Value v = push(ps.entry(slot).value, {});
  Node& n = nodes_[std::size_t(v.id)];
  n.ps = &ps;
  n.pslot = slot;
  return v;
}

Value Tape::add(Value a, Value b) {
  Mat o = fwd::add(value(a), value(b));
  return push(std::move(o), [a, b, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    kern::axpy(1.0, g.data(), t.grad_mut(a).data(), g.size());
    kern::axpy(1.0, g.data(), t.grad_mut(b).data(), g.size());
  });
}

Value Tape::sub(Value a, Value b) {
  Mat o = fwd::sub(value(a), value(b));
  return push(std::move(o), [a, b, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    kern::axpy(1.0, g.data(), t.grad_mut(a).data(), g.size());
    kern::axpy(-1.0, g.data(), t.grad_mut(b).data(), g.size());
  });
}

Value Tape::mul(Value a, Value b) {
  Mat o = fwd::mul(value(a), value(b));
  return push(std::move(o), [a, b, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& va = t.value(a);
    const Mat& vb = t.value(b);
    Mat& ga = t.grad_mut(a);
    Mat& gb = t.grad_mut(b);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.a[i] += g.a[i] * vb.a[i];
      gb.a[i] += g.a[i] * va.a[i];
    }
  });
}

Value Tape::add_rowvec(Value a, Value v) {
  Mat o = fwd::add_rowvec(value(a), value(v));
  return push(std::move(o), [a, v, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    kern::axpy(1.0, g.data(), t.grad_mut(a).data(), g.size());
    Mat& gv = t.grad_mut(v);
    for (int r = 0; r < g.rows; ++r)
      kern::axpy(1.0, g.data() + std::size_t(r) * std::size_t(g.cols), gv.data(),
                 std::size_t(g.cols));
  });
}

Value Tape::scale(Value a, double c) {
  Mat o = fwd::scale(value(a), c);
  return push(std::move(o), [a, c, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    kern::axpy(c, g.data(), t.grad_mut(a).data(), g.size());
  });
}

Value Tape::matmul(Value a, Value b) {
  Mat o = fwd::matmul(value(a), value(b));
  return push(std::move(o), [a, b, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& va = t.value(a);
    const Mat& vb = t.value(b);
    // da += g * b^T ; db += a^T * g
    kern::matmul_nt(g.data(), vb.data(), t.grad_mut(a).data(), std::size_t(g.rows),
                    std::size_t(g.cols), std::size_t(vb.rows), true);
    kern::matmul_tn(va.data(), g.data(), t.grad_mut(b).data(), std::size_t(va.cols),
                    std::size_t(va.rows), std::size_t(g.cols), true);
  });
}

Value Tape::matmul_nt(Value a, Value b) {
  Mat o = fwd::matmul_nt(value(a), value(b));
  return push(std::move(o), [a, b, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);  // [m, n]; a [m,k], b [n,k]
    const Mat& va = t.value(a);
    const Mat& vb = t.value(b);
    // da += g * b ; db += g^T * a
    kern::matmul_nn(g.data(), vb.data(), t.grad_mut(a).data(), std::size_t(g.rows),
                    std::size_t(g.cols), std::size_t(vb.cols), true);
    kern::matmul_tn(g.data(), va.data(), t.grad_mut(b).data(), std::size_t(g.cols),
                    std::size_t(g.rows), std::size_t(va.cols), true);
  });
}

Value Tape::concat_cols(Value a, Value b) {
  Mat o = fwd::concat_cols(value(a), value(b));
  return push(std::move(o), [a, b, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    Mat& ga = t.grad_mut(a);
    Mat& gb = t.grad_mut(b);
    for (int r = 0; r < g.rows; ++r) {
      const double* gr = g.data() + std::size_t(r) * std::size_t(g.cols);
      kern::axpy(1.0, gr, ga.data() + std::size_t(r) * std::size_t(ga.cols),
                 std::size_t(ga.cols));
      kern::axpy(1.0, gr + ga.cols, gb.data() + std::size_t(r) * std::size_t(gb.cols),
                 std::size_t(gb.cols));
    }
  });
}

Value Tape::slice_cols(Value a, int c0, int c1) {
  Mat o = fwd::slice_cols(value(a), c0, c1);
  return push(std::move(o), [a, c0, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    Mat& ga = t.grad_mut(a);
    for (int r = 0; r < g.rows; ++r)
      kern::axpy(1.0, g.data() + std::size_t(r) * std::size_t(g.cols),
                 ga.data() + std::size_t(r) * std::size_t(ga.cols) + std::size_t(c0),
                 std::size_t(g.cols));
  });
}

Value Tape::gather_rows(Value a, std::vector<int> idx) {
  Mat o = fwd::gather_rows(value(a), idx);
  return push(std::move(o), [a, idx = std::move(idx), out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    Mat& ga = t.grad_mut(a);
    for (std::size_t r = 0; r < idx.size(); ++r)
      kern::axpy(1.0, g.data() + r * std::size_t(g.cols),
                 ga.data() + std::size_t(idx[r]) * std::size_t(ga.cols), std::size_t(g.cols));
  });
}

Value Tape::leaky_relu(Value a, double slope) {
  Mat o = fwd::leaky_relu(value(a), slope);
  return push(std::move(o), [a, slope, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    kern::leaky_relu_bwd(t.value(a).data(), g.data(), slope, t.grad_mut(a).data(), g.size());
  });
}

Value Tape::tanh_(Value a) {
  Mat o = fwd::tanh_m(value(a));
  return push(std::move(o), [a, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& y = t.value(out);
    Mat& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.a[i] += g.a[i] * (1.0 - y.a[i] * y.a[i]);
  });
}

Value Tape::sigmoid_(Value a) {
  Mat o = fwd::sigmoid_m(value(a));
  return push(std::move(o), [a, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& y = t.value(out);
    Mat& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.a[i] += g.a[i] * y.a[i] * (1.0 - y.a[i]);
  });
}

Value Tape::log_(Value a) {
  Mat o = fwd::log_m(value(a));
  return push(std::move(o), [a, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& x = t.value(a);
    Mat& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.a[i] += g.a[i] / x.a[i];
  });
}

Value Tape::softplus(Value a) {
  Mat o = fwd::softplus_m(value(a));
  return push(std::move(o), [a, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& x = t.value(a);
    Mat& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.a[i] += g.a[i] * stable_sigmoid(x.a[i]);
  });
}

Value Tape::layer_norm_rows(Value x, Value gain, Value bias) {
  Mat xhat;
  Mat o = fwd::layer_norm_rows(value(x), value(gain), value(bias), &xhat);
  return push(std::move(o), [x, gain, bias, xh = std::move(xhat), out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& vg = t.value(gain);
    Mat& gx = t.grad_mut(x);
    Mat& ggain = t.grad_mut(gain);
    Mat& gbias = t.grad_mut(bias);
    const int n = g.cols;
    for (int r = 0; r < g.rows; ++r) {
      const double inv_s = xh.at(r, n);
      double mean_u = 0.0, mean_ux = 0.0;
      for (int c = 0; c < n; ++c) {
        const double u = g.at(r, c) * vg.at(0, c);
        mean_u += u;
        mean_ux += u * xh.at(r, c);
      }
      mean_u /= double(n);
      mean_ux /= double(n);
      for (int c = 0; c < n; ++c) {
        const double u = g.at(r, c) * vg.at(0, c);
        gx.at(r, c) += (u - mean_u - xh.at(r, c) * mean_ux) * inv_s;
        ggain.at(0, c) += g.at(r, c) * xh.at(r, c);
        gbias.at(0, c) += g.at(r, c);
      }
    }
  });
}

Value Tape::segment_softmax(Value logits, std::vector<int> offsets) {
  Mat o = fwd::segment_softmax(value(logits), offsets);
  return push(std::move(o), [logits, off = std::move(offsets), out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& w = t.value(out);
    Mat& gl = t.grad_mut(logits);
    for (std::size_t s = 0; s + 1 < off.size(); ++s) {
      double dotp = 0.0;
      for (int e = off[s]; e < off[s + 1]; ++e) dotp += g.at(e, 0) * w.at(e, 0);
      for (int e = off[s]; e < off[s + 1]; ++e)
        gl.at(e, 0) += w.at(e, 0) * (g.at(e, 0) - dotp);
    }
  });
}

Value Tape::segment_weighted_sum(Value values, Value weights, std::vector<int> offsets, int nseg) {
  Mat o = fwd::segment_weighted_sum(value(values), value(weights), offsets, nseg);
  return push(std::move(o),
              [values, weights, off = std::move(offsets), nseg, out = Value{size()}](Tape& t) {
                const Mat& g = t.grad(out);
                const Mat& v = t.value(values);
                const Mat& w = t.value(weights);
                Mat& gv = t.grad_mut(values);
                Mat& gw = t.grad_mut(weights);
                const std::size_t d = std::size_t(v.cols);
                for (int s = 0; s < nseg; ++s) {
                  const double* gs = g.data() + std::size_t(s) * d;
                  for (int e = off[std::size_t(s)]; e < off[std::size_t(s) + 1]; ++e) {
                    kern::axpy(w.at(e, 0), gs, gv.data() + std::size_t(e) * d, d);
                    gw.at(e, 0) += kern::dot(v.data() + std::size_t(e) * d, gs, d);
                  }
                }
              });
}

Value Tape::rowblock_dot(Value q, Value k, int block) {
  Mat o = fwd::rowblock_dot(value(q), value(k), block);
  return push(std::move(o), [q, k, block, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& vq = t.value(q);
    const Mat& vk = t.value(k);
    Mat& gq = t.grad_mut(q);
    Mat& gk = t.grad_mut(k);
    const std::size_t d = std::size_t(vq.cols);
    for (int r = 0; r < vq.rows; ++r) {
      for (int j = 0; j < block; ++j) {
        const double gr = g.at(r, j);
        if (gr == 0.0) continue;
        const std::size_t row = std::size_t(r * block + j);
        kern::axpy(gr, vk.data() + row * d, gq.data() + std::size_t(r) * d, d);
        kern::axpy(gr, vq.data() + std::size_t(r) * d, gk.data() + row * d, d);
      }
    }
  });
}

Value Tape::masked_softmax_rows(Value logits, std::vector<std::uint8_t> mask) {
  Mat o = fwd::masked_softmax_rows(value(logits), mask);
  return push(std::move(o), [logits, out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& p = t.value(out);
    Mat& gl = t.grad_mut(logits);
    for (int r = 0; r < g.rows; ++r) {
      double dotp = 0.0;
      for (int c = 0; c < g.cols; ++c) dotp += g.at(r, c) * p.at(r, c);
      for (int c = 0; c < g.cols; ++c) gl.at(r, c) += p.at(r, c) * (g.at(r, c) - dotp);
    }
  });
}

Value Tape::masked_log_softmax_pick(Value logits, std::vector<std::uint8_t> mask,
                                    std::vector<int> chosen) {
  Mat probs = fwd::masked_softmax_rows(value(logits), mask);
  Mat o = fwd::masked_log_softmax_pick(value(logits), mask, chosen);
  return push(std::move(o), [logits, p = std::move(probs), ch = std::move(chosen),
                             out = Value{size()}](Tape& t) {
    const Mat& g = t.grad(out);
    Mat& gl = t.grad_mut(logits);
    for (int r = 0; r < p.rows; ++r) {
      const double gr = g.at(r, 0);
      if (gr == 0.0) continue;
      for (int c = 0; c < p.cols; ++c) gl.at(r, c) -= gr * p.at(r, c);
      gl.at(r, ch[std::size_t(r)]) += gr;
    }
  });
}

Value Tape::sum_all(Value a) {
  Mat o = fwd::sum_all(value(a));
  return push(std::move(o), [a, out = Value{size()}](Tape& t) {
    const double g = t.grad(out).at(0, 0);
    Mat& ga = t.grad_mut(a);
    for (auto& x : ga.a) x += g;
  });
}

Value Tape::mean_all(Value a) { return scale(sum_all(a), 1.0 / double(value(a).size())); }

Value Tape::pick(Value a, int r, int c) {
  if (r < 0 || r >= value(a).rows || c < 0 || c >= value(a).cols)
    throw std::domain_error("pick: index out of range");
  Mat o(1, 1, {value(a).at(r, c)});
  return push(std::move(o), [a, r, c, out = Value{size()}](Tape& t) {
    t.grad_mut(a).at(r, c) += t.grad(out).at(0, 0);
  });
}

Value Tape::add_scalars(const std::vector<Value>& xs) {
  if (xs.empty()) throw std::domain_error("add_scalars: empty input");
  double s = 0.0;
  for (Value v : xs) s += value(v).at(0, 0);
  return push(Mat(1, 1, {s}), [xs, out = Value{size()}](Tape& t) {
    const double g = t.grad(out).at(0, 0);
    for (Value v : xs) t.grad_mut(v).at(0, 0) += g;
  });
}

void Tape::backward(Value root) {
  if (!root.valid() || root.id >= size()) throw std::domain_error("backward: invalid root");
  if (value(root).size() != 1) throw std::domain_error("backward: root must be a scalar");
  grad_mut(root).at(0, 0) = 1.0;
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[std::size_t(id)];
    if (n.bwd) n.bwd(*this);
    if (n.ps)
      kern::axpy(1.0, n.grad.data(), n.ps->entry(n.pslot).grad.data(), n.grad.size());
  }
}

void Tape::clear() {
  nodes_.clear();
  live_bytes_ = 0;
}

}  // namespace bopo::ad
