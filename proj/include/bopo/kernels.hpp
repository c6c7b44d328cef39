#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision array kernels used by the tensor engine.
// A scalar reference backend and an AVX2 backend are selected at runtime;
// set BOPO_KERNEL_BACKEND=scalar|avx2 to override the autodetected choice.
//
// Element-wise kernels and matmul_nn keep the scalar accumulation order in
// the vectorized backend, so their results are bit-identical across
// backends. matmul_nt / matmul_tn / sum / dot vectorize the reduction and
// may differ from the scalar backend in the last bits.

namespace bopo::kern {

struct Backend {
  const char* name;

  // out[i] = a[i] op b[i]
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // out[i] = a[i] * c
  void (*scale)(const double* a, double c, double* out, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[i] = a[i] > 0 ? a[i] : slope * a[i]
  void (*leaky_relu)(const double* a, double slope, double* out, std::size_t n);
  // gin[i] += gout[i] * (x[i] > 0 ? 1 : slope)
  void (*leaky_relu_bwd)(const double* x, const double* gout, double slope,
                         double* gin, std::size_t n);

  // C (+)= A[m,k] * B[k,n]
  void (*matmul_nn)(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t k, std::size_t n, bool accumulate);
  // C (+)= A[m,k] * B[n,k]^T
  void (*matmul_nt)(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t k, std::size_t n, bool accumulate);
  // C (+)= A[k,m]^T * B[k,n]
  void (*matmul_tn)(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t k, std::size_t n, bool accumulate);

  double (*sum)(const double* a, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*max)(const double* a, std::size_t n);  // n >= 1
};

const Backend& scalar_backend();
bool avx2_available();
const Backend& avx2_backend();  // valid only if avx2_available()

const Backend& active();
void set_backend(std::string_view name);  // "scalar" or "avx2"

inline void add(const double* a, const double* b, double* o, std::size_t n) { active().add(a, b, o, n); }
inline void sub(const double* a, const double* b, double* o, std::size_t n) { active().sub(a, b, o, n); }
inline void mul(const double* a, const double* b, double* o, std::size_t n) { active().mul(a, b, o, n); }
inline void scale(const double* a, double c, double* o, std::size_t n) { active().scale(a, c, o, n); }
inline void axpy(double al, const double* x, double* y, std::size_t n) { active().axpy(al, x, y, n); }
inline void leaky_relu(const double* a, double s, double* o, std::size_t n) { active().leaky_relu(a, s, o, n); }
inline void leaky_relu_bwd(const double* x, const double* g, double s, double* gi, std::size_t n) {
  active().leaky_relu_bwd(x, g, s, gi, n);
}
inline void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n, bool acc = false) { active().matmul_nn(a, b, c, m, k, n, acc); }
inline void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n, bool acc = false) { active().matmul_nt(a, b, c, m, k, n, acc); }
inline void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n, bool acc = false) { active().matmul_tn(a, b, c, m, k, n, acc); }
inline double sum(const double* a, std::size_t n) { return active().sum(a, n); }
inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline double max(const double* a, std::size_t n) { return active().max(a, n); }

}  // namespace bopo::kern
