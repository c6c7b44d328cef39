#include "bopo/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace bopo::kern {

namespace {

void s_add(const double* a, const double* b, double* o, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) o[i] = a[i] + b[i];
}
void s_sub(const double* a, const double* b, double* o, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) o[i] = a[i] - b[i];
}
void s_mul(const double* a, const double* b, double* o, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) o[i] = a[i] * b[i];
}
void s_scale(const double* a, double c, double* o, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) o[i] = a[i] * c;
}
void s_axpy(double al, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += al * x[i];
}
void s_leaky(const double* a, double s, double* o, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) o[i] = a[i] > 0.0 ? a[i] : s * a[i];
}
void s_leaky_bwd(const double* x, const double* g, double s, double* gi, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) gi[i] += g[i] * (x[i] > 0.0 ? 1.0 : s);
}

// Loop order i,k,j: row i of C accumulates A[i,k] * row k of B.
void s_matmul_nn(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n, bool acc) {
  if (!acc) std::fill(c, c + m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void s_matmul_nt(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n, bool acc) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = acc ? ci[j] + s : s;
    }
  }
}

void s_matmul_tn(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n, bool acc) {
  if (!acc) std::fill(c, c + m * n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = ap[i];
      if (api == 0.0) continue;
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

double s_sum(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}
double s_dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}
double s_max(const double* a, std::size_t n) {
  double m = a[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, a[i]);
  return m;
}

const Backend kScalar = {
    "scalar", s_add,       s_sub,       s_mul,       s_scale, s_axpy,
    s_leaky,  s_leaky_bwd, s_matmul_nn, s_matmul_nt, s_matmul_tn,
    s_sum,    s_dot,       s_max,
};

const Backend* pick_initial() {
  if (const char* env = std::getenv("BOPO_KERNEL_BACKEND")) {
    std::string_view v{env};
    if (v == "scalar") return &kScalar;
    if (v == "avx2" && avx2_available()) return &avx2_backend();
  }
  return avx2_available() ? &avx2_backend() : &kScalar;
}

const Backend*& active_ptr() {
  static const Backend* p = pick_initial();
  return p;
}

}  // namespace

const Backend& scalar_backend() { return kScalar; }

const Backend& active() { return *active_ptr(); }

void set_backend(std::string_view name) {
  if (name == "scalar") {
    active_ptr() = &kScalar;
  } else if (name == "avx2") {
    if (!avx2_available()) throw std::runtime_error("avx2 backend not available on this cpu");
    active_ptr() = &avx2_backend();
  } else {
    throw std::invalid_argument("unknown kernel backend: " + std::string(name));
  }
}

}  // namespace bopo::kern
