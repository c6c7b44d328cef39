#include "bopo/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#endif

#include <algorithm>
#include <stdexcept>

namespace bopo::kern {

#if defined(__AVX2__)

namespace {

void v_add(const double* a, const double* b, double* o, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(o + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) o[i] = a[i] + b[i];
}
void v_sub(const double* a, const double* b, double* o, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(o + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) o[i] = a[i] - b[i];
}
void v_mul(const double* a, const double* b, double* o, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(o + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) o[i] = a[i] * b[i];
}
void v_scale(const double* a, double c, double* o, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(o + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vc));
  for (; i < n; ++i) o[i] = a[i] * c;
}
void v_axpy(double al, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(al);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // mul+add (not fma) so results match the scalar backend bit for bit
    __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
  }
  for (; i < n; ++i) y[i] += al * x[i];
}
void v_leaky(const double* a, double s, double* o, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  const __m256d z = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_loadu_pd(a + i);
    __m256d neg = _mm256_mul_pd(x, vs);
    __m256d m = _mm256_cmp_pd(x, z, _CMP_GT_OQ);
    _mm256_storeu_pd(o + i, _mm256_blendv_pd(neg, x, m));
  }
  for (; i < n; ++i) o[i] = a[i] > 0.0 ? a[i] : s * a[i];
}
void v_leaky_bwd(const double* x, const double* g, double s, double* gi, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d z = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d m = _mm256_cmp_pd(xv, z, _CMP_GT_OQ);
    __m256d f = _mm256_blendv_pd(vs, one, m);
    __m256d t = _mm256_mul_pd(_mm256_loadu_pd(g + i), f);
    _mm256_storeu_pd(gi + i, _mm256_add_pd(_mm256_loadu_pd(gi + i), t));
  }
  for (; i < n; ++i) gi[i] += g[i] * (x[i] > 0.0 ? 1.0 : s);
}

// Same i,k,j order as the scalar kernel, vectorized over j with mul+add,
// so per-element operations and their order are identical.
void v_matmul_nn(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n, bool acc) {
  if (!acc) std::fill(c, c + m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b + p * n;
      const __m256d va = _mm256_set1_pd(aip);
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(bp + j));
        _mm256_storeu_pd(ci + j, _mm256_add_pd(_mm256_loadu_pd(ci + j), t));
      }
      for (; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

void v_matmul_nt(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n, bool acc) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      __m256d accv = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4)
        accv = _mm256_fmadd_pd(_mm256_loadu_pd(ai + p), _mm256_loadu_pd(bj + p), accv);
      double s = hsum(accv);
      for (; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = acc ? ci[j] + s : s;
    }
  }
}

void v_matmul_tn(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n, bool acc) {
  if (!acc) std::fill(c, c + m * n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = ap[i];
      if (api == 0.0) continue;
      double* ci = c + i * n;
      const __m256d va = _mm256_set1_pd(api);
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4)
        _mm256_storeu_pd(ci + j, _mm256_fmadd_pd(va, _mm256_loadu_pd(bp + j), _mm256_loadu_pd(ci + j)));
      for (; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

double v_sum(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}
double v_dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}
double v_max(const double* a, std::size_t n) {
  std::size_t i = 0;
  double m = a[0];
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(a);
    for (i = 4; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(a + i));
    __m128d lo = _mm_max_pd(_mm256_castpd256_pd128(vm), _mm256_extractf128_pd(vm, 1));
    m = std::max(_mm_cvtsd_f64(lo), _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo)));
  }
  for (; i < n; ++i) m = std::max(m, a[i]);
  return m;
}

const Backend kAvx2 = {
    "avx2",  v_add,       v_sub,       v_mul,       v_scale, v_axpy,
    v_leaky, v_leaky_bwd, v_matmul_nn, v_matmul_nt, v_matmul_tn,
    v_sum,   v_dot,       v_max,
};

}  // namespace

bool avx2_available() { return __builtin_cpu_supports("avx2"); }
const Backend& avx2_backend() { return kAvx2; }

#else

bool avx2_available() { return false; }
const Backend& avx2_backend() { throw std::runtime_error("built without avx2 support"); }

#endif

}  // namespace bopo::kern
