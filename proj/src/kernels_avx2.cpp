// AVX2 kernel variants. This TU is compiled with -mavx2 -mfma; callers reach
// it only through the dispatch table, which checks CPU support first.

#include "qrf/kernels.hpp"

#if defined(QRF_X86_64)

#include <immintrin.h>

namespace qrf::kern::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double sum(std::span<const double> v) {
  const std::size_t n = v.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(v.data() + i));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += v[i];
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i),
                          _mm256_loadu_pd(b.data() + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sq_diff_sum(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i),
                                    _mm256_loadu_pd(b.data() + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double min(std::span<const double> v) {
  const std::size_t n = v.size();
  std::size_t i = 0;
  double m = v[0];
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(v.data());
    for (i = 4; i + 4 <= n; i += 4) {
      acc = _mm256_min_pd(acc, _mm256_loadu_pd(v.data() + i));
    }
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    const __m128d m2 = _mm_min_pd(lo, hi);
    m = _mm_cvtsd_f64(_mm_min_sd(m2, _mm_unpackhi_pd(m2, m2)));
  }
  for (; i < n; ++i) m = v[i] < m ? v[i] : m;
  return m;
}

double max(std::span<const double> v) {
  const std::size_t n = v.size();
  std::size_t i = 0;
  double m = v[0];
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(v.data());
    for (i = 4; i + 4 <= n; i += 4) {
      acc = _mm256_max_pd(acc, _mm256_loadu_pd(v.data() + i));
    }
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    const __m128d m2 = _mm_max_pd(lo, hi);
    m = _mm_cvtsd_f64(_mm_max_sd(m2, _mm_unpackhi_pd(m2, m2)));
  }
  for (; i < n; ++i) m = v[i] > m ? v[i] : m;
  return m;
}

// Deliberately mul+add (no FMA) so the result is bit-identical to the scalar
// kernel; the operation is elementwise, so there is nothing to reassociate.
void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  const __m256d a = _mm256_set1_pd(alpha);
  for (; i + 4 <= n; i += 4) {
    const __m256d t =
        _mm256_add_pd(_mm256_loadu_pd(y.data() + i),
                      _mm256_mul_pd(a, _mm256_loadu_pd(x.data() + i)));
    _mm256_storeu_pd(y.data() + i, t);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(std::span<double> v, double c) {
  const std::size_t n = v.size();
  std::size_t i = 0;
  const __m256d cc = _mm256_set1_pd(c);
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(v.data() + i,
                     _mm256_mul_pd(cc, _mm256_loadu_pd(v.data() + i)));
  }
  for (; i < n; ++i) v[i] *= c;
}

void subtract(std::span<const double> a, std::span<const double> b,
              std::span<double> out) {
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out.data() + i,
                     _mm256_sub_pd(_mm256_loadu_pd(a.data() + i),
                                   _mm256_loadu_pd(b.data() + i)));
  }
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

CentralMoments central_moments(std::span<const double> v) {
  CentralMoments m;
  const std::size_t n = v.size();
  if (n == 0) return m;
  m.mean = sum(v) / static_cast<double>(n);

  const __m256d mean = _mm256_set1_pd(m.mean);
  __m256d a2 = _mm256_setzero_pd();
  __m256d a3 = _mm256_setzero_pd();
  __m256d a4 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(v.data() + i), mean);
    const __m256d d2 = _mm256_mul_pd(d, d);
    a2 = _mm256_add_pd(a2, d2);
    a3 = _mm256_fmadd_pd(d2, d, a3);
    a4 = _mm256_fmadd_pd(d2, d2, a4);
  }
  double s2 = hsum(a2), s3 = hsum(a3), s4 = hsum(a4);
  for (; i < n; ++i) {
    const double d = v[i] - m.mean;
    const double d2 = d * d;
    s2 += d2;
    s3 += d2 * d;
    s4 += d2 * d2;
  }
  const double dn = static_cast<double>(n);
  m.m2 = s2 / dn;
  m.m3 = s3 / dn;
  m.m4 = s4 / dn;
  return m;
}

std::size_t count_within(std::span<const double> y, std::span<const double> lo,
                         std::span<const double> hi) {
  const std::size_t n = y.size();
  std::size_t i = 0;
  std::size_t c = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yy = _mm256_loadu_pd(y.data() + i);
    const __m256d ok = _mm256_and_pd(
        _mm256_cmp_pd(_mm256_loadu_pd(lo.data() + i), yy, _CMP_LE_OQ),
        _mm256_cmp_pd(yy, _mm256_loadu_pd(hi.data() + i), _CMP_LE_OQ));
    c += static_cast<std::size_t>(
        __builtin_popcount(_mm256_movemask_pd(ok)));
  }
  for (; i < n; ++i) {
    c += static_cast<std::size_t>(lo[i] <= y[i] && y[i] <= hi[i]);
  }
  return c;
}

}  // namespace qrf::kern::avx2

#endif  // QRF_X86_64
