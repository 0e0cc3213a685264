#include "qrf/kernels.hpp"

#include <cstdlib>
#include <cstring>

// Scalar reference kernels plus the runtime dispatch table. The AVX2
// counterparts live in kernels_avx2.cpp (built with -mavx2 -mfma).

namespace qrf::kern {

namespace scalar {

double sum(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sq_diff_sum(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double min(std::span<const double> v) {
  double m = v[0];
  for (double x : v) m = x < m ? x : m;
  return m;
}

double max(std::span<const double> v) {
  double m = v[0];
  for (double x : v) m = x > m ? x : m;
  return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(std::span<double> v, double c) {
  for (double& x : v) x *= c;
}

void subtract(std::span<const double> a, std::span<const double> b,
              std::span<double> out) {
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
}

CentralMoments central_moments(std::span<const double> v) {
  CentralMoments m;
  if (v.empty()) return m;
  m.mean = sum(v) / static_cast<double>(v.size());
  double s2 = 0.0, s3 = 0.0, s4 = 0.0;
  for (double x : v) {
    const double d = x - m.mean;
    const double d2 = d * d;
    s2 += d2;
    s3 += d2 * d;
    s4 += d2 * d2;
  }
  const double n = static_cast<double>(v.size());
  m.m2 = s2 / n;
  m.m3 = s3 / n;
  m.m4 = s4 / n;
  return m;
}

std::size_t count_within(std::span<const double> y, std::span<const double> lo,
                         std::span<const double> hi) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    c += static_cast<std::size_t>(lo[i] <= y[i] && y[i] <= hi[i]);
  }
  return c;
}

}  // namespace scalar

#if !defined(QRF_X86_64)
// Non-x86 builds carry no vector TU; the avx2 symbols forward to scalar so
// callers always link.
namespace avx2 {
double sum(std::span<const double> v) { return scalar::sum(v); }
double dot(std::span<const double> a, std::span<const double> b) {
  return scalar::dot(a, b);
}
double sq_diff_sum(std::span<const double> a, std::span<const double> b) {
  return scalar::sq_diff_sum(a, b);
}
double min(std::span<const double> v) { return scalar::min(v); }
double max(std::span<const double> v) { return scalar::max(v); }
void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  scalar::axpy(alpha, x, y);
}
void scale(std::span<double> v, double c) { scalar::scale(v, c); }
void subtract(std::span<const double> a, std::span<const double> b,
              std::span<double> out) {
  scalar::subtract(a, b, out);
}
CentralMoments central_moments(std::span<const double> v) {
  return scalar::central_moments(v);
}
std::size_t count_within(std::span<const double> y, std::span<const double> lo,
                         std::span<const double> hi) {
  return scalar::count_within(y, lo, hi);
}
}  // namespace avx2
#endif

bool avx2_available() {
#if defined(QRF_X86_64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Level resolve_level() {
  if (const char* env = std::getenv("QRF_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Level::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      return avx2_available() ? Level::avx2 : Level::scalar;
    }
  }
  return avx2_available() ? Level::avx2 : Level::scalar;
}

struct Table {
  double (*sum)(std::span<const double>);
  double (*dot)(std::span<const double>, std::span<const double>);
  double (*sq_diff_sum)(std::span<const double>, std::span<const double>);
  double (*min)(std::span<const double>);
  double (*max)(std::span<const double>);
  void (*axpy)(double, std::span<const double>, std::span<double>);
  void (*scale)(std::span<double>, double);
  void (*subtract)(std::span<const double>, std::span<const double>,
                   std::span<double>);
  CentralMoments (*central_moments)(std::span<const double>);
  std::size_t (*count_within)(std::span<const double>, std::span<const double>,
                              std::span<const double>);
};

constexpr Table kScalarTable = {
    scalar::sum,   scalar::dot,  scalar::sq_diff_sum, scalar::min,
    scalar::max,   scalar::axpy, scalar::scale,       scalar::subtract,
    scalar::central_moments,     scalar::count_within};

constexpr Table kAvx2Table = {
    avx2::sum,   avx2::dot,   avx2::sq_diff_sum,     avx2::min,
    avx2::max,   avx2::axpy,  avx2::scale,           avx2::subtract,
    avx2::central_moments,    avx2::count_within};

struct Dispatch {
  Level level;
  const Table* table;
  Dispatch() {
    level = resolve_level();
    table = level == Level::avx2 ? &kAvx2Table : &kScalarTable;
  }
};

const Dispatch& dispatch() {
  static const Dispatch d;
  return d;
}

}  // namespace

Level active_level() { return dispatch().level; }

const char* level_name(Level level) {
  switch (level) {
    case Level::avx2:
      return "avx2";
    default:
      return "scalar";
  }
}

double sum(std::span<const double> v) { return dispatch().table->sum(v); }
double dot(std::span<const double> a, std::span<const double> b) {
  return dispatch().table->dot(a, b);
}
double sq_diff_sum(std::span<const double> a, std::span<const double> b) {
  return dispatch().table->sq_diff_sum(a, b);
}
double min(std::span<const double> v) { return dispatch().table->min(v); }
double max(std::span<const double> v) { return dispatch().table->max(v); }
void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  dispatch().table->axpy(alpha, x, y);
}
void scale(std::span<double> v, double c) { dispatch().table->scale(v, c); }
void subtract(std::span<const double> a, std::span<const double> b,
              std::span<double> out) {
  dispatch().table->subtract(a, b, out);
}
CentralMoments central_moments(std::span<const double> v) {
  return dispatch().table->central_moments(v);
}
std::size_t count_within(std::span<const double> y, std::span<const double> lo,
                         std::span<const double> hi) {
  return dispatch().table->count_within(y, lo, hi);
}

}  // namespace qrf::kern
