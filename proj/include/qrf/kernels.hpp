#pragma once

#include <cstddef>
#include <span>

// Data-parallel arithmetic kernels. Every operation has a scalar reference
// implementation and an AVX2 variant; the dispatched entry points pick the
// widest level the CPU supports once at startup. QRF_SIMD=scalar|avx2 in the
// environment overrides the choice.
//
// Elementwise kernels (axpy, scale, subtract) and the comparison kernels
// (min, max, count_within) produce bit-identical results at every level.
// Reductions (sum, dot, sq_diff_sum, central_moments) reassociate and may
// differ by a few ulps between levels; equivalence tests bound the drift.

namespace qrf::kern {

enum class Level { scalar, avx2 };

Level active_level();
const char* level_name(Level level);
bool avx2_available();

struct CentralMoments {
  double mean = 0.0;
  double m2 = 0.0;  // population central moments
  double m3 = 0.0;
  double m4 = 0.0;
};

double sum(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
double sq_diff_sum(std::span<const double> a, std::span<const double> b);
double min(std::span<const double> v);
double max(std::span<const double> v);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(std::span<double> v, double c);
void subtract(std::span<const double> a, std::span<const double> b,
              std::span<double> out);
CentralMoments central_moments(std::span<const double> v);
std::size_t count_within(std::span<const double> y, std::span<const double> lo,
                         std::span<const double> hi);

namespace scalar {
double sum(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
double sq_diff_sum(std::span<const double> a, std::span<const double> b);
double min(std::span<const double> v);
double max(std::span<const double> v);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(std::span<double> v, double c);
void subtract(std::span<const double> a, std::span<const double> b,
              std::span<double> out);
CentralMoments central_moments(std::span<const double> v);
std::size_t count_within(std::span<const double> y, std::span<const double> lo,
                         std::span<const double> hi);
}  // namespace scalar

namespace avx2 {
double sum(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
double sq_diff_sum(std::span<const double> a, std::span<const double> b);
double min(std::span<const double> v);
double max(std::span<const double> v);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(std::span<double> v, double c);
void subtract(std::span<const double> a, std::span<const double> b,
              std::span<double> out);
CentralMoments central_moments(std::span<const double> v);
std::size_t count_within(std::span<const double> y, std::span<const double> lo,
                         std::span<const double> hi);
}  // namespace avx2

}  // namespace qrf::kern
