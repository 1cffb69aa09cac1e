#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>

namespace dsd {

using cplx = std::complex<double>;
using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;
using rmat = Eigen::MatrixXd;
using rng_t = std::mt19937_64;

inline constexpr double pi = 3.14159265358979323846264338327950288;
inline constexpr double two_pi = 2.0 * pi;

// wrap into [0, 2*pi)
double wrap_2pi(double x);
// wrap into [0, 1)
double wrap_unit(double x);
// cyclic distance on the unit interval
double unit_distance(double a, double b);

// CN(0,1): real and imaginary parts N(0, 1/2)
cplx randn_c(rng_t& rng);

// independent per-trial stream: seed ^ trial feeds a fresh engine
rng_t trial_rng(std::uint64_t seed, std::uint64_t trial);

// runs fn(0..n-1); deterministic result regardless of jobs
void parallel_for(int jobs, int n, const std::function<void(int)>& fn);

}  // namespace dsd
