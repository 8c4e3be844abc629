#pragma once

// Stationary zero-mean Gaussian fields on an N x N pixel grid with
// covariance exp(-D / theta), D the Euclidean pixel distance.

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "relaxmt/parallel.hpp"

namespace relaxmt {

enum class FieldMethod {
  CirculantFft,   // circulant embedding on a torus, FFT synthesis
  DenseCholesky,  // exact factorization of the full covariance matrix
};

std::string to_string(FieldMethod method);

double exponential_covariance(double distance, double theta);

/// Precomputes the synthesis operator once; sample() is then thread-safe.
class FieldSampler {
 public:
  FieldSampler(std::size_t side, double theta,
               FieldMethod preferred = FieldMethod::CirculantFft);
  ~FieldSampler();
  FieldSampler(FieldSampler&&) noexcept;
  FieldSampler& operator=(FieldSampler&&) noexcept;

  /// Row-major field of side * side values.
  std::vector<double> sample(Rng& rng) const;

  std::size_t side() const;
  double theta() const;
  FieldMethod method() const;
  /// Torus side used by the FFT path (0 for the dense path).
  std::size_t embedding_side() const;
  const std::vector<std::string>& warnings() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper building a one-off sampler.
std::vector<double> gen_correlated_field(std::size_t side, double theta, Rng& rng);

}  // namespace relaxmt
