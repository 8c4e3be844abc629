#include "relaxmt/field.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <fftw3.h>
#include <mutex>

#include "relaxmt/error.hpp"

namespace relaxmt {

namespace {

// The FFTW planner is not thread-safe; plan execution on fresh arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  fftw_complex* data = nullptr;
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

constexpr double kNegativeEigenTolerance = 1e-8;
constexpr std::size_t kMaxEmbeddingDoublings = 1;

}  // namespace

std::string to_string(FieldMethod method) {
  return method == FieldMethod::CirculantFft ? "circulant-fft" : "dense-cholesky";
}

double exponential_covariance(double distance, double theta) {
  return std::exp(-distance / theta);
}

struct FieldSampler::Impl {
  std::size_t side = 0;
  double theta = 0.0;
  FieldMethod method = FieldMethod::CirculantFft;
  std::vector<std::string> warnings;

  // FFT path
  std::size_t torus = 0;
  std::vector<double> amplitude;  // sqrt(lambda_k / P^2)
  fftw_plan plan = nullptr;

  // Dense path
  Eigen::MatrixXd factor;

  ~Impl() {
    if (plan) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
  }

  bool try_embedding(std::size_t p) {
    const std::size_t n = p * p;
    FftwBuffer in(n), out(n);
    for (std::size_t i = 0; i < p; ++i) {
      const double di = static_cast<double>(std::min(i, p - i));
      for (std::size_t j = 0; j < p; ++j) {
        const double dj = static_cast<double>(std::min(j, p - j));
        in.data[i * p + j][0] = exponential_covariance(std::hypot(di, dj), theta);
        in.data[i * p + j][1] = 0.0;
      }
    }
    fftw_plan forward;
    {
      std::lock_guard lock(planner_mutex());
      forward = fftw_plan_dft_2d(static_cast<int>(p), static_cast<int>(p), in.data, out.data,
                                 FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(forward);
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(forward);
    }

    double largest = 0.0, smallest = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      largest = std::max(largest, out.data[k][0]);
      smallest = std::min(smallest, out.data[k][0]);
    }
    if (smallest < -kNegativeEigenTolerance * largest) return false;

    amplitude.resize(n);
    const double norm = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k)
      amplitude[k] = std::sqrt(std::max(out.data[k][0], 0.0) * norm);
    torus = p;
    {
      FftwBuffer a(n), b(n);
      std::lock_guard lock(planner_mutex());
      plan = fftw_plan_dft_2d(static_cast<int>(p), static_cast<int>(p), a.data, b.data,
                              FFTW_FORWARD, FFTW_ESTIMATE);
    }
    return true;
  }

  void build_dense() {
    const std::size_t n = side * side;
    Eigen::MatrixXd cov(n, n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        const double dr = static_cast<double>(a / side) - static_cast<double>(b / side);
        const double dc = static_cast<double>(a % side) - static_cast<double>(b % side);
        cov(a, b) = cov(b, a) = exponential_covariance(std::hypot(dr, dc), theta);
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    require(llt.info() == Eigen::Success, ErrorCode::Domain,
            "covariance matrix is not positive definite");
    factor = llt.matrixL();
  }
};

FieldSampler::FieldSampler(std::size_t side, double theta, FieldMethod preferred)
    : impl_(std::make_unique<Impl>()) {
  require(side >= 2, ErrorCode::InvalidArgument, "field side must be >= 2");
  require(theta > 0.0 && std::isfinite(theta), ErrorCode::InvalidArgument,
          "correlation scale theta must be positive");
  impl_->side = side;
  impl_->theta = theta;
  if (preferred == FieldMethod::CirculantFft) {
    std::size_t p = 2 * side;
    for (std::size_t attempt = 0; attempt <= kMaxEmbeddingDoublings; ++attempt, p *= 2) {
      if (impl_->try_embedding(p)) {
        impl_->method = FieldMethod::CirculantFft;
        return;
      }
      impl_->warnings.push_back("circulant embedding of side " + std::to_string(p) +
                                " is not nonnegative definite");
    }
    impl_->warnings.push_back("falling back to dense covariance factorization");
  }
  impl_->method = FieldMethod::DenseCholesky;
  impl_->build_dense();
}

FieldSampler::~FieldSampler() = default;
FieldSampler::FieldSampler(FieldSampler&&) noexcept = default;
FieldSampler& FieldSampler::operator=(FieldSampler&&) noexcept = default;

std::vector<double> FieldSampler::sample(Rng& rng) const {
  const auto& im = *impl_;
  std::normal_distribution<double> normal;
  std::vector<double> field(im.side * im.side);
  if (im.method == FieldMethod::CirculantFft) {
    const std::size_t p = im.torus;
    const std::size_t n = p * p;
    FftwBuffer in(n), out(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double re = normal(rng);
      const double imag = normal(rng);
      in.data[k][0] = im.amplitude[k] * re;
      in.data[k][1] = im.amplitude[k] * imag;
    }
    fftw_execute_dft(im.plan, in.data, out.data);
    for (std::size_t i = 0; i < im.side; ++i)
      for (std::size_t j = 0; j < im.side; ++j) field[i * im.side + j] = out.data[i * p + j][0];
  } else {
    Eigen::VectorXd w(static_cast<Eigen::Index>(field.size()));
    for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = normal(rng);
    const Eigen::VectorXd x = im.factor.triangularView<Eigen::Lower>() * w;
    for (std::size_t k = 0; k < field.size(); ++k) field[k] = x[static_cast<Eigen::Index>(k)];
  }
  return field;
}

std::size_t FieldSampler::side() const { return impl_->side; }
double FieldSampler::theta() const { return impl_->theta; }
FieldMethod FieldSampler::method() const { return impl_->method; }
std::size_t FieldSampler::embedding_side() const {
  return impl_->method == FieldMethod::CirculantFft ? impl_->torus : 0;
}
const std::vector<std::string>& FieldSampler::warnings() const { return impl_->warnings; }

std::vector<double> gen_correlated_field(std::size_t side, double theta, Rng& rng) {
  return FieldSampler(side, theta).sample(rng);
}

}  // namespace relaxmt
