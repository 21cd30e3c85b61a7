#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace distreg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Array = Eigen::ArrayXd;
using Index = Eigen::Index;

/// Base class for all library errors; subclasses map to CLI exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

/// Prediction outside the training covariate support (vanishing spline
/// basis or unseen categorical level). Callers such as cross-validation
/// exclude the offending observation and count it.
struct ExtrapolationError : DataError {
  using DataError::DataError;
};

/// Distribution parameters on the natural scale, up to three of them.
class ParamVector {
public:
  ParamVector() = default;
  ParamVector(double a, double b) : v_{a, b, 0.0}, n_(2) {}
  ParamVector(double a, double b, double c) : v_{a, b, c}, n_(3) {}

  int size() const { return n_; }
  double operator[](int k) const { return v_[static_cast<size_t>(k)]; }
  double& operator[](int k) { return v_[static_cast<size_t>(k)]; }

private:
  std::array<double, 3> v_{};
  int n_ = 0;
};

/// Per-observation parameter values on the natural scale, one array per
/// distribution parameter.
struct ParamArrays {
  std::array<Array, 3> col;
  int count = 0;

  Index n() const { return count > 0 ? col[0].size() : 0; }
  ParamVector at(Index i) const {
    ParamVector t;
    if (count == 2) t = ParamVector(col[0][i], col[1][i]);
    if (count == 3) t = ParamVector(col[0][i], col[1][i], col[2][i]);
    return t;
  }
};

inline constexpr double kPredictorClamp = 30.0;  // |eta| bound before exp()

/// Counts response-function clamp events so predictor-scale pathologies
/// stay visible in run reports.
struct ClampCounter {
  std::uint64_t events = 0;
};

enum class Link { identity, log_link };

/// Map a predictor value to the natural parameter scale.
inline double apply_link(Link link, double eta, ClampCounter* counter = nullptr) {
  if (link == Link::identity) return eta;
  if (eta > kPredictorClamp || eta < -kPredictorClamp) {
    if (counter) ++counter->events;
    eta = eta > 0 ? kPredictorClamp : -kPredictorClamp;
  }
  return std::exp(eta);
}

/// Inverse of apply_link, used for moment-based initialisation.
inline double invert_link(Link link, double theta) {
  if (link == Link::identity) return theta;
  if (!(theta > 0)) throw NumericError("invert_link: nonpositive value under log link");
  return std::log(theta);
}

/// Vectorised response mapping with clamp accounting.
inline void apply_link(Link link, const Array& eta, Array& theta, ClampCounter* counter = nullptr) {
  if (link == Link::identity) {
    theta = eta;
    return;
  }
  if (counter) counter->events += static_cast<std::uint64_t>((eta.abs() > kPredictorClamp).count());
  theta = eta.min(kPredictorClamp).max(-kPredictorClamp).exp();
}

}  // namespace distreg
