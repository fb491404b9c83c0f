#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bimh/models.hpp"
#include "bimh/rng.hpp"

namespace bimh::probit {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MleNotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularHessian : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// log Phi(x) without underflow. The complementary error function covers
// x >= -8; below that the Mills ratio is evaluated by its continued fraction
// 1 / (t + 1 / (t + 2 / (t + 3 / ...))) with t = -x.
inline double log_normal_cdf(double x) {
  constexpr double kLogSqrt2Pi = 0.91893853320467274178;
  if (x > 5.0) return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  if (x >= -8.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  if (std::isinf(x)) return -std::numeric_limits<double>::infinity();

  const double t = -x;
  // Modified Lentz evaluation of K = t + 1/(t + 2/(t + 3/(t + ...))).
  constexpr double kTiny = 1e-300;
  double f = t, c = t, d = 0.0;
  for (int k = 1; k < 500; ++k) {
    d = t + k * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = t + k / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  // Phi(x) = phi(x) / K
  return -0.5 * x * x - kLogSqrt2Pi - std::log(f);
}

inline double log_normal_pdf(double x) {
  constexpr double kLogSqrt2Pi = 0.91893853320467274178;
  return -0.5 * x * x - kLogSqrt2Pi;
}

// phi(x) / Phi(x).
inline double inverse_mills(double x) { return std::exp(log_normal_pdf(x) - log_normal_cdf(x)); }

struct ProbitData {
  Eigen::MatrixXd X;  // n x d
  Eigen::VectorXd y;  // 0/1 responses
  std::vector<std::string> covariate_names;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index d() const { return X.cols(); }
  Eigen::MatrixXd gram() const { return X.transpose() * X; }
};

// Validates shapes, responses and the invertibility of X^T X.
inline ProbitData make_probit_data(Eigen::MatrixXd X, Eigen::VectorXd y,
                                   std::vector<std::string> names = {}) {
  if (X.rows() != y.size()) throw DataError("design matrix and response differ in length");
  if (X.rows() <= X.cols()) throw DataError("need more observations than covariates");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 0.0 && y[i] != 1.0) throw DataError("response values must be 0 or 1");
  if (!X.allFinite()) throw DataError("covariates must be finite");
  const Eigen::MatrixXd g = X.transpose() * X;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  if (eig.info() != Eigen::Success || !(ev.minCoeff() > 1e-12 * ev.maxCoeff()))
    throw DataError("X^T X is singular");
  if (names.empty())
    for (Eigen::Index j = 0; j < X.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
  return ProbitData{std::move(X), std::move(y), std::move(names)};
}

struct CsvOptions {
  bool intercept = false;    // prepend a column of ones
  bool standardize = false;  // centre and scale each covariate
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r\"");
    const auto e = cell.find_last_not_of(" \t\r\"");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& cell, std::size_t row, const std::string& col) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (cell.empty() || used != cell.size() || !std::isfinite(v))
    throw DataError("non-numeric value '" + cell + "' in column '" + col + "' at data row " +
                    std::to_string(row));
  return v;
}

}  // namespace detail

// Reads a comma-separated file with a header row. Covariates are taken in the
// requested order; the response column must hold 0/1.
inline ProbitData load_probit_csv(const std::string& path,
                                  const std::vector<std::string>& covariates,
                                  const std::string& response, CsvOptions options = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  const auto header = detail::split_csv_line(line);

  auto column_of = [&](const std::string& name) {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return j;
    throw DataError("missing column '" + name + "' in " + path);
  };
  std::vector<std::size_t> cols;
  for (const auto& c : covariates) cols.push_back(column_of(c));
  const std::size_t ycol = column_of(response);

  std::vector<std::vector<double>> rows;
  std::vector<double> ys;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " fields, expected " + std::to_string(header.size()));
    std::vector<double> x;
    for (std::size_t j = 0; j < cols.size(); ++j)
      x.push_back(detail::parse_number(cells[cols[j]], row, covariates[j]));
    const double yv = detail::parse_number(cells[ycol], row, response);
    if (yv != 0.0 && yv != 1.0)
      throw DataError("response '" + response + "' must be 0 or 1 (row " + std::to_string(row) +
                      ")");
    rows.push_back(std::move(x));
    ys.push_back(yv);
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d0 = static_cast<Eigen::Index>(covariates.size());
  const Eigen::Index offset = options.intercept ? 1 : 0;
  Eigen::MatrixXd X(n, d0 + offset);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (options.intercept) X(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < d0; ++j) X(i, j + offset) = rows[i][j];
    y[i] = ys[i];
  }
  if (options.standardize && n > 1) {
    for (Eigen::Index j = offset; j < X.cols(); ++j) {
      const double mean = X.col(j).mean();
      const double sd = std::sqrt((X.col(j).array() - mean).square().sum() / (n - 1));
      if (sd > 0) X.col(j) = (X.col(j).array() - mean) / sd;
    }
  }
  std::vector<std::string> names;
  if (options.intercept) names.emplace_back("intercept");
  names.insert(names.end(), covariates.begin(), covariates.end());
  return make_probit_data(std::move(X), std::move(y), std::move(names));
}

// Probit likelihood with the g-prior theta ~ N(0, n (X^T X)^{-1}).
class ProbitPosterior {
 public:
  explicit ProbitPosterior(ProbitData data) : data_(std::move(data)), gram_(data_.gram()) {
    sign_ = (2.0 * data_.y.array() - 1.0).matrix();
  }

  const ProbitData& data() const noexcept { return data_; }
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }

  double log_likelihood(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd eta = data_.X * theta;
    double s = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) s += log_normal_cdf(sign_[i] * eta[i]);
    return s;
  }

  double log_prior(const Eigen::VectorXd& theta) const {
    return -0.5 * theta.dot(gram_ * theta) / static_cast<double>(data_.n());
  }

  // Up to an additive constant.
  double log_posterior(const Eigen::VectorXd& theta) const {
    if (theta.size() != data_.d()) throw std::invalid_argument("theta has the wrong length");
    return log_likelihood(theta) + log_prior(theta);
  }

  Eigen::VectorXd likelihood_gradient(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd eta = data_.X * theta;
    Eigen::VectorXd coef(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i)
      coef[i] = sign_[i] * inverse_mills(sign_[i] * eta[i]);
    return data_.X.transpose() * coef;
  }

  Eigen::MatrixXd likelihood_hessian(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd eta = data_.X * theta;
    Eigen::VectorXd wt(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double z = sign_[i] * eta[i];
      const double lam = inverse_mills(z);
      wt[i] = lam * (z + lam);
    }
    return -(data_.X.transpose() * wt.asDiagonal() * data_.X);
  }

 private:
  ProbitData data_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd sign_;
};

inline double log_posterior(const ProbitPosterior& post, const Eigen::VectorXd& theta) {
  return post.log_posterior(theta);
}

struct MleFit {
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd sigma_hat;  // inverse observed information at theta_hat
  int iterations = 0;
};

// Newton-Raphson with step halving on the probit log-likelihood (no prior).
// Converged when the gradient max-norm is below tol and the Newton step has
// become negligible; separated data never satisfies the second condition.
inline MleFit fit_mle(const ProbitData& data, double tol = 1e-9, int max_iter = 100) {
  const ProbitPosterior post(data);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(data.d());
  double ll = post.log_likelihood(theta);

  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd g = post.likelihood_gradient(theta);
    const Eigen::MatrixXd info = -post.likelihood_hessian(theta);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff()))
      throw SingularHessian("observed information is singular during MLE fit");
    Eigen::VectorXd step = ldlt.solve(g);

    double scale = 1.0;
    Eigen::VectorXd next = theta + step;
    double ll_next = post.log_likelihood(next);
    while (!(ll_next >= ll) && scale > 1e-10) {
      scale *= 0.5;
      next = theta + scale * step;
      ll_next = post.log_likelihood(next);
    }
    theta = next;
    ll = ll_next;

    const Eigen::VectorXd g_new = post.likelihood_gradient(theta);
    const double step_norm = (scale * step).lpNorm<Eigen::Infinity>();
    if (g_new.lpNorm<Eigen::Infinity>() <= tol &&
        step_norm <= 1e-8 * (1.0 + theta.lpNorm<Eigen::Infinity>())) {
      const Eigen::MatrixXd info_hat = -post.likelihood_hessian(theta);
      Eigen::LLT<Eigen::MatrixXd> llt(info_hat);
      if (llt.info() != Eigen::Success)
        throw SingularHessian("observed information at the MLE is not positive definite");
      MleFit fit;
      fit.theta_hat = theta;
      fit.sigma_hat = llt.solve(Eigen::MatrixXd::Identity(data.d(), data.d()));
      fit.sigma_hat = 0.5 * (fit.sigma_hat + fit.sigma_hat.transpose()).eval();
      fit.iterations = it;
      return fit;
    }
  }
  throw MleNotConverged("probit MLE did not converge in " + std::to_string(max_iter) +
                        " iterations (possible separation)");
}

inline Eigen::VectorXd to_eigen(const Point& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.coords().data(), static_cast<Eigen::Index>(x.size()));
}

inline Point to_point(const Eigen::VectorXd& v) {
  return Point(std::vector<double>(v.data(), v.data() + v.size()));
}

// Posterior target with the independent plug-in proposal N(theta_hat, c Sigma_hat).
inline ModelPair probit_model(const ProbitData& data, const MleFit& fit, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("proposal scale c must be positive");
  auto post = std::make_shared<const ProbitPosterior>(data);
  const Eigen::MatrixXd cov = c * fit.sigma_hat;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw SingularHessian("proposal covariance is not SPD");
  auto chol = std::make_shared<const Eigen::MatrixXd>(llt.matrixL());
  auto mean = std::make_shared<const Eigen::VectorXd>(fit.theta_hat);
  const auto d = static_cast<std::size_t>(data.d());

  ModelPair m;
  m.dimension = d;
  m.initial_point = to_point(fit.theta_hat);
  m.log_target = [post](const Point& x) { return post->log_posterior(to_eigen(x)); };
  m.log_proposal = [chol, mean](const Point& x) {
    const Eigen::VectorXd z =
        chol->triangularView<Eigen::Lower>().solve(to_eigen(x) - *mean);
    return -0.5 * z.squaredNorm();
  };
  m.sample_proposal = [chol, mean, d](RngStream& rng) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return to_point(*mean + *chol * z);
  };
  return m;
}

inline ModelPair probit_model(const ProbitData& data, double c) {
  return probit_model(data, fit_mle(data), c);
}

}  // namespace bimh::probit
