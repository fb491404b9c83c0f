#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "bimh/imh.hpp"
#include "bimh/probit.hpp"
#include "support/oracles.hpp"

using namespace bimh;
using namespace bimh::probit;

namespace {

const std::string kPima = std::string(BIMH_DATA_DIR) + "/pima.csv";
const std::vector<std::string> kCovariates{"glu", "bp", "ped"};

ProbitData pima() { return load_probit_csv(kPima, kCovariates, "type"); }

std::string write_temp(const std::string& name, const std::string& body) {
  const auto path = ::testing::TempDir() + name;
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST(ProbitData, LoadsPima) {
  const auto data = pima();
  EXPECT_EQ(data.n(), 332);
  EXPECT_EQ(data.d(), 3);
  EXPECT_EQ(data.covariate_names, kCovariates);
  for (Eigen::Index i = 0; i < data.n(); ++i) EXPECT_TRUE(data.y[i] == 0.0 || data.y[i] == 1.0);
  const auto with_icpt = load_probit_csv(kPima, kCovariates, "type", {.intercept = true});
  EXPECT_EQ(with_icpt.d(), 4);
  EXPECT_EQ(with_icpt.X(5, 0), 1.0);
}

TEST(ProbitData, RejectsBadInput) {
  const auto bad_y = write_temp("bad_y.csv", "a,b,y\n1,2,0\n3,4,2\n5,1,1\n");
  EXPECT_THROW(load_probit_csv(bad_y, {"a", "b"}, "y"), DataError);
  const auto text = write_temp("text.csv", "a,y\n1,0\nx,1\n2,1\n");
  EXPECT_THROW(load_probit_csv(text, {"a"}, "y"), DataError);
  EXPECT_THROW(load_probit_csv(kPima, {"nope"}, "type"), DataError);
  EXPECT_THROW(load_probit_csv("/nonexistent.csv", kCovariates, "type"), DataError);
  // Collinear columns.
  const auto col = write_temp("col.csv", "a,b,y\n1,2,0\n2,4,1\n3,6,1\n4,8,0\n");
  EXPECT_THROW(load_probit_csv(col, {"a", "b"}, "y"), DataError);
}

TEST(ProbitData, TinyGram) {
  Eigen::MatrixXd X(2, 1);
  X << 1.0, 1.0;
  Eigen::VectorXd y(2);
  y << 1.0, 0.0;
  const auto data = make_probit_data(X, y, {"x"});
  ASSERT_EQ(data.gram().rows(), 1);
  EXPECT_DOUBLE_EQ(data.gram()(0, 0), 2.0);
}

TEST(ProbitPosterior, ValueAtZero) {
  const ProbitPosterior post(pima());
  EXPECT_NEAR(post.log_posterior(Eigen::VectorXd::Zero(3)), 332 * std::log(0.5), 1e-9);
}

TEST(LogNormalCdf, MatchesSeriesOracle) {
  for (double x : {-3.0, -1.0, -0.2, 0.0, 0.5, 1.0, 2.5})
    EXPECT_NEAR(log_normal_cdf(x), std::log(oracle::normal_cdf_series(x)), 1e-12) << x;
}

TEST(LogNormalCdf, DeepTails) {
  for (double x : {-8.0, -10.0, -40.0, -1e3, -1e8}) {
    const double v = log_normal_cdf(x);
    EXPECT_TRUE(std::isfinite(v)) << x;
    // First two terms of the Mills ratio expansion.
    const double approx = -0.5 * x * x - std::log(-x) - 0.5 * std::log(2 * M_PI) - 1.0 / (x * x);
    EXPECT_NEAR(v, approx, 3.0 / std::pow(x, 4) + 1e-15 * std::abs(approx)) << x;
  }
  // Continuity across the switch between the two branches.
  EXPECT_NEAR(log_normal_cdf(-8.0 - 1e-9), log_normal_cdf(-8.0 + 1e-9), 1e-7);
  EXPECT_NEAR(log_normal_cdf(-8.0), std::log(0.5 * std::erfc(8.0 / std::sqrt(2.0))), 1e-12);
  EXPECT_EQ(log_normal_cdf(40.0), 0.0);
}

TEST(Mle, SeparatedDataFails) {
  Eigen::MatrixXd X(6, 1);
  X << -3, -2, -1, 1, 2, 3;
  Eigen::VectorXd y(6);
  y << 0, 0, 0, 1, 1, 1;
  const auto data = make_probit_data(X, y, {"x"});
  EXPECT_THROW(fit_mle(data), std::runtime_error);
}

TEST(Mle, SymmetricDataGivesZero) {
  Eigen::MatrixXd X(4, 1);
  X << -1, 1, -2, 2;
  Eigen::VectorXd y(4);
  y << 1, 1, 0, 0;
  // Each x appears once with y=1 and once with y=0 after reflection.
  Eigen::MatrixXd X2(8, 1);
  X2 << X, -X;
  Eigen::VectorXd y2(8);
  y2 << y, y;
  const auto fit = fit_mle(make_probit_data(X2, y2, {"x"}));
  EXPECT_NEAR(fit.theta_hat[0], 0.0, 1e-10);
}

TEST(Mle, GradientVanishesAtPimaFit) {
  const auto data = pima();
  const auto fit = fit_mle(data);
  const ProbitPosterior post(data);
  for (Eigen::Index i = 0; i < data.d(); ++i) {
    const double scale = data.X.col(i).cwiseAbs().mean();
    const double h = 1e-3 / scale;
    auto f = [&](double t) {
      Eigen::VectorXd th = fit.theta_hat;
      th[i] = t;
      return post.log_likelihood(th);
    };
    EXPECT_LT(std::abs(oracle::derivative(f, fit.theta_hat[i], h)), 1e-6) << i;
  }
  // Sigma is symmetric positive definite.
  EXPECT_TRUE(fit.sigma_hat.isApprox(fit.sigma_hat.transpose()));
  Eigen::LLT<Eigen::MatrixXd> llt(fit.sigma_hat);
  EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(ProbitPosterior, AnalyticDerivativesMatchFiniteDifferences) {
  const auto data = pima();
  const auto fit = fit_mle(data);
  const ProbitPosterior post(data);
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  Eigen::LLT<Eigen::MatrixXd> llt(fit.sigma_hat);
  const Eigen::MatrixXd L = llt.matrixL();
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd z(3);
    for (int i = 0; i < 3; ++i) z[i] = nd(gen);
    const Eigen::VectorXd theta = fit.theta_hat + 2.0 * L * z;
    const Eigen::VectorXd g = post.likelihood_gradient(theta);
    const Eigen::MatrixXd H = post.likelihood_hessian(theta);
    for (Eigen::Index i = 0; i < 3; ++i) {
      const double h = 1e-3 / data.X.col(i).cwiseAbs().mean();
      auto f = [&](double t) {
        Eigen::VectorXd th = theta;
        th[i] = t;
        return post.log_likelihood(th);
      };
      const double fd = oracle::derivative(f, theta[i], h);
      EXPECT_NEAR(g[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << rep << "," << i;
      for (Eigen::Index j = 0; j < 3; ++j) {
        auto gj = [&](double t) {
          Eigen::VectorXd th = theta;
          th[i] = t;
          return post.likelihood_gradient(th)[j];
        };
        const double fdh = oracle::derivative(gj, theta[i], h);
        EXPECT_NEAR(H(j, i), fdh, 1e-5 * std::max(1.0, std::abs(fdh))) << rep << "," << i << j;
      }
    }
  }
}

TEST(ProbitModel, ProposalMatchesFit) {
  const auto data = pima();
  const auto fit = fit_mle(data);
  const auto model = probit_model(data, fit, 3.0);
  EXPECT_EQ(model.dimension, 3u);
  RngStream rng(1);
  const int N = 20000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < N; ++i) mean += to_eigen(model.sample_proposal(rng));
  mean /= N;
  for (int i = 0; i < 3; ++i)
    EXPECT_NEAR(mean[i], fit.theta_hat[i], 5 * std::sqrt(3.0 * fit.sigma_hat(i, i) / N));
  EXPECT_THROW(probit_model(data, fit, 0.0), std::invalid_argument);
}

class ProbitAcceptance : public ::testing::TestWithParam<std::tuple<double, double, double>> {};

TEST_P(ProbitAcceptance, StandardImhRateInBand) {
  const auto [c, lo, hi] = GetParam();
  const auto data = pima();
  const auto model = probit_model(data, fit_mle(data), c);
  RngStream rng(derive_seed(11, StreamTag::Chain, static_cast<std::uint64_t>(c * 10)));
  const auto run = run_chain(model, model.initial_point, 100000, rng);
  const double rate = run.trace.acceptance_rate();
  EXPECT_GE(rate, lo);
  EXPECT_LE(rate, hi);
}

INSTANTIATE_TEST_SUITE_P(Bands, ProbitAcceptance,
                         ::testing::Values(std::make_tuple(1.0, 0.93, 0.99),
                                           std::make_tuple(3.0, 0.30, 0.44),
                                           std::make_tuple(10.0, 0.04, 0.13)));
