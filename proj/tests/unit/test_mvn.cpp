#include <doctest.h>

#include <cmath>
#include <numbers>

#include "incad/errors.hpp"
#include "incad/mvn.hpp"
#include "support/oracles.hpp"

using namespace incad;

namespace {

Observation vec(std::initializer_list<double> v) {
  Observation x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x(i++) = e;
  return x;
}

NIWParams niw1(const oracle::Niw1& p) {
  NIWParams n;
  n.mu0 = vec({p.mu0});
  n.kappa0 = p.kappa0;
  n.nu0 = p.nu0;
  n.psi = Matrix::Constant(1, 1, p.psi);
  return n;
}

}  // namespace

TEST_CASE("mvn_logpdf at the mode of standard normals") {
  CHECK(mvn_logpdf(vec({0.0}), {vec({0.0}), Matrix::Identity(1, 1)}) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
  CHECK(mvn_logpdf(vec({1.0, 1.0}), {vec({1.0, 1.0}), Matrix::Identity(2, 2)}) ==
        doctest::Approx(-std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("mvn_logpdf agrees with a quadrature-normalised gaussian") {
  const double got = mvn_logpdf(vec({2.0}), {vec({0.0}), Matrix::Constant(1, 1, 4.0)});
  CHECK(std::abs(got - oracle::gaussian_logpdf_quadrature(2.0, 0.0, 4.0)) < 1e-10);
}

TEST_CASE("mvn_logpdf is maximal at the mean") {
  Matrix cov(2, 2);
  cov << 2.0, 0.3, 0.3, 0.5;
  const MVNParams p{vec({1.0, -1.0}), cov};
  const double at_mode = mvn_logpdf(p.mean, p);
  RandomSource rng(3);
  for (int i = 0; i < 50; ++i) {
    const Observation x = p.mean + vec({rng.normal(), rng.normal()});
    CHECK(mvn_logpdf(x, p) < at_mode);
  }
}

TEST_CASE("non positive-definite covariance is a numerical error") {
  Matrix cov(2, 2);
  cov << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(GaussianDensity({vec({0.0, 0.0}), cov}), NumericalError);
  CHECK_THROWS_AS(mvn_logpdf(vec({0.0, 0.0}), {vec({0.0, 0.0}), cov}), NumericalError);
}

TEST_CASE("sufficient statistics add and remove") {
  SUBCASE("single point definition") {
    SufficientStats s = stats_add(SufficientStats::empty(2), vec({1.0, 2.0}));
    CHECK(s.n == 1);
    CHECK(s.sum == vec({1.0, 2.0}));
    Matrix expected(2, 2);
    expected << 1.0, 2.0, 2.0, 4.0;
    CHECK(s.sum_outer == expected);
  }
  SUBCASE("add then remove is bit-identical") {
    SufficientStats s = SufficientStats::empty(2);
    s.add(vec({0.5, -1.25}));
    s.add(vec({3.0, 0.75}));
    const SufficientStats before = s;
    s = stats_remove(stats_add(s, vec({-2.5, 4.0})), vec({-2.5, 4.0}));
    CHECK(s.n == before.n);
    CHECK(s.sum == before.sum);
    CHECK(s.sum_outer == before.sum_outer);
  }
  SUBCASE("fold and unfold random points") {
    RandomSource rng(11);
    std::vector<Observation> pts;
    SufficientStats s = SufficientStats::empty(3);
    for (int i = 0; i < 100; ++i) {
      pts.push_back(vec({rng.normal(), 5.0 * rng.normal(), rng.uniform()}));
      s.add(pts.back());
    }
    std::shuffle(pts.begin(), pts.end(), rng.engine());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      s.remove(pts[i]);
      if (i + 1 < pts.size()) {
        SufficientStats fresh = SufficientStats::empty(3);
        for (std::size_t j = i + 1; j < pts.size(); ++j) fresh.add(pts[j]);
        CHECK((s.sum - fresh.sum).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((s.sum_outer - fresh.sum_outer).cwiseAbs().maxCoeff() < 1e-9);
      }
    }
    CHECK(s.n == 0);
    CHECK(s.sum.isZero(0.0));
    CHECK(s.sum_outer.isZero(0.0));
  }
  SUBCASE("remove from empty throws") {
    SufficientStats s = SufficientStats::empty(1);
    CHECK_THROWS_AS(s.remove(vec({1.0})), std::logic_error);
  }
}

TEST_CASE("niw_posterior closed form") {
  const NIWParams prior = niw1({0.0, 1.0, 3.0, 1.0});
  SUBCASE("empty data returns the prior") {
    const NIWParams post = niw_posterior(prior, SufficientStats::empty(1));
    CHECK(post.kappa0 == prior.kappa0);
    CHECK(post.nu0 == prior.nu0);
    CHECK(post.mu0 == prior.mu0);
    CHECK(post.psi == prior.psi);
  }
  SUBCASE("one point by hand") {
    const NIWParams post = niw_posterior(prior, stats_add(SufficientStats::empty(1), vec({4.0})));
    CHECK(post.kappa0 == doctest::Approx(2.0));
    CHECK(post.nu0 == doctest::Approx(4.0));
    CHECK(post.mu0(0) == doctest::Approx(2.0));
    CHECK(post.psi(0, 0) == doctest::Approx(9.0));
  }
  SUBCASE("batch update equals sequential folding") {
    NIWParams p2;
    p2.mu0 = vec({0.5, -0.5});
    p2.kappa0 = 0.3;
    p2.nu0 = 4.0;
    p2.psi = Matrix::Identity(2, 2) * 0.7;
    RandomSource rng(5);
    SufficientStats all = SufficientStats::empty(2);
    NIWParams seq = p2;
    for (int i = 0; i < 25; ++i) {
      const Observation x = vec({rng.normal() + 2.0, rng.normal() - 1.0});
      all.add(x);
      seq = niw_posterior(seq, stats_add(SufficientStats::empty(2), x));
    }
    const NIWParams batch = niw_posterior(p2, all);
    CHECK(std::abs(batch.kappa0 - seq.kappa0) < 1e-9);
    CHECK(std::abs(batch.nu0 - seq.nu0) < 1e-9);
    CHECK((batch.mu0 - seq.mu0).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((batch.psi - seq.psi).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("sample_niw") {
  SUBCASE("deterministic under a seed") {
    const NIWParams p = niw1({1.0, 2.0, 5.0, 3.0});
    RandomSource a(99), b(99);
    const MVNParams x = sample_niw(p, a);
    const MVNParams y = sample_niw(p, b);
    CHECK(x.mean == y.mean);
    CHECK(x.covariance == y.covariance);
  }
  SUBCASE("variance concentrates for large nu") {
    const NIWParams p = niw1({0.0, 1.0, 1e4, 1e4});
    RandomSource rng(1);
    for (int i = 0; i < 20; ++i) CHECK(std::abs(sample_niw(p, rng).covariance(0, 0) - 1.0) < 0.1);
  }
  SUBCASE("Monte-Carlo means match the analytic posterior") {
    NIWParams prior;
    prior.mu0 = vec({0.0, 0.0});
    prior.kappa0 = 1.0;
    prior.nu0 = 6.0;
    prior.psi = Matrix::Identity(2, 2);
    SufficientStats s = SufficientStats::empty(2);
    s.add(vec({1.0, 2.0}));
    s.add(vec({2.0, 1.0}));
    s.add(vec({3.0, 3.0}));
    const NIWParams post = niw_posterior(prior, s);
    RandomSource rng(2024);
    const int n = 10000;
    Vector sum = Vector::Zero(2), sumsq = Vector::Zero(2);
    Matrix cov_sum = Matrix::Zero(2, 2);
    for (int i = 0; i < n; ++i) {
      const MVNParams d = sample_niw(post, rng);
      sum += d.mean;
      sumsq += d.mean.cwiseAbs2();
      cov_sum += d.covariance;
      Eigen::LLT<Matrix> llt(d.covariance);
      REQUIRE(llt.info() == Eigen::Success);
    }
    const Vector mean = sum / n;
    const Vector se = ((sumsq / n - mean.cwiseAbs2()) / n).cwiseSqrt();
    for (int j = 0; j < 2; ++j) CHECK(std::abs(mean(j) - post.mu0(j)) < 3.0 * se(j));
    const Matrix expected_cov = post.psi / (post.nu0 - 2 - 1);
    CHECK(((cov_sum / n) - expected_cov).cwiseAbs().maxCoeff() < 0.05 * expected_cov.maxCoeff());
  }
}

TEST_CASE("log_predictive matches quadrature") {
  RandomSource rng(7);
  for (int i = 0; i < 10; ++i) {
    const oracle::Niw1 p{rng.uniform() * 4.0 - 2.0, 0.2 + 3.0 * rng.uniform(), 1.5 + 10.0 * rng.uniform(),
                         0.3 + 3.0 * rng.uniform()};
    const double x = p.mu0 + 6.0 * rng.uniform() - 3.0;
    CHECK(std::abs(log_predictive(vec({x}), niw1(p)) - oracle::log_predictive_quadrature(x, p)) < 1e-6);
  }
}

TEST_CASE("log_predictive equals the closed-form one-point marginal") {
  const oracle::Niw1 p{0.5, 0.8, 4.0, 2.0};
  const double xs[] = {1.7};
  CHECK(log_predictive(vec({1.7}), niw1(p)) == doctest::Approx(oracle::log_marginal_1d(xs, p)).epsilon(1e-12));
}

TEST_CASE("log_predictive integrates to one and is symmetric") {
  const oracle::Niw1 p{0.0, 1.0, 5.0, 2.0};
  const NIWParams n = niw1(p);
  double mass = 0.0;
  const double h = 0.01;
  for (double x = -200.0; x <= 200.0; x += h) mass += std::exp(log_predictive(vec({x}), n)) * h;
  CHECK(std::abs(mass - 1.0) < 1e-4);
  for (double d : {0.3, 1.0, 7.5}) {
    CHECK(log_predictive(vec({d}), n) == doctest::Approx(log_predictive(vec({-d}), n)).epsilon(1e-14));
  }
}

TEST_CASE("PredictiveDensity caches the same value as log_predictive") {
  NIWParams p;
  p.mu0 = vec({0.2, -0.4});
  p.kappa0 = 0.5;
  p.nu0 = 5.0;
  p.psi = Matrix::Identity(2, 2) * 1.5;
  const PredictiveDensity cached(p);
  const Observation x = vec({1.0, 0.5});
  CHECK(cached.log_pdf(x) == doctest::Approx(log_predictive(x, p)).epsilon(1e-14));
  CHECK(cached.dof() == doctest::Approx(4.0));
}

TEST_CASE("NIW validation") {
  NIWParams p = niw1({0.0, 1.0, 3.0, 1.0});
  CHECK_NOTHROW(p.validate());
  p.kappa0 = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = niw1({0.0, 1.0, -0.5, 1.0});
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("sample_moments uses the 1/N covariance") {
  const std::vector<Observation> pts{vec({0.0, 0.0}), vec({2.0, 0.0}), vec({0.0, 4.0}), vec({2.0, 4.0})};
  const MVNParams m = sample_moments(pts);
  CHECK(m.mean == vec({1.0, 2.0}));
  CHECK(m.covariance(0, 0) == doctest::Approx(1.0));
  CHECK(m.covariance(1, 1) == doctest::Approx(4.0));
  CHECK(m.covariance(0, 1) == doctest::Approx(0.0));
}
