#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dmps/metrics.hpp"
#include "dmps/rng.hpp"
#include "oracles.hpp"

using namespace dmps;

namespace {

std::vector<Vector> draws_from(const GaussianPosterior& dist, std::size_t n, std::uint64_t seed) {
  const Eigen::LLT<Matrix> llt(dist.covariance);
  const Matrix l = llt.matrixL();
  const NormalStream rng(seed);
  std::vector<Vector> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(dist.mean + l * rng.draw(k, dist.mean.size()));
  return out;
}

}  // namespace

TEST(Psnr, IdenticalIsFlagged) {
  const Vector x = Vector::LinSpaced(10, 0.0, 1.0);
  const auto r = psnr(x, x);
  EXPECT_TRUE(r.identical);
  EXPECT_TRUE(std::isinf(r.decibels));
}

TEST(Psnr, ConstantOffset) {
  const auto r = psnr(Vector::Constant(37, 0.5), Vector::Constant(37, 0.6));
  EXPECT_FALSE(r.identical);
  EXPECT_NEAR(r.decibels, 20.0, 1e-12);
  // MSE 0.01 with a single nonzero error.
  Vector est = Vector::Zero(4);
  est[2] = 0.2;
  EXPECT_NEAR(psnr(Vector::Zero(4), est).decibels, 20.0, 1e-12);
}

TEST(Psnr, PermutationAndShiftInvariance) {
  std::mt19937_64 gen(1);
  const Vector ref = (oracle::random_vector(gen, 20).array() * 0.1 + 0.5).matrix();
  const Vector est = (oracle::random_vector(gen, 20).array() * 0.1 + 0.5).matrix();
  std::vector<Index> perm(20);
  for (Index i = 0; i < 20; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), gen);
  Vector pr(20);
  Vector pe(20);
  for (Index i = 0; i < 20; ++i) {
    pr[i] = ref[perm[static_cast<std::size_t>(i)]];
    pe[i] = est[perm[static_cast<std::size_t>(i)]];
  }
  EXPECT_NEAR(psnr(ref, est).decibels, psnr(pr, pe).decibels, 1e-12);
  const Vector shift = Vector::Constant(20, 0.07);
  EXPECT_NEAR(psnr(ref, ref + shift).decibels, psnr(ref, ref - shift).decibels, 1e-9);
  EXPECT_NEAR(psnr(ref, ref + shift, 2.0).decibels - psnr(ref, ref + shift).decibels, 20.0 * std::log10(2.0), 1e-9);
}

TEST(Psnr, ClampOption) {
  const Vector ref = Vector::Constant(4, 1.0);
  const Vector est = Vector::Constant(4, 1.5);
  EXPECT_TRUE(psnr(ref, est, 1.0, true).identical);
  EXPECT_FALSE(psnr(ref, est).identical);
}

TEST(Psnr, Errors) {
  try {
    (void)psnr(Vector::Zero(3), Vector::Zero(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension_mismatch);
  }
}

TEST(Moments, TwoPoints) {
  const std::vector<Vector> s{Vector::Constant(1, 0.0), Vector::Constant(1, 2.0)};
  const auto m = moments(s);
  EXPECT_EQ(m.count, 2U);
  EXPECT_DOUBLE_EQ(m.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(m.cov()(0, 0), 2.0);
}

TEST(Moments, SingleSampleHasNoCovariance) {
  const std::vector<Vector> s{Vector::Constant(2, 3.0)};
  const auto m = moments(s);
  EXPECT_EQ(m.mean, Vector::Constant(2, 3.0));
  EXPECT_FALSE(m.has_covariance());
  try {
    (void)m.cov();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_set);
  }
  try {
    (void)moments(std::vector<Vector>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_set);
  }
}

TEST(Moments, StandardNormalDraws) {
  const NormalStream rng(123);
  std::vector<Vector> s;
  for (std::size_t k = 0; k < 100000; ++k) s.push_back(rng.draw(k, 1));
  const auto m = moments(s);
  EXPECT_LE(std::abs(m.mean[0]), 0.02);
  EXPECT_LE(std::abs(m.cov()(0, 0) - 1.0), 0.05);
}

TEST(Moments, PooledSets) {
  std::mt19937_64 gen(2);
  std::vector<Vector> a;
  std::vector<Vector> b;
  for (int i = 0; i < 50; ++i) a.push_back(oracle::random_vector(gen, 3));
  for (int i = 0; i < 50; ++i) b.push_back(oracle::random_vector(gen, 3) + Vector::Constant(3, 1.0));
  std::vector<Vector> all = a;
  all.insert(all.end(), b.begin(), b.end());
  const auto ma = moments(a);
  const auto mb = moments(b);
  const auto m = moments(all);
  EXPECT_LE((m.mean - 0.5 * (ma.mean + mb.mean)).cwiseAbs().maxCoeff(), 1e-15);
  const Vector da = ma.mean - m.mean;
  const Vector db = mb.mean - m.mean;
  const Matrix pooled = (49.0 * (ma.cov() + mb.cov()) + 50.0 * (da * da.transpose() + db * db.transpose())) / 99.0;
  EXPECT_LE((m.cov() - pooled).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((m.cov() - m.cov().transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MomentError, ShrinksWithSampleCount) {
  Matrix c(2, 2);
  c << 1.0, 0.4, 0.4, 0.8;
  const GaussianPosterior truth{Vector::Constant(2, 1.5), c};
  const auto small = posterior_moment_error(draws_from(truth, 1000, 4), truth);
  const auto large = posterior_moment_error(draws_from(truth, 100000, 5), truth);
  EXPECT_LT(large.mean_rel_err, small.mean_rel_err);
  EXPECT_LT(large.cov_rel_err, small.cov_rel_err);
  EXPECT_LT(large.mean_rel_err, 0.01);
  EXPECT_LT(large.cov_rel_err, 0.02);
}

TEST(MomentError, ZeroTruthUsesAbsoluteScale) {
  const GaussianPosterior truth{Vector::Zero(1), Matrix::Identity(1, 1)};
  const std::vector<Vector> s{Vector::Constant(1, -0.5), Vector::Constant(1, 0.7)};
  const auto e = posterior_moment_error(s, truth);
  EXPECT_NEAR(e.mean_rel_err, 0.1, 1e-15);
  EXPECT_NEAR(e.cov_rel_err, std::abs(0.72 - 1.0), 1e-12);
}

TEST(MomentError, MixtureTruthAndDimensionErrors) {
  const GaussianPrior a(Vector::Constant(1, -1.0), Covariance::isotropic(1, 0.5));
  const GaussianPrior b(Vector::Constant(1, 1.0), Covariance::isotropic(1, 0.5));
  const GmmPrior mix({0.5, 0.5}, {a, b});
  const auto mm = mixture_moments(mix);
  EXPECT_NEAR(mm.mean[0], 0.0, 1e-15);
  EXPECT_NEAR(mm.covariance(0, 0), 1.5, 1e-15);
  const std::vector<Vector> s{Vector::Constant(1, -1.0), Vector::Constant(1, 1.0), Vector::Constant(1, 2.0),
                              Vector::Constant(1, -2.0)};
  const auto e = posterior_moment_error(s, mix);
  EXPECT_NEAR(e.mean_rel_err, 0.0, 1e-15);
  EXPECT_NEAR(e.cov_rel_err, std::abs(10.0 / 3.0 - 1.5) / 1.5, 1e-12);
  try {
    (void)posterior_moment_error(std::vector<Vector>{Vector::Zero(2), Vector::Zero(2)}, mm);
    FAIL();
  } catch (const Error& e2) {
    EXPECT_EQ(e2.kind(), ErrorKind::dimension_mismatch);
  }
}

TEST(ComponentShare, NearestComponent) {
  const GaussianPrior a(Vector::Constant(1, -1.0), Covariance::isotropic(1, 0.1));
  const GaussianPrior b(Vector::Constant(1, 1.0), Covariance::isotropic(1, 0.1));
  const GmmPrior mix({0.5, 0.5}, {a, b});
  const std::vector<Vector> s{Vector::Constant(1, -0.9), Vector::Constant(1, 0.8), Vector::Constant(1, 1.3),
                              Vector::Constant(1, 2.0)};
  EXPECT_DOUBLE_EQ(component_share(s, mix, 0), 0.25);
  EXPECT_DOUBLE_EQ(component_share(s, mix, 1), 0.75);
}
