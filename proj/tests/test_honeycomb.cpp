#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "lgpolymer/honeycomb.hpp"
#include "lgpolymer/polymer.hpp"
#include "lgpolymer/sampler.hpp"
#include "lgpolymer/specialfn.hpp"

using namespace lgp;

TEST_CASE("operator structure") {
  const WeightField one = sample_field(1.0, 1, 1, 4);
  const TriangularOperator a1(one);
  CHECK(a1.size() == 1);
  CHECK(a1.dense()(0, 0) == doctest::Approx(std::exp(-one.log_weight(1, 1))));

  const WeightField f = sample_field(1.0, 4, 4, 5);
  const TriangularOperator a = build_operator(f);
  CHECK(a.side() == 4);
  CHECK(a.index({1, 1}) == 0);
  CHECK(a.index({2, 1}) == 4);
  CHECK(a.site(6) == LatticePoint{2, 3});
  Eigen::VectorXd e = Eigen::VectorXd::Zero(16);
  e[a.index({1, 1})] = 1.0;
  const Eigen::VectorXd v = a.apply<double>(e);
  for (int i = 0; i < 16; ++i) {
    const LatticePoint p = a.site(i);
    double expected = 0.0;
    if (p == LatticePoint{1, 1}) expected = std::exp(-f.log_weight(1, 1));
    if (p == LatticePoint{2, 1} || p == LatticePoint{1, 2}) expected = 1.0;
    CHECK(v[i] == doctest::Approx(expected));
  }
  const Eigen::MatrixXd d = a.dense();
  CHECK(d.isLowerTriangular());
  for (int i = 0; i < 16; ++i) CHECK((d.row(i).array() != 0.0).count() <= 3);
  CHECK_THROWS_AS(TriangularOperator(sample_field(1.0, 3, 4, 1)), std::invalid_argument);
}

TEST_CASE("matrix-free products and solves agree with dense algebra") {
  const WeightField f = sample_field(0.8, 4, 4, 6);
  const TriangularOperator a(f);
  const Eigen::MatrixXd d = a.dense();
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(d);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd b(16);
    for (auto& x : b) x = g(rng);
    CHECK((a.apply<double>(b) - d * b).norm() < 1e-12 * (d * b).norm());
    CHECK((a.apply_transpose<double>(b) - d.transpose() * b).norm() < 1e-12 * (d.transpose() * b).norm());
    // backward error: residual relative to |A| |x|
    const Eigen::VectorXd xs = a.solve<double>(b), xt = a.solve_transpose<double>(b);
    const double scale_s = (d.cwiseAbs() * xs.cwiseAbs()).norm() + b.norm();
    const double scale_t = (d.transpose().cwiseAbs() * xt.cwiseAbs()).norm() + b.norm();
    CHECK((a.apply<double>(xs) - b).norm() < 1e-12 * scale_s);
    CHECK((a.apply_transpose<double>(xt) - b).norm() < 1e-12 * scale_t);
    const Eigen::VectorXd x = a.solve<double>(b);
    const Eigen::VectorXd ref = lu.solve(b);
    CHECK((x - ref).norm() <= 1e-10 * ref.norm());
  }
  for (int s = 0; s < 16; ++s) {
    const Eigen::VectorXd col = a.solve<double>(Eigen::VectorXd::Unit(16, s));
    const Eigen::VectorXd ref = lu.solve(Eigen::VectorXd::Unit(16, s));
    CHECK((col - ref).norm() <= 1e-10 * ref.norm());
  }
  // long double path
  Eigen::Matrix<long double, Eigen::Dynamic, 1> bl = Eigen::Matrix<long double, Eigen::Dynamic, 1>::Ones(16);
  const auto xl = a.solve<long double>(bl);
  CHECK((a.apply<long double>(xl) - bl).norm() < 1e-15L * xl.norm());
}

TEST_CASE("inverse entries are signed partition functions") {
  const WeightField f = sample_field(1.0, 5, 5, 7);
  const auto diag = inverse_entry_check(f, {2, 3}, {2, 3});
  CHECK(diag.ok);
  CHECK(diag.lhs == doctest::Approx(std::exp(f.log_weight(2, 3))));
  const auto step = inverse_entry_check(f, {2, 3}, {3, 3});
  CHECK(step.ok);
  CHECK(step.lhs == doctest::Approx(-std::exp(f.log_weight(2, 3) + f.log_weight(3, 3))));
  for (double theta : {1.0, 3.0}) {
    const WeightField g = sample_field(theta, 5, 5, 8);
    int ok = 0;
    for (int sx = 1; sx <= 5; ++sx)
      for (int sy = 1; sy <= 5; ++sy)
        for (int tx = 1; tx <= 5; ++tx)
          for (int ty = 1; ty <= 5; ++ty) ok += inverse_entry_check(g, {sx, sy}, {tx, ty}).ok ? 1 : 0;
    CHECK(ok == 625);
  }
  CHECK(inverse_entry_check(f, {3, 3}, {2, 4}).rhs == 0.0);
  CHECK_THROWS_AS(inverse_entry_check(sample_field(1.0, 9, 9, 1), {1, 1}, {2, 2}), std::length_error);
  CHECK_THROWS_AS(inverse_entry_check(sample_field(0.5, 4, 4, 1), {1, 1}, {2, 2}), std::domain_error);
  CHECK_THROWS_AS(inverse_entry_check(f, {1, 1}, {6, 2}), std::out_of_range);
  RowMatrix huge = RowMatrix::Constant(3, 3, 400.0);
  CHECK_THROWS_AS(inverse_entry_check(WeightField::from_log_weights(huge, 2.0), {1, 1}, {2, 2}), std::range_error);
}

TEST_CASE("recurrence as a matrix identity") {
  const WeightField f = sample_field(2.0, 6, 6, 9);
  const TriangularOperator a(f);
  for (LatticePoint s : {LatticePoint{1, 1}, LatticePoint{3, 2}}) {
    const LogZGrid g = log_partition_grid(f, s);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(a.size());
    for (int i = 0; i < a.size(); ++i) {
      const LatticePoint t = a.site(i);
      if (!precedes(s, t)) continue;
      z[i] = ((t.x - s.x + t.y - s.y) % 2 == 0 ? 1.0 : -1.0) * std::exp(g.at(t));
    }
    const Eigen::VectorXd r = a.apply<double>(z);
    CHECK((r - Eigen::VectorXd::Unit(a.size(), a.index(s))).cwiseAbs().maxCoeff() < 1e-10 * z.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("smallest positive eigenvalue") {
  const WeightField one = sample_field(1.0, 1, 1, 3);
  const SpectralResult r1 = neg_log_lambda1(one);
  CHECK(r1.neg_log_lambda1 == doctest::Approx(one.log_weight(1, 1)).epsilon(1e-12));
  CHECK(r1.sandwich_ok);

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SpectralResult r = neg_log_lambda1(sample_field(1.0, 6, 6, 300 + seed));
    CHECK(r.converged);
    CHECK(r.sandwich_ok);
    CHECK(r.f_n <= r.neg_log_lambda1 + 1e-6);
    CHECK(r.neg_log_lambda1 <= r.f_n + 4.0 * std::log(6.0) + 1e-6);
  }

  const WeightField f8 = sample_field(1.0, 8, 8, 77);
  const SpectralResult r8 = neg_log_lambda1(f8);
  REQUIRE(r8.dense_neg_log_lambda1.has_value());
  CHECK(std::abs(r8.neg_log_lambda1 - *r8.dense_neg_log_lambda1) < 1e-6);
  // independent oracle: smallest singular value of the dense operator
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(TriangularOperator(f8).dense());
  const double smin = svd.singularValues().minCoeff();
  CHECK(std::abs(r8.neg_log_lambda1 + std::log(smin)) < 1e-6);
  CHECK(r8.f_n == doctest::Approx(max_free_energy_exact(f8).value));

  // large weights: the iteration runs in extended precision
  RowMatrix lw = sample_field(1.0, 10, 10, 5).log_weights;
  lw.array() += 40.0;
  const WeightField big = WeightField::from_log_weights(lw, 1.0, 5);
  const SpectralResult rb = neg_log_lambda1(big);
  CHECK(rb.f_n > 700.0);
  CHECK(rb.converged);
  CHECK(rb.sandwich_ok);
  REQUIRE(rb.dense_neg_log_lambda1.has_value());
  CHECK(std::abs(rb.neg_log_lambda1 - *rb.dense_neg_log_lambda1) < 1e-6);

  // F_N between 355 and 700: entries fit in double but their squares do not
  RowMatrix lw2 = sample_field(1.0, 10, 10, 6).log_weights;
  lw2.array() += 22.0;
  const WeightField mid = WeightField::from_log_weights(lw2, 1.0, 6);
  const SpectralResult rm = neg_log_lambda1(mid);
  CHECK(rm.f_n > 400.0);
  CHECK(rm.f_n + 6.0 * std::log(10.0) + 20.0 < 700.0);
  CHECK(rm.converged);
  CHECK(rm.sandwich_ok);
  REQUIRE(rm.dense_neg_log_lambda1.has_value());
  CHECK(std::abs(rm.neg_log_lambda1 - *rm.dense_neg_log_lambda1) < 1e-6);

  CHECK_THROWS_AS(neg_log_lambda1(sample_field(1.0, 2, 3, 1)), std::invalid_argument);
}

TEST_CASE("k = 1 singular value bound") {
  for (double theta : {0.5, critical_theta(), 5.0}) {
    const WeightField f = sample_field(theta, 7, 7, 11);
    const SpectralResult r = neg_log_lambda1(f);
    double max_log_z = kNegInf;
    for (int sx = 1; sx <= 7; ++sx)
      for (int sy = 1; sy <= 7; ++sy) max_log_z = std::max(max_log_z, log_partition_grid(f, {sx, sy}).values.maxCoeff());
    CHECK(max_log_z <= r.neg_log_lambda1 + 1e-9);
    CHECK(r.neg_log_lambda1 <= max_log_z + 4.0 * std::log(7.0) + 1e-9);
  }
}

TEST_CASE("dense spectrum") {
  const WeightField f = sample_field(1.5, 6, 6, 12);
  const Eigen::VectorXd s = spectrum_small(f);
  REQUIRE(s.size() == 36);
  for (int i = 1; i < 36; ++i) CHECK(s[i] >= s[i - 1]);
  CHECK(s.array().log().sum() == doctest::Approx(-f.log_weights.sum()).epsilon(1e-10));
  CHECK(std::abs(s[0] - std::exp(-neg_log_lambda1(f).neg_log_lambda1)) < 1e-8 * s[0]);

  const WeightField f2 = sample_field(1.5, 2, 2, 13);
  const Eigen::VectorXd s2 = spectrum_small(f2);
  const Eigen::MatrixXd full = bipartite_matrix(f2);
  REQUIRE(full.rows() == 8);
  CHECK((full - full.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(full);
  const Eigen::VectorXd ev = eig.eigenvalues();  // ascending
  for (int i = 0; i < 4; ++i) {
    CHECK(ev[4 + i] == doctest::Approx(s2[i]).epsilon(1e-10));
    CHECK(ev[3 - i] == doctest::Approx(-s2[i]).epsilon(1e-10));
  }
  CHECK_THROWS_AS(spectrum_small(sample_field(1.0, 13, 13, 1)), std::length_error);
}
