#include <cmath>
#include <random>

#include "doctest.h"
#include "dtdd/linalg.hpp"
#include "unit/oracle.hpp"

using namespace dtdd::linalg;

namespace {
const cd I{0.0, 1.0};

bool near(const CVec& a, const CVec& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}
}  // namespace

TEST_CASE("line_project on axes") {
  CHECK(near(line_project({1.0, 1.0}, {1.0, 0.0}), CVec{1.0, 0.0}, 1e-15));
  CHECK(near(line_project({0.0, 1.0}, {1.0, 0.0}), CVec{0.0, 0.0}, 1e-15));
}

TEST_CASE("line_project matches the formula evaluated by hand") {
  // x^H y = conj(1)(2+i) + conj(i)(3) = 2 + i - 3i = 2 - 2i; |x|^2 = 2
  // coefficient 1 - i; result (1 - i, (1 - i) i) = (1 - i, 1 + i)
  const CVec y{2.0 + I, 3.0};
  const CVec x{1.0, I};
  CHECK(near(line_project(y, x), CVec{1.0 - I, 1.0 + I}, 1e-15));
}

TEST_CASE("line_project rejects a zero direction") {
  CHECK_THROWS_AS(line_project({1.0, 2.0}, {0.0, 0.0}), ZeroVector);
  CHECK_THROWS_AS(line_project({1.0, 2.0}, {1.0}), DimensionMismatch);
}

TEST_CASE("gram_schmidt small cases") {
  const std::vector<CVec> orth{{1.0, 0.0}, {0.0, 1.0}};
  auto b = gram_schmidt(orth);
  REQUIRE(b.size() == 2);
  CHECK(near(b.vectors[0], orth[0], 1e-15));
  CHECK(near(b.vectors[1], orth[1], 1e-15));

  const std::vector<CVec> skew{{1.0, 0.0}, {1.0, 1.0}};
  b = gram_schmidt(skew);
  REQUIRE(b.size() == 2);
  CHECK(near(b.vectors[1], CVec{0.0, 1.0}, 1e-15));
}

TEST_CASE("gram_schmidt drops dependent and zero vectors") {
  const std::vector<CVec> vs{{1.0, I, 0.0}, {2.0, 2.0 * I, 0.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}};
  const auto b = gram_schmidt(vs);
  CHECK(b.size() == 2);
  CHECK(b.dropped == std::vector<std::size_t>{1, 2});
  const std::vector<CVec> mixed{{1.0, 0.0}, {1.0, 0.0, 0.0}};
  CHECK_THROWS_AS(gram_schmidt(mixed), DimensionMismatch);
}

TEST_CASE("gram_schmidt is unnormalized and keeps the first vector") {
  const std::vector<CVec> vs{{3.0, 4.0 * I}, {1.0, 1.0}};
  const auto b = gram_schmidt(vs);
  CHECK(near(b.vectors[0], vs[0], 0.0));
}

TEST_CASE("gram_schmidt orthogonality and span against an SVD oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 7);
    const std::size_t k = 1 + static_cast<std::size_t>(trial % n);
    std::vector<CVec> vs;
    for (std::size_t i = 0; i < k; ++i) vs.push_back(oracle::random_vec(rng, n));
    const auto b = gram_schmidt(vs);
    REQUIRE(b.size() == k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j)
        CHECK(std::abs(dot(b.vectors[i], b.vectors[j])) <= 1e-9 * norm(b.vectors[i]) * norm(b.vectors[j]));
    const auto p = oracle::to_eigen(build_projector(b));
    const auto ref = oracle::svd_projector(oracle::to_eigen(CMat::from_columns(vs)));
    CHECK(oracle::max_abs_diff(p, ref) <= 1e-9);
  }
}

TEST_CASE("build_projector fixed cases") {
  Basis e1{4, {CVec{1.0, 0.0, 0.0, 0.0}}, {}};
  const CMat p = build_projector(e1);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(p(r, c) - cd(r == 0 && c == 0 ? 1.0 : 0.0)) < 1e-15);

  std::mt19937_64 rng(3);
  std::vector<CVec> full;
  for (int i = 0; i < 4; ++i) full.push_back(oracle::random_vec(rng, 4));
  const CMat id = build_projector(gram_schmidt(full));
  CHECK(frobenius_norm(id - CMat::identity(4)) < 1e-9);
  CHECK_THROWS_AS(build_projector(Basis{4, {}, {}}), DimensionMismatch);
}

TEST_CASE("build_projector eigenvalues are zero or one") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<CVec> vs;
    for (int i = 0; i < 3; ++i) vs.push_back(oracle::random_vec(rng, 4));
    const auto p = oracle::to_eigen(build_projector(gram_schmidt(vs)));
    CHECK(oracle::max_abs_diff(p * p, p) < 1e-9);
    CHECK(oracle::max_abs_diff(p, p.adjoint()) < 1e-9);
    Eigen::SelfAdjointEigenSolver<oracle::Mat> es(p);
    int ones = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const double ev = es.eigenvalues()(i);
      CHECK((std::abs(ev) < 1e-6 || std::abs(ev - 1.0) < 1e-6));
      if (std::abs(ev - 1.0) < 1e-6) ++ones;
    }
    CHECK(ones == 3);
  }
}

TEST_CASE("literal transpose gives a non-Hermitian matrix for complex bases") {
  const std::vector<CVec> vs{{1.0, I, 0.5}, {0.3 * I, 1.0, 2.0}};
  const CMat p = build_projector(gram_schmidt(vs), TransposeForm::kLiteral);
  CHECK(hermitian_deviation(p) > 1e-3);
}

TEST_CASE("hermitian_solve small and random systems") {
  CHECK(near(hermitian_solve(CMat::identity(3), {1.0, I, -2.0}), CVec{1.0, I, -2.0}, 1e-15));
  CMat two = CMat::identity(2);
  two *= 2.0;
  CHECK(near(hermitian_solve(two, {4.0, 6.0}), CVec{2.0, 3.0}, 1e-15));

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const CMat g = oracle::random_mat(rng, 4, 4);
    CMat a = g * g.adjoint();
    a.add_diagonal(0.1);
    const CVec b = oracle::random_vec(rng, 4);
    const CVec x = hermitian_solve(a, b);
    CHECK(norm(a * x - b) / norm(b) < 1e-8);
    const oracle::Vec ref = oracle::to_eigen(a).ldlt().solve(oracle::to_eigen(b));
    CHECK((oracle::to_eigen(x) - ref).norm() <= 1e-8 * ref.norm());
  }
}

TEST_CASE("hermitian_solve handles indefinite and rejects singular systems") {
  CMat indef(2, 2, {1.0, 0.0, 0.0, -1.0});
  CHECK(near(hermitian_solve(indef, {1.0, 1.0}), CVec{1.0, -1.0}, 1e-15));
  CMat singular(2, 2, {1.0, 1.0, 1.0, 1.0});
  CHECK_THROWS_AS(hermitian_solve(singular, {1.0, 0.0}), IllConditioned);
  CMat skew(2, 2, {1.0, 2.0, 0.0, 1.0});
  CHECK_THROWS_AS(hermitian_solve(skew, {1.0, 0.0}), DimensionMismatch);
}

TEST_CASE("hermitian_eigen agrees with a dense eigensolver") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 8);
    const CMat g = oracle::random_mat(rng, n, n);
    const CMat a = g + g.adjoint();
    const auto eig = hermitian_eigen(a);
    Eigen::SelfAdjointEigenSolver<oracle::Mat> es(oracle::to_eigen(a));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(eig.values[i] - es.eigenvalues()(static_cast<Eigen::Index>(i))) < 1e-9);
      const CVec v = eig.vectors.col(i);
      CVec av = a * v;
      av -= eig.values[i] * v;
      CHECK(norm(av) < 1e-9);
    }
  }
}
