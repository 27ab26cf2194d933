#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ctpop/extract.hpp"
#include "ctpop/pop.hpp"
#include "ctpop/relax.hpp"
#include "doctest.h"

using namespace ctpop;

namespace {

// P M P for the stored scaling diagonal: the matrix the solver hands back.
Eigen::MatrixXd scale_up(const Eigen::MatrixXd& M, const ScalingDiagonal& sc) {
  const Eigen::Map<const Eigen::VectorXd> d(sc.diag.data(),
                                            static_cast<long>(sc.diag.size()));
  return d.asDiagonal() * M * d.asDiagonal();
}

Eigen::MatrixXd atomic_moment_matrix(int n, int k,
                                     const std::vector<std::vector<double>>& pts,
                                     const std::vector<double>& w) {
  return moment_matrix(MomentVector::from_atoms(n, 2 * k, pts, w), k);
}

// Greedy nearest-point matching of extracted atoms against references.
void match_atoms(const std::vector<Atom>& got,
                 const std::vector<std::vector<double>>& pts,
                 const std::vector<double>& w, double tol) {
  REQUIRE(got.size() == pts.size());
  std::vector<bool> used(pts.size(), false);
  for (const auto& atom : got) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (used[j]) continue;
      double d = 0.0;
      for (int i = 0; i < atom.point.size(); ++i)
        d = std::max(d, std::abs(atom.point[i] - pts[j][i]));
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    REQUIRE(best >= 0);
    used[best] = true;
    CHECK(best_d <= tol);
    CHECK(atom.weight == doctest::Approx(w[best]).epsilon(tol).scale(1.0));
  }
}

}  // namespace

TEST_CASE("moment_from_X undoes the trace scaling") {
  SUBCASE("P I P maps back to the identity") {
    const ScalingDiagonal sc = theta_coeffs(2, 2);
    const int s = static_cast<int>(sc.diag.size());
    const Eigen::MatrixXd X =
        scale_up(Eigen::MatrixXd::Identity(s, s), sc);
    const Eigen::MatrixXd M = moment_from_X(X, sc);
    CHECK((M - Eigen::MatrixXd::Identity(s, s)).cwiseAbs().maxCoeff() <=
          1e-12);
  }

  SUBCASE("round trip on an atomic moment matrix") {
    const ScalingDiagonal sc = theta_coeffs(2, 2);
    const Eigen::MatrixXd M =
        atomic_moment_matrix(2, 2, {{0.3, -0.4}, {-0.7, 0.2}}, {0.6, 0.4});
    const Eigen::MatrixXd back = moment_from_X(scale_up(M, sc), sc);
    CHECK((back - M).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("Dirac mass at -1 gives the sign-alternating matrix") {
    const ScalingDiagonal sc = theta_coeffs(1, 2);
    const Eigen::MatrixXd M = atomic_moment_matrix(1, 2, {{-1.0}}, {1.0});
    const Eigen::MatrixXd back = moment_from_X(scale_up(M, sc), sc);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(back(i, j) == doctest::Approx(((i + j) % 2) ? -1.0 : 1.0));
  }
}

TEST_CASE("moments_from_matrix recovers the generating sequence") {
  const int n = 2, k = 2;
  const std::vector<std::vector<double>> pts = {{0.5, 0.1}, {-0.2, 0.8}};
  const std::vector<double> w = {0.3, 0.7};
  const MomentVector y = MomentVector::from_atoms(n, 2 * k, pts, w);
  const MomentVector got = moments_from_matrix(moment_matrix(y, k), n, k);
  CHECK(got.n == n);
  CHECK(got.order == 2 * k);
  REQUIRE(got.values.size() == y.values.size());
  for (std::size_t i = 0; i < y.values.size(); ++i)
    CHECK(got.values[i] == doctest::Approx(y.values[i]).epsilon(1e-13));
}

TEST_CASE("flatness_check") {
  SUBCASE("single Dirac mass is flat at every order") {
    const Eigen::MatrixXd M = atomic_moment_matrix(1, 2, {{-1.0}}, {1.0});
    const FlatnessReport rep = flatness_check(M, 1, 2, 1);
    CHECK(rep.flat);
    REQUIRE(rep.ranks.size() == 2);
    CHECK(rep.ranks[0] == std::pair<int, int>{1, 1});
    CHECK(rep.ranks[1] == std::pair<int, int>{2, 1});
  }

  SUBCASE("symmetric two-atom measure is flat with rank 2") {
    const Eigen::MatrixXd M =
        atomic_moment_matrix(1, 2, {{1.0}, {-1.0}}, {0.5, 0.5});
    const FlatnessReport rep = flatness_check(M, 1, 2, 1);
    CHECK(rep.flat);
    CHECK(rep.ranks[0] == std::pair<int, int>{1, 2});
    CHECK(rep.ranks[1] == std::pair<int, int>{2, 2});
  }

  SUBCASE("identity is as far from flat as possible") {
    const FlatnessReport rep =
        flatness_check(Eigen::MatrixXd::Identity(6, 6), 2, 2, 1);
    CHECK_FALSE(rep.flat);
    CHECK(rep.ranks[0] == std::pair<int, int>{1, 3});
    CHECK(rep.ranks[1] == std::pair<int, int>{2, 6});
  }

  SUBCASE("w = 0 compares the matrix against itself") {
    const FlatnessReport rep =
        flatness_check(Eigen::MatrixXd::Identity(6, 6), 2, 2, 0);
    CHECK(rep.flat);
  }

  SUBCASE("rank_tol moves the decision") {
    // Perturb the rank-1 matrix along the pure degree-2 row only: the order
    // k-1 block keeps rank 1, and the order-k block picks up rank 2 exactly
    // when rank_tol drops below the perturbation.
    Eigen::MatrixXd M = atomic_moment_matrix(1, 2, {{0.5}}, {1.0});
    Eigen::VectorXd v(3);
    v << 0.0, 0.0, 1.0;
    M += 1e-6 * v * v.transpose();
    CHECK(flatness_check(M, 1, 2, 1, 1e-4).flat);
    CHECK_FALSE(flatness_check(M, 1, 2, 1, 1e-8).flat);
  }
}

TEST_CASE("extract_atoms") {
  SUBCASE("Dirac mass at -1") {
    const Eigen::MatrixXd M = atomic_moment_matrix(1, 2, {{-1.0}}, {1.0});
    match_atoms(extract_atoms(M, 1, 2), {{-1.0}}, {1.0}, 1e-8);
  }

  SUBCASE("two symmetric atoms with equal weights") {
    const Eigen::MatrixXd M =
        atomic_moment_matrix(1, 2, {{1.0}, {-1.0}}, {0.5, 0.5});
    match_atoms(extract_atoms(M, 1, 2), {{1.0}, {-1.0}}, {0.5, 0.5}, 1e-8);
  }

  SUBCASE("rank-one outer product of a monomial vector") {
    const int n = 2, k = 2;
    const std::vector<double> a = {0.6, -0.3};
    const auto basis = monomials_up_to(n, k);
    Eigen::VectorXd v(static_cast<long>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) {
      double m = 1.0;
      for (int j = 0; j < n; ++j) m *= std::pow(a[j], basis[i][j]);
      v[static_cast<long>(i)] = m;
    }
    const Eigen::MatrixXd M = v * v.transpose();
    match_atoms(extract_atoms(M, n, k), {a}, {1.0}, 1e-8);
  }

  SUBCASE("random atomic measures round-trip") {
    std::mt19937_64 eng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> uw(0.2, 1.0);
    for (int n = 1; n <= 4; ++n) {
      for (int r = 1; r <= std::min(3, n + 1); ++r) {
        // Separated random atoms so the quotient basis is well conditioned.
        std::vector<std::vector<double>> pts;
        while (static_cast<int>(pts.size()) < r) {
          std::vector<double> p(n);
          for (auto& c : p) c = u(eng);
          bool ok = true;
          for (const auto& q : pts) {
            double d = 0.0;
            for (int i = 0; i < n; ++i) d = std::max(d, std::abs(p[i] - q[i]));
            if (d < 0.5) ok = false;
          }
          if (ok) pts.push_back(p);
        }
        std::vector<double> w(r);
        double tot = 0.0;
        for (auto& x : w) tot += (x = uw(eng));
        for (auto& x : w) x /= tot;
        const Eigen::MatrixXd M = atomic_moment_matrix(n, 2, pts, w);
        match_atoms(extract_atoms(M, n, 2), pts, w, 1e-6);
      }
    }
  }

  SUBCASE("non-flat input throws ExtractionError") {
    CHECK_THROWS_AS(extract_atoms(Eigen::MatrixXd::Identity(6, 6), 2, 2),
                    ExtractionError);
  }
}

TEST_CASE("certify") {
  // min x on the unit circle slice: f = x1, h = {1 - x1^2}, sphere radius 1.
  PopProblem pop;
  pop.n = 1;
  pop.objective = Polynomial::monomial(1, {1}, 1.0);
  pop.equalities = {sphere_poly(1, 1.0)};
  pop.radius = RadiusDecl{RadiusKind::sphere, 1.0};

  Eigen::VectorXd xstar(1);
  xstar << -1.0;

  SUBCASE("true minimizer passes at the default budget") {
    const CertifyReport rep = certify(xstar, pop, -1.0, 0.01);
    CHECK(rep.ok);
    CHECK(rep.objective_gap == doctest::Approx(0.0));
    REQUIRE(rep.eq_residuals.size() == 1);
    CHECK(rep.eq_residuals[0] == doctest::Approx(0.0));
  }

  SUBCASE("interior point fails on both the gap and the residual") {
    Eigen::VectorXd x(1);
    x << 0.9;
    const CertifyReport rep = certify(x, pop, -1.0, 0.01);
    CHECK_FALSE(rep.ok);
    CHECK(rep.objective_gap == doctest::Approx(1.9));
    CHECK(rep.eq_residuals[0] == doctest::Approx(0.19));
    CHECK(rep.eq_bounds[0] == doctest::Approx(0.01));
  }

  SUBCASE("acceptance is monotone in the tolerance") {
    Eigen::VectorXd x(1);
    x << -0.999;
    CHECK_FALSE(certify(x, pop, -1.0, 1e-5).ok);
    CHECK(certify(x, pop, -1.0, 0.05).ok);
  }

  SUBCASE("inequality sign convention") {
    PopProblem ball;
    ball.n = 1;
    ball.objective = Polynomial::monomial(1, {1}, 1.0);
    ball.inequalities = {sphere_poly(1, 1.0)};
    ball.radius = RadiusDecl{RadiusKind::ball, 1.0};
    Eigen::VectorXd x(1);
    x << -1.02;  // g(x) = -0.0404, slightly outside
    CHECK_FALSE(certify(x, ball, -1.02, 0.01).ok);
    const CertifyReport rep = certify(x, ball, -1.02, 0.05);
    CHECK(rep.ok);
    REQUIRE(rep.ineq_values.size() == 1);
    CHECK(rep.ineq_values[0] == doctest::Approx(-0.0404));
    CHECK(rep.ineq_bounds[0] == doctest::Approx(-0.05));
  }
}
