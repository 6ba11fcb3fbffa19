#include "helpers.hpp"

namespace nlkit {
namespace {

using testing::In;
using testing::mat;
using testing::Out;
using testing::vec;

struct SquareMinus2 {
  template <typename S>
  void operator()(In<S> u, In<S>, Out<S> f) const {
    f[0] = u[0] * u[0] - 2.0;
  }
};

LinearSystem lu_of(const Matrix& J) { return LinearSystem::dense(J, LinearSolverChoice::lu()); }

// Slope of log e_{k+1} against log e_k over the usable tail of an error sequence.
double convergence_order(const std::vector<double>& e) {
  std::vector<double> orders;
  for (std::size_t k = 1; k + 1 < e.size(); ++k)
    if (e[k + 1] > 1e-14 && e[k] < 1e-1) orders.push_back(std::log(e[k + 1] / e[k]) / std::log(e[k] / e[k - 1]));
  return orders.empty() ? 0.0 : orders.back();
}

TEST(NewtonDirection, IdentityJacobian) {
  const Vector v = vec({1.0, -2.0, 0.5});
  EXPECT_EQ(newton_direction(lu_of(Matrix::Identity(3, 3)), v), Vector(-v));
}

TEST(NewtonDirection, ScalarHandStep) {
  const Vector d = newton_direction(lu_of(mat({{2.0}})), vec({-1.0}));
  EXPECT_DOUBLE_EQ(d[0], 0.5);
  EXPECT_DOUBLE_EQ(1.0 + d[0], 1.5);
}

TEST(NewtonDirection, ResidualOfLinearSolve) {
  std::mt19937_64 rng(21);
  for (int n : {3, 10, 40}) {
    const Matrix J = testing::diagonally_dominant(rng, n);
    const Vector f = testing::random_vector(rng, n);
    const Vector d = newton_direction(lu_of(J), f);
    EXPECT_LE(inf_norm(Vector(J * d + f)), 1e-10 * inf_norm(f));
  }
}

TEST(NewtonDirection, QuadraticConvergesQuadratically) {
  const auto f = make_residual(problems::Quadratic{});
  const Vector p = vec({2.0, 5.0});
  const Vector root = p.cwiseSqrt();
  Vector u = vec({1.0, 2.0});
  std::vector<double> err{inf_norm(Vector(u - root))};
  for (int k = 0; k < 8 && err.back() > 1e-15; ++k) {
    u += newton_direction(lu_of(dense_jacobian(f, u, p)), testing::eval(f, u, p));
    err.push_back(inf_norm(Vector(u - root)));
  }
  EXPECT_LE(err.back(), 1e-14);
  for (std::size_t k = 0; k + 1 < err.size(); ++k)
    if (err[k + 1] > 1e-15) {
      EXPECT_LE(err[k + 1] / (err[k] * err[k]), 1.0) << "step " << k;
    }
}

TEST(SteepestDirection, Examples) {
  const Vector f = vec({1.0, -3.0});
  EXPECT_EQ(steepest_direction(JacobianMatrix(Matrix::Identity(2, 2)), f), Vector(-f));
  const Matrix D = vec({2.0, 5.0}).asDiagonal();
  EXPECT_EQ(steepest_direction(JacobianMatrix(D), f), vec({-2.0, 15.0}));
  std::mt19937_64 rng(22);
  const Matrix J = testing::random_matrix(rng, 5, 5);
  const Vector g = testing::random_vector(rng, 5);
  Vector oracle = Vector::Zero(5);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) oracle[j] -= J(i, j) * g[i];
  EXPECT_LE((steepest_direction(JacobianMatrix(J), g) - oracle).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((steepest_direction(JacobianMatrix(CscMatrix::from_dense(J)), g) - oracle).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Dogleg, NewtonStepInsideRadius) {
  const auto r = dogleg_direction(JacobianMatrix(Matrix::Identity(2, 2)), vec({0.1, 0.0}), 1.0);
  EXPECT_EQ(r.branch, DoglegBranch::Newton);
  EXPECT_LE((r.direction - vec({-0.1, 0.0})).norm(), 1e-15);
}

TEST(Dogleg, CauchyPointOutside) {
  const auto r = dogleg_direction(JacobianMatrix(Matrix::Identity(2, 2)), vec({10.0, 0.0}), 1.0);
  EXPECT_EQ(r.branch, DoglegBranch::ScaledSteepest);
  EXPECT_LE((r.direction - vec({-1.0, 0.0})).norm(), 1e-15);
}

TEST(Dogleg, InterpolatedHitsRadiusExactly) {
  const Matrix J = vec({1.0, 5.0}).asDiagonal();
  const Vector f = vec({4.0, 5.0});
  // Independent oracle for the two anchors.
  const Vector newton = vec({-4.0, -1.0});
  const Vector g = vec({-4.0, -25.0});
  const double t = g.squaredNorm() / (J * g).squaredNorm();
  const Vector cauchy = t * g;
  const double delta = 0.5 * (cauchy.norm() + newton.norm());
  ASSERT_LT(cauchy.norm(), delta);
  ASSERT_LT(delta, newton.norm());
  const auto r = dogleg_direction(JacobianMatrix(J), f, delta);
  EXPECT_EQ(r.branch, DoglegBranch::Interpolated);
  EXPECT_NEAR(r.direction.norm(), delta, 1e-12);
  // Lies on the segment from the Cauchy point to the Newton point.
  const Vector seg = newton - cauchy;
  const double tau = (r.direction - cauchy).dot(seg) / seg.squaredNorm();
  EXPECT_GT(tau, 0.0);
  EXPECT_LT(tau, 1.0);
  EXPECT_LE((cauchy + tau * seg - r.direction).norm(), 1e-12);
}

TEST(Dogleg, NormNeverExceedsRadius) {
  std::mt19937_64 rng(bench::resolve_seed(23));
  std::uniform_real_distribution<double> logd(-3.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix J = testing::diagonally_dominant(rng, 6) * 0.2;
    const Vector f = testing::random_vector(rng, 6);
    const double delta = std::pow(10.0, logd(rng));
    const auto r = dogleg_direction(JacobianMatrix(J), f, delta);
    EXPECT_LE(r.direction.norm(), delta * (1.0 + 1e-12));
    if (r.branch != DoglegBranch::Newton) {
      EXPECT_NEAR(r.direction.norm(), delta, 1e-12 * std::max(1.0, delta));
    }
  }
}

TEST(Dogleg, RejectsNonPositiveRadius) {
  EXPECT_THROW(dogleg_direction(JacobianMatrix(Matrix::Identity(2, 2)), vec({1, 1}), 0.0), Error);
}

TEST(DampedNewton, ZeroDampingIsNewton) {
  std::mt19937_64 rng(24);
  const Matrix J = testing::diagonally_dominant(rng, 7);
  const Vector f = testing::random_vector(rng, 7);
  const Vector newton = -lu_solve(J, f);
  for (bool chol : {true, false})
    EXPECT_LE((damped_newton_direction(J, f, 0.0, chol) - newton).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(DampedNewton, LargeDampingAlignsWithScaledGradient) {
  std::mt19937_64 rng(25);
  const Matrix J = testing::random_matrix(rng, 6, 6);
  const Vector f = testing::random_vector(rng, 6);
  const Vector D = (J.transpose() * J).diagonal();
  const Vector target = -(J.transpose() * f).cwiseQuotient(D);
  const Vector d = damped_newton_direction(J, f, 1e8);
  const double cosang = d.dot(target) / (d.norm() * target.norm());
  EXPECT_LE(std::acos(std::min(1.0, cosang)), 1e-4);
}

TEST(DampedNewton, HandSolve) {
  const Matrix J = mat({{1, 0}, {0, 2}});
  for (bool chol : {true, false})
    EXPECT_LE((damped_newton_direction(J, vec({1, 2}), 1.0, chol) - vec({-0.5, -0.5})).norm(), 1e-14);
}

TEST(DampedNewton, ContinuousInLambda) {
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix J = testing::random_matrix(rng, 5, 5);
    const Vector f = testing::random_vector(rng, 5);
    const double lambda = 1e-2 + trial * 0.1;
    const Vector a = damped_newton_direction(J, f, lambda);
    const Vector b = damped_newton_direction(J, f, lambda * (1.0 + 1e-8));
    EXPECT_LE((a - b).norm(), 1e-6 * a.norm());
  }
}

TEST(DampedNewton, CholeskyAndQrPathsAgree) {
  std::mt19937_64 rng(27);
  const Matrix J = testing::random_matrix(rng, 8, 8);
  const Vector f = testing::random_vector(rng, 8);
  EXPECT_LE((damped_newton_direction(J, f, 0.3, true) - damped_newton_direction(J, f, 0.3, false)).norm(), 1e-10);
}

TEST(DampedNewton, RejectsNegativeDamping) {
  EXPECT_THROW(damped_newton_direction(Matrix::Identity(2, 2), vec({1, 1}), -1.0), Error);
}

TEST(Geodesic, LinearResidualHasNoAcceleration) {
  std::mt19937_64 rng(28);
  const Matrix A = testing::diagonally_dominant(rng, 4);
  const Vector c = testing::random_vector(rng, 4);
  const auto f = make_residual(testing::Affine{A, c});
  const ResidualCallback F = [&](const Vector& x) { return testing::eval(f, x, Vector()); };
  const Vector u = testing::random_vector(rng, 4);
  const Vector fu = F(u);
  const DampedSystem sys(A, 1e-3);
  const Vector v = sys.solve(fu);
  const auto g = geodesic_acceleration(sys, F, u, fu, A * v, v, 0.1, 0.75);
  EXPECT_LE(g.acceleration.norm(), 1e-10 * v.norm());
  EXPECT_TRUE(g.accept);
}

TEST(Geodesic, ElementwiseSquareMatchesAnalyticCurvature) {
  const auto f = make_residual(testing::ElementwiseSquare{});
  const ResidualCallback F = [&](const Vector& x) { return testing::eval(f, x, Vector()); };
  const Vector u = vec({1.0, 2.0, 0.5});
  const Matrix J = (2.0 * u).asDiagonal();
  const Vector fu = F(u);
  const DampedSystem sys(J, 1e-3);
  const Vector v = sys.solve(fu);
  const double h = 0.1;
  const auto g = geodesic_acceleration(sys, F, u, fu, J * v, v, h, 0.75);
  // For a quadratic residual the finite-difference curvature is exact: d = 2 v∘v.
  const Vector oracle = sys.solve(Vector(2.0 * v.cwiseProduct(v)));
  EXPECT_LE((g.acceleration - oracle).norm(), 1e-10 * oracle.norm());
  EXPECT_GT(g.acceleration.norm(), 0.0);
  for (Eigen::Index i = 0; i < u.size(); ++i) EXPECT_LT(g.acceleration[i], 0.0);
}

TEST(Geodesic, ZeroThresholdRejectsNonzeroAcceleration) {
  const auto f = make_residual(testing::ElementwiseSquare{});
  const ResidualCallback F = [&](const Vector& x) { return testing::eval(f, x, Vector()); };
  const Vector u = vec({1.0, 3.0});
  const Matrix J = (2.0 * u).asDiagonal();
  const Vector fu = F(u);
  const DampedSystem sys(J, 1e-3);
  const Vector v = sys.solve(fu);
  const auto g = geodesic_acceleration(sys, F, u, fu, J * v, v, 0.1, 0.0);
  ASSERT_GT(g.acceleration.norm(), 0.0);
  EXPECT_FALSE(g.accept);
}

TEST(Halley, LinearResidualGivesNewton) {
  std::mt19937_64 rng(29);
  const Matrix A = testing::diagonally_dominant(rng, 5);
  const Vector c = testing::random_vector(rng, 5);
  const auto f = make_residual(testing::Affine{A, c});
  const Vector u = testing::random_vector(rng, 5);
  const Vector fu = testing::eval(f, u, Vector());
  const auto r = halley_direction(lu_of(A), f, u, Vector(), fu);
  EXPECT_LE(r.b.norm(), 1e-12);
  EXPECT_LE((r.direction - r.a).norm(), 1e-12 * r.a.norm());
}

TEST(Halley, ScalarHandArithmetic) {
  const auto f = make_residual(SquareMinus2{});
  const Vector u = vec({1.0});
  const auto r = halley_direction(lu_of(mat({{2.0}})), f, u, Vector(), testing::eval(f, u, Vector()));
  EXPECT_NEAR(r.a[0], 0.5, 1e-15);
  EXPECT_NEAR(r.b[0], 0.25, 1e-15);
  EXPECT_NEAR(r.direction[0], 0.4, 1e-15);
  EXPECT_NEAR(u[0] + r.direction[0], 1.4, 1e-15);
}

TEST(Halley, CubicConvergenceOrder) {
  const auto f = make_residual(testing::CubeMinus8{});
  Vector u = vec({3.0});
  std::vector<double> err{1.0};
  for (int k = 0; k < 6 && err.back() > 1e-14; ++k) {
    const Vector fu = testing::eval(f, u, Vector());
    u += halley_direction(lu_of(dense_jacobian(f, u, Vector())), f, u, Vector(), fu).direction;
    err.push_back(std::abs(u[0] - 2.0));
  }
  EXPECT_GE(convergence_order(err), 2.5);
}

TEST(PotraPtak, LinearResidualConvergesInOneStep) {
  std::mt19937_64 rng(30);
  const Matrix A = testing::diagonally_dominant(rng, 4);
  const Vector c = testing::random_vector(rng, 4);
  const auto f = make_residual(testing::Affine{A, c});
  const ResidualCallback F = [&](const Vector& x) { return testing::eval(f, x, Vector()); };
  const Vector u = Vector::Zero(4);
  const auto r = potra_ptak_step(lu_of(A), F, u, F(u));
  EXPECT_LE((r.u_next - r.y).norm(), 1e-12);
  EXPECT_LE(inf_norm(F(r.u_next)), 1e-12);
}

TEST(PotraPtak, ScalarHandArithmetic) {
  const auto f = make_residual(SquareMinus2{});
  const ResidualCallback F = [&](const Vector& x) { return testing::eval(f, x, Vector()); };
  const Vector u = vec({1.0});
  const auto r = potra_ptak_step(lu_of(mat({{2.0}})), F, u, F(u));
  EXPECT_DOUBLE_EQ(r.y[0], 1.5);
  EXPECT_DOUBLE_EQ(r.f_y[0], 0.25);
  EXPECT_DOUBLE_EQ(r.u_next[0], 1.375);
}

TEST(PotraPtak, OrderAboveTwo) {
  const auto f = make_residual(testing::CubeMinus8{});
  const ResidualCallback F = [&](const Vector& x) { return testing::eval(f, x, Vector()); };
  Vector u = vec({3.0});
  std::vector<double> err{1.0};
  for (int k = 0; k < 6 && err.back() > 1e-14; ++k) {
    u = potra_ptak_step(lu_of(dense_jacobian(f, u, Vector())), F, u, F(u)).u_next;
    err.push_back(std::abs(u[0] - 2.0));
  }
  EXPECT_GT(convergence_order(err), 2.0);
}

TEST(PotraPtak, OneJacobianPerOuterStep) {
  SolveOptions o;
  o.abstol = 1e-10;
  // From u = 1 the second component cycles 1 → 3 → 1 under the frozen Jacobian.
  auto prob = make_problem(problems::Quadratic{}, vec({1.5, 2.5}), vec({2.0, 5.0}));
  const SolveResult r = solve(prob, presets::potra_ptak(), o);
  ASSERT_TRUE(r.success());
  EXPECT_EQ(r.stats.njac, r.stats.nsteps);
  EXPECT_EQ(r.stats.nlinsolve, 2 * r.stats.nsteps);
}

TEST(DampingParams, Validation) {
  DampingParams p;
  EXPECT_NO_THROW(p.validate());
  p.lambda_up = 1.0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.lambda0 = 0.0;
  EXPECT_THROW(p.validate(), Error);
}

}  // namespace
}  // namespace nlkit
