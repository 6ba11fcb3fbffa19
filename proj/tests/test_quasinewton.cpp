#include "helpers.hpp"

namespace nlkit {
namespace {

using testing::In;
using testing::Out;
using testing::vec;

struct TwiceU {
  template <typename S>
  void operator()(In<S> u, In<S>, Out<S> f) const {
    for (std::size_t i = 0; i < u.size(); ++i) f[i] = 2.0 * u[i];
  }
};

struct SquareMinus2 {
  template <typename S>
  void operator()(In<S> u, In<S>, Out<S> f) const {
    f[0] = u[0] * u[0] - 2.0;
  }
};

std::function<Matrix()> jacobian_of(const Problem& p) {
  return [p] { return dense_jacobian(p.residual, p.u0, p.params); };
}

TEST(QnInit, IdentityForms) {
  const auto dense = qn_init(QuasiNewtonConfig::broyden(), 3, QnInit::Identity);
  EXPECT_EQ(dense.H, Matrix(Matrix::Identity(3, 3)));
  const auto diag = qn_init(QuasiNewtonConfig::klement(), 3, QnInit::Identity);
  EXPECT_EQ(diag.d, Vector(Vector::Ones(3)));
  const auto low = qn_init(QuasiNewtonConfig::lbroyden(), 3, QnInit::Identity);
  EXPECT_TRUE(low.pairs.empty());
  EXPECT_EQ(low.base_scale, 1.0);
  EXPECT_EQ(low.dense_inverse(), Matrix(Matrix::Identity(3, 3)));
}

TEST(QnInit, TrueJacobianOfLinearMap) {
  auto prob = make_problem(TwiceU{}, Vector::Ones(4));
  const auto s = qn_init(QuasiNewtonConfig::broyden(QnInit::TrueJacobian), 4, QnInit::TrueJacobian, jacobian_of(prob));
  EXPECT_LE(testing::max_abs_diff(s.H, 0.5 * Matrix::Identity(4, 4)), 1e-15);
  EXPECT_FALSE(s.init_fell_back);
}

TEST(QnInit, TrueJacobianOfQuadratic) {
  auto prob = make_problem(problems::Quadratic{}, vec({1.0, 2.0}), vec({2.0, 5.0}));
  const auto s = qn_init(QuasiNewtonConfig::broyden(QnInit::TrueJacobian), 2, QnInit::TrueJacobian, jacobian_of(prob));
  EXPECT_LE(testing::max_abs_diff(s.H, Matrix(vec({0.5, 0.25}).asDiagonal())), 1e-15);
}

TEST(QnInit, SingularJacobianFallsBackToIdentity) {
  auto prob = make_problem(testing::ElementwiseSquare{}, Vector::Zero(2));
  const auto s = qn_init(QuasiNewtonConfig::broyden(QnInit::TrueJacobian), 2, QnInit::TrueJacobian, jacobian_of(prob));
  EXPECT_TRUE(s.init_fell_back);
  EXPECT_FALSE(s.note.empty());
  EXPECT_EQ(s.H, Matrix(Matrix::Identity(2, 2)));
}

TEST(Broyden, SecantOnLinearSystem) {
  std::mt19937_64 rng(41);
  const Matrix A = testing::diagonally_dominant(rng, 4);
  auto st = qn_identity(4, QnForm::DenseInverse);
  const Vector s = testing::random_vector(rng, 4);
  const Vector t = A * s;
  ASSERT_TRUE(broyden_update(st, s, t));
  EXPECT_LE((st.H * t - s).norm(), 1e-12 * s.norm());
}

TEST(Broyden, ConsistentPairIsNoOp) {
  auto st = qn_identity(3, QnForm::DenseInverse);
  ASSERT_TRUE(broyden_update(st, Vector::Unit(3, 0), Vector::Unit(3, 0)));
  EXPECT_EQ(st.H, Matrix(Matrix::Identity(3, 3)));
}

TEST(Broyden, SecantHoldsAfterEveryUpdate) {
  std::mt19937_64 rng(bench::resolve_seed(42));
  auto st = qn_identity(4, QnForm::DenseInverse);
  for (int k = 0; k < 30; ++k) {
    const Vector s = testing::random_vector(rng, 4);
    const Vector t = testing::random_vector(rng, 4);
    if (broyden_update(st, s, t)) {
      EXPECT_LE((st.H * t - s).norm(), 1e-10 * s.norm()) << k;
    }
    ASSERT_TRUE(st.H.allFinite());
  }
}

TEST(Broyden, GuardSkipsDegenerateUpdate) {
  auto st = qn_identity(2, QnForm::DenseInverse);
  // sᵀ·H·t = 0.
  EXPECT_FALSE(broyden_update(st, vec({1.0, 0.0}), vec({0.0, 1.0})));
  EXPECT_EQ(st.H, Matrix(Matrix::Identity(2, 2)));
  EXPECT_THROW(broyden_update(st, Vector::Zero(2), vec({1.0, 0.0})), Error);
}

TEST(LowRankBroyden, EmptyHistoryIsIdentity) {
  const auto st = qn_identity(3, QnForm::LowRank);
  const Vector v = vec({1.0, -2.0, 3.0});
  EXPECT_EQ(lbroyden_apply(st, v), v);
}

TEST(LowRankBroyden, SecantAfterOneUpdate) {
  std::mt19937_64 rng(43);
  auto st = qn_identity(5, QnForm::LowRank, 10);
  const Matrix A = testing::diagonally_dominant(rng, 5);
  const Vector s = testing::random_vector(rng, 5);
  const Vector t = A * s;
  ASSERT_TRUE(lbroyden_update(st, s, t));
  EXPECT_LE((lbroyden_apply(st, t) - s).norm(), 1e-12 * s.norm());
}

TEST(LowRankBroyden, CapacityOneKeepsLatestPairOnly) {
  std::mt19937_64 rng(44);
  auto st = qn_identity(4, QnForm::LowRank, 1);
  const Vector s1 = testing::random_vector(rng, 4), t1 = testing::random_vector(rng, 4);
  const Vector s2 = testing::random_vector(rng, 4), t2 = testing::random_vector(rng, 4);
  ASSERT_TRUE(lbroyden_update(st, s1, t1));
  ASSERT_TRUE(lbroyden_update(st, s2, t2));
  EXPECT_EQ(st.pairs.size(), 1U);
  EXPECT_LE((lbroyden_apply(st, t2) - s2).norm(), 1e-12 * s2.norm());
  // Same operator as one update of the identity with the latest pair.
  auto fresh = qn_identity(4, QnForm::LowRank, 1);
  ASSERT_TRUE(lbroyden_update(fresh, s2, t2));
  EXPECT_LE(testing::max_abs_diff(st.dense_inverse(), fresh.dense_inverse()), 1e-14);
}

TEST(LowRankBroyden, FullHistoryMatchesDense) {
  std::mt19937_64 rng(45);
  const int n = 6;
  const Matrix A = testing::diagonally_dominant(rng, n);
  auto dense = qn_identity(n, QnForm::DenseInverse);
  auto low = qn_identity(n, QnForm::LowRank, n);
  for (int k = 0; k < n; ++k) {
    const Vector s = testing::random_vector(rng, n);
    const Vector t = A * s;
    ASSERT_EQ(broyden_update(dense, s, t), lbroyden_update(low, s, t));
    const Vector v = testing::random_vector(rng, n);
    EXPECT_LE((lbroyden_apply(low, v) - dense.H * v).norm(), 1e-8 * (dense.H * v).norm());
  }
  EXPECT_EQ(static_cast<int>(low.pairs.size()), n);
}

TEST(Klement, ExactDiagonal) {
  auto st = qn_identity(3, QnForm::Diagonal);
  const Vector s = vec({0.5, -1.0, 2.0});
  klement_update(st, s, Vector(3.0 * s));
  EXPECT_LE((st.d - Vector::Constant(3, 3.0)).norm(), 1e-15);
  EXPECT_LE((st.direction(vec({3.0, 6.0, -3.0})) - vec({-1.0, -2.0, 1.0})).norm(), 1e-15);
}

TEST(Klement, UntouchedCoordinateKeepsValue) {
  auto st = qn_identity(2, QnForm::Diagonal);
  st.d = vec({7.0, 4.0});
  klement_update(st, vec({1.0, 0.0}), vec({2.0, 5.0}));
  EXPECT_EQ(st.d, vec({2.0, 4.0}));
}

TEST(Klement, FloorPreservesSign) {
  auto st = qn_identity(2, QnForm::Diagonal);
  klement_update(st, vec({1.0, 1.0}), vec({-1e-20, 0.0}));
  EXPECT_EQ(st.d[0], -1e-12);
  EXPECT_EQ(st.d[1], 1e-12);
}

TEST(Klement, ScalarQuadraticConverges) {
  auto prob = make_problem(SquareMinus2{}, vec({1.0}));
  const auto r = solve(prob, presets::klement());
  ASSERT_EQ(r.retcode, ReturnCode::Success);
  EXPECT_NEAR(r.u_star[0], std::sqrt(2.0), 1e-8);
  EXPECT_LE(bench::remeasure(prob, r.u_star), 1e-8);
}

TEST(ReinitCheck, DescentRule) {
  const auto c = QuasiNewtonConfig::broyden();
  EXPECT_FALSE(reinit_check(c, {2.0, 1.0, 0.1, 1.0, nullptr}));
  EXPECT_TRUE(reinit_check(c, {2.0, 2.0, 0.1, 1.0, nullptr}));
  EXPECT_TRUE(reinit_check(c, {2.0, 1.0, 1e-20, 1.0, nullptr}));
}

TEST(ReinitCheck, StallingRule) {
  const auto c = QuasiNewtonConfig::klement();
  const std::vector<double> flat{1.0, 1.0, 1.0, 1.0};
  EXPECT_TRUE(reinit_check(c, {1.0, 1.0, 0.1, 1.0, &flat}));
  const std::vector<double> improving{1.0, 0.5, 0.25, 0.125};
  EXPECT_FALSE(reinit_check(c, {0.125, 0.1, 0.1, 1.0, &improving}));
  const std::vector<double> short_history{1.0, 1.0};
  EXPECT_FALSE(reinit_check(c, {1.0, 1.0, 0.1, 1.0, &short_history}));
  EXPECT_TRUE(reinit_check(c, {1.0, std::numeric_limits<double>::infinity(), 0.1, 1.0, &short_history}));
}

TEST(RunQuasiNewton, BroydenOnRosenbrockReinitializes) {
  const auto d = generalized_rosenbrock(10);
  QuasiNewtonRunInfo info;
  const auto r = run_quasi_newton(d.problem, QuasiNewtonConfig::broyden(), {}, DiffMode::dual(), &info);
  EXPECT_GE(info.reinits, 1) << to_string(r.retcode);
}

TEST(RunQuasiNewton, ResetRestoresInitialState) {
  const auto c = QuasiNewtonConfig::broyden();
  auto st = qn_init(c, 3, QnInit::Identity);
  ASSERT_TRUE(broyden_update(st, vec({1.0, 2.0, 0.5}), vec({0.3, 1.0, -1.0})));
  ASSERT_GT(st.steps_since_reinit, 0);
  st = qn_init(c, 3, QnInit::Identity);
  EXPECT_EQ(st.steps_since_reinit, 0);
  EXPECT_EQ(st.H, Matrix(Matrix::Identity(3, 3)));
}

TEST(RunQuasiNewton, VariantsSolveQuadratic) {
  const auto d = quadratic();
  for (const auto& spec : {presets::modified_broyden(), presets::klement()}) {
    const auto r = solve(d.problem, spec);
    EXPECT_EQ(r.retcode, ReturnCode::Success) << spec.name;
    EXPECT_LE(r.resid_norm, 1e-8) << spec.name;
  }
}

// Identity-seeded Broyden needs a Jacobian near the identity to get going.
struct NearIdentity {
  template <typename S>
  void operator()(In<S> u, In<S>, Out<S> f) const {
    for (std::size_t i = 0; i < u.size(); ++i) f[i] = u[i] + 0.1 * u[i] * u[i] - 1.0 - 0.05 * static_cast<double>(i);
  }
};

TEST(RunQuasiNewton, IdentitySeededVariantsSolveNearIdentitySystem) {
  auto prob = make_problem(NearIdentity{}, Vector::Zero(5));
  for (const auto& spec : {presets::broyden(), presets::lbroyden()}) {
    const auto r = solve(prob, spec);
    EXPECT_EQ(r.retcode, ReturnCode::Success) << spec.name;
    EXPECT_LE(bench::remeasure(prob, r.u_star), 1e-8) << spec.name;
  }
}

TEST(RunQuasiNewton, IdentitySeededBroydenStallsWhenFirstStepFails) {
  // From ones, −f overshoots and the reset state is the one that just failed.
  QuasiNewtonRunInfo info;
  const auto r = run_quasi_newton(quadratic().problem, QuasiNewtonConfig::broyden(), {}, DiffMode::dual(), &info);
  EXPECT_EQ(r.retcode, ReturnCode::Stalled);
  EXPECT_EQ(info.reinits, 1);
}

TEST(RunQuasiNewton, NoRealRootStalls) {
  auto prob = make_problem(testing::NoRealRoot{}, vec({0.7}));
  const auto r = solve(prob, presets::broyden());
  EXPECT_TRUE(r.retcode == ReturnCode::Stalled || r.retcode == ReturnCode::MaxIters) << to_string(r.retcode);
}

}  // namespace
}  // namespace nlkit
