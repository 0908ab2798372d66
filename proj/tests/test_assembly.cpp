// Mass and stiffness kernel assembly.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mpfem/assembly.hpp"
#include "mpfem/basis.hpp"
#include "mpfem/geometry.hpp"
#include "mpfem/optimizer.hpp"
#include "mpfem/problem.hpp"
#include "mpfem/tropical.hpp"

using namespace mpfem;

namespace {

std::vector<double> vec(std::initializer_list<double> xs) { return std::vector<double>(xs); }

BasisFamily singleton(BasisKind kind, std::vector<double> center, double shape) {
  Box point(center, center);
  return make_family(RegularGrid(point, 1.0), kind, shape);
}

double max_abs_diff(const MaxPlusMatrix& A, const MaxPlusMatrix& B) {
  REQUIRE_EQ(A.rows(), B.rows());
  REQUIRE_EQ(A.cols(), B.cols());
  double worst = 0.0;
  for (std::size_t e = 0; e < A.entries().size(); ++e)
    worst = std::max(worst, std::abs(A.entries()[e] - B.entries()[e]));
  return worst;
}

}  // namespace

TEST_CASE("mass kernel matches the scalar products entry by entry") {
  const Box X = Box::cube(2, -1.0, 1.0);
  const FamilyPair fam = build_families(X, 1.0, 0.5, 2.0, 1.0);
  const MaxPlusMatrix A = assemble_mass(fam.test, fam.primal, X);
  REQUIRE_EQ(A.rows(), fam.test.size());
  REQUIRE_EQ(A.cols(), fam.primal.size());
  for (std::size_t j = 0; j < fam.test.size(); ++j)
    for (std::size_t i = 0; i < fam.primal.size(); ++i)
      CHECK_EQ(A(j, i), scalar_product(fam.test.functions[j], fam.primal.functions[i], X).value);

  // Independent oracle for a few entries: exhaustive lattice maximization
  // of z + w over X.
  for (const auto [j, i] : {std::pair<std::size_t, std::size_t>{0, 0}, {4, 7}, {8, 3}, {2, 12}}) {
    const BasisFunction& z = fam.test.functions[j];
    const BasisFunction& w = fam.primal.functions[i];
    ObjectiveSpec obj;
    obj.dim = 2;
    obj.box = X;
    obj.value = [&](std::span<const double> x) { return z.evaluate(x) + w.evaluate(x); };
    const double brute = maximize_on_grid(obj, 0.004).value;
    CHECK_GE(A(j, i), brute - 1e-12);
    CHECK_LE(A(j, i), brute + 1e-4);  // lattice misses at most O(step^2/c + A step)
  }

  CHECK_THROWS_AS(assemble_mass(fam.test, fam.primal, Box::cube(3, -1.0, 1.0)),
                  std::invalid_argument);
}

TEST_CASE("stiffness collapses to the mass kernel as the step vanishes") {
  const ControlProblem p = lq_problem(1);
  const FamilyPair fam = build_families(p.X, 0.5, 0.1, 1.0, 1.0);
  const MaxPlusMatrix A = assemble_mass(fam.test, fam.primal, p.X);
  const MaxPlusMatrix B = assemble_stiffness_direct(p, fam.test, fam.primal, 1e-5);
  // |B - A| <= delta sup|l| + Lip(w) delta sup|f| ~ 9e-4 here
  CHECK_LE(max_abs_diff(A, B), 2e-3);
  CHECK_GT(max_abs_diff(A, B), 0.0);
}

TEST_CASE("zero dynamics and cost reproduce the mass kernel") {
  ControlProblem p;
  p.name = "static";
  p.n = 2;
  p.m = 1;
  p.X = Box::cube(2, -1.0, 1.0);
  p.U = Box::cube(1, 0.0, 0.0);
  p.dynamics = [](std::span<const double>, std::span<const double>, std::span<double> out) {
    out[0] = out[1] = 0.0;
  };
  p.lagrangian = [](std::span<const double>, std::span<const double>) { return 0.0; };
  ConcavePiece piece;
  piece.state_region = p.X;
  piece.controls = p.U;
  piece.dynamics = p.dynamics;
  piece.lagrangian = p.lagrangian;
  p.pieces.push_back(piece);

  SUBCASE("quadratic test elements") {
    const BasisFamily primal = make_family(RegularGrid(p.X, 1.0), BasisKind::Quadratic, 1.0);
    const BasisFamily test = make_family(RegularGrid(p.X, 1.0), BasisKind::Quadratic, 1.0);
    const MaxPlusMatrix A = assemble_mass(test, primal, p.X);
    const MaxPlusMatrix B = assemble_stiffness_direct(p, test, primal, 0.1);
    CHECK_LE(max_abs_diff(A, B), 1e-7);
  }
  SUBCASE("kinked test elements") {
    const FamilyPair fam = build_families(p.X, 1.0, 1.0, 1.0, 1.0);
    const MaxPlusMatrix A = assemble_mass(fam.test, fam.primal, p.X);
    const MaxPlusMatrix B = assemble_stiffness_direct(p, fam.test, fam.primal, 0.1);
    CHECK_LE(max_abs_diff(A, B), 1e-6);
  }
}

TEST_CASE("single lq stiffness entry agrees with exhaustive search") {
  const ControlProblem p = lq_problem(1);
  const BasisFamily test = singleton(BasisKind::Lipschitz, vec({0.5}), 1.0);
  const BasisFamily primal = singleton(BasisKind::Quadratic, vec({-0.1}), 0.1);
  const double delta = 0.25;

  AssemblyDiagnostics diag;
  const MaxPlusMatrix B = assemble_stiffness_direct(p, test, primal, delta, {}, &diag);
  REQUIRE_EQ(B.rows(), 1);
  REQUIRE_EQ(B.cols(), 1);

  const BasisFunction& z = test.functions[0];
  const BasisFunction& w = primal.functions[0];
  ObjectiveSpec brute;
  brute.dim = 2;
  brute.box = Box(vec({-1.0, -2.0}), vec({1.0, 2.0}));
  std::vector<double> f(1);
  brute.value = [&](std::span<const double> y) {
    const std::span<const double> x = y.subspan(0, 1), u = y.subspan(1, 1);
    p.dynamics(x, u, f);
    const double adv = y[0] + delta * f[0];
    return z.evaluate(x) + w.evaluate(std::span<const double>(&adv, 1)) +
           delta * p.lagrangian(x, u);
  };
  const double grid = maximize_on_grid(brute, 0.002).value;
  CHECK_GE(B(0, 0), grid - 1e-9);
  CHECK_LE(B(0, 0), grid + 2e-5);

  REQUIRE_EQ(diag.iterations.size(), 1);
  REQUIRE_EQ(diag.converged.size(), 1);
  CHECK_EQ(diag.converged[0], 1);
  CHECK_EQ(diag.total_iterations, diag.iterations[0]);
  CHECK_GT(diag.total_iterations, 0);
  CHECK(std::isnan(diag.certified_threshold));
  CHECK_FALSE(diag.certified);

  // The kernel entry is a supremum: no sampled point may beat it.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-1.0, 1.0), uu(-2.0, 2.0);
  for (int s = 0; s < 500; ++s) {
    const std::vector<double> y = vec({ux(rng), uu(rng)});
    CHECK_LE(brute.value(y), B(0, 0) + 1e-9);
  }
}

TEST_CASE("tip-dominant entry keeps the control gain") {
  // A steep cone pins the state at the test center, but the sup still
  // requires maximizing over the control there: u* = 2/15 and the entry
  // value is -43/1200.  A joint ascent that merely stalls on the tip would
  // report w(0.3) + delta l(0.3, 0) = -0.0425 instead.
  const ControlProblem p = lq_problem(1);
  const BasisFamily test = singleton(BasisKind::Lipschitz, vec({0.3}), 3.0);
  const BasisFamily primal = singleton(BasisKind::Quadratic, vec({0.5}), 1.0);
  const double delta = 0.5;

  const MaxPlusMatrix B = assemble_stiffness_direct(p, test, primal, delta);
  REQUIRE_EQ(B.rows(), 1);
  REQUIRE_EQ(B.cols(), 1);
  CHECK_EQ(B(0, 0), doctest::Approx(-43.0 / 1200.0).epsilon(1e-9));

  const BasisFunction& z = test.functions[0];
  const BasisFunction& w = primal.functions[0];
  ObjectiveSpec brute;
  brute.dim = 2;
  brute.box = Box(vec({-1.0, -2.0}), vec({1.0, 2.0}));
  std::vector<double> f(1);
  brute.value = [&](std::span<const double> y) {
    const std::span<const double> x = y.subspan(0, 1), u = y.subspan(1, 1);
    p.dynamics(x, u, f);
    const double adv = y[0] + delta * f[0];
    return z.evaluate(x) + w.evaluate(std::span<const double>(&adv, 1)) +
           delta * p.lagrangian(x, u);
  };
  const double grid = maximize_on_grid(brute, 0.002).value;
  CHECK_GE(B(0, 0), grid - 1e-9);
  CHECK_LE(B(0, 0), grid + 2e-5);
}

TEST_CASE("state constrained advection clamps to the domain") {
  // Primal element centered outside X at (2,2): the nearest admissible
  // advected point is the corner (1,1), so the entry against a cone at the
  // corner is z(1,1) + w(1,1) + 0 = -1 from the absorbed face branch.  An
  // unconstrained step x + delta u would leave X toward the primal center
  // and report z(1,1) + w(1.25,1.25) - 0.25 = -0.8125 instead.
  const ControlProblem p = distance_problem(2);
  const BasisFamily test = singleton(BasisKind::Lipschitz, vec({1.0, 1.0}), 3.0);
  const BasisFamily primal = singleton(BasisKind::Quadratic, vec({2.0, 2.0}), 1.0);
  const double delta = 0.25;

  const MaxPlusMatrix B = assemble_stiffness_direct(p, test, primal, delta);
  REQUIRE_EQ(B.rows(), 1);
  REQUIRE_EQ(B.cols(), 1);
  CHECK_EQ(B(0, 0), doctest::Approx(-1.0).epsilon(1e-9));

  ControlProblem free = p;
  free.state_constrained = false;
  const MaxPlusMatrix Bf = assemble_stiffness_direct(free, test, primal, delta);
  CHECK_EQ(Bf(0, 0), doctest::Approx(-0.8125).epsilon(1e-9));

  // The clamped entry is the sup of the constrained objective: no sampled
  // admissible pair may beat it.
  const BasisFunction& z = test.functions[0];
  const BasisFunction& w = primal.functions[0];
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> ui(-1.0, 1.0);
  std::vector<double> f(2), adv(2);
  for (int s = 0; s < 500; ++s) {
    const std::vector<double> x = vec({ui(rng), ui(rng)});
    const std::vector<double> u = vec({ui(rng), ui(rng)});
    p.dynamics(x, u, f);
    for (std::size_t k = 0; k < 2; ++k)
      adv[k] = std::clamp(x[k] + delta * f[k], -1.0, 1.0);
    const double sample = z.evaluate(x) + w.evaluate(adv) + delta * p.lagrangian(x, u);
    CHECK_LE(sample, B(0, 0) + 1e-9);
  }
}

TEST_CASE("certification flag tracks the concavity threshold") {
  const ControlProblem p = lq_problem(1);
  const FamilyPair fam = build_families(p.X, 1.0, 0.1, 1.0, 1.0);
  const SmoothnessData s = lq_smoothness(1, 0.1);
  AssemblyOptions opt;
  opt.smoothness = &s;

  AssemblyDiagnostics below;
  assemble_stiffness_direct(p, fam.test, fam.primal, 0.004, opt, &below);
  CHECK(below.certified);
  CHECK_EQ(below.certified_threshold, doctest::Approx(10.0 / 1230.0).epsilon(1e-12));

  AssemblyDiagnostics above;
  assemble_stiffness_direct(p, fam.test, fam.primal, 0.25, opt, &above);
  CHECK_FALSE(above.certified);
  CHECK_EQ(above.certified_threshold, below.certified_threshold);
}

TEST_CASE("pruning drops entries far below the mass row maximum") {
  const ControlProblem p = lq_problem(1);
  const FamilyPair fam = build_families(p.X, 0.25, 0.1, 1.0, 1.0);
  const MaxPlusMatrix A = assemble_mass(fam.test, fam.primal, p.X);

  AssemblyOptions plain;
  const MaxPlusMatrix B = assemble_stiffness_direct(p, fam.test, fam.primal, 0.1, plain);

  AssemblyOptions pruned = plain;
  pruned.pruning_threshold = 1.0;
  AssemblyDiagnostics diag;
  const MaxPlusMatrix Bp = assemble_stiffness_direct(p, fam.test, fam.primal, 0.1, pruned, &diag);

  std::size_t dropped = 0;
  for (std::size_t j = 0; j < A.rows(); ++j) {
    double rowmax = neg_inf;
    for (std::size_t i = 0; i < A.cols(); ++i) rowmax = std::max(rowmax, A(j, i));
    for (std::size_t i = 0; i < A.cols(); ++i) {
      if (A(j, i) >= rowmax - 1.0) {
        CHECK_EQ(Bp(j, i), B(j, i));  // survivors are computed identically
      } else {
        CHECK_EQ(Bp(j, i), neg_inf);
        ++dropped;
      }
    }
  }
  CHECK_GT(dropped, 0);
  CHECK_EQ(diag.pruned_entries, dropped);
  CHECK_EQ(diag.iterations.size(), A.rows() * A.cols());
}

TEST_CASE("thread count does not change the result") {
  const ControlProblem p = lq_problem(1);
  const FamilyPair fam = build_families(p.X, 0.5, 0.1, 1.0, 1.0);
  AssemblyOptions one;
  one.threads = 1;
  AssemblyOptions four;
  four.threads = 4;
  AssemblyDiagnostics d1, d4;
  const MaxPlusMatrix B1 = assemble_stiffness_direct(p, fam.test, fam.primal, 0.125, one, &d1);
  const MaxPlusMatrix B4 = assemble_stiffness_direct(p, fam.test, fam.primal, 0.125, four, &d4);
  CHECK(B1 == B4);
  CHECK_EQ(d1.iterations, d4.iterations);
  CHECK_EQ(d1.total_iterations, d4.total_iterations);
}

TEST_CASE("hamiltonian assembly matches the direct path to first order") {
  const ControlProblem p = lq_problem(1);
  const double delta = 0.01;
  const BasisFamily primal = make_family(RegularGrid(p.X, 0.5), BasisKind::Quadratic, 1.0);
  const BasisFamily test = make_family(RegularGrid(p.X, 0.5), BasisKind::Quadratic, 1.0);

  // max_{|u|<=2} p u - (x^2+u^2)/2 = p^2/2 - x^2/2 whenever |p| <= 2,
  // which holds since |grad w| = |x - center| <= 2 on X.
  const HamiltonianFn H = [](std::span<const double> x, std::span<const double> g) {
    const double u = std::clamp(g[0], -2.0, 2.0);
    return g[0] * u - 0.5 * u * u - 0.5 * x[0] * x[0];
  };

  const MaxPlusMatrix Bh = assemble_stiffness_hamiltonian(p, H, test, primal, delta);
  const MaxPlusMatrix Bd = assemble_stiffness_direct(p, test, primal, delta);
  CHECK_LE(max_abs_diff(Bh, Bd), 5e-4);  // paths differ by O(delta^2)

  // Independent check of one Hamiltonian entry by exhaustive search.
  const BasisFunction& z = test.functions[1];
  const BasisFunction& w = primal.functions[3];
  ObjectiveSpec brute;
  brute.dim = 1;
  brute.box = p.X;
  std::vector<double> g(1);
  brute.value = [&](std::span<const double> x) {
    w.gradient(x, g);
    return z.evaluate(x) + w.evaluate(x) + delta * H(x, g);
  };
  const double grid = maximize_on_grid(brute, 0.001).value;
  CHECK_GE(Bh(1, 3), grid - 1e-9);
  CHECK_LE(Bh(1, 3), grid + 1e-5);

  // Kinked primal elements have no usable gradient for this path.
  const BasisFamily cones = make_family(RegularGrid(p.X, 0.5), BasisKind::Lipschitz, 1.0);
  CHECK_THROWS_AS(assemble_stiffness_hamiltonian(p, H, test, cones, delta),
                  std::invalid_argument);
}

TEST_CASE("assembled system bundles both kernels") {
  const ControlProblem p = lq_problem(1);
  const FamilyPair fam = build_families(p.X, 0.5, 0.1, 1.0, 1.0);
  const AssembledSystem sys = assemble_system(p, fam, 0.125);
  CHECK_EQ(sys.delta, 0.125);
  CHECK(sys.mass == assemble_mass(fam.test, fam.primal, p.X));
  CHECK(sys.stiffness == assemble_stiffness_direct(p, fam.test, fam.primal, 0.125));
  CHECK_EQ(sys.diagnostics.iterations.size(), sys.stiffness.rows() * sys.stiffness.cols());
}

TEST_CASE("one step value matches an exhaustive control search") {
  const ControlProblem lq = lq_problem(1);
  const BasisFunction cone{BasisKind::Lipschitz, vec({0.0}), 1.0};
  const TerminalFn w = [&](std::span<const double> x) { return cone.evaluate(x); };
  const std::vector<double> x = vec({0.3});
  const double delta = 0.1;

  const double got = one_step_value(lq, w, x, delta);
  double brute = neg_inf;
  for (int k = -20000; k <= 20000; ++k) {
    const double u = k * 1e-4;
    const double adv = x[0] + delta * u;
    brute = std::max(brute,
                     cone.evaluate(std::span<const double>(&adv, 1)) -
                         0.5 * delta * (x[0] * x[0] + u * u));
  }
  CHECK_EQ(got, doctest::Approx(brute).epsilon(1e-5));

  CHECK_THROWS_AS(one_step_value(lq, w, x, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(one_step_value(lq, w, vec({0.0, 0.0}), 0.1), std::invalid_argument);
  CHECK_THROWS_AS(one_step_value(lq, TerminalFn{}, x, 0.1), std::invalid_argument);
}

TEST_CASE("one step of the distance problem advances its oracle") {
  const ControlProblem p = distance_problem(2);
  const OracleValue o = distance_oracle();
  for (const auto& [xv, t] : std::vector<std::pair<std::vector<double>, double>>{
           {vec({0.2, -0.3}), 0.5}, {vec({0.9, 0.0}), 1.0}, {vec({0.0, 0.0}), 0.2}}) {
    const double t0 = t;
    const TerminalFn w = [&, t0](std::span<const double> y) { return o.evaluator(y, t0); };
    const double stepped = one_step_value(p, w, xv, 0.1);
    CHECK_EQ(stepped, doctest::Approx(o.evaluator(xv, t0 + 0.1)).epsilon(1e-9));
  }
}

TEST_CASE("assembly validation") {
  const ControlProblem p = lq_problem(1);
  const FamilyPair fam = build_families(p.X, 0.5, 0.1, 1.0, 1.0);
  const FamilyPair fam2 = build_families(Box::cube(2, -1.0, 1.0), 1.0, 0.1, 1.0, 1.0);
  CHECK_THROWS_AS(assemble_stiffness_direct(p, fam2.test, fam2.primal, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(assemble_stiffness_direct(p, fam.test, fam.primal, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(assemble_stiffness_direct(p, fam.test, fam.primal, -0.5),
                  std::invalid_argument);

  ControlProblem hollow = p;
  hollow.pieces.clear();
  CHECK_THROWS_AS(assemble_stiffness_direct(hollow, fam.test, fam.primal, 0.1),
                  std::invalid_argument);
}
