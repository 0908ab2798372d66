#include "mpfem/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/SVD>

namespace mpfem {

namespace {

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double inf_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

void write_zeros(std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); }

// Distance problem boundary branch: points this close to the boundary in
// sup norm are treated as absorbed (deterministic branch selection).
constexpr double kBoundaryBand = 1e-12;

}  // namespace

ControlProblem lq_problem(std::size_t dim, double x_half, double u_half, double horizon) {
  if (dim == 0) throw std::invalid_argument("lq_problem: dimension must be positive");
  if (!(x_half > 0.0) || !(u_half > 0.0) || !(horizon > 0.0))
    throw std::invalid_argument("lq_problem: boxes and horizon must be positive");

  ControlProblem p;
  p.name = "lq";
  p.n = p.m = dim;
  p.X = Box::cube(dim, -x_half, x_half);
  p.U = Box::cube(dim, -u_half, u_half);
  p.T = horizon;
  p.lipschitz = x_half;  // per-coordinate |dv/dx_k| = tanh(t)|x_k| <= x_half

  p.dynamics = [](std::span<const double>, std::span<const double> u, std::span<double> out) {
    std::copy(u.begin(), u.end(), out.begin());
  };
  p.lagrangian = [](std::span<const double> x, std::span<const double> u) {
    return -0.5 * (sq_norm(x) + sq_norm(u));
  };
  p.terminal = [](std::span<const double>) { return 0.0; };
  p.terminal_is_zero = true;

  ConcavePiece piece;
  piece.state_region = p.X;
  piece.controls = p.U;
  piece.dynamics = p.dynamics;
  piece.lagrangian = p.lagrangian;
  piece.dynamics_jtx = [](std::span<const double>, std::span<const double>,
                          std::span<const double>, std::span<double> out) { write_zeros(out); };
  piece.dynamics_jtu = [](std::span<const double>, std::span<const double>,
                          std::span<const double> g, std::span<double> out) {
    std::copy(g.begin(), g.end(), out.begin());
  };
  piece.lagrangian_gradient = [](std::span<const double> x, std::span<const double> u,
                                 std::span<double> gx, std::span<double> gu) {
    for (std::size_t k = 0; k < x.size(); ++k) gx[k] = -x[k];
    for (std::size_t k = 0; k < u.size(); ++k) gu[k] = -u[k];
  };
  p.pieces.push_back(std::move(piece));
  return p;
}

ControlProblem distance_problem(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("distance_problem: dimension must be positive");

  ControlProblem p;
  p.name = "distance";
  p.n = p.m = dim;
  p.X = Box::cube(dim, -1.0, 1.0);
  p.U = Box::cube(dim, -1.0, 1.0);
  p.T = 1.0;
  p.lipschitz = 1.0;

  p.dynamics = [](std::span<const double> x, std::span<const double> u, std::span<double> out) {
    if (inf_norm(x) >= 1.0 - kBoundaryBand)
      write_zeros(out);
    else
      std::copy(u.begin(), u.end(), out.begin());
  };
  p.lagrangian = [](std::span<const double> x, std::span<const double>) {
    return inf_norm(x) >= 1.0 - kBoundaryBand ? 0.0 : -1.0;
  };
  p.terminal = [](std::span<const double>) { return 0.0; };
  p.terminal_is_zero = true;
  p.state_constrained = true;

  // Interior branch, extended to the closed box: the extension is exact for
  // the sup since the branch is continuous and the interior is dense in X.
  ConcavePiece interior;
  interior.state_region = p.X;
  interior.controls = p.U;
  interior.dynamics = [](std::span<const double>, std::span<const double> u,
                         std::span<double> out) { std::copy(u.begin(), u.end(), out.begin()); };
  interior.lagrangian = [](std::span<const double>, std::span<const double>) { return -1.0; };
  interior.dynamics_jtx = [](std::span<const double>, std::span<const double>,
                             std::span<const double>, std::span<double> out) { write_zeros(out); };
  interior.dynamics_jtu = [](std::span<const double>, std::span<const double>,
                             std::span<const double> g, std::span<double> out) {
    std::copy(g.begin(), g.end(), out.begin());
  };
  interior.lagrangian_gradient = [](std::span<const double>, std::span<const double>,
                                    std::span<double> gx, std::span<double> gu) {
    write_zeros(gx);
    write_zeros(gu);
  };
  p.pieces.push_back(std::move(interior));

  // Absorbed branch on each boundary face: f = 0, l = 0, controls frozen.
  for (std::size_t k = 0; k < dim; ++k) {
    for (double side : {-1.0, 1.0}) {
      ConcavePiece face;
      face.state_region = p.X;
      face.state_region.lower[k] = face.state_region.upper[k] = side;
      face.controls = Box(std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0));
      face.dynamics = [](std::span<const double>, std::span<const double>,
                         std::span<double> out) { write_zeros(out); };
      face.lagrangian = [](std::span<const double>, std::span<const double>) { return 0.0; };
      face.dynamics_jtx = face.dynamics_jtu =
          [](std::span<const double>, std::span<const double>, std::span<const double>,
             std::span<double> out) { write_zeros(out); };
      face.lagrangian_gradient = [](std::span<const double>, std::span<const double>,
                                    std::span<double> gx, std::span<double> gu) {
        write_zeros(gx);
        write_zeros(gu);
      };
      p.pieces.push_back(std::move(face));
    }
  }
  return p;
}

OracleValue lq_oracle() {
  OracleValue o;
  o.kind = OracleValue::Kind::LQ;
  o.evaluator = [](std::span<const double> x, double t) { return -0.5 * std::tanh(t) * sq_norm(x); };
  return o;
}

OracleValue distance_oracle() {
  OracleValue o;
  o.kind = OracleValue::Kind::Distance;
  o.evaluator = [](std::span<const double> x, double t) {
    return -std::min(t, 1.0 - inf_norm(x));
  };
  return o;
}

namespace {

double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
}

}  // namespace

double delta0(const SmoothnessData& s) {
  if (!(s.alpha > 0.0) || !(s.beta > 0.0) || !(s.C > 0.0))
    throw std::invalid_argument("delta0: alpha, beta, C must be positive");
  if (!s.F.allFinite() || !s.G.allFinite())
    throw std::invalid_argument("delta0: F, G must be finite");

  const double nF = spectral_norm(s.F);
  const double nG = spectral_norm(s.G);
  const double ab = s.alpha * s.beta;

  const double d1 = 3.0 * s.C * s.C * nF * nF * nG * nG;
  const double t1 = d1 > 0.0 ? std::cbrt(ab / d1) : std::numeric_limits<double>::infinity();

  const double d2 = 6.0 * s.C * s.C * nF * nG * (1.0 + nG);
  const double t2 = d2 > 0.0 ? std::sqrt(ab / d2) : std::numeric_limits<double>::infinity();

  const double d3 =
      3.0 * s.C * (s.C * (1.0 + nG) * (1.0 + nG) + s.alpha * (1.0 + 2.0 * nF));
  const double t3 = ab / d3;

  return std::min({t1, t2, t3});
}

SmoothnessData lq_smoothness(std::size_t dim, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("lq_smoothness: c must be positive");
  SmoothnessData s;
  const auto d = static_cast<Eigen::Index>(dim);
  s.F = Eigen::MatrixXd::Zero(d, d);
  s.G = Eigen::MatrixXd::Identity(d, d);
  s.alpha = 1.0;        // d2l/du2 = -I
  s.beta = 1.0 / c;     // d2w/dx2 = -(1/c) I exactly
  s.C = std::max(1.0, 1.0 / c);
  return s;
}

ConcavityReport verify_concavity(const ControlProblem& p, const BasisFunction& w,
                                 const BasisFunction& z, double delta, std::size_t samples,
                                 std::uint64_t seed) {
  if (!(delta >= 0.0)) throw std::invalid_argument("verify_concavity: delta must be >= 0");
  const std::size_t n = p.n, m = p.m;

  std::vector<double> f(n), adv(n);
  auto b = [&](std::span<const double> xx, std::span<const double> uu) {
    p.dynamics(xx, uu, f);
    for (std::size_t k = 0; k < n; ++k) adv[k] = xx[k] + delta * f[k];
    if (p.state_constrained) {
      for (std::size_t k = 0; k < n; ++k)
        adv[k] = std::clamp(adv[k], p.X.lower[k], p.X.upper[k]);
    }
    return z.evaluate(xx) + w.evaluate(adv) + delta * p.lagrangian(xx, uu);
  };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](const Box& box, std::vector<double>& out) {
    out.resize(box.dim());
    for (std::size_t k = 0; k < box.dim(); ++k)
      out[k] = box.lower[k] + (box.upper[k] - box.lower[k]) * unit(rng);
  };

  ConcavityReport report;
  report.samples = samples;
  report.worst_violation = samples ? -std::numeric_limits<double>::infinity() : 0.0;
  std::vector<double> x1, u1, x2, u2, xm(n), um(m);
  double scale = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    draw(p.X, x1);
    draw(p.U, u1);
    draw(p.X, x2);
    draw(p.U, u2);
    for (std::size_t k = 0; k < n; ++k) xm[k] = 0.5 * (x1[k] + x2[k]);
    for (std::size_t k = 0; k < m; ++k) um[k] = 0.5 * (u1[k] + u2[k]);
    const double v1 = b(x1, u1), v2 = b(x2, u2), vm = b(xm, um);
    report.worst_violation = std::max(report.worst_violation, 0.5 * (v1 + v2) - vm);
    scale = std::max({scale, std::abs(v1), std::abs(v2), std::abs(vm)});
  }
  report.tolerance = 1e-10 * (1.0 + scale);
  report.pass = report.worst_violation <= report.tolerance;
  return report;
}

}  // namespace mpfem
