#include "ctpop/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/QR>

namespace ctpop {

namespace {

int ceil_half(int d) { return (d + 1) / 2; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Flatness shift: w = max_j ceil(deg h_j / 2) over the sphere-form problem,
// clamped into [0, k].
int flatness_w(const PopProblem& sphere_pop, int k) {
  int w = 1;
  for (const auto& h : sphere_pop.equalities)
    w = std::max(w, ceil_half(h.degree()));
  return std::min(w, k);
}

double sphere_radius_of(const PopProblem& sphere_pop) {
  if (sphere_pop.radius && sphere_pop.radius->kind == RadiusKind::sphere)
    return sphere_pop.radius->R;
  const int at = find_sphere_constraint(sphere_pop.equalities);
  if (at < 0)
    throw std::invalid_argument("solve_hierarchy: no sphere constraint");
  return *detect_sphere_radius(sphere_pop.equalities[at]);
}

// Runs one relaxation order on an equality-constrained sphere problem and
// certifies extracted atoms against the original problem after projection.
void run_order(const PopProblem& sphere_pop, const SolutionMap& map,
               const PopProblem& original, int k, const SolverOptions& opts,
               OrderRecord& rec, HierarchyResult& result) {
  const auto t0 = std::chrono::steady_clock::now();
  rec.k = k;
  rec.Rbar = sphere_radius_of(sphere_pop);

  SdpProblem sdp = build_moment_sdp(sphere_pop, k);
  rec.s = sdp.block_dims[0];
  rec.m = sdp.m();
  if (!opts.export_sdpa_prefix.empty()) {
    std::ofstream os(opts.export_sdpa_prefix + ".k" + std::to_string(k) +
                     ".dat-s");
    write_sdpa(os, sdp);
  }

  SpectralOptions sopts = opts.spectral;
  if (opts.order_budget_s > 0) sopts.time_budget_s = opts.order_budget_s;
  const SpectralResult sr = opts.mode == SpectralMode::ctp
                                ? solve_sdp_ctp(sdp, sopts)
                                : solve_sdp_btp(sdp, sopts);
  rec.tau = -sr.value;
  rec.solved = true;
  rec.solver_status = sr.status;
  rec.history = sr.history;

  if (!sr.X_star || sr.X_star->empty()) {
    rec.note = "no primal recovered";
    rec.wall_s = seconds_since(t0);
    return;
  }
  const ScalingDiagonal sc = theta_coeffs(sphere_pop.n, k);
  // Average the entries sharing a multi-index: the recovered X carries
  // solver noise that need not respect the moment structure, and flatness /
  // extraction work on the structured part only.
  const Eigen::MatrixXd M = moment_matrix(
      moments_from_matrix(moment_from_X((*sr.X_star)[0], sc), sphere_pop.n, k),
      k);
  const FlatnessReport fl =
      flatness_check(M, sphere_pop.n, k, flatness_w(sphere_pop, k),
                     opts.rank_tol);
  rec.flat = fl.flat;

  if (rec.flat) {
    try {
      const std::vector<Atom> lifted =
          extract_atoms(M, sphere_pop.n, k, opts.rank_tol, opts.seed);
      for (const auto& at : lifted)
        rec.atoms.push_back({map.project(at.point), at.weight});
    } catch (const ExtractionError& e) {
      rec.note = e.what();
    }
  }

  int best = -1;
  double best_f = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rec.atoms.size(); ++i) {
    const auto& pt = rec.atoms[i].point;
    if (!certify(pt, original, rec.tau, opts.eps).ok) continue;
    const double fx = original.objective.eval(
        std::vector<double>(pt.data(), pt.data() + pt.size()));
    if (fx < best_f) {
      best_f = fx;
      best = static_cast<int>(i);
    }
  }
  if (best >= 0) {
    rec.certified = true;
    result.status = TerminalStatus::extracted;
    result.x_star = rec.atoms[best].point;
    result.f_star = rec.tau;
    result.k_final = k;
  }
  rec.wall_s = seconds_since(t0);
  if (opts.order_budget_s > 0 && rec.wall_s > opts.order_budget_s &&
      rec.solver_status != SolveStatus::converged)
    rec.note = rec.note.empty() ? "order budget exceeded"
                                : rec.note + "; order budget exceeded";
}

SolutionMap identity_map(int n) {
  SolutionMap map;
  map.original_n = n;
  map.lifted_n = n;
  return map;
}

}  // namespace

HierarchyResult solve_hierarchy(const PopProblem& pop,
                                const SolverOptions& opts) {
  enum class Route { sphere, single_ball, general_ball };
  Route route;
  if (pop.radius && pop.radius->kind == RadiusKind::ball) {
    validate_radius_decl(pop);
    route = pop.lg() == 1 ? Route::single_ball : Route::general_ball;
  } else if (!pop.inequalities.empty()) {
    throw std::invalid_argument(
        "solve_hierarchy: inequalities require a declared ball constraint");
  } else if ((pop.radius && pop.radius->kind == RadiusKind::sphere) ||
             find_sphere_constraint(pop.equalities) >= 0) {
    if (pop.radius) validate_radius_decl(pop);
    route = Route::sphere;
  } else {
    throw std::invalid_argument(
        "solve_hierarchy: no sphere or ball constraint found");
  }

  // The sphere and single-ball routes fix the lifted problem once; the
  // general route recomputes its constraint bounds at every order.
  PopProblem sphere_pop;
  SolutionMap map;
  if (route == Route::sphere) {
    sphere_pop = pop;
    map = identity_map(pop.n);
  } else if (route == Route::single_ball) {
    std::tie(sphere_pop, map) = ball_to_sphere(pop);
  }

  HierarchyResult result;
  for (int k = opts.k_start; k <= opts.k_max; ++k) {
    OrderRecord rec;
    rec.k = k;
    try {
      if (route == Route::general_ball) {
        SpectralOptions bopts = opts.spectral;
        if (opts.order_budget_s > 0) bopts.time_budget_s = opts.order_budget_s;
        const auto bounds = compute_g_bounds(
            pop, opts.bound_order < 0 ? k : opts.bound_order,
            [&bopts](const SdpProblem& sdp) {
              return solve_sdp_ctp(sdp, bopts).value;
            });
        std::tie(sphere_pop, map) = general_to_sphere(pop, bounds);
      }
      run_order(sphere_pop, map, pop, k, opts, rec, result);
    } catch (const std::exception& e) {
      rec.note = e.what();
    }
    result.orders.push_back(std::move(rec));
    if (result.status == TerminalStatus::extracted) return result;
  }

  bool any_solved = false;
  for (const auto& r : result.orders)
    if (r.solved) {
      any_solved = true;
      result.f_star = r.tau;
      result.k_final = r.k;
    }
  result.status =
      any_solved ? TerminalStatus::order_limit : TerminalStatus::solver_failure;
  return result;
}

namespace {

// ||x - e_t||^2 = sum_i x_i^2 - 2 x_t + 1 over nvars variables (t 0-based).
Polynomial distance_to_anchor(int nvars, int t) {
  Polynomial p(nvars);
  for (int i = 0; i < nvars; ++i) {
    Exponent sq(nvars, 0);
    sq[i] = 2;
    p.add_term(sq, 1.0);
  }
  Exponent lin(nvars, 0);
  lin[t] = 1;
  p.add_term(lin, -2.0);
  p.add_term(Exponent(nvars, 0), 1.0);
  return p;
}

// d p / d x_i.
Polynomial partial(const Polynomial& p, int i) {
  Polynomial d(p.n());
  for (const auto& [e, c] : p.terms()) {
    if (e[i] == 0) continue;
    Exponent de = e;
    de[i] -= 1;
    d.add_term(de, c * e[i]);
  }
  return d;
}

// Gauss-Newton steps on sys(x) = 0 from x; returns the iterate with the
// smallest residual 2-norm reached, so a diverging run falls back to the
// start. The relaxation localizes a root only to solver accuracy; this
// sharpens the candidate before the residual gate.
Eigen::VectorXd gauss_newton_polish(const std::vector<Polynomial>& sys,
                                    Eigen::VectorXd x) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(sys.size());
  std::vector<std::vector<Polynomial>> jac(m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) jac[j].push_back(partial(sys[j], i));

  Eigen::VectorXd best = x;
  double best_norm = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 40; ++it) {
    const std::vector<double> v(x.data(), x.data() + n);
    Eigen::VectorXd f(m);
    Eigen::MatrixXd J(m, n);
    for (int j = 0; j < m; ++j) {
      f[j] = sys[j].eval(v);
      for (int i = 0; i < n; ++i) J(j, i) = jac[j][i].eval(v);
    }
    if (f.norm() < best_norm) {
      best_norm = f.norm();
      best = x;
    }
    if (best_norm < 1e-14) break;
    const Eigen::VectorXd step = J.colPivHouseholderQr().solve(-f);
    if (!step.allFinite() || step.norm() > 1.0 + x.norm()) break;
    x += step;
    if (step.norm() < 1e-15 * (1.0 + x.norm())) break;
  }
  return best;
}

}  // namespace

AscResult asc_roots(const std::vector<Polynomial>& system, double L, int k,
                    const SolverOptions& opts) {
  if (system.empty())
    throw std::invalid_argument("asc_roots: empty system");
  const int n = system.front().n();
  for (const auto& p : system)
    if (p.n() != n)
      throw std::invalid_argument("asc_roots: mixed variable counts");

  AscResult out;
  const std::vector<Polynomial> scaled = scale_system(system, L);
  const int N = n + 1;
  out.state.ambient_n = N;
  out.state.variety.push_back(scaled.back());  // unit sphere first
  for (std::size_t j = 0; j + 1 < scaled.size(); ++j)
    out.state.variety.push_back(scaled[j]);

  SolverOptions sub = opts;
  sub.k_start = sub.k_max = k;

  // Unscales a point of the lifted unit sphere, polishes it against the
  // original system, and accepts it only when the residuals pass.
  const auto finish = [&](const Eigen::VectorXd& scaled_pt) {
    out.root = gauss_newton_polish(system, std::sqrt(L) * scaled_pt.head(n));
    std::vector<double> pt(out.root.data(), out.root.data() + n);
    out.residuals.clear();
    out.found = true;
    for (const auto& p : system) {
      out.residuals.push_back(std::abs(p.eval(pt)));
      if (out.residuals.back() > 1e-3 * (1.0 + poly_norms(p).l1))
        out.found = false;
    }
    if (!out.found)
      out.note = "root candidate rejected: system residuals too large";
  };

  for (int t = 0; t < N; ++t) {
    PopProblem dist_pop;
    dist_pop.n = N;
    dist_pop.objective = distance_to_anchor(N, t);
    dist_pop.equalities = out.state.variety;
    dist_pop.radius = RadiusDecl{RadiusKind::sphere, 1.0};

    const HierarchyResult hr = solve_hierarchy(dist_pop, sub);
    out.rounds = t + 1;
    const OrderRecord& rec = hr.orders.back();
    if (!rec.solved) {
      out.note = "distance subproblem failed: " + rec.note;
      return out;
    }
    out.state.omegas.push_back(rec.tau);

    if (hr.status == TerminalStatus::extracted) {
      finish(hr.x_star);
      return out;
    }
    if (t < N - 1) {
      Polynomial h = distance_to_anchor(N, t);
      h.add_term(Exponent(N, 0), -rec.tau);
      out.state.variety.push_back(std::move(h));
    }
  }

  // No extraction in any round: on the final variety each coordinate is
  // pinned by its distance, x_t = 1 - omega_t / 2.
  Eigen::VectorXd closed(N);
  for (int t = 0; t < N; ++t) closed[t] = 1.0 - 0.5 * out.state.omegas[t];
  out.closed_form = true;
  finish(closed);
  return out;
}

namespace {

struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double unit() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
  double u11() { return 2.0 * unit() - 1.0; }
  double gauss() {
    const double u1 = std::max(unit(), 1e-300), u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
};

Polynomial random_dense(int n, int deg, Rng& rng) {
  Polynomial p(n);
  for (const auto& a : monomials_up_to(n, deg)) p.add_term(a, rng.u11());
  return p;
}

// Random quadratic with prescribed behavior at the planted point: the
// non-constant coefficients are uniform, the constant term is set to
// -value(a) + shift.
Polynomial planted_quadratic(int n, const std::vector<double>& a, double shift,
                             Rng& rng) {
  Polynomial p(n);
  for (const auto& alpha : monomials_up_to(n, 2))
    if (degree(alpha) > 0) p.add_term(alpha, rng.u11());
  p.add_term(Exponent(n, 0), shift - p.eval(a));
  return p;
}

std::vector<double> point_on_sphere(int n, Rng& rng) {
  while (true) {
    std::vector<double> a(n);
    double nrm = 0.0;
    for (double& v : a) {
      v = rng.gauss();
      nrm += v * v;
    }
    nrm = std::sqrt(nrm);
    if (nrm < 1e-12) continue;
    for (double& v : a) v /= nrm;
    return a;
  }
}

}  // namespace

PopProblem gen_random_pop(GenKind kind, int n, int l_g, int l_h,
                          std::uint64_t seed, std::vector<double>* planted) {
  if (n < 1) throw std::invalid_argument("gen_random_pop: n must be >= 1");
  Rng rng(seed);
  PopProblem pop;
  pop.n = n;
  if (planted) planted->clear();

  switch (kind) {
    case GenKind::sphere_qcqp: {
      if (l_g != 0)
        throw std::invalid_argument("gen_random_pop: sphere-qcqp has no g_i");
      if (l_h < 1)
        throw std::invalid_argument("gen_random_pop: sphere-qcqp needs l_h >= 1");
      pop.objective = random_dense(n, 2, rng);
      const auto a = point_on_sphere(n, rng);
      pop.equalities.push_back(sphere_poly(n, 1.0));
      for (int j = 1; j < l_h; ++j)
        pop.equalities.push_back(planted_quadratic(n, a, 0.0, rng));
      pop.radius = RadiusDecl{RadiusKind::sphere, 1.0};
      if (planted) *planted = a;
      break;
    }
    case GenKind::ball_qcqp: {
      if (l_g < 1)
        throw std::invalid_argument("gen_random_pop: ball-qcqp needs l_g >= 1");
      if (l_h < 0) throw std::invalid_argument("gen_random_pop: l_h < 0");
      pop.objective = random_dense(n, 2, rng);
      auto a = point_on_sphere(n, rng);
      const double r = std::pow(rng.unit(), 1.0 / n);
      for (double& v : a) v *= r;
      pop.inequalities.push_back(sphere_poly(n, 1.0));
      for (int i = 1; i < l_g; ++i)
        pop.inequalities.push_back(planted_quadratic(n, a, rng.unit(), rng));
      for (int j = 0; j < l_h; ++j)
        pop.equalities.push_back(planted_quadratic(n, a, 0.0, rng));
      pop.radius = RadiusDecl{RadiusKind::ball, 1.0};
      if (planted) *planted = a;
      break;
    }
    case GenKind::quartic_sphere: {
      if (l_g != 0 || l_h != 1)
        throw std::invalid_argument(
            "gen_random_pop: quartic-sphere forces l_g = 0, l_h = 1");
      pop.objective = random_dense(n, 4, rng);
      pop.equalities.push_back(sphere_poly(n, 1.0));
      pop.radius = RadiusDecl{RadiusKind::sphere, 1.0};
      break;
    }
  }
  return pop;
}

}  // namespace ctpop
