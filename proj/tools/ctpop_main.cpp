// ctpop command line: solve problem files through the spectral hierarchy,
// generate the seeded random benchmark families, and find real roots of
// polynomial systems. See README.md for the problem file format.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ctpop/driver.hpp"
#include "ctpop/problem_io.hpp"

namespace {

using namespace ctpop;

std::pair<int, int> parse_order_range(const std::string& s) {
  const auto dots = s.find("..");
  int a = 0, b = 0;
  try {
    if (dots == std::string::npos) {
      a = b = std::stoi(s);
    } else {
      a = std::stoi(s.substr(0, dots));
      b = std::stoi(s.substr(dots + 2));
    }
  } catch (const std::exception&) {
    throw CLI::ValidationError("--order", "expected 'k' or 'k_start..k_max'");
  }
  if (a < 1 || b < a)
    throw CLI::ValidationError("--order", "need 1 <= k_start <= k_max");
  return {a, b};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string point_str(const Eigen::VectorXd& x) {
  std::string out = "[";
  for (int i = 0; i < x.size(); ++i)
    out += (i ? ", " : " ") + fmt("%.9g", x[i]);
  return out + " ]";
}

// Strips a trailing ".csv" / ".dat-s" so per-order suffixes read naturally.
std::string strip_ext(std::string path, const std::string& ext) {
  if (path.size() > ext.size() &&
      path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
    path.resize(path.size() - ext.size());
  return path;
}

void print_orders(std::ostream& os, const HierarchyResult& hr) {
  os << "  k        s          m              tau  flat  atoms  cert    time\n";
  for (const auto& r : hr.orders) {
    if (!r.solved) {
      char head[32];
      std::snprintf(head, sizeof head, "%3d", r.k);
      os << head << "  failed: " << r.note << '\n';
      continue;
    }
    char line[160];
    std::snprintf(line, sizeof line,
                  "%3d  %7d  %9d  %15.9g  %4s  %5zu  %4s  %5.1fs", r.k, r.s,
                  r.m, r.tau, r.flat ? "yes" : "no", r.atoms.size(),
                  r.certified ? "yes" : "no", r.wall_s);
    os << line;
    if (!r.note.empty()) os << "  (" << r.note << ')';
    os << '\n';
  }
}

struct SolveTask {
  PopProblem pop;
  HierarchyResult result;
  std::vector<ReportRow> rows;
  std::string error;
};

int cmd_solve(const std::vector<std::string>& files, SolverOptions opts,
              int jobs, const std::string& csv_path,
              const std::string& log_csv, const std::string& export_sdpa) {
  std::vector<SolveTask> tasks(files.size());
  std::atomic<std::size_t> next{0};
  const bool many = files.size() > 1;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= files.size()) return;
      SolveTask& t = tasks[i];
      try {
        t.pop = parse_problem_file(files[i]);
        SolverOptions o = opts;
        if (!export_sdpa.empty())
          o.export_sdpa_prefix = strip_ext(export_sdpa, ".dat-s") +
                                 (many ? "." + std::to_string(i) : "");
        t.result = solve_hierarchy(t.pop, o);
        for (const auto& rec : t.result.orders)
          t.rows.push_back(report_row(t.pop, rec));
      } catch (const std::exception& e) {
        t.error = e.what();
      }
    }
  };
  const int nthreads =
      std::min<int>(std::max(jobs, 1), static_cast<int>(files.size()));
  std::vector<std::thread> pool;
  for (int j = 1; j < nthreads; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  bool any_error = false, all_extracted = true;
  std::vector<ReportRow> all_rows;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const SolveTask& t = tasks[i];
    std::cout << "== " << files[i];
    if (t.error.empty())
      std::cout << "  (n=" << t.pop.n << ", lg=" << t.pop.lg()
                << ", lh=" << t.pop.lh() << ")";
    std::cout << '\n';
    if (!t.error.empty()) {
      std::cout << "error: " << t.error << '\n';
      any_error = true;
      all_extracted = false;
      continue;
    }
    print_orders(std::cout, t.result);
    switch (t.result.status) {
      case TerminalStatus::extracted:
        std::cout << "extracted at k=" << t.result.k_final
                  << ": tau = " << fmt("%.9g", t.result.f_star)
                  << ", certified minimizer\n"
                  << "x* = " << point_str(t.result.x_star) << '\n';
        break;
      case TerminalStatus::order_limit:
        std::cout << "no certified atom up to k=" << t.result.k_final
                  << "; best bound tau = " << fmt("%.9g", t.result.f_star)
                  << '\n';
        all_extracted = false;
        break;
      case TerminalStatus::solver_failure:
        std::cout << "solver failed at every order\n";
        any_error = true;
        all_extracted = false;
        break;
    }
    for (const auto& r : t.rows) all_rows.push_back(r);
    if (!log_csv.empty()) {
      const std::string stem = strip_ext(log_csv, ".csv") +
                               (many ? "." + std::to_string(i) : "");
      for (const auto& rec : t.result.orders) {
        if (rec.history.empty()) continue;
        std::ofstream os(stem + ".k" + std::to_string(rec.k) + ".csv");
        write_history_csv(os, rec.history);
      }
    }
  }

  if (!csv_path.empty()) {
    if (csv_path == "-") {
      write_report_csv(std::cout, all_rows);
    } else {
      std::ofstream os(csv_path);
      if (!os) {
        std::cerr << "error: cannot write " << csv_path << '\n';
        return 1;
      }
      write_report_csv(os, all_rows);
    }
  }
  if (any_error) return 1;
  return all_extracted ? 0 : 2;
}

int cmd_gen(const std::string& kind, int n, int lg, int lh,
            std::uint64_t seed, const std::string& out) {
  const std::map<std::string, GenKind> kinds = {
      {"sphere-qcqp", GenKind::sphere_qcqp},
      {"ball-qcqp", GenKind::ball_qcqp},
      {"quartic-sphere", GenKind::quartic_sphere}};
  const GenKind gk = kinds.at(kind);
  if (lg < 0) lg = gk == GenKind::ball_qcqp ? 1 : 0;
  if (lh < 0) lh = gk == GenKind::ball_qcqp ? 0 : 1;
  const PopProblem pop = gen_random_pop(gk, n, lg, lh, seed);

  std::ostringstream comment;
  comment << "generated: kind=" << kind << " n=" << n << " lg=" << lg
          << " lh=" << lh << " seed=" << seed;
  if (out.empty() || out == "-") {
    render_problem(std::cout, pop, comment.str());
  } else {
    std::ofstream os(out);
    if (!os) {
      std::cerr << "error: cannot write " << out << '\n';
      return 1;
    }
    render_problem(os, pop, comment.str());
  }
  return 0;
}

int cmd_roots(const std::string& file, double L, int k, SolverOptions opts) {
  const PopProblem pop = parse_problem_file(file);
  if (pop.equalities.empty()) {
    std::cerr << "error: " << file << ": no equality blocks (empty system)\n";
    return 1;
  }
  const AscResult res = asc_roots(pop.equalities, L, k, opts);
  std::cout << "rounds: " << res.rounds
            << (res.closed_form ? " (closed form)" : " (extracted)") << '\n';
  if (res.root.size() > 0) {
    std::cout << "root: " << point_str(res.root) << '\n';
    std::cout << "residuals:";
    for (double r : res.residuals) std::cout << ' ' << fmt("%.3g", r);
    std::cout << '\n';
  }
  if (!res.found) {
    std::cout << "no certified root"
              << (res.note.empty() ? "" : ": " + res.note) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral hierarchy solver for polynomial optimization"};
  app.require_subcommand(1);

  // --- solve ---
  auto* solve = app.add_subcommand("solve", "solve problem files");
  std::vector<std::string> files;
  std::string order = "1..4", solver = "bundle", mode = "ctp";
  std::string csv_path, log_csv, export_sdpa;
  SolverOptions opts;
  int jobs = 1;
  solve->add_option("files", files, "problem files")->required();
  solve->add_option("--order", order, "relaxation order k or range k0..k1")
      ->capture_default_str();
  solve->add_option("--solver", solver, "nonsmooth method")
      ->check(CLI::IsMember({"bundle", "subgradient"}))
      ->capture_default_str();
  solve->add_option("--mode", mode, "trace handling")
      ->check(CLI::IsMember({"ctp", "btp"}))
      ->capture_default_str();
  solve->add_option("--eps", opts.eps, "certification tolerance")
      ->capture_default_str();
  solve->add_option("--tol", opts.spectral.tol, "solver stopping tolerance")
      ->capture_default_str();
  solve->add_option("--max-iter", opts.spectral.max_iter,
                    "solver iteration cap")
      ->capture_default_str();
  solve->add_option("--seed", opts.seed, "extraction seed")
      ->capture_default_str();
  solve->add_option("--budget", opts.order_budget_s,
                    "per-order wall budget in seconds")
      ->capture_default_str();
  solve->add_option("--jobs", jobs, "parallel problems")->capture_default_str();
  solve->add_option("--csv", csv_path, "write the report CSV here ('-' stdout)");
  solve->add_option("--log-csv", log_csv,
                    "write per-order iteration logs <stem>.k<k>.csv");
  solve->add_option("--export-sdpa", export_sdpa,
                    "write each order's SDP as <stem>.k<k>.dat-s");

  // --- gen ---
  auto* gen = app.add_subcommand("gen", "generate a random benchmark problem");
  std::string kind, out = "-";
  int gn = 0, glg = -1, glh = -1;
  std::uint64_t gseed = 1;
  gen->add_option("--kind", kind, "family")
      ->check(CLI::IsMember({"sphere-qcqp", "ball-qcqp", "quartic-sphere"}))
      ->required();
  gen->add_option("--n", gn, "variables")->required();
  gen->add_option("--lg", glg, "inequality count (ball-qcqp)");
  gen->add_option("--lh", glh, "equality count (counting the sphere)");
  gen->add_option("--seed", gseed, "seed")->capture_default_str();
  gen->add_option("--out", out, "output file ('-' stdout)")
      ->capture_default_str();

  // --- roots ---
  auto* roots = app.add_subcommand("roots", "real root of a polynomial system");
  std::string sysfile;
  double L = 1e4;
  int rk = 2;
  roots->add_option("file", sysfile, "system file (equality blocks)")
      ->required();
  roots->add_option("--L", L, "squared radius enclosing a root")
      ->capture_default_str();
  roots->add_option("--order", rk, "fixed relaxation order")
      ->capture_default_str();
  SolverOptions ropts;
  // Root acceptance gates at 1e-3 * (1 + |p_j|_1) need distance values a few
  // orders tighter than the bound-only default.
  ropts.spectral.tol = 1e-7;
  roots->add_option("--tol", ropts.spectral.tol, "solver stopping tolerance")
      ->capture_default_str();
  roots->add_option("--max-iter", ropts.spectral.max_iter,
                    "solver iteration cap")
      ->capture_default_str();
  roots->add_option("--eps", ropts.eps, "certification tolerance")
      ->capture_default_str();
  roots->add_option("--seed", ropts.seed, "extraction seed")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      std::tie(opts.k_start, opts.k_max) = parse_order_range(order);
      opts.mode = mode == "btp" ? SpectralMode::btp : SpectralMode::ctp;
      opts.spectral.method = solver == "subgradient"
                                 ? NonsmoothMethod::subgradient
                                 : NonsmoothMethod::proximal_bundle;
      return cmd_solve(files, opts, jobs, csv_path, log_csv, export_sdpa);
    }
    if (gen->parsed()) return cmd_gen(kind, gn, glg, glh, gseed, out);
    return cmd_roots(sysfile, L, rk, ropts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
