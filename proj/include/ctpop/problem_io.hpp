#pragma once

// Problem files and run reports. The file format is line-oriented text with
// explicit exponent lists (no expression grammar), designed so that
// parse(render(pop)) reproduces the problem exactly:
//
//   file    := line*
//   line    := '' | '#' comment | stmt
//   stmt    := 'n' INT
//            | 'radius' ('sphere' | 'ball') FLOAT
//            | 'begin' ('objective' | 'inequality' | 'equality')
//            | 'term' FLOAT INT^n          (coefficient, then n exponents)
//            | 'end'
//
// 'n' must precede every block; each 'begin inequality' / 'begin equality'
// opens one more constraint polynomial; floats render as %.17g.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctpop/driver.hpp"
#include "ctpop/pop.hpp"

namespace ctpop {

struct ParseError : std::runtime_error {
  ParseError(int line_no, const std::string& msg);
  int line = 0;
};

/// Parses a problem (or bare polynomial system: objective and radius are
/// optional). Throws ParseError with the 1-based line number.
PopProblem parse_problem(std::istream& is);

/// parse_problem with the file name prefixed to error messages.
PopProblem parse_problem_file(const std::string& path);

/// Renders in the canonical order: n, radius, objective, inequalities,
/// equalities; terms in graded lexicographic order. comment, when nonempty,
/// becomes leading '# ' lines.
void render_problem(std::ostream& os, const PopProblem& pop,
                    const std::string& comment = "");
std::string render_problem_string(const PopProblem& pop,
                                  const std::string& comment = "");

/// One row of a run report, mirroring the hierarchy's per-order record.
/// atom_json holds the extracted atoms as a JSON array of
/// {"point": [...], "weight": w} objects (empty array when none).
struct ReportRow {
  int n = 0, lg = 0, lh = 0;
  int k = 0, s = 0, m = 0;
  double tau = 0.0;
  bool certified = false;
  std::string atom_json = "[]";
  double time_s = 0.0;
};

ReportRow report_row(const PopProblem& pop, const OrderRecord& rec);

/// CSV with fixed columns n,lg,lh,k,s,m,tau,certified,atom,time_s; the atom
/// column is the JSON string quoted under CSV rules.
void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows,
                      bool header = true);

}  // namespace ctpop
