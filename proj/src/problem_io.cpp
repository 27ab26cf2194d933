#include "ctpop/problem_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace ctpop {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool parse_double(const std::string& tok, double& out) {
  const char* last = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_int(const std::string& tok, int& out) {
  const char* last = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), last, out);
  return ec == std::errc() && ptr == last;
}

void render_poly_block(std::ostream& os, const char* kind,
                       const Polynomial& p) {
  os << "begin " << kind << '\n';
  for (const auto& [alpha, c] : p.terms()) {
    os << "term " << fmt_double(c);
    for (int e : alpha) os << ' ' << e;
    os << '\n';
  }
  os << "end\n";
}

}  // namespace

ParseError::ParseError(int line_no, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line_no) + ": " + msg),
      line(line_no) {}

PopProblem parse_problem(std::istream& is) {
  PopProblem pop;
  bool have_n = false, have_objective = false, have_radius = false;
  enum class Block { none, objective, inequality, equality };
  Block block = Block::none;
  Polynomial current;

  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos)
      raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(std::move(t));
    if (tok.empty()) continue;
    const std::string& kw = tok[0];

    if (kw == "n") {
      if (have_n) throw ParseError(line_no, "duplicate 'n'");
      if (block != Block::none) throw ParseError(line_no, "'n' inside a block");
      if (tok.size() != 2 || !parse_int(tok[1], pop.n) || pop.n < 1)
        throw ParseError(line_no, "expected 'n <positive integer>'");
      have_n = true;
      pop.objective = Polynomial(pop.n);
    } else if (kw == "radius") {
      if (have_radius) throw ParseError(line_no, "duplicate 'radius'");
      if (block != Block::none)
        throw ParseError(line_no, "'radius' inside a block");
      RadiusDecl decl;
      if (tok.size() != 3)
        throw ParseError(line_no, "expected 'radius <sphere|ball> <R>'");
      if (tok[1] == "sphere")
        decl.kind = RadiusKind::sphere;
      else if (tok[1] == "ball")
        decl.kind = RadiusKind::ball;
      else
        throw ParseError(line_no, "radius kind must be 'sphere' or 'ball'");
      if (!parse_double(tok[2], decl.R) || !(decl.R > 0))
        throw ParseError(line_no, "radius R must be a positive number");
      pop.radius = decl;
      have_radius = true;
    } else if (kw == "begin") {
      if (!have_n) throw ParseError(line_no, "'n' must precede every block");
      if (block != Block::none)
        throw ParseError(line_no, "'begin' inside an open block");
      if (tok.size() != 2)
        throw ParseError(line_no,
                         "expected 'begin <objective|inequality|equality>'");
      if (tok[1] == "objective") {
        if (have_objective) throw ParseError(line_no, "duplicate objective");
        block = Block::objective;
      } else if (tok[1] == "inequality") {
        block = Block::inequality;
      } else if (tok[1] == "equality") {
        block = Block::equality;
      } else {
        throw ParseError(line_no, "unknown block kind '" + tok[1] + "'");
      }
      current = Polynomial(pop.n);
    } else if (kw == "term") {
      if (block == Block::none)
        throw ParseError(line_no, "'term' outside any block");
      if (static_cast<int>(tok.size()) != 2 + pop.n)
        throw ParseError(line_no, "expected coefficient and " +
                                      std::to_string(pop.n) + " exponents");
      double c = 0.0;
      if (!parse_double(tok[1], c))
        throw ParseError(line_no, "bad coefficient '" + tok[1] + "'");
      Exponent alpha(pop.n, 0);
      for (int i = 0; i < pop.n; ++i)
        if (!parse_int(tok[2 + i], alpha[i]) || alpha[i] < 0)
          throw ParseError(line_no, "bad exponent '" + tok[2 + i] + "'");
      current.add_term(alpha, c);
    } else if (kw == "end") {
      if (block == Block::none)
        throw ParseError(line_no, "'end' without 'begin'");
      if (tok.size() != 1) throw ParseError(line_no, "trailing tokens on 'end'");
      switch (block) {
        case Block::objective:
          pop.objective = std::move(current);
          have_objective = true;
          break;
        case Block::inequality:
          pop.inequalities.push_back(std::move(current));
          break;
        case Block::equality:
          pop.equalities.push_back(std::move(current));
          break;
        case Block::none:
          break;
      }
      block = Block::none;
    } else {
      throw ParseError(line_no, "unknown keyword '" + kw + "'");
    }
  }
  if (block != Block::none)
    throw ParseError(line_no + 1, "unterminated block at end of file");
  if (!have_n) throw ParseError(line_no + 1, "missing 'n'");
  return pop;
}

PopProblem parse_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  try {
    return parse_problem(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line, path + ": " + e.what());
  }
}

void render_problem(std::ostream& os, const PopProblem& pop,
                    const std::string& comment) {
  if (!comment.empty()) {
    std::istringstream cs(comment);
    for (std::string l; std::getline(cs, l);) os << "# " << l << '\n';
  }
  os << "n " << pop.n << '\n';
  if (pop.radius)
    os << "radius "
       << (pop.radius->kind == RadiusKind::sphere ? "sphere" : "ball") << ' '
       << fmt_double(pop.radius->R) << '\n';
  render_poly_block(os, "objective", pop.objective);
  for (const auto& g : pop.inequalities) render_poly_block(os, "inequality", g);
  for (const auto& h : pop.equalities) render_poly_block(os, "equality", h);
}

std::string render_problem_string(const PopProblem& pop,
                                  const std::string& comment) {
  std::ostringstream os;
  render_problem(os, pop, comment);
  return os.str();
}

ReportRow report_row(const PopProblem& pop, const OrderRecord& rec) {
  ReportRow row;
  row.n = pop.n;
  row.lg = pop.lg();
  row.lh = pop.lh();
  row.k = rec.k;
  row.s = rec.s;
  row.m = rec.m;
  row.tau = rec.tau;
  row.certified = rec.certified;
  row.time_s = rec.wall_s;
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& at : rec.atoms) {
    nlohmann::json a;
    a["point"] = std::vector<double>(at.point.data(),
                                     at.point.data() + at.point.size());
    a["weight"] = at.weight;
    atoms.push_back(std::move(a));
  }
  row.atom_json = atoms.dump();
  return row;
}

namespace {

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

}  // namespace

void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows,
                      bool header) {
  if (header) os << "n,lg,lh,k,s,m,tau,certified,atom,time_s\n";
  char buf[64];
  for (const auto& r : rows) {
    os << r.n << ',' << r.lg << ',' << r.lh << ',' << r.k << ',' << r.s << ','
       << r.m << ',';
    std::snprintf(buf, sizeof buf, "%.12g", r.tau);
    os << buf << ',' << (r.certified ? 1 : 0) << ',' << csv_quote(r.atom_json)
       << ',';
    std::snprintf(buf, sizeof buf, "%.3f", r.time_s);
    os << buf << '\n';
  }
}

}  // namespace ctpop
