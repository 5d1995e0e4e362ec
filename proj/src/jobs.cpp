#include "bf/jobs.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "bf/constraints.hpp"
#include "bf/expr.hpp"
#include "bf/filtration.hpp"
#include "bf/flatzero.hpp"
#include "bf/jets.hpp"
#include "bf/realize.hpp"
#include "bf/region.hpp"
#include "bf/verify.hpp"

namespace fs = std::filesystem;

namespace bf {
namespace {

const char* kCommands[] = {"realize-borel",    "multi-borel",  "extend-strata",
                           "realize-filtered", "build-flat",   "check-filtration",
                           "solve-constraints", "decay-wrap",  "verify",
                           "corpus"};

bool known_command(const std::string& c) {
  for (const char* k : kCommands)
    if (c == k) return true;
  return false;
}

// strict schemas: any key outside `allowed` is an error, reported by pointer
void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& path) {
  if (!j.is_object())
    throw validation_error(path + ": expected an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        ok = true;
        break;
      }
    if (!ok) throw validation_error("unknown field " + path + "/" + item.key());
  }
}

const json& need(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end())
    throw validation_error("missing field " + path + "/" + key);
  return *it;
}

int need_int(const json& j, const char* key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_number_integer())
    throw validation_error(path + "/" + key + ": expected an integer");
  return v.get<int>();
}

double need_num(const json& j, const char* key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_number())
    throw validation_error(path + "/" + key + ": expected a number");
  return v.get<double>();
}

std::string need_str(const json& j, const char* key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_string())
    throw validation_error(path + "/" + key + ": expected a string");
  return v.get<std::string>();
}

Pt need_point(const json& j, const char* key, const std::string& path, int dim) {
  const json& v = need(j, key, path);
  if (!v.is_array() || int(v.size()) != dim)
    throw validation_error(path + "/" + key + ": expected an array of " +
                           std::to_string(dim) + " numbers");
  Pt p{0.0, 0.0};
  for (int i = 0; i < dim; ++i) {
    if (!v[i].is_number())
      throw validation_error(path + "/" + key + ": expected numbers");
    p[std::size_t(i)] = v[i].get<double>();
  }
  return p;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open job file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    // e.what() carries the byte/line position from the parser
    throw validation_error("malformed JSON in " + path + ": " + e.what());
  }
}

// ---- artifact routing ----

struct Artifacts {
  fs::path out;
  json output;  // overrides from the job file
  std::vector<std::string> written;

  fs::path path_for(const char* kind, const std::string& fallback) const {
    std::string name = output.contains(kind)
                           ? output.at(kind).get<std::string>()
                           : fallback;
    fs::path p(name);
    return p.is_absolute() ? p : out / p;
  }

  void write_json(const char* kind, const std::string& fallback, const json& j) {
    fs::path p = path_for(kind, fallback);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p);
    if (!f) throw validation_error("cannot write " + p.string());
    f << j.dump(2) << "\n";
    written.push_back(p.string());
  }

  void write_grid(const std::string& fallback, const SmoothExpr& f,
                  const Box& box) {
    fs::path p = path_for("grid", fallback);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream g(p);
    if (!g) throw validation_error("cannot write " + p.string());
    g << std::setprecision(17);
    double lo0 = to_double(box.lo[0]), hi0 = to_double(box.hi[0]);
    if (box.dim == 1) {
      g << "x,value\n";
      const int n = 1024;
      for (int i = 0; i < n; ++i) {
        double x = lo0 + (hi0 - lo0) * i / (n - 1);
        g << x << "," << f.eval({x, 0.0}) << "\n";
      }
    } else {
      g << "x,y,value\n";
      double lo1 = to_double(box.lo[1]), hi1 = to_double(box.hi[1]);
      const int n = 64;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double x = lo0 + (hi0 - lo0) * i / (n - 1);
          double y = lo1 + (hi1 - lo1) * j / (n - 1);
          g << x << "," << y << "," << f.eval({x, y}) << "\n";
        }
    }
    written.push_back(p.string());
  }
};

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0)
        .count();
  }
};

void stamp(json& report, const JobFile& job, const Timer& t) {
  report["command"] = job.command;
  if (!job.id.empty()) report["id"] = job.id;
  report["wall_time_ms"] = t.ms();
}

void summarize(const JobFile& job, const Artifacts& art, const Timer& t,
               const std::string& extra = "") {
  std::cout << job.command << ": ok";
  if (!extra.empty()) std::cout << ", " << extra;
  std::cout << " (" << std::fixed << std::setprecision(0) << t.ms() << " ms)\n";
  std::cout.unsetf(std::ios::fixed);
  for (const auto& w : art.written) std::cout << "  wrote " << w << "\n";
}

Region job_region(const JobFile& job) {
  if (job.region.is_null())
    throw validation_error(job.command + " needs a \"region\" in the job file");
  return Region::from_json(job.region, "/region");
}

void forbid_region(const JobFile& job) {
  if (!job.region.is_null())
    throw validation_error(job.command + " does not take a \"region\"");
}

int effective_max_order(const JobFile& job, const CliOptions& opt) {
  if (opt.max_order >= 0) return opt.max_order;
  if (job.tolerances.contains("max_order"))
    return job.tolerances.at("max_order").get<int>();
  return -1;
}

double effective_tol(const JobFile& job, const CliOptions& opt) {
  if (opt.tol >= 0) return opt.tol;
  if (job.tolerances.contains("tol"))
    return job.tolerances.at("tol").get<double>();
  return -1.0;
}

CompletionPrefix parse_prefix(const json& payload, const std::string& path) {
  CompletionPrefix P;
  P.Z = SetDescriptor::from_json(need(payload, "Z", path), path + "/Z");
  const json& terms = need(payload, "terms", path);
  if (!terms.is_array() || terms.empty())
    throw validation_error(path + "/terms: expected a nonempty array");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    std::string tp = path + "/terms/" + std::to_string(i);
    reject_unknown(terms[i], {"g", "declared_order"}, tp);
    PrefixTerm t;
    t.g = SmoothExpr::from_json(need(terms[i], "g", tp));
    t.declared_order = need_int(terms[i], "declared_order", tp);
    P.terms.push_back(std::move(t));
  }
  return P;
}

// ---- the measurement command ----

int run_verify(const JobFile& job, const CliOptions& opt, Artifacts& art) {
  Timer t;
  reject_unknown(job.payload, {"expr", "checks"}, "/payload");
  SmoothExpr f = SmoothExpr::from_json(need(job.payload, "expr", "/payload"));
  const json& checks = need(job.payload, "checks", "/payload");
  if (!checks.is_array() || checks.empty())
    throw validation_error("/payload/checks: expected a nonempty array");

  std::optional<Region> reg;
  if (!job.region.is_null()) reg = Region::from_json(job.region, "/region");

  double default_tol = effective_tol(job, opt);
  int cap = effective_max_order(job, opt);

  std::set<std::string> names;
  json records = json::array();
  bool all_pass = true;

  auto push = [&](const std::string& name, const json& claimed,
                  const json& measured, double tolerance, bool pass,
                  const std::string& note) {
    json r{{"name", name},
           {"claimed", claimed},
           {"measured", measured},
           {"tolerance", tolerance},
           {"pass", pass}};
    if (!note.empty()) r["note"] = note;
    records.push_back(r);
    if (!pass) all_pass = false;
  };

  for (std::size_t ci = 0; ci < checks.size(); ++ci) {
    std::string cp = "/payload/checks/" + std::to_string(ci);
    const json& c = checks[ci];
    std::string name = need_str(c, "name", cp);
    if (!names.insert(name).second)
      throw validation_error(cp + ": duplicate check name \"" + name + "\"");
    std::string type = need_str(c, "type", cp);

    auto check_tol = [&](bool required) -> double {
      if (c.contains("tolerance")) return c.at("tolerance").get<double>();
      if (default_tol >= 0) return default_tol;
      if (required)
        throw validation_error(cp + ": no tolerance (give one here, in "
                               "\"tolerances\", or with --tol)");
      return 0.0;
    };

    if (type == "fd-jet") {
      reject_unknown(c, {"name", "type", "x", "order", "claimed", "tolerance",
                         "feature"},
                     cp);
      int K = need_int(c, "order", cp);
      if (K < 0 || K > 10)
        throw validation_error(cp + "/order: finite differences cover orders "
                               "0..10");
      if (cap >= 0 && K > cap)
        throw validation_error(cp + "/order exceeds --max-order");
      Pt x = need_point(c, "x", cp, f.dim());
      double feature = c.value("feature", 1.0);
      const json& claimed = need(c, "claimed", cp);
      std::size_t want = f.dim() == 1
                             ? std::size_t(K + 1)
                             : std::size_t((K + 1) * (K + 2) / 2);
      if (!claimed.is_array() || claimed.size() != want)
        throw validation_error(cp + "/claimed: expected " +
                               std::to_string(want) + " entries");
      double tol = check_tol(true);
      FdJet fj = fd_jet(f, x, K, feature);
      for (std::size_t i = 0; i < want; ++i) {
        double cl = claimed[i].get<double>();
        double ms = fj.value[i];
        double bound = tol + fj.err[i];
        bool pass = std::isfinite(ms) && std::abs(ms - cl) <= bound;
        std::ostringstream nm;
        nm << name << "[" << i << "]";
        std::ostringstream note;
        note << "fd error estimate " << fj.err[i];
        push(nm.str(), cl, ms, bound, pass, note.str());
      }
    } else if (type == "vanishing-order") {
      reject_unknown(c, {"name", "type", "x", "dir", "h0", "claimed_at_least"},
                     cp);
      Pt x = need_point(c, "x", cp, f.dim());
      double h0 = c.value("h0", 1e-2);
      double claimed = need_num(c, "claimed_at_least", cp);
      OrderEstimate est;
      if (f.dim() == 1 && !c.contains("dir")) {
        est = vanishing_order1(f, x[0], h0);
      } else {
        Pt dir = need_point(c, "dir", cp, f.dim());
        est = vanishing_order(f, x, dir, h0);
      }
      bool pass = est.infinite || (est.stable && est.slope >= claimed);
      json measured = est.infinite ? json("infinite") : json(est.slope);
      std::string note = est.infinite
                             ? "values collapse below the representable range"
                             : (est.stable ? "" : "no stable slope window");
      push(name, claimed, measured, 0.0, pass, note);
    } else if (type == "sup-norm") {
      reject_unknown(c, {"name", "type", "k", "claimed_at_most"}, cp);
      if (!reg)
        throw validation_error(cp + ": sup-norm checks need a job \"region\"");
      int k = c.value("k", 0);
      if (k < 0) throw validation_error(cp + "/k: expected a nonnegative order");
      double claimed = need_num(c, "claimed_at_most", cp);
      std::vector<double> sup = sup_norm(f, *reg, k);
      double ms = sup[std::size_t(k)];
      push(name, claimed, ms, 0.0, std::isfinite(ms) && ms <= claimed, "");
    } else if (type == "eval") {
      reject_unknown(c, {"name", "type", "x", "claimed", "tolerance"}, cp);
      Pt x = need_point(c, "x", cp, f.dim());
      double cl = need_num(c, "claimed", cp);
      double tol = check_tol(true);
      double ms = f.eval(x);
      push(name, cl, ms, tol, std::isfinite(ms) && std::abs(ms - cl) <= tol, "");
    } else {
      throw validation_error(cp + "/type: unknown check type \"" + type +
                             "\" (fd-jet, vanishing-order, sup-norm, eval)");
    }
  }

  json report;
  report["checks"] = records;
  report["ok"] = all_pass;
  report["environment"] = {{"compiler", __VERSION__},
                           {"sweep_threads", sweep_threads()}};
  stamp(report, job, t);
  art.write_json("report", "verify-report.json", report);

  int failed = 0;
  for (const auto& r : records)
    if (!r.at("pass").get<bool>()) ++failed;
  std::cout << "verify: " << records.size() << " checks, " << failed
            << " failed (" << std::fixed << std::setprecision(0) << t.ms()
            << " ms)\n";
  std::cout.unsetf(std::ios::fixed);
  for (const auto& w : art.written) std::cout << "  wrote " << w << "\n";
  return all_pass ? 0 : 3;
}

// ---- built-in example suites ----

struct Suite {
  std::string name;
  int checks = 0;
  int failed = 0;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) {
      ++failed;
      notes.push_back("FAIL: " + what);
    }
  }
};

Suite corpus_borel_sum() {
  Suite s;
  s.name = "borel-sum";
  Jet J;
  J.dim = 1;
  J.order = 20;
  J.base = {Rational(0), Rational(0)};
  J.a.resize(21);
  double kf = 1.0;
  for (int k = 0; k <= 20; ++k) {
    if (k > 0) kf *= k;
    J.a[std::size_t(k)] = kf * kf;
  }
  Region reg;
  reg.box.dim = 1;
  reg.box.lo = {Rational(-1), Rational(0)};
  reg.box.hi = {Rational(1), Rational(0)};
  auto R = borel_realize(J, reg);
  auto d = R.f.derivs({0.0, 0.0}, 20);
  for (int k = 0; k <= 20; ++k) {
    double rel = std::abs(d[std::size_t(k)] - J.a[std::size_t(k)]) /
                 std::max(1.0, std::abs(J.a[std::size_t(k)]));
    s.expect(rel <= 1e-9, "derivative " + std::to_string(k) +
                              " off by rel " + std::to_string(rel));
  }
  // the realized sum stays finite across the whole window
  for (int i = 0; i <= 64; ++i) {
    double x = -1.0 + 2.0 * i / 64;
    s.expect(std::isfinite(R.f.eval1(x)), "non-finite value at x=" +
                                              std::to_string(x));
  }
  // schedule tails sit inside their budgets
  for (const auto& sch : R.schedules) {
    bool ok = true;
    for (std::size_t k = 0; k < sch.tail.size(); ++k)
      for (double tl : sch.tail[k])
        if (!(tl <= sch.budget[k])) ok = false;
    s.expect(ok, "tail bound exceeds its budget");
  }
  return s;
}

Suite corpus_flat_chain() {
  Suite s;
  s.name = "flat-chain";
  ZeroChain chain;
  const int m = 8;
  for (int i = 1; i <= m; ++i) {
    SetDescriptor Z;
    Z.dim = 1;
    Z.comps.push_back({{Rational(0), Rational(0)}, Rational(0)});
    for (int n = i; n <= m; ++n)
      Z.comps.push_back({{Rational(1, n), Rational(0)}, Rational(0)});
    chain.sets.push_back(Z);
  }
  Region reg;
  reg.box.dim = 1;
  reg.box.lo = {Rational(-1, 2), Rational(0)};
  reg.box.hi = {Rational(3, 2), Rational(0)};
  auto F = flat_zero_chain(chain, reg);

  // exact zeros on the top level
  for (const auto& c : chain.sets[0].comps) {
    Rational v = F.tau.eval_exact({c.center[0], Rational(0)});
    s.expect(v == 0, "tau not exactly zero at a chain point");
  }
  // positive away from the chain
  for (double x : {-0.3, 0.3, 0.7, 1.3})
    s.expect(F.tau.eval1(x) > 0.0, "tau not positive at x=" + std::to_string(x));
  // flatness deepens along the chain: at 1/5 the order is at least 5
  {
    double h0 = to_double(F.eps[4]) / 100;
    auto est = vanishing_order1(F.tau, 0.2, h0);
    s.expect(est.infinite || (est.stable && est.slope >= 4.9),
             "order at 1/5 below 5");
  }
  // at the persistent point 0 the function is flatter than any finite order
  {
    double h0 = to_double(F.eps.back()) / 100;
    auto est = vanishing_order1(F.tau, 0.0, h0);
    s.expect(est.infinite, "expected flat-beyond-measurement at 0");
  }
  return s;
}

Suite corpus_filtration() {
  Suite s;
  s.name = "filtration-growth";
  auto Fr = reciprocal_root_filtration(10);
  auto form_r = necessary_form_check(Fr, 10);
  s.expect(!form_r.ok, "reciprocal-root chain not flagged");
  s.expect(form_r.obstruction_i == 1, "obstruction index not 1");
  auto W = witness_unbounded(Fr, 10);
  s.expect(int(W.terms.size()) == 10, "witness term count");
  Rational f10(1);
  for (int k = 2; k <= 10; ++k) f10 *= k;
  s.expect(W.terms.back().value == f10, "witness value at level 10 not 10!");

  auto Fp = power_filtration(12);
  auto form_p = necessary_form_check(Fp, 12);
  s.expect(form_p.ok, "pure-power chain flagged");
  for (int j = 1; j <= 12; ++j) {
    auto idx = form_p.indices[std::size_t(j - 1)];
    s.expect(idx[0] == j && idx[1] == j,
             "sandwich indices at level " + std::to_string(j));
  }
  return s;
}

int run_corpus(const JobFile& job, Artifacts& art) {
  Timer t;
  json suites = json::array();
  bool all = true;
  for (auto* fn : {corpus_borel_sum, corpus_flat_chain, corpus_filtration}) {
    Timer st;
    Suite s = fn();
    bool ok = s.failed == 0;
    all = all && ok;
    std::cout << "corpus " << s.name << ": " << (ok ? "pass" : "FAIL") << " ("
              << s.checks << " checks, " << std::fixed << std::setprecision(0)
              << st.ms() << " ms)\n";
    std::cout.unsetf(std::ios::fixed);
    for (const auto& n : s.notes) std::cout << "  " << n << "\n";
    suites.push_back({{"name", s.name},
                      {"checks", s.checks},
                      {"failed", s.failed},
                      {"notes", s.notes},
                      {"wall_time_ms", st.ms()}});
  }
  json report;
  report["suites"] = suites;
  report["ok"] = all;
  stamp(report, job, t);
  art.write_json("report", "corpus-report.json", report);
  for (const auto& w : art.written) std::cout << "  wrote " << w << "\n";
  return all ? 0 : 3;
}

}  // namespace

JobFile JobFile::parse(const json& j) {
  if (!j.is_object()) throw validation_error("job file: expected an object");
  reject_unknown(j, {"version", "id", "command", "region", "payload",
                     "tolerances", "output"},
                 "");
  JobFile job;
  if (j.contains("version")) {
    job.version = need_int(j, "version", "");
    if (job.version != 1)
      throw validation_error("/version: only version 1 is understood");
  }
  if (j.contains("id")) job.id = need_str(j, "id", "");
  if (j.contains("command")) {
    job.command = need_str(j, "command", "");
    if (!known_command(job.command))
      throw validation_error("/command: unknown command \"" + job.command +
                             "\"");
  }
  if (j.contains("region")) job.region = j.at("region");
  job.payload = j.value("payload", json::object());
  if (!job.payload.is_object())
    throw validation_error("/payload: expected an object");
  job.tolerances = j.value("tolerances", json::object());
  reject_unknown(job.tolerances, {"tol", "max_order"}, "/tolerances");
  job.output = j.value("output", json::object());
  reject_unknown(job.output, {"expr", "report", "grid"}, "/output");
  for (const auto& item : job.output.items())
    if (!item.value().is_string())
      throw validation_error("/output/" + item.key() + ": expected a path");
  return job;
}

int dispatch(const JobFile& job, const CliOptions& opt) {
  Artifacts art{fs::path(opt.out_dir), job.output, {}};
  fs::create_directories(art.out);
  const std::string& cmd = job.command;
  bool want_grid = opt.dump_grid || job.output.contains("grid");

  auto finish_expr = [&](Timer& t, const SmoothExpr& f, json report,
                         const Box& grid_box, const std::string& extra) {
    art.write_json("expr", cmd + "-expr.json", f.to_json());
    stamp(report, job, t);
    art.write_json("report", cmd + "-report.json", report);
    if (want_grid) art.write_grid(cmd + "-grid.csv", f, grid_box);
    summarize(job, art, t, extra);
  };

  if (cmd == "realize-borel") {
    Timer t;
    reject_unknown(job.payload, {"jet"}, "/payload");
    Jet J = Jet::from_json(need(job.payload, "jet", "/payload"), "/payload/jet");
    int cap = effective_max_order(job, opt);
    if (cap >= 0 && J.order > cap)
      throw validation_error("/payload/jet: order exceeds --max-order");
    Region reg = job_region(job);
    auto R = borel_realize(J, reg);
    finish_expr(t, R.f, R.report, reg.box,
                "order " + std::to_string(J.order) + " jet realized");
    return 0;
  }

  if (cmd == "multi-borel" || cmd == "extend-strata") {
    Timer t;
    reject_unknown(job.payload, {"field"}, "/payload");
    JetField F = JetField::from_json(need(job.payload, "field", "/payload"));
    int cap = effective_max_order(job, opt);
    if (cap >= 0 && F.order > cap)
      throw validation_error("/payload/field: order exceeds --max-order");
    Region reg = job_region(job);
    auto R = cmd == "multi-borel" ? multi_borel(F, reg)
                                  : whitney_extend_strata(F, reg);
    finish_expr(t, R.f, R.report, reg.box,
                std::to_string(F.strata.size()) + " strata, order " +
                    std::to_string(F.order));
    return 0;
  }

  if (cmd == "realize-filtered") {
    Timer t;
    reject_unknown(job.payload, {"Z", "terms"}, "/payload");
    CompletionPrefix P = parse_prefix(job.payload, "/payload");
    Region reg = job_region(job);
    auto R = realize_filtered(P, reg);
    finish_expr(t, R.f, R.report, reg.box,
                std::to_string(P.terms.size()) + " terms assembled");
    return 0;
  }

  if (cmd == "build-flat") {
    Timer t;
    reject_unknown(job.payload, {"chain"}, "/payload");
    ZeroChain chain = ZeroChain::from_json(need(job.payload, "chain", "/payload"));
    Region reg = job_region(job);
    auto F = flat_zero_chain(chain, reg);
    finish_expr(t, F.tau, F.report, reg.box,
                std::to_string(chain.sets.size()) + " levels");
    return 0;
  }

  if (cmd == "check-filtration") {
    Timer t;
    forbid_region(job);
    reject_unknown(job.payload, {"filtration", "i_max", "j_max", "witness"},
                   "/payload");
    PolyFiltration F =
        PolyFiltration::from_json(need(job.payload, "filtration", "/payload"));
    int j_max = opt.j_max > 0 ? opt.j_max
                              : job.payload.value("j_max", F.size());
    int i_max = opt.i_max > 0 ? opt.i_max
                              : job.payload.value("i_max", j_max);
    auto loci = order_loci(F, i_max, j_max);
    auto stab = stabilization_check(F, i_max, j_max);
    auto form = necessary_form_check(F, j_max);
    json report;
    report["order_loci"] = loci.to_json();
    report["stabilization"] = stab.to_json();
    report["form"] = form.to_json();
    bool want_witness = job.payload.value("witness", stab.any_growth);
    if (want_witness) {
      if (stab.any_growth) {
        auto W = witness_unbounded(F, j_max);
        report["witness"] = W.report;
        SmoothExpr S = W.partial_sum(j_max);
        art.write_json("expr", cmd + "-expr.json", S.to_json());
        if (want_grid) {
          Box b;
          b.dim = 1;
          b.lo = {F.window[0], Rational(0)};
          b.hi = {F.window[1], Rational(0)};
          art.write_grid(cmd + "-grid.csv", S, b);
        }
      } else {
        report["witness"] = {{"available", false},
                             {"note", "every order locus settles; there is "
                                      "nothing to witness"}};
      }
    }
    stamp(report, job, t);
    art.write_json("report", cmd + "-report.json", report);
    summarize(job, art, t,
              form.ok ? "two-sided form admissible" : "growth obstruction found");
    return 0;
  }

  if (cmd == "solve-constraints") {
    Timer t;
    reject_unknown(job.payload, {"f0", "Z", "eps", "conds"}, "/payload");
    SmoothExpr f0 = SmoothExpr::from_json(need(job.payload, "f0", "/payload"));
    SetDescriptor Z =
        SetDescriptor::from_json(need(job.payload, "Z", "/payload"), "/payload/Z");
    Rational eps = rat_from_json(need(job.payload, "eps", "/payload"),
                                 "/payload/eps");
    Region reg = job_region(job);
    const json& cj = need(job.payload, "conds", "/payload");
    if (!cj.is_array())
      throw validation_error("/payload/conds: expected an array");
    std::vector<Functional> conds;
    for (std::size_t i = 0; i < cj.size(); ++i)
      conds.push_back(Functional::from_json(
          cj[i], reg.box.dim, "/payload/conds/" + std::to_string(i)));
    json report;
    SmoothExpr f = solve_constraints(f0, Z, eps, conds, reg, &report);
    finish_expr(t, f, report, reg.box,
                std::to_string(conds.size()) + " conditions met");
    return 0;
  }

  if (cmd == "decay-wrap") {
    Timer t;
    reject_unknown(job.payload, {"Z", "terms", "envelopes"}, "/payload");
    CompletionPrefix P = parse_prefix(job.payload, "/payload");
    DecaySpec spec = DecaySpec::from_json(
        json{{"envelopes", need(job.payload, "envelopes", "/payload")}});
    Region reg = job_region(job);
    json report;
    SmoothExpr f = decay_wrap(P, spec, reg, &report);
    finish_expr(t, f, report, reg.box,
                "decay certified to order " +
                    std::to_string(spec.max_order()));
    return 0;
  }

  if (cmd == "verify") return run_verify(job, opt, art);

  if (cmd == "corpus") {
    forbid_region(job);
    if (!job.payload.empty())
      throw validation_error("corpus takes no payload");
    return run_corpus(job, art);
  }

  throw validation_error("unknown command \"" + cmd + "\"");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"constructive smooth realizations: job files in, expression "
               "and report JSON out"};
  CliOptions opt;
  app.add_option("command", opt.command,
                 "realize-borel | multi-borel | extend-strata | "
                 "realize-filtered | build-flat | check-filtration | "
                 "solve-constraints | decay-wrap | verify | corpus");
  app.add_option("--job", opt.job_path, "job file (JSON)");
  app.add_option("--out", opt.out_dir, "directory for artifacts")
      ->capture_default_str();
  app.add_option("--max-order", opt.max_order,
                 "cap on accepted derivative orders");
  app.add_option("--tol", opt.tol, "default tolerance for verify checks");
  app.add_option("--threads", opt.threads,
                 "worker threads for measurement sweeps");
  app.add_flag("--dump-grid", opt.dump_grid, "also write a sampled CSV grid");
  app.add_flag("--paper-examples", opt.paper_examples,
               "corpus: run the built-in example suites");
  app.add_option("--i-max", opt.i_max,
                 "check-filtration: deepest order locus to table");
  app.add_option("--j-max", opt.j_max, "check-filtration: highest level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (const char* env = std::getenv("BORELFORGE_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) {
      std::cerr << "error (validation): BORELFORGE_THREADS must be a positive "
                   "integer\n";
      return 1;
    }
    opt.threads = int(n);
  }
  if (opt.threads > 0) set_sweep_threads(opt.threads);

  std::string cmd = opt.command.empty() ? std::string("job") : opt.command;
  auto fail = [&](const char* kind, const std::string& what, int code) {
    std::cerr << "error (" << kind << "): " << what << "\n";
    json report{{"command", cmd}, {"error", what}, {"kind", kind}};
    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    if (!ec) {
      std::ofstream f(fs::path(opt.out_dir) / (cmd + "-report.json"));
      if (f) f << report.dump(2) << "\n";
    }
    return code;
  };

  try {
    if (!opt.command.empty() && !known_command(opt.command))
      throw validation_error("unknown command \"" + opt.command + "\"");
    JobFile job;
    if (!opt.job_path.empty()) job = JobFile::parse(load_json_file(opt.job_path));
    if (job.command.empty()) job.command = opt.command;
    else if (!opt.command.empty() && opt.command != job.command)
      throw validation_error("command line says \"" + opt.command +
                             "\" but the job file says \"" + job.command +
                             "\"");
    if (job.command.empty())
      throw validation_error(
          "no command: give one as an argument or in the job file");
    if (job.command != "corpus" && opt.job_path.empty())
      throw validation_error("--job <file> is required for " + job.command);
    cmd = job.command;
    return dispatch(job, opt);
  } catch (const validation_error& e) {
    return fail("validation", e.what(), 1);
  } catch (const construction_error& e) {
    return fail("construction", e.what(), 2);
  } catch (const verification_error& e) {
    return fail("verification", e.what(), 3);
  }
}

}  // namespace bf
