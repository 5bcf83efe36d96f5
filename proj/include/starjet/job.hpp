#pragma once

// Job execution for the batch driver.
//
// Takes a parsed JobConfig, builds the declared geometry lazily (chart,
// connection, flat structure, subsets, action, reduction setup), runs the
// declared tasks in order, and assembles a RunReport whose serialized form is
// byte-identical across runs of the same config.  Expensive flat structures
// are cached in memory by content key and, when a cache directory is given,
// on disk: the cache stores the correction one-form together with the full
// content key, so a hit reproduces exactly the state a cold build would
// produce.
//
// Timing is collected per task but deliberately kept out of the serialized
// report (it goes to stderr in the driver) so that reports stay byte-stable.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "starjet/chart.hpp"
#include "starjet/config.hpp"
#include "starjet/connection.hpp"
#include "starjet/equivalence.hpp"
#include "starjet/equivariance.hpp"
#include "starjet/errors.hpp"
#include "starjet/expr.hpp"
#include "starjet/fedosov.hpp"
#include "starjet/ideal.hpp"
#include "starjet/linalg.hpp"
#include "starjet/polynomial.hpp"
#include "starjet/weyl.hpp"
#include "starjet/whitney.hpp"

namespace starjet {

struct RunOptions {
  int order_override = -1;       // --order: expansion order K for every task
  int truncation_override = -1;  // --truncation: filtration order N for every task
  std::string cache_dir;         // --cache-dir: empty disables the disk cache
  bool no_symmetrize = false;    // --no-symmetrize: keep the raw Poisson correction
  std::string task_filter;       // subcommand: empty or "run" executes all tasks
  std::ostream* log = nullptr;   // cache/progress notes; never part of the report
};

struct CheckOutcome {
  std::string label;
  bool pass = true;
  std::string residual;
};

struct TaskReport {
  std::string kind;
  bool ok = true;
  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<CheckOutcome> checks;
  long long elapsed_ms = 0;  // informational only; not serialized

  void field(std::string key, std::string value) {
    fields.emplace_back(std::move(key), std::move(value));
  }
  void check(std::string label, bool pass, std::string residual = std::string()) {
    if (!pass) ok = false;
    checks.push_back(CheckOutcome{std::move(label), pass, std::move(residual)});
  }
  // Appends report entries, optionally skipping an already-reported prefix.
  void absorb(const CheckReport& rep, std::size_t skip = 0) {
    for (std::size_t i = skip; i < rep.entries.size(); ++i)
      check(rep.entries[i].label, rep.entries[i].pass, rep.entries[i].residual);
  }
};

struct RunReport {
  std::uint64_t seed = 0;
  std::vector<TaskReport> tasks;
  bool all_pass = true;
};

inline std::string precision_str(int prec) {
  return prec == kPrecExact ? std::string("exact") : std::to_string(prec);
}

namespace detail {

inline Error schema_at(int line, const std::string& msg) {
  return Error::schema("config error at line " + std::to_string(line) + ": " + msg);
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace detail

class JobRunner {
 public:
  JobRunner(const JobConfig& cfg, const RunOptions& opt) : cfg_(cfg), opt_(opt) {}

  RunReport run() {
    RunReport out;
    out.seed = cfg_.seed;
    std::vector<TaskConfig> selected;
    if (opt_.task_filter.empty() || opt_.task_filter == "run") {
      selected = cfg_.tasks;
    } else {
      for (const TaskConfig& t : cfg_.tasks)
        if (t.kind == opt_.task_filter) selected.push_back(t);
      if (selected.empty()) {
        TaskConfig t;
        t.kind = opt_.task_filter;
        selected.push_back(t);
      }
    }
    for (const TaskConfig& t : selected) {
      auto start = std::chrono::steady_clock::now();
      TaskReport r = dispatch(t);
      r.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
      if (!r.ok) out.all_pass = false;
      out.tasks.push_back(std::move(r));
    }
    return out;
  }

 private:
  const JobConfig& cfg_;
  const RunOptions& opt_;
  std::shared_ptr<const PoissonChart> chart_;
  std::optional<LeafConnection> conn_;
  std::shared_ptr<const PoissonChart> chart_down_;
  std::optional<LeafConnection> conn_down_;
  std::optional<WhitneySubset> subset_;
  std::optional<WhitneySubset> subset_down_;
  std::optional<GroupAction> action_;
  std::map<std::string, std::shared_ptr<const FedosovState>> states_;
  std::map<std::string, StarProduct> products_;

  void note(const std::string& msg) {
    if (opt_.log) *opt_.log << "# " << msg << "\n";
  }

  // ---- parsing against the declared variables -----------------------------

  static Polynomial parse_at(const PolyText& pt, const VarTablePtr& vars) {
    return parse_polynomial(pt.text, vars, pt.line, pt.col - 1);
  }

  static Scalar scalar_at(const PolyText& pt, const VarTablePtr& vars) {
    Polynomial p = parse_at(pt, vars);
    if (p.degree() > 0)
      throw detail::schema_at(pt.line, "'" + pt.text + "' must be a constant");
    return p.constant_term();
  }

  // ---- geometry builders --------------------------------------------------

  static std::shared_ptr<const PoissonChart> build_chart(const ChartConfig& c) {
    std::vector<std::string> names = c.leaf;
    names.insert(names.end(), c.transverse.begin(), c.transverse.end());
    std::vector<VarKind> kinds(c.leaf.size(), VarKind::Leaf);
    kinds.insert(kinds.end(), c.transverse.size(), VarKind::Transverse);
    VarTablePtr vars = make_vars(std::move(names), std::move(kinds));
    int r = static_cast<int>(c.leaf.size());
    int t = static_cast<int>(c.transverse.size());

    PolyMat pi = poly_mat_zero(vars, r, r);
    PolyMat omega = poly_mat_zero(vars, r, r);
    std::vector<std::vector<bool>> seen_pi(r, std::vector<bool>(r, false));
    std::vector<std::vector<bool>> seen_om(r, std::vector<bool>(r, false));
    for (const MatEntryText& m : c.pi) {
      if (seen_pi[m.i - 1][m.j - 1])
        throw detail::schema_at(m.line, "duplicate pi entry (" + std::to_string(m.i) + "," +
                                            std::to_string(m.j) + ")");
      seen_pi[m.i - 1][m.j - 1] = true;
      pi[m.i - 1][m.j - 1] = parse_at(m.expr, vars);
    }
    for (const MatEntryText& m : c.omega) {
      if (seen_om[m.i - 1][m.j - 1])
        throw detail::schema_at(m.line, "duplicate omega entry (" + std::to_string(m.i) + "," +
                                            std::to_string(m.j) + ")");
      seen_om[m.i - 1][m.j - 1] = true;
      omega[m.i - 1][m.j - 1] = parse_at(m.expr, vars);
    }

    std::shared_ptr<const PoissonChart> ch;
    if (!c.pi.empty() && !c.omega.empty())
      ch = std::make_shared<PoissonChart>(vars, r, t, c.degree_bound, pi, omega);
    else if (!c.pi.empty())
      ch = std::make_shared<PoissonChart>(chart_from_pi(vars, r, t, c.degree_bound, pi));
    else
      ch = std::make_shared<PoissonChart>(chart_from_omega(vars, r, t, c.degree_bound, omega));
    PoissonChart::Validation val = ch->validate();
    if (!val.ok()) throw Error::precondition("chart validation failed: " + val.detail);
    return ch;
  }

  LeafConnection build_connection(const PoissonChart& chart, const MetricConfig& metric,
                                  const GammaConfig& gamma) const {
    int r = chart.leaf_dim();
    const VarTablePtr& vars = chart.vars();
    if (gamma.present) {
      Christoffels ga = zero_christoffels(vars, r);
      for (const GammaEntryText& e : gamma.entries) {
        if (e.m < 1 || e.m > r || e.b < 1 || e.b > r || e.c < 1 || e.c > r)
          throw detail::schema_at(e.line, "christoffel index out of range (leaf dimension is " +
                                              std::to_string(r) + ")");
        ga[e.m - 1][e.b - 1][e.c - 1] = parse_at(e.expr, vars);
      }
      return LeafConnection{std::move(ga)};
    }
    if (metric.present) {
      PolyMat eta = poly_mat_zero(vars, r, r);
      std::vector<std::vector<bool>> seen(r, std::vector<bool>(r, false));
      for (const MatEntryText& m : metric.entries) {
        if (m.i < 1 || m.i > r || m.j < 1 || m.j > r)
          throw detail::schema_at(m.line, "metric index out of range (leaf dimension is " +
                                              std::to_string(r) + ")");
        if (seen[m.i - 1][m.j - 1])
          throw detail::schema_at(m.line, "duplicate metric entry (" + std::to_string(m.i) + "," +
                                              std::to_string(m.j) + ")");
        seen[m.i - 1][m.j - 1] = true;
        eta[m.i - 1][m.j - 1] = parse_at(m.expr, vars);
      }
      LeafMetric lm{std::move(eta)};
      return poisson_connection(lm, chart, metric.symmetrize && !opt_.no_symmetrize);
    }
    return LeafConnection{zero_christoffels(vars, r)};
  }

  WhitneySubset build_subset(const SubsetConfig& sc,
                             const std::shared_ptr<const PoissonChart>& chart) const {
    std::vector<Polynomial> gens;
    gens.reserve(sc.generators.size());
    for (const PolyText& g : sc.generators) gens.push_back(parse_at(g, chart->vars()));
    return make_whitney_subset(chart, std::move(gens), sc.order);
  }

  const std::shared_ptr<const PoissonChart>& main_chart() {
    if (!chart_) chart_ = build_chart(cfg_.chart);
    return chart_;
  }

  const LeafConnection& main_conn() {
    if (!conn_) conn_ = build_connection(*main_chart(), cfg_.metric, cfg_.gamma);
    return *conn_;
  }

  const std::shared_ptr<const PoissonChart>& down_chart() {
    if (!chart_down_) chart_down_ = build_chart(cfg_.reduction.chart);
    return chart_down_;
  }

  const LeafConnection& down_conn() {
    if (!conn_down_)
      conn_down_ = build_connection(*down_chart(), cfg_.reduction.metric, cfg_.reduction.gamma);
    return *conn_down_;
  }

  const WhitneySubset& main_subset() {
    if (!subset_) subset_ = build_subset(cfg_.subset, main_chart());
    return *subset_;
  }

  const WhitneySubset& down_subset() {
    if (!subset_down_) subset_down_ = build_subset(cfg_.reduction.subset, down_chart());
    return *subset_down_;
  }

  const WhitneySubset* subset_ptr() { return cfg_.subset.present ? &main_subset() : nullptr; }

  Matrix build_matrix(const std::vector<PolyText>& entries, int n, int line) {
    if (static_cast<int>(entries.size()) != n * n)
      throw detail::schema_at(line, "matrix needs " + std::to_string(n * n) +
                                        " entries (chart dimension is " + std::to_string(n) + ")");
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m.at(i, j) = scalar_at(entries[i * n + j], main_chart()->vars());
    return m;
  }

  const GroupAction& group_action() {
    if (!action_) {
      if (!cfg_.action.present) throw Error::schema("this task needs an action block");
      int n = main_chart()->dim();
      GroupAction ga;
      for (const auto& el : cfg_.action.elements)
        ga.elements.push_back(build_matrix(el, n, cfg_.action.line));
      if (!cfg_.action.generator.empty())
        ga.generator = build_matrix(cfg_.action.generator, n, cfg_.action.line);
      for (const PolyText& inv : cfg_.action.invariants)
        ga.invariant_generators.push_back(parse_at(inv, main_chart()->vars()));
      action_ = std::move(ga);
    }
    return *action_;
  }

  ReductionSetup reduction_setup() {
    if (!cfg_.reduction.present) throw Error::schema("this task needs a reduction block");
    if (!cfg_.subset.present)
      throw Error::schema("reduction needs a top-level subset block (the upstairs zero set)");
    if (!cfg_.reduction.subset.present)
      throw detail::schema_at(cfg_.reduction.line, "reduction block needs a subset block");
    ReductionSetup su;
    su.chart_m = main_chart();
    su.chart_n = down_chart();
    su.subset_x = main_subset();
    su.subset_y = down_subset();
    if (static_cast<int>(cfg_.reduction.projection.size()) != su.chart_n->dim())
      throw detail::schema_at(cfg_.reduction.line,
                              "reduction needs one projection component per downstairs "
                              "coordinate (" +
                                  std::to_string(su.chart_n->dim()) + ")");
    std::vector<Polynomial> comps;
    comps.reserve(cfg_.reduction.projection.size());
    for (const PolyText& p : cfg_.reduction.projection)
      comps.push_back(parse_at(p, su.chart_m->vars()));
    su.projection = make_poly_map(su.chart_m, su.chart_n, std::move(comps));
    if (cfg_.action.present && !cfg_.action.generator.empty())
      su.generator = build_matrix(cfg_.action.generator, su.chart_m->dim(), cfg_.action.line);
    return su;
  }

  // ---- flat-structure cache ----------------------------------------------

  static std::string state_key(const PoissonChart& chart, const LeafConnection& conn, int n) {
    std::ostringstream os;
    os << "v1|vars";
    for (int i = 0; i < chart.vars()->size(); ++i)
      os << ' ' << chart.vars()->names[i] << ':'
         << (chart.vars()->kinds[i] == VarKind::Leaf ? 'l' : 't');
    os << "|bound " << chart.degree_bound() << "|pi";
    int r = chart.leaf_dim();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        os << ' ' << chart.pi()[i][j].str() << '@' << chart.pi()[i][j].precision();
    os << "|omega";
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        os << ' ' << chart.omega()[i][j].str() << '@' << chart.omega()[i][j].precision();
    os << "|gamma";
    for (int m = 0; m < r; ++m)
      for (int b = 0; b < r; ++b)
        for (int c = 0; c < r; ++c)
          os << ' ' << conn.christoffels[m][b][c].str() << '@'
             << conn.christoffels[m][b][c].precision();
    os << "|n " << n;
    return os.str();
  }

  std::filesystem::path cache_path(const std::string& key) const {
    return std::filesystem::path(opt_.cache_dir) /
           ("starjet-" + detail::hex64(detail::fnv1a64(key)) + ".state");
  }

  void save_state(const std::string& key, const FedosovState& st) const {
    if (opt_.cache_dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(opt_.cache_dir, ec);
    std::filesystem::path path = cache_path(key);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) return;
      out << "starjet-state 1\n";
      out << "key " << key << "\n";
      out << "truncation " << st.truncation << "\n";
      out << "floor " << precision_str(st.r.precision()) << "\n";
      out << "terms " << st.r.terms().size() << "\n";
      for (const auto& [k, c] : st.r.terms())
        out << "t " << k.form << ' ' << k.hbar << ' ' << k.fiber << ' '
            << precision_str(c.precision()) << ' ' << c.str() << "\n";
      out << "end\n";
      if (!out) return;
    }
    std::filesystem::rename(tmp, path, ec);
  }

  static int parse_precision_token(const std::string& tok) {
    if (tok == "exact") return kPrecExact;
    return static_cast<int>(std::stol(tok));
  }

  // Attempts to reload a cached correction one-form; returns nullptr when no
  // usable entry exists.  The stored key must match the freshly computed
  // content key character for character.
  std::shared_ptr<const FedosovState> load_state(
      const std::string& key, const std::shared_ptr<const PoissonChart>& chart,
      const LeafConnection& conn, int n) const {
    if (opt_.cache_dir.empty()) return nullptr;
    try {
      return load_state_impl(key, chart, conn, n);
    } catch (...) {
      return nullptr;  // unreadable cache entries are treated as misses
    }
  }

  std::shared_ptr<const FedosovState> load_state_impl(
      const std::string& key, const std::shared_ptr<const PoissonChart>& chart,
      const LeafConnection& conn, int n) const {
    std::ifstream in(cache_path(key));
    if (!in) return nullptr;
    std::string line;
    if (!std::getline(in, line) || line != "starjet-state 1") return nullptr;
    if (!std::getline(in, line) || line.rfind("key ", 0) != 0 || line.substr(4) != key)
      return nullptr;
    if (!std::getline(in, line) || line.rfind("truncation ", 0) != 0) return nullptr;
    if (std::stol(line.substr(11)) != n) return nullptr;
    if (!std::getline(in, line) || line.rfind("floor ", 0) != 0) return nullptr;
    int floor_prec = parse_precision_token(line.substr(6));
    if (!std::getline(in, line) || line.rfind("terms ", 0) != 0) return nullptr;
    long count = std::stol(line.substr(6));

    WeylElement r = WeylElement::zero(chart->vars());
    for (long i = 0; i < count; ++i) {
      if (!std::getline(in, line) || line.rfind("t ", 0) != 0) return nullptr;
      std::istringstream ls(line.substr(2));
      std::uint32_t form = 0;
      int hbar = 0;
      std::uint64_t fiber = 0;
      std::string prec_tok;
      if (!(ls >> form >> hbar >> fiber >> prec_tok)) return nullptr;
      std::string poly_text;
      std::getline(ls, poly_text);
      std::size_t start = poly_text.find_first_not_of(' ');
      if (start == std::string::npos) return nullptr;
      poly_text.erase(0, start);
      Polynomial c = parse_polynomial(poly_text, chart->vars());
      int prec = parse_precision_token(prec_tok);
      if (prec != kPrecExact) c = c.with_precision(prec);
      r.set(WeylKey{fiber, hbar, form}, std::move(c));
    }
    if (!std::getline(in, line) || line != "end") return nullptr;
    r.fold_precision(floor_prec);

    auto st = std::make_shared<FedosovState>();
    st->chart = chart;
    st->connection = conn;
    st->context = std::make_shared<WeylContext>(chart);
    st->r = r.with_truncation(n);
    st->truncation = n;
    st->curvature_offset = WeylElement::zero(chart->vars());
    st->lifted_curvature = lift_curvature(conn, *chart);
    return st;
  }

  StarProduct& product_for(const std::shared_ptr<const PoissonChart>& chart,
                           const LeafConnection& conn, int n) {
    std::string key = state_key(*chart, conn, n);
    auto it = products_.find(key);
    if (it != products_.end()) return it->second;
    std::shared_ptr<const FedosovState> st;
    auto sit = states_.find(key);
    if (sit != states_.end()) {
      st = sit->second;
    } else if ((st = load_state(key, chart, conn, n))) {
      note("flat structure loaded from cache (N=" + std::to_string(n) + ")");
      states_.emplace(key, st);
    } else {
      st = std::make_shared<FedosovState>(build_fedosov(chart, conn, n));
      note("flat structure built (N=" + std::to_string(n) + ")");
      states_.emplace(key, st);
      save_state(key, *st);
    }
    return products_.try_emplace(std::move(key), st).first->second;
  }

  StarProduct& main_product(int n) { return product_for(main_chart(), main_conn(), n); }
  StarProduct& down_product(int n) { return product_for(down_chart(), down_conn(), n); }

  // ---- effective task parameters ------------------------------------------

  int eff_order(const TaskConfig& t) const {
    if (opt_.order_override >= 0) return opt_.order_override;
    if (t.order >= 0) return t.order;
    return 2;
  }

  int eff_trunc(const TaskConfig& t, int fallback) const {
    if (opt_.truncation_override >= 0) return opt_.truncation_override;
    if (t.truncation >= 0) return t.truncation;
    return fallback;
  }

  // ---- task bodies --------------------------------------------------------

  TaskReport dispatch(const TaskConfig& t) {
    if (t.kind == "validate") return run_validate(t);
    if (t.kind == "connection") return run_connection(t);
    if (t.kind == "fedosov") return run_fedosov(t);
    if (t.kind == "star") return run_star(t);
    if (t.kind == "whitney-star") return run_whitney_star(t);
    if (t.kind == "invariance") return run_invariance(t);
    if (t.kind == "reduce-check") return run_reduce_check(t);
    if (t.kind == "equiv") return run_equiv(t);
    throw Error::internal("unhandled task kind '" + t.kind + "'");
  }

  void emit_chart_fields(TaskReport& rep, const PoissonChart& chart, const std::string& prefix) {
    std::string leaf, trans;
    for (int i = 0; i < chart.vars()->size(); ++i) {
      std::string& dst = chart.vars()->kinds[i] == VarKind::Leaf ? leaf : trans;
      if (!dst.empty()) dst += ' ';
      dst += chart.vars()->names[i];
    }
    rep.field(prefix + "leaf", leaf);
    if (!trans.empty()) rep.field(prefix + "transverse", trans);
    rep.field(prefix + "degree_bound", std::to_string(chart.degree_bound()));
    int r = chart.leaf_dim();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        if (!chart.pi()[i][j].is_zero())
          rep.field(prefix + "pi_" + std::to_string(i + 1) + "_" + std::to_string(j + 1),
                    chart.pi()[i][j].str());
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        if (!chart.omega()[i][j].is_zero())
          rep.field(prefix + "omega_" + std::to_string(i + 1) + "_" + std::to_string(j + 1),
                    chart.omega()[i][j].str());
  }

  TaskReport run_validate(const TaskConfig&) {
    TaskReport rep;
    rep.kind = "validate";
    const PoissonChart& chart = *main_chart();
    emit_chart_fields(rep, chart, "");
    PoissonChart::Validation val = chart.validate();
    rep.field("inverse_precision", precision_str(val.inverse_precision));
    rep.check("bivector antisymmetric", val.antisymmetric, val.antisymmetric ? "" : val.detail);
    rep.check("bivector and two-form inverse", val.inverse_pair,
              val.inverse_pair ? "" : val.detail);
    rep.check("leafwise jacobi identity", val.jacobi, val.jacobi ? "" : val.detail);
    rep.check("leaf block nondegenerate", val.nondegenerate, val.nondegenerate ? "" : val.detail);

    if (cfg_.metric.present || cfg_.gamma.present) {
      ConnectionReport cr = check_poisson_connection(main_conn(), chart);
      rep.field("connection_precision", precision_str(cr.residual_precision));
      rep.check("two-form parallel", cr.omega_parallel, cr.omega_parallel ? "" : cr.detail);
      rep.check("connection torsion-free", cr.torsion_free, cr.torsion_free ? "" : cr.detail);
    }
    if (cfg_.subset.present) {
      const WhitneySubset& s = main_subset();
      rep.field("subset_order", std::to_string(cfg_.subset.order));
      std::string gens;
      for (const Polynomial& g : s.generators) {
        if (!gens.empty()) gens += "; ";
        gens += g.str();
      }
      rep.field("subset_generators", gens);
    }
    if (cfg_.action.present) {
      CheckReport ar = validate_group_action(group_action(), chart, &main_conn(), subset_ptr());
      rep.field("action_precision", precision_str(ar.precision));
      rep.absorb(ar);
    }
    if (cfg_.reduction.present) {
      ReductionSetup su = reduction_setup();
      CheckReport rr = validate_reduction(su);
      rep.absorb(rr);
    }
    return rep;
  }

  TaskReport run_connection(const TaskConfig&) {
    TaskReport rep;
    rep.kind = "connection";
    const PoissonChart& chart = *main_chart();
    const LeafConnection& conn = main_conn();
    int r = chart.leaf_dim();
    int nonzero = 0;
    for (int m = 0; m < r; ++m)
      for (int b = 0; b < r; ++b)
        for (int c = 0; c < r; ++c)
          if (!conn.christoffels[m][b][c].is_zero()) ++nonzero;
    rep.field("nonzero_christoffels", std::to_string(nonzero));
    for (int m = 0; m < r; ++m)
      for (int b = 0; b < r; ++b)
        for (int c = 0; c < r; ++c)
          if (!conn.christoffels[m][b][c].is_zero())
            rep.field("gamma_" + std::to_string(m + 1) + "_" + std::to_string(b + 1) + "_" +
                          std::to_string(c + 1),
                      conn.christoffels[m][b][c].str());
    ConnectionReport cr = check_poisson_connection(conn, chart);
    rep.field("precision", precision_str(cr.residual_precision));
    rep.check("two-form parallel", cr.omega_parallel, cr.omega_parallel ? "" : cr.detail);
    rep.check("connection torsion-free", cr.torsion_free, cr.torsion_free ? "" : cr.detail);
    return rep;
  }

  TaskReport run_fedosov(const TaskConfig& t) {
    TaskReport rep;
    rep.kind = "fedosov";
    int n = eff_trunc(t, 6);
    StarProduct& sp = main_product(n);
    const FedosovState& st = sp.state();
    rep.field("truncation", std::to_string(st.truncation));
    rep.field("correction_terms", std::to_string(st.r.num_terms()));
    if (!st.r.is_zero())
      rep.field("correction_min_weight", std::to_string(st.r.min_fedosov_degree()));
    rep.field("correction", st.r.str());
    rep.field("precision", precision_str(st.r.precision()));
    rep.check("correction normalized", delta_star(st.r).is_zero());
    return rep;
  }

  TaskReport run_star(const TaskConfig& t) {
    if (!t.has_f || !t.has_g) throw Error::schema("star task needs 'f' and 'g' entries");
    TaskReport rep;
    rep.kind = "star";
    Polynomial f = parse_at(t.f, main_chart()->vars());
    Polynomial g = parse_at(t.g, main_chart()->vars());
    int k = eff_order(t);
    int n = eff_trunc(t, std::max(2, 2 * k + f.degree() + g.degree()));
    StarProduct& sp = main_product(n);
    std::vector<Polynomial> c = sp.star(f, g, k);
    rep.field("f", f.str());
    rep.field("g", g.str());
    rep.field("order", std::to_string(k));
    rep.field("truncation", std::to_string(n));
    int prec = kPrecExact;
    for (int i = 0; i <= k; ++i) {
      rep.field("c" + std::to_string(i), c[i].str());
      prec = std::min(prec, c[i].precision());
    }
    rep.field("precision", precision_str(prec));
    CommutatorReport cm = star_commutator_check(sp, f, g);
    rep.check("commutator matches the bracket at first order", cm.pass,
              cm.pass ? "" : cm.residual.str());
    return rep;
  }

  TaskReport run_whitney_star(const TaskConfig& t) {
    if (!cfg_.subset.present) throw Error::schema("whitney-star task needs a subset block");
    if (!t.has_f || !t.has_g) throw Error::schema("whitney-star task needs 'f' and 'g' entries");
    TaskReport rep;
    rep.kind = "whitney-star";
    const WhitneySubset& s = main_subset();
    Polynomial f = parse_at(t.f, main_chart()->vars());
    Polynomial g = parse_at(t.g, main_chart()->vars());
    int k = eff_order(t);
    int n = eff_trunc(t, std::max(2, 2 * k + f.degree() + g.degree()));
    JetClass jf = jet_map(s, f);
    JetClass jg = jet_map(s, g);
    GradedJetClass out = whitney_star(s, main_product(n), jf, jg, k);
    rep.field("f", f.str());
    rep.field("g", g.str());
    rep.field("f_class", jf.rep.str());
    rep.field("g_class", jg.rep.str());
    rep.field("order", std::to_string(k));
    rep.field("truncation", std::to_string(n));
    for (int i = 0; i <= k && i < static_cast<int>(out.c.size()); ++i)
      rep.field("c" + std::to_string(i), out.c[i].str());
    rep.field("precision", precision_str(out.precision));
    return rep;
  }

  TaskReport run_invariance(const TaskConfig& t) {
    TaskReport rep;
    rep.kind = "invariance";
    int k = eff_order(t);
    int pairs = t.pairs >= 1 ? t.pairs : 10;
    int n = eff_trunc(t, std::max(2, 2 * k));
    rep.field("order", std::to_string(k));
    rep.field("pairs", std::to_string(pairs));
    rep.field("truncation", std::to_string(n));
    CheckReport cr =
        invariance_check(group_action(), main_product(n), subset_ptr(), k, pairs, cfg_.seed);
    rep.field("precision", precision_str(cr.precision));
    rep.absorb(cr);
    return rep;
  }

  TaskReport run_reduce_check(const TaskConfig& t) {
    if (!cfg_.reduction.present) throw Error::schema("reduce-check task needs a reduction block");
    if (t.battery.empty())
      throw Error::schema("reduce-check task needs at least one pair block");
    TaskReport rep;
    rep.kind = "reduce-check";
    ReductionSetup su = reduction_setup();
    int k = eff_order(t);
    int n = eff_trunc(t, std::max(2, 2 * k));
    int samples = t.samples >= 1 ? t.samples : 5;
    rep.field("order", std::to_string(k));
    rep.field("truncation", std::to_string(n));
    rep.field("samples", std::to_string(samples));

    CheckReport pc = projection_check(su, samples, cfg_.seed);
    rep.absorb(pc);
    if (!pc.pass) return rep;

    std::vector<std::pair<Polynomial, Polynomial>> battery;
    battery.reserve(t.battery.size());
    for (const auto& [ft, gt] : t.battery)
      battery.emplace_back(parse_at(ft, su.chart_n->vars()), parse_at(gt, su.chart_n->vars()));

    StarProduct& sp_m = main_product(n);
    StarProduct& sp_n = down_product(n);
    std::size_t validation_prefix = validate_reduction(su).entries.size();
    CheckReport rc = reduction_compare(su, sp_m, sp_n, k, battery);
    rep.field("precision", precision_str(rc.precision));

    for (std::size_t p = 0; p < battery.size(); ++p) {
      const auto& [f, g] = battery[p];
      std::string tag = "pair" + std::to_string(p + 1) + "_";
      rep.field(tag + "f", f.str());
      rep.field(tag + "g", g.str());
      StarCoefficients down = sp_n.coefficients(f, g, k);
      StarCoefficients up =
          sp_m.coefficients(pullback(su.projection, f), pullback(su.projection, g), k);
      for (int i = 0; i <= k; ++i) {
        rep.field(tag + "down_c" + std::to_string(i), down.c[i].str());
        rep.field(tag + "up_c" + std::to_string(i), up.c[i].str());
      }
    }
    rep.absorb(rc, validation_prefix);
    return rep;
  }

  TaskReport run_equiv(const TaskConfig& t) {
    if (!t.metric_b.present && !t.gamma_b.present)
      throw Error::schema(
          "equiv task needs a metric or connection block for the second product");
    TaskReport rep;
    rep.kind = "equiv";
    int k = eff_order(t);
    int n = eff_trunc(t, std::max(4, 2 * k + 2));
    StarProduct& sp_a = main_product(n);
    LeafConnection conn_b = build_connection(*main_chart(), t.metric_b, t.gamma_b);
    StarProduct& sp_b = product_for(main_chart(), conn_b, n);

    EquivalenceOptions eo;
    if (t.jet_order >= 1) eo.jet_order = t.jet_order;
    eo.coeff_degree = t.coeff_degree;
    eo.derivative_cap = t.derivative_cap;
    eo.seed = cfg_.seed;

    rep.field("order", std::to_string(k));
    rep.field("truncation", std::to_string(n));
    rep.field("jet_order", std::to_string(eo.jet_order));
    rep.field("coeff_degree",
              std::to_string(eo.coeff_degree >= 0 ? eo.coeff_degree : eo.jet_order));

    EquivalenceResult res = equivalence_solve(sp_a, sp_b, k, eo);
    rep.field("success", res.success ? "yes" : "no");
    if (res.success) {
      for (std::size_t i = 0; i < res.operators.size(); ++i)
        rep.field("D" + std::to_string(i + 1), res.operators[i].str());
    } else {
      rep.field("failed_order", std::to_string(res.failed_order));
      if (!res.witness.empty()) rep.field("witness", res.witness);
    }
    rep.field("precision", precision_str(res.precision));
    rep.check("equivalence found", res.success, res.success ? "" : res.detail);
    if (res.success) rep.check("held-out validation", res.held_out_pass);
    return rep;
  }
};

inline RunReport run_job(const JobConfig& cfg, const RunOptions& opt) {
  JobRunner runner(cfg, opt);
  return runner.run();
}

// Serializes a report in the stable line-oriented grammar.  Field keys never
// contain spaces, so `key value` lines are unambiguous; check lines carry the
// outcome before the label and indent a residual line under failures.
inline std::string report_text(const RunReport& r) {
  std::ostringstream os;
  os << "starjet report\n";
  os << "seed " << r.seed << "\n";
  for (const TaskReport& t : r.tasks) {
    os << "\ntask " << t.kind << "\n";
    os << "  status " << (t.ok ? "ok" : "checks-failed") << "\n";
    for (const auto& [k, v] : t.fields) os << "  " << k << " " << v << "\n";
    for (const CheckOutcome& c : t.checks) {
      os << "  check " << (c.pass ? "ok" : "FAIL") << " " << c.label << "\n";
      if (!c.pass && !c.residual.empty()) os << "    residual " << c.residual << "\n";
    }
  }
  os << "\nresult " << (r.all_pass ? "pass" : "fail") << "\n";
  return os.str();
}

}  // namespace starjet
