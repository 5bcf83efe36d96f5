#pragma once

// Job configuration for the batch driver.
//
// A job file is line-oriented structured text.  Each line is one of:
//
//   # comment                      (also allowed after content on any line)
//   key value...                   (an entry; the value runs to end of line)
//   key {                          (open a named block)
//   key argument {                 (open a named block with one argument)
//   }                              (close the innermost block)
//
// Keys are identifiers ([A-Za-z_][A-Za-z0-9_-]*).  Blocks nest and may
// repeat.  Polynomial-valued entries use the same expression grammar as the
// rest of the project and keep their source position so parse errors point
// at the exact line and column of the job file.
//
// This header parses the raw block tree and extracts the typed JobConfig.
// All diagnostics raised here are schema errors; nothing geometric is built
// yet (that happens in job.hpp against the declared chart).

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "starjet/errors.hpp"

namespace starjet {

// ---------------------------------------------------------------------------
// Raw block tree

struct ConfigEntry {
  std::string key;
  std::string value;  // trimmed; may be empty
  int line = 0;       // 1-based
  int value_col = 0;  // 1-based column of the first value character
};

struct ConfigBlock {
  std::string key;  // empty for the document root
  std::string arg;  // optional block argument (e.g. the task kind)
  int line = 0;
  std::vector<ConfigEntry> entries;
  std::vector<ConfigBlock> blocks;
};

namespace detail {

inline bool is_key_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

inline Error config_error(int line, const std::string& msg) {
  return Error::schema("config error at line " + std::to_string(line) + ": " + msg);
}

}  // namespace detail

// Parses the raw document into a block tree.  Throws schema errors for
// malformed lines, unbalanced braces, or stray text.
inline ConfigBlock parse_config_text(const std::string& text) {
  ConfigBlock root;
  std::vector<ConfigBlock*> stack = {&root};
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (pos > text.size() && line.empty()) break;

    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    std::size_t end = line.find_last_not_of(" \t\r");
    std::string body = line.substr(begin, end - begin + 1);

    if (body == "}") {
      if (stack.size() == 1) throw detail::config_error(line_no, "unmatched '}'");
      stack.pop_back();
      continue;
    }
    if (!detail::is_key_start(body[0]))
      throw detail::config_error(line_no, "expected a key, found '" + body.substr(0, 1) + "'");
    std::size_t klen = 1;
    while (klen < body.size() && detail::is_key_char(body[klen])) ++klen;
    std::string key = body.substr(0, klen);
    std::size_t vpos = body.find_first_not_of(" \t", klen);
    std::string rest = vpos == std::string::npos ? std::string() : body.substr(vpos);

    if (!rest.empty() && rest.back() == '{') {
      std::string arg = rest.substr(0, rest.size() - 1);
      std::size_t aend = arg.find_last_not_of(" \t");
      arg = aend == std::string::npos ? std::string() : arg.substr(0, aend + 1);
      if (!arg.empty()) {
        for (char c : arg)
          if (!detail::is_key_char(c))
            throw detail::config_error(line_no, "block argument '" + arg + "' is not a word");
      }
      ConfigBlock child;
      child.key = std::move(key);
      child.arg = std::move(arg);
      child.line = line_no;
      stack.back()->blocks.push_back(std::move(child));
      stack.push_back(&stack.back()->blocks.back());
      continue;
    }

    ConfigEntry e;
    e.key = std::move(key);
    e.value = std::move(rest);
    e.line = line_no;
    e.value_col = vpos == std::string::npos ? static_cast<int>(begin + klen) + 1
                                            : static_cast<int>(begin + vpos) + 1;
    stack.back()->entries.push_back(std::move(e));
  }
  if (stack.size() != 1)
    throw detail::config_error(stack.back()->line,
                               "block '" + stack.back()->key + "' is never closed");
  return root;
}

// ---------------------------------------------------------------------------
// Typed job description

// A polynomial-valued field: raw expression text plus its source position,
// parsed later against the declared chart variables.
struct PolyText {
  std::string text;
  int line = 0;
  int col = 0;  // 1-based column of the first character
};

// One matrix entry `i j expression` with 1-based indices.
struct MatEntryText {
  int i = 0;
  int j = 0;
  PolyText expr;
  int line = 0;
};

// One Christoffel entry `m b c expression` with 1-based indices.
struct GammaEntryText {
  int m = 0;
  int b = 0;
  int c = 0;
  PolyText expr;
  int line = 0;
};

struct ChartConfig {
  std::vector<std::string> leaf;
  std::vector<std::string> transverse;
  int degree_bound = -1;
  std::vector<MatEntryText> pi;
  std::vector<MatEntryText> omega;
  int line = 0;
};

struct MetricConfig {
  bool present = false;
  std::vector<MatEntryText> entries;
  bool symmetrize = true;
  int line = 0;
};

struct GammaConfig {
  bool present = false;
  std::vector<GammaEntryText> entries;
  int line = 0;
};

struct SubsetConfig {
  bool present = false;
  std::vector<PolyText> generators;
  int order = 0;
  int line = 0;
};

struct ActionConfig {
  bool present = false;
  std::vector<std::vector<PolyText>> elements;  // each: dim^2 scalars, row-major
  std::vector<PolyText> generator;              // empty when absent
  std::vector<PolyText> invariants;
  int line = 0;
};

struct ReductionConfig {
  bool present = false;
  ChartConfig chart;        // downstairs chart
  MetricConfig metric;      // optional downstairs metric
  GammaConfig gamma;        // optional downstairs explicit Christoffels
  SubsetConfig subset;      // downstairs subset
  std::vector<PolyText> projection;  // one component per downstairs coordinate,
                                     // written in upstairs variables
  int line = 0;
};

struct TaskConfig {
  std::string kind;
  int line = 0;
  int order = -1;       // expansion order K
  int truncation = -1;  // filtration order N
  int pairs = -1;       // invariance battery size
  int samples = -1;     // projection sample count
  int jet_order = -1;
  int coeff_degree = -1;
  int derivative_cap = -1;
  bool has_f = false, has_g = false;
  PolyText f, g;
  std::vector<std::pair<PolyText, PolyText>> battery;  // reduce-check pairs
  MetricConfig metric_b;  // equivalence B-side metric
  GammaConfig gamma_b;    // equivalence B-side explicit Christoffels
};

struct JobConfig {
  std::uint64_t seed = 0;
  bool has_chart = false;
  ChartConfig chart;
  MetricConfig metric;
  GammaConfig gamma;
  SubsetConfig subset;
  ActionConfig action;
  ReductionConfig reduction;
  std::vector<TaskConfig> tasks;
};

namespace detail {

inline void reject_arg(const ConfigBlock& b) {
  if (!b.arg.empty())
    throw config_error(b.line, "block '" + b.key + "' does not take an argument");
}

inline long long parse_int_text(const std::string& text, int line, const std::string& what) {
  if (text.empty()) throw config_error(line, what + " needs an integer value");
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(text.c_str(), &end, 10);
  if (errno != 0 || end == nullptr || *end != '\0')
    throw config_error(line, what + " is not an integer: '" + text + "'");
  return v;
}

inline int entry_int(const ConfigEntry& e) {
  long long v = parse_int_text(e.value, e.line, "'" + e.key + "'");
  return static_cast<int>(v);
}

inline std::uint64_t entry_uint(const ConfigEntry& e) {
  long long v = parse_int_text(e.value, e.line, "'" + e.key + "'");
  if (v < 0) throw config_error(e.line, "'" + e.key + "' must be non-negative");
  return static_cast<std::uint64_t>(v);
}

inline PolyText entry_poly(const ConfigEntry& e) {
  if (e.value.empty()) throw config_error(e.line, "'" + e.key + "' needs an expression");
  return PolyText{e.value, e.line, e.value_col};
}

// Splits a value into whitespace-separated tokens with their 1-based columns.
inline std::vector<std::pair<std::string, int>> split_value(const ConfigEntry& e) {
  std::vector<std::pair<std::string, int>> out;
  const std::string& v = e.value;
  std::size_t i = 0;
  while (i < v.size()) {
    while (i < v.size() && (v[i] == ' ' || v[i] == '\t')) ++i;
    if (i >= v.size()) break;
    std::size_t j = i;
    while (j < v.size() && v[j] != ' ' && v[j] != '\t') ++j;
    out.emplace_back(v.substr(i, j - i), e.value_col + static_cast<int>(i));
    i = j;
  }
  return out;
}

inline std::vector<std::string> entry_names(const ConfigEntry& e) {
  std::vector<std::string> out;
  for (const auto& [tok, col] : split_value(e)) {
    if (!is_key_start(tok[0]))
      throw config_error(e.line, "'" + tok + "' is not a variable name");
    for (char c : tok)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
        throw config_error(e.line, "'" + tok + "' is not a variable name");
    out.push_back(tok);
  }
  if (out.empty()) throw config_error(e.line, "'" + e.key + "' needs at least one name");
  return out;
}

// Reads `count` leading integer tokens, returning them plus the remainder of
// the value as a positioned expression.
inline std::pair<std::vector<int>, PolyText> entry_ints_then_expr(const ConfigEntry& e,
                                                                  int count) {
  const std::string& v = e.value;
  std::vector<int> idx;
  std::size_t i = 0;
  for (int n = 0; n < count; ++n) {
    while (i < v.size() && (v[i] == ' ' || v[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < v.size() && v[j] != ' ' && v[j] != '\t') ++j;
    if (j == i)
      throw config_error(e.line, "'" + e.key + "' needs " + std::to_string(count) +
                                     " indices followed by an expression");
    idx.push_back(static_cast<int>(
        parse_int_text(v.substr(i, j - i), e.line, "index in '" + e.key + "'")));
    i = j;
  }
  while (i < v.size() && (v[i] == ' ' || v[i] == '\t')) ++i;
  if (i >= v.size())
    throw config_error(e.line, "'" + e.key + "' is missing its expression");
  return {std::move(idx), PolyText{v.substr(i), e.line, e.value_col + static_cast<int>(i)}};
}

inline bool entry_on_off(const ConfigEntry& e) {
  if (e.value == "on") return true;
  if (e.value == "off") return false;
  throw config_error(e.line, "'" + e.key + "' must be 'on' or 'off'");
}

inline ChartConfig read_chart_block(const ConfigBlock& b) {
  reject_arg(b);
  ChartConfig c;
  c.line = b.line;
  for (const ConfigEntry& e : b.entries) {
    if (e.key == "leaf") {
      if (!c.leaf.empty()) throw config_error(e.line, "duplicate 'leaf' entry");
      c.leaf = entry_names(e);
    } else if (e.key == "transverse") {
      if (!c.transverse.empty()) throw config_error(e.line, "duplicate 'transverse' entry");
      c.transverse = entry_names(e);
    } else if (e.key == "degree_bound") {
      c.degree_bound = entry_int(e);
      if (c.degree_bound < 1) throw config_error(e.line, "'degree_bound' must be >= 1");
    } else if (e.key == "pi" || e.key == "omega") {
      auto [idx, expr] = entry_ints_then_expr(e, 2);
      MatEntryText m{idx[0], idx[1], std::move(expr), e.line};
      (e.key == "pi" ? c.pi : c.omega).push_back(std::move(m));
    } else {
      throw config_error(e.line, "unknown key '" + e.key + "' in chart block");
    }
  }
  for (const ConfigBlock& child : b.blocks)
    throw config_error(child.line, "unknown block '" + child.key + "' in chart block");
  if (c.leaf.empty()) throw config_error(b.line, "chart block needs a 'leaf' entry");
  if (c.degree_bound < 0) throw config_error(b.line, "chart block needs 'degree_bound'");
  if (c.pi.empty() && c.omega.empty())
    throw config_error(b.line, "chart block needs 'pi' or 'omega' entries");
  int r = static_cast<int>(c.leaf.size());
  for (const auto& list : {c.pi, c.omega})
    for (const MatEntryText& m : list)
      if (m.i < 1 || m.i > r || m.j < 1 || m.j > r)
        throw config_error(m.line, "matrix index out of range (leaf dimension is " +
                                       std::to_string(r) + ")");
  std::vector<std::string> all = c.leaf;
  all.insert(all.end(), c.transverse.begin(), c.transverse.end());
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j)
      if (all[i] == all[j])
        throw config_error(b.line, "duplicate variable name '" + all[i] + "'");
  return c;
}

inline MetricConfig read_metric_block(const ConfigBlock& b) {
  reject_arg(b);
  MetricConfig m;
  m.present = true;
  m.line = b.line;
  for (const ConfigEntry& e : b.entries) {
    if (e.key == "entry") {
      auto [idx, expr] = entry_ints_then_expr(e, 2);
      m.entries.push_back(MatEntryText{idx[0], idx[1], std::move(expr), e.line});
    } else if (e.key == "symmetrize") {
      m.symmetrize = entry_on_off(e);
    } else {
      throw config_error(e.line, "unknown key '" + e.key + "' in metric block");
    }
  }
  for (const ConfigBlock& child : b.blocks)
    throw config_error(child.line, "unknown block '" + child.key + "' in metric block");
  if (m.entries.empty()) throw config_error(b.line, "metric block needs 'entry' lines");
  return m;
}

inline GammaConfig read_connection_block(const ConfigBlock& b) {
  reject_arg(b);
  GammaConfig g;
  g.present = true;
  g.line = b.line;
  for (const ConfigEntry& e : b.entries) {
    if (e.key == "gamma") {
      auto [idx, expr] = entry_ints_then_expr(e, 3);
      g.entries.push_back(GammaEntryText{idx[0], idx[1], idx[2], std::move(expr), e.line});
    } else {
      throw config_error(e.line, "unknown key '" + e.key + "' in connection block");
    }
  }
  for (const ConfigBlock& child : b.blocks)
    throw config_error(child.line, "unknown block '" + child.key + "' in connection block");
  return g;
}

inline SubsetConfig read_subset_block(const ConfigBlock& b) {
  reject_arg(b);
  SubsetConfig s;
  s.present = true;
  s.line = b.line;
  bool has_order = false;
  for (const ConfigEntry& e : b.entries) {
    if (e.key == "generator") {
      s.generators.push_back(entry_poly(e));
    } else if (e.key == "order") {
      s.order = entry_int(e);
      if (s.order < 0) throw config_error(e.line, "'order' must be >= 0");
      has_order = true;
    } else {
      throw config_error(e.line, "unknown key '" + e.key + "' in subset block");
    }
  }
  for (const ConfigBlock& child : b.blocks)
    throw config_error(child.line, "unknown block '" + child.key + "' in subset block");
  if (s.generators.empty()) throw config_error(b.line, "subset block needs 'generator' lines");
  if (!has_order) throw config_error(b.line, "subset block needs an 'order' entry");
  return s;
}

inline std::vector<PolyText> entry_scalar_list(const ConfigEntry& e) {
  std::vector<PolyText> out;
  for (const auto& [tok, col] : split_value(e)) out.push_back(PolyText{tok, e.line, col});
  if (out.empty()) throw config_error(e.line, "'" + e.key + "' needs matrix entries");
  return out;
}

inline ActionConfig read_action_block(const ConfigBlock& b) {
  reject_arg(b);
  ActionConfig a;
  a.present = true;
  a.line = b.line;
  for (const ConfigEntry& e : b.entries) {
    if (e.key == "element") {
      a.elements.push_back(entry_scalar_list(e));
    } else if (e.key == "generator") {
      if (!a.generator.empty()) throw config_error(e.line, "duplicate 'generator' entry");
      a.generator = entry_scalar_list(e);
    } else if (e.key == "invariant") {
      a.invariants.push_back(entry_poly(e));
    } else {
      throw config_error(e.line, "unknown key '" + e.key + "' in action block");
    }
  }
  for (const ConfigBlock& child : b.blocks)
    throw config_error(child.line, "unknown block '" + child.key + "' in action block");
  if (a.elements.empty() && a.generator.empty())
    throw config_error(b.line, "action block needs 'element' lines or a 'generator'");
  return a;
}

inline ReductionConfig read_reduction_block(const ConfigBlock& b) {
  reject_arg(b);
  ReductionConfig r;
  r.present = true;
  r.line = b.line;
  bool has_chart = false;
  for (const ConfigEntry& e : b.entries) {
    if (e.key == "projection") {
      r.projection.push_back(entry_poly(e));
    } else {
      throw config_error(e.line, "unknown key '" + e.key + "' in reduction block");
    }
  }
  for (const ConfigBlock& child : b.blocks) {
    if (child.key == "chart") {
      if (has_chart) throw config_error(child.line, "duplicate chart block in reduction");
      r.chart = read_chart_block(child);
      has_chart = true;
    } else if (child.key == "metric") {
      if (r.metric.present) throw config_error(child.line, "duplicate metric block in reduction");
      r.metric = read_metric_block(child);
    } else if (child.key == "connection") {
      if (r.gamma.present)
        throw config_error(child.line, "duplicate connection block in reduction");
      r.gamma = read_connection_block(child);
    } else if (child.key == "subset") {
      if (r.subset.present) throw config_error(child.line, "duplicate subset block in reduction");
      r.subset = read_subset_block(child);
    } else {
      throw config_error(child.line, "unknown block '" + child.key + "' in reduction block");
    }
  }
  if (!has_chart) throw config_error(b.line, "reduction block needs a chart block");
  if (r.projection.empty()) throw config_error(b.line, "reduction block needs 'projection' lines");
  if (r.metric.present && r.gamma.present)
    throw config_error(b.line, "reduction block has both a metric and a connection block");
  return r;
}

inline const std::vector<std::string>& task_kinds() {
  static const std::vector<std::string> kinds = {"validate",   "connection", "fedosov",
                                                 "star",       "whitney-star", "invariance",
                                                 "reduce-check", "equiv"};
  return kinds;
}

inline bool is_task_kind(const std::string& k) {
  for (const std::string& s : task_kinds())
    if (s == k) return true;
  return false;
}

inline TaskConfig read_task_block(const ConfigBlock& b) {
  if (b.arg.empty()) throw config_error(b.line, "task block needs a kind, e.g. 'task star {'");
  if (!is_task_kind(b.arg)) throw config_error(b.line, "unknown task kind '" + b.arg + "'");
  TaskConfig t;
  t.kind = b.arg;
  t.line = b.line;
  for (const ConfigEntry& e : b.entries) {
    if (e.key == "order") {
      t.order = entry_int(e);
      if (t.order < 0) throw config_error(e.line, "'order' must be >= 0");
    } else if (e.key == "truncation") {
      t.truncation = entry_int(e);
      if (t.truncation < 2) throw config_error(e.line, "'truncation' must be >= 2");
    } else if (e.key == "pairs") {
      t.pairs = entry_int(e);
      if (t.pairs < 1) throw config_error(e.line, "'pairs' must be >= 1");
    } else if (e.key == "samples") {
      t.samples = entry_int(e);
      if (t.samples < 1) throw config_error(e.line, "'samples' must be >= 1");
    } else if (e.key == "jet_order") {
      t.jet_order = entry_int(e);
      if (t.jet_order < 1) throw config_error(e.line, "'jet_order' must be >= 1");
    } else if (e.key == "coeff_degree") {
      t.coeff_degree = entry_int(e);
      if (t.coeff_degree < 0) throw config_error(e.line, "'coeff_degree' must be >= 0");
    } else if (e.key == "derivative_cap") {
      t.derivative_cap = entry_int(e);
      if (t.derivative_cap < 1) throw config_error(e.line, "'derivative_cap' must be >= 1");
    } else if (e.key == "f") {
      t.f = entry_poly(e);
      t.has_f = true;
    } else if (e.key == "g") {
      t.g = entry_poly(e);
      t.has_g = true;
    } else {
      throw config_error(e.line, "unknown key '" + e.key + "' in task block");
    }
  }
  for (const ConfigBlock& child : b.blocks) {
    if (child.key == "pair") {
      reject_arg(child);
      bool pf = false, pg = false;
      PolyText f, g;
      for (const ConfigEntry& e : child.entries) {
        if (e.key == "f") {
          f = entry_poly(e);
          pf = true;
        } else if (e.key == "g") {
          g = entry_poly(e);
          pg = true;
        } else {
          throw config_error(e.line, "unknown key '" + e.key + "' in pair block");
        }
      }
      for (const ConfigBlock& gc : child.blocks)
        throw config_error(gc.line, "unknown block '" + gc.key + "' in pair block");
      if (!pf || !pg) throw config_error(child.line, "pair block needs 'f' and 'g'");
      t.battery.emplace_back(std::move(f), std::move(g));
    } else if (child.key == "metric") {
      if (t.metric_b.present) throw config_error(child.line, "duplicate metric block in task");
      t.metric_b = read_metric_block(child);
    } else if (child.key == "connection") {
      if (t.gamma_b.present) throw config_error(child.line, "duplicate connection block in task");
      t.gamma_b = read_connection_block(child);
    } else {
      throw config_error(child.line, "unknown block '" + child.key + "' in task block");
    }
  }
  if (t.metric_b.present && t.gamma_b.present)
    throw config_error(b.line, "task has both a metric and a connection block");
  return t;
}

}  // namespace detail

// Extracts the typed job description from raw text.  Unknown keys and blocks
// are rejected everywhere; required entries are enforced per block.
inline JobConfig parse_job_config(const std::string& text) {
  ConfigBlock root = parse_config_text(text);
  JobConfig cfg;
  for (const ConfigEntry& e : root.entries) {
    if (e.key == "seed") {
      cfg.seed = detail::entry_uint(e);
    } else {
      throw detail::config_error(e.line, "unknown top-level key '" + e.key + "'");
    }
  }
  for (const ConfigBlock& b : root.blocks) {
    if (b.key == "chart") {
      if (cfg.has_chart) throw detail::config_error(b.line, "duplicate chart block");
      cfg.chart = detail::read_chart_block(b);
      cfg.has_chart = true;
    } else if (b.key == "metric") {
      if (cfg.metric.present) throw detail::config_error(b.line, "duplicate metric block");
      cfg.metric = detail::read_metric_block(b);
    } else if (b.key == "connection") {
      if (cfg.gamma.present) throw detail::config_error(b.line, "duplicate connection block");
      cfg.gamma = detail::read_connection_block(b);
    } else if (b.key == "subset") {
      if (cfg.subset.present) throw detail::config_error(b.line, "duplicate subset block");
      cfg.subset = detail::read_subset_block(b);
    } else if (b.key == "action") {
      if (cfg.action.present) throw detail::config_error(b.line, "duplicate action block");
      cfg.action = detail::read_action_block(b);
    } else if (b.key == "reduction") {
      if (cfg.reduction.present) throw detail::config_error(b.line, "duplicate reduction block");
      cfg.reduction = detail::read_reduction_block(b);
    } else if (b.key == "task") {
      cfg.tasks.push_back(detail::read_task_block(b));
    } else {
      throw detail::config_error(b.line, "unknown block '" + b.key + "'");
    }
  }
  if (!cfg.has_chart) throw Error::schema("config error: no chart block");
  if (cfg.metric.present && cfg.gamma.present)
    throw Error::schema("config error: both a metric and a connection block are given");
  if (cfg.tasks.empty()) throw Error::schema("config error: no task blocks");
  return cfg;
}

}  // namespace starjet
