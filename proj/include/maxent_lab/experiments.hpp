#pragma once

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "maxent_lab/coding_game.hpp"
#include "maxent_lab/config.hpp"
#include "maxent_lab/error.hpp"
#include "maxent_lab/events.hpp"
#include "maxent_lab/exact_engine.hpp"
#include "maxent_lab/integer_prior.hpp"
#include "maxent_lab/lattice.hpp"
#include "maxent_lab/maxent.hpp"
#include "maxent_lab/predictors.hpp"

#ifndef MAXENT_LAB_VERSION
#define MAXENT_LAB_VERSION "0.0.0"
#endif

namespace maxent_lab {

inline constexpr const char* kVersion = MAXENT_LAB_VERSION;

/// Sample space and constraint built from a config problem block.
struct Problem {
  SampleSpace space;
  ConstraintSpec constraint;
  std::size_t declared_outcomes = 0;
};

/// Zero-weight outcomes are dropped together with their statistic columns.
inline Problem build_problem(const ProblemSpec& spec) {
  Problem p;
  p.declared_outcomes = spec.outcomes.size();
  p.space = build_space(spec.outcomes, spec.prior);
  std::vector<std::vector<Rational>> values;
  for (auto src : p.space.source_index) {
    std::vector<Rational> row;
    for (const auto& t : spec.statistic) row.push_back(t.at(src));
    values.push_back(std::move(row));
  }
  p.constraint = derive_lattice(values, spec.target);
  return p;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  // Drop the sign of values that round to zero.
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

/// Minimal CSV table; cells are pre-formatted strings.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::string> descriptions;
  std::vector<std::vector<std::string>> rows;

  void column(std::string name, std::string description) {
    columns.push_back(std::move(name));
    descriptions.push_back(std::move(description));
  }

  std::string render() const {
    auto quote = [](const std::string& s) {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string out = "\"";
      for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
      }
      return out + "\"";
    };
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + quote(columns[i]);
    out += "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + quote(r[i]);
      out += "\n";
    }
    return out;
  }
};

inline EventSpec build_event(const EventConfig& ec, const Problem& p, const MaxEntSolution* sol) {
  const auto& space = p.space;
  EventSpec e;
  auto label_index = [&](const std::string& label) {
    auto i = space.find(label);
    if (!i) throw Error(ErrorCode::config, "event references unknown outcome '" + label + "'");
    return *i;
  };
  if (ec.kind == "always") e = EventSpec::always();
  else if (ec.kind == "never") e = EventSpec::never();
  else if (ec.kind == "freq_dev") {
    std::vector<Rational> ref;
    if (ec.reference_maxent) {
      if (!sol) throw Error(ErrorCode::config, "frequency event needs the MaxEnt solution");
      for (double v : sol->pmf) ref.push_back(exact_from_double(v));
    } else {
      if (ec.reference.size() != p.declared_outcomes)
        throw Error(ErrorCode::config, "frequency reference needs one mass per outcome");
      for (auto src : space.source_index) ref.push_back(ec.reference[src]);
    }
    e = EventSpec::frequency_deviation(ec.epsilon, ref);
  } else if (ec.kind == "bigram") {
    e = EventSpec::bigram_deviation(label_index(ec.j), label_index(ec.j_prime), ec.epsilon);
  } else if (ec.kind == "box") {
    std::vector<std::vector<Rational>> stat;
    for (auto src : space.source_index) {
      std::vector<Rational> row;
      for (const auto& r : ec.statistic) row.push_back(r.at(src));
      stat.push_back(std::move(row));
    }
    e = EventSpec::box(stat, ec.lower, ec.upper, ec.inside);
  } else {
    throw Error(ErrorCode::config, "unknown event kind '" + ec.kind + "'");
  }
  e.name = ec.name;
  return e;
}

/// Semantic checks (lattice, hull, trial solve, feasibility preview); never throws on content.
inline std::vector<Diagnostic> validate_config(const RunConfig& cfg, std::vector<Diagnostic> diags = {}) {
  LineIndex lines(cfg.text);
  auto add = [&](Diagnostic::Severity sev, const std::string& ptr, const std::string& msg) {
    diags.push_back({sev, ptr, lines.line_of(ptr), msg});
  };
  for (const auto& d : diags)
    if (d.severity == Diagnostic::Severity::error) return diags;
  Problem p;
  p.declared_outcomes = cfg.problem.outcomes.size();
  try {
    p.space = build_space(cfg.problem.outcomes, cfg.problem.prior);
    for (const auto& w : p.space.warnings) add(Diagnostic::Severity::warning, "/problem/prior", w);
    std::vector<std::vector<Rational>> values;
    for (auto src : p.space.source_index) {
      std::vector<Rational> row;
      for (const auto& t : cfg.problem.statistic) row.push_back(t.at(src));
      values.push_back(std::move(row));
    }
    p.constraint = derive_lattice(values, cfg.problem.target);
  } catch (const Error& e) {
    std::string msg = e.what();
    std::string ptr = "/problem";
    if (e.code() == ErrorCode::target_outside_hull) {
      msg = "target outside convex hull: " + e.detail();
      ptr = "/problem/target";
    } else if (e.code() == ErrorCode::degenerate_coordinate) {
      msg += " (the T-covariance matrix is singular exactly when a constraint coordinate is a.s. constant or "
             "the coordinates are affinely dependent; restrict the sample space or drop the coordinate)";
      ptr = "/problem/T";
    } else if (e.code() == ErrorCode::all_zero_weights || e.code() == ErrorCode::empty_space) {
      ptr = "/problem/prior";
    }
    add(Diagnostic::Severity::error, ptr, msg);
    return diags;
  }
  std::optional<MaxEntSolution> sol;
  switch (hull_position(p.constraint)) {
    case HullPosition::outside:
      add(Diagnostic::Severity::error, "/problem/target", "target outside convex hull of the statistic values");
      return diags;
    case HullPosition::boundary:
      add(Diagnostic::Severity::error, "/problem/target",
          "boundary target: no exponential-family solution exists; restrict the sample space to the face "
          "containing the target");
      return diags;
    case HullPosition::interior:
      break;
  }
  try {
    sol = solve_maxent(p.space, p.constraint);
  } catch (const Error& e) {
    std::string msg = e.what();
    if (e.code() == ErrorCode::singular_covariance)
      msg += " (coordinates of T are affinely dependent on the support; drop a redundant coordinate)";
    add(Diagnostic::Severity::error, "/problem/T", msg);
    return diags;
  }
  std::int64_t n_top = 0;
  for (const auto& ex : cfg.experiments) {
    std::visit(
        [&](const auto& b) {
          using B = std::decay_t<decltype(b)>;
          if constexpr (requires { b.n_list; })
            for (auto n : b.n_list) n_top = std::max(n_top, n);
          if constexpr (std::is_same_v<B, HypercompBlock>) n_top = std::max(n_top, b.n);
        },
        ex.body);
  }
  std::optional<FeasibilityTable> feas;
  if (n_top > 0) {
    try {
      feas = feasible_sizes(p.space, p.constraint, n_top, cfg.cell_budget);
    } catch (const Error& e) {
      add(Diagnostic::Severity::warning, "/experiments", std::string("feasibility preview skipped: ") + e.what());
    }
  }
  if (feas && feas->sizes().empty())
    add(Diagnostic::Severity::warning, "/problem/target",
        "no n <= " + std::to_string(n_top) + " admits a sequence with average exactly equal to the target");
  for (const auto& ex : cfg.experiments) {
    std::visit(
        [&](const auto& b) {
          using B = std::decay_t<decltype(b)>;
          if constexpr (requires { b.n_list; }) {
            if (feas)
              for (std::size_t i = 0; i < b.n_list.size(); ++i)
                if (!feas->is_feasible(b.n_list[i]))
                  add(Diagnostic::Severity::warning, ex.pointer + "/n_list/" + std::to_string(i),
                      "n = " + std::to_string(b.n_list[i]) + " is infeasible; its record will be undefined");
          }
          if constexpr (std::is_same_v<B, ConcentrateBlock>) {
            for (std::size_t i = 0; i < b.events.size(); ++i) {
              const std::string ptr = ex.pointer + "/events/" + std::to_string(i);
              try {
                build_event(b.events[i], p, &*sol).validate(p.space.size());
              } catch (const Error& e) {
                add(Diagnostic::Severity::error, ptr, e.what());
              }
            }
          }
          if constexpr (std::is_same_v<B, CondlimitBlock>) {
            if (b.m > kDefaultMarginalCap)
              add(Diagnostic::Severity::error, ex.pointer + "/m",
                  "m exceeds the enumeration cap of " + std::to_string(kDefaultMarginalCap));
          }
          if constexpr (std::is_same_v<B, HypercompBlock>) {
            if ((b.base == "conditioned" || b.challenger == "conditioned") && feas && !feas->is_feasible(b.n))
              add(Diagnostic::Severity::error, ex.pointer + "/n", "conditioned predictor needs a feasible n");
          }
        },
        ex.body);
  }
  return diags;
}

struct ExperimentOutput {
  std::string tag;
  std::string type;
  std::vector<std::string> files;
  double seconds = 0;
  std::optional<std::uint64_t> seed;
};

struct RunManifest {
  std::string config_path;
  std::string config_hash;
  std::string version = kVersion;
  std::string mode;
  std::string output_dir;
  std::vector<ExperimentOutput> experiments;
  std::vector<std::string> warnings;

  Json to_json() const {
    Json j;
    j["artifact"] = "maxent-lab";
    j["version"] = version;
    j["config"] = config_path;
    j["config_hash"] = config_hash;
    j["mode"] = mode;
    j["output_dir"] = output_dir;
    j["experiments"] = Json::array();
    Json seeds = Json::object();
    for (const auto& e : experiments) {
      Json x;
      x["tag"] = e.tag;
      x["type"] = e.type;
      x["outputs"] = e.files;
      x["duration_seconds"] = e.seconds;
      j["experiments"].push_back(x);
      if (e.seed) seeds[e.tag] = *e.seed;
    }
    j["seeds"] = seeds;
    j["warnings"] = warnings;
    return j;
  }
};

namespace detail {

struct Section {
  std::string tag;
  std::string title;
  std::vector<std::pair<std::string, const CsvTable*>> tables;
  std::vector<std::string> lines;
};

inline void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::config, "cannot write '" + path.string() + "'");
  out << body;
}

inline std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

inline std::string sequence_label(const SampleSpace& space, std::span<const std::size_t> seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) out += (i ? " " : "") + space.labels[seq[i]];
  return out;
}

}  // namespace detail

/// Builds a predictor by name for the coding-game experiments.
inline std::unique_ptr<Predictor> make_predictor(const std::string& name, const Problem& p, const MaxEntSolution& sol,
                                                 std::int64_t n, std::size_t components, const IntegerPrior& prior) {
  if (name == "maxent") return maxent_predictor(sol);
  if (name == "prior") return prior_predictor(p.space);
  if (name == "conditioned") return conditioned_prior_predictor(p.space, p.constraint, sol, n);
  if (name == "mixture") return mixture_predictor(p.space, p.constraint, sol, prior, components);
  throw Error(ErrorCode::config, "unknown predictor '" + name + "'");
}

/// Runs every experiment in declaration order and writes CSVs, summary.md and manifest.json.
inline RunManifest run_config(const RunConfig& cfg, const std::string& config_path, const std::string& out_dir,
                              std::optional<ArithmeticMode> mode_override = std::nullopt) {
  namespace fs = std::filesystem;
  const ArithmeticMode mode = mode_override.value_or(cfg.mode);
  RunManifest manifest;
  manifest.config_path = config_path;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, fnv1a(cfg.text));
  manifest.config_hash = hash;
  manifest.mode = mode == ArithmeticMode::rational ? "rational" : "float";
  manifest.output_dir = out_dir;
  fs::create_directories(out_dir);

  Problem p = build_problem(cfg.problem);
  manifest.warnings = p.space.warnings;
  std::optional<MaxEntSolution> sol_cache;
  auto solution = [&]() -> const MaxEntSolution& {
    if (!sol_cache) sol_cache = solve_maxent(p.space, p.constraint);
    return *sol_cache;
  };
  const auto& c = p.constraint;
  const std::uint64_t budget = cfg.cell_budget;

  std::vector<CsvTable> tables;
  tables.reserve(cfg.experiments.size() * 2 + 1);
  std::vector<detail::Section> sections;

  for (const auto& ex : cfg.experiments) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentOutput out;
    out.tag = ex.tag;
    out.type = ex.type;
    detail::Section sec;
    sec.tag = ex.tag;
    sec.title = ex.tag + " (" + ex.type + ")";
    auto emit = [&](const std::string& suffix, CsvTable table) {
      tables.push_back(std::move(table));
      const std::string file = ex.tag + suffix + ".csv";
      detail::write_text(fs::path(out_dir) / file, tables.back().render());
      out.files.push_back(file);
      sec.tables.emplace_back(file, &tables.back());
    };
    try {
      std::visit(
          [&](const auto& b) {
            using B = std::decay_t<decltype(b)>;
            const MaxEntSolution& sol = solution();
            if constexpr (std::is_same_v<B, SolveBlock>) {
              CsvTable t;
              t.column("outcome", "outcome label");
              t.column("prior_mass", "normalized prior mass q(x)");
              t.column("maxent_mass", "MaxEnt mass p~(x)");
              t.column("log2_ratio", "log2[p~(x)/q(x)]");
              std::string masses;
              for (std::size_t x = 0; x < p.space.size(); ++x) {
                t.rows.push_back({p.space.labels[x], format_double(p.space.prior_mass[x]), format_double(sol.pmf[x]),
                                  format_double(std::log2(sol.pmf[x] / p.space.prior_mass[x]))});
                masses += (x ? ", " : "") + fixed(sol.pmf[x]);
              }
              emit("", std::move(t));
              std::string beta;
              for (Eigen::Index j = 0; j < sol.beta.size(); ++j) beta += (j ? ", " : "") + fixed(sol.beta[j], 10);
              sec.lines.push_back("MaxEnt masses: (" + masses + ")");
              sec.lines.push_back("beta: (" + beta + "), ln Z = " + fixed(sol.log_partition, 10));
              sec.lines.push_back("entropy_bits H_q(p~) = " + fixed(sol.entropy_bits, 10) +
                                  ", moment residual = " + format_double(sol.residual) + ", Newton iterations = " +
                                  std::to_string(sol.iterations));
            } else if constexpr (std::is_same_v<B, ConcentrateBlock>) {
              std::vector<EventSpec> events;
              for (const auto& e : b.events) events.push_back(build_event(e, p, &sol));
              auto rep = concentration_constants(p.space, c, sol, b.n_list, events, mode, budget);
              CsvTable t;
              t.column("n", "sample size");
              t.column("P(C_n)", "P~(T-bar^(n) = t), empty when n is infeasible");
              t.column("c_n", "n^(k/2) P(C_n)");
              t.column("d_n", "P(C_n) sqrt((2 pi n)^k det Sigma) / prod h_j");
              t.column("limit", "prod h_j / sqrt((2 pi)^k det Sigma)");
              for (const auto& e : events) {
                t.column("Q(" + e.name + "|C_n)", "prior probability of event " + e.name + " given C_n");
                t.column("P(" + e.name + ")", "MaxEnt probability of event " + e.name);
                t.column("slack(" + e.name + ")", "P(" + e.name + ") - n^(-k/2) c_n Q(" + e.name + "|C_n), >= 0");
                t.column("slack_in_C(" + e.name + ")", "same bound for the event intersected with C_n, = 0");
              }
              for (const auto& r : rep.records) {
                std::vector<std::string> row{std::to_string(r.n)};
                if (r.feasible) {
                  row.push_back(format_double(r.p_constraint));
                  row.push_back(format_double(r.c_n));
                  row.push_back(format_double(r.d_n));
                } else {
                  row.insert(row.end(), {"", "", ""});
                }
                row.push_back(format_double(r.limit));
                for (const auto& e : r.events) {
                  row.push_back(detail::opt_cell(e.q_given_c));
                  row.push_back(format_double(e.p_event));
                  row.push_back(e.q_given_c ? format_double(e.slack) : "");
                  row.push_back(e.q_given_c ? format_double(e.slack_in_c) : "");
                }
                t.rows.push_back(std::move(row));
              }
              emit("", std::move(t));
              sec.lines.push_back("arithmetic: " + std::string(mode == ArithmeticMode::rational ? "rational" : "float"));
              sec.lines.push_back("limit of c_n: " + fixed(rep.limit, 8));
            } else if constexpr (std::is_same_v<B, CondlimitBlock>) {
              CsvTable t;
              t.column("n", "sample size");
              t.column("m", "prefix length");
              t.column("sequence", "prefix x^(m), space separated labels");
              t.column("conditional_mass", "Q(X^(m) = x^(m) | C_n)");
              t.column("maxent_mass", "p~^m(x^(m))");
              t.column("TV(m,n)", "total-variation distance between the two rows' distributions");
              for (auto n : b.n_list) {
                if (!c.target_sum_index(n) || constraint_prob(c, n, prior_measure(p.space), budget) == 0.0) {
                  t.rows.push_back({std::to_string(n), std::to_string(b.m), "", "", "", ""});
                  continue;
                }
                std::vector<double> masses;
                double tv = 0;
                std::size_t rows = 0;
                if (mode == ArithmeticMode::rational) {
                  auto cm = conditional_marginal(c, b.m, n, exact_prior_measure(p.space), sol.pmf, kDefaultMarginalCap,
                                                 budget);
                  for (const auto& v : cm.mass) masses.push_back(to_double(v));
                  tv = cm.tv;
                  rows = cm.mass.size();
                } else {
                  auto cm = conditional_marginal(c, b.m, n, prior_measure(p.space), sol.pmf, kDefaultMarginalCap, budget);
                  masses = cm.mass;
                  tv = cm.tv;
                  rows = cm.mass.size();
                }
                ConditionalMarginal<double> shape;
                shape.m = b.m;
                shape.alphabet = p.space.size();
                for (std::size_t row = 0; row < rows; ++row) {
                  auto seq = shape.sequence(row);
                  double ref = 1;
                  for (auto x : seq) ref *= sol.pmf[x];
                  t.rows.push_back({std::to_string(n), std::to_string(b.m), detail::sequence_label(p.space, seq),
                                    format_double(masses[row]), format_double(ref), format_double(tv)});
                }
                sec.lines.push_back("n = " + std::to_string(n) + ": TV = " + fixed(tv, 8));
              }
              emit("", std::move(t));
            } else if constexpr (std::is_same_v<B, Corollary1Block>) {
              std::vector<std::int64_t> feasible;
              for (auto n : b.n_list)
                if (c.target_sum_index(n)) feasible.push_back(n);
              auto top = feasible.empty() ? std::int64_t{1} : feasible.back();
              auto table = feasible_sizes(p.space, c, top, budget);
              std::vector<std::int64_t> use;
              for (auto n : feasible)
                if (table.is_feasible(n)) use.push_back(n);
              auto res = corollary1_residual(p.space, c, sol, use, budget);
              CsvTable t;
              t.column("n", "sample size");
              t.column("maxent_bits", "-log2 p~(x^(n)) on a witness x^(n) in C_n");
              t.column("conditioned_bits", "-log2 q(x^(n) | C_n) on the same witness");
              t.column("normalizer_bits", "(k/2) log2(2 pi n) + log2 sqrt(det Sigma) - sum log2 h_j");
              t.column("residual_bits", "maxent_bits - conditioned_bits - normalizer_bits");
              t.column("minus_log2_d_n", "-log2 d_n from an independent MaxEnt-measure computation");
              for (const auto& r : res)
                t.rows.push_back({std::to_string(r.n), format_double(r.maxent_bits), format_double(r.conditioned_bits),
                                  format_double(r.normalizer), format_double(r.residual),
                                  format_double(r.minus_log2_dn)});
              double worst = 0;
              for (const auto& r : res) worst = std::max(worst, std::abs(r.residual - r.minus_log2_dn));
              emit("", std::move(t));
              sec.lines.push_back("max |residual + log2 d_n| = " + format_double(worst));
            } else if constexpr (std::is_same_v<B, GameBlock>) {
              auto prior = IntegerPrior::rissanen(b.j_max);
              const double alpha = to_double(b.alpha);
              std::int64_t top = b.n_list.empty() ? 1 : b.n_list.back();
              auto feas = feasible_sizes(p.space, c, top, budget);
              std::unique_ptr<MixturePredictor> mixture;
              auto need_mixture = std::find_if(b.predictors.begin(), b.predictors.end(), [](const std::string& s) {
                                    return s == "mixture" || s == "renewal";
                                  }) != b.predictors.end();
              if (need_mixture) mixture = mixture_predictor(p.space, c, sol, prior, b.components);
              std::shared_ptr<const SumTable> cond_table;
              if (std::find(b.predictors.begin(), b.predictors.end(), "conditioned") != b.predictors.end())
                cond_table = conditioning_table(c, sol, top, budget);
              Reachability reach(c, top, budget);
              CsvTable t;
              t.column("n", "sample size (feasible sizes only)");
              t.column("predictor", "maxent, prior, conditioned (q(.|C_n)), mixture (p'), renewal (renewal-composed p_alpha)");
              t.column("codelength_bits", "-log2 p(x^(n)) on a witness x^(n) in C_n, first-passage when one exists");
              t.column("gap_vs_maxent_bits", "log2[p(x^(n)) / p~(x^(n))]");
              for (auto n : b.n_list) {
                if (!feas.is_feasible(n)) continue;
                auto w = witness_sequence(c, reach, n, true);
                if (!w) w = witness_sequence(c, reach, n, false);
                const double base = -log2_maxent(sol, *w);
                for (const auto& name : b.predictors) {
                  double len = 0;
                  if (name == "maxent") len = base;
                  else if (name == "prior") len = -log2_prior(p.space, *w);
                  else if (name == "conditioned")
                    len = codelength(*conditioned_prior_predictor(p.space, c, sol, n, cond_table), *w);
                  else if (name == "mixture") len = codelength(*mixture, *w);
                  else if (name == "renewal")
                    len = codelength(*renewal_compose(alpha_mixture(mixture->clone(), sol, alpha), c), *w);
                  t.rows.push_back({std::to_string(n), name, format_double(len), format_double(base - len)});
                }
              }
              emit("", std::move(t));
              auto gaps = mixture_min_gap(p.space, c, sol, prior, b.j_max, b.gap_n_max, budget);
              CsvTable g;
              g.column("n", "feasible sample size");
              g.column("j", "rank of n among feasible sizes");
              g.column("log2_n", "log2 n");
              g.column("min_gap_bits", "min over C_n of log2[p'(x^(n)) / p~(x^(n))], J_max components");
              g.column("gap_over_log2_n", "min_gap_bits / log2 n");
              g.column("first_passage", "1 when some member of C_n has no earlier constraint hit");
              double c2 = std::numeric_limits<double>::infinity();
              double ratio_floor = std::numeric_limits<double>::infinity();
              for (const auto& r : gaps) {
                g.rows.push_back({std::to_string(r.n), std::to_string(r.j), format_double(std::log2(double(r.n))),
                                  format_double(r.gap_bits), format_double(r.gap_over_log2n),
                                  r.first_passage ? "1" : "0"});
                c2 = std::min(c2, r.gap_bits);
                ratio_floor = std::min(ratio_floor, r.gap_over_log2n);
              }
              emit("_gap", std::move(g));
              if (std::isfinite(c2)) {
                sec.lines.push_back("smallest min-gap over tested n: " + fixed(c2, 6) + " bits; smallest gap/log2 n: " +
                                    fixed(ratio_floor, 6));
                sec.lines.push_back("alpha 2^(c'') = " + fixed(alpha * std::exp2(c2), 6) +
                                    (alpha * std::exp2(c2) > 1 ? " > 1" : " <= 1 (the renewal argument's requirement fails)"));
              }
              for (auto n : b.n_list) {
                if (!feas.is_feasible(n)) continue;
                try {
                  auto mm = verify_minimax_constancy(p.space, c, sol, n, {}, 1'000'000);
                  sec.lines.push_back("n = " + std::to_string(n) + ": per-symbol redundancy of p~ over " +
                                      std::to_string(mm.members) + " members of C_n deviates from entropy_bits by " +
                                      format_double(mm.max_deviation));
                } catch (const Error& e) {
                  if (!e.is_guard()) throw;
                }
              }
            } else if constexpr (std::is_same_v<B, RecurBlock>) {
              out.seed = b.seed;
              auto rep = recurrence_simulation(sol, c, b.checkpoints, b.reps, b.seed);
              CsvTable t;
              t.column("checkpoint", "number of steps simulated");
              t.column("mean_visits", "mean number of returns of the centered walk to the origin, over replicas");
              t.column("stderr", "standard error of mean_visits");
              for (std::size_t i = 0; i < rep.checkpoints.size(); ++i)
                t.rows.push_back({std::to_string(rep.checkpoints[i]), format_double(rep.mean_visits[i]),
                                  format_double(rep.stderr_visits[i])});
              emit("", std::move(t));
              sec.lines.push_back("seed " + std::to_string(b.seed) + ", " + std::to_string(b.reps) + " replicas");
            } else if constexpr (std::is_same_v<B, HypercompBlock>) {
              out.seed = b.seed;
              auto prior = IntegerPrior::rissanen(std::max<std::size_t>(b.components, 1));
              auto base = make_predictor(b.base, p, sol, b.n, b.components, prior);
              auto chal = make_predictor(b.challenger, p, sol, b.n, b.components, prior);
              auto rep = hypercompression_check(*base, *chal, sol, b.n, b.K, b.samples, b.seed);
              CsvTable t;
              t.column("K", "bits saved threshold");
              t.column("samples", "number of i.i.d. p~ sequences");
              t.column("exceed_freq", "fraction with codelength(base) >= codelength(challenger) + K");
              t.column("bound", "2^-K");
              t.column("sigma", "binomial standard deviation sqrt(bound (1 - bound) / samples)");
              t.column("within", "1 when exceed_freq <= bound + 3 sigma");
              t.column("exact_prob", "exact exceedance probability (base maxent, challenger prior only)");
              const bool exact = b.base == "maxent" && b.challenger == "prior";
              for (const auto& r : rep.records)
                t.rows.push_back({format_double(r.K), std::to_string(r.samples), format_double(r.exceed_freq),
                                  format_double(r.bound), format_double(r.sigma), r.within ? "1" : "0",
                                  exact ? format_double(exact_prior_exceedance(c, sol, b.n, r.K, budget)) : ""});
              emit("", std::move(t));
              sec.lines.push_back("base " + b.base + ", challenger " + b.challenger + ", n = " + std::to_string(b.n) +
                                  ", seed " + std::to_string(b.seed));
            }
          },
          ex.body);
    } catch (const Error& e) {
      throw Error(e.code(), "experiment '" + ex.tag + "': " + e.detail());
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest.experiments.push_back(std::move(out));
    sections.push_back(std::move(sec));
  }

  std::ostringstream md;
  md << "# " << cfg.name << "\n\n";
  md << "Config hash " << manifest.config_hash << ", artifact version " << kVersion << ", arithmetic "
     << manifest.mode << ".\n\n";
  md << "## Columns\n\n";
  if (sections.empty()) md << "No experiments.\n";
  for (const auto& s : sections)
    for (const auto& [file, table] : s.tables) {
      md << "`" << file << "`\n\n";
      for (std::size_t i = 0; i < table->columns.size(); ++i)
        md << "- `" << table->columns[i] << "`: " << table->descriptions[i] << "\n";
      md << "\n";
    }
  md << "## Results\n\n";
  for (const auto& w : manifest.warnings) md << "Warning: " << w << "\n\n";
  for (const auto& s : sections) {
    md << "### " << s.title << "\n\n";
    for (const auto& l : s.lines) md << "- " << l << "\n";
    md << "\n";
  }
  detail::write_text(fs::path(out_dir) / "summary.md", md.str());
  detail::write_text(fs::path(out_dir) / "manifest.json", manifest.to_json().dump(2) + "\n");
  return manifest;
}

}  // namespace maxent_lab
