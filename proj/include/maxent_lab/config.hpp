#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "maxent_lab/error.hpp"
#include "maxent_lab/lattice_dp.hpp"
#include "maxent_lab/rational.hpp"

namespace maxent_lab {

using Json = nlohmann::json;

/// JSON pointer -> 1-based line of the value, from a light scan of the raw text.
class LineIndex {
 public:
  LineIndex() = default;

  explicit LineIndex(const std::string& text) : text_(text) {
    std::size_t pos = 0;
    skip_ws(pos);
    if (pos < text_.size()) value(pos, "");
  }

  std::size_t line_of(const std::string& pointer) const {
    std::string p = pointer;
    while (true) {
      auto it = lines_.find(p);
      if (it != lines_.end()) return it->second;
      auto cut = p.rfind('/');
      if (cut == std::string::npos || p.empty()) return 1;
      p = p.substr(0, cut);
    }
  }

  std::size_t line_at_offset(std::size_t offset) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < offset && i < text_.size(); ++i)
      if (text_[i] == '\n') ++line;
    return line;
  }

 private:
  void skip_ws(std::size_t& pos) {
    while (pos < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos]))) {
      if (text_[pos] == '\n') ++line_;
      ++pos;
    }
  }

  std::string string(std::size_t& pos) {
    std::string out;
    ++pos;
    while (pos < text_.size() && text_[pos] != '"') {
      if (text_[pos] == '\\' && pos + 1 < text_.size()) ++pos;
      out += text_[pos++];
    }
    ++pos;
    return out;
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char ch : key) {
      if (ch == '~') out += "~0";
      else if (ch == '/') out += "~1";
      else out += ch;
    }
    return out;
  }

  void value(std::size_t& pos, const std::string& pointer) {
    lines_.emplace(pointer, line_);
    if (pos >= text_.size()) return;
    const char ch = text_[pos];
    if (ch == '{') {
      ++pos;
      while (true) {
        skip_ws(pos);
        if (pos >= text_.size() || text_[pos] == '}') break;
        if (text_[pos] == ',') {
          ++pos;
          continue;
        }
        if (text_[pos] != '"') return;
        std::string key = string(pos);
        skip_ws(pos);
        if (pos < text_.size() && text_[pos] == ':') ++pos;
        skip_ws(pos);
        value(pos, pointer + "/" + escape(key));
      }
      ++pos;
    } else if (ch == '[') {
      ++pos;
      std::size_t i = 0;
      while (true) {
        skip_ws(pos);
        if (pos >= text_.size() || text_[pos] == ']') break;
        if (text_[pos] == ',') {
          ++pos;
          continue;
        }
        const std::size_t before = pos;
        value(pos, pointer + "/" + std::to_string(i++));
        if (pos == before) return;  // stray closer in malformed text
      }
      ++pos;
    } else if (ch == '"') {
      string(pos);
    } else {
      while (pos < text_.size() && text_[pos] != ',' && text_[pos] != '}' && text_[pos] != ']' &&
             !std::isspace(static_cast<unsigned char>(text_[pos])))
        ++pos;
    }
  }

  std::string text_;
  std::size_t line_ = 1;
  std::map<std::string, std::size_t> lines_;
};

struct Diagnostic {
  enum class Severity { error, warning };
  Severity severity = Severity::error;
  std::string field;  // JSON pointer
  std::size_t line = 0;
  std::string message;

  std::string format() const {
    return std::string(severity == Severity::error ? "error" : "warning") + ": " + (field.empty() ? "/" : field) +
           " (line " + std::to_string(line) + "): " + message;
  }
};

struct ProblemSpec {
  std::vector<std::string> outcomes;
  std::vector<Rational> prior;
  std::vector<std::vector<Rational>> statistic;  // k rows of |X| values, as written
  std::vector<Rational> target;
};

/// One event: "freq_dev", "box", "bigram", "always" or "never".
struct EventConfig {
  std::string kind;
  std::string name;
  Rational epsilon = 0;
  bool reference_maxent = true;
  std::vector<Rational> reference;
  std::vector<std::vector<Rational>> statistic;  // d rows of |X| values
  std::vector<Rational> lower, upper;
  bool inside = true;
  std::string j, j_prime;  // outcome labels
};

struct SolveBlock {};
struct ConcentrateBlock {
  std::vector<std::int64_t> n_list;
  std::vector<EventConfig> events;
};
struct CondlimitBlock {
  std::int64_t m = 1;
  std::vector<std::int64_t> n_list;
};
struct Corollary1Block {
  std::vector<std::int64_t> n_list;
};
struct GameBlock {
  std::vector<std::string> predictors;
  std::vector<std::int64_t> n_list;
  std::size_t j_max = 4096;
  std::size_t components = 64;
  Rational alpha = Rational(3, 4);
  std::int64_t gap_n_max = 200;
};
struct RecurBlock {
  std::int64_t steps = 0;
  std::vector<std::int64_t> checkpoints;
  std::int64_t reps = 1;
  std::uint64_t seed = 0;
};
struct HypercompBlock {
  std::vector<double> K;
  std::int64_t samples = 1;
  std::int64_t n = 1;
  std::uint64_t seed = 0;
  std::string base = "maxent";
  std::string challenger = "prior";
  std::size_t components = 16;
};

using ExperimentBody =
    std::variant<SolveBlock, ConcentrateBlock, CondlimitBlock, Corollary1Block, GameBlock, RecurBlock, HypercompBlock>;

struct ExperimentConfig {
  std::string type;
  std::string tag;
  std::string pointer;
  ExperimentBody body;
};

struct RunConfig {
  std::string name;
  ProblemSpec problem;
  std::vector<ExperimentConfig> experiments;
  std::string output_dir;
  ArithmeticMode mode = ArithmeticMode::float64;
  std::uint64_t cell_budget = kDefaultCellBudget;
  std::string text;  // raw file contents
};

namespace detail {

class ConfigReader {
 public:
  ConfigReader(const LineIndex& lines, std::vector<Diagnostic>& diags) : lines_(lines), diags_(diags) {}

  void error(const std::string& ptr, const std::string& msg) {
    diags_.push_back({Diagnostic::Severity::error, ptr, lines_.line_of(ptr), msg});
  }

  void warning(const std::string& ptr, const std::string& msg) {
    diags_.push_back({Diagnostic::Severity::warning, ptr, lines_.line_of(ptr), msg});
  }

  const Json* field(const Json& obj, const std::string& ptr, const std::string& key, bool required) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) error(ptr, "missing required field '" + key + "'");
      return nullptr;
    }
    return &*it;
  }

  std::optional<Rational> rational(const Json& v, const std::string& ptr) {
    try {
      if (v.is_string()) return parse_rational(v.get<std::string>());
      if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
      if (v.is_number_float()) {
        error(ptr, "write non-integer numbers as strings (\"0.3\" or \"3/10\") so they parse exactly");
        return std::nullopt;
      }
    } catch (const Error& e) {
      error(ptr, e.what());
      return std::nullopt;
    }
    error(ptr, "expected a number or fraction string");
    return std::nullopt;
  }

  std::vector<Rational> rational_list(const Json& v, const std::string& ptr) {
    std::vector<Rational> out;
    if (!v.is_array()) {
      error(ptr, "expected an array");
      return out;
    }
    for (std::size_t i = 0; i < v.size(); ++i)
      if (auto r = rational(v[i], ptr + "/" + std::to_string(i))) out.push_back(*r);
    return out;
  }

  std::optional<std::int64_t> integer(const Json& v, const std::string& ptr, std::int64_t min) {
    if (!v.is_number_integer()) {
      error(ptr, "expected an integer");
      return std::nullopt;
    }
    const auto x = v.get<std::int64_t>();
    if (x < min) {
      error(ptr, "must be at least " + std::to_string(min));
      return std::nullopt;
    }
    return x;
  }

  std::vector<std::int64_t> n_list(const Json& v, const std::string& ptr) {
    std::vector<std::int64_t> out;
    if (!v.is_array()) {
      error(ptr, "expected an array of sample sizes");
      return out;
    }
    for (std::size_t i = 0; i < v.size(); ++i)
      if (auto n = integer(v[i], ptr + "/" + std::to_string(i), 1)) out.push_back(*n);
    for (std::size_t i = 1; i < out.size(); ++i)
      if (out[i] <= out[i - 1]) {
        error(ptr, "n_list must be sorted strictly ascending");
        break;
      }
    return out;
  }

  std::optional<std::uint64_t> seed(const Json& obj, const std::string& ptr) {
    const Json* s = field(obj, ptr, "seed", true);
    if (!s) return std::nullopt;
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<std::int64_t>() >= 0)) {
      error(ptr + "/seed", "seed must be a non-negative integer");
      return std::nullopt;
    }
    return s->get<std::uint64_t>();
  }

  std::string string_field(const Json& obj, const std::string& ptr, const std::string& key, bool required,
                           const std::string& fallback = "") {
    const Json* v = field(obj, ptr, key, required);
    if (!v) return fallback;
    if (!v->is_string()) {
      error(ptr + "/" + key, "expected a string");
      return fallback;
    }
    return v->get<std::string>();
  }

 private:
  const LineIndex& lines_;
  std::vector<Diagnostic>& diags_;
};

inline EventConfig read_event(ConfigReader& rd, const Json& ev, const std::string& ptr) {
  EventConfig e;
  e.kind = rd.string_field(ev, ptr, "kind", true);
  e.name = rd.string_field(ev, ptr, "name", false, e.kind);
  if (e.kind == "always" || e.kind == "never") return e;
  if (e.kind == "freq_dev" || e.kind == "bigram") {
    if (const Json* v = rd.field(ev, ptr, "epsilon", true))
      if (auto r = rd.rational(*v, ptr + "/epsilon")) {
        e.epsilon = *r;
        if (e.epsilon <= 0) rd.error(ptr + "/epsilon", "epsilon must be positive");
      }
  }
  if (e.kind == "freq_dev") {
    if (const Json* v = rd.field(ev, ptr, "reference", false)) {
      if (v->is_string() && v->get<std::string>() == "maxent") {
        e.reference_maxent = true;
      } else {
        e.reference_maxent = false;
        e.reference = rd.rational_list(*v, ptr + "/reference");
      }
    }
  } else if (e.kind == "bigram") {
    e.j = rd.string_field(ev, ptr, "j", true);
    e.j_prime = rd.string_field(ev, ptr, "j_prime", true);
  } else if (e.kind == "box") {
    if (const Json* s = rd.field(ev, ptr, "S", true)) {
      if (!s->is_array()) rd.error(ptr + "/S", "expected an array of rows");
      else
        for (std::size_t i = 0; i < s->size(); ++i)
          e.statistic.push_back(rd.rational_list((*s)[i], ptr + "/S/" + std::to_string(i)));
    }
    if (const Json* v = rd.field(ev, ptr, "lower", true)) e.lower = rd.rational_list(*v, ptr + "/lower");
    if (const Json* v = rd.field(ev, ptr, "upper", true)) e.upper = rd.rational_list(*v, ptr + "/upper");
    if (const Json* v = rd.field(ev, ptr, "inside", false)) {
      if (!v->is_boolean()) rd.error(ptr + "/inside", "expected true or false");
      else e.inside = v->get<bool>();
    }
    if (e.lower.size() != e.statistic.size() || e.upper.size() != e.statistic.size())
      rd.error(ptr, "box needs one lower and one upper bound per row of S");
    for (std::size_t d = 0; d < std::min(e.lower.size(), e.upper.size()); ++d)
      if (e.lower[d] > e.upper[d]) rd.error(ptr + "/lower/" + std::to_string(d), "lower bound exceeds upper bound");
  } else {
    rd.error(ptr + "/kind", "unknown event kind '" + e.kind + "' (expected freq_dev, box, bigram, always, never)");
  }
  return e;
}

}  // namespace detail

/// Parses and structurally validates a config; semantic checks live in validate_config.
inline RunConfig parse_config_text(const std::string& text, std::vector<Diagnostic>& diags) {
  RunConfig cfg;
  cfg.text = text;
  LineIndex lines(text);
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    diags.push_back({Diagnostic::Severity::error, "", lines.line_at_offset(e.byte == 0 ? 0 : e.byte - 1),
                     std::string("malformed JSON: ") + e.what()});
    return cfg;
  }
  detail::ConfigReader rd(lines, diags);
  if (!root.is_object()) {
    rd.error("", "top level must be an object");
    return cfg;
  }
  cfg.name = rd.string_field(root, "", "name", false, "experiment");
  cfg.output_dir = rd.string_field(root, "", "output_dir", false, "");
  const std::string mode = rd.string_field(root, "", "mode", false, "float");
  if (mode == "float") cfg.mode = ArithmeticMode::float64;
  else if (mode == "rational") cfg.mode = ArithmeticMode::rational;
  else rd.error("/mode", "mode must be 'float' or 'rational'");
  if (const Json* b = rd.field(root, "", "cell_budget", false))
    if (auto v = rd.integer(*b, "/cell_budget", 1)) cfg.cell_budget = static_cast<std::uint64_t>(*v);

  if (const Json* p = rd.field(root, "", "problem", true)) {
    if (const Json* o = rd.field(*p, "/problem", "outcomes", true)) {
      if (!o->is_array()) rd.error("/problem/outcomes", "expected an array of labels");
      else
        for (std::size_t i = 0; i < o->size(); ++i) {
          const auto& v = (*o)[i];
          if (v.is_string()) cfg.problem.outcomes.push_back(v.get<std::string>());
          else if (v.is_number_integer()) cfg.problem.outcomes.push_back(std::to_string(v.get<std::int64_t>()));
          else rd.error("/problem/outcomes/" + std::to_string(i), "labels must be strings");
        }
    }
    const std::size_t size = cfg.problem.outcomes.size();
    if (const Json* q = rd.field(*p, "/problem", "prior", false)) {
      cfg.problem.prior = rd.rational_list(*q, "/problem/prior");
      const std::size_t got = q->is_array() ? q->size() : cfg.problem.prior.size();
      if (got != size)
        rd.error("/problem/prior", "expected " + std::to_string(size) + " weights, got " + std::to_string(got));
    } else {
      cfg.problem.prior.assign(size, Rational(1));
    }
    if (const Json* t = rd.field(*p, "/problem", "T", true)) {
      if (!t->is_array() || t->empty()) rd.error("/problem/T", "expected a non-empty array of rows (one per coordinate)");
      else
        for (std::size_t j = 0; j < t->size(); ++j) {
          const std::string ptr = "/problem/T/" + std::to_string(j);
          auto row = rd.rational_list((*t)[j], ptr);
          const std::size_t got = (*t)[j].is_array() ? (*t)[j].size() : row.size();
          if (got != size)
            rd.error(ptr, "row has " + std::to_string(got) + " values, expected one per outcome (" +
                              std::to_string(size) + ")");
          cfg.problem.statistic.push_back(std::move(row));
        }
    }
    if (const Json* t = rd.field(*p, "/problem", "target", true)) {
      cfg.problem.target = rd.rational_list(*t, "/problem/target");
      const std::size_t got = t->is_array() ? t->size() : cfg.problem.target.size();
      if (got != cfg.problem.statistic.size())
        rd.error("/problem/target", "target has " + std::to_string(got) +
                                        " coordinates but T has " + std::to_string(cfg.problem.statistic.size()) +
                                        " rows");
    }
  }

  if (const Json* ex = rd.field(root, "", "experiments", false)) {
    if (!ex->is_array()) {
      rd.error("/experiments", "expected an array");
      return cfg;
    }
    std::map<std::string, std::size_t> tags;
    for (std::size_t i = 0; i < ex->size(); ++i) {
      const std::string ptr = "/experiments/" + std::to_string(i);
      const Json& e = (*ex)[i];
      if (!e.is_object()) {
        rd.error(ptr, "experiment must be an object");
        continue;
      }
      ExperimentConfig ec;
      ec.pointer = ptr;
      ec.type = rd.string_field(e, ptr, "type", true);
      ec.tag = rd.string_field(e, ptr, "tag", false, std::to_string(i) + "_" + ec.type);
      if (!tags.emplace(ec.tag, i).second) rd.error(ptr + "/tag", "duplicate experiment tag '" + ec.tag + "'");
      for (char ch : ec.tag)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-')) {
          rd.error(ptr + "/tag", "tags may only contain letters, digits, '_' and '-'");
          break;
        }
      if (ec.type == "solve") {
        ec.body = SolveBlock{};
      } else if (ec.type == "concentrate") {
        ConcentrateBlock b;
        if (const Json* v = rd.field(e, ptr, "n_list", true)) b.n_list = rd.n_list(*v, ptr + "/n_list");
        if (const Json* v = rd.field(e, ptr, "events", false)) {
          if (!v->is_array()) rd.error(ptr + "/events", "expected an array");
          else
            for (std::size_t k = 0; k < v->size(); ++k)
              b.events.push_back(detail::read_event(rd, (*v)[k], ptr + "/events/" + std::to_string(k)));
        }
        ec.body = std::move(b);
      } else if (ec.type == "condlimit") {
        CondlimitBlock b;
        if (const Json* v = rd.field(e, ptr, "m", false))
          if (auto m = rd.integer(*v, ptr + "/m", 1)) b.m = *m;
        if (const Json* v = rd.field(e, ptr, "n_list", true)) b.n_list = rd.n_list(*v, ptr + "/n_list");
        for (auto n : b.n_list)
          if (n <= b.m) rd.error(ptr + "/n_list", "every n must exceed m");
        ec.body = std::move(b);
      } else if (ec.type == "corollary1") {
        Corollary1Block b;
        if (const Json* v = rd.field(e, ptr, "n_list", true)) b.n_list = rd.n_list(*v, ptr + "/n_list");
        ec.body = std::move(b);
      } else if (ec.type == "game") {
        GameBlock b;
        if (const Json* v = rd.field(e, ptr, "predictors", true)) {
          if (!v->is_array()) rd.error(ptr + "/predictors", "expected an array");
          else
            for (std::size_t k = 0; k < v->size(); ++k) {
              const auto& pv = (*v)[k];
              static const std::vector<std::string> known{"maxent", "prior", "conditioned", "mixture", "renewal"};
              if (!pv.is_string() || std::find(known.begin(), known.end(), pv.get<std::string>()) == known.end())
                rd.error(ptr + "/predictors/" + std::to_string(k),
                         "unknown predictor (expected maxent, prior, conditioned, mixture, renewal)");
              else b.predictors.push_back(pv.get<std::string>());
            }
        }
        if (const Json* v = rd.field(e, ptr, "n_list", true)) b.n_list = rd.n_list(*v, ptr + "/n_list");
        if (const Json* v = rd.field(e, ptr, "J_max", false))
          if (auto j = rd.integer(*v, ptr + "/J_max", 1)) b.j_max = static_cast<std::size_t>(*j);
        if (const Json* v = rd.field(e, ptr, "components", false))
          if (auto j = rd.integer(*v, ptr + "/components", 1)) b.components = static_cast<std::size_t>(*j);
        if (b.components > b.j_max) rd.error(ptr + "/components", "components cannot exceed J_max");
        if (const Json* v = rd.field(e, ptr, "alpha", false))
          if (auto a = rd.rational(*v, ptr + "/alpha")) {
            b.alpha = *a;
            if (b.alpha <= 0 || b.alpha >= 1) rd.error(ptr + "/alpha", "alpha must lie strictly between 0 and 1");
          }
        if (const Json* v = rd.field(e, ptr, "gap_n_max", false))
          if (auto g = rd.integer(*v, ptr + "/gap_n_max", 1)) b.gap_n_max = *g;
        ec.body = std::move(b);
      } else if (ec.type == "recur") {
        RecurBlock b;
        if (const Json* v = rd.field(e, ptr, "steps", true))
          if (auto s = rd.integer(*v, ptr + "/steps", 0)) b.steps = *s;
        if (const Json* v = rd.field(e, ptr, "reps", true))
          if (auto r = rd.integer(*v, ptr + "/reps", 1)) b.reps = *r;
        if (auto s = rd.seed(e, ptr)) b.seed = *s;
        if (const Json* v = rd.field(e, ptr, "checkpoints", false)) {
          b.checkpoints = rd.n_list(*v, ptr + "/checkpoints");
          for (auto cp : b.checkpoints)
            if (cp > b.steps) rd.error(ptr + "/checkpoints", "checkpoints cannot exceed steps");
        }
        if (b.checkpoints.empty() || b.checkpoints.back() != b.steps) b.checkpoints.push_back(b.steps);
        ec.body = std::move(b);
      } else if (ec.type == "hypercomp") {
        HypercompBlock b;
        if (const Json* v = rd.field(e, ptr, "K", true)) {
          for (const auto& r : rd.rational_list(*v, ptr + "/K")) {
            if (r <= 0) rd.error(ptr + "/K", "every K must be positive");
            b.K.push_back(to_double(r));
          }
        }
        if (const Json* v = rd.field(e, ptr, "samples", true))
          if (auto s = rd.integer(*v, ptr + "/samples", 1)) b.samples = *s;
        if (const Json* v = rd.field(e, ptr, "n", true))
          if (auto s = rd.integer(*v, ptr + "/n", 1)) b.n = *s;
        if (auto s = rd.seed(e, ptr)) b.seed = *s;
        b.base = rd.string_field(e, ptr, "base", false, "maxent");
        b.challenger = rd.string_field(e, ptr, "challenger", false, "prior");
        for (const auto& [key, val] : {std::pair{"base", b.base}, {"challenger", b.challenger}}) {
          static const std::vector<std::string> known{"maxent", "prior", "conditioned", "mixture"};
          if (std::find(known.begin(), known.end(), val) == known.end())
            rd.error(ptr + "/" + key, "unknown predictor '" + val + "' (expected maxent, prior, conditioned, mixture)");
        }
        if (const Json* v = rd.field(e, ptr, "components", false))
          if (auto j = rd.integer(*v, ptr + "/components", 1)) b.components = static_cast<std::size_t>(*j);
        ec.body = std::move(b);
      } else if (!ec.type.empty()) {
        rd.error(ptr + "/type", "unknown experiment type '" + ec.type +
                                    "' (expected solve, concentrate, condlimit, corollary1, game, recur, hypercomp)");
        continue;
      }
      cfg.experiments.push_back(std::move(ec));
    }
  }
  return cfg;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::config, "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace maxent_lab
