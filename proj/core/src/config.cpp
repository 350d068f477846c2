#include "pinn/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>
#include <vector>

namespace pinn {

ConfigError::ConfigError(std::string source, int line, std::string field,
                         const std::string& message)
    : UsageError(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                 (field.empty() ? std::string() : ": " + field) + ": " + message),
      source_(std::move(source)),
      line_(line),
      field_(std::move(field)) {}

namespace {

using Array = std::vector<double>;
using Value = std::variant<double, bool, std::string, Array>;

struct Entry {
  Value value;
  int line = 0;
  bool integral = false;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

bool parse_number(std::string_view s, double& out, bool& integral) {
  std::string clean;
  for (char c : s) {
    if (c != '_') clean.push_back(c);
  }
  if (clean.empty()) return false;
  if (clean.front() == '+') clean.erase(0, 1);
  integral = clean.find_first_of(".eEn") == std::string::npos;
  const char* end = clean.data() + clean.size();
  auto [ptr, ec] = std::from_chars(clean.data(), end, out);
  return ec == std::errc() && ptr == end;
}

class Parser {
 public:
  Parser(std::string_view text, std::string source) : source_(std::move(source)) {
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      std::string_view s = trim(strip_comment(raw));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') fail(line, "", "unterminated section header");
        section = std::string(trim(s.substr(1, s.size() - 2)));
        if (!kSections.contains(section)) fail(line, section, "unknown section");
        if (!seen_sections_.insert(section).second) fail(line, section, "duplicate section");
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string_view::npos) fail(line, "", "expected 'key = value'");
      const std::string key(trim(s.substr(0, eq)));
      if (key.empty()) fail(line, "", "missing key");
      if (section.empty()) fail(line, key, "key outside of a section");
      const std::string field = section + "." + key;
      if (!kKeys.contains(field)) fail(line, field, "unknown key");
      if (entries_.contains(field)) fail(line, field, "duplicate key");
      entries_[field] = parse_value(trim(s.substr(eq + 1)), line, field);
    }
  }

  bool has(const std::string& field) const { return entries_.contains(field); }

  [[noreturn]] void fail(int line, const std::string& field, const std::string& message) const {
    throw ConfigError(source_, line, field, message);
  }

  int line_of(const std::string& field) const {
    auto it = entries_.find(field);
    return it == entries_.end() ? 0 : it->second.line;
  }

  double number(const std::string& field) const {
    const Entry& e = entries_.at(field);
    if (const double* d = std::get_if<double>(&e.value)) return *d;
    fail(e.line, field, "expected a number");
  }

  long long integer(const std::string& field) const {
    const Entry& e = entries_.at(field);
    const double* d = std::get_if<double>(&e.value);
    if (d == nullptr || !e.integral) fail(e.line, field, "expected an integer");
    return static_cast<long long>(*d);
  }

  bool boolean(const std::string& field) const {
    const Entry& e = entries_.at(field);
    if (const bool* b = std::get_if<bool>(&e.value)) return *b;
    fail(e.line, field, "expected true or false");
  }

  std::string string(const std::string& field) const {
    const Entry& e = entries_.at(field);
    if (const std::string* s = std::get_if<std::string>(&e.value)) return *s;
    fail(e.line, field, "expected a quoted string");
  }

  std::vector<int> int_array(const std::string& field) const {
    const Entry& e = entries_.at(field);
    const Array* a = std::get_if<Array>(&e.value);
    if (a == nullptr) fail(e.line, field, "expected an array of integers");
    std::vector<int> out;
    for (double v : *a) {
      if (v != static_cast<int>(v)) fail(e.line, field, "expected an array of integers");
      out.push_back(static_cast<int>(v));
    }
    return out;
  }

  template <class T, class Get>
  void maybe(const std::string& field, T& target, Get get) const {
    if (has(field)) target = static_cast<T>((this->*get)(field));
  }

 private:
  Entry parse_value(std::string_view s, int line, const std::string& field) {
    Entry e;
    e.line = line;
    if (s.empty()) fail(line, field, "missing value");
    if (s.front() == '"') {
      if (s.size() < 2 || s.back() != '"') fail(line, field, "unterminated string");
      e.value = std::string(s.substr(1, s.size() - 2));
    } else if (s == "true" || s == "false") {
      e.value = (s == "true");
    } else if (s.front() == '[') {
      if (s.back() != ']') fail(line, field, "unterminated array");
      Array a;
      std::string_view body = s.substr(1, s.size() - 2);
      while (!trim(body).empty()) {
        const auto comma = body.find(',');
        std::string_view item = trim(body.substr(0, comma));
        if (!item.empty()) {
          double v = 0.0;
          bool integral = false;
          if (!parse_number(item, v, integral)) fail(line, field, "bad array element");
          a.push_back(v);
        }
        if (comma == std::string_view::npos) break;
        body = body.substr(comma + 1);
      }
      e.value = std::move(a);
    } else {
      double v = 0.0;
      if (!parse_number(s, v, e.integral)) fail(line, field, "cannot parse '" + std::string(s) + "'");
      e.value = v;
    }
    return e;
  }

  inline static const std::set<std::string> kSections = {"problem", "network", "optimizer",
                                                         "sampling", "loss", "run"};
  inline static const std::set<std::string> kKeys = {
      "problem.kind",           "problem.omega0",         "problem.mass",
      "problem.friction",       "problem.t_end",          "problem.c",
      "network.layers",         "optimizer.kind",         "optimizer.adam_epochs",
      "optimizer.lbfgs_epochs", "optimizer.learning_rate", "optimizer.beta1",
      "optimizer.beta2",        "optimizer.epsilon",      "optimizer.memory",
      "optimizer.initial_step", "optimizer.c1",           "optimizer.c2",
      "optimizer.max_trials",   "sampling.scheme",        "sampling.n_interior",
      "sampling.n_spatial_boundary", "sampling.n_temporal_boundary", "sampling.skip",
      "loss.w_f",               "loss.w_i",               "loss.w_b",
      "loss.c_t",               "run.max_epochs",         "run.target_loss",
      "run.seed",               "run.l2_every",           "run.timing",
      "run.threads"};

  std::string source_;
  std::set<std::string> seen_sections_;
  std::map<std::string, Entry> entries_;
};

TrainConfig problem_defaults(const Parser& p) {
  if (!p.has("problem.kind")) p.fail(0, "problem.kind", "missing required key");
  const std::string kind = p.string("problem.kind");
  if (kind == "shm") {
    if (!p.has("problem.omega0")) p.fail(0, "problem.omega0", "missing required key");
    if (p.has("problem.c")) p.fail(p.line_of("problem.c"), "problem.c", "not used by the oscillator");
    TrainConfig cfg = TrainConfig::shm_default(20.0);
    ShmParams params;
    const double omega0 = p.number("problem.omega0");
    p.maybe("problem.mass", params.mass, &Parser::number);
    p.maybe("problem.friction", params.friction, &Parser::number);
    p.maybe("problem.t_end", params.t_end, &Parser::number);
    params.stiffness = params.mass * omega0 * omega0;
    try {
      params.validate();
    } catch (const DomainError& e) {
      p.fail(p.line_of("problem.omega0"), "problem", e.what());
    }
    cfg.problem = ProblemSpec{params};
    return cfg;
  }
  if (kind == "wave") {
    if (!p.has("problem.c")) p.fail(0, "problem.c", "missing required key");
    for (const char* k : {"problem.omega0", "problem.mass", "problem.friction", "problem.t_end"}) {
      if (p.has(k)) p.fail(p.line_of(k), k, "not used by the wave problem");
    }
    const double c = p.number("problem.c");
    if (!(c > 0.0)) p.fail(p.line_of("problem.c"), "problem.c", "must be positive");
    return TrainConfig::wave_default(c);
  }
  p.fail(p.line_of("problem.kind"), "problem.kind", "expected \"shm\" or \"wave\"");
}

SamplingScheme parse_scheme(const Parser& p) {
  const std::string s = p.string("sampling.scheme");
  if (s == "sobol") return SamplingScheme::kSobol;
  if (s == "equidistant") return SamplingScheme::kEquidistant;
  p.fail(p.line_of("sampling.scheme"), "sampling.scheme", "expected \"sobol\" or \"equidistant\"");
}

}  // namespace

TrainConfig parse_config(std::string_view text, const std::string& source) {
  const Parser p(text, source);
  TrainConfig cfg = problem_defaults(p);

  if (p.has("network.layers")) cfg.layer_dims = p.int_array("network.layers");

  OptimizerConfig& o = cfg.optimizer;
  if (p.has("optimizer.kind")) {
    try {
      o.kind = parse_optimizer(p.string("optimizer.kind"));
    } catch (const ConfigError&) {
      throw;
    } catch (const UsageError& e) {
      p.fail(p.line_of("optimizer.kind"), "optimizer.kind", e.what());
    }
  }
  p.maybe("optimizer.adam_epochs", o.adam_epochs, &Parser::integer);
  p.maybe("optimizer.lbfgs_epochs", o.lbfgs_epochs, &Parser::integer);
  p.maybe("optimizer.learning_rate", o.adam.learning_rate, &Parser::number);
  p.maybe("optimizer.beta1", o.adam.beta1, &Parser::number);
  p.maybe("optimizer.beta2", o.adam.beta2, &Parser::number);
  p.maybe("optimizer.epsilon", o.adam.epsilon, &Parser::number);
  p.maybe("optimizer.memory", o.lbfgs.memory, &Parser::integer);
  p.maybe("optimizer.initial_step", o.lbfgs.initial_step, &Parser::number);
  p.maybe("optimizer.c1", o.lbfgs.c1, &Parser::number);
  p.maybe("optimizer.c2", o.lbfgs.c2, &Parser::number);
  p.maybe("optimizer.max_trials", o.lbfgs.max_trials, &Parser::integer);

  if (p.has("sampling.scheme")) cfg.plan.scheme = parse_scheme(p);
  p.maybe("sampling.n_interior", cfg.plan.n_interior, &Parser::integer);
  p.maybe("sampling.n_spatial_boundary", cfg.plan.n_spatial_boundary, &Parser::integer);
  p.maybe("sampling.n_temporal_boundary", cfg.plan.n_temporal_boundary, &Parser::integer);
  if (p.has("sampling.skip")) {
    const long long skip = p.integer("sampling.skip");
    if (skip < 0) p.fail(p.line_of("sampling.skip"), "sampling.skip", "must be >= 0");
    cfg.plan.skip = static_cast<std::uint64_t>(skip);
  }

  p.maybe("loss.w_f", cfg.weights.w_f, &Parser::number);
  p.maybe("loss.w_i", cfg.weights.w_i, &Parser::number);
  p.maybe("loss.w_b", cfg.weights.w_b, &Parser::number);
  p.maybe("loss.c_t", cfg.weights.temporal_decay, &Parser::number);

  p.maybe("run.max_epochs", cfg.max_epochs, &Parser::integer);
  p.maybe("run.target_loss", cfg.target_loss, &Parser::number);
  if (p.has("run.seed")) {
    const long long seed = p.integer("run.seed");
    if (seed < 0) p.fail(p.line_of("run.seed"), "run.seed", "must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }
  p.maybe("run.l2_every", cfg.l2_every, &Parser::integer);
  p.maybe("run.timing", cfg.record_wall_time, &Parser::boolean);
  p.maybe("run.threads", cfg.threads, &Parser::integer);

  if (o.kind == OptimizerKind::kHybrid && !p.has("run.max_epochs") &&
      (p.has("optimizer.adam_epochs") || p.has("optimizer.lbfgs_epochs"))) {
    cfg.max_epochs = o.adam_epochs + o.lbfgs_epochs;
  }

  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    p.fail(0, "", e.what());
  }
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

}  // namespace pinn
