#include "tilt_cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace tilt::cli {

ConfigError::ConfigError(int line, std::string field, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", field '" + field + "': " +
                                        message
                                  : "field '" + field + "': " + message),
      line_(line),
      field_(std::move(field)) {}

namespace {

const std::map<std::string, Command>& command_names() {
  static const std::map<std::string, Command> names = {
      {"solve", Command::Solve},         {"estimate", Command::Estimate},
      {"table2", Command::Table2},       {"table3", Command::Table3},
      {"var", Command::Var},             {"var-quantile", Command::VarQuantile},
      {"bootstrap", Command::Bootstrap}, {"coverage", Command::Coverage},
  };
  return names;
}

const std::map<std::string, std::vector<std::string>>& family_keys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"normal", {"sigma"}},
      {"exp1", {}},
      {"chi2", {"kappa"}},
      {"gamma", {"alpha", "beta"}},
      {"ncchi2", {"kappa", "lambda"}},
      {"binomial", {"size", "prob"}},
      {"poisson", {"lambda"}},
      {"uniform", {}},
      {"compound-poisson", {"lambda", "horizon", "eta", "delta2", "offset"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string qualified(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

struct Field {
  std::string name;
  int line;

  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(line, name, message); }

  double real(const std::string& v) const {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
      fail("expected a number, got '" + v + "'");
    }
    if (!std::isfinite(x)) fail("expected a finite number, got '" + v + "'");
    return x;
  }

  template <typename Int>
  Int integer(const std::string& v) const {
    Int x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
      fail("expected a non-negative integer, got '" + v + "'");
    }
    return x;
  }

  std::vector<double> reals(const std::string& v) const {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(real(trim(item)));
    return out;
  }

  std::string choice(const std::string& v, std::initializer_list<const char*> allowed) const {
    for (const char* a : allowed) {
      if (v == a) return v;
    }
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    fail("expected one of " + list + ", got '" + v + "'");
  }

  bool boolean(const std::string& v) const {
    if (v == "true") return true;
    if (v == "false") return false;
    fail("expected true or false, got '" + v + "'");
  }

  std::vector<CoverageDesign> designs(const std::string& v) const {
    std::vector<CoverageDesign> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      const auto colon = item.find(':');
      if (colon == std::string::npos) fail("expected naive:B or importance:B, got '" + item + "'");
      const std::string kind = choice(item.substr(0, colon), {"naive", "importance"});
      out.push_back({kind == "importance", integer<std::uint64_t>(item.substr(colon + 1))});
    }
    return out;
  }
};

std::string fmt(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string fmt(const std::vector<double>& xs) {
  std::string s;
  for (double x : xs) s += (s.empty() ? "" : ", ") + fmt(x);
  return s;
}

}  // namespace

const char* to_string(Command c) noexcept {
  for (const auto& [name, cmd] : command_names()) {
    if (cmd == c) return name.c_str();
  }
  return "?";
}

const char* to_string(Format f) noexcept { return f == Format::Csv ? "csv" : "markdown"; }

void set_field(RunConfig& cfg, const std::string& section, const std::string& key,
               const std::string& raw, int line) {
  const Field f{qualified(section, key), line};
  const std::string v = trim(raw);
  auto unknown = [&]() { f.fail("unknown key"); };

  if (section.empty()) {
    if (key == "command") {
      const auto it = command_names().find(v);
      if (it == command_names().end()) f.fail("unknown command '" + v + "'");
      cfg.command = it->second;
    } else if (key == "seed") {
      cfg.seed = f.integer<std::uint64_t>(v);
    } else if (key == "out") {
      cfg.out = v;
    } else if (key == "format") {
      cfg.format = f.choice(v, {"csv", "markdown"}) == "csv" ? Format::Csv : Format::Markdown;
    } else {
      unknown();
    }
  } else if (section == "family") {
    FamilyConfig& c = cfg.family;
    if (key == "name") {
      if (!family_keys().contains(v)) f.fail("unknown family '" + v + "'");
      c.name = v;
    } else if (key == "sigma") c.sigma = f.real(v);
    else if (key == "kappa") c.kappa = f.real(v);
    else if (key == "lambda") c.lambda = f.real(v);
    else if (key == "alpha") c.alpha = f.real(v);
    else if (key == "beta") c.beta = f.real(v);
    else if (key == "size") c.size = f.integer<std::int64_t>(v);
    else if (key == "prob") c.prob = f.real(v);
    else if (key == "horizon") c.horizon = f.real(v);
    else if (key == "eta") c.eta = f.real(v);
    else if (key == "delta2") c.delta2 = f.real(v);
    else if (key == "offset") c.offset = f.real(v);
    else unknown();
  } else if (section == "event") {
    EventConfig& c = cfg.event;
    if (key == "a") c.a = f.real(v);
    else if (key == "tail") c.tail = f.choice(v, {"upper", "lower", "two-sided"});
    else if (key == "lower") c.lower = f.real(v);
    else if (key == "p") c.p = f.reals(v);
    else if (key == "r_p") c.r_p = f.reals(v);
    else unknown();
  } else if (section == "sampling") {
    SamplingConfig& c = cfg.sampling;
    if (key == "method") c.method = f.choice(v, {"naive", "is", "both", "two-sided"});
    else if (key == "n") c.n = f.integer<std::uint64_t>(v);
    else if (key == "k") c.k = f.integer<std::uint64_t>(v);
    else if (key == "M") c.M = f.integer<std::uint64_t>(v);
    else if (key == "B") c.B = f.integer<std::uint64_t>(v);
    else if (key == "m") c.m = f.integer<std::uint64_t>(v);
    else if (key == "workers") c.workers = f.integer<unsigned>(v);
    else unknown();
  } else if (section == "solver") {
    SolverSection& c = cfg.solver;
    if (key == "tol") c.tol = f.real(v);
    else if (key == "max_iter") c.max_iter = f.integer<int>(v);
    else if (key == "initial") c.initial = f.real(v);
    else unknown();
  } else if (section == "portfolio") {
    PortfolioConfig& c = cfg.portfolio;
    if (key == "b") c.b = f.reals(v);
    else if (key == "lambdas") c.lambdas = f.reals(v);
    else if (key == "a1") c.a1 = f.reals(v);
    else if (key == "mu") c.mu = f.reals(v);
    else if (key == "sigma") c.sigma = f.reals(v);
    else if (key == "delta") c.delta = f.reals(v);
    else if (key == "eta") c.eta = f.reals(v);
    else if (key == "rho") c.rho = f.real(v);
    else if (key == "jump_rho") c.jump_rho = f.real(v);
    else if (key == "jump_intensity") c.jump_intensity = f.real(v);
    else if (key == "dt") c.dt = f.real(v);
    else if (key == "max_steps") c.max_steps = f.integer<int>(v);
    else unknown();
  } else if (section == "regression") {
    RegressionConfig& c = cfg.regression;
    if (key == "dataset") c.dataset = v;
    else if (key == "p") c.p = f.integer<int>(v);
    else if (key == "divisor") c.divisor = f.choice(v, {"n-1", "n-p", "n"});
    else if (key == "family") c.family = f.choice(v, {"normal", "chi-square"});
    else if (key == "nominal") c.nominal = f.real(v);
    else if (key == "trials") c.trials = f.integer<std::uint64_t>(v);
    else if (key == "designs") c.designs = f.designs(v);
    else unknown();
  } else {
    throw ConfigError(line, section, "unknown section");
  }
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::set<std::string> seen;
  std::map<std::string, int> family_lines;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(line, s, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      static const std::set<std::string> sections = {"family", "event",     "sampling",
                                                     "solver", "portfolio", "regression"};
      if (!sections.contains(section)) throw ConfigError(line, section, "unknown section");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(line, s, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError(line, s, "missing key");
    const std::string name = qualified(section, key);
    if (!seen.insert(name).second) throw ConfigError(line, name, "duplicate key");
    set_field(cfg, section, key, s.substr(eq + 1), line);
    if (section == "family" && key != "name") family_lines[key] = line;
  }
  const auto& allowed = family_keys().at(cfg.family.name);
  for (const auto& [key, at] : family_lines) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(at, "family." + key, "not a parameter of family " + cfg.family.name);
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "config", "cannot read " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string serialize(const RunConfig& cfg) {
  std::ostringstream os;
  os << "command = " << to_string(cfg.command) << "\n";
  os << "seed = " << cfg.seed << "\n";
  if (!cfg.out.empty()) os << "out = " << cfg.out << "\n";
  os << "format = " << to_string(cfg.format) << "\n";

  const FamilyConfig& f = cfg.family;
  os << "\n[family]\nname = " << f.name << "\n";
  for (const auto& key : family_keys().at(f.name)) {
    os << key << " = ";
    if (key == "sigma") os << fmt(f.sigma);
    else if (key == "kappa") os << fmt(f.kappa);
    else if (key == "lambda") os << fmt(f.lambda);
    else if (key == "alpha") os << fmt(f.alpha);
    else if (key == "beta") os << fmt(f.beta);
    else if (key == "size") os << f.size;
    else if (key == "prob") os << fmt(f.prob);
    else if (key == "horizon") os << fmt(f.horizon);
    else if (key == "eta") os << fmt(f.eta);
    else if (key == "delta2") os << fmt(f.delta2);
    else if (key == "offset") os << fmt(f.offset);
    os << "\n";
  }

  const EventConfig& e = cfg.event;
  os << "\n[event]\n";
  if (e.a) os << "a = " << fmt(*e.a) << "\n";
  os << "tail = " << e.tail << "\n";
  if (e.lower) os << "lower = " << fmt(*e.lower) << "\n";
  if (!e.p.empty()) os << "p = " << fmt(e.p) << "\n";
  if (!e.r_p.empty()) os << "r_p = " << fmt(e.r_p) << "\n";

  const SamplingConfig& s = cfg.sampling;
  os << "\n[sampling]\nmethod = " << s.method << "\nn = " << s.n << "\nk = " << s.k
     << "\nM = " << s.M << "\nB = " << s.B << "\nm = " << s.m << "\nworkers = " << s.workers
     << "\n";

  os << "\n[solver]\ntol = " << fmt(cfg.solver.tol) << "\nmax_iter = " << cfg.solver.max_iter
     << "\n";
  if (cfg.solver.initial) os << "initial = " << fmt(*cfg.solver.initial) << "\n";

  const PortfolioConfig& p = cfg.portfolio;
  os << "\n[portfolio]\n";
  const std::pair<const char*, const std::vector<double>*> vectors[] = {
      {"b", &p.b},         {"lambdas", &p.lambdas}, {"a1", &p.a1},  {"mu", &p.mu},
      {"sigma", &p.sigma}, {"delta", &p.delta},     {"eta", &p.eta}};
  for (const auto& [key, vec] : vectors) {
    if (!vec->empty()) os << key << " = " << fmt(*vec) << "\n";
  }
  os << "rho = " << fmt(p.rho) << "\njump_rho = " << fmt(p.jump_rho)
     << "\njump_intensity = " << fmt(p.jump_intensity) << "\ndt = " << fmt(p.dt)
     << "\nmax_steps = " << p.max_steps << "\n";

  const RegressionConfig& r = cfg.regression;
  os << "\n[regression]\ndataset = " << r.dataset << "\np = " << r.p << "\ndivisor = " << r.divisor
     << "\nfamily = " << r.family << "\nnominal = " << fmt(r.nominal) << "\ntrials = " << r.trials
     << "\n";
  if (!r.designs.empty()) {
    os << "designs = ";
    for (std::size_t i = 0; i < r.designs.size(); ++i) {
      os << (i ? ", " : "") << (r.designs[i].importance ? "importance:" : "naive:")
         << r.designs[i].B;
    }
    os << "\n";
  }
  return os.str();
}

namespace {

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(0, field, message);
}

void require_probabilities(const std::vector<double>& ps, const std::string& field) {
  require(!ps.empty(), field, "at least one value is required");
  for (double p : ps) require(p > 0.0 && p < 1.0, field, "values must lie in (0, 1)");
}

}  // namespace

void validate(const RunConfig& cfg) {
  require(cfg.solver.tol > 0.0, "solver.tol", "must be positive");
  require(cfg.solver.max_iter >= 1, "solver.max_iter", "must be at least 1");
  const SamplingConfig& s = cfg.sampling;
  const EventConfig& e = cfg.event;

  switch (cfg.command) {
    case Command::Solve:
      require(e.a.has_value(), "event.a", "required by solve");
      require(e.tail != "two-sided", "event.tail", "solve takes a one-sided event");
      break;
    case Command::Estimate:
      require(e.a.has_value(), "event.a", "required by estimate");
      require(s.n > 0, "sampling.n", "must be positive");
      if (s.method == "two-sided" || e.tail == "two-sided") {
        require(s.method == "two-sided" && e.tail == "two-sided", "sampling.method",
                "two-sided sampling needs event.tail = two-sided and vice versa");
      }
      break;
    case Command::Table2:
    case Command::Table3:
      require_probabilities(e.p, "event.p");
      require(s.n > 0, "sampling.n", "must be positive");
      if (cfg.command == Command::Table3) {
        require(cfg.family.name == "ncchi2", "family.name", "table3 needs family ncchi2");
      }
      break;
    case Command::Var:
    case Command::VarQuantile: {
      const PortfolioConfig& p = cfg.portfolio;
      const std::size_t d = p.b.size();
      require(d > 0, "portfolio.b", "required");
      require(p.lambdas.size() == d, "portfolio.lambdas", "needs one value per factor");
      require(p.a1.size() == d, "portfolio.a1", "needs one value per factor");
      require(p.sigma.size() == d, "portfolio.sigma", "needs one value per factor");
      require(p.mu.empty() || p.mu.size() == d, "portfolio.mu", "needs one value per factor");
      require(p.delta.size() == d, "portfolio.delta", "needs one value per factor");
      require(p.eta.empty() || p.eta.size() == d, "portfolio.eta", "needs one value per factor");
      require(p.dt > 0.0, "portfolio.dt", "must be positive");
      require(p.jump_intensity >= 0.0, "portfolio.jump_intensity", "must be non-negative");
      require(s.k > 0, "sampling.k", "must be positive");
      require(s.M > 1, "sampling.M", "must be at least 2");
      require(s.m > 0, "sampling.m", "must be positive");
      if (cfg.command == Command::Var) {
        require(!e.r_p.empty(), "event.r_p", "at least one value is required");
      } else {
        require_probabilities(e.p, "event.p");
        require(p.max_steps >= 1, "portfolio.max_steps", "must be at least 1");
      }
      break;
    }
    case Command::Bootstrap:
      require_probabilities(e.p, "event.p");
      require(s.B > 0, "sampling.B", "must be positive");
      require(s.M > 1, "sampling.M", "must be at least 2");
      require(cfg.regression.p >= 0, "regression.p", "must be non-negative");
      break;
    case Command::Coverage:
      require(cfg.regression.nominal > 0.0 && cfg.regression.nominal < 1.0, "regression.nominal",
              "must lie in (0, 1)");
      require(cfg.regression.trials > 0, "regression.trials", "must be positive");
      require(!cfg.regression.designs.empty(), "regression.designs",
              "at least one design is required");
      break;
  }
}

}  // namespace tilt::cli
