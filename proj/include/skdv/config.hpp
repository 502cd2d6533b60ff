#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "skdv/expr.hpp"
#include "skdv/figures.hpp"
#include "skdv/integrate.hpp"
#include "skdv/io.hpp"
#include "skdv/virial.hpp"

namespace skdv {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class InitialKind { gaussian, soliton, snapshot, expression };
enum class MonitorRegion { none, centered, ray };
enum class VShape { sech2, gaussian };

struct GaussianInit {
  double u_amplitude = 1.0;
  double u_phase = 0.0;
  double u_width = 1.0;
  double u_center = 0.0;
  double u_wavenumber = 0.0;
  double v_amplitude = 1.0;
  double v_width = 1.0;
  double v_center = 0.0;
  VShape v_shape = VShape::sech2;
};

struct SolitonInit {
  double cstar = 1.0;
  double x0 = 0.0;
  bool coupled = true;  // false: pure KdV wave with u = 0
};

struct ExpressionInit {
  std::string u_re = "0";
  std::string u_im = "0";
  std::string v = "0";
};

struct RunConfig {
  // grid
  std::size_t n = 4096;
  double length = 400.0;
  double center = 0.0;
  // model
  ModelParams model{-1.0, 1.0, -1.0};
  // integrator
  IntegratorOptions integrator;
  double t_final = 10.0;
  // initial data
  InitialKind initial = InitialKind::gaussian;
  GaussianInit gaussian;
  SolitonInit soliton;
  std::string snapshot_path;
  ExpressionInit expression;
  // diagnostics
  VirialConfig virial;
  MonitorRegion region = MonitorRegion::centered;
  double K = 1.0;
  double sample_dt = 0.1;
  double t0 = 2.0;
  // output
  std::string out_dir = "out";
  std::size_t checkpoint_every = 0;  // in samples; 0 disables
  std::vector<double> snapshot_times;
  FigureToggles figures;
  bool budgets = true;

  std::optional<RegionSpec> region_spec() const {
    switch (region) {
      case MonitorRegion::centered:
        return RegionSpec::centered(virial.p1, K);
      case MonitorRegion::ray:
        return RegionSpec::ray(virial.p1, virial.m, K);
      case MonitorRegion::none:
        break;
    }
    return std::nullopt;
  }
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

inline double number(const std::string& s) {
  const double v = evaluate_constant(s);
  if (!std::isfinite(v)) throw ConfigError("value '" + s + "' is not finite");
  return v;
}

inline std::size_t count(const std::string& s) {
  const double v = number(s);
  if (v < 0.0 || v != std::floor(v) || v > 1e15) {
    throw ConfigError("value '" + s + "' is not a nonnegative integer");
  }
  return static_cast<std::size_t>(v);
}

inline bool boolean(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "on" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "off" || t == "no" || t == "0") return false;
  throw ConfigError("value '" + s + "' is not a boolean");
}

inline std::vector<double> number_list(const std::string& s) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (auto part : split(s, ',')) out.push_back(number(trim(part)));
  return out;
}

template <class E>
E choice(const std::string& s, std::initializer_list<std::pair<const char*, E>> options) {
  std::string allowed;
  for (const auto& [name, value] : options) {
    if (s == name) return value;
    allowed += (allowed.empty() ? "" : "|") + std::string(name);
  }
  throw ConfigError("value '" + s + "' is not one of " + allowed);
}

inline std::string text(double x) { return format_double(x); }
inline std::string text(bool b) { return b ? "true" : "false"; }
inline std::string text(std::size_t x) { return std::to_string(x); }

struct Key {
  std::string path;
  std::function<void(RunConfig&, const std::string&)> set;
  // nullopt: omitted from the canonical text
  std::function<std::optional<std::string>(const RunConfig&)> get;
};

template <class T>
Key plain(std::string path, T RunConfig::*member) {
  Key k;
  k.path = std::move(path);
  k.set = [member](RunConfig& c, const std::string& s) {
    if constexpr (std::is_same_v<T, double>) {
      c.*member = number(s);
    } else if constexpr (std::is_same_v<T, bool>) {
      c.*member = boolean(s);
    } else if constexpr (std::is_same_v<T, std::size_t>) {
      c.*member = count(s);
    } else {
      c.*member = unquote(s);
    }
  };
  k.get = [member](const RunConfig& c) -> std::optional<std::string> {
    if constexpr (std::is_same_v<T, std::string>) {
      return "\"" + c.*member + "\"";
    } else {
      return text(c.*member);
    }
  };
  return k;
}

// Nested double member reached through an accessor.
template <class Access>
Key nested(std::string path, Access access, std::optional<InitialKind> only = std::nullopt) {
  Key k;
  k.path = std::move(path);
  k.set = [access](RunConfig& c, const std::string& s) { access(c) = number(s); };
  k.get = [access, only](const RunConfig& c) -> std::optional<std::string> {
    if (only && c.initial != *only) return std::nullopt;
    return text(access(c));
  };
  return k;
}

template <class Access>
Key optional_number(std::string path, Access access) {
  Key k;
  k.path = std::move(path);
  k.set = [access](RunConfig& c, const std::string& s) { access(c) = number(s); };
  k.get = [access](const RunConfig& c) -> std::optional<std::string> {
    const auto& v = access(c);
    if (!v) return std::nullopt;
    return text(*v);
  };
  return k;
}

inline Key expression_key(std::string path, std::string ExpressionInit::*member) {
  Key k;
  k.path = std::move(path);
  k.set = [member](RunConfig& c, const std::string& s) {
    const std::string e = unquote(s);
    Expression check(e);  // report syntax errors at parse time
    c.expression.*member = e;
  };
  k.get = [member](const RunConfig& c) -> std::optional<std::string> {
    if (c.initial != InitialKind::expression) return std::nullopt;
    return "\"" + c.expression.*member + "\"";
  };
  return k;
}

inline Key flag(std::string path, bool FigureToggles::*member) {
  Key k;
  k.path = std::move(path);
  k.set = [member](RunConfig& c, const std::string& s) { c.figures.*member = boolean(s); };
  k.get = [member](const RunConfig& c) -> std::optional<std::string> {
    return text(c.figures.*member);
  };
  return k;
}

inline const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> t;
    t.push_back(plain("grid.n", &RunConfig::n));
    t.push_back(plain("grid.length", &RunConfig::length));
    t.push_back(plain("grid.center", &RunConfig::center));

    t.push_back(nested("model.alpha", [](auto& c) -> auto& { return c.model.alpha; }));
    t.push_back(nested("model.beta", [](auto& c) -> auto& { return c.model.beta; }));
    t.push_back(nested("model.gamma", [](auto& c) -> auto& { return c.model.gamma; }));

    t.push_back(nested("integrator.dt", [](auto& c) -> auto& { return c.integrator.dt; }));
    t.push_back(plain("integrator.t_final", &RunConfig::t_final));
    t.push_back(nested("integrator.sponge_width",
                       [](auto& c) -> auto& { return c.integrator.sponge_width; }));
    t.push_back(nested("integrator.sponge_strength",
                       [](auto& c) -> auto& { return c.integrator.sponge_strength; }));
    {
      Key k;
      k.path = "integrator.scheme";
      k.set = [](RunConfig& c, const std::string& s) {
        c.integrator.scheme = choice<Scheme>(s, {{"strang", Scheme::strang}, {"lie", Scheme::lie}});
      };
      k.get = [](const RunConfig& c) -> std::optional<std::string> {
        return to_string(c.integrator.scheme);
      };
      t.push_back(k);
    }
    {
      Key k;
      k.path = "integrator.dealias";
      k.set = [](RunConfig& c, const std::string& s) { c.integrator.dealias = boolean(s); };
      k.get = [](const RunConfig& c) -> std::optional<std::string> {
        return text(c.integrator.dealias);
      };
      t.push_back(k);
    }

    {
      Key k;
      k.path = "initial.kind";
      k.set = [](RunConfig& c, const std::string& s) {
        c.initial = choice<InitialKind>(s, {{"gaussian", InitialKind::gaussian},
                                            {"soliton", InitialKind::soliton},
                                            {"snapshot", InitialKind::snapshot},
                                            {"expression", InitialKind::expression}});
      };
      k.get = [](const RunConfig& c) -> std::optional<std::string> {
        switch (c.initial) {
          case InitialKind::gaussian:
            return "gaussian";
          case InitialKind::soliton:
            return "soliton";
          case InitialKind::snapshot:
            return "snapshot";
          case InitialKind::expression:
            return "expression";
        }
        return std::nullopt;
      };
      t.push_back(k);
    }
    const auto G = InitialKind::gaussian;
    t.push_back(nested("initial.u_amplitude", [](auto& c) -> auto& { return c.gaussian.u_amplitude; }, G));
    t.push_back(nested("initial.u_phase", [](auto& c) -> auto& { return c.gaussian.u_phase; }, G));
    t.push_back(nested("initial.u_width", [](auto& c) -> auto& { return c.gaussian.u_width; }, G));
    t.push_back(nested("initial.u_center", [](auto& c) -> auto& { return c.gaussian.u_center; }, G));
    t.push_back(nested("initial.u_wavenumber", [](auto& c) -> auto& { return c.gaussian.u_wavenumber; }, G));
    t.push_back(nested("initial.v_amplitude", [](auto& c) -> auto& { return c.gaussian.v_amplitude; }, G));
    t.push_back(nested("initial.v_width", [](auto& c) -> auto& { return c.gaussian.v_width; }, G));
    t.push_back(nested("initial.v_center", [](auto& c) -> auto& { return c.gaussian.v_center; }, G));
    {
      Key k;
      k.path = "initial.v_shape";
      k.set = [](RunConfig& c, const std::string& s) {
        c.gaussian.v_shape = choice<VShape>(s, {{"sech2", VShape::sech2}, {"gaussian", VShape::gaussian}});
      };
      k.get = [](const RunConfig& c) -> std::optional<std::string> {
        if (c.initial != InitialKind::gaussian) return std::nullopt;
        return c.gaussian.v_shape == VShape::sech2 ? "sech2" : "gaussian";
      };
      t.push_back(k);
    }
    const auto S = InitialKind::soliton;
    t.push_back(nested("initial.cstar", [](auto& c) -> auto& { return c.soliton.cstar; }, S));
    t.push_back(nested("initial.x0", [](auto& c) -> auto& { return c.soliton.x0; }, S));
    {
      Key k;
      k.path = "initial.soliton";
      k.set = [](RunConfig& c, const std::string& s) {
        c.soliton.coupled = choice<bool>(s, {{"coupled", true}, {"kdv", false}});
      };
      k.get = [](const RunConfig& c) -> std::optional<std::string> {
        if (c.initial != InitialKind::soliton) return std::nullopt;
        return c.soliton.coupled ? "coupled" : "kdv";
      };
      t.push_back(k);
    }
    {
      Key k;
      k.path = "initial.path";
      k.set = [](RunConfig& c, const std::string& s) { c.snapshot_path = unquote(s); };
      k.get = [](const RunConfig& c) -> std::optional<std::string> {
        if (c.initial != InitialKind::snapshot) return std::nullopt;
        return "\"" + c.snapshot_path + "\"";
      };
      t.push_back(k);
    }
    t.push_back(expression_key("initial.u_re", &ExpressionInit::u_re));
    t.push_back(expression_key("initial.u_im", &ExpressionInit::u_im));
    t.push_back(expression_key("initial.v", &ExpressionInit::v));

    t.push_back(nested("virial.p1", [](auto& c) -> auto& { return c.virial.p1; }));
    t.push_back(nested("virial.p2", [](auto& c) -> auto& { return c.virial.p2; }));
    t.push_back(nested("virial.q1", [](auto& c) -> auto& { return c.virial.q1; }));
    t.push_back(optional_number("virial.r1", [](auto& c) -> auto& { return c.virial.r1; }));
    t.push_back(optional_number("virial.r2", [](auto& c) -> auto& { return c.virial.r2; }));
    t.push_back(nested("virial.a", [](auto& c) -> auto& { return c.virial.a; }));
    t.push_back(nested("virial.b", [](auto& c) -> auto& { return c.virial.b; }));
    t.push_back(nested("virial.l", [](auto& c) -> auto& { return c.virial.l; }));
    t.push_back(nested("virial.theta", [](auto& c) -> auto& { return c.virial.theta; }));
    t.push_back(optional_number("virial.mu", [](auto& c) -> auto& { return c.virial.mu; }));
    t.push_back(nested("virial.m", [](auto& c) -> auto& { return c.virial.m; }));

    {
      Key k;
      k.path = "monitor.region";
      k.set = [](RunConfig& c, const std::string& s) {
        c.region = choice<MonitorRegion>(s, {{"none", MonitorRegion::none},
                                             {"centered", MonitorRegion::centered},
                                             {"ray", MonitorRegion::ray}});
      };
      k.get = [](const RunConfig& c) -> std::optional<std::string> {
        switch (c.region) {
          case MonitorRegion::none:
            return "none";
          case MonitorRegion::centered:
            return "centered";
          case MonitorRegion::ray:
            return "ray";
        }
        return std::nullopt;
      };
      t.push_back(k);
    }
    t.push_back(plain("monitor.K", &RunConfig::K));
    t.push_back(plain("monitor.sample_dt", &RunConfig::sample_dt));
    t.push_back(plain("monitor.t0", &RunConfig::t0));

    t.push_back(plain("output.dir", &RunConfig::out_dir));
    t.push_back(plain("output.checkpoint_every", &RunConfig::checkpoint_every));
    {
      Key k;
      k.path = "output.snapshot_times";
      k.set = [](RunConfig& c, const std::string& s) { c.snapshot_times = number_list(s); };
      k.get = [](const RunConfig& c) -> std::optional<std::string> {
        std::string out;
        for (double x : c.snapshot_times) out += (out.empty() ? "" : ", ") + text(x);
        return out;
      };
      t.push_back(k);
    }
    t.push_back(plain("output.budgets", &RunConfig::budgets));
    t.push_back(flag("output.figure_conserved", &FigureToggles::conserved));
    t.push_back(flag("output.figure_budget_j", &FigureToggles::budget_j));
    t.push_back(flag("output.figure_budget_i", &FigureToggles::budget_i));
    t.push_back(flag("output.figure_masses", &FigureToggles::masses));
    return t;
  }();
  return table;
}

inline bool is_multiple(double span, double unit) {
  const double r = span / unit;
  return std::abs(r - std::round(r)) <= 1e-6;
}

}  // namespace config_detail

/// Every constraint violation of a parsed config, each prefixed by its key path.
inline std::vector<std::string> config_violations(const RunConfig& c) {
  std::vector<std::string> out;
  auto fail = [&](const std::string& s) { out.push_back(s); };
  const auto f = [](double x) { return format_double(x); };

  if (c.n < 8 || c.n % 2 != 0) fail("grid.n: must be even and at least 8 (n=" + std::to_string(c.n) + ")");
  if (!(c.length > 0.0)) fail("grid.length: must be positive (length=" + f(c.length) + ")");
  if (!c.model.finite()) fail("model: coefficients must be finite");

  try {
    c.integrator.validate();
  } catch (const InvalidArgument& e) {
    fail(e.what());
  }
  if (!(c.t_final > 0.0)) fail("integrator.t_final: must be positive (t_final=" + f(c.t_final) + ")");
  else if (c.integrator.dt > 0.0 && !config_detail::is_multiple(c.t_final, c.integrator.dt)) {
    fail("integrator.t_final: must be a whole number of steps dt");
  }

  for (auto& v : c.virial.violations()) fail(v);
  if (!c.virial.mu && c.model.alpha == 0.0) {
    fail("virial.mu: default mu = gamma*theta/alpha needs alpha != 0; set virial.mu explicitly");
  }

  if (!(c.K > 0.0)) fail("monitor.K: must be positive (K=" + f(c.K) + ")");
  if (!(c.sample_dt > 0.0)) {
    fail("monitor.sample_dt: must be positive");
  } else if (c.integrator.dt > 0.0 &&
             (c.sample_dt < c.integrator.dt * (1.0 - 1e-9) ||
              !config_detail::is_multiple(c.sample_dt, c.integrator.dt))) {
    fail("monitor.sample_dt: must be a whole multiple of integrator.dt");
  }
  if (!(c.t0 > 1.0)) fail("monitor.t0: accumulation start must exceed 1 (t0=" + f(c.t0) + ")");

  switch (c.initial) {
    case InitialKind::gaussian:
      if (!(c.gaussian.u_width > 0.0)) fail("initial.u_width: must be positive");
      if (!(c.gaussian.v_width > 0.0)) fail("initial.v_width: must be positive");
      break;
    case InitialKind::soliton:
      if (!(c.soliton.cstar > 0.0)) fail("initial.cstar: must be positive");
      if (c.soliton.coupled) {
        if (!(c.model.alpha > -1.0 / 6.0 && c.model.alpha < 0.0)) {
          fail("initial.soliton: coupled profile needs -1/6 < model.alpha < 0");
        } else if (std::abs(c.model.beta + 1.0) > 1e-12 ||
                   std::abs(c.model.gamma - 0.5 * c.model.alpha) > 1e-12 * std::abs(c.model.alpha)) {
          fail("initial.soliton: coupled profile is exact only for model.beta = -1 and "
               "model.gamma = alpha/2");
        }
      }
      break;
    case InitialKind::snapshot:
      if (c.snapshot_path.empty()) fail("initial.path: snapshot path is required");
      break;
    case InitialKind::expression:
      break;
  }

  for (double t : c.snapshot_times) {
    if (!(t >= 0.0 && t <= c.t_final)) {
      fail("output.snapshot_times: " + f(t) + " lies outside [0, t_final]");
    } else if (c.sample_dt > 0.0 && !config_detail::is_multiple(t, c.sample_dt)) {
      fail("output.snapshot_times: " + f(t) + " is not on the sample grid");
    }
  }
  if (c.out_dir.empty()) fail("output.dir: must not be empty");
  return out;
}

inline void validate_config(const RunConfig& c) {
  const auto v = config_violations(c);
  if (v.empty()) return;
  std::string msg;
  for (const auto& s : v) msg += (msg.empty() ? "" : "\n") + s;
  throw ConfigError(msg);
}

/// Parses `section.key = value` lines; '#' starts a comment.
inline RunConfig parse_config(std::string_view text, const std::string& origin = "config") {
  RunConfig c;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto where = origin + ":" + std::to_string(line_no) + ": ";

    // comments: '#' outside of double quotes
    bool quoted = false;
    std::size_t cut = raw.size();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == '"') quoted = !quoted;
      if (raw[i] == '#' && !quoted) {
        cut = i;
        break;
      }
    }
    const std::string line = config_detail::trim(raw.substr(0, cut));
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'section.key = value'");
    const std::string key = config_detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = config_detail::trim(std::string_view(line).substr(eq + 1));
    if (key.find('.') == std::string::npos) {
      throw ConfigError(where + "key '" + key + "' must have the form section.key");
    }
    const auto& table = config_detail::keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& k) { return k.path == key; });
    if (it == table.end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      it->set(c, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  validate_config(c);
  return c;
}

/// Canonical text with every default spelled out.
inline std::string to_text(const RunConfig& c) {
  std::string out;
  std::string section;
  for (const auto& k : config_detail::keys()) {
    const auto v = k.get(c);
    if (!v) continue;
    const std::string s = k.path.substr(0, k.path.find('.'));
    if (s != section) {
      if (!section.empty()) out += "\n";
      section = s;
    }
    out += k.path + " = " + *v + "\n";
  }
  return out;
}

inline RunConfig read_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.string());
}

}  // namespace skdv
