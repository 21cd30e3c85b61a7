#pragma once

#include <filesystem>
#include <optional>
#include <sstream>

#include "distreg/design.hpp"
#include "distreg/io.hpp"
#include "distreg/sampler.hpp"

namespace distreg {

enum class Task { fit, cv, simulate, score };

inline Task task_from_string(const std::string& s) {
  if (s == "fit") return Task::fit;
  if (s == "cv") return Task::cv;
  if (s == "simulate") return Task::simulate;
  if (s == "score") return Task::score;
  throw ConfigError("unknown task '" + s + "'");
}

inline std::string to_string(Task t) {
  switch (t) {
    case Task::fit: return "fit";
    case Task::cv: return "cv";
    case Task::simulate: return "simulate";
    case Task::score: return "score";
  }
  return "?";
}

struct DerivedOptions {
  std::vector<std::string> quantities;  // of: mean, sd, gini, density
  std::vector<std::pair<std::string, double>> profile;
  std::string curve;  // covariate for derived-quantity curves
  double level = 0.95;
};

struct CovariateGen {
  enum class Kind { uniform, pm1 };
  std::string name;
  Kind kind = Kind::uniform;
};

/// Built-in test functions for simulation truths.
struct TrueFun {
  enum class Kind { constant, sine, linear };
  Kind kind = Kind::constant;
  std::string col;
  double value = 0.0;      // constant
  double amplitude = 1.0;  // sine
  double period = 1.0;
  double phase = 0.0;
  double coef = 1.0;  // linear

  double eval(double x) const {
    switch (kind) {
      case Kind::constant: return value;
      case Kind::sine: return amplitude * std::sin(2.0 * M_PI * (x - phase) / period);
      case Kind::linear: return coef * x;
    }
    return 0.0;
  }
};

struct ScenarioConfig {
  FamilyId family = FamilyId::gamma;
  Index n = 1000;
  int replicates = 10;
  std::vector<FamilyId> candidates;
  std::vector<CovariateGen> covariates;
  std::vector<TermDef> terms;  // candidate terms on the primary parameter
  std::vector<std::vector<TrueFun>> truth;
  double holdout = 0.0;
};

struct RunConfig {
  std::string dataset_path;
  std::string adjacency_path;
  std::string response;
  FamilyId family = FamilyId::lognormal;
  Task task = Task::fit;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int workers = 1;
  std::set<std::string> categorical;
  std::vector<PredictorSpec> predictors;
  SamplerConfig sampler;
  int cv_folds = 10;
  DerivedOptions derived;
  std::optional<ScenarioConfig> scenario;

  ModelSpec model_spec() const { return ModelSpec{family, predictors}; }
};

namespace cfgdetail {

struct RawEntry {
  std::string key;
  std::string value;
  Index line = 0;
};

struct RawSection {
  std::string name;
  std::vector<RawEntry> entries;
};

inline std::vector<RawSection> parse_raw(const std::string& text, const std::string& origin) {
  std::vector<RawSection> sections{{""}};
  std::istringstream in(text);
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
      }
      sections.push_back({detail::trim(t.substr(1, t.size() - 2))});
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    sections.back().entries.push_back(
        {detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)), line_no});
  }
  return sections;
}

inline void apply_override(std::vector<RawSection>& sections, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + spec + "' needs key=value");
  std::string path = detail::trim(spec.substr(0, eq));
  const std::string value = detail::trim(spec.substr(eq + 1));
  std::string section, key;
  const auto dot = path.find('.');
  if (dot == std::string::npos) {
    key = path;
  } else {
    section = path.substr(0, dot);
    key = path.substr(dot + 1);
  }
  if (key == "term" || key.rfind("truth", 0) == 0) {
    throw ConfigError("override of '" + key + "' is not supported");
  }
  for (auto& s : sections) {
    if (s.name != section) continue;
    for (auto& e : s.entries) {
      if (e.key == key) {
        e.value = value;
        return;
      }
    }
    s.entries.push_back({key, value, 0});
    return;
  }
  sections.push_back({section, {{key, value, 0}}});
}

inline std::string where(const std::string& origin, const RawEntry& e) {
  return origin + ":" + std::to_string(e.line) + ": key '" + e.key + "'";
}

inline double to_double(const std::string& origin, const RawEntry& e) {
  double v = 0.0;
  if (!detail::parse_double(e.value, v)) {
    throw ConfigError(where(origin, e) + ": expected a number, got '" + e.value + "'");
  }
  return v;
}

inline long to_int(const std::string& origin, const RawEntry& e) {
  const double v = to_double(origin, e);
  if (v != std::floor(v)) throw ConfigError(where(origin, e) + ": expected an integer");
  return static_cast<long>(v);
}

inline bool to_bool(const std::string& origin, const RawEntry& e) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  throw ConfigError(where(origin, e) + ": expected true or false");
}

inline std::vector<std::string> to_list(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& piece : detail::split(value, ',')) {
    const std::string t = detail::trim(piece);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

/// Splits "type(arg; k=v, k=v)" into its parts.
struct CallForm {
  std::string type;
  std::string arg;
  std::vector<std::pair<std::string, std::string>> options;
};

inline CallForm parse_call(const std::string& origin, const RawEntry& e, const std::string& text) {
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') {
    throw ConfigError(where(origin, e) + ": expected 'type(arg; options)', got '" + text + "'");
  }
  CallForm out;
  out.type = detail::trim(text.substr(0, open));
  const std::string inside = text.substr(open + 1, text.size() - open - 2);
  const auto semi = inside.find(';');
  out.arg = detail::trim(semi == std::string::npos ? inside : inside.substr(0, semi));
  if (semi != std::string::npos) {
    for (const auto& piece : detail::split(inside.substr(semi + 1), ',')) {
      const std::string opt = detail::trim(piece);
      if (opt.empty()) continue;
      const auto eq = opt.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(where(origin, e) + ": option '" + opt + "' needs key=value");
      }
      out.options.emplace_back(detail::trim(opt.substr(0, eq)), detail::trim(opt.substr(eq + 1)));
    }
  }
  return out;
}

inline double option_double(const std::string& origin, const RawEntry& e, const std::string& v) {
  double out = 0.0;
  if (!detail::parse_double(v, out)) {
    throw ConfigError(where(origin, e) + ": expected a number, got '" + v + "'");
  }
  return out;
}

inline TermDef parse_term(const std::string& origin, const RawEntry& e) {
  const CallForm call = parse_call(origin, e, e.value);
  TermDef t;
  t.col = call.arg;
  if (t.col.empty()) throw ConfigError(where(origin, e) + ": term needs a column argument");
  if (call.type == "linear") {
    t.type = TermType::linear;
  } else if (call.type == "pspline") {
    t.type = TermType::pspline;
  } else if (call.type == "vc") {
    t.type = TermType::varying;
  } else if (call.type == "random") {
    t.type = TermType::random_effect;
  } else if (call.type == "mrf") {
    t.type = TermType::mrf;
  } else if (call.type == "spatial") {
    t.type = TermType::spatial;
  } else {
    throw ConfigError(where(origin, e) + ": unknown term type '" + call.type + "'");
  }
  for (const auto& [k, v] : call.options) {
    if (k == "knots") {
      t.knots = static_cast<int>(option_double(origin, e, v));
    } else if (k == "degree") {
      t.degree = static_cast<int>(option_double(origin, e, v));
    } else if (k == "order") {
      t.order = static_cast<int>(option_double(origin, e, v));
    } else if (k == "a") {
      t.hyper_a = option_double(origin, e, v);
    } else if (k == "b") {
      t.hyper_b = option_double(origin, e, v);
    } else if (k == "by" && t.type == TermType::varying) {
      t.by = v;
    } else if (k == "covariates" && t.type == TermType::spatial) {
      for (const auto& c : detail::split(v, '+')) {
        const std::string cc = detail::trim(c);
        if (!cc.empty()) t.covariates.push_back(cc);
      }
    } else if (k == "structured" && t.type == TermType::spatial) {
      if (v != "true" && v != "false") {
        throw ConfigError(where(origin, e) + ": expected true/false for 'structured'");
      }
      t.structured = v == "true";
    } else if (k == "unstructured" && t.type == TermType::spatial) {
      if (v != "true" && v != "false") {
        throw ConfigError(where(origin, e) + ": expected true/false for 'unstructured'");
      }
      t.unstructured = v == "true";
    } else {
      throw ConfigError(where(origin, e) + ": unknown term option '" + k + "'");
    }
  }
  if (t.type == TermType::varying && t.by.empty()) {
    throw ConfigError(where(origin, e) + ": vc term needs by=<column>");
  }
  return t;
}

/// Splits "f(...) + g(...)" at top-level plus signs.
inline std::vector<std::string> split_sum(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == '+' && depth == 0) {
      out.push_back(detail::trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(detail::trim(cur));
  return out;
}

inline std::vector<TrueFun> parse_truth(const std::string& origin, const RawEntry& e) {
  std::vector<TrueFun> out;
  for (const auto& piece : split_sum(e.value)) {
    const RawEntry fake{e.key, piece, e.line};
    const CallForm call = parse_call(origin, fake, piece);
    TrueFun f;
    if (call.type == "const") {
      f.kind = TrueFun::Kind::constant;
      f.value = option_double(origin, e, call.arg);
    } else if (call.type == "sin") {
      f.kind = TrueFun::Kind::sine;
      f.col = call.arg;
    } else if (call.type == "linear") {
      f.kind = TrueFun::Kind::linear;
      f.col = call.arg;
    } else {
      throw ConfigError(where(origin, e) + ": unknown truth function '" + call.type + "'");
    }
    for (const auto& [k, v] : call.options) {
      if (k == "amplitude" && f.kind == TrueFun::Kind::sine) {
        f.amplitude = option_double(origin, e, v);
      } else if (k == "period" && f.kind == TrueFun::Kind::sine) {
        f.period = option_double(origin, e, v);
      } else if (k == "phase" && f.kind == TrueFun::Kind::sine) {
        f.phase = option_double(origin, e, v);
      } else if (k == "coef" && f.kind == TrueFun::Kind::linear) {
        f.coef = option_double(origin, e, v);
      } else {
        throw ConfigError(where(origin, e) + ": unknown truth option '" + k + "'");
      }
    }
    out.push_back(f);
  }
  return out;
}

}  // namespace cfgdetail

/// Parse (and validate) a config from text. `origin` names the source in
/// error messages; file-existence checks can be disabled for tests.
inline RunConfig parse_config_text(const std::string& text, const std::string& origin,
                                   const std::vector<std::string>& overrides = {},
                                   bool check_files = true) {
  auto sections = cfgdetail::parse_raw(text, origin);
  for (const auto& ov : overrides) cfgdetail::apply_override(sections, ov);

  RunConfig cfg;
  bool family_seen = false;
  std::map<std::string, PredictorSpec> predictor_sections;
  std::map<std::string, std::vector<cfgdetail::RawEntry>> truth_entries;

  for (const auto& section : sections) {
    if (section.name.empty()) {
      for (const auto& e : section.entries) {
        if (e.key == "dataset") {
          cfg.dataset_path = e.value;
        } else if (e.key == "adjacency") {
          cfg.adjacency_path = e.value;
        } else if (e.key == "response") {
          cfg.response = e.value;
        } else if (e.key == "family") {
          cfg.family = family_id_from_string(e.value);
          family_seen = true;
        } else if (e.key == "task") {
          cfg.task = task_from_string(e.value);
        } else if (e.key == "seed") {
          cfg.seed = static_cast<std::uint64_t>(cfgdetail::to_int(origin, e));
        } else if (e.key == "out") {
          cfg.out_dir = e.value;
        } else if (e.key == "workers") {
          cfg.workers = static_cast<int>(cfgdetail::to_int(origin, e));
        } else if (e.key == "categorical") {
          for (const auto& c : cfgdetail::to_list(e.value)) cfg.categorical.insert(c);
        } else {
          throw ConfigError(cfgdetail::where(origin, e) + ": unknown key");
        }
      }
      continue;
    }
    if (section.name == "sampler") {
      for (const auto& e : section.entries) {
        if (e.key == "iterations") {
          cfg.sampler.iterations = static_cast<int>(cfgdetail::to_int(origin, e));
        } else if (e.key == "burnin") {
          cfg.sampler.burnin = static_cast<int>(cfgdetail::to_int(origin, e));
        } else if (e.key == "thin") {
          cfg.sampler.thin = static_cast<int>(cfgdetail::to_int(origin, e));
        } else if (e.key == "random_scan") {
          cfg.sampler.random_scan = cfgdetail::to_bool(origin, e);
        } else if (e.key == "init_tau2") {
          cfg.sampler.init_tau2 = cfgdetail::to_double(origin, e);
        } else if (e.key == "audit_interval") {
          cfg.sampler.audit_interval = static_cast<int>(cfgdetail::to_int(origin, e));
        } else {
          throw ConfigError(cfgdetail::where(origin, e) + ": unknown key");
        }
      }
      continue;
    }
    if (section.name.rfind("predictor ", 0) == 0) {
      const std::string param = detail::trim(section.name.substr(10));
      PredictorSpec spec;
      for (const auto& e : section.entries) {
        if (e.key == "intercept") {
          spec.intercept = cfgdetail::to_bool(origin, e);
        } else if (e.key == "term") {
          spec.terms.push_back(cfgdetail::parse_term(origin, e));
        } else {
          throw ConfigError(cfgdetail::where(origin, e) + ": unknown key");
        }
      }
      if (!predictor_sections.emplace(param, std::move(spec)).second) {
        throw ConfigError(origin + ": duplicate predictor section '" + param + "'");
      }
      continue;
    }
    if (section.name == "cv") {
      for (const auto& e : section.entries) {
        if (e.key == "folds") {
          cfg.cv_folds = static_cast<int>(cfgdetail::to_int(origin, e));
        } else {
          throw ConfigError(cfgdetail::where(origin, e) + ": unknown key");
        }
      }
      continue;
    }
    if (section.name == "derived") {
      for (const auto& e : section.entries) {
        if (e.key == "quantities") {
          cfg.derived.quantities = cfgdetail::to_list(e.value);
        } else if (e.key == "profile") {
          for (const auto& pair : cfgdetail::to_list(e.value)) {
            const auto eq = pair.find('=');
            if (eq == std::string::npos) {
              throw ConfigError(cfgdetail::where(origin, e) + ": profile entries need col=value");
            }
            double v = 0.0;
            if (!detail::parse_double(pair.substr(eq + 1), v)) {
              throw ConfigError(cfgdetail::where(origin, e) + ": bad profile value in '" + pair +
                                "'");
            }
            cfg.derived.profile.emplace_back(detail::trim(pair.substr(0, eq)), v);
          }
        } else if (e.key == "curve") {
          cfg.derived.curve = e.value;
        } else if (e.key == "level") {
          cfg.derived.level = cfgdetail::to_double(origin, e);
        } else {
          throw ConfigError(cfgdetail::where(origin, e) + ": unknown key");
        }
      }
      continue;
    }
    if (section.name == "scenario") {
      ScenarioConfig sc;
      for (const auto& e : section.entries) {
        if (e.key == "family") {
          sc.family = family_id_from_string(e.value);
        } else if (e.key == "n") {
          sc.n = cfgdetail::to_int(origin, e);
        } else if (e.key == "replicates") {
          sc.replicates = static_cast<int>(cfgdetail::to_int(origin, e));
        } else if (e.key == "candidates") {
          for (const auto& c : cfgdetail::to_list(e.value)) {
            sc.candidates.push_back(family_id_from_string(c));
          }
        } else if (e.key == "holdout") {
          sc.holdout = cfgdetail::to_double(origin, e);
        } else if (e.key == "covariates") {
          for (const auto& c : cfgdetail::to_list(e.value)) {
            const auto colon = c.find(':');
            if (colon == std::string::npos) {
              throw ConfigError(cfgdetail::where(origin, e) + ": covariates need name:kind");
            }
            CovariateGen g;
            g.name = detail::trim(c.substr(0, colon));
            const std::string kind = detail::trim(c.substr(colon + 1));
            if (kind == "uniform") {
              g.kind = CovariateGen::Kind::uniform;
            } else if (kind == "pm1") {
              g.kind = CovariateGen::Kind::pm1;
            } else {
              throw ConfigError(cfgdetail::where(origin, e) + ": unknown covariate kind '" + kind +
                                "'");
            }
            sc.covariates.push_back(g);
          }
        } else if (e.key == "terms") {
          for (const auto& piece : cfgdetail::split_sum(e.value)) {
            cfgdetail::RawEntry fake{e.key, piece, e.line};
            sc.terms.push_back(cfgdetail::parse_term(origin, fake));
          }
        } else if (e.key.rfind("truth.", 0) == 0) {
          truth_entries[e.key.substr(6)].push_back(e);
        } else {
          throw ConfigError(cfgdetail::where(origin, e) + ": unknown key");
        }
      }
      cfg.scenario = std::move(sc);
      continue;
    }
    throw ConfigError(origin + ": unknown section '" + section.name + "'");
  }

  if (!family_seen && cfg.task != Task::simulate) throw ConfigError(origin + ": missing 'family'");

  // predictor sections must cover the family's parameters exactly
  if (cfg.task != Task::simulate || !predictor_sections.empty()) {
    const Family& fam = family(cfg.family);
    cfg.predictors.clear();
    for (int k = 0; k < fam.param_count(); ++k) {
      const std::string name(fam.param_name(k));
      auto it = predictor_sections.find(name);
      if (it == predictor_sections.end()) {
        throw ConfigError(origin + ": missing section [predictor " + name + "] for family " +
                          std::string(fam.name()));
      }
      cfg.predictors.push_back(it->second);
      predictor_sections.erase(it);
    }
    if (!predictor_sections.empty()) {
      throw ConfigError(origin + ": predictor section '" + predictor_sections.begin()->first +
                        "' does not name a parameter of family " +
                        std::string(family(cfg.family).name()));
    }
  }

  if (cfg.scenario) {
    const Family& fam = family(cfg.scenario->family);
    cfg.scenario->truth.resize(static_cast<size_t>(fam.param_count()));
    for (auto& [param, entries] : truth_entries) {
      int k = -1;
      for (int i = 0; i < fam.param_count(); ++i) {
        if (param == fam.param_name(i)) k = i;
      }
      if (k < 0) {
        throw ConfigError(cfgdetail::where(origin, entries.front()) +
                          ": not a parameter of the scenario family");
      }
      for (const auto& e : entries) {
        auto funs = cfgdetail::parse_truth(origin, e);
        auto& slot = cfg.scenario->truth[static_cast<size_t>(k)];
        slot.insert(slot.end(), funs.begin(), funs.end());
      }
    }
    if (cfg.scenario->candidates.empty()) cfg.scenario->candidates = {cfg.scenario->family};
  } else if (cfg.task == Task::simulate) {
    throw ConfigError(origin + ": task simulate needs a [scenario] section");
  }

  if (cfg.task != Task::simulate) {
    if (cfg.dataset_path.empty()) throw ConfigError(origin + ": missing 'dataset'");
    if (cfg.response.empty()) throw ConfigError(origin + ": missing 'response'");
    if (check_files && !std::filesystem::exists(cfg.dataset_path)) {
      throw ConfigError(origin + ": dataset file '" + cfg.dataset_path + "' does not exist");
    }
  }
  if (check_files && !cfg.adjacency_path.empty() &&
      !std::filesystem::exists(cfg.adjacency_path)) {
    throw ConfigError(origin + ": adjacency file '" + cfg.adjacency_path + "' does not exist");
  }
  cfg.sampler.validate();
  if (cfg.workers < 1) throw ConfigError(origin + ": workers must be >= 1");
  return cfg;
}

inline RunConfig parse_config(const std::string& path,
                              const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path, overrides);
}

namespace cfgdetail {

inline std::string term_to_string(const TermDef& t) {
  std::ostringstream out;
  switch (t.type) {
    case TermType::linear: return "linear(" + t.col + ")";
    case TermType::pspline:
      out << "pspline(" << t.col << "; knots=" << t.knots << ", degree=" << t.degree
          << ", order=" << t.order << ", a=" << t.hyper_a << ", b=" << t.hyper_b << ")";
      return out.str();
    case TermType::varying:
      out << "vc(" << t.col << "; by=" << t.by << ", knots=" << t.knots << ", degree=" << t.degree
          << ", order=" << t.order << ", a=" << t.hyper_a << ", b=" << t.hyper_b << ")";
      return out.str();
    case TermType::random_effect:
      out << "random(" << t.col << "; a=" << t.hyper_a << ", b=" << t.hyper_b << ")";
      return out.str();
    case TermType::mrf:
      out << "mrf(" << t.col << "; a=" << t.hyper_a << ", b=" << t.hyper_b << ")";
      return out.str();
    case TermType::spatial: {
      out << "spatial(" << t.col << "; ";
      if (!t.covariates.empty()) {
        out << "covariates=";
        for (size_t i = 0; i < t.covariates.size(); ++i) {
          out << (i ? "+" : "") << t.covariates[i];
        }
        out << ", ";
      }
      out << "structured=" << (t.structured ? "true" : "false")
          << ", unstructured=" << (t.unstructured ? "true" : "false") << ", a=" << t.hyper_a
          << ", b=" << t.hyper_b << ")";
      return out.str();
    }
  }
  return "?";
}

inline std::string truth_to_string(const std::vector<TrueFun>& funs) {
  std::ostringstream out;
  for (size_t i = 0; i < funs.size(); ++i) {
    if (i) out << " + ";
    const TrueFun& f = funs[i];
    switch (f.kind) {
      case TrueFun::Kind::constant: out << "const(" << f.value << ")"; break;
      case TrueFun::Kind::sine:
        out << "sin(" << f.col << "; amplitude=" << f.amplitude << ", period=" << f.period
            << ", phase=" << f.phase << ")";
        break;
      case TrueFun::Kind::linear: out << "linear(" << f.col << "; coef=" << f.coef << ")"; break;
    }
  }
  return out.str();
}

}  // namespace cfgdetail

/// Canonical text form; parse_config_text(serialize_config(c)) rebuilds c.
inline std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  if (!cfg.dataset_path.empty()) out << "dataset = " << cfg.dataset_path << "\n";
  if (!cfg.adjacency_path.empty()) out << "adjacency = " << cfg.adjacency_path << "\n";
  if (!cfg.response.empty()) out << "response = " << cfg.response << "\n";
  out << "family = " << to_string(cfg.family) << "\n";
  out << "task = " << to_string(cfg.task) << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "out = " << cfg.out_dir << "\n";
  out << "workers = " << cfg.workers << "\n";
  if (!cfg.categorical.empty()) {
    out << "categorical = ";
    bool first = true;
    for (const auto& c : cfg.categorical) {
      out << (first ? "" : ", ") << c;
      first = false;
    }
    out << "\n";
  }
  out << "\n[sampler]\n";
  out << "iterations = " << cfg.sampler.iterations << "\n";
  out << "burnin = " << cfg.sampler.burnin << "\n";
  out << "thin = " << cfg.sampler.thin << "\n";
  out << "random_scan = " << (cfg.sampler.random_scan ? "true" : "false") << "\n";
  out << "init_tau2 = " << cfg.sampler.init_tau2 << "\n";
  out << "audit_interval = " << cfg.sampler.audit_interval << "\n";
  const Family& fam = family(cfg.family);
  for (size_t k = 0; k < cfg.predictors.size(); ++k) {
    out << "\n[predictor " << fam.param_name(static_cast<int>(k)) << "]\n";
    out << "intercept = " << (cfg.predictors[k].intercept ? "true" : "false") << "\n";
    for (const auto& t : cfg.predictors[k].terms) {
      out << "term = " << cfgdetail::term_to_string(t) << "\n";
    }
  }
  out << "\n[cv]\nfolds = " << cfg.cv_folds << "\n";
  out << "\n[derived]\n";
  if (!cfg.derived.quantities.empty()) {
    out << "quantities = ";
    for (size_t i = 0; i < cfg.derived.quantities.size(); ++i) {
      out << (i ? ", " : "") << cfg.derived.quantities[i];
    }
    out << "\n";
  }
  if (!cfg.derived.profile.empty()) {
    out << "profile = ";
    for (size_t i = 0; i < cfg.derived.profile.size(); ++i) {
      out << (i ? ", " : "") << cfg.derived.profile[i].first << "="
          << cfg.derived.profile[i].second;
    }
    out << "\n";
  }
  if (!cfg.derived.curve.empty()) out << "curve = " << cfg.derived.curve << "\n";
  out << "level = " << cfg.derived.level << "\n";
  if (cfg.scenario) {
    const ScenarioConfig& sc = *cfg.scenario;
    const Family& sfam = family(sc.family);
    out << "\n[scenario]\n";
    out << "family = " << to_string(sc.family) << "\n";
    out << "n = " << sc.n << "\n";
    out << "replicates = " << sc.replicates << "\n";
    if (!sc.candidates.empty()) {
      out << "candidates = ";
      for (size_t i = 0; i < sc.candidates.size(); ++i) {
        out << (i ? ", " : "") << to_string(sc.candidates[i]);
      }
      out << "\n";
    }
    out << "holdout = " << sc.holdout << "\n";
    if (!sc.covariates.empty()) {
      out << "covariates = ";
      for (size_t i = 0; i < sc.covariates.size(); ++i) {
        out << (i ? ", " : "") << sc.covariates[i].name << ":"
            << (sc.covariates[i].kind == CovariateGen::Kind::uniform ? "uniform" : "pm1");
      }
      out << "\n";
    }
    if (!sc.terms.empty()) {
      out << "terms = ";
      for (size_t i = 0; i < sc.terms.size(); ++i) {
        out << (i ? " + " : "") << cfgdetail::term_to_string(sc.terms[i]);
      }
      out << "\n";
    }
    for (size_t k = 0; k < sc.truth.size(); ++k) {
      if (sc.truth[k].empty()) continue;
      out << "truth." << sfam.param_name(static_cast<int>(k)) << " = "
          << cfgdetail::truth_to_string(sc.truth[k]) << "\n";
    }
  }
  return out.str();
}

}  // namespace distreg
