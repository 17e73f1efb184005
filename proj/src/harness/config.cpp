#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "ergo/harness.hpp"
#include "ergo/io.hpp"

namespace ergo::harness {

namespace {

[[noreturn]] void schema(const std::string& what) { fail(ErrorKind::schema, what); }

enum class Type { number, count, boolean, list, choice, number_or_auto, segment, path, formats };

struct Key {
  const char* section;
  const char* name;
  const char* def;  // nullptr: required
  Type type;
  std::vector<std::string> choices = {};
};

const std::vector<Key>& schema_keys() {
  static const std::vector<Key> keys = {
      {"model", "kind", nullptr, Type::choice, {"ou_jump", "linear_delay"}},
      {"model", "a", "1", Type::number},
      {"model", "g1", "0", Type::number},
      {"model", "sigma0", "1", Type::number},
      {"model", "gamma0", "1", Type::number},
      {"model", "c_scale", "0.5", Type::number},
      {"model", "jump_rate", "1", Type::number},
      {"model", "mark", "atom", Type::choice, {"atom", "normal"}},
      {"model", "mark_value", "1", Type::number},
      {"model", "mark_sd", "0", Type::number},
      {"model", "tau", "1", Type::number},
      {"model", "relaxed", "false", Type::boolean},

      {"sim", "dt", "0.01", Type::number},
      {"sim", "horizon", "1", Type::number},
      {"sim", "master_seed", "0", Type::count},
      {"sim", "n_paths", "1", Type::count},

      {"coupling", "alpha", "0.5", Type::number},
      {"coupling", "lambda", "auto", Type::number_or_auto},
      {"coupling", "lambda_max", "1024", Type::number},

      {"experiment", "kind", nullptr, Type::choice,
       {"simulate", "decay", "c1", "c2", "support", "wasserstein", "report"}},
      {"experiment", "times", "1,2,3,4,5", Type::list},
      {"experiment", "probes", "0,1,-2", Type::list},
      {"experiment", "xi", "1", Type::segment},
      {"experiment", "eta", "0", Type::segment},
      {"experiment", "track_kl", "false", Type::boolean},
      {"experiment", "sampled_pairs", "0", Type::count},
      {"experiment", "reweight_paths", "0", Type::count},

      {"support", "R", "2", Type::number},
      {"support", "delta", "0.5", Type::number},
      {"support", "t", "2", Type::number},

      {"c2", "M", "1", Type::number},
      {"c2", "epsilon", "2", Type::number},
      {"c2", "t0", "2", Type::number},
      {"c2", "case", "sup_ball", Type::choice, {"sup_ball", "current_ball"}},
      {"c2", "random_probes", "4", Type::count},

      {"lyapunov", "f", "linear", Type::choice, {"linear", "sqrt", "saturating"}},
      {"lyapunov", "V", "current_sq", Type::choice, {"current_sq", "sup_sq"}},
      {"lyapunov", "delta", "0.5", Type::number},
      {"lyapunov", "K", "auto", Type::number_or_auto},
      {"lyapunov", "times", "0.5,1,1.5,2", Type::list},
      {"lyapunov", "outer", "20", Type::count},
      {"lyapunov", "inner", "100", Type::count},

      {"wasserstein", "n_samples", "128", Type::count},
      {"wasserstein", "bootstrap", "50", Type::count},
      {"wasserstein", "reference", "false", Type::boolean},
      {"wasserstein", "reference_time", "20", Type::number},
      {"wasserstein", "metric", "sup_capped", Type::choice, {"sup_capped", "skorohod_upper_capped"}},
      {"wasserstein", "cap", "512", Type::count},

      {"output", "directory", "out", Type::path},
      {"output", "formats", "csv,json", Type::formats},
  };
  return keys;
}

std::string normalize_number(const std::string& where, const std::string& v) {
  try {
    const double d = io::parse_double(v);
    if (!std::isfinite(d)) schema(where + ": value must be finite");
    return io::format_double(d);
  } catch (const Error&) {
    schema(where + ": expected a number, got '" + v + "'");
  }
}

std::string normalize(const Key& k, const std::string& raw, const std::filesystem::path& base) {
  const std::string where = std::string(k.section) + "." + k.name;
  const std::string v(io::trim(raw));
  switch (k.type) {
    case Type::number:
      return normalize_number(where, v);
    case Type::count: {
      std::size_t pos = 0;
      unsigned long long n = 0;
      try {
        n = std::stoull(v, &pos);
      } catch (const std::exception&) {
        schema(where + ": expected a nonnegative integer, got '" + v + "'");
      }
      if (pos != v.size() || v.empty() || v[0] == '-')
        schema(where + ": expected a nonnegative integer, got '" + v + "'");
      return std::to_string(n);
    }
    case Type::boolean:
      if (v == "true" || v == "1" || v == "yes") return "true";
      if (v == "false" || v == "0" || v == "no") return "false";
      schema(where + ": expected true or false, got '" + v + "'");
    case Type::list: {
      std::string out;
      for (const auto& item : io::split(v, ',')) {
        if (!out.empty()) out += ',';
        out += normalize_number(where, item);
      }
      return out;
    }
    case Type::choice:
      for (const auto& c : k.choices)
        if (v == c) return v;
      schema(where + ": '" + v + "' is not one of the allowed values");
    case Type::number_or_auto:
      return v == "auto" ? v : normalize_number(where, v);
    case Type::segment: {
      try {
        return io::format_double(io::parse_double(v));
      } catch (const Error&) {
      }
      const std::filesystem::path p = base / v;
      std::ifstream in(p, std::ios::binary);
      if (!in) schema(where + ": '" + v + "' is neither a number nor a readable segment file");
      std::ostringstream buf;
      buf << in.rdbuf();
      return "file:" + p.lexically_normal().string() + "#" + sha256_hex(buf.str());
    }
    case Type::path:
      if (v.empty()) schema(where + ": empty path");
      return v;
    case Type::formats: {
      std::string out;
      bool csv = false, json = false;
      for (const auto& item : io::split(v, ',')) {
        const std::string f(io::trim(item));
        if (f == "csv")
          csv = true;
        else if (f == "json")
          json = true;
        else
          schema(where + ": unknown format '" + f + "'");
      }
      if (csv) out = "csv";
      if (json) out += out.empty() ? "json" : ",json";
      if (out.empty()) schema(where + ": no output format");
      return out;
    }
  }
  schema(where + ": unhandled type");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : io::split(s, ',')) out.push_back(io::parse_double(item));
  return out;
}

Segment load_segment(const std::string& value, double tau) {
  if (value.rfind("file:", 0) != 0) return Segment::constant(tau, io::parse_double(value));
  const std::string path = value.substr(5, value.rfind('#') - 5);
  std::ifstream in(path);
  Segment s = read_segment_csv(in);
  if (std::fabs(s.tau() - tau) > time_tolerance(tau))
    schema("segment file " + path + " has tau different from model.tau");
  return s;
}

}  // namespace

const char* to_string(ExperimentKind k) noexcept {
  switch (k) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::decay: return "decay";
    case ExperimentKind::c1: return "c1";
    case ExperimentKind::c2: return "c2";
    case ExperimentKind::support: return "support";
    case ExperimentKind::wasserstein: return "wasserstein";
    case ExperimentKind::report: return "report";
  }
  return "unknown";
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i)
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return out.str();
}

ConfigFile parse_config(std::istream& in) {
  ConfigFile cfg;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = io::trim(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') continue;
    const std::string at = "line " + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') schema(at + ": malformed section header");
      section = std::string(io::trim(t.substr(1, t.size() - 2)));
      if (section.empty()) schema(at + ": empty section name");
      if (cfg.sections.count(section)) schema(at + ": duplicate section [" + section + "]");
      cfg.sections[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) schema(at + ": expected key = value");
    if (section.empty()) schema(at + ": key outside of any section");
    const std::string key(io::trim(t.substr(0, eq)));
    if (key.empty()) schema(at + ": empty key");
    auto& sec = cfg.sections[section];
    if (sec.count(key)) schema(at + ": duplicate key " + section + "." + key);
    sec[key] = std::string(io::trim(t.substr(eq + 1)));
    cfg.lines[section + "." + key] = lineno;
  }
  return cfg;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot read config " + path.string());
  return parse_config(in);
}

ExperimentConfig validate_config(const ConfigFile& file, const std::filesystem::path& base_dir) {
  const auto& keys = schema_keys();
  for (const auto& [sec, entries] : file.sections) {
    bool known_section = false;
    for (const auto& k : keys) known_section = known_section || sec == k.section;
    if (!known_section) schema("unknown section [" + sec + "]");
    for (const auto& [name, value] : entries) {
      bool known = false;
      for (const auto& k : keys) known = known || (sec == k.section && name == k.name);
      if (!known) {
        const auto it = file.lines.find(sec + "." + name);
        schema("unknown key " + sec + "." + name +
               (it != file.lines.end() ? " (line " + std::to_string(it->second) + ")" : ""));
      }
    }
  }

  std::map<std::string, std::string> v;
  std::string canonical;
  for (const auto& k : keys) {
    const std::string id = std::string(k.section) + "." + k.name;
    std::string raw;
    const auto s = file.sections.find(k.section);
    if (s != file.sections.end() && s->second.count(k.name)) {
      raw = s->second.at(k.name);
    } else {
      if (!k.def) schema("missing required key " + id);
      raw = k.def;
    }
    v[id] = normalize(k, raw, base_dir);
    canonical += id + "=" + v[id] + "\n";
  }

  auto num = [&](const char* id) { return io::parse_double(v.at(id)); };
  auto cnt = [&](const char* id) { return static_cast<std::size_t>(std::stoull(v.at(id))); };
  auto flag = [&](const char* id) { return v.at(id) == "true"; };

  ExperimentConfig c;
  c.canonical = canonical;
  c.digest = sha256_hex(canonical);

  c.model_kind = v["model.kind"] == "ou_jump" ? BuiltinKind::ou_jump : BuiltinKind::linear_delay;
  c.model.a = num("model.a");
  c.model.g1 = num("model.g1");
  c.model.sigma0 = num("model.sigma0");
  c.model.gamma0 = num("model.gamma0");
  c.model.c_scale = num("model.c_scale");
  c.model.jump_rate = num("model.jump_rate");
  c.model.mark = v["model.mark"] == "atom" ? MarkLaw::atom(num("model.mark_value"))
                                           : MarkLaw::normal(num("model.mark_value"), num("model.mark_sd"));
  c.model.tau = num("model.tau");
  c.model.relaxed = flag("model.relaxed");
  if (c.model.tau <= 0.0) schema("model.tau must be positive");
  if (c.model.jump_rate < 0.0) schema("model.jump_rate must be >= 0");
  if (num("model.mark_sd") < 0.0) schema("model.mark_sd must be >= 0");
  try {
    make_builtin(c.model_kind, c.model);
  } catch (const Error& e) {
    schema(std::string("model: ") + e.what());
  }

  c.sim.dt = num("sim.dt");
  c.sim.horizon = num("sim.horizon");
  c.sim.master_seed = cnt("sim.master_seed");
  c.n_paths = cnt("sim.n_paths");
  if (c.n_paths == 0) schema("sim.n_paths must be >= 1");
  try {
    validate_sim_config(c.sim, c.model.tau);
  } catch (const Error& e) {
    schema(std::string("sim: ") + e.what());
  }

  c.alpha = num("coupling.alpha");
  if (v["coupling.lambda"] != "auto") c.lambda = num("coupling.lambda");
  c.lambda_max = num("coupling.lambda_max");

  const std::string kind = v["experiment.kind"];
  const ExperimentKind kinds[] = {ExperimentKind::simulate, ExperimentKind::decay,
                                  ExperimentKind::c1,       ExperimentKind::c2,
                                  ExperimentKind::support,  ExperimentKind::wasserstein,
                                  ExperimentKind::report};
  for (auto k : kinds)
    if (kind == to_string(k)) c.kind = k;
  c.times = parse_list(v["experiment.times"]);
  c.probes = parse_list(v["experiment.probes"]);
  c.xi = load_segment(v["experiment.xi"], c.model.tau);
  c.eta = load_segment(v["experiment.eta"], c.model.tau);
  c.track_kl = flag("experiment.track_kl");
  c.sampled_pairs = cnt("experiment.sampled_pairs");
  c.reweight_paths = cnt("experiment.reweight_paths");

  c.support_R = num("support.R");
  c.support_delta = num("support.delta");
  c.support_t = num("support.t");

  c.c2_M = num("c2.M");
  c.c2_epsilon = num("c2.epsilon");
  c.c2_t0 = num("c2.t0");
  c.c2.mode = v["c2.case"] == "sup_ball" ? C2Case::sup_ball : C2Case::current_ball;
  c.c2.n_random_probes = cnt("c2.random_probes");

  c.policy_f = v["lyapunov.f"];
  c.policy_V = v["lyapunov.V"] == "current_sq" ? LyapunovV::current_sq : LyapunovV::sup_sq;
  c.policy_delta = num("lyapunov.delta");
  if (v["lyapunov.K"] != "auto") c.policy_K = num("lyapunov.K");
  c.drift_times = parse_list(v["lyapunov.times"]);
  c.drift_outer = cnt("lyapunov.outer");
  c.drift_inner = cnt("lyapunov.inner");

  c.w_samples = cnt("wasserstein.n_samples");
  c.w.bootstrap = cnt("wasserstein.bootstrap");
  c.w.reference = flag("wasserstein.reference");
  c.w.reference_time = num("wasserstein.reference_time");
  c.w.metric = v["wasserstein.metric"] == "sup_capped" ? GroundMetric::sup_capped
                                                       : GroundMetric::skorohod_upper_capped;
  c.w.cap = cnt("wasserstein.cap");

  c.output_dir = base_dir / v["output.directory"];
  c.write_csv = v["output.formats"].find("csv") != std::string::npos;
  c.write_json = v["output.formats"].find("json") != std::string::npos;
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  const ConfigFile f = load_config(path);
  return validate_config(f, path.parent_path().empty() ? std::filesystem::path(".")
                                                       : path.parent_path());
}

}  // namespace ergo::harness
