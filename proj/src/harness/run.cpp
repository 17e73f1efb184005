#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ergo/harness.hpp"
#include "ergo/io.hpp"
#include "ergo/kernels.hpp"
#include "ergo/parallel.hpp"
#include "ergo/path.hpp"

#ifndef ERGO_SFDE_VERSION
#define ERGO_SFDE_VERSION "unknown"
#endif

namespace ergo::harness {

namespace {

using json = nlohmann::ordered_json;

class Writer {
 public:
  Writer(std::filesystem::path dir, RunResult& res, std::ostream& log)
      : dir_(std::move(dir)), res_(res), log_(log) {}

  void text(const std::string& name, const std::string& body) {
    std::ofstream out(dir_ / name, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io, "cannot write " + (dir_ / name).string());
    out << body;
    require(static_cast<bool>(out), ErrorKind::io, "write failed: " + (dir_ / name).string());
    res_.outputs.push_back(name);
    log_ << "wrote " << (dir_ / name).string() << "\n";
  }

  void write_json(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

 private:
  std::filesystem::path dir_;
  RunResult& res_;
  std::ostream& log_;
};

json reweight_json(const ReweightReport& r) {
  return {{"weighted_mean", r.weighted.mean}, {"weighted_stderr", r.weighted.stderr},
          {"plain_mean", r.plain.mean},       {"plain_stderr", r.plain.stderr},
          {"z", r.z},                         {"truncated", r.truncated},
          {"max_log_weight", r.max_log_weight}, {"mean_weight", r.mean_weight},
          {"pass", r.pass}};
}

Verdict curve_verdict(const TrendTest& t, bool saturated) {
  if (saturated || (t.slope > 0.0 && t.z > 3.0)) return Verdict::fail;
  return t.decreasing ? Verdict::pass : Verdict::inconclusive;
}

std::string decay_csv(const DecayFit& d) {
  std::string out = "t,mean_sq,stderr,bound\n";
  for (std::size_t i = 0; i < d.times.size(); ++i) {
    const std::string f[] = {io::format_double(d.times[i]), io::format_double(d.mean_sq[i]),
                             io::format_double(d.mean_sq_stderr[i]), io::format_double(d.bound[i])};
    out += io::csv_row(f);
  }
  return out;
}

void dispatch(const ExperimentConfig& cfg, Writer& w, RunResult& res, std::ostream& log) {
  const ModelSpec model = make_builtin(cfg.model_kind, cfg.model);
  json head{{"kind", to_string(cfg.kind)}, {"config_digest", cfg.digest}};
  Verdict verdict = Verdict::pass;
  bool has_verdict = true;

  switch (cfg.kind) {
    case ExperimentKind::simulate: {
      has_verdict = false;
      json paths = json::array();
      for (std::size_t i = 0; i < cfg.n_paths; ++i) {
        SimConfig sc = cfg.sim;
        sc.path_index = i;
        const Trajectory tr = simulate(model, cfg.xi, sc);
        if (cfg.write_csv) {
          std::ostringstream csv;
          write_trajectory_csv(csv, tr);
          char name[64];
          std::snprintf(name, sizeof name, "trajectory_%04zu.csv", i);
          w.text(name, csv.str());
        }
        const auto s = tr.path.state();
        paths.push_back({{"index", i},
                         {"jumps", tr.events.size()},
                         {"terminal", std::vector<double>(s.begin(), s.end())}});
      }
      if (cfg.write_json) {
        json j = head;
        j["n_paths"] = cfg.n_paths;
        j["paths"] = paths;
        w.write_json("simulate.json", j);
      }
      break;
    }
    case ExperimentKind::decay: {
      json sel = nullptr;
      double lambda = 0.0;
      if (cfg.lambda) {
        lambda = *cfg.lambda;
      } else {
        const auto s = select_lambda(model, cfg.xi, cfg.eta, cfg.alpha, cfg.times, cfg.n_paths,
                                     cfg.sim, cfg.lambda_max);
        lambda = s.lambda;
        sel = {{"lambda", s.lambda}, {"probed", s.probed}};
      }
      DecayOptions o;
      o.track_kl = cfg.track_kl;
      const DecayFit fit =
          estimate_decay(model, cfg.xi, cfg.eta, lambda, cfg.alpha, cfg.times, cfg.n_paths, cfg.sim, o);
      verdict = fit.pass_slope && fit.pass_prefactor ? Verdict::pass : Verdict::fail;
      if (cfg.write_csv) w.text("decay.csv", decay_csv(fit));
      if (cfg.write_json) {
        json j = head;
        j["lambda_selection"] = sel;
        j["decay"] = to_json(fit);
        j["verdict"] = to_string(verdict);
        w.write_json("decay.json", j);
      }
      break;
    }
    case ExperimentKind::c1: {
      std::vector<std::pair<Segment, Segment>> pairs{{cfg.xi, cfg.eta}};
      SegmentSampler sampler{model.tau, model.n, 0.05, 2.0};
      rng::Engine eng({rng::derive_seed(cfg.sim.master_seed, 5), 1, rng::Substream::sampler});
      for (std::size_t i = 0; i < cfg.sampled_pairs; ++i) pairs.push_back(sampler.sample_pair(eng));
      C1Options o;
      o.lambda = cfg.lambda;
      o.lambda_max = cfg.lambda_max;
      const C1Report r =
          condition_c1_report(model, pairs, cfg.alpha, cfg.times, cfg.n_paths, cfg.sim, o);
      verdict = r.verdict;
      json j = head;
      j["c1"] = to_json(r);
      if (cfg.reweight_paths > 0) {
        const ReweightReport rw = importance_reweight_check(
            model, cfg.xi, cfg.eta, r.pairs.front().decay.lambda_used, {}, cfg.reweight_paths, cfg.sim);
        j["reweight"] = reweight_json(rw);
        verdict = combine(verdict, rw.pass ? Verdict::pass : Verdict::fail);
      }
      j["verdict"] = to_string(verdict);
      if (cfg.write_json) w.write_json("c1.json", j);
      break;
    }
    case ExperimentKind::c2: {
      const C2Report r = condition_c2_report(model, cfg.c2_M, cfg.c2_epsilon, cfg.c2_t0,
                                             cfg.n_paths, cfg.sim, cfg.c2);
      verdict = r.verdict;
      json j = head;
      j["c2"] = to_json(r);
      j["verdict"] = to_string(verdict);
      if (cfg.write_json) w.write_json("c2.json", j);
      break;
    }
    case ExperimentKind::support: {
      const SupportReport r =
          support_check(model, cfg.support_R, cfg.support_delta, cfg.support_t, cfg.n_paths, cfg.sim);
      verdict = r.verdict;
      json j = head;
      j["support"] = to_json(r);
      j["verdict"] = to_string(verdict);
      if (cfg.write_json) w.write_json("support.json", j);
      break;
    }
    case ExperimentKind::wasserstein: {
      MarginalOptions o = cfg.w;
      if (o.reference) o.reference_start = cfg.xi;
      const MarginalCurve c = wasserstein_time_marginals(model, cfg.xi, cfg.eta, cfg.times,
                                                         cfg.w_samples, cfg.sim, o);
      TrendTest t;
      bool fitted = true;
      try {
        t = trend_test(c);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::degenerate_fit) throw;
        fitted = false;
      }
      const bool saturated = std::all_of(c.points.begin(), c.points.end(),
                                         [](const MarginalPoint& p) { return p.w_upper >= 1.0 - 1e-12; });
      verdict = fitted ? curve_verdict(t, saturated) : Verdict::inconclusive;
      if (cfg.write_csv) {
        std::ostringstream csv;
        write_curve_csv(csv, c);
        w.text("wasserstein.csv", csv.str());
      }
      if (cfg.write_json) {
        json j = head;
        j["wasserstein"] = {{"reference", o.reference},
                            {"curve", to_json(c, t)},
                            {"saturated", saturated},
                            {"verdict", to_string(verdict)}};
        j["verdict"] = to_string(verdict);
        w.write_json("wasserstein.json", j);
      }
      break;
    }
    case ExperimentKind::report: {
      const ReportConfig rc = report_config(cfg);
      const ErgodicityReport r = ergodicity_report(model, rc, cfg.digest);
      verdict = r.verdict;
      if (cfg.write_json) w.write_json("report.json", to_json(r));
      break;
    }
  }
  if (has_verdict) {
    res.verdict = to_string(verdict);
  }
}

}  // namespace

ReportConfig report_config(const ExperimentConfig& cfg) {
  ReportConfig rc;
  rc.sim = cfg.sim;
  rc.alpha = cfg.alpha;
  rc.lambda = cfg.lambda;
  rc.lambda_max = cfg.lambda_max;
  rc.xi = cfg.xi;
  rc.eta = cfg.eta;
  rc.sampled_pairs = cfg.sampled_pairs;
  rc.decay_times = cfg.times;
  rc.c1_paths = cfg.n_paths;
  rc.c2_M = cfg.c2_M;
  rc.c2_epsilon = cfg.c2_epsilon;
  rc.c2_t0 = cfg.c2_t0;
  rc.c2_paths = cfg.n_paths;
  rc.c2 = cfg.c2;
  rc.policy = RatePolicy::builtin(cfg.policy_f, cfg.policy_V, cfg.policy_delta);
  rc.policy.K = cfg.policy_K;
  rc.drift_times = cfg.drift_times;
  rc.drift_probe_values = cfg.probes;
  rc.drift_outer = cfg.drift_outer;
  rc.drift_inner = cfg.drift_inner;
  rc.w_times = cfg.times;
  rc.w_samples = cfg.w_samples;
  rc.w = cfg.w;
  return rc;
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::schema: return 2;
    case ErrorKind::divergence: return 3;
    default: return 1;
  }
}

RunResult run_experiment(const std::filesystem::path& config_path, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  RunResult res;
  std::filesystem::path out_dir;
  std::string digest, kind;
  std::uint64_t seed = 0;

  try {
    const ConfigFile file = load_config(config_path);
    const std::filesystem::path base =
        config_path.parent_path().empty() ? std::filesystem::path(".") : config_path.parent_path();
    // Best effort location for the manifest if validation fails.
    out_dir = base / "out";
    if (auto s = file.sections.find("output"); s != file.sections.end())
      if (auto d = s->second.find("directory"); d != s->second.end() && !d->second.empty())
        out_dir = base / d->second;

    const ExperimentConfig cfg = validate_config(file, base);
    out_dir = cfg.output_dir;
    digest = cfg.digest;
    kind = to_string(cfg.kind);
    seed = cfg.sim.master_seed;
    std::filesystem::create_directories(out_dir);
    Writer w(out_dir, res, log);
    dispatch(cfg, w, res, log);
    res.status = "ok";
    res.exit_code = 0;
  } catch (const DivergenceError& e) {
    res.status = "divergence";
    res.exit_code = 3;
    res.message = std::string(e.what()) + " (t = " + io::format_double(e.time()) + ")";
  } catch (const Error& e) {
    res.status = e.kind() == ErrorKind::schema ? "schema_error" : "error";
    res.exit_code = exit_code_for(e.kind());
    res.message = std::string(to_string(e.kind())) + ": " + e.what();
  } catch (const std::exception& e) {
    res.status = "error";
    res.exit_code = 1;
    res.message = e.what();
  }
  if (!res.message.empty()) log << "error: " << res.message << "\n";

  if (!out_dir.empty()) {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json m{{"config_digest", digest},
           {"master_seed", seed},
           {"kind", kind},
           {"version", ERGO_SFDE_VERSION},
           {"kernels", kernels::active().name},
           {"workers", worker_count()},
           {"status", res.status},
           {"exit_code", res.exit_code},
           {"verdict", res.verdict.empty() ? json(nullptr) : json(res.verdict)},
           {"outputs", res.outputs},
           {"message", res.message},
           {"wall_time_s", wall}};
    try {
      std::filesystem::create_directories(out_dir);
      std::ofstream out(out_dir / "manifest.json", std::ios::binary);
      out << m.dump(2) << "\n";
    } catch (const std::exception& e) {
      log << "error: cannot write manifest: " << e.what() << "\n";
    }
  }
  return res;
}

}  // namespace ergo::harness
