#include <cmath>
#include <fstream>

#include "ergo/harness.hpp"
#include "ergo/io.hpp"

namespace ergo::harness {

namespace {

using json = nlohmann::ordered_json;

const json* find(const json& j, std::initializer_list<const char*> path) {
  const json* cur = &j;
  for (const char* k : path) {
    if (!cur->is_object() || !cur->contains(k)) return nullptr;
    cur = &(*cur)[k];
  }
  return cur;
}

std::string num(const json& v) {
  return v.is_number() ? io::format_double(v.get<double>()) : std::string("nan");
}

void write(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + p.string());
  out << body;
}

}  // namespace

PlotResult emit_plotdata(const std::filesystem::path& report_path) {
  std::ifstream in(report_path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot read " + report_path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::schema, "malformed report: " + std::string(e.what()));
  }
  require(j.is_object(), ErrorKind::schema, "malformed report: top level is not an object");
  const auto dir = report_path.parent_path().empty() ? std::filesystem::path(".")
                                                     : report_path.parent_path();
  PlotResult res;

  try {
    const json* decay = find(j, {"decay"});
    if (!decay) {
      const json* pairs = find(j, {"c1", "pairs"});
      if (pairs && pairs->is_array() && !pairs->empty()) decay = find((*pairs)[0], {"decay"});
    }
    if (decay) {
      std::string out = "t,mean_sq,stderr,bound\n";
      const auto& t = decay->at("times");
      for (std::size_t i = 0; i < t.size(); ++i) {
        const std::string f[] = {num(t[i]), num(decay->at("mean_sq")[i]),
                                 num(decay->at("mean_sq_stderr")[i]), num(decay->at("bound")[i])};
        out += io::csv_row(f);
      }
      write(dir / "plot_decay.csv", out);
      res.written.push_back("plot_decay.csv");
    } else {
      res.missing.push_back("decay");
    }

    const json* curve = find(j, {"wasserstein", "pair"});
    if (!curve) curve = find(j, {"wasserstein", "curve"});
    if (curve) {
      const double slope = curve->at("slope").is_number() ? curve->at("slope").get<double>() : NAN;
      const double icpt = curve->contains("intercept") && curve->at("intercept").is_number()
                              ? curve->at("intercept").get<double>()
                              : NAN;
      std::string out = "t,w_upper,stderr_boot,fitted\n";
      for (const auto& p : curve->at("points")) {
        const double t = p.at("t").get<double>();
        const std::string f[] = {num(p.at("t")), num(p.at("w_upper")), num(p.at("stderr_boot")),
                                 io::format_double(std::exp(icpt + slope * t))};
        out += io::csv_row(f);
      }
      write(dir / "plot_wasserstein.csv", out);
      res.written.push_back("plot_wasserstein.csv");
    } else {
      res.missing.push_back("wasserstein");
    }

    const json* support = find(j, {"support", "probes"});
    if (support) {
      std::string out = "probe,sup_norm,p_full,p_aux,p_no_jump,no_jump_expected,ordering_margin\n";
      std::size_t k = 0;
      for (const auto& p : *support) {
        const std::string f[] = {std::to_string(k++), num(p.at("sup_norm")), num(p.at("p_full")),
                                 num(p.at("p_aux")), num(p.at("p_no_jump")),
                                 num(p.at("no_jump_expected")), num(p.at("ordering_margin"))};
        out += io::csv_row(f);
      }
      write(dir / "plot_support.csv", out);
      res.written.push_back("plot_support.csv");
    } else {
      res.missing.push_back("support");
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::schema, "malformed report: " + std::string(e.what()));
  }
  return res;
}

}  // namespace ergo::harness
