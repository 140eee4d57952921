#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "permcc/errors.hpp"
#include "permcc/measure.hpp"
#include "permcc/protocols_isr.hpp"
#include "permcc/protocols_psr.hpp"
#include "permcc/reductions.hpp"

using namespace permcc;
using json = nlohmann::json;

namespace {

// Six significant digits, so reports are byte-stable across platforms.
// Six significant digits; integral values are written as JSON integers.
nlohmann::json sig6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  const double r = std::strtod(buf, nullptr);
  if (r == std::trunc(r) && std::abs(r) < 1e15) return static_cast<std::int64_t>(r);
  return r;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

int to_int(const std::string& s) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ValidationError("'" + s + "' is not an integer");
  return v;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ValidationError("'" + s + "' is not a number");
  return v;
}

// A spec file, or "family:n[:key=value,...]" for the named families.
FunctionSpec load_spec_arg(const std::string& arg) {
  if (std::filesystem::exists(arg)) return load_spec_file(arg);
  const auto parts = split(arg, ':');
  if (parts.size() < 2 || parts.size() > 3)
    throw ValidationError("spec '" + arg + "' is neither a file nor family:n[:key=value,...]");
  ParamMap params;
  if (parts.size() == 3)
    for (const auto& kv : split(parts[2], ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("spec parameter '" + kv + "' must be key=value");
      params[kv.substr(0, eq)] = to_int(kv.substr(eq + 1));
    }
  return build_named(parts[0], to_int(parts[1]), params);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
}

std::string ternary_str(Ternary t) { return std::string(1, ternary_char(t)); }

// measure ------------------------------------------------------------------------

json measure_json(const FunctionSpec& f, MeasureMode mode, double C) {
  const MeasureReport r = measure(f, mode);
  json j;
  j["family"] = f.family();
  j["n"] = f.n();
  j["mode"] = mode_name(mode);
  j["raw_value"] = sig6(r.raw_value);
  j["C"] = sig6(C);
  j["k"] = scaled_k(r, C);
  if (r.argmax) {
    j["argmax"] = {{"a", r.argmax->a},
                   {"b", r.argmax->b},
                   {"c", r.argmax->c},
                   {"g", r.argmax->g},
                   {"kind", r.argmax->kind == TermKind::Linear ? "linear" : "log"}};
    try {
      const ReductionCertificate c = certificate(f, r);
      json cert = {{"family", family_name(c.family)},
                   {"t", c.t},
                   {"target", target_to_string(c.target)},
                   {"claimed_bound", c.claimed_bound}};
      if (c.family == SourceFamily::SetInc) cert["w"] = c.w;
      if (c.family == SourceFamily::SparseIndexing) cert["si_mode"] = c.si_mode == SiMode::Ic ? "ic" : "one_way";
      j["certificate"] = cert;
    } catch (const InfeasibleError& e) {
      j["certificate"] = nullptr;
      j["certificate_note"] = e.what();
    }
  } else {
    j["argmax"] = nullptr;
    j["certificate"] = nullptr;
  }
  json js = json::array();
  for (const auto& [ab, list] : r.per_slice_jumps)
    for (const auto& jp : list) js.push_back({{"a", ab.first}, {"b", ab.second}, {"c", jp.c}, {"g", jp.g}});
  j["jumps"] = js;
  return j;
}

// run ------------------------------------------------------------------------------

struct RunOptions {
  std::string spec;
  std::string protocol = "fullisr";
  std::string mode = "two_way";
  double rho = 1.0;
  std::uint64_t seed = 1;
  std::int64_t trials = 100;
  double C = 1.0;
  int k = -1;
  std::string inputs = "jumps";
  std::string out;
};

std::vector<LabeledInput> select_inputs(const FunctionSpec& f, MeasureMode mode, const std::string& sel,
                                        std::uint64_t seed) {
  std::vector<LabeledInput> out;
  const int n = f.n();
  auto push = [&](int a, int b, int d) {
    if (!is_valid_distance(n, a, b, d)) throw ValidationError("input (a,b,d) is not realisable for n");
    if (f.value(a, b, d) == Ternary::Undefined) return false;
    out.push_back(labeled_canonical(f, a, b, d));
    return true;
  };
  if (sel == "jumps") {
    for (const auto& [ab, js] : measure(f, mode).per_slice_jumps)
      for (const auto& j : js) {
        push(ab.first, ab.second, j.c - j.g);
        push(ab.first, ab.second, j.c + j.g);
      }
  } else if (sel == "all") {
    for (int a = 0; a <= n; ++a)
      for (int b = 0; b <= n; ++b)
        for (int d : valid_distances(n, a, b)) push(a, b, d);
  } else if (sel.rfind("random:", 0) == 0) {
    const int want = to_int(sel.substr(7));
    if (want < 1) throw ValidationError("random:N needs N >= 1");
    for (std::uint64_t i = 0; static_cast<int>(out.size()) < want && i < 1000ULL * want; ++i) {
      const int a = static_cast<int>(keyed_word(seed, 0x696e, 3 * i) % (n + 1));
      const int b = static_cast<int>(keyed_word(seed, 0x696e, 3 * i + 1) % (n + 1));
      const auto ds = valid_distances(n, a, b);
      push(a, b, ds[keyed_word(seed, 0x696e, 3 * i + 2) % ds.size()]);
    }
  } else {
    for (const auto& item : split(sel, ';')) {
      const auto v = split(item, ',');
      if (v.size() != 3) throw ValidationError("explicit inputs are a,b,d separated by ';'");
      if (!push(to_int(v[0]), to_int(v[1]), to_int(v[2])))
        throw ValidationError("input " + item + " has an undefined value");
    }
  }
  if (out.empty()) throw ValidationError("input selection '" + sel + "' yields no defined inputs");
  return out;
}

Protocol build_protocol(const std::string& id, std::shared_ptr<const FunctionSpec> f, MeasureMode mode,
                        const RunOptions& o) {
  IsrConfig cfg;
  cfg.rho = o.rho;
  cfg.C = o.C;
  if (o.k >= 0) cfg.k_override = o.k;
  if (id == "full2way") {
    if (mode != MeasureMode::TwoWay) throw ValidationError("full2way is a two-way protocol");
    return full_two_way_psr(f);
  }
  if (id == "fullisr") return full_isr(f, mode, cfg);
  if (id == "strongly_pi") return strongly_pi_isr(f, mode, cfg);
  if (id == "hd_isr") {
    if (o.k < 0) throw ValidationError("hd_isr needs --k");
    return hd_isr(f->n(), o.k, cfg);
  }
  throw ValidationError("unknown protocol '" + id + "' (full2way, fullisr, strongly_pi, hd_isr)");
}

RandomnessMode randomness(double rho, std::uint64_t seed) {
  return rho >= 1.0 ? RandomnessMode::perfect(seed) : RandomnessMode::correlated(rho, seed);
}

std::string csv_report(const TrialReport& r) {
  std::ostringstream os;
  os << "input_id,a,b,d,expected,error,ci95,bits_ab,bits_ba,rounds\n";
  for (const auto& s : r.inputs)
    os << s.id << ',' << s.a << ',' << s.b << ',' << s.d << ',' << ternary_char(s.expected) << ',' << fmt6(s.error)
       << ',' << fmt6(s.ci95) << ',' << fmt6(s.mean_bits_ab) << ',' << fmt6(s.mean_bits_ba) << ','
       << fmt6(s.mean_rounds) << '\n';
  return os.str();
}

json run_json(const TrialReport& r, const FunctionSpec& f, const RunOptions& o, bool isr) {
  json j;
  j["protocol"] = o.protocol;
  j["spec"] = {{"family", f.family()}, {"n", f.n()}};
  j["mode"] = o.mode;
  j["rho"] = sig6(o.rho);
  j["seed"] = o.seed;
  j["trials"] = r.trials;
  j["C"] = sig6(o.C);
  if (o.k >= 0) j["k"] = o.k;
  json rows = json::array();
  for (const auto& s : r.inputs)
    rows.push_back({{"input_id", s.id},
                    {"a", s.a},
                    {"b", s.b},
                    {"d", s.d},
                    {"expected", ternary_str(s.expected)},
                    {"error", sig6(s.error)},
                    {"ci95", sig6(s.ci95)},
                    {"bits_ab", sig6(s.mean_bits_ab)},
                    {"bits_ba", sig6(s.mean_bits_ba)},
                    {"rounds", sig6(s.mean_rounds)},
                    {"max_bits", s.max_bits},
                    {"budget", s.budget},
                    {"budget_violations", s.budget_violations}});
  j["inputs"] = rows;
  j["summary"] = {{"max_error", sig6(r.max_error())},
                  {"mean_bits", sig6(r.mean_bits())},
                  {"max_bits", r.max_bits()},
                  {"budget_violations", r.budget_violations()}};
  if (isr) {
    j["region_iv_substitution"] = true;
    j["notes"] = json::array({"region IV runs the trivial weight protocol: Alice sends |x| in ceil(log2(n+1)) bits"});
  }
  return j;
}

int cmd_run(const RunOptions& o) {
  if (o.trials < 1) throw ValidationError("--trials must be >= 1");
  if (!(o.rho >= 0.0 && o.rho <= 1.0)) throw ValidationError("--rho must lie in [0, 1]");
  auto f = std::make_shared<const FunctionSpec>(load_spec_arg(o.spec));
  const MeasureMode mode = parse_mode(o.mode);
  const auto inputs = select_inputs(*f, mode, o.inputs, o.seed);
  const Protocol p = build_protocol(o.protocol, f, mode, o);
  const TrialReport r = estimate_error(p, inputs, randomness(o.rho, o.seed), o.trials, o.seed);
  const std::string csv = csv_report(r);
  const std::string js = run_json(r, *f, o, o.protocol == "fullisr").dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << csv;
  } else {
    write_text(o.out + ".csv", csv);
    write_text(o.out + ".json", js);
    std::cout << "wrote " << o.out << ".csv and " << o.out << ".json; max error " << fmt6(r.max_error()) << "\n";
  }
  return 0;
}

// bench ------------------------------------------------------------------------------

struct BenchOptions {
  std::string family = "hd";
  std::string ns = "20,40";
  std::string ks = "1,2";
  std::string rhos = "0.9,1.0";
  std::string protocol = "fullisr";
  std::string mode = "two_way";
  std::int64_t trials = 50;
  int max_inputs = 20;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_bench(const BenchOptions& o) {
  std::ostringstream os;
  os << "family,n,k,rho,protocol,mode,inputs,trials,max_error,mean_bits,max_bits,budget_violations\n";
  const MeasureMode mode = parse_mode(o.mode);
  std::uint64_t cell = 0;
  for (const auto& ns : split(o.ns, ','))
    for (const auto& ks : split(o.ks, ','))
      for (const auto& rs : split(o.rhos, ',')) {
        const int n = to_int(ns), k = to_int(ks);
        const double rho = to_double(rs);
        ParamMap params;
        if (o.family == "hd") params["k"] = k;
        else if (o.family == "udisj" || o.family == "si") params["t"] = k;
        else if (o.family != "equality") throw ValidationError("bench supports hd, udisj, si and equality");
        auto f = std::make_shared<const FunctionSpec>(build_named(o.family, n, params));
        const std::uint64_t seed = trial_seed(o.seed, cell++, 0);
        auto all = select_inputs(*f, mode, "jumps", seed);
        std::vector<LabeledInput> ins;
        const std::size_t step = std::max<std::size_t>(1, all.size() / static_cast<std::size_t>(o.max_inputs));
        for (std::size_t i = 0; i < all.size() && static_cast<int>(ins.size()) < o.max_inputs; i += step)
          ins.push_back(all[i]);
        RunOptions ro;
        ro.rho = rho;
        const Protocol p = build_protocol(o.protocol, f, mode, ro);
        const TrialReport r = estimate_error(p, ins, randomness(rho, seed), o.trials, seed);
        os << o.family << ',' << n << ',' << k << ',' << fmt6(rho) << ',' << o.protocol << ',' << o.mode << ','
           << ins.size() << ',' << o.trials << ',' << fmt6(r.max_error()) << ',' << fmt6(r.mean_bits()) << ','
           << r.max_bits() << ',' << r.budget_violations() << '\n';
      }
  if (o.out.empty())
    std::cout << os.str();
  else
    write_text(o.out, os.str());
  return 0;
}

// reduce ------------------------------------------------------------------------------

int cmd_reduce(const std::string& target, const std::string& family, const std::string& si_mode, bool check) {
  const Target t = parse_target(target);
  SiMode sm = SiMode::Ic;
  if (si_mode == "one_way") sm = SiMode::OneWay;
  else if (si_mode != "ic") throw ValidationError("--si-mode must be ic or one_way");
  const ReductionInstanceMap m = reduce(t, parse_family(family), sm);
  std::cout << m.summary() << "\n";
  if (check) {
    const ContractReport c = check_contract(m);
    std::cout << "checked " << c.checked << " source instances: weight " << c.weight_violations << ", distance "
              << c.distance_violations << ", label " << c.label_violations << ", length " << c.length_violations
              << " violations\n";
    std::cout << "t=" << m.t() << ", contract " << (c.ok() ? "OK" : "FAILED") << "\n";
    return c.ok() ? 0 : 1;
  }
  std::cout << "t=" << m.t() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"permcc: permutation-invariant communication complexity toolkit"};
  app.require_subcommand(1);

  auto* measure_cmd = app.add_subcommand("measure", "Compute m(f) or m^{1-way}(f) and a reduction certificate");
  std::string m_spec, m_mode = "two_way", m_out;
  double m_C = 1.0;
  measure_cmd->add_option("--spec", m_spec, "Spec file or family:n:key=value,...")->required();
  measure_cmd->add_option("--mode", m_mode, "two_way or one_way");
  measure_cmd->add_option("--C", m_C, "Divisor for k = ceil(raw / C)");
  measure_cmd->add_option("--out", m_out, "Write the JSON report here instead of stdout");

  auto* run_cmd = app.add_subcommand("run", "Monte Carlo error and cost estimate of a protocol");
  RunOptions ro;
  run_cmd->add_option("--spec", ro.spec, "Spec file or family:n:key=value,...")->required();
  run_cmd->add_option("--protocol", ro.protocol, "full2way, fullisr, strongly_pi or hd_isr");
  run_cmd->add_option("--mode", ro.mode, "two_way or one_way");
  run_cmd->add_option("--rho", ro.rho, "Correlation of the shared source");
  run_cmd->add_option("--seed", ro.seed, "Base seed");
  run_cmd->add_option("--trials", ro.trials, "Sessions per input");
  run_cmd->add_option("--C", ro.C, "Divisor for k = ceil(raw / C)");
  run_cmd->add_option("--k", ro.k, "Override k");
  run_cmd->add_option("--inputs", ro.inputs, "jumps, all, random:N or a,b,d;a,b,d");
  run_cmd->add_option("--out", ro.out, "Output prefix for .csv and .json");

  auto* bench_cmd = app.add_subcommand("bench", "CSV sweep over a (n, k, rho) grid");
  BenchOptions bo;
  bench_cmd->add_option("--family", bo.family, "hd, udisj, si or equality");
  bench_cmd->add_option("--n", bo.ns, "Comma-separated n values");
  bench_cmd->add_option("--k", bo.ks, "Comma-separated k (or t) values");
  bench_cmd->add_option("--rho", bo.rhos, "Comma-separated rho values");
  bench_cmd->add_option("--protocol", bo.protocol, "full2way or fullisr");
  bench_cmd->add_option("--mode", bo.mode, "two_way or one_way");
  bench_cmd->add_option("--trials", bo.trials, "Sessions per input");
  bench_cmd->add_option("--max-inputs", bo.max_inputs, "Jump-adjacent inputs per cell");
  bench_cmd->add_option("--seed", bo.seed, "Base seed");
  bench_cmd->add_option("--out", bo.out, "CSV path");

  auto* reduce_cmd = app.add_subcommand("reduce", "Build a reduction map and optionally check its contract");
  std::string r_target, r_family = "udisj", r_si = "ic";
  bool r_check = false;
  reduce_cmd->add_option("--target", r_target, "n,a,b,c,g")->required();
  reduce_cmd->add_option("--family", r_family, "udisj, setinc or si");
  reduce_cmd->add_option("--si-mode", r_si, "ic or one_way (si only)");
  reduce_cmd->add_flag("--check", r_check, "Exhaustively check the contract");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*measure_cmd) {
      const std::string text = measure_json(load_spec_arg(m_spec), parse_mode(m_mode), m_C).dump(2) + "\n";
      if (m_out.empty())
        std::cout << text;
      else
        write_text(m_out, text);
      return 0;
    }
    if (*run_cmd) return cmd_run(ro);
    if (*bench_cmd) return cmd_bench(bo);
    if (*reduce_cmd) return cmd_reduce(r_target, r_family, r_si, r_check);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const DimensionOverflow& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
