#include "permcc/funcspec.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "permcc/errors.hpp"
#include "permcc/randomness.hpp"

namespace permcc {

using nlohmann::json;

char ternary_char(Ternary t) {
  switch (t) {
    case Ternary::Zero:
      return '0';
    case Ternary::One:
      return '1';
    default:
      return '?';
  }
}

std::vector<int> valid_distances(int n, int a, int b) {
  if (n < 0 || a < 0 || b < 0 || a > n || b > n) throw ValidationError("valid_distances: weights out of range");
  std::vector<int> out;
  const int hi = std::min(a + b, 2 * n - a - b);
  for (int d = std::abs(a - b); d <= hi; d += 2) out.push_back(d);
  return out;
}

bool is_valid_distance(int n, int a, int b, int d) {
  if (a < 0 || b < 0 || a > n || b > n) return false;
  const int lo = std::abs(a - b);
  const int hi = std::min(a + b, 2 * n - a - b);
  return d >= lo && d <= hi && ((d - lo) % 2 == 0);
}

Ternary SliceView::at(int d) const {
  if (d < d_min || ((d - d_min) & 1)) return Ternary::Undefined;
  const auto rank = static_cast<std::size_t>((d - d_min) / 2);
  return rank < values.size() ? values[rank] : Ternary::Undefined;
}

bool SliceView::constant() const {
  std::optional<Ternary> seen;
  for (auto v : values) {
    if (v == Ternary::Undefined) continue;
    if (seen && *seen != v) return false;
    seen = v;
  }
  return true;
}

FunctionSpec::FunctionSpec(int n, const Rule& rule, std::string family, ParamMap params)
    : n_(n), family_(std::move(family)), params_(std::move(params)) {
  if (n < 1) throw ValidationError("n must be >= 1");
  offset_.assign(static_cast<std::size_t>(n + 1) * (n + 1) + 1, 0);
  std::size_t total = 0;
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b) {
      offset_[slot(a, b)] = total;
      total += static_cast<std::size_t>((std::min(a + b, 2 * n - a - b) - std::abs(a - b)) / 2 + 1);
    }
  offset_.back() = total;
  table_.resize(total);
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b) {
      std::size_t i = offset_[slot(a, b)];
      for (int d : valid_distances(n, a, b)) table_[i++] = rule(a, b, d);
    }
}

Ternary FunctionSpec::eval(const Bits& x, const Bits& y) const {
  if (static_cast<int>(x.size()) != n_ || static_cast<int>(y.size()) != n_)
    throw ValidationError("eval: input length differs from n");
  return value(weight(x), weight(y), hamming(x, y));
}

Ternary FunctionSpec::value(int a, int b, int d) const {
  if (!is_valid_distance(n_, a, b, d)) return Ternary::Undefined;
  return table_[offset_[slot(a, b)] + static_cast<std::size_t>((d - std::abs(a - b)) / 2)];
}

SliceView FunctionSpec::slice(int a, int b) const {
  if (a < 0 || b < 0 || a > n_ || b > n_) throw ValidationError("slice: weights out of range");
  const std::size_t begin = offset_[slot(a, b)];
  const std::size_t end = offset_[slot(a, b) + 1];
  SliceView s;
  s.n = n_;
  s.a = a;
  s.b = b;
  s.d_min = std::abs(a - b);
  s.values = std::span<const Ternary>(table_.data() + begin, end - begin);
  return s;
}

bool FunctionSpec::is_total() const {
  return std::none_of(table_.begin(), table_.end(), [](Ternary t) { return t == Ternary::Undefined; });
}

namespace {

void require_gap(int n, int a, int b, int c, int g, const char* who) {
  if (g < 1) throw ValidationError(std::string(who) + ": g must be >= 1");
  if (!is_valid_distance(n, a, b, c - g) || !is_valid_distance(n, a, b, c + g))
    throw ValidationError(std::string(who) + ": c-g and c+g must both be valid distances for (a, b)");
}

std::int64_t param(const ParamMap& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw ValidationError("missing parameter '" + key + "'");
  return it->second;
}

}  // namespace

FunctionSpec make_ghd(int n, int a, int b, int c, int g) {
  require_gap(n, a, b, c, g, "ghd");
  auto rule = [=](int x, int y, int d) {
    if (x != a || y != b) return Ternary::Undefined;
    if (d >= c + g) return Ternary::One;
    if (d <= c - g) return Ternary::Zero;
    return Ternary::Undefined;
  };
  return FunctionSpec(n, rule, "ghd", {{"a", a}, {"b", b}, {"c", c}, {"g", g}});
}

FunctionSpec make_eghd(int n, int a, int b, int c, int g) {
  require_gap(n, a, b, c, g, "eghd");
  auto rule = [=](int x, int y, int d) {
    if (x != a || y != b) return Ternary::Undefined;
    if (d == c + g) return Ternary::One;
    if (d == c - g) return Ternary::Zero;
    return Ternary::Undefined;
  };
  return FunctionSpec(n, rule, "eghd", {{"a", a}, {"b", b}, {"c", c}, {"g", g}});
}

namespace {

// One at distance lo, Zero at lo + 2, on the single slice (a, b).
FunctionSpec two_point(int n, int a, int b, int lo, const std::string& family, ParamMap params) {
  if (!is_valid_distance(n, a, b, lo) || !is_valid_distance(n, a, b, lo + 2))
    throw ValidationError(family + ": parameters do not fit in n");
  auto rule = [=](int x, int y, int d) {
    if (x != a || y != b) return Ternary::Undefined;
    if (d == lo) return Ternary::One;
    if (d == lo + 2) return Ternary::Zero;
    return Ternary::Undefined;
  };
  return FunctionSpec(n, rule, family, std::move(params));
}

}  // namespace

FunctionSpec make_udisj(int n, int t) {
  if (t < 1) throw ValidationError("udisj: t must be >= 1");
  return two_point(n, t, t, 2 * t - 2, "udisj", {{"t", t}});
}

FunctionSpec make_set_inclusion(int n, int p, int q) {
  if (p < 1 || q < p) throw ValidationError("setinc: need 1 <= p <= q");
  return two_point(n, p, q, q - p, "setinc", {{"p", p}, {"q", q}});
}

FunctionSpec make_sparse_indexing(int n, int t) {
  if (t < 1) throw ValidationError("si: t must be >= 1");
  return two_point(n, t, 1, t - 1, "si", {{"t", t}});
}

FunctionSpec make_hamming_threshold(int n, int k) {
  if (k < 0) throw ValidationError("hd: k must be >= 0");
  return FunctionSpec(n, [k](int, int, int d) { return ternary_of(d <= k); }, "hd", {{"k", k}});
}

FunctionSpec make_equality(int n) {
  return FunctionSpec(n, [](int, int, int d) { return ternary_of(d == 0); }, "equality", {});
}

FunctionSpec build_strongly_pi(int n, const StronglyPiDescriptor& desc) {
  if (static_cast<int>(desc.sigma.size()) != n + 1) throw ValidationError("strongly_pi: sigma must have n+1 entries");
  for (auto v : desc.gate)
    if (v > 1) throw ValidationError("strongly_pi: gate entries must be 0/1");
  auto rule = [n, desc](int a, int b, int d) {
    const int i11 = (a + b - d) / 2;
    const int i10 = a - i11, i01 = b - i11, i00 = n - a - b + i11;
    const int count = desc.gate_at(1, 1) * i11 + desc.gate_at(1, 0) * i10 + desc.gate_at(0, 1) * i01 +
                      desc.gate_at(0, 0) * i00;
    return ternary_of(desc.sigma[static_cast<std::size_t>(count)] != 0);
  };
  FunctionSpec f(n, rule, "strongly_pi", {});
  f.set_descriptor(desc);
  return f;
}

FunctionSpec build_named(const std::string& family, int n, const ParamMap& p) {
  auto i = [&](const char* k) { return static_cast<int>(param(p, k)); };
  if (family == "ghd") return make_ghd(n, i("a"), i("b"), i("c"), i("g"));
  if (family == "eghd") return make_eghd(n, i("a"), i("b"), i("c"), i("g"));
  if (family == "udisj") return make_udisj(n, i("t"));
  if (family == "setinc") return make_set_inclusion(n, i("p"), i("q"));
  if (family == "si") return make_sparse_indexing(n, i("t"));
  if (family == "hd") return make_hamming_threshold(n, i("k"));
  if (family == "equality") return make_equality(n);
  throw ValidationError("unknown family '" + family + "'");
}

InputPair canonical_pair(int n, int a, int b, int d) {
  if (!is_valid_distance(n, a, b, d)) throw ValidationError("canonical_pair: d is not valid for (n, a, b)");
  const int shared = (a + b - d) / 2;
  InputPair p{Bits(static_cast<std::size_t>(n), 0), Bits(static_cast<std::size_t>(n), 0)};
  for (int i = 0; i < a; ++i) p.x[i] = 1;
  for (int i = 0; i < shared; ++i) p.y[i] = 1;
  for (int i = 0; i < b - shared; ++i) p.y[a + i] = 1;
  return p;
}

FunctionSpec random_total_pi(int n, std::uint64_t seed, double plateau_bias) {
  if (!(plateau_bias >= 0.0 && plateau_bias <= 1.0)) throw ValidationError("plateau_bias must lie in [0, 1]");
  auto rule = [n, seed, plateau_bias](int a, int b, int d) {
    const auto slot = static_cast<std::uint64_t>(a) * (n + 1) + b;
    bool v = keyed_word(seed, slot, 0) & 1u;
    for (int e = std::abs(a - b) + 2; e <= d; e += 2)
      if (to_unit(keyed_word(seed, slot, static_cast<std::uint64_t>(e))) < plateau_bias) v = !v;
    return ternary_of(v);
  };
  return FunctionSpec(n, rule, "random",
                      {{"seed", static_cast<std::int64_t>(seed)},
                       {"bias_ppm", static_cast<std::int64_t>(plateau_bias * 1e6 + 0.5)}});
}

std::string save_spec_json(const FunctionSpec& f) {
  json j;
  j["n"] = f.n();
  j["family"] = f.family();
  json params = json::object();
  for (const auto& [k, v] : f.params()) params[k] = v;
  if (f.descriptor()) {
    params["gate"] = f.descriptor()->gate;
    params["sigma"] = f.descriptor()->sigma;
  }
  j["params"] = params;
  json slices = json::array();
  for (int a = 0; a <= f.n(); ++a) {
    json row = json::array();
    for (int b = 0; b <= f.n(); ++b) {
      json cells = json::array();
      for (auto v : f.slice(a, b).values) {
        if (v == Ternary::Undefined)
          cells.push_back(nullptr);
        else
          cells.push_back(v == Ternary::One ? 1 : 0);
      }
      row.push_back(std::move(cells));
    }
    slices.push_back(std::move(row));
  }
  j["slices"] = std::move(slices);
  return j.dump() + "\n";
}

FunctionSpec load_spec_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("spec json: ") + e.what());
  }
  if (!j.is_object() || !j.contains("n") || !j["n"].is_number_integer())
    throw ValidationError("spec json: missing integer field 'n'");
  const int n = j["n"].get<int>();
  const std::string family = j.value("family", std::string("explicit"));
  ParamMap params;
  std::optional<StronglyPiDescriptor> desc;
  if (j.contains("params")) {
    const json& p = j["params"];
    if (!p.is_object()) throw ValidationError("spec json: 'params' must be an object");
    for (auto it = p.begin(); it != p.end(); ++it) {
      if (it.key() == "gate" || it.key() == "sigma") continue;
      if (!it.value().is_number_integer()) throw ValidationError("spec json: parameter '" + it.key() + "' must be an integer");
      params[it.key()] = it.value().get<std::int64_t>();
    }
    if (p.contains("gate") || p.contains("sigma")) {
      StronglyPiDescriptor d;
      try {
        d.gate = p.at("gate").get<std::array<std::uint8_t, 4>>();
        d.sigma = p.at("sigma").get<std::vector<std::uint8_t>>();
      } catch (const json::exception& e) {
        throw ValidationError(std::string("spec json: bad strongly-PI descriptor: ") + e.what());
      }
      desc = d;
    }
  }

  if (!j.contains("slices")) {
    if (desc) return build_strongly_pi(n, *desc);
    return build_named(family, n, params);
  }

  const json& s = j["slices"];
  if (!s.is_array() || static_cast<int>(s.size()) != n + 1) throw ValidationError("spec json: 'slices' must have n+1 rows");
  for (int a = 0; a <= n; ++a) {
    if (!s[a].is_array() || static_cast<int>(s[a].size()) != n + 1)
      throw ValidationError("spec json: slices[a] must have n+1 entries");
    for (int b = 0; b <= n; ++b)
      if (!s[a][b].is_array() || s[a][b].size() != valid_distances(n, a, b).size())
        throw ValidationError("spec json: slices[" + std::to_string(a) + "][" + std::to_string(b) +
                              "] has the wrong number of distances");
  }
  auto rule = [&s](int a, int b, int d) {
    const json& v = s[a][b][static_cast<std::size_t>((d - std::abs(a - b)) / 2)];
    if (v.is_null()) return Ternary::Undefined;
    if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
      throw ValidationError("spec json: slice values must be 0, 1 or null");
    return ternary_of(v.get<int>() == 1);
  };
  FunctionSpec f(n, rule, family, params);
  if (desc) f.set_descriptor(*desc);
  return f;
}

FunctionSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open spec file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_spec_json(ss.str());
}

void save_spec_file(const FunctionSpec& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write spec file '" + path + "'");
  out << save_spec_json(f);
}

}  // namespace permcc
