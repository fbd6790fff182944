#include "charpq/scenario.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "certificates.hpp"

namespace charpq {

using detail::rows_json;
using detail::to_json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(Error::Kind::Parse, what); }

unsigned get_uint(const Json& j, const char* key, unsigned fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_unsigned()) bad(std::string("\"") + key + "\" must be a non-negative integer");
  return j.at(key).get<unsigned>();
}

std::string get_string(const Json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) bad(std::string("\"") + key + "\" must be a string");
  return j.at(key).get<std::string>();
}

const std::set<std::string> kCommands{"check", "lift", "decompose", "pipeline", "kw", "poisson", "selftest"};

// -- report assembly ------------------------------------------------------------

struct Builder {
  Json algebras = Json::object();
  Json subspaces = Json::object();
  Json modules = Json::array();
  Json certs = Json::array();
  Json result = Json::object();
  Json timings = Json::object();

  void algebra(const std::string& name, const FdAlgebra& a) { algebras[name] = Json::parse(a.to_json()); }
  void poisson(const std::string& name, const PoissonTruncation& b) { algebras[name] = Json::parse(b.to_json()); }
  void subspace(const std::string& name, const std::string& alg, const Subspace& s) {
    subspaces[name] = Json{{"algebra", alg}, {"rows", rows_json(s)}};
  }
  void cert(Json c) { certs.push_back(std::move(c)); }

  template <class F>
  auto timed(const std::string& stage, F&& fn) {
    auto t0 = std::chrono::steady_clock::now();
    struct Stop {
      Builder& b;
      std::string stage;
      std::chrono::steady_clock::time_point t0;
      ~Stop() {
        b.timings[stage] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      }
    } stop{*this, stage, t0};
    return fn();
  }

  Json artifacts() const { return Json{{"algebras", algebras}, {"subspaces", subspaces}, {"modules", modules}}; }
};

Json cert(const std::string& id, const std::string& type, const std::string& algebra) {
  Json c{{"id", id}, {"type", type}};
  if (!algebra.empty()) c["algebra"] = algebra;
  return c;
}

std::string tag(const char* s, std::size_t i) { return std::string(s) + std::to_string(i + 1); }

// -- inputs ------------------------------------------------------------------------

Vec element(const FdAlgebra& a, const Json& e) {
  auto basis = [&](const std::string& label) {
    auto i = a.find_label(label);
    if (!i) bad("unknown basis label \"" + label + "\"");
    return a.basis(*i);
  };
  if (e.is_string()) return basis(e.get<std::string>());
  if (e.is_object()) {
    Vec v = a.zero();
    for (const auto& [label, c] : e.items()) {
      if (!c.is_number_integer()) bad("coefficient of \"" + label + "\" must be an integer");
      v = axpy(a.field(), a.field().reduce(c.get<std::int64_t>()), basis(label), v);
    }
    return v;
  }
  bad("an element is a basis label or an object {label: coefficient}");
}

std::vector<Pair> pairs_in(const FdAlgebra& a, const Json& doc, unsigned n) {
  Json spec = doc.contains("pairs") ? doc.at("pairs") : Json::array();
  if (!doc.contains("pairs")) {
    for (unsigned i = 0; i < n; ++i)
      spec.push_back(n == 1 ? Json{"x", "y"} : Json{tag("x", i), tag("y", i)});
  }
  if (!spec.is_array()) bad("\"pairs\" must be an array");
  std::vector<Pair> out;
  for (const auto& pr : spec) {
    if (!pr.is_array() || pr.size() != 2) bad("each pair must have two elements");
    out.emplace_back(element(a, pr[0]), element(a, pr[1]));
  }
  return out;
}

Matrix line_x(const Field& f) {
  Matrix x(f.p(), f.p());
  for (std::uint32_t i = 0; i + 1 < f.p(); ++i) x.at(i + 1, i) = 1;
  return x;
}

Matrix line_y(const Field& f) {
  Matrix y(f.p(), f.p());
  for (std::uint32_t i = 0; i + 1 < f.p(); ++i) y.at(i, i + 1) = f.neg(f.reduce(i + 1));
  return y;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string resolve(const Scenario& s, const std::string& path) {
  std::string base = get_string(s.doc, "base_dir", "");
  if (path.empty() || path[0] == '/' || base.empty()) return path;
  return base + "/" + path;
}

FdAlgebra build_algebra(const Scenario& s) {
  const Json& d = s.doc;
  const Json& spec = d.at("algebra");
  const unsigned p = get_uint(d, "p", 3), n = get_uint(d, "n", 1), m = get_uint(d, "M", 4 * p);
  const std::string kind = get_string(spec, "kind", "weyl");
  if (kind == "weyl") return from_weyl_truncation(p, n, m);
  if (kind == "weyl_tensor")
    return tensor_with_central(from_weyl_truncation(p, n, m), truncated_polynomial(p, get_uint(spec, "z_order", 2)));
  if (kind == "reduced_weyl") return reduced_weyl(p, n, get_uint(spec, "hbar_order", 2));
  if (kind == "mat_p") {
    Field f(p);
    return matrix_algebra(f, {line_x(f), line_y(f)}, {"X", "Y"});
  }
  if (kind == "file") return FdAlgebra::from_json(read_file(resolve(s, get_string(spec, "path", ""))));
  bad("unknown algebra kind \"" + kind + "\"");
}

PoissonTruncation build_poisson(const Scenario& s) {
  const Json& d = s.doc;
  const Json& spec = d.at("algebra");
  const unsigned p = get_uint(d, "p", 3), n = get_uint(d, "n", 1);
  const std::string kind = get_string(spec, "kind", "symplectic");
  if (kind == "symplectic") return symplectic_truncation(p, n, get_uint(spec, "k", 1));
  if (kind == "file") return PoissonTruncation::from_json(read_file(resolve(s, get_string(spec, "path", ""))));
  if (kind != "polynomial") bad("unknown Poisson algebra kind \"" + kind + "\"");
  std::vector<PoissonVariable> vars;
  for (const auto& v : spec.at("variables"))
    vars.push_back({get_string(v, "name", ""), get_uint(v, "bound", p), get_uint(v, "degree", 1)});
  std::vector<GeneratorBracket> brackets;
  for (const auto& b : spec.at("brackets")) {
    GeneratorBracket g{get_uint(b, "i", 0), get_uint(b, "j", 0), {}};
    for (const auto& t : b.at("value")) {
      if (!t.is_array() || t.size() != vars.size() + 1) bad("bracket term must be [coeff, exponents...]");
      std::vector<unsigned> e;
      for (std::size_t k = 1; k < t.size(); ++k) e.push_back(t[k].get<unsigned>());
      g.value[e] = Field(p).reduce(t[0].get<std::int64_t>());
    }
    brackets.push_back(std::move(g));
  }
  return polynomial_poisson(p, vars, brackets);
}

struct JPrime {
  Ideal ideal;
  std::optional<PoissonReduction> red;
  std::optional<PoissonIdeal> poisson_ideal;
};

JPrime build_jprime(const FdAlgebra& a, const Json& doc) {
  Json spec = doc.contains("ideal") ? doc.at("ideal") : Json::object();
  const std::string kind = get_string(spec, "kind", "reduction");
  if (kind == "maximal") return {maximal_ideal(a), std::nullopt, std::nullopt};
  if (kind == "hbar_torsion") {
    HbarDivision div(a);
    return {make_ideal(a, hbar_ideal(a).space.sum(div.torsion())), std::nullopt, std::nullopt};
  }
  if (kind != "reduction") bad("unknown ideal kind \"" + kind + "\"");
  PoissonReduction red = reduce_mod_hbar(a);
  const FdAlgebra& b = red.poisson.algebra();
  std::vector<Vec> gens;
  if (spec.contains("generators"))
    for (const auto& g : spec.at("generators")) gens.push_back(element(b, g));
  PoissonIdeal pi = poisson_ideal_generated(red.poisson, gens);
  std::vector<Vec> rows = red.kernel.basis();
  for (const auto& v : pi.space.basis()) rows.push_back(red.lift(v));
  Ideal j = make_ideal(a, Subspace::span(a.field(), a.dim(), rows));
  return {std::move(j), std::move(red), std::move(pi)};
}

Subspace span_of_products(const FdAlgebra& a, const Subspace& s, unsigned k) {
  Subspace out = s;
  for (unsigned t = 1; t < k; ++t) {
    std::vector<Vec> prods;
    for (const auto& u : out.basis())
      for (const auto& v : s.basis()) prods.push_back(a.mul(u, v));
    out = Subspace::span(a.field(), a.dim(), prods);
  }
  return out;
}

Subspace perturbation_space(const FdAlgebra& a, const Subspace& jprime, const Json& doc) {
  Json spec = doc.contains("perturbation") ? doc.at("perturbation") : Json::object();
  const std::string space = get_string(spec, "space", "none");
  auto hbar_times = [&](const Subspace& s) {
    std::vector<Vec> v;
    for (const auto& b : s.basis()) v.push_back(a.mul(a.hbar(), b));
    return Subspace::span(a.field(), a.dim(), v);
  };
  if (space == "none") return Subspace(a.field(), a.dim());
  if (space == "hbar_jprime") return hbar_times(jprime);
  if (space == "hbar_f1") return hbar_times(a.filtration(1));
  if (space == "mprime_power") return ideal_power(a, maximal_ideal(a), get_uint(spec, "k", 1)).space;
  if (space == "ideal") return span_of_products(a, jprime, get_uint(spec, "k", 1));
  bad("unknown perturbation space \"" + space + "\"");
}

Vec draw(const FdAlgebra& a, const Subspace& s, std::mt19937_64& rng) {
  Vec v = a.zero();
  for (const auto& b : s.basis()) v = axpy(a.field(), static_cast<Scalar>(rng() % a.p()), b, v);
  return v;
}

std::vector<Pair> perturb(const FdAlgebra& a, std::vector<Pair> pairs, const Subspace& space, std::mt19937_64& rng) {
  for (auto& [z, w] : pairs) {
    z = a.add(z, draw(a, space, rng));
    w = a.add(w, draw(a, space, rng));
  }
  return pairs;
}

Json pairs_json(const std::vector<Pair>& pairs) {
  Json out = Json::array();
  for (const auto& [z, w] : pairs) out.push_back(Json{to_json(z), to_json(w)});
  return out;
}

// -- certificate families ------------------------------------------------------------

// Bracket relations, p-th powers and residues of lifted pairs.
void lift_certificates(Builder& b, const FdAlgebra& a, const std::string& alg, const std::string& jprime,
                       const std::vector<Pair>& initial, const std::vector<Pair>& pairs, const Vec& planck) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      Json c = cert("[" + tag("z", i) + ", " + tag("w", j) + "] = " + (i == j ? "hbar" : "0"), "commutator", alg);
      c["a"] = to_json(pairs[i].first);
      c["b"] = to_json(pairs[j].second);
      c["expect"] = to_json(i == j ? planck : a.zero());
      b.cert(std::move(c));
      if (i < j) {
        for (int side = 0; side < 2; ++side) {
          const char* s = side ? "w" : "z";
          Json d = cert("[" + tag(s, i) + ", " + tag(s, j) + "] = 0", "commutator", alg);
          d["a"] = to_json(side ? pairs[i].second : pairs[i].first);
          d["b"] = to_json(side ? pairs[j].second : pairs[j].first);
          d["expect"] = to_json(a.zero());
          b.cert(std::move(d));
        }
      }
    }
    for (int side = 0; side < 2; ++side) {
      const char* s = side ? "w" : "z";
      Json c = cert(tag(s, i) + "^p central", "pth_power_central", alg);
      c["element"] = to_json(side ? pairs[i].second : pairs[i].first);
      b.cert(std::move(c));
    }
  }
  if (jprime.empty()) return;
  for (std::size_t i = 0; i < pairs.size() && i < initial.size(); ++i)
    for (int side = 0; side < 2; ++side) {
      const char* s = side ? "w" : "z";
      Json c = cert(tag(s, i) + " residue mod J'", "residue", "");
      c["subspace"] = jprime;
      c["a"] = to_json(side ? pairs[i].second : pairs[i].first);
      c["b"] = to_json(side ? initial[i].second : initial[i].first);
      b.cert(std::move(c));
    }
}

void split_certificates(Builder& b, const FdAlgebra& a, const std::string& alg, const SplitResult& s) {
  b.subspace("H", alg, s.h);
  b.subspace("S_prime", alg, s.s_prime);
  Json gens = Json::array();
  for (const auto& [z, w] : s.pairs) {
    gens.push_back(to_json(z));
    gens.push_back(to_json(w));
  }
  Json c = cert("H is generated by the pairs", "generated", alg);
  c["subspace"] = "H";
  c["elements"] = gens;
  b.cert(std::move(c));
  c = cert("S' is the centralizer of the pairs", "centralizer", alg);
  c["subspace"] = "S_prime";
  c["elements"] = gens;
  b.cert(std::move(c));
  c = cert("H S' = A", "product_rank", alg);
  c["left"] = "H";
  c["right"] = "S_prime";
  c["expect"] = a.dim();
  b.cert(std::move(c));
  c = cert("dim A dim Z(H) = dim H dim S'", "dim_identity", alg);
  c["h"] = "H";
  c["s_prime"] = "S_prime";
  b.cert(std::move(c));
  const auto& k = s.certificate;
  b.result["split"] = Json{{"algebra", k.algebra}, {"h", k.h},           {"center_h", k.center_h},
                           {"s_prime", k.s_prime}, {"product_rank", k.product_rank}};
}

void restricted_certificates(Builder& b, const FdAlgebra& a, const std::string& alg, const std::vector<Vec>& elements,
                             const std::vector<std::string>& ids, const Subspace* within, const std::string& within_name) {
  for (std::size_t i = 0; i < elements.size(); ++i) {
    Json c = cert(ids[i] + "^[p]", "restricted", alg);
    c["element"] = to_json(elements[i]);
    Vec w = a.zero();
    try {
      w = restricted_power(a, elements[i], within).witness;
    } catch (const Error& e) {
      if (e.kind() != Error::Kind::NotWeaklyCentral) throw;
    }
    c["witness"] = to_json(w);
    if (within) c["within"] = within_name;
    b.cert(std::move(c));
  }
}

Json trace_json(const std::vector<LiftStep>& steps) {
  Json out = Json::array();
  for (const auto& s : steps) {
    Json t{{"pair", s.pair}, {"phase", s.phase}, {"level", s.level}, {"correction", to_json(s.correction)}};
    if (!s.note.empty()) t["note"] = s.note;
    out.push_back(std::move(t));
  }
  return out;
}

// -- commands -----------------------------------------------------------------------------

void run_check(const Scenario& s, Builder& b, std::mt19937_64& rng) {
  FdAlgebra a = b.timed("build", [&] { return build_algebra(s); });
  b.algebra("A", a);
  std::vector<Vec> elems;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    elems.push_back(a.basis(i));
    ids.push_back(a.label(i));
  }
  const unsigned samples = get_uint(s.doc, "samples", 8);
  Subspace all = Subspace::full(a.field(), a.dim());
  for (unsigned k = 0; k < samples; ++k) {
    elems.push_back(draw(a, all, rng));
    ids.push_back("sample" + std::to_string(k + 1));
  }
  b.timed("witnesses", [&] { restricted_certificates(b, a, "A", elems, ids, nullptr, ""); });
  b.result["dim"] = a.dim();
  try {
    b.result["reduction_dim"] = reduce_mod_hbar(a).poisson.dim();
  } catch (const Error& e) {
    b.result["reduction"] = std::string(kind_name(e.kind())) + ": " + e.what();
  }
}

LiftReport lift_into(const Scenario& s, Builder& b, const FdAlgebra& a, std::mt19937_64& rng) {
  const unsigned n = get_uint(s.doc, "n", 1);
  JPrime jp = b.timed("ideal", [&] { return build_jprime(a, s.doc); });
  b.subspace("jprime", "A", jp.ideal.space);
  auto initial = perturb(a, pairs_in(a, s.doc, n), perturbation_space(a, jp.ideal.space, s.doc), rng);
  LiftOptions opts;
  if (s.doc.contains("options")) opts.g_exponent = get_uint(s.doc.at("options"), "g_exponent", 0);
  LiftReport rep = b.timed("lift", [&] { return darboux_lift_full(a, jp.ideal, initial, opts); });
  lift_certificates(b, a, "A", "jprime", initial, rep.pairs, a.hbar());
  b.result["initial"] = pairs_json(initial);
  b.result["pairs"] = pairs_json(rep.pairs);
  b.result["trace"] = trace_json(rep.steps);
  b.result["cleanup_used"] = rep.cleanup_used;
  b.result["precision"] = rep.precision;
  b.result["terminal_dim"] = rep.terminal.dim();
  return rep;
}

void run_lift(const Scenario& s, Builder& b, std::mt19937_64& rng) {
  FdAlgebra a = b.timed("build", [&] { return build_algebra(s); });
  b.algebra("A", a);
  lift_into(s, b, a, rng);
}

void run_decompose(const Scenario& s, Builder& b, std::mt19937_64& rng) {
  FdAlgebra a = b.timed("build", [&] { return build_algebra(s); });
  b.algebra("A", a);
  const bool slice = get_string(s.doc.at("algebra"), "kind", "weyl") == "mat_p";
  std::vector<Pair> pairs;
  if (slice) {
    pairs = {{a.basis(*a.find_label("X")), a.basis(*a.find_label("Y"))}};
  } else if (get_string(s.doc.value("perturbation", Json::object()), "space", "none") != "none") {
    pairs = lift_into(s, b, a, rng).pairs;
  } else {
    pairs = pairs_in(a, s.doc, get_uint(s.doc, "n", 1));
    lift_certificates(b, a, "A", "", {}, pairs, a.hbar());
  }
  Vec planck = slice ? a.unit() : a.hbar();
  if (slice) {
    lift_certificates(b, a, "A", "", {}, pairs, planck);
    Json c = cert("dim = p^2", "dimension", "A");
    c["expect"] = a.p() * a.p();
    b.cert(std::move(c));
  }
  SplitResult split = b.timed("split", [&] { return split_by_weyl_pairs(a, pairs, planck); });
  split_certificates(b, a, "A", split);
}

void run_pipeline(const Scenario& s, Builder& b) {
  FdAlgebra a = b.timed("build", [&] { return build_algebra(s); });
  b.algebra("A", a);
  JPrime jp = b.timed("ideal", [&] { return build_jprime(a, s.doc); });
  if (!jp.red) bad("pipeline needs an ideal of kind \"reduction\"");
  b.subspace("jprime", "A", jp.ideal.space);
  const FdAlgebra& bq = jp.red->poisson.algebra();
  auto leaf = pairs_in(bq, s.doc, get_uint(s.doc, "n", 1));
  LocalModel lm = b.timed("pipeline", [&] { return localize_pipeline(a, *jp.poisson_ideal, leaf); });

  lift_certificates(b, a, "A", "jprime", lm.lift.initial, lm.lift.pairs, a.hbar());
  split_certificates(b, a, "A", lm.split);
  b.algebra("A_plus", lm.a_plus);
  std::vector<Vec> plus;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < lm.a_plus.dim(); ++i) {
    plus.push_back(lm.a_plus.basis(i));
    ids.push_back("A+ " + lm.a_plus.label(i));
  }
  restricted_certificates(b, lm.a_plus, "A_plus", plus, ids, nullptr, "");
  ids.clear();
  for (std::size_t i = 0; i < lm.split.s_prime.dim(); ++i) ids.push_back("S' basis " + std::to_string(i));
  restricted_certificates(b, a, "A", lm.split.s_prime.basis(), ids, &lm.split.s_prime, "S_prime");

  b.poisson("L", lm.l.poisson);
  b.subspace("m_prime", "L", lm.m_prime);
  b.subspace("ideal_in_L", "L", lm.ideal_in_l);
  Json c = cert("{m', m'} in I_L in m'", "ideal_chain", "L");
  c["m"] = "m_prime";
  c["i"] = "ideal_in_L";
  b.cert(std::move(c));
  b.result["trace"] = trace_json(lm.lift.steps);
  b.result["a_plus_dim"] = lm.a_plus.dim();
  b.result["l_labels"] = lm.l.poisson.algebra().labels();
}

WeylModule build_module(const Scenario& s) {
  const unsigned p = get_uint(s.doc, "p", 3);
  Field f(p);
  Json spec = s.doc.value("module", Json::object());
  const std::string kind = get_string(spec, "kind", "standard");
  if (kind == "matrices") {
    WeylModule m;
    for (const auto& x : spec.at("x")) m.x.push_back(detail::matrix_from(x, p));
    for (const auto& y : spec.at("y")) m.y.push_back(detail::matrix_from(y, p));
    m.hbar = detail::matrix_from(spec.at("hbar"), p);
    return m;
  }
  Matrix x = line_x(f), y = line_y(f);
  if (kind == "standard") {
    const unsigned copies = get_uint(spec, "copies", 1);
    if (copies == 0) bad("module needs at least one copy");
    const std::size_t d = copies * p;
    Matrix bx(d, d), by(d, d);
    for (unsigned c = 0; c < copies; ++c)
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
          bx.at(c * p + i, c * p + j) = x.at(i, j);
          by.at(c * p + i, c * p + j) = y.at(i, j);
        }
    return {{bx}, {by}, Matrix::identity(d)};
  }
  if (kind != "tensor") bad("unknown module kind \"" + kind + "\"");
  // x_i acts on the i-th tensor factor of (F_p[t]/(t^p))^(x n)
  const unsigned n = get_uint(s.doc, "n", 1);
  std::size_t d = 1;
  for (unsigned i = 0; i < n; ++i) d *= p;
  WeylModule m{{}, {}, Matrix::identity(d)};
  for (unsigned k = 0; k < n; ++k) {
    Matrix mx(d, d), my(d, d);
    std::size_t stride = 1;
    for (unsigned t = k + 1; t < n; ++t) stride *= p;
    for (std::size_t col = 0; col < d; ++col) {
      std::size_t digit = (col / stride) % p;
      for (std::size_t r = 0; r < p; ++r) {
        std::size_t row = col + (r - digit) * stride;
        if (x.at(r, digit)) mx.at(row, col) = x.at(r, digit);
        if (y.at(r, digit)) my.at(row, col) = y.at(r, digit);
      }
    }
    m.x.push_back(mx);
    m.y.push_back(my);
  }
  return m;
}

void run_kw(const Scenario& s, Builder& b) {
  const unsigned p = get_uint(s.doc, "p", 3);
  WeylModule m = build_module(s);
  KwReport r = b.timed("kw", [&] { return kw_divisibility_check(Field(p), m); });
  Json c = cert("p^n divides the rank", "weyl_module", "");
  c["p"] = p;
  c["x"] = Json::array();
  c["y"] = Json::array();
  for (const auto& x : m.x) c["x"].push_back(to_json(x));
  for (const auto& y : m.y) c["y"].push_back(to_json(y));
  c["hbar"] = to_json(m.hbar);
  c["rank"] = r.rank;
  c["divisible"] = r.divisible;
  b.cert(std::move(c));
  b.result = Json{{"dim", r.dim}, {"rank", r.rank}, {"n", r.n}, {"p_power", r.p_power}, {"divisible", r.divisible}};
}

void run_poisson(const Scenario& s, Builder& b, std::mt19937_64& rng) {
  PoissonTruncation pb = b.timed("build", [&] { return build_poisson(s); });
  const FdAlgebra& a = pb.algebra();
  b.poisson("B", pb);
  Json spec = s.doc.value("ideal", Json::object());
  std::vector<Vec> gens;
  if (spec.contains("generators"))
    for (const auto& g : spec.at("generators")) gens.push_back(element(a, g));
  PoissonIdeal ideal = poisson_ideal_generated(pb, gens);
  b.subspace("ideal", "B", ideal.space);
  auto initial = perturb(a, pairs_in(a, s.doc, get_uint(s.doc, "n", 1)), perturbation_space(a, ideal.space, s.doc), rng);
  PoissonLift lift = b.timed("lift", [&] { return poisson_darboux_lift(pb, ideal, initial); });
  const auto& pairs = lift.pairs;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      Json c = cert("{" + tag("z", i) + ", " + tag("w", j) + "} = " + (i == j ? "1" : "0"), "poisson_bracket", "B");
      c["a"] = to_json(pairs[i].first);
      c["b"] = to_json(pairs[j].second);
      c["expect"] = to_json(i == j ? a.unit() : a.zero());
      b.cert(std::move(c));
      if (i < j)
        for (int side = 0; side < 2; ++side) {
          const char* t = side ? "w" : "z";
          Json d = cert("{" + tag(t, i) + ", " + tag(t, j) + "} = 0", "poisson_bracket", "B");
          d["a"] = to_json(side ? pairs[i].second : pairs[i].first);
          d["b"] = to_json(side ? pairs[j].second : pairs[j].first);
          d["expect"] = to_json(a.zero());
          b.cert(std::move(d));
        }
    }
    for (int side = 0; side < 2; ++side) {
      const char* t = side ? "w" : "z";
      const Json elem = to_json(side ? pairs[i].second : pairs[i].first);
      Json c = cert("ad(" + tag(t, i) + ")^p = 0", "ad_nilpotent", "B");
      c["element"] = elem;
      c["power"] = pb.p();
      b.cert(std::move(c));
      Json r = cert(tag(t, i) + " residue mod I", "residue", "");
      r["subspace"] = "ideal";
      r["a"] = elem;
      r["b"] = to_json(side ? initial[i].second : initial[i].first);
      b.cert(std::move(r));
    }
  }
  Json trace = Json::array();
  for (const auto& st : lift.steps)
    trace.push_back(Json{{"pair", st.pair}, {"phase", st.phase}, {"level", st.level}, {"correction", to_json(st.correction)}});
  b.result["initial"] = pairs_json(initial);
  b.result["pairs"] = pairs_json(pairs);
  b.result["trace"] = trace;
}

// Shifted copies of F_p[t]/(t^p), conjugated by a random unipotent-factor matrix.
W1Module random_w1_module(const Field& f, unsigned copies, std::mt19937_64& rng) {
  const std::uint32_t p = f.p();
  const std::size_t n = copies * p;
  Matrix x(n, n), y(n, n), lx = line_x(f), ly = line_y(f);
  for (unsigned c = 0; c < copies; ++c) {
    Scalar sx = rng() % p, sy = rng() % p;
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        x.at(c * p + i, c * p + j) = lx.at(i, j);
        y.at(c * p + i, c * p + j) = ly.at(i, j);
      }
      x.at(c * p + i, c * p + i) = f.add(x.at(c * p + i, c * p + i), sx);
      y.at(c * p + i, c * p + i) = f.add(y.at(c * p + i, c * p + i), sy);
    }
  }
  Matrix l = Matrix::identity(n), u = Matrix::identity(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      l.at(i, j) = rng() % p;
      u.at(j, i) = rng() % p;
    }
  Matrix pm = multiply(f, l, u);
  std::vector<Vec> cols;
  for (std::size_t i = 0; i < n; ++i) {
    Vec e(n, 0);
    e[i] = 1;
    cols.push_back(*solve(f, pm, e));
  }
  Matrix pinv = Matrix::from_columns(cols, n);
  return make_w1_module(f, multiply(f, multiply(f, pm, x), pinv), multiply(f, multiply(f, pm, y), pinv));
}

int exit_code_for(Error::Kind k) {
  switch (k) {
    case Error::Kind::Parse:
    case Error::Kind::InvalidArgument:
    case Error::Kind::DimensionMismatch:
    case Error::Kind::NotAssociative:
    case Error::Kind::SizeOverflow:
      return 2;
    case Error::Kind::InvariantViolation:
      return 3;
    default:
      return 1;
  }
}

RunOutcome finish(Json scenario, Builder& b, std::optional<Json> error, int error_code) {
  RunOutcome out;
  Json& r = out.report;
  r["schema_version"] = kReportSchema;
  r["scenario"] = std::move(scenario);
  r["result"] = b.result;
  r["artifacts"] = b.artifacts();
  bool pass = !error;
  if (!b.certs.empty()) {
    auto t0 = std::chrono::steady_clock::now();
    detail::CertContext ctx = detail::load_context(r["artifacts"]);
    for (auto& c : b.certs) {
      auto why = detail::check_certificate(ctx, c);
      c["pass"] = !why;
      if (why) c["reason"] = *why;
      pass = pass && !why;
    }
    b.timings["certify"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  std::size_t failed = 0;
  for (const auto& c : b.certs) failed += !c["pass"].get<bool>();
  r["certificates"] = b.certs;
  r["summary"] = Json{{"pass", pass}, {"certificates", b.certs.size()}, {"failed", failed}};
  if (error) r["error"] = *error;
  r["timings"] = b.timings;
  out.exit_code = error ? error_code : (pass ? 0 : 1);
  return out;
}

}  // namespace

Scenario parse_scenario(const std::string& text, std::optional<std::uint64_t> seed_override) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    bad(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("scenario must be a JSON object");
  if (!j.contains("schema_version") || !j.at("schema_version").is_number_unsigned())
    bad("scenario needs an integer \"schema_version\"");
  if (j.at("schema_version").get<unsigned>() != 1)
    bad("unsupported schema_version " + std::to_string(j.at("schema_version").get<unsigned>()));
  Scenario s;
  s.command = get_string(j, "command", "");
  if (!kCommands.count(s.command)) bad("unknown command \"" + s.command + "\"");
  s.name = get_string(j, "name", s.command);
  if (!j.contains("seed") && j.contains("perturbation") && j.at("perturbation").is_object() &&
      j.at("perturbation").contains("seed"))
    j["seed"] = j.at("perturbation").at("seed");
  if (j.contains("seed") && !j.at("seed").is_number_unsigned()) bad("\"seed\" must be a non-negative integer");
  s.seed = seed_override ? *seed_override : j.value("seed", std::uint64_t{0});
  j["seed"] = s.seed;
  const unsigned p = get_uint(j, "p", 3);
  j["p"] = p;
  j["n"] = get_uint(j, "n", 1);
  j["M"] = get_uint(j, "M", 4 * p);
  j["N"] = (j["M"].get<unsigned>() + 1) / 2;  // hbar^N has degree >= M
  if (!j.contains("algebra")) j["algebra"] = Json{{"kind", s.command == "poisson" ? "symplectic" : "weyl"}};
  if (!j.at("algebra").is_object()) bad("\"algebra\" must be an object");
  for (const char* key : {"ideal", "perturbation", "options", "module"})
    if (j.contains(key) && !j.at(key).is_object()) bad(std::string("\"") + key + "\" must be an object");
  s.doc = std::move(j);
  return s;
}

RunOutcome run_scenario(const Scenario& s) {
  if (s.command == "selftest") {
    std::vector<std::uint32_t> primes;
    if (s.doc.contains("primes"))
      for (const auto& p : s.doc.at("primes")) primes.push_back(p.get<std::uint32_t>());
    else
      primes = {3, 5};
    RunOutcome out = run_selftest(primes, s.seed);
    out.report["scenario"] = s.doc;
    return out;
  }
  Builder b;
  std::mt19937_64 rng(s.seed);
  Json echo = s.doc;
  echo.erase("base_dir");
  try {
    if (s.command == "check") run_check(s, b, rng);
    else if (s.command == "lift") run_lift(s, b, rng);
    else if (s.command == "decompose") run_decompose(s, b, rng);
    else if (s.command == "pipeline") run_pipeline(s, b);
    else if (s.command == "kw") run_kw(s, b);
    else if (s.command == "poisson") run_poisson(s, b, rng);
  } catch (const Error& e) {
    return finish(echo, b, Json{{"kind", kind_name(e.kind())}, {"message", e.what()}}, exit_code_for(e.kind()));
  } catch (const nlohmann::json::exception& e) {
    return finish(echo, b, Json{{"kind", "Parse"}, {"message", e.what()}}, 2);
  }
  return finish(echo, b, std::nullopt, 0);
}

std::string certificate_section(const Json& report) {
  Json copy = report;
  copy.erase("timings");
  return copy.dump();
}

VerifyOutcome verify_report(const Json& report) {
  if (!report.is_object() || !report.contains("schema_version") || report.at("schema_version") != kReportSchema)
    bad("not a version-1 report");
  for (const char* key : {"artifacts", "certificates", "summary"})
    if (!report.contains(key)) bad(std::string("report is missing \"") + key + "\"");
  detail::CertContext ctx = [&] {
    try {
      return detail::load_context(report.at("artifacts"));
    } catch (const Error& e) {
      if (e.kind() == Error::Kind::Parse) throw;
      bad(std::string("artifacts do not define a valid algebra: ") + e.what());
    }
  }();
  VerifyOutcome out;
  const Json& certs = report.at("certificates");
  if (!certs.is_array()) bad("\"certificates\" must be an array");
  for (std::size_t i = 0; i < certs.size(); ++i) {
    const Json& c = certs[i];
    std::string where = "certificates[" + std::to_string(i) + "]";
    if (c.is_object() && c.contains("id") && c.at("id").is_string()) where += " (" + c.at("id").get<std::string>() + ")";
    std::optional<std::string> why;
    try {
      why = detail::check_certificate(ctx, c);
    } catch (const Error& e) {
      if (e.kind() == Error::Kind::Parse) bad(where + ": " + e.what());
      why = std::string(kind_name(e.kind())) + ": " + e.what();
    }
    ++out.checked;
    if (why) out.failures.push_back(where + ": " + *why);
    if (!c.contains("pass") || !c.at("pass").is_boolean()) bad(where + ": missing \"pass\"");
    if (c.at("pass").get<bool>() == bool(why)) out.failures.push_back(where + ": recorded verdict disagrees");
  }
  if (report.contains("error"))
    out.failures.push_back("run recorded an error: " + report.at("error").value("message", std::string("?")));
  const Json& summary = report.at("summary");
  bool claimed = summary.is_object() && summary.value("pass", false);
  if (claimed != out.failures.empty()) out.failures.push_back("summary verdict disagrees with the certificates");
  out.pass = out.failures.empty() && out.checked > 0;
  return out;
}

RunOutcome run_selftest(const std::vector<std::uint32_t>& primes, std::uint64_t seed) {
  Builder b;
  Json summary = Json::object();
  try {
    for (std::uint32_t p : primes) {
      const std::string ps = std::to_string(p);
      // (x + r y^(p-1))^p for central monomials r = c x^(pi) y^(pj) hbar^k
      std::size_t count = 0;
      b.timed("identity p=" + ps, [&] {
        for (unsigned i = 0; i < 3; ++i)
          for (unsigned j = 0; j < 3; ++j)
            for (unsigned k = 0; k < 3; ++k)
              for (std::uint32_t c : {1u, p - 1}) {
                Json d = cert("p=" + ps + " r=" + std::to_string(c) + "*x^" + std::to_string(p * i) + "*y^" +
                                  std::to_string(p * j) + "*h^" + std::to_string(k),
                              "weyl_identity", "");
                d["p"] = p;
                d["M"] = 4 * p;
                d["r"] = Json::array({Json{c, p * i, p * j, k}});
                b.cert(std::move(d));
                ++count;
              }
      });
      summary["identity p=" + ps] = count;

      Field f(p);
      std::mt19937_64 rng(seed * 1000003 + p);
      b.timed("modules p=" + ps, [&] {
        for (unsigned t = 0; t < 10; ++t) {
          W1Module m = random_w1_module(f, 1 + t % 3, rng);
          const std::size_t idx = b.modules.size();
          b.modules.push_back(Json{{"p", p}, {"x", to_json(m.x)}, {"y", to_json(m.y)}});
          for (unsigned k = 0; k < 100; ++k) {
            Vec v(m.dim());
            for (auto& e : v) e = rng() % p;
            auto d = qow_decompose(f, m, v);
            Json c = cert("p=" + ps + " module " + std::to_string(t) + " vector " + std::to_string(k), "qow", "");
            c["module"] = idx;
            c["m"] = to_json(v);
            c["m1"] = to_json(d.m1);
            c["m2"] = to_json(d.m2);
            b.cert(std::move(c));
          }
        }
      });

      b.timed("mat p=" + ps, [&] {
        FdAlgebra a = matrix_algebra(f, {line_x(f), line_y(f)}, {"X", "Y"});
        const std::string name = "Mat_" + ps;
        b.algebra(name, a);
        Json c = cert(name + " dim = p^2", "dimension", name);
        c["expect"] = p * p;
        b.cert(std::move(c));
        std::vector<Pair> pairs{{a.basis(*a.find_label("X")), a.basis(*a.find_label("Y"))}};
        c = cert(name + " [X, Y] = 1", "commutator", name);
        c["a"] = to_json(pairs[0].first);
        c["b"] = to_json(pairs[0].second);
        c["expect"] = to_json(a.unit());
        b.cert(std::move(c));
        SplitResult s = split_by_weyl_pairs(a, pairs, a.unit());
        Builder local;
        split_certificates(local, a, name, s);
        for (auto& [key, sub] : local.subspaces.items()) b.subspaces[name + "_" + key] = sub;
        for (auto lc : local.certs) {
          for (const char* key : {"subspace", "left", "right", "h", "s_prime"})
            if (lc.contains(key)) lc[key] = name + "_" + lc[key].get<std::string>();
          lc["id"] = name + " " + lc["id"].get<std::string>();
          b.cert(std::move(lc));
        }
        summary[name] = local.result["split"];
      });
    }
  } catch (const Error& e) {
    b.result = summary;
    return finish(Json::object(), b, Json{{"kind", kind_name(e.kind())}, {"message", e.what()}}, exit_code_for(e.kind()));
  }
  b.result = summary;
  return finish(Json{{"schema_version", 1}, {"command", "selftest"}, {"seed", seed}, {"primes", primes}}, b,
                std::nullopt, 0);
}

}  // namespace charpq
