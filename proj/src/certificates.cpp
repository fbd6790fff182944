#include "certificates.hpp"

namespace charpq::detail {

namespace {

[[noreturn]] void corrupt(const std::string& what) { throw Error(Error::Kind::Parse, what); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) corrupt(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

std::string str(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) corrupt(std::string("field \"") + key + "\" is not a string");
  return v.get<std::string>();
}

std::uint64_t num(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_unsigned()) corrupt(std::string("field \"") + key + "\" is not a non-negative integer");
  return v.get<std::uint64_t>();
}

// first basis element of `against` failing to commute with v, if any
std::optional<std::string> commutes_with(const FdAlgebra& a, const Vec& v, const Subspace* against) {
  if (against) {
    for (std::size_t i = 0; i < against->dim(); ++i)
      if (!is_zero(a.commutator(against->basis()[i], v))) return "fails to commute with basis vector " + std::to_string(i);
    return std::nullopt;
  }
  for (std::size_t i = 0; i < a.dim(); ++i)
    if (!is_zero(a.commutator(a.basis(i), v))) return "fails to commute with " + a.label(i);
  return std::nullopt;
}

std::optional<std::string> expect_equal(const FdAlgebra& a, const Vec& got, const Vec& want) {
  if (got == want) return std::nullopt;
  return "got " + format_element(a, got) + ", expected " + format_element(a, want);
}

WeylElement weyl_from_terms(const WeylSpace& s, const Json& terms) {
  WeylElement r(s);
  for (const auto& t : terms) {
    if (!t.is_array() || t.size() != 4) corrupt("Weyl term must be [coeff, a, b, m]");
    Exponents e(3);
    for (std::size_t k = 0; k < 3; ++k) e[k] = t[k + 1].get<Exponents::value_type>();
    r = r + WeylElement::monomial(s, e, s.field.reduce(t[0].get<std::int64_t>()));
  }
  return r;
}

}  // namespace

Json to_json(const Vec& v) { return Json(v); }

Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (const auto& r : m.data) out.push_back(Json(r));
  return out;
}

Json rows_json(const Subspace& s) {
  Json out = Json::array();
  for (const auto& r : s.basis()) out.push_back(Json(r));
  return out;
}

Vec vec_from(const Json& j, std::size_t dim, std::uint32_t p) {
  if (!j.is_array() || j.size() != dim) corrupt("vector of length " + std::to_string(dim) + " expected");
  Vec v(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (!j[i].is_number_integer() || j[i].get<std::int64_t>() < 0 || j[i].get<std::int64_t>() >= p)
      corrupt("entry " + std::to_string(i) + " is " + j[i].dump() + ", not in [0, " + std::to_string(p) + ")");
    v[i] = j[i].get<Scalar>();
  }
  return v;
}

Matrix matrix_from(const Json& j, std::uint32_t p) {
  if (!j.is_array()) corrupt("matrix must be an array of rows");
  Matrix m(j.size(), j.empty() ? 0 : j[0].size());
  for (std::size_t r = 0; r < m.rows; ++r) m.data[r] = vec_from(j[r], m.cols, p);
  return m;
}

const FdAlgebra& CertContext::algebra(const std::string& name) const {
  if (auto it = algebras.find(name); it != algebras.end()) return it->second;
  if (auto it = poisson.find(name); it != poisson.end()) return it->second.algebra();
  corrupt("unknown algebra \"" + name + "\"");
}

const PoissonTruncation& CertContext::poisson_algebra(const std::string& name) const {
  if (auto it = poisson.find(name); it != poisson.end()) return it->second;
  corrupt("unknown Poisson algebra \"" + name + "\"");
}

const Subspace& CertContext::subspace(const std::string& name) const {
  if (auto it = subspaces.find(name); it != subspaces.end()) return it->second.second;
  corrupt("unknown subspace \"" + name + "\"");
}

CertContext load_context(const Json& artifacts) {
  CertContext ctx;
  if (!artifacts.is_object()) corrupt("artifacts must be an object");
  if (artifacts.contains("algebras"))
    for (const auto& [name, doc] : artifacts.at("algebras").items()) {
      if (doc.contains("bracket"))
        ctx.poisson.emplace(name, PoissonTruncation::from_json(doc.dump()));
      else
        ctx.algebras.emplace(name, FdAlgebra::from_json(doc.dump()));
    }
  if (artifacts.contains("subspaces"))
    for (const auto& [name, doc] : artifacts.at("subspaces").items()) {
      const FdAlgebra& a = ctx.algebra(str(doc, "algebra"));
      std::vector<Vec> rows;
      for (const auto& r : field(doc, "rows")) rows.push_back(vec_from(r, a.dim(), a.p()));
      Subspace s = Subspace::span(a.field(), a.dim(), rows);
      if (s.dim() != rows.size()) corrupt("subspace \"" + name + "\" rows are dependent");
      ctx.subspaces.emplace(name, std::make_pair(str(doc, "algebra"), std::move(s)));
    }
  if (artifacts.contains("modules"))
    for (const auto& doc : artifacts.at("modules")) {
      Field f(static_cast<std::uint32_t>(num(doc, "p")));
      try {
        ctx.modules.push_back(make_w1_module(f, matrix_from(field(doc, "x"), f.p()), matrix_from(field(doc, "y"), f.p())));
      } catch (const Error& e) {
        corrupt(std::string("module: ") + e.what());
      }
    }
  return ctx;
}

std::optional<std::string> check_certificate(const CertContext& ctx, const Json& c) {
  const std::string type = str(c, "type");

  if (type == "weyl_identity") {
    WeylSpace s(static_cast<std::uint32_t>(num(c, "p")), 1, static_cast<unsigned>(num(c, "M")));
    const unsigned p = s.p();
    auto x = WeylElement::x(s, 0), y = WeylElement::y(s, 0), h = WeylElement::hbar(s);
    auto r = weyl_from_terms(s, field(c, "r"));
    for (unsigned i = 0; i < 2; ++i) {
      auto g = i ? y : x;
      if (!commutator(r, g).is_zero()) return std::string("r is not central");
    }
    auto ry = multiply(r, power(y, p - 1));
    auto lhs = pth_power(x + ry);
    auto rhs = pth_power(x) + pth_power(ry) - multiply(power(h, p - 1), r);
    if (!lhs.equals(rhs)) return std::string("(x + r y^(p-1))^p differs from x^p + (r y^(p-1))^p - hbar^(p-1) r");
    return std::nullopt;
  }
  if (type == "qow") {
    auto idx = num(c, "module");
    if (idx >= ctx.modules.size()) corrupt("module index out of range");
    const W1Module& m = ctx.modules[idx];
    Field f(m.p);
    Vec v = vec_from(field(c, "m"), m.dim(), m.p), m1 = vec_from(field(c, "m1"), m.dim(), m.p),
        m2 = vec_from(field(c, "m2"), m.dim(), m.p);
    Vec back = add(f, apply(f, power(f, m.x, m.p - 1), m1), apply(f, m.y, m2));
    if (back != v) return std::string("X^(p-1) m' + Y m'' != m");
    return std::nullopt;
  }
  if (type == "weyl_module") {
    Field f(static_cast<std::uint32_t>(num(c, "p")));
    WeylModule wm;
    for (const auto& x : field(c, "x")) wm.x.push_back(matrix_from(x, f.p()));
    for (const auto& y : field(c, "y")) wm.y.push_back(matrix_from(y, f.p()));
    wm.hbar = matrix_from(field(c, "hbar"), f.p());
    KwReport r;
    try {
      r = kw_divisibility_check(f, wm);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    if (r.rank != num(c, "rank")) return "rank is " + std::to_string(r.rank);
    if (!field(c, "divisible").is_boolean() || r.divisible != c.at("divisible").get<bool>())
      return std::string("divisibility verdict differs");
    if (!r.divisible) return "rank " + std::to_string(r.rank) + " is not a multiple of " + std::to_string(r.p_power);
    return std::nullopt;
  }

  if (type == "member" || type == "residue") {
    auto it = ctx.subspaces.find(str(c, "subspace"));
    if (it == ctx.subspaces.end()) corrupt("unknown subspace \"" + str(c, "subspace") + "\"");
    const auto& [alg, s] = it->second;
    const FdAlgebra& a = ctx.algebra(alg);
    Vec v = vec_from(field(c, type == "member" ? "element" : "a"), a.dim(), a.p());
    if (type == "residue") v = a.sub(v, vec_from(field(c, "b"), a.dim(), a.p()));
    if (!s.contains(v)) return std::string(type == "member" ? "element" : "a - b") + " is outside " + str(c, "subspace");
    return std::nullopt;
  }

  const std::string an = str(c, "algebra");
  if (type == "ad_nilpotent" || type == "poisson_bracket" || type == "ideal_chain") {
    const PoissonTruncation& b = ctx.poisson_algebra(an);
    const FdAlgebra& a = b.algebra();
    if (type == "poisson_bracket")
      return expect_equal(a, b.bracket(vec_from(field(c, "a"), a.dim(), a.p()), vec_from(field(c, "b"), a.dim(), a.p())),
                          vec_from(field(c, "expect"), a.dim(), a.p()));
    if (type == "ad_nilpotent") {
      Vec v = vec_from(field(c, "element"), a.dim(), a.p());
      if (!(ad_power_matrix(b, v, static_cast<unsigned>(num(c, "power"))) == Matrix(a.dim(), a.dim())))
        return std::string("ad(element)^k is not zero");
      return std::nullopt;
    }
    const Subspace& m = ctx.subspace(str(c, "m"));
    const Subspace& i = ctx.subspace(str(c, "i"));
    if (!m.contains(i)) return std::string("I is not inside m'");
    for (const auto& u : m.basis())
      for (const auto& v : m.basis())
        if (!i.contains(b.bracket(u, v))) return std::string("{m', m'} is not inside I");
    return std::nullopt;
  }

  const FdAlgebra& a = ctx.algebra(an);
  auto elem = [&](const char* key) { return vec_from(field(c, key), a.dim(), a.p()); };
  if (type == "commutator") return expect_equal(a, a.commutator(elem("a"), elem("b")), elem("expect"));
  if (type == "central") return commutes_with(a, elem("element"), nullptr);
  if (type == "pth_power_central") {
    if (auto bad = commutes_with(a, a.power(elem("element"), a.p()), nullptr)) return "element^p " + *bad;
    return std::nullopt;
  }
  if (type == "restricted") {
    Vec w = elem("witness");
    if (c.contains("within") && !ctx.subspace(str(c, "within")).contains(w))
      return "witness is outside " + str(c, "within");
    Vec central = a.sub(a.power(elem("element"), a.p()), a.mul(a.power(a.hbar(), a.p() - 1), w));
    if (auto bad = commutes_with(a, central, nullptr)) return "a^p - hbar^(p-1) w " + *bad;
    return std::nullopt;
  }
  if (type == "dimension") {
    if (a.dim() != num(c, "expect")) return "dimension is " + std::to_string(a.dim());
    return std::nullopt;
  }

  std::vector<Vec> elements;
  if (c.contains("elements"))
    for (const auto& e : c.at("elements")) elements.push_back(vec_from(e, a.dim(), a.p()));
  if (type == "generated") {
    if (!(generated_subalgebra(a, elements) == ctx.subspace(str(c, "subspace"))))
      return "subspace is not the subalgebra generated by the elements";
    return std::nullopt;
  }
  if (type == "centralizer") {
    if (!(centralizer(a, elements) == ctx.subspace(str(c, "subspace"))))
      return "subspace is not the centralizer of the elements";
    return std::nullopt;
  }
  if (type == "product_rank") {
    const Subspace& l = ctx.subspace(str(c, "left"));
    const Subspace& r = ctx.subspace(str(c, "right"));
    EchelonBuilder span(a.field(), a.dim());
    for (const auto& u : l.basis())
      for (const auto& v : r.basis()) span.insert(a.mul(u, v));
    if (span.rank() != num(c, "expect")) return "rank is " + std::to_string(span.rank());
    return std::nullopt;
  }
  if (type == "dim_identity") {
    const Subspace& h = ctx.subspace(str(c, "h"));
    const Subspace& s = ctx.subspace(str(c, "s_prime"));
    Subspace zh = h.intersect(centralizer(a, h.basis()));
    if (a.dim() * zh.dim() != h.dim() * s.dim())
      return "dim A * dim Z(H) = " + std::to_string(a.dim() * zh.dim()) + ", dim H * dim S' = " +
             std::to_string(h.dim() * s.dim());
    if (!(h.intersect(s) == zh)) return std::string("H cap S' differs from Z(H)");
    return std::nullopt;
  }
  corrupt("unknown certificate type \"" + type + "\"");
}

}  // namespace charpq::detail
