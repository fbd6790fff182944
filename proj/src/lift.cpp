#include "charpq/lift.hpp"

#include <algorithm>

namespace charpq {

W1Module make_w1_module(const Field& f, Matrix x, Matrix y) {
  const std::size_t n = x.rows;
  if (x.cols != n || y.rows != n || y.cols != n)
    throw Error(Error::Kind::DimensionMismatch, "action matrices must be square of equal size");
  Matrix c = subtract(f, multiply(f, x, y), multiply(f, y, x));
  if (!(c == Matrix::identity(n))) {
    std::string why = n % f.p() ? "dimension " + std::to_string(n) + " is not a multiple of p" : "XY - YX is not the identity";
    throw Error(Error::Kind::RepresentationInvalid, why);
  }
  return W1Module{f.p(), std::move(x), std::move(y)};
}

QowDecomposition qow_decompose(const Field& f, const W1Module& m, const Vec& v) {
  const std::size_t n = m.dim();
  if (v.size() != n) throw Error(Error::Kind::DimensionMismatch, "vector does not match the module");
  if (is_zero(v)) return {Vec(n, 0), Vec(n, 0)};
  Matrix xp = power(f, m.x, m.p - 1);
  Matrix stacked(n, 2 * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      stacked.at(r, c) = xp.at(r, c);
      stacked.at(r, n + c) = m.y.at(r, c);
    }
  auto t = solve(f, stacked, v);
  if (!t) throw Error(Error::Kind::InvariantViolation, "M = X^(p-1) M + Y M fails for this module");
  return {Vec(t->begin(), t->begin() + n), Vec(t->begin() + n, t->end())};
}

namespace {

Vec combine(const Field& f, const std::vector<Vec>& basis, const Vec& coeffs, std::size_t n) {
  Vec out(n, 0);
  for (std::size_t k = 0; k < basis.size(); ++k)
    if (coeffs[k]) out = axpy(f, coeffs[k], basis[k], std::move(out));
  return out;
}

Subspace times_hbar(const FdAlgebra& a, const Subspace& s) {
  std::vector<Vec> gens;
  for (const auto& v : s.basis()) gens.push_back(a.mul(a.hbar(), v));
  return Subspace::span(a.field(), a.dim(), gens);
}

bool is_central(const FdAlgebra& a, const Vec& v) {
  for (const auto& g : a.generators())
    if (!is_zero(a.commutator(g, v))) return false;
  return true;
}

// Smallest c in `domain` (pivot-canonical) with [s, v + c] = 0 for s in `with`.
std::optional<Vec> shift_into_centralizer(const FdAlgebra& a, const std::vector<Vec>& with,
                                          const Subspace& domain, const Vec& v) {
  std::vector<Vec> cols;
  for (const auto& b : domain.basis()) {
    Vec col;
    for (const auto& s : with) {
      Vec part = a.commutator(s, b);
      col.insert(col.end(), part.begin(), part.end());
    }
    cols.push_back(std::move(col));
  }
  Vec rhs;
  for (const auto& s : with) {
    Vec part = a.scale(a.field().neg(1), a.commutator(s, v));
    rhs.insert(rhs.end(), part.begin(), part.end());
  }
  if (cols.empty()) return is_zero(rhs) ? std::optional<Vec>(a.zero()) : std::nullopt;
  auto t = solve(a.field(), Matrix::from_columns(cols, rhs.size()), rhs);
  if (!t) return std::nullopt;
  return combine(a.field(), domain.basis(), *t, a.dim());
}

// The module hbar J'^k / N with N = hbar J'^(k+1) + [g, T cap J'^k], T the
// hbar-torsion, x = f and y = (1/hbar) ad(g), i.e. y(hbar v) = [g, v]. Modulo
// hbar J'^(k+1) alone y is ill-defined once T meets J'^k; the extra part of N
// is absorbed into z'' afterwards.
struct GradedPiece {
  std::vector<Vec> preimages;  // v_i with hbar v_i the basis of the quotient
  std::vector<Vec> torsion;    // basis t_j of T cap J'^k
  W1Module module;
  EchelonBuilder coords;       // rows (hbar v_i, e_i) and (n, 0) for n in N
  std::size_t ambient;

  // Coordinates of u in hbar J'^k modulo N; nullopt outside.
  std::optional<Vec> coordinates(const Field& f, const Vec& u) const {
    Vec ext(ambient + preimages.size(), 0);
    std::copy(u.begin(), u.end(), ext.begin());
    Vec r = coords.reduce(std::move(ext));
    if (std::any_of(r.begin(), r.begin() + ambient, [](Scalar c) { return c != 0; })) return std::nullopt;
    return scale(f, f.neg(1), Vec(r.begin() + ambient, r.end()));
  }
};

std::optional<GradedPiece> graded_piece(const FdAlgebra& a, const Subspace& jk, const Subspace& hjk1,
                                        const Subspace& torsion, const Vec& f, const Vec& g, std::string& why) {
  const Field& fld = a.field();
  const std::size_t n = a.dim();
  Subspace tk = torsion.intersect(jk);
  std::vector<Vec> ngens = hjk1.basis();
  for (const auto& t : tk.basis()) ngens.push_back(a.commutator(g, t));
  Subspace nsub = Subspace::span(fld, n, ngens);
  for (const auto& v : nsub.basis())
    if (!nsub.contains(a.mul(f, v))) {
      why = "multiplication by f does not preserve hbar J'^(k+1) + [g, T]";
      return std::nullopt;
    }

  EchelonBuilder seen(fld, n);
  for (const auto& v : nsub.basis()) seen.insert(v);
  std::vector<Vec> pre, images;
  for (const auto& b : jk.basis()) {
    Vec hb = a.mul(a.hbar(), b);
    if (seen.insert(hb)) {
      pre.push_back(b);
      images.push_back(std::move(hb));
    }
  }
  const std::size_t q = pre.size();
  GradedPiece piece{pre, tk.basis(), {}, EchelonBuilder(fld, n + q), n};
  for (std::size_t i = 0; i < q; ++i) {
    Vec ext(n + q, 0);
    std::copy(images[i].begin(), images[i].end(), ext.begin());
    ext[n + i] = 1;
    piece.coords.insert(std::move(ext));
  }
  for (const auto& v : nsub.basis()) {
    Vec ext(n + q, 0);
    std::copy(v.begin(), v.end(), ext.begin());
    piece.coords.insert(std::move(ext));
  }
  Matrix x(q, q), y(q, q);
  for (std::size_t c = 0; c < q; ++c) {
    auto cx = piece.coordinates(fld, a.mul(f, images[c]));
    auto cy = piece.coordinates(fld, a.commutator(g, pre[c]));
    if (!cx || !cy) {
      why = "multiplication by f or (1/hbar) ad(g) does not preserve J'^k";
      return std::nullopt;
    }
    for (std::size_t r = 0; r < q; ++r) {
      x.at(r, c) = (*cx)[r];
      y.at(r, c) = (*cy)[r];
    }
  }
  try {
    piece.module = make_w1_module(fld, x, y);
  } catch (const Error& e) {
    why = std::string("graded piece is not a W1-module: ") + e.what();
    return std::nullopt;
  }
  return piece;
}

// Pivot-canonical (z', z'', omega) with d = hbar f^(p-1) z' + [g, z''] + hbar omega,
// z', z'' in J'^k and omega in J'^(k+1). Returns z''.
// d = hbar f^(p-1) z' + [g, zf] + [zg, f] + (hbar J'^(k+1)); zg stays zero unless
// the f-side alone cannot absorb d
std::optional<Pair> stacked_decomposition(const FdAlgebra& a, const Subspace& jk, const Subspace& hjk1,
                                          const Vec& f, const Vec& g, const Vec& d, bool with_zprime = true) {
  Vec hf = a.mul(a.hbar(), a.power(f, a.p() - 1));
  const std::size_t m = jk.dim();
  for (bool both : {false, true}) {
    std::vector<Vec> cols;
    for (const auto& b : jk.basis()) cols.push_back(with_zprime ? a.mul(hf, b) : a.zero());
    for (const auto& b : jk.basis()) cols.push_back(a.commutator(g, b));
    if (both)
      for (const auto& b : jk.basis()) cols.push_back(a.commutator(b, f));
    for (const auto& h : hjk1.basis()) cols.push_back(h);
    if (cols.empty()) return std::nullopt;
    auto t = solve(a.field(), Matrix::from_columns(cols, a.dim()), d);
    if (!t) continue;
    Vec zf = combine(a.field(), jk.basis(), Vec(t->begin() + m, t->begin() + 2 * m), a.dim());
    Vec zg = both ? combine(a.field(), jk.basis(), Vec(t->begin() + 2 * m, t->begin() + 3 * m), a.dim()) : a.zero();
    return Pair{zf, zg};
  }
  return std::nullopt;
}

}  // namespace

CommutatorCorrection commutator_correct(const FdAlgebra& a, const Ideal& jprime, const Vec& f1, const Vec& g1,
                                        const LiftOptions& options) {
  const Field& fld = a.field();
  const unsigned e = options.g_exponent ? options.g_exponent : a.p() - 1;
  HbarDivision div(a);

  // ladder[k] = J'^k, hladder[k] = hbar J'^k, down to zero
  std::vector<Subspace> ladder{Subspace::full(fld, a.dim())};
  std::vector<Subspace> hladder{times_hbar(a, ladder[0])};
  for (Ideal cur = jprime;; cur = ideal_product(a, cur, jprime)) {
    ladder.push_back(cur.space);
    hladder.push_back(times_hbar(a, cur.space));
    if (hladder.back().dim() == 0 || ladder.size() > a.truncation() + 2) break;
  }
  auto level = [&](const Vec& d) {
    unsigned k = 0;
    while (k + 1 < hladder.size() && hladder[k + 1].contains(d)) ++k;
    return k;
  };

  CommutatorCorrection out{f1, g1, {}, 0, false, {}};
  Vec& f = out.f;
  Vec& g = out.g;
  Vec defect = a.sub(a.commutator(f, g), a.hbar());
  if (!hladder[1].contains(defect))
    throw Error(Error::Kind::PreconditionDefectNotInIdeal, "[f1, g1] - hbar is not in hbar J'");

  while (!is_zero(defect)) {
    const unsigned k = level(defect);
    std::string why;
    auto piece = graded_piece(a, ladder[k], hladder[k + 1], div.torsion(), f, g, why);
    Vec z2, g_side = a.zero();
    std::string how;
    if (piece) {
      auto dc = piece->coordinates(fld, defect);
      if (!dc) throw Error(Error::Kind::InvariantViolation, "defect left hbar J'^k");
      auto [m1, m2] = qow_decompose(fld, piece->module, *dc);
      z2 = combine(fld, piece->preimages, m2, a.dim());
      // the rest lies in N: hbar J'^(k+1) plus [g, t] with t absorbed into z''
      Vec zp = combine(fld, piece->preimages, m1, a.dim());
      Vec rest = a.sub(a.sub(defect, a.mul(a.hbar(), a.mul(a.power(f, a.p() - 1), zp))), a.commutator(g, z2));
      std::vector<Vec> cols;
      for (const auto& t : piece->torsion) cols.push_back(a.commutator(g, t));
      for (const auto& h : hladder[k + 1].basis()) cols.push_back(h);
      if (!is_zero(rest)) {
        auto t = cols.empty() ? std::nullopt : solve(fld, Matrix::from_columns(cols, a.dim()), rest);
        if (!t) throw Error(Error::Kind::InvariantViolation, "module decomposition left the denominator N");
        z2 = a.add(z2, combine(fld, piece->torsion, Vec(t->begin(), t->begin() + piece->torsion.size()), a.dim()));
      }
      how = "module of dim " + std::to_string(piece->module.dim());
    } else {
      auto s = stacked_decomposition(a, ladder[k], hladder[k + 1], f, g, defect);
      if (!s) {
        out.module_note = "level " + std::to_string(k) + ": " + why + "; no stacked decomposition";
        break;
      }
      z2 = std::move(s->first);
      g_side = std::move(s->second);
      how = "stacked solve (" + why + ")";
    }
    // y = +(1/hbar) ad(g), so f + z'' removes the y-part of the defect
    Vec f_next = a.add(f, z2);
    Vec g_mid = a.add(g, g_side);
    auto w = restricted_power(a, g_mid, &jprime.space);
    Vec shift = a.mul(a.power(f_next, e), w.witness);
    Vec g_next = a.add(g_mid, shift);
    Vec next = a.sub(a.commutator(f_next, g_next), a.hbar());
    if (!is_zero(next) && level(next) <= k) {
      // the witness is only determined modulo hbar^(p-1)-torsion here, so try
      // a plain first-order step [zf, g] + [f, zg] = -defect from J'^(k+1), J'^k, ...
      bool moved = false;
      for (unsigned j = std::min<unsigned>(k + 1, ladder.size() - 1); j >= 1 && !moved; --j) {
        auto s = stacked_decomposition(a, ladder[j], hladder[k + 1], f, g, defect, false);
        if (!s) continue;
        Vec fn = a.add(f, s->first), gn = a.add(g, s->second);
        Vec nd = a.sub(a.commutator(fn, gn), a.hbar());
        if (!is_zero(nd) && level(nd) <= k) continue;
        out.steps.push_back({0, "bracket-f", k, s->first, "first-order step from J'^" + std::to_string(j)});
        out.steps.push_back({0, "bracket-g", k, s->second, "first-order step from J'^" + std::to_string(j)});
        f = std::move(fn);
        g = std::move(gn);
        defect = std::move(nd);
        moved = true;
      }
      if (moved) {
        ++out.iterations;
        continue;
      }
      out.module_note = "level " + std::to_string(k) + ": defect did not move to hbar J'^" + std::to_string(k + 1);
      break;
    }
    f = std::move(f_next);
    g = std::move(g_next);
    out.steps.push_back({0, "bracket-f", k, z2, how});
    if (!is_zero(g_side)) out.steps.push_back({0, "bracket-g", k, g_side, "stacked g-side"});
    out.steps.push_back({0, "bracket-g", k, shift, {}});
    ++out.iterations;
    defect = std::move(next);
  }

  // what the graded loop left over: first g' in J' with [f, g'] = -defect,
  // otherwise Newton steps [a', g] + [f, b'] = -defect with a', b' in J'
  const auto& jb = jprime.space.basis();
  for (unsigned round = 0; !is_zero(defect); ++round) {
    if (round > a.truncation()) throw Error(Error::Kind::PrecisionExhausted, "cleanup did not converge after " + out.module_note);
    Vec rhs = a.scale(fld.neg(1), defect);
    std::vector<Vec> cols;
    for (const auto& b : jb) cols.push_back(a.commutator(f, b));
    auto t = cols.empty() ? std::nullopt : solve(fld, Matrix::from_columns(cols, a.dim()), rhs);
    if (t) {
      Vec gp = combine(fld, jb, *t, a.dim());
      g = a.add(g, gp);
      out.steps.push_back({0, "cleanup", level(defect), gp, "g' only"});
    } else {
      std::vector<Vec> both;
      for (const auto& b : jb) both.push_back(a.commutator(b, g));
      both.insert(both.end(), cols.begin(), cols.end());
      auto u = both.empty() ? std::nullopt : solve(fld, Matrix::from_columns(both, a.dim()), rhs);
      if (!u) throw Error(Error::Kind::PrecisionExhausted, "no correction in J' removes the remaining defect " + format_element(a, defect) + " after " + out.module_note);
      Vec fa = combine(fld, jb, Vec(u->begin(), u->begin() + jb.size()), a.dim());
      Vec gb = combine(fld, jb, Vec(u->begin() + jb.size(), u->end()), a.dim());
      f = a.add(f, fa);
      g = a.add(g, gb);
      out.steps.push_back({0, "cleanup", level(defect), fa, "newton, f part"});
      out.steps.push_back({0, "cleanup", level(defect), gb, "newton, g part"});
    }
    out.cleanup_used = true;
    defect = a.sub(a.commutator(f, g), a.hbar());
  }
  return out;
}

RestrictedNormalization restricted_normalize(const FdAlgebra& a, const Ideal& jprime, const Vec& f, const Vec& g) {
  if (a.commutator(f, g) != a.hbar()) throw Error(Error::Kind::PreconditionViolation, "restricted_normalize needs [f, g] = hbar");
  RestrictedNormalization out{f, g, {}};
  auto run = [&](Vec& moving, const Vec& other, const char* phase) {
    Vec opm1 = a.power(other, a.p() - 1);
    for (unsigned guard = 0;; ++guard) {
      if (is_central(a, a.power(moving, a.p()))) return;
      if (guard > a.truncation()) throw Error(Error::Kind::PrecisionExhausted, std::string(phase) + " did not terminate");
      Subspace within = jprime.space.intersect(centralizer(a, {moving, other}));
      auto w = restricted_power(a, moving, &within);
      Vec shift = a.mul(opm1, w.witness);
      moving = a.add(moving, shift);
      out.steps.push_back({0, phase, a.valuation(w.witness), shift, {}});
    }
  };
  run(out.z, out.w, "restrict-f");
  run(out.w, out.z, "restrict-g");
  if (a.commutator(out.z, out.w) != a.hbar())
    throw Error(Error::Kind::InvariantViolation, "restricted normalization changed [f, g]");
  return out;
}

RestrictedNormalization restricted_normalize(const FdAlgebra& a, const Vec& f, const Vec& g) {
  return restricted_normalize(a, maximal_ideal(a), f, g);
}

std::vector<LiftCertificate> certify_lift(const FdAlgebra& a, const Subspace& jprime, const std::vector<Pair>& initial,
                                          const std::vector<Pair>& pairs) {
  std::vector<LiftCertificate> out;
  auto add = [&](std::string name, const Vec& diff) {
    bool ok = is_zero(diff);
    out.push_back({std::move(name), ok, ok ? "" : format_element(a, diff)});
  };
  const std::size_t n = pairs.size();
  auto idx = [](std::size_t i) { return std::to_string(i + 1); };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      add("[z" + idx(i) + ", w" + idx(j) + "] = " + (i == j ? "hbar" : "0"),
          a.sub(a.commutator(pairs[i].first, pairs[j].second), i == j ? a.hbar() : a.zero()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      add("[z" + idx(i) + ", z" + idx(j) + "] = 0", a.commutator(pairs[i].first, pairs[j].first));
      add("[w" + idx(i) + ", w" + idx(j) + "] = 0", a.commutator(pairs[i].second, pairs[j].second));
    }
  for (std::size_t i = 0; i < n; ++i)
    for (auto [name, v] : {std::pair{"z", &pairs[i].first}, std::pair{"w", &pairs[i].second}}) {
      Vec vp = a.power(*v, a.p());
      std::string bad;
      for (std::size_t b = 0; b < a.dim() && bad.empty(); ++b)
        if (!is_zero(a.commutator(a.basis(b), vp))) bad = "fails against " + a.label(b);
      out.push_back({std::string(name) + idx(i) + "^p central", bad.empty(), bad});
    }
  for (std::size_t i = 0; i < n && i < initial.size(); ++i)
    for (auto [name, v, v0] : {std::tuple{"z", &pairs[i].first, &initial[i].first},
                               std::tuple{"w", &pairs[i].second, &initial[i].second}}) {
      Vec d = a.sub(*v, *v0);
      bool ok = jprime.contains(d);
      out.push_back({std::string(name) + idx(i) + " residue mod J'", ok, ok ? "" : format_element(a, d)});
    }
  return out;
}

SplitDims split_dimensions(const FdAlgebra& a, const std::vector<Vec>& gens) {
  Subspace h = generated_subalgebra(a, gens);
  Subspace cent = centralizer(a, gens);
  EchelonBuilder products(a.field(), a.dim());
  for (const auto& u : h.basis()) {
    for (const auto& c : cent.basis()) {
      products.insert(a.mul(u, c));
      if (products.rank() == a.dim()) break;
    }
    if (products.rank() == a.dim()) break;
  }
  return {a.dim(), h.dim(), h.intersect(cent).dim(), cent.dim(), products.rank()};
}

LiftReport darboux_lift_full(const FdAlgebra& a, const Ideal& jprime, const std::vector<Pair>& pairs,
                             const LiftOptions& options) {
  const Field& fld = a.field();
  if (!a.is_local()) throw Error(Error::Kind::PreconditionViolation, "A must be local");
  if (!a.filtration(1).contains(jprime.space)) throw Error(Error::Kind::PreconditionViolation, "J' must lie in the maximal ideal");
  if (!jprime.two_sided) throw Error(Error::Kind::NotTwoSided, "J' must be a certified two-sided ideal");

  LiftReport report;
  report.initial = pairs;
  report.precision = a.truncation();
  report.terminal = Subspace::full(fld, a.dim());

  FdAlgebra cur = a;
  Ideal jcur = jprime;
  std::vector<Vec> embed;  // basis of cur in coordinates of a
  for (std::size_t i = 0; i < a.dim(); ++i) embed.push_back(a.basis(i));
  auto to_top = [&](const Vec& v) { return combine(fld, embed, v, a.dim()); };
  std::vector<Pair> local = pairs;

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto cc = commutator_correct(cur, jcur, local[i].first, local[i].second, options);
    auto rn = restricted_normalize(cur, jcur, cc.f, cc.g);
    for (auto* steps : {&cc.steps, &rn.steps})
      for (auto& s : *steps) {
        s.pair = i;
        s.correction = to_top(s.correction);
        report.steps.push_back(std::move(s));
      }
    report.cleanup_used = report.cleanup_used || cc.cleanup_used;
    report.pairs.emplace_back(to_top(rn.z), to_top(rn.w));
    if (i + 1 == pairs.size()) break;

    std::vector<Vec> hgens{rn.z, rn.w};
    SplitDims sd = split_dimensions(cur, hgens);
    report.descents.push_back({sd.algebra, sd.h, sd.center_h, sd.centralizer, sd.product_rank, sd.holds()});
    if (sd.product_rank != sd.algebra)
      throw Error(Error::Kind::DecompositionMismatch, "H A_1 != A after lifting pair " + std::to_string(i + 1));
    Subspace cent = centralizer(cur, hgens);
    for (std::size_t j = i + 1; j < pairs.size(); ++j)
      for (Vec* v : {&local[j].first, &local[j].second}) {
        auto c = shift_into_centralizer(cur, hgens, jcur.space, *v);
        if (!c) throw Error(Error::Kind::DecompositionMismatch, "pair " + std::to_string(j + 1) + " cannot be moved into the centralizer within J'");
        *v = *cent.coordinates(cur.add(*v, *c));
      }
    Subspace jin = jcur.space.intersect(cent);
    std::vector<Vec> jgens;
    for (const auto& v : jin.basis()) jgens.push_back(*cent.coordinates(v));
    std::vector<Vec> next_embed;
    for (const auto& v : cent.basis()) next_embed.push_back(to_top(v));
    FdAlgebra sub = subalgebra(cur, cent);
    jcur = make_ideal(sub, Subspace::span(fld, sub.dim(), jgens));
    cur = std::move(sub);
    embed = std::move(next_embed);
  }

  std::vector<Vec> all;
  for (const auto& [z, w] : report.pairs) {
    all.push_back(z);
    all.push_back(w);
  }
  report.terminal = centralizer(a, all);
  report.certificates = certify_lift(a, jprime.space, report.initial, report.pairs);
  report.pass = std::all_of(report.certificates.begin(), report.certificates.end(), [](const auto& c) { return c.pass; });
  return report;
}

LiftReport darboux_lift_full(const FdAlgebra& a, const PoissonReduction& reduction, const PoissonIdeal& ideal,
                             const std::vector<Pair>& pairs, const LiftOptions& options) {
  if (!ideal.poisson_closed) throw Error(Error::Kind::ClosureViolation, "I must be a Poisson ideal");
  std::vector<Vec> gens = reduction.kernel.basis();
  for (const auto& v : ideal.space.basis()) gens.push_back(reduction.lift(v));
  Ideal jprime = make_ideal(a, Subspace::span(a.field(), a.dim(), gens));
  std::vector<Pair> lifted;
  for (const auto& [x, y] : pairs) lifted.emplace_back(reduction.lift(x), reduction.lift(y));
  return darboux_lift_full(a, jprime, lifted, options);
}

}  // namespace charpq
