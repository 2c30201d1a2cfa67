#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "qcl/pure_check.hpp"

namespace qcl {

// ---------------------------------------------------------------------------
// Value normal forms: ordered, zero-free, normalized combinations of closed
// basis values. Unique per closed well-formed term (completeness).
// ---------------------------------------------------------------------------

struct NormalValue {
  std::vector<LinEntry> entries;  // strictly increasing in basis order

  double norm2() const {
    double n = 0;
    for (auto& e : entries) n += std::norm(e.coef);
    return n;
  }

  // A normal value is still a term of the language: a one-entry combination
  // is kept syntactically distinct from its entry.
  PureTermPtr to_term() const { return mk_lincomb(entries); }
};

namespace detail {

inline std::vector<LinEntry> canon_entries(std::vector<LinEntry> es) {
  std::sort(es.begin(), es.end(),
            [](const LinEntry& a, const LinEntry& b) { return term_cmp(a.term, b.term) < 0; });
  std::vector<LinEntry> out;
  for (auto& e : es) {
    if (!out.empty() && term_equal(out.back().term, e.term))
      out.back().coef += e.coef;
    else
      out.push_back(e);
  }
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const LinEntry& e) { return std::abs(e.coef) <= tolerance(); }),
            out.end());
  return out;
}

inline NormalValue nv(std::vector<LinEntry> es) { return NormalValue{canon_entries(std::move(es))}; }

inline NormalValue nv_scale(const Scalar& a, const NormalValue& v) {
  std::vector<LinEntry> es;
  es.reserve(v.entries.size());
  for (auto& e : v.entries) es.push_back({a * e.coef, e.term});
  return nv(std::move(es));
}

inline NormalValue nv_add(const NormalValue& a, const NormalValue& b) {
  std::vector<LinEntry> es = a.entries;
  es.insert(es.end(), b.entries.begin(), b.entries.end());
  return nv(std::move(es));
}

template <typename F>
NormalValue nv_map(F&& f, const NormalValue& v) {
  std::vector<LinEntry> es;
  es.reserve(v.entries.size());
  for (auto& e : v.entries) es.push_back({e.coef, f(e.term)});
  return nv(std::move(es));
}

inline NormalValue nv_tensor(const NormalValue& a, const NormalValue& b) {
  std::vector<LinEntry> es;
  es.reserve(a.entries.size() * b.entries.size());
  for (auto& x : a.entries)
    for (auto& y : b.entries) es.push_back({x.coef * y.coef, mk_pair(x.term, y.term)});
  return nv(std::move(es));
}

}  // namespace detail

// Rewrites a closed expression to its combination-of-basis-values normal form
// (sorted, zeros dropped, duplicates merged).
inline NormalValue expand_to_basis(const PureTermPtr& e0) {
  using detail::nv;
  const PureTermPtr e = strip(e0);
  switch (e->kind) {
    case PureTerm::Kind::Star:
      return nv({{Scalar(1), mk_star()}});
    case PureTerm::Kind::Zero:
      return nv({{Scalar(1), mk_zero()}});
    case PureTerm::Kind::Var:
      throw Error(ErrorCode::UnboundVariable, "expand_to_basis on open term", e->span);
    case PureTerm::Kind::InjL:
      return detail::nv_map([](const PureTermPtr& t) { return mk_injl(t); }, expand_to_basis(e->child));
    case PureTerm::Kind::InjR:
      return detail::nv_map([](const PureTermPtr& t) { return mk_injr(t); }, expand_to_basis(e->child));
    case PureTerm::Kind::Succ:
      return detail::nv_map([](const PureTermPtr& t) { return mk_succ(t); }, expand_to_basis(e->child));
    case PureTerm::Kind::Pair:
      return detail::nv_tensor(expand_to_basis(e->left), expand_to_basis(e->right));
    case PureTerm::Kind::LinComb: {
      NormalValue acc;
      for (auto& en : e->entries)
        acc = detail::nv_add(acc, detail::nv_scale(en.coef, expand_to_basis(en.term)));
      return acc;
    }
    case PureTerm::Kind::Apply:
      throw Error(ErrorCode::MalformedInput, "expand_to_basis on a unitary application", e->span);
    case PureTerm::Kind::Ascribe:
      break;  // unreachable, strip removed it
  }
  throw InternalError("expand_to_basis: unreachable");
}

// Resolved unitary types, when the term went through the checker; the
// adjoint of a clause abstraction needs its codomain to replay the body
// decomposition.
struct EvalEnv {
  const std::map<const UnitaryExpr*, UnitaryType>* unitary_types = nullptr;

  std::optional<UnitaryType> lookup(const UnitaryExpr* u) const {
    if (!unitary_types) return std::nullopt;
    auto it = unitary_types->find(u);
    if (it == unitary_types->end()) return std::nullopt;
    return it->second;
  }
};

NormalValue apply_unitary(const UnitaryExprPtr& u, const NormalValue& v, const EvalEnv& env = {});
NormalValue apply_adjoint(const UnitaryExprPtr& u, const NormalValue& v, const EvalEnv& env = {});

namespace detail {

// One component of a value decomposed over an orthogonal decomposition S:
// coefficient * sigma(S[elem]).
struct DecompComponent {
  Scalar coef;
  std::size_t elem;
  Valuation sigma;
};

inline std::string sigma_key(const Valuation& s) {
  std::string k;
  for (auto& [x, t] : s) k += x + "=" + print_term(t) + ";";
  return k;
}

inline std::size_t find_elem(const std::vector<PureTermPtr>& elems, const PureTermPtr& t) {
  for (std::size_t i = 0; i < elems.size(); ++i)
    if (term_equal(elems[i], t)) return i;
  throw InternalError("decompose: element not found in derivation set");
}

// Linear decomposition of a (not necessarily normalized) vector of closed
// basis values over the set certified by d. Exact up to the drop threshold.
inline std::vector<DecompComponent> decompose(const OnbDerivPtr& d, const std::vector<LinEntry>& entries) {
  std::vector<DecompComponent> out;
  if (entries.empty()) return out;
  switch (d->rule) {
    case OnbDeriv::Rule::Var: {
      double n = std::sqrt([&] {
        double s = 0;
        for (auto& e : entries) s += std::norm(e.coef);
        return s;
      }());
      if (n <= tolerance()) return out;
      std::vector<LinEntry> scaled;
      for (auto& e : entries) scaled.push_back({e.coef / n, e.term});
      Valuation sigma;
      sigma[strip(d->elems[0])->var] = mk_lincomb(canon_entries(std::move(scaled)));
      out.push_back({Scalar(n), 0, std::move(sigma)});
      return out;
    }
    case OnbDeriv::Rule::Star: {
      Scalar c(0);
      for (auto& e : entries) {
        if (strip(e.term)->kind != PureTerm::Kind::Star)
          throw InternalError("decompose: non-star entry at unit type");
        c += e.coef;
      }
      if (std::abs(c) > tolerance()) out.push_back({c, 0, {}});
      return out;
    }
    case OnbDeriv::Rule::SumSplit: {
      std::vector<LinEntry> ls, rs;
      for (auto& e : entries) {
        auto t = strip(e.term);
        if (t->kind == PureTerm::Kind::InjL)
          ls.push_back({e.coef, strip(t->child)});
        else if (t->kind == PureTerm::Kind::InjR)
          rs.push_back({e.coef, strip(t->child)});
        else
          throw InternalError("decompose: non-injection entry at sum type");
      }
      for (auto& c : decompose(d->sub1, ls)) {
        std::size_t k = find_elem(d->elems, mk_injl(d->sub1->elems[c.elem]));
        out.push_back({c.coef, k, std::move(c.sigma)});
      }
      for (auto& c : decompose(d->sub2, rs)) {
        std::size_t k = find_elem(d->elems, mk_injr(d->sub2->elems[c.elem]));
        out.push_back({c.coef, k, std::move(c.sigma)});
      }
      return out;
    }
    case OnbDeriv::Rule::QNatSplit: {
      Scalar zc(0);
      std::vector<LinEntry> subs;
      for (auto& e : entries) {
        auto t = strip(e.term);
        if (t->kind == PureTerm::Kind::Zero)
          zc += e.coef;
        else if (t->kind == PureTerm::Kind::Succ)
          subs.push_back({e.coef, strip(t->child)});
        else
          throw InternalError("decompose: non-numeral entry at qnat type");
      }
      if (std::abs(zc) > tolerance()) out.push_back({zc, find_elem(d->elems, mk_zero()), {}});
      for (auto& c : decompose(d->sub1, subs)) {
        std::size_t k = find_elem(d->elems, mk_succ(d->sub1->elems[c.elem]));
        out.push_back({c.coef, k, std::move(c.sigma)});
      }
      return out;
    }
    case OnbDeriv::Rule::TensorMajor1:
    case OnbDeriv::Rule::TensorMajor2: {
      const bool major1 = d->rule == OnbDeriv::Rule::TensorMajor1;
      // bucket the minor parts by (major element, major valuation)
      struct Bucket {
        std::size_t elem;
        Scalar coef;
        Valuation sigma;
        std::vector<LinEntry> minor_entries;
      };
      std::map<std::string, Bucket> buckets;
      // group entries by their major component first
      std::vector<std::pair<PureTermPtr, std::vector<LinEntry>>> groups;
      for (auto& e : entries) {
        auto t = strip(e.term);
        if (t->kind != PureTerm::Kind::Pair)
          throw InternalError("decompose: non-pair entry at tensor type");
        PureTermPtr maj = strip(major1 ? t->left : t->right);
        PureTermPtr min = strip(major1 ? t->right : t->left);
        bool found = false;
        for (auto& [m, g] : groups)
          if (term_equal(m, maj)) {
            g.push_back({e.coef, min});
            found = true;
            break;
          }
        if (!found) groups.push_back({maj, {{e.coef, min}}});
      }
      for (auto& [maj, minors] : groups) {
        for (auto& mc : decompose(d->sub1, {{Scalar(1), maj}})) {
          std::string key = std::to_string(mc.elem) + "|" + sigma_key(mc.sigma);
          auto it = buckets.find(key);
          if (it == buckets.end())
            it = buckets.emplace(key, Bucket{mc.elem, mc.coef, mc.sigma, {}}).first;
          // scale the minor payload by this major component / bucket leader
          Scalar rel = mc.coef / it->second.coef;
          for (auto& me : minors) it->second.minor_entries.push_back({rel * me.coef, me.term});
        }
      }
      for (auto& [key, b] : buckets) {
        auto& minor_deriv = d->minors[b.elem];
        for (auto& c : decompose(minor_deriv, b.minor_entries)) {
          PureTermPtr whole = major1 ? mk_pair(d->sub1->elems[b.elem], minor_deriv->elems[c.elem])
                                     : mk_pair(minor_deriv->elems[c.elem], d->sub1->elems[b.elem]);
          Valuation sigma = b.sigma;
          for (auto& [x, t] : c.sigma) sigma[x] = t;
          out.push_back({b.coef * c.coef, find_elem(d->elems, whole), std::move(sigma)});
        }
      }
      return out;
    }
    case OnbDeriv::Rule::Alpha: {
      auto base = decompose(d->sub1, entries);
      // group base components by valuation, then invert the coefficient matrix
      std::map<std::string, std::pair<Valuation, std::vector<Scalar>>> by_sigma;
      const std::size_t n = d->elems.size();
      for (auto& c : base) {
        auto& slot = by_sigma[sigma_key(c.sigma)];
        if (slot.second.empty()) {
          slot.first = c.sigma;
          slot.second.assign(n, Scalar(0));
        }
        slot.second[c.elem] += c.coef;
      }
      for (auto& [key, slot] : by_sigma) {
        for (std::size_t i = 0; i < n; ++i) {
          Scalar g(0);
          for (std::size_t j = 0; j < n; ++j) g += std::conj(d->alpha[i][j]) * slot.second[j];
          if (std::abs(g) > tolerance()) out.push_back({g, i, slot.first});
        }
      }
      return out;
    }
  }
  throw InternalError("decompose: unreachable");
}

NormalValue apply_unitary_basis(const UnitaryExprPtr& u, const PureTermPtr& b, const EvalEnv& env);

inline NormalValue adjoint_clauses(const UnitaryExprPtr& u, const NormalValue& v, const EvalEnv& env) {
  // the inverse image under a unitary abstraction: decompose v over the body
  // orthogonal decomposition, then rebuild through the matching patterns
  UnitaryType uty;
  if (auto known = env.lookup(u.get())) {
    uty = *known;
  } else {
    // fall back to inference seeded by the value's type
    auto probe = mk_apply(mk_adjoint(u), v.to_term());
    auto typing = typecheck_term_full(PureContext{}, probe);
    uty = typing.unitary_types.at(u.get());
  }

  std::vector<PureTermPtr> bodies;
  for (auto& c : u->clauses) bodies.push_back(c.body);
  auto deriv = onb_ext_derivation(uty.codomain, bodies);
  if (!deriv) throw InternalError("adjoint: clause bodies lost their decomposition");

  std::vector<LinEntry> acc;
  for (auto& comp : decompose(deriv, v.entries)) {
    const PureTermPtr& elem = deriv->elems[comp.elem];
    const Clause* clause = nullptr;
    for (auto& c : u->clauses)
      if (term_equal(strip(c.body), elem)) {
        clause = &c;
        break;
      }
    if (!clause) throw InternalError("adjoint: decomposition element is not a clause body");
    auto img = expand_to_basis(substitute(comp.sigma, clause->pattern));
    for (auto& e : img.entries) acc.push_back({comp.coef * e.coef, e.term});
  }
  return nv(std::move(acc));
}

inline NormalValue adjoint_basis(const UnitaryExprPtr& u, const PureTermPtr& b, const EvalEnv& env) {
  switch (u->kind) {
    case UnitaryExpr::Kind::Adjoint:
      return apply_unitary_basis(u->child, b, env);
    case UnitaryExpr::Kind::Compose:
      // (u2 . u1)* = u1* . u2*
      return apply_adjoint(u->right, apply_adjoint(u->left, NormalValue{{{Scalar(1), b}}}, env), env);
    case UnitaryExpr::Kind::Tensor: {
      auto t = strip(b);
      if (t->kind != PureTerm::Kind::Pair) throw InternalError("adjoint: tensor input is not a pair");
      return nv_tensor(apply_adjoint(u->left, NormalValue{{{Scalar(1), strip(t->left)}}}, env),
                       apply_adjoint(u->right, NormalValue{{{Scalar(1), strip(t->right)}}}, env));
    }
    case UnitaryExpr::Kind::DirectSum: {
      auto t = strip(b);
      if (t->kind == PureTerm::Kind::InjL)
        return nv_map([](const PureTermPtr& x) { return mk_injl(x); },
                      apply_adjoint(u->left, NormalValue{{{Scalar(1), strip(t->child)}}}, env));
      if (t->kind == PureTerm::Kind::InjR)
        return nv_map([](const PureTermPtr& x) { return mk_injr(x); },
                      apply_adjoint(u->right, NormalValue{{{Scalar(1), strip(t->child)}}}, env));
      throw InternalError("adjoint: direct-sum input is not an injection");
    }
    case UnitaryExpr::Kind::Ctrl: {
      auto t = strip(b);
      if (t->kind != PureTerm::Kind::Pair) throw InternalError("adjoint: ctrl input is not a pair");
      auto c = strip(t->left);
      if (c->kind == PureTerm::Kind::InjL) return NormalValue{{{Scalar(1), strip(b)}}};
      if (c->kind == PureTerm::Kind::InjR)
        return nv_map([&](const PureTermPtr& x) { return mk_pair(mk_ket1(), x); },
                      apply_adjoint(u->child, NormalValue{{{Scalar(1), strip(t->right)}}}, env));
      throw InternalError("adjoint: ctrl input has no qubit head");
    }
    case UnitaryExpr::Kind::Clauses:
      return adjoint_clauses(u, NormalValue{{{Scalar(1), b}}}, env);
  }
  throw InternalError("adjoint_basis: unreachable");
}

inline NormalValue apply_unitary_basis(const UnitaryExprPtr& u, const PureTermPtr& b,
                                       const EvalEnv& env) {
  switch (u->kind) {
    case UnitaryExpr::Kind::Clauses: {
      for (auto& c : u->clauses) {
        if (auto sigma = match_basis(c.pattern, b))
          return expand_to_basis(substitute(*sigma, c.body));
      }
      throw InternalError("no clause matches " + print_term(b) +
                          " although the patterns pass the basis check");
    }
    case UnitaryExpr::Kind::Tensor: {
      auto t = strip(b);
      if (t->kind != PureTerm::Kind::Pair) throw InternalError("tensor applied to a non-pair");
      return nv_tensor(apply_unitary_basis(u->left, t->left, env),
                       apply_unitary_basis(u->right, t->right, env));
    }
    case UnitaryExpr::Kind::DirectSum: {
      auto t = strip(b);
      if (t->kind == PureTerm::Kind::InjL)
        return nv_map([](const PureTermPtr& x) { return mk_injl(x); },
                      apply_unitary_basis(u->left, t->child, env));
      if (t->kind == PureTerm::Kind::InjR)
        return nv_map([](const PureTermPtr& x) { return mk_injr(x); },
                      apply_unitary_basis(u->right, t->child, env));
      throw InternalError("direct sum applied to a non-injection");
    }
    case UnitaryExpr::Kind::Compose:
      return apply_unitary(u->left, apply_unitary_basis(u->right, b, env), env);
    case UnitaryExpr::Kind::Adjoint:
      return adjoint_basis(u->child, b, env);
    case UnitaryExpr::Kind::Ctrl: {
      auto t = strip(b);
      if (t->kind != PureTerm::Kind::Pair) throw InternalError("ctrl applied to a non-pair");
      auto c = strip(t->left);
      if (c->kind == PureTerm::Kind::InjL) return NormalValue{{{Scalar(1), strip(b)}}};
      if (c->kind == PureTerm::Kind::InjR)
        return nv_map([&](const PureTermPtr& x) { return mk_pair(mk_ket1(), x); },
                      apply_unitary_basis(u->child, t->right, env));
      throw InternalError("ctrl applied without a qubit head");
    }
  }
  throw InternalError("apply_unitary_basis: unreachable");
}

}  // namespace detail

// Forward unitary application, linear over the value's entries.
inline NormalValue apply_unitary(const UnitaryExprPtr& u, const NormalValue& v, const EvalEnv& env) {
  std::vector<LinEntry> acc;
  for (auto& e : v.entries) {
    auto w = detail::apply_unitary_basis(u, e.term, env);
    for (auto& we : w.entries) acc.push_back({e.coef * we.coef, we.term});
  }
  return detail::nv(std::move(acc));
}

// The unique w with apply_unitary(u, w) = v, extended linearly from the
// basis-value rule.
inline NormalValue apply_adjoint(const UnitaryExprPtr& u, const NormalValue& v, const EvalEnv& env) {
  if (u->kind == UnitaryExpr::Kind::Clauses) return detail::adjoint_clauses(u, v, env);
  std::vector<LinEntry> acc;
  for (auto& e : v.entries) {
    auto w = detail::adjoint_basis(u, e.term, env);
    for (auto& we : w.entries) acc.push_back({e.coef * we.coef, we.term});
  }
  return detail::nv(std::move(acc));
}

// Convenience overloads when the caller knows the unitary's type but has no
// checker output at hand.
inline NormalValue apply_adjoint(const UnitaryExprPtr& u, const NormalValue& v,
                                 const UnitaryType& uty) {
  auto full = typecheck_unitary_full(u, uty);
  EvalEnv env{&full.unitary_types};
  return apply_adjoint(u, v, env);
}

inline NormalValue apply_unitary(const UnitaryExprPtr& u, const NormalValue& v,
                                 const UnitaryType& uty) {
  auto full = typecheck_unitary_full(u, uty);
  EvalEnv env{&full.unitary_types};
  return apply_unitary(u, v, env);
}

namespace detail {

// Innermost-first evaluation; assumes the term has already been checked.
inline NormalValue normalize_unchecked(const PureTermPtr& t0, const EvalEnv& env = {}) {
  const PureTermPtr t = strip(t0);
  switch (t->kind) {
    case PureTerm::Kind::Apply:
      return apply_unitary(t->unitary, normalize_unchecked(t->child, env), env);
    case PureTerm::Kind::InjL:
      return nv_map([](const PureTermPtr& x) { return mk_injl(x); },
                    normalize_unchecked(t->child, env));
    case PureTerm::Kind::InjR:
      return nv_map([](const PureTermPtr& x) { return mk_injr(x); },
                    normalize_unchecked(t->child, env));
    case PureTerm::Kind::Succ:
      return nv_map([](const PureTermPtr& x) { return mk_succ(x); },
                    normalize_unchecked(t->child, env));
    case PureTerm::Kind::Pair:
      return nv_tensor(normalize_unchecked(t->left, env), normalize_unchecked(t->right, env));
    case PureTerm::Kind::LinComb: {
      NormalValue acc;
      for (auto& e : t->entries)
        acc = nv_add(acc, nv_scale(e.coef, normalize_unchecked(e.term, env)));
      return acc;
    }
    default:
      return expand_to_basis(t);
  }
}

}  // namespace detail

// Normal form of a closed well-formed term.
inline NormalValue normalize(const PureTermPtr& t) {
  auto typing = typecheck_term_full(PureContext{}, t);  // formation error on ill-typed input
  EvalEnv env{&typing.unitary_types};
  return detail::normalize_unchecked(t, env);
}

// Entrywise comparison of two normal values within the global tolerance.
inline bool nv_close(const NormalValue& a, const NormalValue& b) {
  std::size_t i = 0, j = 0;
  while (i < a.entries.size() || j < b.entries.size()) {
    int c;
    if (i == a.entries.size())
      c = 1;
    else if (j == b.entries.size())
      c = -1;
    else
      c = term_cmp(a.entries[i].term, b.entries[j].term);
    if (c < 0) {
      if (std::abs(a.entries[i].coef) > tolerance()) return false;
      ++i;
    } else if (c > 0) {
      if (std::abs(b.entries[j].coef) > tolerance()) return false;
      ++j;
    } else {
      if (std::abs(a.entries[i].coef - b.entries[j].coef) > tolerance()) return false;
      ++i;
      ++j;
    }
  }
  return true;
}

// Equational equality of closed terms, decided through normal forms.
inline bool equal_terms(const PureTermPtr& t1, const PureTermPtr& t2) {
  auto ty1 = typecheck_term_full(PureContext{}, t1);
  auto ty2 = typecheck_term_full(PureContext{}, t2);
  if (!type_equal(ty1.type, ty2.type))
    throw Error(ErrorCode::TypeMismatch, "compared terms have types " + print_type(ty1.type) +
                                             " and " + print_type(ty2.type));
  EvalEnv env1{&ty1.unitary_types}, env2{&ty2.unitary_types};
  return nv_close(detail::normalize_unchecked(t1, env1), detail::normalize_unchecked(t2, env2));
}

// Pretty form used by the CLI: basis values in ket notation where possible.
inline std::string print_value(const NormalValue& v) {
  if (v.entries.empty()) return "0 (empty value)";
  std::string s;
  for (std::size_t i = 0; i < v.entries.size(); ++i) {
    if (i) s += " + ";
    std::string ket = ket_form(v.entries[i].term);
    s += "[" + format_scalar(v.entries[i].coef) + "]*";
    s += ket.empty() ? print_term(v.entries[i].term) : "|" + ket + ">";
  }
  return s;
}

}  // namespace qcl
