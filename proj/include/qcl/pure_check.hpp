#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qcl/pure_core.hpp"

namespace qcl {

// ---------------------------------------------------------------------------
// Orthogonality
// ---------------------------------------------------------------------------

bool orthogonal(const PureTermPtr& t1, const PureTermPtr& t2);

namespace detail {

// Aligns the entries of two combinations on a common index family: shared
// terms are identified by syntactic equality, everything else padded with a
// zero coefficient.
inline bool ortho_lincomb(const std::vector<LinEntry>& as, const std::vector<LinEntry>& bs) {
  std::vector<std::pair<PureTermPtr, std::pair<Scalar, Scalar>>> merged;
  auto slot = [&](const PureTermPtr& t) -> std::pair<Scalar, Scalar>& {
    for (auto& [u, cs] : merged)
      if (term_equal(u, t)) return cs;
    merged.push_back({t, {Scalar(0), Scalar(0)}});
    return merged.back().second;
  };
  for (auto& e : as) slot(e.term).first += e.coef;
  for (auto& e : bs) slot(e.term).second += e.coef;
  // all pairwise-distinct companion terms must themselves be orthogonal
  for (std::size_t i = 0; i < merged.size(); ++i)
    for (std::size_t j = i + 1; j < merged.size(); ++j)
      if (!orthogonal(merged[i].first, merged[j].first)) return false;
  Scalar ip(0);
  for (auto& [t, cs] : merged) ip += std::conj(cs.first) * cs.second;
  return std::abs(ip) <= tolerance();
}

}  // namespace detail

// The statically derivable relation licensing normalized linear combinations.
// Deliberately incomplete on unitary applications: u t1 _|_ u t2 needs the
// same syntactic u, and u (inl *) is never derivably orthogonal to inl *.
inline bool orthogonal(const PureTermPtr& t1, const PureTermPtr& t2) {
  const PureTermPtr a = strip(t1), b = strip(t2);
  const bool la = a->kind == PureTerm::Kind::LinComb;
  const bool lb = b->kind == PureTerm::Kind::LinComb;
  if (la || lb) {
    std::vector<LinEntry> as = la ? a->entries : std::vector<LinEntry>{{Scalar(1), a}};
    std::vector<LinEntry> bs = lb ? b->entries : std::vector<LinEntry>{{Scalar(1), b}};
    return detail::ortho_lincomb(as, bs);
  }
  switch (a->kind) {
    case PureTerm::Kind::InjL:
      if (b->kind == PureTerm::Kind::InjR) return true;
      if (b->kind == PureTerm::Kind::InjL) return orthogonal(a->child, b->child);
      return false;
    case PureTerm::Kind::InjR:
      if (b->kind == PureTerm::Kind::InjL) return true;
      if (b->kind == PureTerm::Kind::InjR) return orthogonal(a->child, b->child);
      return false;
    case PureTerm::Kind::Zero:
      return b->kind == PureTerm::Kind::Succ;
    case PureTerm::Kind::Succ:
      if (b->kind == PureTerm::Kind::Zero) return true;
      if (b->kind == PureTerm::Kind::Succ) return orthogonal(a->child, b->child);
      return false;
    case PureTerm::Kind::Pair:
      if (b->kind != PureTerm::Kind::Pair) return false;
      return orthogonal(a->left, b->left) || orthogonal(a->right, b->right);
    case PureTerm::Kind::Apply:
      return b->kind == PureTerm::Kind::Apply && unitary_equal(a->unitary, b->unitary) &&
             orthogonal(a->child, b->child);
    default:
      return false;
  }
}

// ---------------------------------------------------------------------------
// Orthonormal-basis predicates. The search records its derivation; the
// adjoint evaluator replays it to decompose values over a clause body set.
// ---------------------------------------------------------------------------

struct OnbDeriv;
using OnbDerivPtr = std::shared_ptr<const OnbDeriv>;

struct OnbDeriv {
  enum class Rule { Var, Star, SumSplit, QNatSplit, TensorMajor1, TensorMajor2, Alpha };
  Rule rule;
  std::vector<PureTermPtr> elems;  // the certified set: sorted, deduplicated

  OnbDerivPtr sub1, sub2;           // SumSplit: S,T; QNatSplit/Alpha: sub1
  std::vector<OnbDerivPtr> minors;  // TensorMajor*: per element of sub1->elems
  // Alpha: elems[i] = sum over sub1->elems[j] of alpha[i][j] * sub1->elems[j]
  std::vector<std::vector<Scalar>> alpha;
};

namespace detail {

inline std::vector<PureTermPtr> canonical_set(std::vector<PureTermPtr> xs) {
  for (auto& x : xs) x = strip(x);
  std::sort(xs.begin(), xs.end(), [](const PureTermPtr& a, const PureTermPtr& b) { return term_cmp(a, b) < 0; });
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [](const PureTermPtr& a, const PureTermPtr& b) { return term_equal(a, b); }),
           xs.end());
  return xs;
}

inline std::string set_key(const PureTypePtr& q, const std::vector<PureTermPtr>& xs, bool ext) {
  std::string k = ext ? "E|" : "B|";
  k += print_type(q);
  for (auto& x : xs) {
    k += "|";
    k += print_term(x);
  }
  return k;
}

OnbDerivPtr derive_onb(const PureTypePtr& q, std::vector<PureTermPtr> set, bool extended,
                       std::map<std::string, OnbDerivPtr>* memo);

inline OnbDerivPtr derive_onb_uncached(const PureTypePtr& q, const std::vector<PureTermPtr>& s,
                                       bool extended, std::map<std::string, OnbDerivPtr>* memo) {
  using K = PureTerm::Kind;
  if (s.empty()) return nullptr;

  // singleton variable: a basis of any type
  if (s.size() == 1 && s[0]->kind == K::Var) {
    auto d = std::make_shared<OnbDeriv>();
    d->rule = OnbDeriv::Rule::Var;
    d->elems = s;
    return d;
  }
  if (q->kind == PureType::Kind::Unit) {
    if (s.size() == 1 && s[0]->kind == K::Star) {
      auto d = std::make_shared<OnbDeriv>();
      d->rule = OnbDeriv::Rule::Star;
      d->elems = s;
      return d;
    }
  }
  if (q->kind == PureType::Kind::Sum) {
    bool all_inj = std::all_of(s.begin(), s.end(), [](const PureTermPtr& t) {
      return t->kind == K::InjL || t->kind == K::InjR;
    });
    if (all_inj) {
      std::vector<PureTermPtr> ls, rs;
      for (auto& t : s) (t->kind == K::InjL ? ls : rs).push_back(strip(t->child));
      auto dl = derive_onb(q->left, ls, extended, memo);
      auto dr = dl ? derive_onb(q->right, rs, extended, memo) : nullptr;
      if (dl && dr) {
        auto d = std::make_shared<OnbDeriv>();
        d->rule = OnbDeriv::Rule::SumSplit;
        d->elems = s;
        d->sub1 = dl;
        d->sub2 = dr;
        return d;
      }
    }
  }
  if (q->kind == PureType::Kind::QNat) {
    bool has_zero = std::any_of(s.begin(), s.end(), [](const PureTermPtr& t) { return t->kind == K::Zero; });
    bool rest_succ = std::all_of(s.begin(), s.end(), [](const PureTermPtr& t) {
      return t->kind == K::Zero || t->kind == K::Succ;
    });
    if (has_zero && rest_succ) {
      std::vector<PureTermPtr> subs;
      for (auto& t : s)
        if (t->kind == K::Succ) subs.push_back(strip(t->child));
      if (!subs.empty()) {
        if (auto ds = derive_onb(q, subs, extended, memo)) {
          auto d = std::make_shared<OnbDeriv>();
          d->rule = OnbDeriv::Rule::QNatSplit;
          d->elems = s;
          d->sub1 = ds;
          return d;
        }
      }
    }
  }
  if (q->kind == PureType::Kind::Tensor) {
    bool all_pairs = std::all_of(s.begin(), s.end(), [](const PureTermPtr& t) { return t->kind == K::Pair; });
    if (all_pairs) {
      // pi1-major: ONB(pi1(S)) and for each left component e, ONB(S^1_e)
      for (int major = 1; major <= 2; ++major) {
        auto proj = [&](const PureTermPtr& t) { return strip(major == 1 ? t->left : t->right); };
        auto other = [&](const PureTermPtr& t) { return strip(major == 1 ? t->right : t->left); };
        std::vector<PureTermPtr> majors;
        for (auto& t : s) majors.push_back(proj(t));
        majors = canonical_set(majors);
        auto dmaj = derive_onb(major == 1 ? q->left : q->right, majors, extended, memo);
        if (!dmaj) continue;
        std::vector<OnbDerivPtr> minors;
        bool ok = true;
        for (auto& m : dmaj->elems) {
          std::vector<PureTermPtr> fiber;
          for (auto& t : s)
            if (term_equal(proj(t), m)) fiber.push_back(other(t));
          auto dmin = derive_onb(major == 1 ? q->right : q->left, fiber, extended, memo);
          if (!dmin) {
            ok = false;
            break;
          }
          minors.push_back(dmin);
        }
        if (ok) {
          auto d = std::make_shared<OnbDeriv>();
          d->rule = major == 1 ? OnbDeriv::Rule::TensorMajor1 : OnbDeriv::Rule::TensorMajor2;
          d->elems = s;
          d->sub1 = dmaj;
          d->minors = std::move(minors);
          return d;
        }
      }
    }
  }
  if (extended) {
    // change of basis: all elements are combinations over a common entry list
    // after zero-padding, and the coefficient matrix is unitary
    bool any_comb = std::any_of(s.begin(), s.end(),
                                [](const PureTermPtr& t) { return t->kind == K::LinComb; });
    if (any_comb) {
      std::vector<PureTermPtr> base;
      auto base_index = [&](const PureTermPtr& t) -> std::size_t {
        for (std::size_t i = 0; i < base.size(); ++i)
          if (term_equal(base[i], t)) return i;
        base.push_back(strip(t));
        return base.size() - 1;
      };
      std::vector<std::vector<std::pair<std::size_t, Scalar>>> rows;
      for (auto& t : s) {
        std::vector<std::pair<std::size_t, Scalar>> row;
        if (t->kind == K::LinComb) {
          for (auto& e : t->entries) row.push_back({base_index(e.term), e.coef});
        } else {
          row.push_back({base_index(t), Scalar(1)});
        }
        rows.push_back(std::move(row));
      }
      if (base.size() == s.size()) {
        const std::size_t n = base.size();
        std::vector<std::vector<Scalar>> a(n, std::vector<Scalar>(n, Scalar(0)));
        for (std::size_t i = 0; i < n; ++i)
          for (auto& [j, c] : rows[i]) a[i][j] += c;
        // max-norm unitarity of the coefficient matrix
        bool unitary = true;
        for (std::size_t i = 0; i < n && unitary; ++i)
          for (std::size_t j = 0; j < n && unitary; ++j) {
            Scalar dot(0);
            for (std::size_t k = 0; k < n; ++k) dot += std::conj(a[k][i]) * a[k][j];
            if (std::abs(dot - (i == j ? Scalar(1) : Scalar(0))) > tolerance()) unitary = false;
          }
        if (unitary) {
          if (auto db = derive_onb(q, base, extended, memo)) {
            auto d = std::make_shared<OnbDeriv>();
            d->rule = OnbDeriv::Rule::Alpha;
            d->elems = s;
            d->sub1 = db;
            // re-read the matrix in db->elems column order
            d->alpha.assign(n, std::vector<Scalar>(n, Scalar(0)));
            for (std::size_t i = 0; i < n; ++i)
              for (auto& [j, c] : rows[i]) {
                std::size_t col = 0;
                while (!term_equal(db->elems[col], base[j])) ++col;
                d->alpha[i][col] += c;
              }
            return d;
          }
        }
      }
    }
  }
  return nullptr;
}

inline OnbDerivPtr derive_onb(const PureTypePtr& q, std::vector<PureTermPtr> set, bool extended,
                              std::map<std::string, OnbDerivPtr>* memo) {
  auto s = canonical_set(std::move(set));
  if (s.empty()) return nullptr;
  std::string key;
  if (memo) {
    key = set_key(q, s, extended);
    auto it = memo->find(key);
    if (it != memo->end()) return it->second;
  }
  auto d = derive_onb_uncached(q, s, extended, memo);
  if (memo) (*memo)[key] = d;
  return d;
}

}  // namespace detail

// Derivation (or null) certifying that a finite set of basis values is an
// orthonormal basis of q.
inline OnbDerivPtr onb_derivation(const PureTypePtr& q, const std::vector<PureTermPtr>& s) {
  for (auto& t : s)
    if (!is_basis_value(t)) return nullptr;
  std::map<std::string, OnbDerivPtr> memo;
  return detail::derive_onb(q, s, /*extended=*/false, &memo);
}

// Same with the change-of-basis rule admitted; elements may be values.
inline OnbDerivPtr onb_ext_derivation(const PureTypePtr& q, const std::vector<PureTermPtr>& s) {
  for (auto& t : s)
    if (!is_expression(t)) return nullptr;
  std::map<std::string, OnbDerivPtr> memo;
  return detail::derive_onb(q, s, /*extended=*/true, &memo);
}

inline bool check_onb(const PureTypePtr& q, const std::vector<PureTermPtr>& s) {
  return onb_derivation(q, s) != nullptr;
}
inline bool check_onb_ext(const PureTypePtr& q, const std::vector<PureTermPtr>& s) {
  return onb_ext_derivation(q, s) != nullptr;
}

// ---------------------------------------------------------------------------
// Formation judgements, with unification to pin down injection and pattern
// variable types. A type that stays undetermined raises E-AMBIGUOUS; an
// ascription resolves it.
// ---------------------------------------------------------------------------

struct UnitaryType {
  PureTypePtr domain;
  PureTypePtr codomain;
};

inline std::string print_unitary_type(const UnitaryType& u) {
  return "U(" + print_type(u.domain) + ", " + print_type(u.codomain) + ")";
}

namespace detail {

struct UType;
using UTypePtr = std::shared_ptr<UType>;
struct UType {
  enum class Kind { Unit, Sum, Tensor, QNat, Hole };
  Kind kind;
  UTypePtr left, right;
  int hole = -1;
};

class Unifier {
 public:
  UTypePtr hole() {
    auto t = std::make_shared<UType>();
    t->kind = UType::Kind::Hole;
    t->hole = next_++;
    return t;
  }
  static UTypePtr leaf(UType::Kind k) {
    auto t = std::make_shared<UType>();
    t->kind = k;
    return t;
  }
  static UTypePtr node(UType::Kind k, UTypePtr l, UTypePtr r) {
    auto t = std::make_shared<UType>();
    t->kind = k;
    t->left = std::move(l);
    t->right = std::move(r);
    return t;
  }
  static UTypePtr from(const PureTypePtr& p) {
    switch (p->kind) {
      case PureType::Kind::Unit: return leaf(UType::Kind::Unit);
      case PureType::Kind::QNat: return leaf(UType::Kind::QNat);
      case PureType::Kind::Sum: return node(UType::Kind::Sum, from(p->left), from(p->right));
      case PureType::Kind::Tensor: return node(UType::Kind::Tensor, from(p->left), from(p->right));
    }
    throw InternalError("from: bad type");
  }

  UTypePtr find(UTypePtr t) {
    while (t->kind == UType::Kind::Hole) {
      auto it = bind_.find(t->hole);
      if (it == bind_.end()) break;
      t = it->second;
    }
    return t;
  }

  bool occurs(int h, const UTypePtr& t0) {
    auto t = find(t0);
    if (t->kind == UType::Kind::Hole) return t->hole == h;
    if (t->left && occurs(h, t->left)) return true;
    if (t->right && occurs(h, t->right)) return true;
    return false;
  }

  void unify(UTypePtr a, UTypePtr b, const Span& span) {
    a = find(a);
    b = find(b);
    if (a->kind == UType::Kind::Hole && b->kind == UType::Kind::Hole && a->hole == b->hole) return;
    if (a->kind == UType::Kind::Hole) {
      if (occurs(a->hole, b)) throw Error(ErrorCode::TypeMismatch, "cyclic type constraint", span);
      bind_[a->hole] = b;
      return;
    }
    if (b->kind == UType::Kind::Hole) {
      unify(b, a, span);
      return;
    }
    if (a->kind != b->kind)
      throw Error(ErrorCode::TypeMismatch, "cannot unify " + show(a) + " with " + show(b), span);
    if (a->left) {
      unify(a->left, b->left, span);
      unify(a->right, b->right, span);
    }
  }

  // fully resolved concrete type, or nullptr if a hole survives
  PureTypePtr resolve(UTypePtr t) {
    t = find(t);
    switch (t->kind) {
      case UType::Kind::Unit: return ty_unit();
      case UType::Kind::QNat: return ty_qnat();
      case UType::Kind::Hole: return nullptr;
      case UType::Kind::Sum: {
        auto l = resolve(t->left), r = resolve(t->right);
        return l && r ? ty_sum(l, r) : nullptr;
      }
      case UType::Kind::Tensor: {
        auto l = resolve(t->left), r = resolve(t->right);
        return l && r ? ty_tensor(l, r) : nullptr;
      }
    }
    return nullptr;
  }

  std::string show(UTypePtr t) {
    t = find(t);
    switch (t->kind) {
      case UType::Kind::Unit: return "I";
      case UType::Kind::QNat: return "qnat";
      case UType::Kind::Hole: return "?" + std::to_string(t->hole);
      case UType::Kind::Sum: return "(" + show(t->left) + " (+) " + show(t->right) + ")";
      case UType::Kind::Tensor: return "(" + show(t->left) + " (x) " + show(t->right) + ")";
    }
    return "?";
  }

 private:
  int next_ = 0;
  std::map<int, UTypePtr> bind_;
};

struct InferState {
  Unifier uni;
  std::map<const PureTerm*, UTypePtr> term_types;
  std::map<const UnitaryExpr*, std::pair<UTypePtr, UTypePtr>> unitary_types;
  // Clauses nodes to validate once types are concrete
  std::vector<const UnitaryExpr*> clause_nodes;
};

inline std::pair<UTypePtr, UTypePtr> infer_unitary(InferState& st, const UnitaryExprPtr& u);

// Returns the inferred type of t; `used` collects variable occurrences.
inline UTypePtr infer_term(InferState& st, const std::map<std::string, UTypePtr>& ctx,
                           const PureTermPtr& t, std::vector<std::string>& used) {
  auto& uni = st.uni;
  UTypePtr ty;
  switch (t->kind) {
    case PureTerm::Kind::Star:
      ty = Unifier::leaf(UType::Kind::Unit);
      break;
    case PureTerm::Kind::Var: {
      auto it = ctx.find(t->var);
      if (it == ctx.end())
        throw Error(ErrorCode::UnboundVariable, "unbound variable '" + t->var + "'", t->span);
      used.push_back(t->var);
      ty = it->second;
      break;
    }
    case PureTerm::Kind::Zero:
      ty = Unifier::leaf(UType::Kind::QNat);
      break;
    case PureTerm::Kind::Succ: {
      auto c = infer_term(st, ctx, t->child, used);
      uni.unify(c, Unifier::leaf(UType::Kind::QNat), t->span);
      ty = Unifier::leaf(UType::Kind::QNat);
      break;
    }
    case PureTerm::Kind::InjL: {
      auto c = infer_term(st, ctx, t->child, used);
      ty = Unifier::node(UType::Kind::Sum, c, uni.hole());
      break;
    }
    case PureTerm::Kind::InjR: {
      auto c = infer_term(st, ctx, t->child, used);
      ty = Unifier::node(UType::Kind::Sum, uni.hole(), c);
      break;
    }
    case PureTerm::Kind::Pair: {
      std::vector<std::string> u1, u2;
      auto l = infer_term(st, ctx, t->left, u1);
      auto r = infer_term(st, ctx, t->right, u2);
      for (auto& x : u1)
        if (std::find(u2.begin(), u2.end(), x) != u2.end())
          throw Error(ErrorCode::LinearityViolation, "variable '" + x + "' used more than once", t->span);
      used.insert(used.end(), u1.begin(), u1.end());
      used.insert(used.end(), u2.begin(), u2.end());
      ty = Unifier::node(UType::Kind::Tensor, l, r);
      break;
    }
    case PureTerm::Kind::Apply: {
      auto [dom, cod] = infer_unitary(st, t->unitary);
      auto c = infer_term(st, ctx, t->child, used);
      uni.unify(dom, c, t->span);
      ty = cod;
      break;
    }
    case PureTerm::Kind::LinComb: {
      if (t->entries.empty())
        throw Error(ErrorCode::NotNormalized, "empty linear combination", t->span);
      double norm2 = 0;
      for (auto& e : t->entries) norm2 += std::norm(e.coef);
      if (std::abs(norm2 - 1.0) > tolerance())
        throw Error(ErrorCode::NotNormalized,
                    "combination has squared norm " + format_real(norm2), t->span);
      for (std::size_t i = 0; i < t->entries.size(); ++i)
        for (std::size_t j = i + 1; j < t->entries.size(); ++j)
          if (!orthogonal(t->entries[i].term, t->entries[j].term))
            throw Error(ErrorCode::NonOrthogonalSummands,
                        "summands " + print_term(t->entries[i].term) + " and " +
                            print_term(t->entries[j].term) + " are not derivably orthogonal",
                        t->span);
      ty = uni.hole();
      std::vector<std::string> first;
      for (std::size_t i = 0; i < t->entries.size(); ++i) {
        std::vector<std::string> ui;
        auto et = infer_term(st, ctx, t->entries[i].term, ui);
        uni.unify(ty, et, t->span);
        std::sort(ui.begin(), ui.end());
        if (i == 0)
          first = ui;
        else if (ui != first)
          throw Error(ErrorCode::LinearityViolation,
                      "combination entries use different variable sets", t->span);
      }
      used.insert(used.end(), first.begin(), first.end());
      break;
    }
    case PureTerm::Kind::Ascribe: {
      auto c = infer_term(st, ctx, t->child, used);
      uni.unify(c, Unifier::from(t->ascribed), t->span);
      ty = c;
      break;
    }
  }
  st.term_types[t.get()] = ty;
  return ty;
}

inline std::pair<UTypePtr, UTypePtr> infer_unitary(InferState& st, const UnitaryExprPtr& u) {
  auto& uni = st.uni;
  std::pair<UTypePtr, UTypePtr> ty;
  switch (u->kind) {
    case UnitaryExpr::Kind::Clauses: {
      UTypePtr dom = uni.hole(), cod = uni.hole();
      if (u->clauses.empty())
        throw Error(ErrorCode::NotAnOnb, "unitary abstraction with no clauses", u->span);
      for (auto& c : u->clauses) {
        if (!is_basis_value(c.pattern))
          throw Error(ErrorCode::MalformedPattern, "clause pattern is not a basis value", u->span);
        if (!is_expression(c.body))
          throw Error(ErrorCode::MalformedInput, "clause body contains a unitary application", u->span);
        std::set<std::string> seen;
        if (!pattern_vars_distinct(c.pattern, seen))
          throw Error(ErrorCode::MalformedPattern, "pattern binds a variable more than once", u->span);
        std::map<std::string, UTypePtr> pctx;
        for (auto& x : seen) pctx[x] = uni.hole();
        std::vector<std::string> pused;
        auto pt = infer_term(st, pctx, c.pattern, pused);
        uni.unify(dom, pt, u->span);
        std::vector<std::string> bused;
        auto bt = infer_term(st, pctx, c.body, bused);
        uni.unify(cod, bt, u->span);
        std::set<std::string> bset(bused.begin(), bused.end());
        if (bset != seen)
          throw Error(ErrorCode::ClauseContextMismatch,
                      "clause body must use exactly the pattern variables", u->span);
      }
      st.clause_nodes.push_back(u.get());
      ty = {dom, cod};
      break;
    }
    case UnitaryExpr::Kind::Tensor: {
      auto l = infer_unitary(st, u->left);
      auto r = infer_unitary(st, u->right);
      ty = {Unifier::node(UType::Kind::Tensor, l.first, r.first),
            Unifier::node(UType::Kind::Tensor, l.second, r.second)};
      break;
    }
    case UnitaryExpr::Kind::DirectSum: {
      auto l = infer_unitary(st, u->left);
      auto r = infer_unitary(st, u->right);
      ty = {Unifier::node(UType::Kind::Sum, l.first, r.first),
            Unifier::node(UType::Kind::Sum, l.second, r.second)};
      break;
    }
    case UnitaryExpr::Kind::Compose: {
      auto second = infer_unitary(st, u->left);
      auto first = infer_unitary(st, u->right);
      uni.unify(first.second, second.first, u->span);
      ty = {first.first, second.second};
      break;
    }
    case UnitaryExpr::Kind::Adjoint: {
      auto c = infer_unitary(st, u->child);
      ty = {c.second, c.first};
      break;
    }
    case UnitaryExpr::Kind::Ctrl: {
      auto c = infer_unitary(st, u->child);
      uni.unify(c.first, c.second, u->span);
      auto q = Unifier::node(UType::Kind::Tensor, Unifier::from(ty_qbit()), c.first);
      ty = {q, q};
      break;
    }
  }
  st.unitary_types[u.get()] = ty;
  return ty;
}

// Post-resolution pass: the ONB side conditions of every unitary abstraction.
inline void validate_clauses(InferState& st, const std::map<const PureTerm*, PureTypePtr>& types) {
  for (const UnitaryExpr* u : st.clause_nodes) {
    std::vector<PureTermPtr> pats, bodies;
    for (auto& c : u->clauses) {
      for (auto& p : pats)
        if (term_equal(p, c.pattern))
          throw Error(ErrorCode::NotAnOnb, "duplicate clause pattern " + print_term(p), u->span);
      pats.push_back(c.pattern);
      bodies.push_back(c.body);
    }
    auto it = st.unitary_types.find(u);
    PureTypePtr q1, q2;
    if (it != st.unitary_types.end()) {
      q1 = st.uni.resolve(it->second.first);
      q2 = st.uni.resolve(it->second.second);
    }
    if (!q1 || !q2) throw Error(ErrorCode::AmbiguousType, "unitary type not determined", u->span);
    if (!check_onb(q1, pats))
      throw Error(ErrorCode::NotAnOnb,
                  "clause patterns do not form an orthonormal basis of " + print_type(q1), u->span);
    if (!check_onb_ext(q2, bodies))
      throw Error(ErrorCode::NotAnOnbExt,
                  "clause bodies do not form an orthogonal decomposition of " + print_type(q2),
                  u->span);
    (void)types;
  }
}

}  // namespace detail

// Resolved types of every subterm / unitary subexpression, for the backends.
struct PureTyping {
  PureTypePtr type;
  std::map<const PureTerm*, PureTypePtr> term_types;
  std::map<const UnitaryExpr*, UnitaryType> unitary_types;
};

inline PureTyping typecheck_term_full(const PureContext& ctx, const PureTermPtr& t,
                                      const PureTypePtr& expected = nullptr) {
  detail::InferState st;
  std::map<std::string, detail::UTypePtr> uctx;
  for (auto& [n, ty] : ctx.vars) {
    if (uctx.count(n))
      throw Error(ErrorCode::LinearityViolation, "duplicate context variable '" + n + "'");
    uctx[n] = detail::Unifier::from(ty);
  }
  std::vector<std::string> used;
  auto ty = detail::infer_term(st, uctx, t, used);
  if (expected) st.uni.unify(ty, detail::Unifier::from(expected), t->span);

  std::sort(used.begin(), used.end());
  std::vector<std::string> declared;
  for (auto& [n, _] : ctx.vars) declared.push_back(n);
  std::sort(declared.begin(), declared.end());
  if (used != declared)
    throw Error(ErrorCode::LinearityViolation,
                "context variables must each occur exactly once", t->span);

  PureTyping out;
  for (auto& [node, ut] : st.term_types) {
    auto r = st.uni.resolve(ut);
    if (!r)
      throw Error(ErrorCode::AmbiguousType,
                  "type not fully determined; add an ascription", node->span);
    out.term_types[node] = r;
  }
  for (auto& [node, ut] : st.unitary_types) {
    auto d = st.uni.resolve(ut.first);
    auto c = st.uni.resolve(ut.second);
    if (!d || !c) throw Error(ErrorCode::AmbiguousType, "unitary type not determined", node->span);
    out.unitary_types[node] = UnitaryType{d, c};
  }
  detail::validate_clauses(st, out.term_types);
  out.type = out.term_types.at(t.get());
  return out;
}

inline PureTypePtr typecheck_term(const PureContext& ctx, const PureTermPtr& t) {
  return typecheck_term_full(ctx, t).type;
}

struct UnitaryTyping {
  UnitaryType type;
  std::map<const PureTerm*, PureTypePtr> term_types;
  std::map<const UnitaryExpr*, UnitaryType> unitary_types;
};

inline UnitaryTyping typecheck_unitary_full(const UnitaryExprPtr& u,
                                            const std::optional<UnitaryType>& expected = std::nullopt,
                                            const PureTypePtr& expected_domain = nullptr,
                                            const PureTypePtr& expected_codomain = nullptr) {
  detail::InferState st;
  auto [dom, cod] = detail::infer_unitary(st, u);
  if (expected) {
    st.uni.unify(dom, detail::Unifier::from(expected->domain), u->span);
    st.uni.unify(cod, detail::Unifier::from(expected->codomain), u->span);
  }
  if (expected_domain) st.uni.unify(dom, detail::Unifier::from(expected_domain), u->span);
  if (expected_codomain) st.uni.unify(cod, detail::Unifier::from(expected_codomain), u->span);
  UnitaryTyping out;
  for (auto& [node, ut] : st.term_types) {
    auto r = st.uni.resolve(ut);
    if (!r) throw Error(ErrorCode::AmbiguousType, "type not fully determined", node->span);
    out.term_types[node] = r;
  }
  for (auto& [node, ut] : st.unitary_types) {
    auto d = st.uni.resolve(ut.first);
    auto c = st.uni.resolve(ut.second);
    if (!d || !c)
      throw Error(ErrorCode::AmbiguousType,
                  "unitary type not determined; add a type annotation", node->span);
    out.unitary_types[node] = UnitaryType{d, c};
  }
  detail::validate_clauses(st, out.term_types);
  out.type = out.unitary_types.at(u.get());
  return out;
}

inline UnitaryType typecheck_unitary(const UnitaryExprPtr& u) {
  return typecheck_unitary_full(u).type;
}
inline UnitaryType typecheck_unitary(const UnitaryExprPtr& u, const UnitaryType& expected) {
  return typecheck_unitary_full(u, expected).type;
}

}  // namespace qcl
