#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qcl/pure_ast.hpp"

namespace qcl {

// ---------------------------------------------------------------------------
// Types of the classically controlled calculus. bit = I + I, and the
// main-level qbit is B(qbit-pure).
// ---------------------------------------------------------------------------

struct MainType;
using MainTypePtr = std::shared_ptr<const MainType>;

struct MainType {
  enum class Kind { Unit, Sum, Tensor, Bang, Lolli, Nat, BOp };
  Kind kind;
  MainTypePtr left, right;  // Sum / Tensor / Lolli
  MainTypePtr inner;        // Bang
  PureTypePtr pure;         // BOp
};

inline MainTypePtr mty_unit() {
  static const auto t = std::make_shared<MainType>(MainType{MainType::Kind::Unit, nullptr, nullptr, nullptr, nullptr});
  return t;
}
inline MainTypePtr mty_nat() {
  static const auto t = std::make_shared<MainType>(MainType{MainType::Kind::Nat, nullptr, nullptr, nullptr, nullptr});
  return t;
}
inline MainTypePtr mty_sum(MainTypePtr l, MainTypePtr r) {
  return std::make_shared<MainType>(MainType{MainType::Kind::Sum, std::move(l), std::move(r), nullptr, nullptr});
}
inline MainTypePtr mty_tensor(MainTypePtr l, MainTypePtr r) {
  return std::make_shared<MainType>(MainType{MainType::Kind::Tensor, std::move(l), std::move(r), nullptr, nullptr});
}
inline MainTypePtr mty_lolli(MainTypePtr l, MainTypePtr r) {
  return std::make_shared<MainType>(MainType{MainType::Kind::Lolli, std::move(l), std::move(r), nullptr, nullptr});
}
inline MainTypePtr mty_bang(MainTypePtr t) {
  return std::make_shared<MainType>(MainType{MainType::Kind::Bang, nullptr, nullptr, std::move(t), nullptr});
}
inline MainTypePtr mty_bop(PureTypePtr q) {
  return std::make_shared<MainType>(MainType{MainType::Kind::BOp, nullptr, nullptr, nullptr, std::move(q)});
}
inline MainTypePtr mty_bit() {
  static const auto t = mty_sum(mty_unit(), mty_unit());
  return t;
}
inline MainTypePtr mty_qbit() {
  static const auto t = mty_bop(ty_qbit());
  return t;
}

inline bool mtype_equal(const MainTypePtr& a, const MainTypePtr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case MainType::Kind::Unit:
    case MainType::Kind::Nat:
      return true;
    case MainType::Kind::Sum:
    case MainType::Kind::Tensor:
    case MainType::Kind::Lolli:
      return mtype_equal(a->left, b->left) && mtype_equal(a->right, b->right);
    case MainType::Kind::Bang:
      return mtype_equal(a->inner, b->inner);
    case MainType::Kind::BOp:
      return type_equal(a->pure, b->pure);
  }
  return false;
}

inline std::string print_mtype(const MainTypePtr& t) {
  switch (t->kind) {
    case MainType::Kind::Unit: return "I";
    case MainType::Kind::Nat: return "Nat";
    case MainType::Kind::Sum:
      if (mtype_equal(t, mty_bit())) return "bit";
      return "(" + print_mtype(t->left) + " + " + print_mtype(t->right) + ")";
    case MainType::Kind::Tensor:
      return "(" + print_mtype(t->left) + " (x) " + print_mtype(t->right) + ")";
    case MainType::Kind::Lolli:
      return "(" + print_mtype(t->left) + " -o " + print_mtype(t->right) + ")";
    case MainType::Kind::Bang:
      return "!" + print_mtype(t->inner);
    case MainType::Kind::BOp:
      if (type_equal(t->pure, ty_qbit())) return "qbit";
      return "B(" + print_type(t->pure) + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Terms. Case binders may be star patterns (left * -> ...), consuming a unit
// component without binding it.
// ---------------------------------------------------------------------------

struct MainTerm;
using MainTermPtr = std::shared_ptr<const MainTerm>;

struct MainTerm {
  enum class Kind {
    Star, Var, InL, InR, Case, Pair, LetPair, Lift, Force, Lam, App,
    Zero, Succ, Match, Pure, Meas, UnApply, LetBang, LetPairBang, Ascribe
  };
  Kind kind;
  std::string var, var2;                 // binders (LetPair: var,var2; Lam/Match/LetBang…)
  std::optional<std::string> lvar, rvar; // Case binders; nullopt = star pattern
  MainTermPtr a, b, c;                   // children, by position
  PureTermPtr pure;                      // Pure
  UnitaryExprPtr unitary;                // UnApply
  MainTypePtr ascribed;                  // Ascribe
  Span span;
};

namespace detail {
inline std::shared_ptr<MainTerm> mnode(MainTerm::Kind k, Span s) {
  auto t = std::make_shared<MainTerm>();
  t->kind = k;
  t->span = s;
  return t;
}
}  // namespace detail

inline MainTermPtr mm_star(Span s = {}) { return detail::mnode(MainTerm::Kind::Star, s); }
inline MainTermPtr mm_var(std::string x, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::Var, s);
  t->var = std::move(x);
  return t;
}
inline MainTermPtr mm_inl(MainTermPtr a, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::InL, s);
  t->a = std::move(a);
  return t;
}
inline MainTermPtr mm_inr(MainTermPtr a, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::InR, s);
  t->a = std::move(a);
  return t;
}
inline MainTermPtr mm_case(MainTermPtr scrut, std::optional<std::string> lv, MainTermPtr lbody,
                           std::optional<std::string> rv, MainTermPtr rbody, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::Case, s);
  t->a = std::move(scrut);
  t->lvar = std::move(lv);
  t->b = std::move(lbody);
  t->rvar = std::move(rv);
  t->c = std::move(rbody);
  return t;
}
inline MainTermPtr mm_pair(MainTermPtr a, MainTermPtr b, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::Pair, s);
  t->a = std::move(a);
  t->b = std::move(b);
  return t;
}
inline MainTermPtr mm_letpair(std::string x, std::string y, MainTermPtr rhs, MainTermPtr body,
                              Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::LetPair, s);
  t->var = std::move(x);
  t->var2 = std::move(y);
  t->a = std::move(rhs);
  t->b = std::move(body);
  return t;
}
inline MainTermPtr mm_lift(MainTermPtr a, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::Lift, s);
  t->a = std::move(a);
  return t;
}
inline MainTermPtr mm_force(MainTermPtr a, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::Force, s);
  t->a = std::move(a);
  return t;
}
inline MainTermPtr mm_lam(std::string x, MainTermPtr body, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::Lam, s);
  t->var = std::move(x);
  t->a = std::move(body);
  return t;
}
inline MainTermPtr mm_app(MainTermPtr f, MainTermPtr arg, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::App, s);
  t->a = std::move(f);
  t->b = std::move(arg);
  return t;
}
inline MainTermPtr mm_zero(Span s = {}) { return detail::mnode(MainTerm::Kind::Zero, s); }
inline MainTermPtr mm_succ(MainTermPtr a, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::Succ, s);
  t->a = std::move(a);
  return t;
}
inline MainTermPtr mm_nat(std::size_t n) {
  MainTermPtr t = mm_zero();
  for (std::size_t i = 0; i < n; ++i) t = mm_succ(t);
  return t;
}
inline MainTermPtr mm_match(MainTermPtr scrut, MainTermPtr zbody, std::string x, MainTermPtr sbody,
                            Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::Match, s);
  t->a = std::move(scrut);
  t->b = std::move(zbody);
  t->var = std::move(x);
  t->c = std::move(sbody);
  return t;
}
inline MainTermPtr mm_pure(PureTermPtr p, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::Pure, s);
  t->pure = std::move(p);
  return t;
}
inline MainTermPtr mm_meas(MainTermPtr a, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::Meas, s);
  t->a = std::move(a);
  return t;
}
inline MainTermPtr mm_unapply(UnitaryExprPtr u, MainTermPtr a, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::UnApply, s);
  t->unitary = std::move(u);
  t->a = std::move(a);
  return t;
}
inline MainTermPtr mm_letbang(std::string z, MainTermPtr rhs, MainTermPtr body, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::LetBang, s);
  t->var = std::move(z);
  t->a = std::move(rhs);
  t->b = std::move(body);
  return t;
}
inline MainTermPtr mm_letpairbang(std::string x, std::string y, MainTermPtr rhs, MainTermPtr body,
                                  Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::LetPairBang, s);
  t->var = std::move(x);
  t->var2 = std::move(y);
  t->a = std::move(rhs);
  t->b = std::move(body);
  return t;
}
inline MainTermPtr mm_ascribe(MainTermPtr a, MainTypePtr ty, Span s = {}) {
  auto t = detail::mnode(MainTerm::Kind::Ascribe, s);
  t->a = std::move(a);
  t->ascribed = std::move(ty);
  return t;
}

inline const MainTerm* mstrip(const MainTerm* t) {
  while (t->kind == MainTerm::Kind::Ascribe) t = t->a.get();
  return t;
}
inline MainTermPtr mstrip(const MainTermPtr& t) {
  MainTermPtr r = t;
  while (r->kind == MainTerm::Kind::Ascribe) r = r->a;
  return r;
}

// Values: * | x | inl V | inr V | V (x) W | lift M | \x.M | zero | succ V.
inline bool is_value(const MainTermPtr& m0) {
  const MainTerm* m = mstrip(m0.get());
  switch (m->kind) {
    case MainTerm::Kind::Star:
    case MainTerm::Kind::Var:
    case MainTerm::Kind::Lift:
    case MainTerm::Kind::Lam:
    case MainTerm::Kind::Zero:
      return true;
    case MainTerm::Kind::InL:
    case MainTerm::Kind::InR:
    case MainTerm::Kind::Succ:
      return is_value(m->a);
    case MainTerm::Kind::Pair:
      return is_value(m->a) && is_value(m->b);
    default:
      return false;
  }
}

inline void main_free_vars(const MainTermPtr& m0, std::set<std::string>& bound,
                           std::vector<std::string>& out) {
  const MainTerm* m = mstrip(m0.get());
  auto with = [&](const std::string& x, const MainTermPtr& body) {
    bool fresh = bound.insert(x).second;
    main_free_vars(body, bound, out);
    if (fresh) bound.erase(x);
  };
  switch (m->kind) {
    case MainTerm::Kind::Var:
      if (!bound.count(m->var)) out.push_back(m->var);
      break;
    case MainTerm::Kind::InL:
    case MainTerm::Kind::InR:
    case MainTerm::Kind::Succ:
    case MainTerm::Kind::Lift:
    case MainTerm::Kind::Force:
    case MainTerm::Kind::Meas:
    case MainTerm::Kind::UnApply:
      main_free_vars(m->a, bound, out);
      break;
    case MainTerm::Kind::Pair:
    case MainTerm::Kind::App:
      main_free_vars(m->a, bound, out);
      main_free_vars(m->b, bound, out);
      break;
    case MainTerm::Kind::Case:
      main_free_vars(m->a, bound, out);
      if (m->lvar)
        with(*m->lvar, m->b);
      else
        main_free_vars(m->b, bound, out);
      if (m->rvar)
        with(*m->rvar, m->c);
      else
        main_free_vars(m->c, bound, out);
      break;
    case MainTerm::Kind::LetPair:
    case MainTerm::Kind::LetPairBang: {
      main_free_vars(m->a, bound, out);
      bool f1 = bound.insert(m->var).second;
      bool f2 = bound.insert(m->var2).second;
      main_free_vars(m->b, bound, out);
      if (f1) bound.erase(m->var);
      if (f2) bound.erase(m->var2);
      break;
    }
    case MainTerm::Kind::Lam:
      with(m->var, m->a);
      break;
    case MainTerm::Kind::Match:
      main_free_vars(m->a, bound, out);
      main_free_vars(m->b, bound, out);
      with(m->var, m->c);
      break;
    case MainTerm::Kind::LetBang: {
      main_free_vars(m->a, bound, out);
      with(m->var, m->b);
      break;
    }
    default:
      break;
  }
}

inline std::vector<std::string> main_free_vars(const MainTermPtr& m) {
  std::set<std::string> bound;
  std::vector<std::string> out;
  main_free_vars(m, bound, out);
  return out;
}

// Capture-free substitution M[V/x]; shadowing binders stop it. Substituted
// values in the machine only carry machine-generated block trackers, which
// cannot clash with user binders.
inline MainTermPtr main_subst(const MainTermPtr& m0, const std::string& x, const MainTermPtr& v) {
  const MainTerm* m = m0.get();
  auto sub = [&](const MainTermPtr& t) { return main_subst(t, x, v); };
  auto copy = [&]() { return std::make_shared<MainTerm>(*m); };
  switch (m->kind) {
    case MainTerm::Kind::Star:
    case MainTerm::Kind::Zero:
    case MainTerm::Kind::Pure:
      return m0;
    case MainTerm::Kind::Var:
      return m->var == x ? v : m0;
    case MainTerm::Kind::InL:
    case MainTerm::Kind::InR:
    case MainTerm::Kind::Succ:
    case MainTerm::Kind::Lift:
    case MainTerm::Kind::Force:
    case MainTerm::Kind::Meas:
    case MainTerm::Kind::UnApply:
    case MainTerm::Kind::Ascribe: {
      auto t = copy();
      t->a = sub(m->a);
      return t;
    }
    case MainTerm::Kind::Pair:
    case MainTerm::Kind::App: {
      auto t = copy();
      t->a = sub(m->a);
      t->b = sub(m->b);
      return t;
    }
    case MainTerm::Kind::Case: {
      auto t = copy();
      t->a = sub(m->a);
      if (!m->lvar || *m->lvar != x) t->b = sub(m->b);
      if (!m->rvar || *m->rvar != x) t->c = sub(m->c);
      return t;
    }
    case MainTerm::Kind::LetPair:
    case MainTerm::Kind::LetPairBang: {
      auto t = copy();
      t->a = sub(m->a);
      if (m->var != x && m->var2 != x) t->b = sub(m->b);
      return t;
    }
    case MainTerm::Kind::Lam: {
      if (m->var == x) return m0;
      auto t = copy();
      t->a = sub(m->a);
      return t;
    }
    case MainTerm::Kind::Match: {
      auto t = copy();
      t->a = sub(m->a);
      t->b = sub(m->b);
      if (m->var != x) t->c = sub(m->c);
      return t;
    }
    case MainTerm::Kind::LetBang: {
      auto t = copy();
      t->a = sub(m->a);
      if (m->var != x) t->b = sub(m->b);
      return t;
    }
  }
  throw InternalError("main_subst: unreachable");
}

// Printer (canonical surface syntax).
inline std::string print_mterm(const MainTermPtr& m0) {
  const MainTerm* m = m0.get();
  switch (m->kind) {
    case MainTerm::Kind::Star: return "*";
    case MainTerm::Kind::Var: return m->var;
    case MainTerm::Kind::Zero: return "zero";
    case MainTerm::Kind::InL: return "inl " + print_mterm(m->a);
    case MainTerm::Kind::InR: return "inr " + print_mterm(m->a);
    case MainTerm::Kind::Succ: return "succ " + print_mterm(m->a);
    case MainTerm::Kind::Lift: return "lift " + print_mterm(m->a);
    case MainTerm::Kind::Force: return "force " + print_mterm(m->a);
    case MainTerm::Kind::Case:
      return "case " + print_mterm(m->a) + " of { left " + (m->lvar ? *m->lvar : "*") + " -> " +
             print_mterm(m->b) + "; right " + (m->rvar ? *m->rvar : "*") + " -> " +
             print_mterm(m->c) + " }";
    case MainTerm::Kind::Pair:
      return "(" + print_mterm(m->a) + " (x) " + print_mterm(m->b) + ")";
    case MainTerm::Kind::LetPair:
      return "let " + m->var + " (x) " + m->var2 + " = " + print_mterm(m->a) + " in " +
             print_mterm(m->b);
    case MainTerm::Kind::Lam: return "(\\" + m->var + ". " + print_mterm(m->a) + ")";
    case MainTerm::Kind::App:
      return "(" + print_mterm(m->a) + " " + print_mterm(m->b) + ")";
    case MainTerm::Kind::Match:
      return "match " + print_mterm(m->a) + " with { zero -> " + print_mterm(m->b) + "; succ " +
             m->var + " -> " + print_mterm(m->c) + " }";
    case MainTerm::Kind::Pure: return "pure(" + print_term(m->pure) + ")";
    case MainTerm::Kind::Meas: return "meas(" + print_mterm(m->a) + ")";
    case MainTerm::Kind::UnApply:
      return "U[" + print_unitary(m->unitary) + "](" + print_mterm(m->a) + ")";
    case MainTerm::Kind::LetBang:
      return "let B(" + m->var + ") = " + print_mterm(m->a) + " in " + print_mterm(m->b);
    case MainTerm::Kind::LetPairBang:
      return "let B(" + m->var + " (x) " + m->var2 + ") = " + print_mterm(m->a) + " in " +
             print_mterm(m->b);
    case MainTerm::Kind::Ascribe:
      return "(" + print_mterm(m->a) + " : " + print_mtype(m->ascribed) + ")";
  }
  return "?";
}

}  // namespace qcl
