#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "qcl/diagnostics.hpp"
#include "qcl/scalar.hpp"

namespace qcl {

// ---------------------------------------------------------------------------
// Types of the quantum-control fragment: I, (+), (x), qnat. qbit is sugar for
// I (+) I.
// ---------------------------------------------------------------------------

struct PureType;
using PureTypePtr = std::shared_ptr<const PureType>;

struct PureType {
  enum class Kind { Unit, Sum, Tensor, QNat };
  Kind kind;
  PureTypePtr left;   // Sum / Tensor
  PureTypePtr right;  // Sum / Tensor
};

inline PureTypePtr ty_unit() {
  static const auto t = std::make_shared<PureType>(PureType{PureType::Kind::Unit, nullptr, nullptr});
  return t;
}
inline PureTypePtr ty_qnat() {
  static const auto t = std::make_shared<PureType>(PureType{PureType::Kind::QNat, nullptr, nullptr});
  return t;
}
inline PureTypePtr ty_sum(PureTypePtr l, PureTypePtr r) {
  return std::make_shared<PureType>(PureType{PureType::Kind::Sum, std::move(l), std::move(r)});
}
inline PureTypePtr ty_tensor(PureTypePtr l, PureTypePtr r) {
  return std::make_shared<PureType>(PureType{PureType::Kind::Tensor, std::move(l), std::move(r)});
}
inline PureTypePtr ty_qbit() {
  static const auto t = ty_sum(ty_unit(), ty_unit());
  return t;
}

inline bool type_equal(const PureTypePtr& a, const PureTypePtr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case PureType::Kind::Unit:
    case PureType::Kind::QNat:
      return true;
    case PureType::Kind::Sum:
    case PureType::Kind::Tensor:
      return type_equal(a->left, b->left) && type_equal(a->right, b->right);
  }
  return false;
}

inline std::string print_type(const PureTypePtr& t) {
  switch (t->kind) {
    case PureType::Kind::Unit: return "I";
    case PureType::Kind::QNat: return "qnat";
    case PureType::Kind::Sum:
      if (type_equal(t, ty_qbit())) return "qbit";
      return "(" + print_type(t->left) + " (+) " + print_type(t->right) + ")";
    case PureType::Kind::Tensor:
      return "(" + print_type(t->left) + " (x) " + print_type(t->right) + ")";
  }
  return "?";
}

// Top-level tensor factors, left to right. Unit factors are kept.
inline void flatten_tensor(const PureTypePtr& t, std::vector<PureTypePtr>& out) {
  if (t->kind == PureType::Kind::Tensor) {
    flatten_tensor(t->left, out);
    flatten_tensor(t->right, out);
  } else {
    out.push_back(t);
  }
}
inline std::vector<PureTypePtr> flatten_tensor(const PureTypePtr& t) {
  std::vector<PureTypePtr> out;
  flatten_tensor(t, out);
  return out;
}

// ---------------------------------------------------------------------------
// Terms and unitary expressions.
// ---------------------------------------------------------------------------

struct PureTerm;
struct UnitaryExpr;
using PureTermPtr = std::shared_ptr<const PureTerm>;
using UnitaryExprPtr = std::shared_ptr<const UnitaryExpr>;

struct LinEntry {
  Scalar coef;
  PureTermPtr term;
};

struct PureTerm {
  enum class Kind { Star, Var, InjL, InjR, Pair, Zero, Succ, Apply, LinComb, Ascribe };
  Kind kind;
  std::string var;               // Var
  PureTermPtr child;             // InjL / InjR / Succ / Apply argument / Ascribe
  PureTermPtr left, right;       // Pair
  UnitaryExprPtr unitary;        // Apply
  std::vector<LinEntry> entries; // LinComb
  PureTypePtr ascribed;          // Ascribe
  Span span;
};

struct Clause {
  PureTermPtr pattern;  // basis value, pairwise-distinct variables
  PureTermPtr body;     // expression (no unitary application)
};

struct UnitaryExpr {
  enum class Kind { Clauses, Tensor, DirectSum, Compose, Adjoint, Ctrl };
  Kind kind;
  std::vector<Clause> clauses;   // Clauses
  UnitaryExprPtr left, right;    // Tensor / DirectSum; Compose: left = second, right = first
  UnitaryExprPtr child;          // Adjoint / Ctrl
  Span span;
};

inline PureTermPtr mk_star(Span s = {}) {
  auto t = std::make_shared<PureTerm>();
  t->kind = PureTerm::Kind::Star;
  t->span = s;
  return t;
}
inline PureTermPtr mk_var(std::string name, Span s = {}) {
  auto t = std::make_shared<PureTerm>();
  t->kind = PureTerm::Kind::Var;
  t->var = std::move(name);
  t->span = s;
  return t;
}
inline PureTermPtr mk_injl(PureTermPtr c, Span s = {}) {
  auto t = std::make_shared<PureTerm>();
  t->kind = PureTerm::Kind::InjL;
  t->child = std::move(c);
  t->span = s;
  return t;
}
inline PureTermPtr mk_injr(PureTermPtr c, Span s = {}) {
  auto t = std::make_shared<PureTerm>();
  t->kind = PureTerm::Kind::InjR;
  t->child = std::move(c);
  t->span = s;
  return t;
}
inline PureTermPtr mk_pair(PureTermPtr l, PureTermPtr r, Span s = {}) {
  auto t = std::make_shared<PureTerm>();
  t->kind = PureTerm::Kind::Pair;
  t->left = std::move(l);
  t->right = std::move(r);
  t->span = s;
  return t;
}
inline PureTermPtr mk_zero(Span s = {}) {
  auto t = std::make_shared<PureTerm>();
  t->kind = PureTerm::Kind::Zero;
  t->span = s;
  return t;
}
inline PureTermPtr mk_succ(PureTermPtr c, Span s = {}) {
  auto t = std::make_shared<PureTerm>();
  t->kind = PureTerm::Kind::Succ;
  t->child = std::move(c);
  t->span = s;
  return t;
}
inline PureTermPtr mk_apply(UnitaryExprPtr u, PureTermPtr c, Span s = {}) {
  auto t = std::make_shared<PureTerm>();
  t->kind = PureTerm::Kind::Apply;
  t->unitary = std::move(u);
  t->child = std::move(c);
  t->span = s;
  return t;
}
inline PureTermPtr mk_lincomb(std::vector<LinEntry> entries, Span s = {}) {
  auto t = std::make_shared<PureTerm>();
  t->kind = PureTerm::Kind::LinComb;
  t->entries = std::move(entries);
  t->span = s;
  return t;
}
inline PureTermPtr mk_ascribe(PureTermPtr c, PureTypePtr ty, Span s = {}) {
  auto t = std::make_shared<PureTerm>();
  t->kind = PureTerm::Kind::Ascribe;
  t->child = std::move(c);
  t->ascribed = std::move(ty);
  t->span = s;
  return t;
}

// |0> and |1> carry their qbit type, as in their defining equations.
inline PureTermPtr mk_ket0() { return mk_ascribe(mk_injl(mk_star()), ty_qbit()); }
inline PureTermPtr mk_ket1() { return mk_ascribe(mk_injr(mk_star()), ty_qbit()); }
inline PureTermPtr mk_nat(std::size_t n) {
  PureTermPtr t = mk_zero();
  for (std::size_t i = 0; i < n; ++i) t = mk_succ(t);
  return t;
}

inline UnitaryExprPtr mk_clauses(std::vector<Clause> cs, Span s = {}) {
  auto u = std::make_shared<UnitaryExpr>();
  u->kind = UnitaryExpr::Kind::Clauses;
  u->clauses = std::move(cs);
  u->span = s;
  return u;
}
inline UnitaryExprPtr mk_utensor(UnitaryExprPtr l, UnitaryExprPtr r, Span s = {}) {
  auto u = std::make_shared<UnitaryExpr>();
  u->kind = UnitaryExpr::Kind::Tensor;
  u->left = std::move(l);
  u->right = std::move(r);
  u->span = s;
  return u;
}
inline UnitaryExprPtr mk_usum(UnitaryExprPtr l, UnitaryExprPtr r, Span s = {}) {
  auto u = std::make_shared<UnitaryExpr>();
  u->kind = UnitaryExpr::Kind::DirectSum;
  u->left = std::move(l);
  u->right = std::move(r);
  u->span = s;
  return u;
}
inline UnitaryExprPtr mk_compose(UnitaryExprPtr second, UnitaryExprPtr first, Span s = {}) {
  auto u = std::make_shared<UnitaryExpr>();
  u->kind = UnitaryExpr::Kind::Compose;
  u->left = std::move(second);
  u->right = std::move(first);
  u->span = s;
  return u;
}
inline UnitaryExprPtr mk_adjoint(UnitaryExprPtr c, Span s = {}) {
  auto u = std::make_shared<UnitaryExpr>();
  u->kind = UnitaryExpr::Kind::Adjoint;
  u->child = std::move(c);
  u->span = s;
  return u;
}
inline UnitaryExprPtr mk_ctrl(UnitaryExprPtr c, Span s = {}) {
  auto u = std::make_shared<UnitaryExpr>();
  u->kind = UnitaryExpr::Kind::Ctrl;
  u->child = std::move(c);
  u->span = s;
  return u;
}

// Skips ascription wrappers; syntactic predicates and comparisons work on the
// underlying term.
inline const PureTerm* strip(const PureTerm* t) {
  while (t->kind == PureTerm::Kind::Ascribe) t = t->child.get();
  return t;
}
inline PureTermPtr strip(const PureTermPtr& t) {
  PureTermPtr r = t;
  while (r->kind == PureTerm::Kind::Ascribe) r = r->child;
  return r;
}

// ---------------------------------------------------------------------------
// Syntactic predicates
// ---------------------------------------------------------------------------

// Basis value: no unitary application, no linear combination.
inline bool is_basis_value(const PureTermPtr& t0) {
  const PureTerm* t = strip(t0.get());
  switch (t->kind) {
    case PureTerm::Kind::Star:
    case PureTerm::Kind::Var:
    case PureTerm::Kind::Zero:
      return true;
    case PureTerm::Kind::InjL:
    case PureTerm::Kind::InjR:
    case PureTerm::Kind::Succ:
      return is_basis_value(t->child);
    case PureTerm::Kind::Pair:
      return is_basis_value(t->left) && is_basis_value(t->right);
    default:
      return false;
  }
}

// Expression: no unitary application.
inline bool is_expression(const PureTermPtr& t0) {
  const PureTerm* t = strip(t0.get());
  switch (t->kind) {
    case PureTerm::Kind::Star:
    case PureTerm::Kind::Var:
    case PureTerm::Kind::Zero:
      return true;
    case PureTerm::Kind::InjL:
    case PureTerm::Kind::InjR:
    case PureTerm::Kind::Succ:
      return is_expression(t->child);
    case PureTerm::Kind::Pair:
      return is_expression(t->left) && is_expression(t->right);
    case PureTerm::Kind::LinComb:
      for (auto& e : t->entries)
        if (!is_expression(e.term)) return false;
      return true;
    default:
      return false;
  }
}

inline void free_vars(const PureTermPtr& t0, std::vector<std::string>& out) {
  const PureTerm* t = strip(t0.get());
  switch (t->kind) {
    case PureTerm::Kind::Var:
      out.push_back(t->var);
      break;
    case PureTerm::Kind::InjL:
    case PureTerm::Kind::InjR:
    case PureTerm::Kind::Succ:
    case PureTerm::Kind::Apply:
      free_vars(t->child, out);
      break;
    case PureTerm::Kind::Pair:
      free_vars(t->left, out);
      free_vars(t->right, out);
      break;
    case PureTerm::Kind::LinComb:
      // variables occur once per entry; for the free-variable *set* the first
      // entry already contains them all, but collect everywhere to be safe
      for (auto& e : t->entries) free_vars(e.term, out);
      break;
    default:
      break;
  }
}

inline std::set<std::string> free_var_set(const PureTermPtr& t) {
  std::vector<std::string> v;
  free_vars(t, v);
  return std::set<std::string>(v.begin(), v.end());
}

inline bool is_closed(const PureTermPtr& t) {
  std::vector<std::string> v;
  free_vars(t, v);
  return v.empty();
}

// ---------------------------------------------------------------------------
// Structural comparison (total syntactic order on all terms; on basis values
// this is the order that value normal forms are sorted by). Variables sort
// below every constructor; ascriptions are transparent.
// ---------------------------------------------------------------------------

int term_cmp(const PureTermPtr& a, const PureTermPtr& b);
int unitary_cmp(const UnitaryExprPtr& a, const UnitaryExprPtr& b);

inline int term_rank(PureTerm::Kind k) {
  switch (k) {
    case PureTerm::Kind::Var: return 0;
    case PureTerm::Kind::Star: return 1;
    case PureTerm::Kind::InjL: return 2;
    case PureTerm::Kind::InjR: return 3;
    case PureTerm::Kind::Zero: return 4;
    case PureTerm::Kind::Succ: return 5;
    case PureTerm::Kind::Pair: return 6;
    case PureTerm::Kind::Apply: return 7;
    case PureTerm::Kind::LinComb: return 8;
    default: return 9;
  }
}

inline int scalar_cmp(const Scalar& x, const Scalar& y) {
  if (x.real() != y.real()) return x.real() < y.real() ? -1 : 1;
  if (x.imag() != y.imag()) return x.imag() < y.imag() ? -1 : 1;
  return 0;
}

inline int term_cmp(const PureTermPtr& a0, const PureTermPtr& b0) {
  const PureTerm* a = strip(a0.get());
  const PureTerm* b = strip(b0.get());
  int ra = term_rank(a->kind), rb = term_rank(b->kind);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (a->kind) {
    case PureTerm::Kind::Star:
    case PureTerm::Kind::Zero:
      return 0;
    case PureTerm::Kind::Var:
      return a->var.compare(b->var) < 0 ? -1 : (a->var == b->var ? 0 : 1);
    case PureTerm::Kind::InjL:
    case PureTerm::Kind::InjR:
    case PureTerm::Kind::Succ:
      return term_cmp(a->child, b->child);
    case PureTerm::Kind::Pair: {
      int c = term_cmp(a->left, b->left);
      if (c != 0) return c;
      return term_cmp(a->right, b->right);
    }
    case PureTerm::Kind::Apply: {
      int c = unitary_cmp(a->unitary, b->unitary);
      if (c != 0) return c;
      return term_cmp(a->child, b->child);
    }
    case PureTerm::Kind::LinComb: {
      if (a->entries.size() != b->entries.size())
        return a->entries.size() < b->entries.size() ? -1 : 1;
      for (std::size_t i = 0; i < a->entries.size(); ++i) {
        int c = scalar_cmp(a->entries[i].coef, b->entries[i].coef);
        if (c != 0) return c;
        c = term_cmp(a->entries[i].term, b->entries[i].term);
        if (c != 0) return c;
      }
      return 0;
    }
    default:
      return 0;
  }
}

inline int unitary_cmp(const UnitaryExprPtr& a, const UnitaryExprPtr& b) {
  if (a.get() == b.get()) return 0;
  if (a->kind != b->kind) return static_cast<int>(a->kind) < static_cast<int>(b->kind) ? -1 : 1;
  switch (a->kind) {
    case UnitaryExpr::Kind::Clauses: {
      if (a->clauses.size() != b->clauses.size())
        return a->clauses.size() < b->clauses.size() ? -1 : 1;
      for (std::size_t i = 0; i < a->clauses.size(); ++i) {
        int c = term_cmp(a->clauses[i].pattern, b->clauses[i].pattern);
        if (c != 0) return c;
        c = term_cmp(a->clauses[i].body, b->clauses[i].body);
        if (c != 0) return c;
      }
      return 0;
    }
    case UnitaryExpr::Kind::Tensor:
    case UnitaryExpr::Kind::DirectSum:
    case UnitaryExpr::Kind::Compose: {
      int c = unitary_cmp(a->left, b->left);
      if (c != 0) return c;
      return unitary_cmp(a->right, b->right);
    }
    case UnitaryExpr::Kind::Adjoint:
    case UnitaryExpr::Kind::Ctrl:
      return unitary_cmp(a->child, b->child);
  }
  return 0;
}

inline bool term_equal(const PureTermPtr& a, const PureTermPtr& b) { return term_cmp(a, b) == 0; }
inline bool unitary_equal(const UnitaryExprPtr& a, const UnitaryExprPtr& b) {
  return unitary_cmp(a, b) == 0;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

std::string print_term(const PureTermPtr& t);
std::string print_unitary(const UnitaryExprPtr& u);

// Renders a closed qbit/qnat-shaped basis value as |0110> / |5>, or empty if
// it has no such shape. Used by the pretty value printer.
inline std::string ket_form(const PureTermPtr& t0) {
  const PureTerm* t = strip(t0.get());
  switch (t->kind) {
    case PureTerm::Kind::InjL:
      if (strip(t->child.get())->kind == PureTerm::Kind::Star) return "0";
      return "";
    case PureTerm::Kind::InjR:
      if (strip(t->child.get())->kind == PureTerm::Kind::Star) return "1";
      return "";
    case PureTerm::Kind::Zero:
    case PureTerm::Kind::Succ: {
      std::size_t n = 0;
      while (t->kind == PureTerm::Kind::Succ) {
        ++n;
        t = strip(t->child.get());
      }
      if (t->kind != PureTerm::Kind::Zero) return "";
      return std::to_string(n);
    }
    case PureTerm::Kind::Pair: {
      std::string l = ket_form(t->left), r = ket_form(t->right);
      if (l.size() == 1 && r.size() >= 1 && l.find_first_not_of("01") == std::string::npos &&
          r.find_first_not_of("01") == std::string::npos)
        return l + r;
      return "";
    }
    default:
      return "";
  }
}

inline std::string print_term(const PureTermPtr& t0) {
  const PureTerm* t = t0.get();
  switch (t->kind) {
    case PureTerm::Kind::Star: return "*";
    case PureTerm::Kind::Var: return t->var;
    case PureTerm::Kind::Zero: return "0";
    case PureTerm::Kind::InjL: return "inl " + print_term(t->child);
    case PureTerm::Kind::InjR: return "inr " + print_term(t->child);
    case PureTerm::Kind::Succ: return "S " + print_term(t->child);
    case PureTerm::Kind::Pair:
      return "(" + print_term(t->left) + " (x) " + print_term(t->right) + ")";
    case PureTerm::Kind::Apply:
      return "(" + print_unitary(t->unitary) + " " + print_term(t->child) + ")";
    case PureTerm::Kind::LinComb: {
      std::string s;
      for (std::size_t i = 0; i < t->entries.size(); ++i) {
        if (i) s += " + ";
        s += "[" + format_scalar(t->entries[i].coef) + "]*" + print_term(t->entries[i].term);
      }
      return "(" + s + ")";
    }
    case PureTerm::Kind::Ascribe:
      return "(" + print_term(t->child) + " : " + print_type(t->ascribed) + ")";
  }
  return "?";
}

inline std::string print_unitary(const UnitaryExprPtr& u) {
  switch (u->kind) {
    case UnitaryExpr::Kind::Clauses: {
      std::string s = "{";
      for (auto& c : u->clauses) s += "| " + print_term(c.pattern) + " -> " + print_term(c.body) + " ";
      return s + "}";
    }
    case UnitaryExpr::Kind::Tensor:
      return "(" + print_unitary(u->left) + " (x) " + print_unitary(u->right) + ")";
    case UnitaryExpr::Kind::DirectSum:
      return "(" + print_unitary(u->left) + " (+) " + print_unitary(u->right) + ")";
    case UnitaryExpr::Kind::Compose:
      return "(" + print_unitary(u->left) + " . " + print_unitary(u->right) + ")";
    case UnitaryExpr::Kind::Adjoint:
      return "adj " + print_unitary(u->child);
    case UnitaryExpr::Kind::Ctrl:
      return "ctrl " + print_unitary(u->child);
  }
  return "?";
}

}  // namespace qcl
