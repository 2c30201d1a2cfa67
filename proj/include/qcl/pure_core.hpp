#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcl/pure_ast.hpp"

namespace qcl {

// Ordered typing context of the pure fragment; names pairwise distinct,
// usage strictly linear.
struct PureContext {
  std::vector<std::pair<std::string, PureTypePtr>> vars;

  const PureTypePtr* lookup(const std::string& name) const {
    for (auto& [n, ty] : vars)
      if (n == name) return &ty;
    return nullptr;
  }
};

// Finite map from variables to expressions, produced by pattern matching.
using Valuation = std::map<std::string, PureTermPtr>;

// Total order on basis values: variables (by name) below every constructor,
// Star = Star, inl < inr, 0 < S, pairs lexicographic left-then-right.
// The value normal forms of the equational theory sort entries by this order.
inline int basis_order(const PureTermPtr& a, const PureTermPtr& b) {
  if (!is_basis_value(a) || !is_basis_value(b))
    throw Error(ErrorCode::MalformedInput, "basis_order expects basis values");
  return term_cmp(a, b);
}

namespace detail {
inline bool pattern_vars_distinct(const PureTermPtr& p0, std::set<std::string>& seen) {
  const PureTerm* p = strip(p0.get());
  switch (p->kind) {
    case PureTerm::Kind::Var:
      return seen.insert(p->var).second;
    case PureTerm::Kind::InjL:
    case PureTerm::Kind::InjR:
    case PureTerm::Kind::Succ:
      return pattern_vars_distinct(p->child, seen);
    case PureTerm::Kind::Pair:
      return pattern_vars_distinct(p->left, seen) && pattern_vars_distinct(p->right, seen);
    default:
      return true;
  }
}

inline bool match_basis_rec(const PureTermPtr& pat0, const PureTermPtr& sub0, Valuation& out) {
  const PureTerm* pat = strip(pat0.get());
  const PureTerm* sub = strip(sub0.get());
  switch (pat->kind) {
    case PureTerm::Kind::Var:
      out.emplace(pat->var, strip(sub0));
      return true;
    case PureTerm::Kind::Star:
      return sub->kind == PureTerm::Kind::Star;
    case PureTerm::Kind::Zero:
      return sub->kind == PureTerm::Kind::Zero;
    case PureTerm::Kind::InjL:
      return sub->kind == PureTerm::Kind::InjL && match_basis_rec(pat->child, sub->child, out);
    case PureTerm::Kind::InjR:
      return sub->kind == PureTerm::Kind::InjR && match_basis_rec(pat->child, sub->child, out);
    case PureTerm::Kind::Succ:
      return sub->kind == PureTerm::Kind::Succ && match_basis_rec(pat->child, sub->child, out);
    case PureTerm::Kind::Pair:
      return sub->kind == PureTerm::Kind::Pair && match_basis_rec(pat->left, sub->left, out) &&
             match_basis_rec(pat->right, sub->right, out);
    default:
      return false;
  }
}
}  // namespace detail

// Matches a closed basis value against a pattern; returns the smallest
// valuation sigma with sigma(pattern) = subject, absent when no match.
// The disjoint-support side condition of the pair rule holds automatically
// because pattern variables are required pairwise distinct.
inline std::optional<Valuation> match_basis(const PureTermPtr& pattern, const PureTermPtr& subject) {
  if (!is_basis_value(pattern))
    throw Error(ErrorCode::MalformedInput, "match pattern is not a basis value");
  if (!is_basis_value(subject) || !is_closed(subject))
    throw Error(ErrorCode::MalformedInput, "match subject is not a closed basis value");
  std::set<std::string> seen;
  if (!detail::pattern_vars_distinct(pattern, seen))
    throw Error(ErrorCode::MalformedPattern, "pattern binds a variable more than once");
  Valuation v;
  if (!detail::match_basis_rec(pattern, subject, v)) return std::nullopt;
  return v;
}

// Homomorphic substitution; every free variable of t must be in sigma's
// support.
inline PureTermPtr substitute(const Valuation& sigma, const PureTermPtr& t0) {
  const PureTerm* t = t0.get();
  switch (t->kind) {
    case PureTerm::Kind::Star:
    case PureTerm::Kind::Zero:
      return t0;
    case PureTerm::Kind::Var: {
      auto it = sigma.find(t->var);
      if (it == sigma.end())
        throw Error(ErrorCode::UnboundVariable, "variable '" + t->var + "' not in valuation", t->span);
      return it->second;
    }
    case PureTerm::Kind::InjL:
      return mk_injl(substitute(sigma, t->child), t->span);
    case PureTerm::Kind::InjR:
      return mk_injr(substitute(sigma, t->child), t->span);
    case PureTerm::Kind::Succ:
      return mk_succ(substitute(sigma, t->child), t->span);
    case PureTerm::Kind::Pair:
      return mk_pair(substitute(sigma, t->left), substitute(sigma, t->right), t->span);
    case PureTerm::Kind::Apply:
      return mk_apply(t->unitary, substitute(sigma, t->child), t->span);
    case PureTerm::Kind::LinComb: {
      std::vector<LinEntry> es;
      es.reserve(t->entries.size());
      for (auto& e : t->entries) es.push_back({e.coef, substitute(sigma, e.term)});
      return mk_lincomb(std::move(es), t->span);
    }
    case PureTerm::Kind::Ascribe:
      return mk_ascribe(substitute(sigma, t->child), t->ascribed, t->span);
  }
  throw InternalError("substitute: unreachable");
}

}  // namespace qcl
