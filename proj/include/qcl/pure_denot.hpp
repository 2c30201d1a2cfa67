#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcl/matrix.hpp"
#include "qcl/pure_check.hpp"
#include "qcl/pure_eval.hpp"

namespace qcl {

// Finite stand-in for the infinite-dimensional qnat space.
struct TruncationConfig {
  std::size_t qnat_dim = 16;
  std::size_t dim_cap = 4096;
  bool strict = false;  // escalate truncation warnings to errors
};

// Dimension of the interpreting space. Basis enumeration: direct sums
// concatenate left-then-right, tensors are row-major with the left index
// major, qnat is |0> .. |D-1>.
inline std::size_t interp_type(const PureTypePtr& q, const TruncationConfig& cfg) {
  std::size_t d = 0;
  switch (q->kind) {
    case PureType::Kind::Unit: d = 1; break;
    case PureType::Kind::QNat: d = cfg.qnat_dim; break;
    case PureType::Kind::Sum: d = interp_type(q->left, cfg) + interp_type(q->right, cfg); break;
    case PureType::Kind::Tensor: d = interp_type(q->left, cfg) * interp_type(q->right, cfg); break;
  }
  if (d == 0 || d > cfg.dim_cap)
    throw Error(ErrorCode::DimensionCap, "type " + print_type(q) + " needs dimension " +
                                             std::to_string(d) + " (cap " +
                                             std::to_string(cfg.dim_cap) + ")");
  return d;
}

// The closed basis value sitting at index i of the canonical enumeration.
inline PureTermPtr basis_value_at(std::size_t i, const PureTypePtr& q, const TruncationConfig& cfg) {
  switch (q->kind) {
    case PureType::Kind::Unit:
      return mk_star();
    case PureType::Kind::QNat:
      return mk_nat(i);
    case PureType::Kind::Sum: {
      std::size_t dl = interp_type(q->left, cfg);
      if (i < dl) return mk_injl(basis_value_at(i, q->left, cfg));
      return mk_injr(basis_value_at(i - dl, q->right, cfg));
    }
    case PureType::Kind::Tensor: {
      std::size_t dr = interp_type(q->right, cfg);
      return mk_pair(basis_value_at(i / dr, q->left, cfg), basis_value_at(i % dr, q->right, cfg));
    }
  }
  throw InternalError("basis_value_at: unreachable");
}

// Index of a closed basis value; truncation overflow if a numeral exceeds
// the qnat dimension.
inline std::size_t basis_index(const PureTermPtr& b0, const PureTypePtr& q, const TruncationConfig& cfg) {
  const PureTerm* b = strip(b0.get());
  switch (q->kind) {
    case PureType::Kind::Unit:
      if (b->kind != PureTerm::Kind::Star) break;
      return 0;
    case PureType::Kind::QNat: {
      std::size_t n = 0;
      while (b->kind == PureTerm::Kind::Succ) {
        ++n;
        b = strip(b->child.get());
      }
      if (b->kind != PureTerm::Kind::Zero) break;
      if (n >= cfg.qnat_dim)
        throw Error(ErrorCode::TruncationOverflow,
                    "numeral " + std::to_string(n) + " exceeds the qnat truncation " +
                        std::to_string(cfg.qnat_dim));
      return n;
    }
    case PureType::Kind::Sum: {
      if (b->kind == PureTerm::Kind::InjL) return basis_index(b->child, q->left, cfg);
      if (b->kind == PureTerm::Kind::InjR)
        return interp_type(q->left, cfg) + basis_index(b->child, q->right, cfg);
      break;
    }
    case PureType::Kind::Tensor: {
      if (b->kind != PureTerm::Kind::Pair) break;
      return basis_index(b->left, q->left, cfg) * interp_type(q->right, cfg) +
             basis_index(b->right, q->right, cfg);
    }
  }
  throw Error(ErrorCode::MalformedInput,
              "term " + print_term(b0) + " is not a basis value of type " + print_type(q));
}

namespace detail {

// Permutation matrix reordering tensor factors: output factor j is input
// factor perm[j]; dims are the input factor dimensions.
inline ComplexMatrix factor_permutation(const std::vector<std::size_t>& dims,
                                        const std::vector<std::size_t>& perm) {
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  std::vector<std::size_t> out_dims(perm.size());
  for (std::size_t j = 0; j < perm.size(); ++j) out_dims[j] = dims[perm[j]];
  ComplexMatrix p(total, total);
  std::vector<std::size_t> digits(dims.size());
  for (std::size_t in = 0; in < total; ++in) {
    std::size_t rest = in;
    for (std::size_t k = dims.size(); k-- > 0;) {
      digits[k] = rest % dims[k];
      rest /= dims[k];
    }
    std::size_t out = 0;
    for (std::size_t j = 0; j < perm.size(); ++j) out = out * out_dims[j] + digits[perm[j]];
    p(out, in) = Scalar(1);
  }
  return p;
}

struct InterpEnv {
  const std::map<const PureTerm*, PureTypePtr>* term_types;
  const std::map<const UnitaryExpr*, UnitaryType>* unitary_types;
  const TruncationConfig* cfg;
};

ComplexMatrix interp_unitary_inner(const InterpEnv& env, const UnitaryExprPtr& u);

// Ordered context of an open term; context order is the tensor order.
using VarRow = std::vector<std::pair<std::string, PureTypePtr>>;

inline ComplexMatrix interp_term_inner(const InterpEnv& env, const VarRow& ctx, const PureTermPtr& t0) {
  const TruncationConfig& cfg = *env.cfg;
  const PureTermPtr t = strip(t0);
  auto ty_of = [&](const PureTermPtr& x) { return env.term_types->at(x.get()); };
  switch (t->kind) {
    case PureTerm::Kind::Star:
      return ComplexMatrix::identity(1);
    case PureTerm::Kind::Var:
      return ComplexMatrix::identity(interp_type(ctx.at(0).second, cfg));
    case PureTerm::Kind::Zero: {
      ComplexMatrix m(cfg.qnat_dim, 1);
      m(0, 0) = Scalar(1);
      return m;
    }
    case PureTerm::Kind::Succ: {
      ComplexMatrix s(cfg.qnat_dim, cfg.qnat_dim);
      for (std::size_t i = 0; i + 1 < cfg.qnat_dim; ++i) s(i + 1, i) = Scalar(1);
      return s * interp_term_inner(env, ctx, t->child);
    }
    case PureTerm::Kind::InjL:
    case PureTerm::Kind::InjR: {
      auto q = ty_of(t);  // the sum type
      std::size_t dl = interp_type(q->left, cfg), dr = interp_type(q->right, cfg);
      ComplexMatrix inj(dl + dr, t->kind == PureTerm::Kind::InjL ? dl : dr);
      for (std::size_t i = 0; i < inj.cols(); ++i)
        inj(t->kind == PureTerm::Kind::InjL ? i : dl + i, i) = Scalar(1);
      return inj * interp_term_inner(env, ctx, t->child);
    }
    case PureTerm::Kind::Pair: {
      auto fv1 = free_var_set(t->left);
      VarRow c1, c2;
      std::vector<std::size_t> perm1, perm2, dims;
      for (std::size_t k = 0; k < ctx.size(); ++k) {
        dims.push_back(interp_type(ctx[k].second, cfg));
        if (fv1.count(ctx[k].first)) {
          c1.push_back(ctx[k]);
          perm1.push_back(k);
        } else {
          c2.push_back(ctx[k]);
          perm2.push_back(k);
        }
      }
      std::vector<std::size_t> perm = perm1;
      perm.insert(perm.end(), perm2.begin(), perm2.end());
      auto split = factor_permutation(dims, perm);
      auto m1 = interp_term_inner(env, c1, t->left);
      auto m2 = interp_term_inner(env, c2, t->right);
      return m1.kron(m2) * split;
    }
    case PureTerm::Kind::LinComb: {
      ComplexMatrix acc;
      bool first = true;
      for (auto& e : t->entries) {
        auto m = interp_term_inner(env, ctx, e.term) * e.coef;
        acc = first ? m : acc + m;
        first = false;
      }
      return acc;
    }
    case PureTerm::Kind::Apply:
      return interp_unitary_inner(env, t->unitary) * interp_term_inner(env, ctx, t->child);
    case PureTerm::Kind::Ascribe:
      break;  // stripped
  }
  throw InternalError("interp_term_inner: unreachable");
}

inline void pattern_var_row(const std::map<const PureTerm*, PureTypePtr>& types,
                            const PureTermPtr& t0, VarRow& out) {
  const PureTerm* t = strip(t0.get());
  switch (t->kind) {
    case PureTerm::Kind::Var:
      out.push_back({t->var, types.at(t)});
      break;
    case PureTerm::Kind::InjL:
    case PureTerm::Kind::InjR:
    case PureTerm::Kind::Succ:
      pattern_var_row(types, t->child, out);
      break;
    case PureTerm::Kind::Pair:
      pattern_var_row(types, t->left, out);
      pattern_var_row(types, t->right, out);
      break;
    default:
      break;
  }
}

inline ComplexMatrix interp_unitary_inner(const InterpEnv& env, const UnitaryExprPtr& u) {
  switch (u->kind) {
    case UnitaryExpr::Kind::Clauses: {
      ComplexMatrix acc;
      bool first = true;
      for (auto& c : u->clauses) {
        VarRow row;
        pattern_var_row(*env.term_types, c.pattern, row);
        auto pat = interp_term_inner(env, row, c.pattern);
        auto body = interp_term_inner(env, row, c.body);
        auto m = body * pat.dagger();
        acc = first ? m : acc + m;
        first = false;
      }
      return acc;
    }
    case UnitaryExpr::Kind::Tensor:
      return interp_unitary_inner(env, u->left).kron(interp_unitary_inner(env, u->right));
    case UnitaryExpr::Kind::DirectSum:
      return interp_unitary_inner(env, u->left).direct_sum(interp_unitary_inner(env, u->right));
    case UnitaryExpr::Kind::Compose:
      return interp_unitary_inner(env, u->left) * interp_unitary_inner(env, u->right);
    case UnitaryExpr::Kind::Adjoint:
      return interp_unitary_inner(env, u->child).dagger();
    case UnitaryExpr::Kind::Ctrl: {
      auto m = interp_unitary_inner(env, u->child);
      return ComplexMatrix::identity(m.rows()).direct_sum(m);
    }
  }
  throw InternalError("interp_unitary_inner: unreachable");
}

inline bool mentions_qnat(const PureTypePtr& q) {
  switch (q->kind) {
    case PureType::Kind::QNat: return true;
    case PureType::Kind::Unit: return false;
    default: return mentions_qnat(q->left) || mentions_qnat(q->right);
  }
}

}  // namespace detail

// Interpretation of a term judgement: a dim[Q] x dim[Gamma] matrix (a column
// state vector when the context is empty). Isometric unless truncation got in
// the way, which is reported as an overflow.
inline ComplexMatrix interp_term(const PureContext& ctx, const PureTermPtr& t,
                                 const TruncationConfig& cfg = {}) {
  auto typing = typecheck_term_full(ctx, t);
  detail::InterpEnv env{&typing.term_types, &typing.unitary_types, &cfg};
  detail::VarRow row(ctx.vars.begin(), ctx.vars.end());
  auto m = detail::interp_term_inner(env, row, t);
  if (!m.is_isometry(10 * tolerance())) {
    bool qn = detail::mentions_qnat(typing.type);
    for (auto& [node, q] : typing.term_types) qn = qn || detail::mentions_qnat(q);
    if (qn)
      throw Error(ErrorCode::TruncationOverflow,
                  "term leaves the truncated qnat space; raise --trunc", t->span);
    throw InternalError("well-formed term interpreted as a non-isometry");
  }
  return m;
}

// Interpretation of a unitary expression. At a finite qnat truncation a
// well-formed unitary may fail to be unitary on the whole space; that is
// reported through `warnings` (or an error in strict mode).
inline ComplexMatrix interp_unitary(const UnitaryExprPtr& u, const TruncationConfig& cfg = {},
                                    std::vector<std::string>* warnings = nullptr,
                                    const std::optional<UnitaryType>& expected = std::nullopt) {
  auto typing = typecheck_unitary_full(u, expected);
  detail::InterpEnv env{&typing.term_types, &typing.unitary_types, &cfg};
  auto m = detail::interp_unitary_inner(env, u);
  if (!m.is_unitary(10 * tolerance())) {
    bool qn = false;
    for (auto& [node, q] : typing.term_types) qn = qn || detail::mentions_qnat(q);
    if (!qn) throw InternalError("well-formed unitary interpreted as a non-unitary matrix");
    std::string w = "unitary is only an isometry on a subspace at qnat truncation " +
                    std::to_string(cfg.qnat_dim);
    if (cfg.strict) throw Error(ErrorCode::TruncationBoundary, w, u->span);
    if (warnings) warnings->push_back(w);
  }
  return m;
}

// State vector of a normal value in the canonical basis.
inline ComplexMatrix value_vector(const NormalValue& v, const PureTypePtr& q,
                                  const TruncationConfig& cfg = {}) {
  ComplexMatrix col(interp_type(q, cfg), 1);
  for (auto& e : v.entries) col(basis_index(e.term, q, cfg), 0) += e.coef;
  return col;
}

// ---------------------------------------------------------------------------
// Canonical symmetric monoidal isomorphisms as single-clause abstractions.
// ---------------------------------------------------------------------------

// General form: the pattern mirrors `source`; its k-th flattened factor is
// bound to a variable when leaf_to_output[k] >= 0 (giving its slot among the
// target's flattened factors) and must be a unit eliminated by the clause
// otherwise. The body mirrors `target`.
inline UnitaryExprPtr synth_linking_unitary(const PureTypePtr& source,
                                            const std::vector<int>& leaf_to_output,
                                            const PureTypePtr& target) {
  auto src_leaves = flatten_tensor(source);
  auto tgt_leaves = flatten_tensor(target);
  if (src_leaves.size() != leaf_to_output.size())
    throw Error(ErrorCode::MalformedInput, "leaf assignment does not cover the source factors");
  // a fully eliminated source maps onto the unit target through a star body
  bool any_assigned = false;
  for (int s : leaf_to_output) any_assigned = any_assigned || s >= 0;
  if (!any_assigned) {
    if (target->kind != PureType::Kind::Unit)
      throw Error(ErrorCode::MalformedInput, "empty grouping needs a unit target");
    std::function<PureTermPtr(const PureTypePtr&)> stars = [&](const PureTypePtr& q) -> PureTermPtr {
      if (q->kind == PureType::Kind::Tensor) return mk_pair(stars(q->left), stars(q->right));
      if (q->kind != PureType::Kind::Unit)
        throw Error(ErrorCode::MalformedInput, "only unit factors can be eliminated");
      return mk_star();
    };
    return mk_clauses({Clause{stars(source), mk_star()}});
  }
  std::vector<std::string> slot_var(tgt_leaves.size());
  for (std::size_t k = 0; k < src_leaves.size(); ++k) {
    int slot = leaf_to_output[k];
    if (slot < 0) {
      if (src_leaves[k]->kind != PureType::Kind::Unit)
        throw Error(ErrorCode::MalformedInput, "only unit factors can be eliminated");
      continue;
    }
    if (static_cast<std::size_t>(slot) >= tgt_leaves.size() || !slot_var[slot].empty())
      throw Error(ErrorCode::MalformedInput, "leaf assignment is not a bijection");
    if (!type_equal(src_leaves[k], tgt_leaves[slot]))
      throw Error(ErrorCode::MalformedInput, "permuted factor types disagree");
    slot_var[slot] = "v" + std::to_string(k);
  }
  for (auto& v : slot_var)
    if (v.empty()) throw Error(ErrorCode::MalformedInput, "target factor left unassigned");

  // pattern variables carry their factor type so the clause never needs an
  // outside annotation
  std::size_t next = 0;
  std::function<PureTermPtr(const PureTypePtr&)> build_pat = [&](const PureTypePtr& q) -> PureTermPtr {
    if (q->kind == PureType::Kind::Tensor) {
      auto l = build_pat(q->left);
      auto r = build_pat(q->right);
      return mk_pair(l, r);
    }
    std::size_t k = next++;
    if (leaf_to_output[k] < 0) return mk_star();
    return mk_ascribe(mk_var("v" + std::to_string(k)), q);
  };
  auto pattern = build_pat(source);

  std::size_t slot = 0;
  std::function<PureTermPtr(const PureTypePtr&)> build_body = [&](const PureTypePtr& q) -> PureTermPtr {
    if (q->kind == PureType::Kind::Tensor) {
      auto l = build_body(q->left);
      auto r = build_body(q->right);
      return mk_pair(l, r);
    }
    return mk_var(slot_var[slot++]);
  };
  auto body = build_body(target);
  return mk_clauses({Clause{pattern, body}});
}

// Spec-shaped convenience: blocks, an output order over them (entries may be
// dropped only for unit blocks), and an optional target bracketing (left fold
// of the permuted blocks by default).
inline UnitaryExprPtr synth_monoidal_unitary(const std::vector<PureTypePtr>& from,
                                             const std::vector<std::size_t>& perm,
                                             PureTypePtr regroup = nullptr) {
  if (from.empty()) {
    auto star = mk_star();
    return mk_clauses({Clause{star, star}});
  }
  PureTypePtr source = from[0];
  for (std::size_t i = 1; i < from.size(); ++i) source = ty_tensor(source, from[i]);
  if (!regroup) {
    if (perm.empty()) throw Error(ErrorCode::MalformedInput, "cannot regroup an empty selection");
    regroup = from[perm[0]];
    for (std::size_t i = 1; i < perm.size(); ++i) regroup = ty_tensor(regroup, from[perm[i]]);
  }
  // map the flattened source leaves of each block to target slots
  std::vector<std::size_t> block_leaf_start(from.size() + 1, 0);
  std::vector<int> leaf_to_output;
  for (std::size_t b = 0; b < from.size(); ++b) {
    auto leaves = flatten_tensor(from[b]);
    block_leaf_start[b + 1] = block_leaf_start[b] + leaves.size();
    for (std::size_t k = 0; k < leaves.size(); ++k) leaf_to_output.push_back(-1);
  }
  std::size_t slot = 0;
  for (auto b : perm) {
    std::size_t n = block_leaf_start[b + 1] - block_leaf_start[b];
    for (std::size_t k = 0; k < n; ++k) leaf_to_output[block_leaf_start[b] + k] = static_cast<int>(slot++);
  }
  return synth_linking_unitary(source, leaf_to_output, regroup);
}

}  // namespace qcl
