#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcl/main_ast.hpp"
#include "qcl/pure_check.hpp"

namespace qcl {

// Classical image of a pure type: the result type of measurement.
inline MainTypePtr ov_type(const PureTypePtr& q) {
  switch (q->kind) {
    case PureType::Kind::Unit: return mty_unit();
    case PureType::Kind::QNat: return mty_nat();
    case PureType::Kind::Sum: return mty_sum(ov_type(q->left), ov_type(q->right));
    case PureType::Kind::Tensor: return mty_tensor(ov_type(q->left), ov_type(q->right));
  }
  throw InternalError("ov_type: unreachable");
}

// Classical value of a closed basis value: the measurement outcome.
inline MainTermPtr ov_basis(const PureTermPtr& b0) {
  const PureTerm* b = strip(b0.get());
  switch (b->kind) {
    case PureTerm::Kind::Star: return mm_star();
    case PureTerm::Kind::Zero: return mm_zero();
    case PureTerm::Kind::InjL: return mm_inl(ov_basis(b->child));
    case PureTerm::Kind::InjR: return mm_inr(ov_basis(b->child));
    case PureTerm::Kind::Succ: return mm_succ(ov_basis(b->child));
    case PureTerm::Kind::Pair: return mm_pair(ov_basis(b->left), ov_basis(b->right));
    default:
      throw Error(ErrorCode::MalformedInput,
                  "translation applies to closed basis values, got " + print_term(b0), b->span);
  }
}

// Ordered typing context; the B-typed part is strictly linear, !-typed
// variables duplicate freely.
struct MainContext {
  std::vector<std::pair<std::string, MainTypePtr>> vars;
};

struct MainTyping {
  MainTypePtr type;
  std::map<const MainTerm*, MainTypePtr> main_types;
  std::map<const PureTerm*, PureTypePtr> pure_types;
  std::map<const UnitaryExpr*, UnitaryType> unitary_types;
};

namespace detail {

struct MUType;
using MUTypePtr = std::shared_ptr<MUType>;
struct MUType {
  enum class Kind { Unit, Sum, Tensor, Bang, Lolli, Nat, BOp, Hole };
  Kind kind;
  MUTypePtr left, right;  // Sum/Tensor/Lolli; Bang uses left
  UTypePtr pure;          // BOp
  int hole = -1;
};

// usage: binding id -> occurrence count
using Usage = std::map<int, int>;

inline void usage_add(Usage& into, const Usage& from) {
  for (auto& [k, n] : from) into[k] += n;
}
inline void usage_max(Usage& into, const Usage& from) {
  for (auto& [k, n] : from) into[k] = std::max(into[k], n);
}

class MainInfer {
 public:
  explicit MainInfer(InferState& pure) : pure_(pure) {}

  MUTypePtr hole() {
    auto t = std::make_shared<MUType>();
    t->kind = MUType::Kind::Hole;
    t->hole = next_hole_++;
    return t;
  }
  static MUTypePtr leaf(MUType::Kind k) {
    auto t = std::make_shared<MUType>();
    t->kind = k;
    return t;
  }
  static MUTypePtr node(MUType::Kind k, MUTypePtr l, MUTypePtr r) {
    auto t = std::make_shared<MUType>();
    t->kind = k;
    t->left = std::move(l);
    t->right = std::move(r);
    return t;
  }
  static MUTypePtr bang(MUTypePtr inner) {
    auto t = std::make_shared<MUType>();
    t->kind = MUType::Kind::Bang;
    t->left = std::move(inner);
    return t;
  }
  static MUTypePtr bop(UTypePtr q) {
    auto t = std::make_shared<MUType>();
    t->kind = MUType::Kind::BOp;
    t->pure = std::move(q);
    return t;
  }
  MUTypePtr from(const MainTypePtr& m) {
    switch (m->kind) {
      case MainType::Kind::Unit: return leaf(MUType::Kind::Unit);
      case MainType::Kind::Nat: return leaf(MUType::Kind::Nat);
      case MainType::Kind::Sum: return node(MUType::Kind::Sum, from(m->left), from(m->right));
      case MainType::Kind::Tensor: return node(MUType::Kind::Tensor, from(m->left), from(m->right));
      case MainType::Kind::Lolli: return node(MUType::Kind::Lolli, from(m->left), from(m->right));
      case MainType::Kind::Bang: return bang(from(m->inner));
      case MainType::Kind::BOp: return bop(Unifier::from(m->pure));
    }
    throw InternalError("MainInfer::from: unreachable");
  }

  MUTypePtr find(MUTypePtr t) {
    while (t->kind == MUType::Kind::Hole) {
      auto it = bind_.find(t->hole);
      if (it == bind_.end()) break;
      t = it->second;
    }
    return t;
  }

  bool occurs(int h, MUTypePtr t) {
    t = find(t);
    if (t->kind == MUType::Kind::Hole) return t->hole == h;
    if (t->left && occurs(h, t->left)) return true;
    if (t->right && occurs(h, t->right)) return true;
    return false;
  }

  void unify(MUTypePtr a, MUTypePtr b, const Span& span) {
    a = find(a);
    b = find(b);
    if (a->kind == MUType::Kind::Hole && b->kind == MUType::Kind::Hole && a->hole == b->hole) return;
    if (a->kind == MUType::Kind::Hole) {
      if (occurs(a->hole, b)) throw Error(ErrorCode::TypeMismatch, "cyclic type constraint", span);
      bind_[a->hole] = b;
      return;
    }
    if (b->kind == MUType::Kind::Hole) {
      unify(b, a, span);
      return;
    }
    if (a->kind != b->kind)
      throw Error(ErrorCode::TypeMismatch, "cannot unify " + show(a) + " with " + show(b), span);
    switch (a->kind) {
      case MUType::Kind::Unit:
      case MUType::Kind::Nat:
        return;
      case MUType::Kind::Bang:
        unify(a->left, b->left, span);
        return;
      case MUType::Kind::BOp:
        pure_.uni.unify(a->pure, b->pure, span);
        return;
      default:
        unify(a->left, b->left, span);
        unify(a->right, b->right, span);
        return;
    }
  }

  // directional: an actual !A may be used where A is expected (dereliction
  // folded into use sites)
  void subsume(MUTypePtr actual, MUTypePtr expected, const Span& span) {
    actual = find(actual);
    expected = find(expected);
    while (actual->kind == MUType::Kind::Bang && expected->kind != MUType::Kind::Bang &&
           expected->kind != MUType::Kind::Hole)
      actual = find(actual->left);
    unify(actual, expected, span);
  }

  MainTypePtr resolve(MUTypePtr t) {
    t = find(t);
    switch (t->kind) {
      case MUType::Kind::Unit: return mty_unit();
      case MUType::Kind::Nat: return mty_nat();
      case MUType::Kind::Hole: return nullptr;
      case MUType::Kind::Bang: {
        auto i = resolve(t->left);
        return i ? mty_bang(i) : nullptr;
      }
      case MUType::Kind::BOp: {
        auto q = pure_.uni.resolve(t->pure);
        return q ? mty_bop(q) : nullptr;
      }
      case MUType::Kind::Sum:
      case MUType::Kind::Tensor:
      case MUType::Kind::Lolli: {
        auto l = resolve(t->left), r = resolve(t->right);
        if (!l || !r) return nullptr;
        if (t->kind == MUType::Kind::Sum) return mty_sum(l, r);
        if (t->kind == MUType::Kind::Tensor) return mty_tensor(l, r);
        return mty_lolli(l, r);
      }
    }
    return nullptr;
  }

  std::string show(MUTypePtr t) {
    t = find(t);
    switch (t->kind) {
      case MUType::Kind::Unit: return "I";
      case MUType::Kind::Nat: return "Nat";
      case MUType::Kind::Hole: return "?" + std::to_string(t->hole);
      case MUType::Kind::Bang: return "!" + show(t->left);
      case MUType::Kind::BOp: return "B(" + pure_.uni.show(t->pure) + ")";
      case MUType::Kind::Sum: return "(" + show(t->left) + " + " + show(t->right) + ")";
      case MUType::Kind::Tensor: return "(" + show(t->left) + " (x) " + show(t->right) + ")";
      case MUType::Kind::Lolli: return "(" + show(t->left) + " -o " + show(t->right) + ")";
    }
    return "?";
  }

  InferState& pure() { return pure_; }

 private:
  InferState& pure_;
  int next_hole_ = 0;
  std::map<int, MUTypePtr> bind_;
};

struct Binding {
  std::string name;
  MUTypePtr type;
  Span span;
};

struct MainCheckState {
  InferState pure_state;
  MainInfer uni{pure_state};
  std::vector<Binding> bindings;
  std::map<const MainTerm*, MUTypePtr> node_types;

  // scope: name -> binding id
  std::map<std::string, int> scope;

  struct LiftSite {
    Usage usage;
    Span span;
  };
  std::vector<LiftSite> lift_sites;

  struct BranchPair {
    Usage left, right;
    Span span;
  };
  std::vector<BranchPair> branch_pairs;

  struct OvConstraint {
    UTypePtr q;
    MUTypePtr result;
    Span span;
  };
  std::vector<OvConstraint> ov_constraints;

  int bind(const std::string& name, MUTypePtr ty, Span span) {
    bindings.push_back({name, std::move(ty), span});
    return static_cast<int>(bindings.size()) - 1;
  }
};

// exactly-once for the binder unless its type resolves to !-; checked after
// resolution via these records
struct BinderRecord {
  int id;
  int count;
  Span span;
};

struct InferCtx {
  MainCheckState* st;
  std::vector<BinderRecord>* recs;
};

inline MUTypePtr infer(InferCtx& cx, const MainTermPtr& m0, Usage& usage);

inline MUTypePtr infer_bound(InferCtx& cx, const std::string& name, MUTypePtr ty,
                             const MainTermPtr& body, Usage& usage) {
  auto& st = *cx.st;
  int id = st.bind(name, ty, body->span);
  auto prev = st.scope.find(name);
  int old = prev == st.scope.end() ? -1 : prev->second;
  st.scope[name] = id;
  Usage inner;
  auto t = infer(cx, body, inner);
  if (old < 0)
    st.scope.erase(name);
  else
    st.scope[name] = old;
  cx.recs->push_back({id, inner.count(id) ? inner[id] : 0, body->span});
  inner.erase(id);
  usage_add(usage, inner);
  return t;
}

inline MUTypePtr infer(InferCtx& cx, const MainTermPtr& m0, Usage& usage) {
  auto& st = *cx.st;
  auto& uni = st.uni;
  const MainTerm* m = m0.get();
  MUTypePtr ty;
  switch (m->kind) {
    case MainTerm::Kind::Star:
      ty = MainInfer::leaf(MUType::Kind::Unit);
      break;
    case MainTerm::Kind::Var: {
      auto it = st.scope.find(m->var);
      if (it == st.scope.end())
        throw Error(ErrorCode::UnboundVariable, "unbound variable '" + m->var + "'", m->span);
      usage[it->second] += 1;
      ty = st.bindings[it->second].type;
      break;
    }
    case MainTerm::Kind::InL: {
      auto a = infer(cx, m->a, usage);
      ty = MainInfer::node(MUType::Kind::Sum, a, uni.hole());
      break;
    }
    case MainTerm::Kind::InR: {
      auto a = infer(cx, m->a, usage);
      ty = MainInfer::node(MUType::Kind::Sum, uni.hole(), a);
      break;
    }
    case MainTerm::Kind::Case: {
      auto hA = uni.hole(), hB = uni.hole();
      auto ts = infer(cx, m->a, usage);
      uni.subsume(ts, MainInfer::node(MUType::Kind::Sum, hA, hB), m->span);
      Usage ul, ur;
      MUTypePtr tl, tr;
      if (m->lvar) {
        tl = infer_bound(cx, *m->lvar, hA, m->b, ul);
      } else {
        uni.unify(hA, MainInfer::leaf(MUType::Kind::Unit), m->span);
        tl = infer(cx, m->b, ul);
      }
      if (m->rvar) {
        tr = infer_bound(cx, *m->rvar, hB, m->c, ur);
      } else {
        uni.unify(hB, MainInfer::leaf(MUType::Kind::Unit), m->span);
        tr = infer(cx, m->c, ur);
      }
      uni.unify(tl, tr, m->span);
      st.branch_pairs.push_back({ul, ur, m->span});
      Usage merged = ul;
      usage_max(merged, ur);
      usage_add(usage, merged);
      ty = tl;
      break;
    }
    case MainTerm::Kind::Pair: {
      auto a = infer(cx, m->a, usage);
      auto b = infer(cx, m->b, usage);
      ty = MainInfer::node(MUType::Kind::Tensor, a, b);
      break;
    }
    case MainTerm::Kind::LetPair: {
      auto h1 = uni.hole(), h2 = uni.hole();
      auto tr = infer(cx, m->a, usage);
      uni.subsume(tr, MainInfer::node(MUType::Kind::Tensor, h1, h2), m->span);
      // bind both pattern variables around the body
      auto& stx = *cx.st;
      int id1 = stx.bind(m->var, h1, m->span);
      int id2 = stx.bind(m->var2, h2, m->span);
      if (m->var == m->var2)
        throw Error(ErrorCode::DuplicateName, "pair pattern repeats '" + m->var + "'", m->span);
      auto p1 = stx.scope.count(m->var) ? std::optional<int>(stx.scope[m->var]) : std::nullopt;
      auto p2 = stx.scope.count(m->var2) ? std::optional<int>(stx.scope[m->var2]) : std::nullopt;
      stx.scope[m->var] = id1;
      stx.scope[m->var2] = id2;
      Usage inner;
      ty = infer(cx, m->b, inner);
      if (p1) stx.scope[m->var] = *p1; else stx.scope.erase(m->var);
      if (p2) stx.scope[m->var2] = *p2; else stx.scope.erase(m->var2);
      cx.recs->push_back({id1, inner.count(id1) ? inner[id1] : 0, m->span});
      cx.recs->push_back({id2, inner.count(id2) ? inner[id2] : 0, m->span});
      inner.erase(id1);
      inner.erase(id2);
      usage_add(usage, inner);
      break;
    }
    case MainTerm::Kind::Lift: {
      Usage inner;
      auto a = infer(cx, m->a, inner);
      st.lift_sites.push_back({inner, m->span});
      usage_add(usage, inner);
      ty = MainInfer::bang(a);
      break;
    }
    case MainTerm::Kind::Force: {
      auto a = infer(cx, m->a, usage);
      auto h = uni.hole();
      uni.unify(a, MainInfer::bang(h), m->span);
      ty = h;
      break;
    }
    case MainTerm::Kind::Lam: {
      auto h = uni.hole();
      auto body_ty = infer_bound(cx, m->var, h, m->a, usage);
      ty = MainInfer::node(MUType::Kind::Lolli, h, body_ty);
      break;
    }
    case MainTerm::Kind::App: {
      auto f = infer(cx, m->a, usage);
      auto arg = infer(cx, m->b, usage);
      auto hA = uni.hole(), hB = uni.hole();
      uni.subsume(f, MainInfer::node(MUType::Kind::Lolli, hA, hB), m->span);
      uni.subsume(arg, hA, m->span);
      ty = hB;
      break;
    }
    case MainTerm::Kind::Zero:
      ty = MainInfer::leaf(MUType::Kind::Nat);
      break;
    case MainTerm::Kind::Succ: {
      auto a = infer(cx, m->a, usage);
      uni.subsume(a, MainInfer::leaf(MUType::Kind::Nat), m->span);
      ty = MainInfer::leaf(MUType::Kind::Nat);
      break;
    }
    case MainTerm::Kind::Match: {
      auto ts = infer(cx, m->a, usage);
      uni.subsume(ts, MainInfer::leaf(MUType::Kind::Nat), m->span);
      Usage uz, us;
      auto tz = infer(cx, m->b, uz);
      auto tnat = MainInfer::leaf(MUType::Kind::Nat);
      auto tsucc = infer_bound(cx, m->var, tnat, m->c, us);
      uni.unify(tz, tsucc, m->span);
      st.branch_pairs.push_back({uz, us, m->span});
      Usage merged = uz;
      usage_max(merged, us);
      usage_add(usage, merged);
      ty = tz;
      break;
    }
    case MainTerm::Kind::Pure: {
      std::vector<std::string> pure_used;
      auto q = infer_term(st.pure_state, {}, m->pure, pure_used);
      ty = MainInfer::bop(q);
      break;
    }
    case MainTerm::Kind::Meas: {
      auto a = infer(cx, m->a, usage);
      auto hq = st.pure_state.uni.hole();
      try {
        uni.subsume(a, MainInfer::bop(hq), m->span);
      } catch (const Error&) {
        throw Error(ErrorCode::ModalityMismatch,
                    "meas expects a B(-) argument, got " + uni.show(a), m->span);
      }
      ty = uni.hole();
      st.ov_constraints.push_back({hq, ty, m->span});
      break;
    }
    case MainTerm::Kind::UnApply: {
      auto [dom, cod] = infer_unitary(st.pure_state, m->unitary);
      auto a = infer(cx, m->a, usage);
      auto ra = uni.find(a);
      if (ra->kind != MUType::Kind::BOp && ra->kind != MUType::Kind::Hole &&
          ra->kind != MUType::Kind::Bang)
        throw Error(ErrorCode::ModalityMismatch,
                    "unitary application expects a B(-) argument, got " + uni.show(a), m->span);
      uni.subsume(a, MainInfer::bop(dom), m->span);
      ty = MainInfer::bop(cod);
      break;
    }
    case MainTerm::Kind::LetBang: {
      auto p1 = st.pure_state.uni.hole(), p2 = st.pure_state.uni.hole();
      auto tr = infer(cx, m->a, usage);
      uni.subsume(tr, MainInfer::node(MUType::Kind::Tensor, MainInfer::bop(p1), MainInfer::bop(p2)),
                  m->span);
      auto zt = MainInfer::bop(Unifier::node(UType::Kind::Tensor, p1, p2));
      ty = infer_bound(cx, m->var, zt, m->b, usage);
      break;
    }
    case MainTerm::Kind::LetPairBang: {
      auto p1 = st.pure_state.uni.hole(), p2 = st.pure_state.uni.hole();
      auto tr = infer(cx, m->a, usage);
      uni.subsume(tr, MainInfer::bop(Unifier::node(UType::Kind::Tensor, p1, p2)), m->span);
      if (m->var == m->var2)
        throw Error(ErrorCode::DuplicateName, "pair pattern repeats '" + m->var + "'", m->span);
      auto& stx = *cx.st;
      int id1 = stx.bind(m->var, MainInfer::bop(p1), m->span);
      int id2 = stx.bind(m->var2, MainInfer::bop(p2), m->span);
      auto s1 = stx.scope.count(m->var) ? std::optional<int>(stx.scope[m->var]) : std::nullopt;
      auto s2 = stx.scope.count(m->var2) ? std::optional<int>(stx.scope[m->var2]) : std::nullopt;
      stx.scope[m->var] = id1;
      stx.scope[m->var2] = id2;
      Usage inner;
      ty = infer(cx, m->b, inner);
      if (s1) stx.scope[m->var] = *s1; else stx.scope.erase(m->var);
      if (s2) stx.scope[m->var2] = *s2; else stx.scope.erase(m->var2);
      cx.recs->push_back({id1, inner.count(id1) ? inner[id1] : 0, m->span});
      cx.recs->push_back({id2, inner.count(id2) ? inner[id2] : 0, m->span});
      inner.erase(id1);
      inner.erase(id2);
      usage_add(usage, inner);
      break;
    }
    case MainTerm::Kind::Ascribe: {
      auto a = infer(cx, m->a, usage);
      uni.unify(a, uni.from(m->ascribed), m->span);
      ty = a;
      break;
    }
  }
  st.node_types[m] = ty;
  return ty;
}

}  // namespace detail

inline MainTyping typecheck_main_full(const MainContext& ctx, const MainTermPtr& m,
                                      const MainTypePtr& expected = nullptr) {
  detail::MainCheckState st;
  std::vector<detail::BinderRecord> recs;
  detail::InferCtx cx{&st, &recs};

  std::vector<int> ctx_ids;
  for (auto& [name, ty] : ctx.vars) {
    if (st.scope.count(name))
      throw Error(ErrorCode::DuplicateName, "duplicate context variable '" + name + "'");
    int id = st.bind(name, st.uni.from(ty), Span{});
    st.scope[name] = id;
    ctx_ids.push_back(id);
  }

  detail::Usage usage;
  auto ty = detail::infer(cx, m, usage);
  if (expected) st.uni.unify(ty, st.uni.from(expected), m->span);

  // classical images of measured types, once the pure side is pinned
  for (auto& c : st.ov_constraints) {
    auto q = st.pure_state.uni.resolve(c.q);
    if (!q)
      throw Error(ErrorCode::AmbiguousType, "measured type not determined; add an annotation",
                  c.span);
    st.uni.unify(c.result, st.uni.from(ov_type(q)), c.span);
  }

  // resolve every node type
  MainTyping out;
  for (auto& [node, ut] : st.node_types) {
    auto r = st.uni.resolve(ut);
    if (!r)
      throw Error(ErrorCode::AmbiguousType, "type not fully determined; add an annotation",
                  node->span);
    out.main_types[node] = r;
  }
  for (auto& [node, ut] : st.pure_state.term_types) {
    auto r = st.pure_state.uni.resolve(ut);
    if (!r) throw Error(ErrorCode::AmbiguousType, "pure type not determined", node->span);
    out.pure_types[node] = r;
  }
  for (auto& [node, ut] : st.pure_state.unitary_types) {
    auto d = st.pure_state.uni.resolve(ut.first);
    auto c = st.pure_state.uni.resolve(ut.second);
    if (!d || !c)
      throw Error(ErrorCode::AmbiguousType, "unitary type not determined", node->span);
    out.unitary_types[node] = UnitaryType{d, c};
  }
  detail::validate_clauses(st.pure_state, {});

  auto is_dup = [&](int id) {
    auto r = st.uni.resolve(st.bindings[id].type);
    return r && r->kind == MainType::Kind::Bang;
  };

  // linear binders occur exactly once
  for (auto& rec : recs) {
    if (is_dup(rec.id)) continue;
    if (rec.count != 1)
      throw Error(ErrorCode::LinearityViolation,
                  "variable '" + st.bindings[rec.id].name + "' of linear type used " +
                      std::to_string(rec.count) + " times",
                  rec.span);
  }
  // context variables likewise
  for (int id : ctx_ids) {
    int n = usage.count(id) ? usage.at(id) : 0;
    if (!is_dup(id) && n != 1)
      throw Error(ErrorCode::LinearityViolation,
                  "context variable '" + st.bindings[id].name + "' used " + std::to_string(n) +
                      " times",
                  m->span);
  }
  // lift only closes over duplicable variables
  for (auto& site : st.lift_sites)
    for (auto& [id, n] : site.usage)
      if (n > 0 && !is_dup(id))
        throw Error(ErrorCode::LiftUnderLinearContext,
                    "lift closes over linear variable '" + st.bindings[id].name + "'", site.span);
  // branches must consume the same linear variables
  for (auto& bp : st.branch_pairs) {
    auto linear_of = [&](const detail::Usage& u) {
      std::map<int, int> lin;
      for (auto& [id, n] : u)
        if (n > 0 && !is_dup(id)) lin[id] = n;
      return lin;
    };
    if (linear_of(bp.left) != linear_of(bp.right))
      throw Error(ErrorCode::LinearityViolation,
                  "branches consume different linear variables", bp.span);
  }

  out.type = out.main_types.at(m.get());
  return out;
}

inline MainTypePtr typecheck_main(const MainContext& ctx, const MainTermPtr& m) {
  return typecheck_main_full(ctx, m).type;
}

}  // namespace qcl
