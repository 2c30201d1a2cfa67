#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qcl/config.hpp"
#include "qcl/pure_eval.hpp"

namespace qcl {

struct Distribution {
  std::vector<std::pair<double, Configuration>> branches;
};

namespace detail {

struct MachineState {
  std::size_t fresh = 0;
  std::string next_var() { return "#q" + std::to_string(fresh++); }
};

struct FiredBranch {
  double prob;
  PureTermPtr state;
  BlockLinking linking;
  MainTermPtr term;
};

using Fired = std::vector<FiredBranch>;

// New factor list with `removed` positions replaced (at the first removed
// index) by `inserted`; `remap` sends surviving old positions to new ones and
// `inserted_at` receives the new indices of the inserted run.
inline std::vector<PureTypePtr> splice_factors(const std::vector<PureTypePtr>& factors,
                                               const std::vector<std::size_t>& removed,
                                               const std::vector<PureTypePtr>& inserted,
                                               std::map<std::size_t, std::size_t>& remap,
                                               std::vector<std::size_t>& inserted_at) {
  std::vector<bool> gone(factors.size(), false);
  std::size_t first = factors.size();
  for (auto p : removed) {
    gone[p] = true;
    first = std::min(first, p);
  }
  std::vector<PureTypePtr> out;
  for (std::size_t p = 0; p < factors.size(); ++p) {
    if (p == first)
      for (auto& q : inserted) {
        inserted_at.push_back(out.size());
        out.push_back(q);
      }
    if (gone[p]) continue;
    remap[p] = out.size();
    out.push_back(factors[p]);
  }
  if (first == factors.size() && !inserted.empty())
    for (auto& q : inserted) {
      inserted_at.push_back(out.size());
      out.push_back(q);
    }
  return out;
}

inline BlockLinking remap_blocks(const BlockLinking& l, const std::map<std::size_t, std::size_t>& remap,
                                 const std::vector<PureTypePtr>& new_factors,
                                 const std::string& drop_var) {
  BlockLinking out;
  out.factors = new_factors;
  for (auto& b : l.blocks) {
    if (b.var && *b.var == drop_var) continue;
    Block nb = b;
    for (auto& p : nb.positions) p = remap.at(p);
    out.blocks.push_back(std::move(nb));
  }
  return out;
}

// left fold of a list of types / factor values
inline PureTypePtr fold_types(const std::vector<PureTypePtr>& ts) {
  if (ts.empty()) return ty_unit();
  PureTypePtr t = ts[0];
  for (std::size_t i = 1; i < ts.size(); ++i) t = ty_tensor(t, ts[i]);
  return t;
}
inline PureTermPtr fold_values(const std::vector<PureTermPtr>& vs) {
  if (vs.empty()) return mk_star();
  PureTermPtr t = vs[0];
  for (std::size_t i = 1; i < vs.size(); ++i) t = mk_pair(t, vs[i]);
  return t;
}

// the identity abstraction on a type, with ascribed pattern variables
inline UnitaryExprPtr identity_unitary(const PureTypePtr& q) {
  auto leaves = flatten_tensor(q);
  std::vector<int> map(leaves.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) map[i] = static_cast<int>(i);
  return synth_linking_unitary(q, map, q);
}

// ---------------------------------------------------------------------------
// Rule bodies that touch the state and linking
// ---------------------------------------------------------------------------

// (t, u, pure t') -> (t (x) t', extended linking, x)
inline Fired fire_pure(MachineState& ms, const Configuration& c, const PureTermPtr& t,
                       const MainTypePtr& hint, const Span& span) {
  PureTypePtr q;
  try {
    q = typecheck_term(PureContext{}, t);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::AmbiguousType && hint && hint->kind == MainType::Kind::BOp)
      q = typecheck_term_full(PureContext{}, t, hint->pure).type;
    else
      throw;
  }
  auto new_leaves = flatten_tensor(q);
  BlockLinking l = c.linking;
  Block nb;
  nb.type = q;
  nb.var = ms.next_var();
  for (std::size_t i = 0; i < new_leaves.size(); ++i) {
    nb.positions.push_back(l.factors.size());
    l.factors.push_back(new_leaves[i]);
  }
  l.blocks.insert(l.blocks.begin() + static_cast<long>(l.tracked_count()), nb);
  auto new_type = ty_tensor(config_state_type(c), q);
  auto state = mk_ascribe(mk_pair(c.state, t, span), new_type, span);
  return {{1.0, state, l, mm_var(*nb.var, span)}};
}

// (t, u, U[w](z)) -> ((u'* . (w (x) id) . u) t, updated linking, z')
inline Fired fire_unitary(MachineState& ms, const Configuration& c, const UnitaryExprPtr& w,
                          const std::string& z, const Span& span) {
  const Block* zb = c.linking.find_var(z);
  if (!zb) throw InternalError("unitary application to an untracked variable " + z);
  auto state_type = config_state_type(c);
  auto wty = typecheck_unitary_full(w, std::nullopt, zb->type).type;
  const PureTypePtr q1 = wty.domain, q2 = wty.codomain;

  // source permutation: block factors first, every other covered factor after
  std::vector<int> src_map(c.linking.factors.size(), -1);
  std::vector<std::size_t> rest;
  {
    std::vector<bool> in_block(c.linking.factors.size(), false);
    for (auto p : zb->positions) in_block[p] = true;
    std::vector<bool> covered(c.linking.factors.size(), false);
    for (auto& b : c.linking.blocks)
      for (auto p : b.positions) covered[p] = true;
    int slot = 0;
    for (auto p : zb->positions) src_map[p] = slot++;
    for (std::size_t p = 0; p < c.linking.factors.size(); ++p)
      if (covered[p] && !in_block[p]) {
        src_map[p] = slot++;
        rest.push_back(p);
      }
  }
  std::vector<PureTypePtr> rest_types;
  for (auto p : rest) rest_types.push_back(c.linking.factors[p]);
  auto rest_type = fold_types(rest_types);

  auto front = synth_linking_unitary(
      state_type, src_map, rest.empty() ? q1 : ty_tensor(q1, rest_type));

  // new factor list: the block's run becomes the factors of q2
  auto q2_leaves = flatten_tensor(q2);
  std::map<std::size_t, std::size_t> remap;
  std::vector<std::size_t> new_run;
  auto new_factors = splice_factors(c.linking.factors, zb->positions, q2_leaves, remap, new_run);
  auto new_state_type = fold_types(new_factors);

  std::vector<int> dst_map(new_factors.size(), -1);
  {
    int slot = 0;
    for (auto p : new_run) dst_map[p] = slot++;
    for (auto p : rest) dst_map[remap.at(p)] = slot++;
  }
  auto back = synth_linking_unitary(
      new_state_type, dst_map, rest.empty() ? q2 : ty_tensor(q2, rest_type));

  UnitaryExprPtr mid = rest.empty() ? w : mk_utensor(w, identity_unitary(rest_type));
  auto total = mk_compose(mk_adjoint(back), mk_compose(mid, front), span);
  auto new_state = mk_ascribe(mk_apply(total, c.state, span), new_state_type, span);

  BlockLinking l;
  l.factors = new_factors;
  std::string fresh = ms.next_var();
  for (auto& b : c.linking.blocks) {
    Block nb = b;
    if (b.var && *b.var == z) {
      nb.positions = new_run;
      nb.type = q2;
      nb.var = fresh;
    } else {
      for (auto& p : nb.positions) p = remap.at(p);
    }
    l.blocks.push_back(std::move(nb));
  }
  return {{1.0, new_state, l, mm_var(fresh, span)}};
}

// (t, u, let B(z) = x (x) y in N) -> gather x,y into one block
inline Fired fire_gather(MachineState& ms, const Configuration& c, const std::string& x,
                         const std::string& y, const std::string& z, const MainTermPtr& body,
                         const Span& span) {
  (void)z;
  const Block* bx = c.linking.find_var(x);
  const Block* by = c.linking.find_var(y);
  if (!bx || !by) throw InternalError("gather of untracked variables");
  Block merged;
  merged.positions = bx->positions;
  merged.positions.insert(merged.positions.end(), by->positions.begin(), by->positions.end());
  merged.type = ty_tensor(bx->type, by->type);
  merged.var = ms.next_var();
  BlockLinking l;
  l.factors = c.linking.factors;
  bool placed = false;
  for (auto& b : c.linking.blocks) {
    if (b.var && (*b.var == x || *b.var == y)) {
      if (!placed) {
        l.blocks.push_back(merged);
        placed = true;
      }
      continue;
    }
    l.blocks.push_back(b);
  }
  return {{1.0, c.state, l, main_subst(body, z, mm_var(*merged.var, span))}};
}

// (t, u, let B(x (x) y) = z in N) -> divide z's block in two
inline Fired fire_divide(MachineState& ms, const Configuration& c, const std::string& z,
                         const std::string& x, const std::string& y, const MainTermPtr& body,
                         const Span& span) {
  const Block* zb = c.linking.find_var(z);
  if (!zb) throw InternalError("divide of an untracked variable");
  if (zb->type->kind != PureType::Kind::Tensor)
    throw InternalError("divide of a non-tensor block");
  auto left_leaves = flatten_tensor(zb->type->left);
  Block b1, b2;
  b1.type = zb->type->left;
  b2.type = zb->type->right;
  b1.var = ms.next_var();
  b2.var = ms.next_var();
  b1.positions.assign(zb->positions.begin(), zb->positions.begin() + static_cast<long>(left_leaves.size()));
  b2.positions.assign(zb->positions.begin() + static_cast<long>(left_leaves.size()), zb->positions.end());
  BlockLinking l;
  l.factors = c.linking.factors;
  for (auto& b : c.linking.blocks) {
    if (b.var && *b.var == z) {
      l.blocks.push_back(b1);
      l.blocks.push_back(b2);
    } else {
      l.blocks.push_back(b);
    }
  }
  auto t = main_subst(main_subst(body, x, mm_var(*b1.var, span)), y, mm_var(*b2.var, span));
  return {{1.0, c.state, l, t}};
}

// (t, u_s, meas z): one branch per measured basis value of z's block
inline Fired fire_meas(const Configuration& c, const std::string& z, const Span& span) {
  const Block* zb = c.linking.find_var(z);
  if (!zb) throw InternalError("measurement of an untracked variable");
  auto state_type = config_state_type(c);
  auto v = normalize(c.state);

  struct Group {
    PureTermPtr outcome;                                   // measured basis value
    std::vector<std::pair<Scalar, std::vector<PureTermPtr>>> rest;  // residual factor values
    double prob = 0;
  };
  std::vector<Group> groups;

  std::vector<bool> measured(c.linking.factors.size(), false);
  for (auto p : zb->positions) measured[p] = true;

  for (auto& e : v.entries) {
    std::vector<PureTermPtr> vals;
    split_basis(e.term, state_type, vals);
    std::vector<PureTermPtr> block_vals;
    for (auto p : zb->positions) block_vals.push_back(vals[p]);
    std::size_t next = 0;
    auto outcome = join_basis(zb->type, block_vals, next);
    std::vector<PureTermPtr> rest;
    for (std::size_t p = 0; p < vals.size(); ++p)
      if (!measured[p]) rest.push_back(vals[p]);
    Group* g = nullptr;
    for (auto& grp : groups)
      if (term_equal(grp.outcome, outcome)) {
        g = &grp;
        break;
      }
    if (!g) {
      groups.push_back({outcome, {}, 0});
      g = &groups.back();
    }
    g->rest.push_back({e.coef, std::move(rest)});
    g->prob += std::norm(e.coef);
  }

  // residual linking: surviving blocks keep their order, positions reindexed
  std::map<std::size_t, std::size_t> remap;
  std::vector<std::size_t> unused;
  auto new_factors = splice_factors(c.linking.factors, zb->positions, {}, remap, unused);
  bool empty_state = new_factors.empty();
  if (empty_state) new_factors = {ty_unit()};
  auto l = remap_blocks(c.linking, remap, new_factors, z);

  Fired out;
  double eps = tolerance();
  std::vector<PureTypePtr> rest_factor_types;
  for (std::size_t p = 0; p < c.linking.factors.size(); ++p)
    if (!measured[p]) rest_factor_types.push_back(c.linking.factors[p]);
  auto residual_type = empty_state ? ty_unit() : fold_types(rest_factor_types);
  for (auto& g : groups) {
    if (g.prob <= eps * eps) continue;
    double scale = 1.0 / std::sqrt(g.prob);
    std::vector<LinEntry> entries;
    for (auto& [coef, rest] : g.rest)
      entries.push_back({coef * scale, empty_state ? mk_star() : fold_values(rest)});
    auto state = mk_ascribe(mk_lincomb(canon_entries(std::move(entries)), span), residual_type, span);
    auto outcome = mm_ascribe(ov_basis(g.outcome), ov_type(zb->type), span);
    out.push_back({g.prob, state, l, outcome});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Redex search along the evaluation-context grammar
// ---------------------------------------------------------------------------

inline std::optional<Fired> find_redex(MachineState& ms, const Configuration& c,
                                       const MainTermPtr& m0, const MainTypePtr& hint);

inline std::optional<Fired> recurse_into(MachineState& ms, const Configuration& c,
                                         const MainTermPtr& sub,
                                         const std::function<MainTermPtr(MainTermPtr)>& rebuild) {
  auto fired = find_redex(ms, c, sub, nullptr);
  if (!fired) return std::nullopt;
  for (auto& br : *fired) br.term = rebuild(br.term);
  return fired;
}

inline std::optional<Fired> find_redex(MachineState& ms, const Configuration& c,
                                       const MainTermPtr& m0, const MainTypePtr& hint) {
  const MainTerm* m = m0.get();
  switch (m->kind) {
    case MainTerm::Kind::Ascribe:
      return find_redex(ms, c, m->a, m->ascribed);
    case MainTerm::Kind::Star:
    case MainTerm::Kind::Var:
    case MainTerm::Kind::Zero:
    case MainTerm::Kind::Lam:
    case MainTerm::Kind::Lift:
      return std::nullopt;
    case MainTerm::Kind::InL:
    case MainTerm::Kind::InR:
    case MainTerm::Kind::Succ: {
      if (is_value(m->a)) return std::nullopt;
      auto kind = m->kind;
      auto span = m->span;
      return recurse_into(ms, c, m->a, [kind, span](MainTermPtr t) {
        auto n = detail::mnode(kind, span);
        n->a = std::move(t);
        return MainTermPtr(n);
      });
    }
    case MainTerm::Kind::Pair: {
      if (!is_value(m->a)) {
        auto rhs = m->b;
        auto span = m->span;
        return recurse_into(ms, c, m->a,
                            [rhs, span](MainTermPtr t) { return mm_pair(std::move(t), rhs, span); });
      }
      if (!is_value(m->b)) {
        auto lhs = m->a;
        auto span = m->span;
        return recurse_into(ms, c, m->b,
                            [lhs, span](MainTermPtr t) { return mm_pair(lhs, std::move(t), span); });
      }
      return std::nullopt;
    }
    case MainTerm::Kind::Case: {
      if (!is_value(m->a)) {
        auto keep = m0;
        return recurse_into(ms, c, m->a, [keep](MainTermPtr t) {
          auto n = std::make_shared<MainTerm>(*keep);
          n->a = std::move(t);
          return MainTermPtr(n);
        });
      }
      auto scrut = mstrip(m->a);
      if (scrut->kind == MainTerm::Kind::InL) {
        auto body = m->lvar ? main_subst(m->b, *m->lvar, scrut->a) : m->b;
        return Fired{{1.0, c.state, c.linking, body}};
      }
      if (scrut->kind == MainTerm::Kind::InR) {
        auto body = m->rvar ? main_subst(m->c, *m->rvar, scrut->a) : m->c;
        return Fired{{1.0, c.state, c.linking, body}};
      }
      throw InternalError("case on a non-injection value");
    }
    case MainTerm::Kind::LetPair: {
      if (!is_value(m->a)) {
        auto keep = m0;
        return recurse_into(ms, c, m->a, [keep](MainTermPtr t) {
          auto n = std::make_shared<MainTerm>(*keep);
          n->a = std::move(t);
          return MainTermPtr(n);
        });
      }
      auto rhs = mstrip(m->a);
      if (rhs->kind != MainTerm::Kind::Pair) throw InternalError("let-pair on a non-pair value");
      auto body = main_subst(main_subst(m->b, m->var, rhs->a), m->var2, rhs->b);
      return Fired{{1.0, c.state, c.linking, body}};
    }
    case MainTerm::Kind::Force: {
      if (!is_value(m->a)) {
        auto span = m->span;
        return recurse_into(ms, c, m->a,
                            [span](MainTermPtr t) { return mm_force(std::move(t), span); });
      }
      auto lifted = mstrip(m->a);
      if (lifted->kind != MainTerm::Kind::Lift) throw InternalError("force on a non-thunk value");
      return Fired{{1.0, c.state, c.linking, lifted->a}};
    }
    case MainTerm::Kind::App: {
      if (!is_value(m->a)) {
        auto arg = m->b;
        auto span = m->span;
        return recurse_into(ms, c, m->a,
                            [arg, span](MainTermPtr t) { return mm_app(std::move(t), arg, span); });
      }
      if (!is_value(m->b)) {
        auto f = m->a;
        auto span = m->span;
        return recurse_into(ms, c, m->b,
                            [f, span](MainTermPtr t) { return mm_app(f, std::move(t), span); });
      }
      auto lam = mstrip(m->a);
      if (lam->kind != MainTerm::Kind::Lam) throw InternalError("application of a non-lambda value");
      return Fired{{1.0, c.state, c.linking, main_subst(lam->a, lam->var, m->b)}};
    }
    case MainTerm::Kind::Match: {
      if (!is_value(m->a)) {
        auto keep = m0;
        return recurse_into(ms, c, m->a, [keep](MainTermPtr t) {
          auto n = std::make_shared<MainTerm>(*keep);
          n->a = std::move(t);
          return MainTermPtr(n);
        });
      }
      auto scrut = mstrip(m->a);
      if (scrut->kind == MainTerm::Kind::Zero) return Fired{{1.0, c.state, c.linking, m->b}};
      if (scrut->kind == MainTerm::Kind::Succ)
        return Fired{{1.0, c.state, c.linking, main_subst(m->c, m->var, scrut->a)}};
      throw InternalError("match on a non-numeral value");
    }
    case MainTerm::Kind::Pure:
      return fire_pure(ms, c, m->pure, hint, m->span);
    case MainTerm::Kind::Meas: {
      if (!is_value(m->a)) {
        auto span = m->span;
        return recurse_into(ms, c, m->a,
                            [span](MainTermPtr t) { return mm_meas(std::move(t), span); });
      }
      auto z = mstrip(m->a);
      if (z->kind != MainTerm::Kind::Var) throw InternalError("measurement of a non-variable value");
      return fire_meas(c, z->var, m->span);
    }
    case MainTerm::Kind::UnApply: {
      if (!is_value(m->a)) {
        auto u = m->unitary;
        auto span = m->span;
        return recurse_into(ms, c, m->a,
                            [u, span](MainTermPtr t) { return mm_unapply(u, std::move(t), span); });
      }
      auto z = mstrip(m->a);
      if (z->kind != MainTerm::Kind::Var)
        throw InternalError("unitary application to a non-variable value");
      return fire_unitary(ms, c, m->unitary, z->var, m->span);
    }
    case MainTerm::Kind::LetBang: {
      if (!is_value(m->a)) {
        auto keep = m0;
        return recurse_into(ms, c, m->a, [keep](MainTermPtr t) {
          auto n = std::make_shared<MainTerm>(*keep);
          n->a = std::move(t);
          return MainTermPtr(n);
        });
      }
      auto rhs = mstrip(m->a);
      if (rhs->kind != MainTerm::Kind::Pair) throw InternalError("let-B on a non-pair value");
      auto x = mstrip(rhs->a);
      auto y = mstrip(rhs->b);
      if (x->kind != MainTerm::Kind::Var || y->kind != MainTerm::Kind::Var)
        throw InternalError("let-B on non-variable components");
      return fire_gather(ms, c, x->var, y->var, m->var, m->b, m->span);
    }
    case MainTerm::Kind::LetPairBang: {
      if (!is_value(m->a)) {
        auto keep = m0;
        return recurse_into(ms, c, m->a, [keep](MainTermPtr t) {
          auto n = std::make_shared<MainTerm>(*keep);
          n->a = std::move(t);
          return MainTermPtr(n);
        });
      }
      auto z = mstrip(m->a);
      if (z->kind != MainTerm::Kind::Var) throw InternalError("let-B pair on a non-variable value");
      return fire_divide(ms, c, z->var, m->var, m->var2, m->b, m->span);
    }
  }
  throw InternalError("find_redex: unreachable");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// The public machine
// ---------------------------------------------------------------------------

class Machine {
 public:
  // One probabilistic small step of a (non-value) configuration.
  Distribution step(const Configuration& c) {
    auto fired = detail::find_redex(ms_, c, c.term, nullptr);
    if (!fired) throw InternalError("step on a configuration whose term is a value");
    Distribution d;
    double total = 0;
    for (auto& br : *fired) {
      total += br.prob;
      d.branches.push_back({br.prob, Configuration{br.state, br.linking, br.term}});
    }
    if (std::abs(total - 1.0) > 1e-6)
      throw InternalError("branch probabilities sum to " + format_real(total));
    return d;
  }

  // A configuration with the state rewritten to its normal form; the state
  // keeps its type ascribed.
  static Configuration normalized(const Configuration& c) {
    Configuration cn = c;
    cn.state = mk_ascribe(normalize(c.state).to_term(), config_state_type(c));
    return cn;
  }

  // The reduction relation on semi-value configurations: rewrite the state
  // to normal form around a single step.
  Distribution reduce_sv(const Configuration& c) {
    Configuration cn = normalized(c);
    if (is_value(cn.term)) return {};
    auto d = step(cn);
    for (auto& [p, cfg] : d.branches) cfg = normalized(cfg);
    return d;
  }

  std::size_t steps_taken() const { return steps_; }

  struct RunOptions {
    bool sample = false;
    std::uint64_t seed = 0;
    std::size_t max_steps = 1000000;
    bool check_subject_reduction = false;
    std::function<void(double, const Configuration&)> trace;
  };

  // Evaluation to a distribution over value configurations. Exhaustive mode
  // expands every branch and merges equal leaves; sample mode draws one path.
  Distribution run(const Configuration& c0) { return run(c0, RunOptions{}); }

  Distribution run(const Configuration& c0, const RunOptions& opts) {
    MainTypePtr type;
    std::vector<PureTypePtr> aux;
    infer_config_type(c0, type, aux);
    auto wf = wf_config(c0, type, aux);
    if (!wf.ok)
      throw Error(ErrorCode::IllFormedConfiguration, "initial configuration: " + wf.failure);

    if (opts.sample) return run_sampled(c0, type, aux, opts);

    Distribution leaves;
    std::vector<std::pair<double, Configuration>> frontier{{1.0, c0}};
    while (!frontier.empty()) {
      auto [p, cfg] = frontier.back();
      frontier.pop_back();
      Configuration cn = normalized(cfg);
      if (is_value(cn.term)) {
        merge_leaf(leaves, p, cn);
        continue;
      }
      bump_steps(opts);
      auto d = step(cn);
      for (auto& [pb, cb] : d.branches) {
        Configuration next = normalized(cb);
        if (opts.check_subject_reduction) {
          auto r = wf_config(next, type, aux);
          if (!r.ok)
            throw InternalError("subject reduction violated: " + r.failure + "\nfrom\n" +
                                print_configuration(cn) + "\nto\n" + print_configuration(next));
        }
        if (opts.trace) opts.trace(p * pb, next);
        frontier.push_back({p * pb, next});
      }
    }
    std::sort(leaves.branches.begin(), leaves.branches.end(),
              [](auto& a, auto& b) { return a.first > b.first; });
    return leaves;
  }

  // Subject-reduction as a standalone check: c' keeps c's type and aux data.
  bool check_subject_reduction(const Configuration& c, const Configuration& c_next) {
    MainTypePtr type;
    std::vector<PureTypePtr> aux;
    infer_config_type(c, type, aux);
    return wf_config(c_next, type, aux).ok;
  }

 private:
  detail::MachineState ms_;
  std::size_t steps_ = 0;

  void bump_steps(const RunOptions& opts) {
    if (++steps_ > opts.max_steps)
      throw InternalError("step ceiling of " + std::to_string(opts.max_steps) +
                          " reached; evaluation did not normalize");
  }

  static void infer_config_type(const Configuration& c, MainTypePtr& type,
                                std::vector<PureTypePtr>& aux) {
    MainContext ctx;
    for (std::size_t i = 0, n = c.linking.tracked_count(); i < n; ++i)
      ctx.vars.push_back({*c.linking.blocks[i].var, mty_bop(c.linking.blocks[i].type)});
    type = typecheck_main(ctx, c.term);
    aux.clear();
    for (std::size_t i = c.linking.tracked_count(); i < c.linking.blocks.size(); ++i)
      aux.push_back(c.linking.blocks[i].type);
  }

  Distribution run_sampled(const Configuration& c0, const MainTypePtr& type,
                           const std::vector<PureTypePtr>& aux, const RunOptions& opts) {
    std::mt19937_64 rng(opts.seed);
    double path_prob = 1.0;
    Configuration cfg = c0;
    for (;;) {
      cfg = normalized(cfg);
      if (is_value(cfg.term)) break;
      bump_steps(opts);
      auto d = step(cfg);
      double roll = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      double acc = 0;
      std::size_t pick = d.branches.size() - 1;
      for (std::size_t i = 0; i < d.branches.size(); ++i) {
        acc += d.branches[i].first;
        if (roll <= acc) {
          pick = i;
          break;
        }
      }
      path_prob *= d.branches[pick].first;
      cfg = d.branches[pick].second;
      if (opts.check_subject_reduction) {
        auto r = wf_config(normalized(cfg), type, aux);
        if (!r.ok) throw InternalError("subject reduction violated: " + r.failure);
      }
      if (opts.trace) opts.trace(path_prob, cfg);
    }
    Distribution d;
    d.branches.push_back({path_prob, cfg});
    return d;
  }

  // alpha-insensitive structural key: machine names replaced by block index
  static std::string leaf_key(const Configuration& c) {
    std::map<std::string, std::string> rename;
    for (std::size_t i = 0; i < c.linking.blocks.size(); ++i)
      if (c.linking.blocks[i].var) rename[*c.linking.blocks[i].var] = "q" + std::to_string(i);
    std::string key;
    for (auto& b : c.linking.blocks) {
      key += b.var ? "T" : "A";
      key += print_type(b.type) + "[";
      for (auto p : b.positions) key += std::to_string(p) + ",";
      key += "]";
    }
    key += "|" + renamed_print(c.term, rename);
    auto st = strip(c.state);
    if (st->kind == PureTerm::Kind::LinComb)
      for (auto& e : st->entries) key += "|" + print_term(e.term);
    else
      key += "|" + print_term(st);
    return key;
  }

  static std::string renamed_print(const MainTermPtr& m, std::map<std::string, std::string> rename) {
    // free machine variables renamed; bound variables numbered by traversal
    struct R {
      std::map<std::string, std::string>& names;
      int next = 0;
      std::string fresh() { return "b" + std::to_string(next++); }
      std::string go(const MainTermPtr& m0) {
        auto saved = names;
        const MainTerm* m = m0.get();
        switch (m->kind) {
          case MainTerm::Kind::Var: {
            auto it = names.find(m->var);
            return it == names.end() ? m->var : it->second;
          }
          case MainTerm::Kind::Lam: {
            names[m->var] = fresh();
            auto s = "\\" + names[m->var] + "." + go(m->a);
            names = saved;
            return s;
          }
          case MainTerm::Kind::Case: {
            auto s = "case " + go(m->a) + "{";
            if (m->lvar) names[*m->lvar] = fresh();
            s += go(m->b) + ";";
            names = saved;
            if (m->rvar) names[*m->rvar] = fresh();
            s += go(m->c) + "}";
            names = saved;
            return s;
          }
          case MainTerm::Kind::LetPair:
          case MainTerm::Kind::LetPairBang: {
            auto s = std::string(m->kind == MainTerm::Kind::LetPair ? "lp(" : "lpb(") + go(m->a) + ",";
            names[m->var] = fresh();
            names[m->var2] = fresh();
            s += go(m->b) + ")";
            names = saved;
            return s;
          }
          case MainTerm::Kind::LetBang: {
            auto s = "lb(" + go(m->a) + ",";
            names[m->var] = fresh();
            s += go(m->b) + ")";
            names = saved;
            return s;
          }
          case MainTerm::Kind::Match: {
            auto s = "match(" + go(m->a) + "," + go(m->b) + ",";
            names[m->var] = fresh();
            s += go(m->c) + ")";
            names = saved;
            return s;
          }
          case MainTerm::Kind::Ascribe:
            return go(m->a);
          default: {
            std::string s = std::to_string(static_cast<int>(m->kind)) + "(";
            if (m->a) s += go(m->a);
            if (m->b) s += "," + go(m->b);
            if (m->c) s += "," + go(m->c);
            if (m->pure) s += "," + print_term(m->pure);
            if (m->unitary) s += "," + print_unitary(m->unitary);
            return s + ")";
          }
        }
      }
    } r{rename};
    return r.go(m);
  }

  void merge_leaf(Distribution& leaves, double p, const Configuration& leaf) {
    auto key = leaf_key(leaf);
    for (auto& [q, other] : leaves.branches) {
      if (leaf_key(other) != key) continue;
      auto va = strip(leaf.state);
      auto vb = strip(other.state);
      NormalValue a{va->kind == PureTerm::Kind::LinComb ? va->entries
                                                        : std::vector<LinEntry>{{Scalar(1), va}}};
      NormalValue b{vb->kind == PureTerm::Kind::LinComb ? vb->entries
                                                        : std::vector<LinEntry>{{Scalar(1), vb}}};
      if (nv_close(a, b)) {
        q += p;
        return;
      }
    }
    leaves.branches.push_back({p, leaf});
  }
};

}  // namespace qcl
