#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qcl/main_core.hpp"
#include "qcl/pure_denot.hpp"

namespace qcl {

// One block of the linking permutation: an ordered group of factor positions
// of the state, carrying the exact pure type its variable sees. Blocks with a
// variable track free variables of the machine term; the rest are auxiliary.
struct Block {
  std::vector<std::size_t> positions;
  PureTypePtr type;  // flatten(type) equals the factor types at `positions`
  std::optional<std::string> var;
};

// Structural form of the canonical monoidal isomorphism u_sigma: a partition
// of the state's tensor factors into blocks, tracked blocks first. Factor
// positions not covered by any block must have unit type and are eliminated
// by the synthesized unitary.
struct BlockLinking {
  std::vector<PureTypePtr> factors;
  std::vector<Block> blocks;

  std::size_t tracked_count() const {
    std::size_t n = 0;
    while (n < blocks.size() && blocks[n].var) ++n;
    return n;
  }

  const Block* find_var(const std::string& x) const {
    for (auto& b : blocks)
      if (b.var && *b.var == x) return &b;
    return nullptr;
  }

  // left fold of the block types; the codomain of the linking unitary
  PureTypePtr grouped_type() const {
    if (blocks.empty()) return ty_unit();
    PureTypePtr t = blocks[0].type;
    for (std::size_t i = 1; i < blocks.size(); ++i) t = ty_tensor(t, blocks[i].type);
    return t;
  }
};

// The machine state: a closed pure term, its linking, and a main-calculus
// term whose free variables the linking tracks.
struct Configuration {
  PureTermPtr state;
  BlockLinking linking;
  MainTermPtr term;
};

inline Configuration initial_configuration(const MainTermPtr& m) {
  Configuration c;
  c.state = mk_star();
  c.linking.factors = {ty_unit()};
  c.term = m;
  return c;
}

// The machine keeps the state's exact type as an ascription on the state
// term: normal forms drop inner ascriptions, and a bare injection cannot
// re-infer its sum type on its own.
inline PureTypePtr config_state_type(const Configuration& c) {
  if (c.state->kind == PureTerm::Kind::Ascribe) return c.state->ascribed;
  return typecheck_term(PureContext{}, c.state);
}

// ---------------------------------------------------------------------------
// Factor bookkeeping
// ---------------------------------------------------------------------------

// A closed basis value of a tensor type splits along the type tree into the
// values of its flattened factors.
inline void split_basis(const PureTermPtr& b0, const PureTypePtr& q, std::vector<PureTermPtr>& out) {
  if (q->kind == PureType::Kind::Tensor) {
    auto b = strip(b0);
    if (b->kind != PureTerm::Kind::Pair)
      throw InternalError("basis value does not mirror its tensor type");
    split_basis(b->left, q->left, out);
    split_basis(b->right, q->right, out);
    return;
  }
  out.push_back(strip(b0));
}

// Rebuilds a basis value of shape `q` consuming factor values in order.
inline PureTermPtr join_basis(const PureTypePtr& q, const std::vector<PureTermPtr>& vals,
                              std::size_t& next) {
  if (q->kind == PureType::Kind::Tensor) {
    auto l = join_basis(q->left, vals, next);
    auto r = join_basis(q->right, vals, next);
    return mk_pair(l, r);
  }
  return vals.at(next++);
}

// The linking as a unitary expression over a given source type tree.
inline UnitaryExprPtr linking_unitary(const PureTypePtr& state_type, const BlockLinking& l) {
  auto leaves = flatten_tensor(state_type);
  if (leaves.size() != l.factors.size())
    throw Error(ErrorCode::IllFormedConfiguration, "state type does not match the linking factors");
  std::vector<int> leaf_to_output(leaves.size(), -1);
  int slot = 0;
  for (auto& b : l.blocks)
    for (auto p : b.positions) {
      if (p >= leaves.size() || leaf_to_output[p] != -1)
        throw Error(ErrorCode::IllFormedConfiguration, "linking blocks do not partition the factors");
      leaf_to_output[p] = slot++;
    }
  // output slots must follow block order; reassign contiguously
  return synth_linking_unitary(state_type, leaf_to_output, l.grouped_type());
}

// ---------------------------------------------------------------------------
// Well-formedness: the four conditions of the configuration judgement.
// ---------------------------------------------------------------------------

struct WfReport {
  bool ok = true;
  std::string failure;  // names the violated condition

  static WfReport fail(std::string what) { return {false, std::move(what)}; }
};

inline WfReport wf_config(const Configuration& c, const MainTypePtr& expected,
                          const std::vector<PureTypePtr>& aux) {
  // structural sanity of the linking itself
  std::vector<bool> covered(c.linking.factors.size(), false);
  for (auto& b : c.linking.blocks) {
    auto leaves = flatten_tensor(b.type);
    if (leaves.size() != b.positions.size())
      return WfReport::fail("linking: block type does not flatten onto its positions");
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      std::size_t p = b.positions[i];
      if (p >= c.linking.factors.size() || covered[p])
        return WfReport::fail("linking: blocks do not partition the factor positions");
      covered[p] = true;
      if (!type_equal(leaves[i], c.linking.factors[p]))
        return WfReport::fail("linking: block factor types disagree with the state factors");
    }
  }
  for (std::size_t p = 0; p < covered.size(); ++p)
    if (!covered[p] && c.linking.factors[p]->kind != PureType::Kind::Unit)
      return WfReport::fail("linking: uncovered non-unit factor");
  for (std::size_t i = 0, n = c.linking.tracked_count(); i < c.linking.blocks.size(); ++i)
    if ((i < n) != c.linking.blocks[i].var.has_value())
      return WfReport::fail("linking: tracked blocks must precede auxiliary blocks");

  // 1. the state is a closed well-formed pure term over the declared factors
  PureTypePtr state_type;
  try {
    state_type = typecheck_term(PureContext{}, c.state);
  } catch (const Error& e) {
    return WfReport::fail(std::string("state: ") + e.what());
  }
  auto leaves = flatten_tensor(state_type);
  if (leaves.size() != c.linking.factors.size())
    return WfReport::fail("state: type has a different factor count than the linking");
  for (std::size_t i = 0; i < leaves.size(); ++i)
    if (!type_equal(leaves[i], c.linking.factors[i]))
      return WfReport::fail("state: factor " + std::to_string(i) + " has type " +
                            print_type(leaves[i]) + ", linking expects " +
                            print_type(c.linking.factors[i]));

  // 2. the synthesized linking is a well-formed unitary of the right type
  try {
    auto u = linking_unitary(state_type, c.linking);
    typecheck_unitary(u, UnitaryType{state_type, c.linking.grouped_type()});
  } catch (const Error& e) {
    return WfReport::fail(std::string("linking unitary: ") + e.what());
  }

  // 3. the term is typed under the tracked block variables
  MainContext ctx;
  for (std::size_t i = 0, n = c.linking.tracked_count(); i < n; ++i)
    ctx.vars.push_back({*c.linking.blocks[i].var, mty_bop(c.linking.blocks[i].type)});
  try {
    auto ty = typecheck_main(ctx, c.term);
    if (!mtype_equal(ty, expected))
      return WfReport::fail("term: has type " + print_mtype(ty) + ", expected " +
                            print_mtype(expected));
  } catch (const Error& e) {
    return WfReport::fail(std::string("term: ") + e.what());
  }

  // 4. the auxiliary block types agree with the declared auxiliary data
  std::vector<PureTypePtr> trailing;
  for (std::size_t i = c.linking.tracked_count(); i < c.linking.blocks.size(); ++i)
    trailing.push_back(c.linking.blocks[i].type);
  if (trailing.size() != aux.size())
    return WfReport::fail("auxiliary: expected " + std::to_string(aux.size()) + " blocks, found " +
                          std::to_string(trailing.size()));
  for (std::size_t i = 0; i < aux.size(); ++i)
    if (!type_equal(trailing[i], aux[i]))
      return WfReport::fail("auxiliary: block " + std::to_string(i) + " has type " +
                            print_type(trailing[i]) + ", declared " + print_type(aux[i]));
  return {};
}

// Printable description of a configuration, with machine-chosen names
// canonicalized, for trace output and leaf merging.
inline std::string print_configuration(const Configuration& c) {
  std::string s = "state = " + print_term(c.state) + "\nlinking:";
  for (auto& b : c.linking.blocks) {
    s += "\n  ";
    s += b.var ? ("block " + *b.var) : "auxiliary";
    s += " : " + print_type(b.type) + " @ [";
    for (std::size_t i = 0; i < b.positions.size(); ++i)
      s += (i ? "," : "") + std::to_string(b.positions[i]);
    s += "]";
  }
  s += "\nterm = " + print_mterm(c.term);
  return s;
}

}  // namespace qcl
