#include <catch2/catch_amalgamated.hpp>

#include "programs.hpp"
#include "qcl/config_eval.hpp"
#include "qcl/pure_denot.hpp"

using namespace qcl;
using namespace qclprog;

namespace {

// Residual value of one tracked block, from a leaf whose other factors are
// units or product-separated (enough for these tests).
NormalValue block_state(const Configuration& leaf, const std::string& var) {
  const Block* b = leaf.linking.find_var(var);
  REQUIRE(b != nullptr);
  auto state_type = typecheck_term(PureContext{}, leaf.state);
  auto v = normalize(leaf.state);
  std::vector<LinEntry> out;
  for (auto& e : v.entries) {
    std::vector<PureTermPtr> vals;
    split_basis(e.term, state_type, vals);
    std::vector<PureTermPtr> bv;
    for (auto p : b->positions) bv.push_back(vals[p]);
    std::size_t next = 0;
    out.push_back({e.coef, join_basis(b->type, bv, next)});
  }
  return NormalValue{qcl::detail::canon_entries(std::move(out))};
}

const MainTermPtr& leaf_var_term(const Configuration& leaf) { return leaf.term; }

}  // namespace

TEST_CASE("wf_config on the spec's shapes") {
  // (Bell (x) |0>, blocks {1,2} -> x and {3} -> y, x (x) y)
  Configuration c;
  c.state = mk_pair(mk_lincomb({{R2, mk_pair(mk_ket0(), mk_ket0())}, {R2, mk_pair(mk_ket1(), mk_ket1())}}),
                    mk_ket0());
  c.linking.factors = {ty_qbit(), ty_qbit(), ty_qbit()};
  c.linking.blocks.push_back({{0, 1}, ty_tensor(ty_qbit(), ty_qbit()), "x"});
  c.linking.blocks.push_back({{2}, ty_qbit(), "y"});
  c.term = mm_pair(mm_var("x"), mm_var("y"));
  auto expected = mty_tensor(mty_bop(ty_tensor(ty_qbit(), ty_qbit())), mty_qbit());
  CHECK(wf_config(c, expected, {}).ok);

  // (*, no blocks, pure |0>) : B(qbit)
  auto c2 = initial_configuration(mm_pure(mk_ket0()));
  CHECK(wf_config(c2, mty_qbit(), {}).ok);

  // unbound term variable
  Configuration c3;
  c3.state = mk_ket0();
  c3.linking.factors = {ty_qbit()};
  c3.linking.blocks.push_back({{0}, ty_qbit(), "x"});
  c3.term = mm_var("y");
  auto r3 = wf_config(c3, mty_qbit(), {});
  CHECK_FALSE(r3.ok);
  CHECK(r3.failure.find("term") != std::string::npos);

  // wrong auxiliary declaration
  Configuration c4 = c;
  c4.linking.blocks[1].var.reset();
  c4.term = mm_var("x");
  CHECK(wf_config(c4, mty_bop(ty_tensor(ty_qbit(), ty_qbit())), {ty_qbit()}).ok);
  CHECK_FALSE(wf_config(c4, mty_bop(ty_tensor(ty_qbit(), ty_qbit())), {ty_qnat()}).ok);
  CHECK_FALSE(wf_config(c4, mty_bop(ty_tensor(ty_qbit(), ty_qbit())), {}).ok);
}

TEST_CASE("Bell state preparation runs to one leaf") {
  Machine m;
  auto d = m.run(initial_configuration(bell_s()));
  REQUIRE(d.branches.size() == 1);
  CHECK(d.branches[0].first == Catch::Approx(1.0));
  const auto& leaf = d.branches[0].second;
  CHECK(is_value(leaf.term));
  REQUIRE(mstrip(leaf.term)->kind == MainTerm::Kind::Var);
  auto z = mstrip(leaf.term)->var;
  auto v = block_state(leaf, z);
  REQUIRE(v.entries.size() == 2);
  CHECK(term_equal(v.entries[0].term, mk_pair(mk_ket0(), mk_ket0())));
  CHECK(term_equal(v.entries[1].term, mk_pair(mk_ket1(), mk_ket1())));
  CHECK(std::abs(v.entries[0].coef - Scalar(R2)) < 1e-9);
  CHECK(std::abs(v.entries[1].coef - Scalar(R2)) < 1e-9);
}

TEST_CASE("the measurement example yields 2/3 and 1/3") {
  Machine m;
  auto d = m.run(initial_configuration(meas_third()));
  REQUIRE(d.branches.size() == 2);
  // sorted by probability: 2/3 first
  CHECK(d.branches[0].first == Catch::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(d.branches[1].first == Catch::Approx(1.0 / 3.0).epsilon(1e-9));

  auto& big = d.branches[0].second;
  auto& small = d.branches[1].second;

  // terms are x (x) inl* and x (x) inr*
  auto term_of = [](const Configuration& leaf) {
    auto t = mstrip(leaf.term);
    REQUIRE(t->kind == MainTerm::Kind::Pair);
    return std::pair<std::string, const MainTerm*>(mstrip(t->a)->var, mstrip(t->b).get());
  };
  auto [xv1, bit1] = term_of(big);
  auto [xv2, bit2] = term_of(small);
  CHECK(bit1->kind == MainTerm::Kind::InL);
  CHECK(bit2->kind == MainTerm::Kind::InR);

  // residual states on the first two qubits
  auto v1 = block_state(big, xv1);
  REQUIRE(v1.entries.size() == 2);
  CHECK(term_equal(v1.entries[0].term, mk_pair(mk_ket0(), mk_ket0())));
  CHECK(term_equal(v1.entries[1].term, mk_pair(mk_ket0(), mk_ket1())));
  CHECK(std::abs(v1.entries[0].coef - Scalar(R2)) < 1e-9);
  CHECK(std::abs(v1.entries[1].coef - Scalar(R2)) < 1e-9);

  auto v2 = block_state(small, xv2);
  REQUIRE(v2.entries.size() == 1);
  CHECK(term_equal(v2.entries[0].term, mk_pair(mk_ket0(), mk_ket1())));
  CHECK(std::abs(v2.entries[0].coef - Scalar(1)) < 1e-9);
}

TEST_CASE("the one-step walk splits evenly between succ zero and nine") {
  Machine m;
  auto d = m.run(initial_configuration(walk_applied(1)));
  REQUIRE(d.branches.size() == 2);
  CHECK(d.branches[0].first == Catch::Approx(0.5).epsilon(1e-9));
  CHECK(d.branches[1].first == Catch::Approx(0.5).epsilon(1e-9));

  auto nat_of = [](const MainTermPtr& t0) {
    const MainTerm* t = mstrip(t0.get());
    std::size_t n = 0;
    while (t->kind == MainTerm::Kind::Succ) {
      ++n;
      t = mstrip(t->a.get());
    }
    REQUIRE(t->kind == MainTerm::Kind::Zero);
    return n;
  };
  std::set<std::size_t> outcomes;
  for (auto& [p, leaf] : d.branches) {
    auto t = mstrip(leaf.term);
    REQUIRE(t->kind == MainTerm::Kind::Pair);
    outcomes.insert(nat_of(t->b));
  }
  CHECK(outcomes == std::set<std::size_t>{1, 9});

  // the residual control qubit pairs |0> with outcome 1 and |1> with 9
  for (auto& [p, leaf] : d.branches) {
    auto t = mstrip(leaf.term);
    auto x1 = mstrip(t->a)->var;
    auto v = block_state(leaf, x1);
    REQUIRE(v.entries.size() == 1);
    bool is_one = nat_of(t->b) == 1;
    CHECK(term_equal(v.entries[0].term, is_one ? mk_ket0() : mk_ket1()));
  }
}

TEST_CASE("teleportation forwards any input across four equal branches") {
  // drive the machine without leaf merging: the four measurement outcomes all
  // carry the corrected input onward
  Machine m;
  auto program = mm_app(tele(), mm_pure(ket_plus()));
  std::vector<std::pair<double, Configuration>> frontier{{1.0, initial_configuration(program)}};
  std::vector<std::pair<double, Configuration>> leaves;
  while (!frontier.empty()) {
    auto [p, cfg] = frontier.back();
    frontier.pop_back();
    auto d = m.reduce_sv(cfg);
    if (d.branches.empty()) {
      leaves.push_back({p, Machine::normalized(cfg)});
      continue;
    }
    for (auto& [pb, cb] : d.branches) frontier.push_back({p * pb, cb});
  }
  REQUIRE(leaves.size() == 4);
  for (auto& [p, leaf] : leaves) {
    CHECK(p == Catch::Approx(0.25).epsilon(1e-9));
    auto z = mstrip(leaf.term)->var;
    auto v = block_state(leaf, z);
    REQUIRE(v.entries.size() == 2);
    // the output qubit is |+> again, up to a global phase
    auto ratio = v.entries[1].coef / v.entries[0].coef;
    CHECK(std::abs(ratio - Scalar(1)) < 1e-7);
    CHECK(std::abs(std::abs(v.entries[0].coef) - R2) < 1e-7);
  }

  // the corrected branches are indistinguishable, so the exhaustive runner
  // merges them into a single certain leaf
  Machine m2;
  auto merged = m2.run(initial_configuration(program));
  REQUIRE(merged.branches.size() == 1);
  CHECK(merged.branches[0].first == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("probability conservation at every intermediate step") {
  Machine m;
  for (auto& prog : {meas_third(), bell_s(), walk_applied(2)}) {
    std::vector<std::pair<double, Configuration>> frontier{{1.0, initial_configuration(prog)}};
    while (!frontier.empty()) {
      auto [p, cfg] = frontier.back();
      frontier.pop_back();
      auto d = m.reduce_sv(cfg);
      if (d.branches.empty()) continue;  // value configuration
      double total = 0;
      for (auto& [pb, cb] : d.branches) {
        total += pb;
        frontier.push_back({pb, cb});
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("subject reduction holds along all example traces") {
  for (auto& prog : {bell_s(), meas_third(), walk_applied(1),
                     mm_app(fig1(), mm_pure(mk_pair(mk_ket1(), mk_pair(mk_ket1(), mk_ket0())))),
                     mm_app(tele(), mm_pure(mk_ket0()))}) {
    Machine m;
    Machine::RunOptions opts;
    opts.check_subject_reduction = true;
    CHECK_NOTHROW(m.run(initial_configuration(prog), opts));
  }
}

TEST_CASE("sampling is deterministic per seed and follows the distribution") {
  Machine::RunOptions opts;
  opts.sample = true;
  opts.seed = 7;
  Machine m1, m2;
  auto a = m1.run(initial_configuration(meas_third()), opts);
  auto b = m2.run(initial_configuration(meas_third()), opts);
  REQUIRE(a.branches.size() == 1);
  REQUIRE(b.branches.size() == 1);
  CHECK(a.branches[0].first == Catch::Approx(b.branches[0].first));
  CHECK(print_mterm(a.branches[0].second.term) == print_mterm(b.branches[0].second.term));

  // frequencies across seeds roughly match 2/3 : 1/3
  int left = 0, total = 60;
  for (int s = 0; s < total; ++s) {
    Machine mm;
    Machine::RunOptions o;
    o.sample = true;
    o.seed = static_cast<std::uint64_t>(s);
    auto d = mm.run(initial_configuration(meas_third()), o);
    auto t = mstrip(d.branches[0].second.term);
    if (mstrip(t->b)->kind == MainTerm::Kind::InL) ++left;
  }
  CHECK(left > total / 2);      // 2/3 branch dominates
  CHECK(left < total);          // but both occur
}

TEST_CASE("measurement probabilities follow the Born rule (matrix oracle)") {
  // pre-measurement configuration built by running meas_third up to the
  // letpairB, then checking each measurement branch against the state vector
  Machine m;
  Configuration c = initial_configuration(meas_third());
  // drive to the configuration whose redex is the measurement
  for (int i = 0; i < 2; ++i) {
    auto d = m.reduce_sv(c);
    REQUIRE(d.branches.size() == 1);
    c = d.branches[0].second;
  }
  // now the term is x (x) meas(y); measure by one more step
  auto target = mstrip(c.term);
  REQUIRE(target->kind == MainTerm::Kind::Pair);
  REQUIRE(mstrip(target->b)->kind == MainTerm::Kind::Meas);

  auto state_type = typecheck_term(PureContext{}, c.state);
  TruncationConfig cfg;
  auto vec = interp_term(PureContext{}, c.state, cfg);

  // oracle: group |amplitude|^2 by the measured block's basis index
  auto yvar = mstrip(mstrip(target->b)->a)->var;
  const Block* yb = c.linking.find_var(yvar);
  REQUIRE(yb);
  auto factor_dims = std::vector<std::size_t>{};
  for (auto& f : c.linking.factors) factor_dims.push_back(interp_type(f, cfg));
  std::map<std::size_t, double> oracle;
  for (std::size_t i = 0; i < vec.rows(); ++i) {
    double p = std::norm(vec(i, 0));
    if (p == 0) continue;
    // decode factor digits, left factor major
    std::vector<std::size_t> digits(factor_dims.size());
    std::size_t rest = i;
    for (std::size_t k = factor_dims.size(); k-- > 0;) {
      digits[k] = rest % factor_dims[k];
      rest /= factor_dims[k];
    }
    std::size_t key = 0;
    for (auto pidx : yb->positions) key = key * factor_dims[pidx] + digits[pidx];
    oracle[key] += p;
  }

  auto d = m.reduce_sv(c);
  REQUIRE(d.branches.size() == oracle.size());
  double eps = 1e-9;
  std::vector<double> got;
  for (auto& [p, cb] : d.branches) got.push_back(p);
  std::sort(got.begin(), got.end());
  std::vector<double> want;
  for (auto& [k, p] : oracle) want.push_back(p);
  std::sort(want.begin(), want.end());
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < eps);
}

TEST_CASE("exhaustive runs stay below the step ceiling and terminate") {
  Machine m;
  Machine::RunOptions opts;
  opts.max_steps = 1000000;
  for (auto& prog : {bell_s(), meas_third(), walk_applied(3), mm_app(tele(), mm_pure(mk_ket1()))}) {
    Machine mm;
    CHECK_NOTHROW(mm.run(initial_configuration(prog), opts));
  }
}
