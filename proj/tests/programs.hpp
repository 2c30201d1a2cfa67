#pragma once

// The paper's example programs, built directly as ASTs. The .qcl files under
// programs/ express the same programs in surface syntax.

#include "qcl/main_ast.hpp"
#include "qcl/pure_ast.hpp"

namespace qclprog {

using namespace qcl;

inline const double R2 = 1.0 / std::sqrt(2.0);

inline PureTermPtr ket_plus() { return mk_lincomb({{R2, mk_ket0()}, {R2, mk_ket1()}}); }
inline PureTermPtr ket_minus() { return mk_lincomb({{R2, mk_ket0()}, {-R2, mk_ket1()}}); }

inline UnitaryExprPtr had() {
  return mk_clauses({{mk_ket0(), ket_plus()}, {mk_ket1(), ket_minus()}});
}

inline UnitaryExprPtr cnot() {
  return mk_clauses({
      {mk_pair(mk_ket1(), mk_ket0()), mk_pair(mk_ket1(), mk_ket1())},
      {mk_pair(mk_ket1(), mk_ket1()), mk_pair(mk_ket1(), mk_ket0())},
      {mk_pair(mk_ket0(), mk_var("x")), mk_pair(mk_ket0(), mk_var("x"))},
  });
}

inline UnitaryExprPtr gate_x() {
  return mk_clauses({{mk_ket0(), mk_ket1()}, {mk_ket1(), mk_ket0()}});
}

inline UnitaryExprPtr gate_z() {
  return mk_clauses({{mk_ket0(), mk_lincomb({{Scalar(1), mk_ket0()}})},
                     {mk_ket1(), mk_lincomb({{Scalar(-1), mk_ket1()}})}});
}

inline UnitaryExprPtr gate_id2() {
  return mk_clauses({{mk_ket0(), mk_ket0()}, {mk_ket1(), mk_ket1()}});
}

// Bell_S = let B(z) = U[H](pure |0>) (x) pure |0> in U[CNOT](z)
inline MainTermPtr bell_s() {
  auto lhs = mm_pair(mm_unapply(had(), mm_pure(mk_ket0())), mm_pure(mk_ket0()));
  return mm_letbang("z", lhs, mm_unapply(cnot(), mm_var("z")));
}

// The measurement example of the examples section:
// let B(x (x) y) = pure |phi> in x (x) meas(y)
// with |phi> = 1/sqrt3 (|000> + |010> + |011>), associated ((q q) q).
inline PureTermPtr phi_third() {
  const double r3 = 1.0 / std::sqrt(3.0);
  auto b = [](int x, int y, int z) {
    return mk_pair(mk_pair(x ? mk_ket1() : mk_ket0(), y ? mk_ket1() : mk_ket0()),
                   z ? mk_ket1() : mk_ket0());
  };
  return mk_lincomb({{r3, b(0, 0, 0)}, {r3, b(0, 1, 0)}, {r3, b(0, 1, 1)}});
}

inline MainTermPtr meas_third() {
  return mm_letpairbang("x", "y", mm_pure(phi_third()),
                        mm_pair(mm_var("x"), mm_meas(mm_var("y"))));
}

// Bell_M = \x.\y. let B(z) = x (x) y in let B(q1 (x) q2) = U[CNOT](z)
//          in meas(U[H](q1)) (x) meas(q2)
inline MainTermPtr bell_m() {
  auto body = mm_letbang(
      "z", mm_pair(mm_var("x"), mm_var("y")),
      mm_letpairbang("q1", "q2", mm_unapply(cnot(), mm_var("z")),
                     mm_pair(mm_meas(mm_unapply(had(), mm_var("q1"))), mm_meas(mm_var("q2")))));
  return mm_lam("x", mm_lam("y", body));
}

// App_U = \q.\p. let b1 (x) b2 = p in case b1 ... case b2 ... corrections
inline MainTermPtr app_u() {
  auto correct = [&](UnitaryExprPtr u) { return mm_unapply(std::move(u), mm_var("q")); };
  auto on_b2 = [&](UnitaryExprPtr u0, UnitaryExprPtr u1) {
    return mm_case(mm_var("b2"), std::nullopt, correct(std::move(u0)), std::nullopt,
                   correct(std::move(u1)));
  };
  auto cases = mm_case(mm_var("b1"), std::nullopt, on_b2(gate_id2(), gate_x()), std::nullopt,
                       on_b2(gate_z(), mk_compose(gate_z(), gate_x())));
  return mm_lam("q", mm_lam("p", mm_letpair("b1", "b2", mm_var("p"), cases)));
}

// tele = \q. let B(x (x) y) = Bell_S in
//            let b1 (x) b2 = Bell_M q x in App_U y (b1 (x) b2)
inline MainTermPtr tele() {
  auto bm = mm_app(mm_app(bell_m(), mm_var("q")), mm_var("x"));
  auto au = mm_app(mm_app(app_u(), mm_var("y")), mm_pair(mm_var("b1"), mm_var("b2")));
  return mm_lam("q", mm_letpairbang("x", "y", bell_s(), mm_letpair("b1", "b2", bm, au)));
}

// the program of the introduction: Tof = U[ctrl CNOT]
inline MainTermPtr fig1() {
  auto body = mm_letpairbang(
      "x", "xs", mm_unapply(mk_ctrl(cnot()), mm_var("y")),
      mm_case(mm_meas(mm_var("x")), std::nullopt, mm_unapply(cnot(), mm_var("xs")), std::nullopt,
              mm_var("xs")));
  return mm_lam("y", body);
}

// ---------------------------------------------------------------------------
// The k-step quantum walk on a 10-cycle.
// ---------------------------------------------------------------------------

// u1: |2n> <-> |2n+1> for n <= 4, |y+10> fixed
inline UnitaryExprPtr walk_u1() {
  std::vector<Clause> cs;
  for (int n = 0; n <= 4; ++n) {
    cs.push_back({mk_nat(2 * n), mk_nat(2 * n + 1)});
    cs.push_back({mk_nat(2 * n + 1), mk_nat(2 * n)});
  }
  PureTermPtr tail = mk_var("y");
  for (int i = 0; i < 10; ++i) tail = mk_succ(tail);
  cs.push_back({tail, tail});
  return mk_clauses(std::move(cs));
}

// u2: 0 -> 9, |2n+2> <-> |2n+1> for n <= 3, 9 -> 0, |y+10> fixed
inline UnitaryExprPtr walk_u2() {
  std::vector<Clause> cs;
  cs.push_back({mk_nat(0), mk_nat(9)});
  for (int n = 0; n <= 3; ++n) {
    cs.push_back({mk_nat(2 * n + 2), mk_nat(2 * n + 1)});
    cs.push_back({mk_nat(2 * n + 1), mk_nat(2 * n + 2)});
  }
  cs.push_back({mk_nat(9), mk_nat(0)});
  PureTermPtr tail = mk_var("y");
  for (int i = 0; i < 10; ++i) tail = mk_succ(tail);
  cs.push_back({tail, tail});
  return mk_clauses(std::move(cs));
}

// CNOT_nat: |0>-control applies u1, |1>-control applies u2, matching the
// trace in the walk example.
inline UnitaryExprPtr cnot_nat() {
  auto u1 = walk_u1();
  auto u2 = walk_u2();
  std::vector<Clause> cs;
  for (auto& c : u1->clauses)
    cs.push_back({mk_pair(mk_ket0(), c.pattern), mk_pair(mk_ket0(), c.body)});
  for (auto& c : u2->clauses)
    cs.push_back({mk_pair(mk_ket1(), c.pattern), mk_pair(mk_ket1(), c.body)});
  return mk_clauses(std::move(cs));
}

inline UnitaryExprPtr id_qnat() {
  return mk_clauses({{mk_ascribe(mk_var("n"), ty_qnat()), mk_var("n")}});
}

// one walk step: S = CNOT_nat . (Had (x) Id)
inline UnitaryExprPtr walk_step() { return mk_compose(cnot_nat(), mk_utensor(had(), id_qnat())); }

inline UnitaryExprPtr walk_steps(int k) {
  auto u = walk_step();
  for (int i = 1; i < k; ++i) u = mk_compose(walk_step(), u);
  return u;
}

// first-order body of walk applied to |0> (x) |0|:
// let B(x1 (x) x2) = U[S^k](pure(|0> (x) |0>)) in x1 (x) meas(x2)
inline MainTermPtr walk_applied(int k) {
  auto state = mk_pair(mk_ket0(), mk_nat(0));
  return mm_letpairbang("x1", "x2", mm_unapply(walk_steps(k), mm_pure(state)),
                        mm_pair(mm_var("x1"), mm_meas(mm_var("x2"))));
}

// Bell_M applied to two concrete states, beta-reduced to stay first-order
inline MainTermPtr bell_m_applied(const PureTermPtr& s1, const PureTermPtr& s2) {
  auto body = mm_letbang(
      "z", mm_pair(mm_pure(s1), mm_pure(s2)),
      mm_letpairbang("q1", "q2", mm_unapply(cnot(), mm_var("z")),
                     mm_pair(mm_meas(mm_unapply(had(), mm_var("q1"))), mm_meas(mm_var("q2")))));
  return body;
}

}  // namespace qclprog
