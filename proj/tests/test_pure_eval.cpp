#include <catch2/catch_amalgamated.hpp>

#include "generators.hpp"
#include "qcl/pure_eval.hpp"

using namespace qcl;

namespace {

const double R2 = 1.0 / std::sqrt(2.0);

PureTermPtr ket_plus() { return mk_lincomb({{R2, mk_ket0()}, {R2, mk_ket1()}}); }
PureTermPtr ket_minus() { return mk_lincomb({{R2, mk_ket0()}, {-R2, mk_ket1()}}); }

UnitaryExprPtr hadamard() {
  return mk_clauses({{mk_ket0(), ket_plus()}, {mk_ket1(), ket_minus()}});
}

UnitaryExprPtr cnot() {
  return mk_clauses({
      {mk_pair(mk_ket1(), mk_ket0()), mk_pair(mk_ket1(), mk_ket1())},
      {mk_pair(mk_ket1(), mk_ket1()), mk_pair(mk_ket1(), mk_ket0())},
      {mk_pair(mk_ket0(), mk_var("x")), mk_pair(mk_ket0(), mk_var("x"))},
  });
}

// Had_qnat: |0>,|1> rotated, |x+2> fixed.
UnitaryExprPtr hadamard_qnat() {
  auto plus01 = mk_lincomb({{R2, mk_nat(0)}, {R2, mk_nat(1)}});
  auto minus01 = mk_lincomb({{R2, mk_nat(0)}, {-R2, mk_nat(1)}});
  auto tail = mk_succ(mk_succ(mk_var("x")));
  return mk_clauses({{mk_nat(0), plus01}, {mk_nat(1), minus01}, {tail, tail}});
}

NormalValue nv_of(std::vector<LinEntry> es) { return NormalValue{std::move(es)}; }

bool close_to(const NormalValue& v, std::vector<LinEntry> expect) {
  return nv_close(v, nv_of(std::move(expect)));
}

}  // namespace

TEST_CASE("expand_to_basis follows the linearity rules") {
  // injector distribution
  auto inj = mk_injl(mk_lincomb({{Scalar(1), mk_star()}}));
  CHECK(close_to(expand_to_basis(inj), {{Scalar(1), mk_injl(mk_star())}}));

  // tensor distribution and sorting
  auto t = mk_pair(ket_plus(), mk_ket0());
  CHECK(close_to(expand_to_basis(t), {{R2, mk_pair(mk_ket0(), mk_ket0())},
                                      {R2, mk_pair(mk_ket1(), mk_ket0())}}));

  // nested combinations collapse
  auto nested = mk_lincomb({{Scalar(1), mk_lincomb({{Scalar(1), mk_ket0()}})}});
  CHECK(close_to(expand_to_basis(nested), {{Scalar(1), mk_ket0()}}));

  // duplicates merge, zeros drop
  auto dup = mk_lincomb({{R2, ket_plus()}, {-R2, ket_minus()}});
  CHECK(close_to(expand_to_basis(dup), {{Scalar(1), mk_ket1()}}));
}

TEST_CASE("apply_unitary on the example gates") {
  auto h = hadamard();
  auto v0 = nv_of({{Scalar(1), mk_ket0()}});
  CHECK(close_to(apply_unitary(h, v0), {{R2, mk_ket0()}, {R2, mk_ket1()}}));

  auto c = cnot();
  auto v10 = nv_of({{Scalar(1), mk_pair(mk_ket1(), mk_ket0())}});
  CHECK(close_to(apply_unitary(c, v10), {{Scalar(1), mk_pair(mk_ket1(), mk_ket1())}}));

  // Had_qnat fixes |5> through the variable clause
  auto hq = hadamard_qnat();
  auto v5 = nv_of({{Scalar(1), mk_nat(5)}});
  CHECK(close_to(apply_unitary(hq, v5), {{Scalar(1), mk_nat(5)}}));
  auto vq0 = nv_of({{Scalar(1), mk_nat(0)}});
  CHECK(close_to(apply_unitary(hq, vq0), {{R2, mk_nat(0)}, {R2, mk_nat(1)}}));
}

TEST_CASE("apply_adjoint inverts the gates") {
  auto h = hadamard();
  auto plus = nv_of({{R2, mk_ket0()}, {R2, mk_ket1()}});
  CHECK(close_to(apply_adjoint(h, plus), {{Scalar(1), mk_ket0()}}));

  // double adjoint
  auto v0 = nv_of({{Scalar(1), mk_ket0()}});
  CHECK(close_to(apply_unitary(mk_adjoint(mk_adjoint(h)), v0), {{R2, mk_ket0()}, {R2, mk_ket1()}}));

  // CNOT clause read right-to-left
  auto c = cnot();
  auto v11 = nv_of({{Scalar(1), mk_pair(mk_ket1(), mk_ket1())}});
  CHECK(close_to(apply_adjoint(c, v11), {{Scalar(1), mk_pair(mk_ket1(), mk_ket0())}}));

  // adjoint through a change-of-basis body set
  auto hq = hadamard_qnat();
  auto vq = nv_of({{R2, mk_nat(0)}, {-R2, mk_nat(1)}});
  CHECK(close_to(apply_adjoint(hq, vq), {{Scalar(1), mk_nat(1)}}));
  auto v7 = nv_of({{Scalar(1), mk_nat(7)}});
  CHECK(close_to(apply_adjoint(hq, v7), {{Scalar(1), mk_nat(7)}}));
}

TEST_CASE("normalize computes the spec's normal forms") {
  auto h = hadamard();
  // involution of Hadamard
  auto hh = mk_apply(h, mk_apply(h, mk_ket0()));
  CHECK(close_to(normalize(hh), {{Scalar(1), mk_ket0()}}));

  // Bell state construction
  auto bell_term = mk_apply(cnot(), mk_pair(mk_apply(h, mk_ket0()), mk_ket0()));
  CHECK(close_to(normalize(bell_term), {{R2, mk_pair(mk_ket0(), mk_ket0())},
                                        {R2, mk_pair(mk_ket1(), mk_ket1())}}));

  // controlled-controlled-not on |1>|1>|0>
  auto tof = mk_ctrl(cnot());
  auto in = mk_pair(mk_ket1(), mk_pair(mk_ket1(), mk_ket0()));
  CHECK(close_to(normalize(mk_apply(tof, in)),
                 {{Scalar(1), mk_pair(mk_ket1(), mk_pair(mk_ket1(), mk_ket1()))}}));
}

TEST_CASE("equal_terms decides the equational theory on closed terms") {
  CHECK(equal_terms(mk_apply(hadamard(), mk_ket0()), ket_plus()));
  CHECK_FALSE(equal_terms(mk_ket0(), mk_ket1()));
  CHECK(equal_terms(mk_lincomb({{Scalar(1), mk_ket0()}}), mk_ket0()));
  CHECK_THROWS_AS(equal_terms(mk_ket0(), mk_zero()), Error);
}

TEST_CASE("structural unitaries evaluate by their rules") {
  auto h = hadamard();
  auto swap2 = mk_clauses({{mk_pair(mk_var("x"), mk_var("y")), mk_pair(mk_var("y"), mk_var("x"))}});

  // tensor
  auto ht = mk_utensor(h, h);
  auto v = normalize(mk_apply(ht, mk_pair(mk_ket0(), mk_ket1())));
  CHECK(close_to(v, {{0.5, mk_pair(mk_ket0(), mk_ket0())},
                     {-0.5, mk_pair(mk_ket0(), mk_ket1())},
                     {0.5, mk_pair(mk_ket1(), mk_ket0())},
                     {-0.5, mk_pair(mk_ket1(), mk_ket1())}}));

  // direct sum picks a side
  auto hs = mk_usum(h, h);
  auto vs = normalize(mk_apply(hs, mk_ascribe(mk_injl(mk_ket0()), ty_sum(ty_qbit(), ty_qbit()))));
  CHECK(close_to(vs, {{R2, mk_injl(mk_ket0())}, {R2, mk_injl(mk_ket1())}}));

  // composition applies right-to-left
  auto hc = mk_compose(h, h);
  CHECK(close_to(normalize(mk_apply(hc, mk_ket0())), {{Scalar(1), mk_ket0()}}));

  // swap as a one-clause abstraction
  auto sv = normalize(mk_apply(swap2, mk_pair(mk_ket0(), mk_ket1())));
  CHECK(close_to(sv, {{Scalar(1), mk_pair(mk_ket1(), mk_ket0())}}));

  // ctrl on a |0> head leaves the payload alone
  auto cv = normalize(mk_apply(mk_ctrl(h), mk_pair(mk_ket0(), mk_ket1())));
  CHECK(close_to(cv, {{Scalar(1), mk_pair(mk_ket0(), mk_ket1())}}));
}

TEST_CASE("normalize rejects ill-formed input") {
  CHECK_THROWS_AS(normalize(mk_lincomb({{Scalar(1), mk_ket0()}, {Scalar(1), mk_ket1()}})), Error);
  CHECK_THROWS_AS(normalize(mk_var("x")), Error);
}

TEST_CASE("property: unitary round trip on random values") {
  qclgen::Gen gen(20240811);
  int done = 0;
  for (int i = 0; i < 60; ++i) {
    auto q = gen.random_type(16);
    auto u = gen.random_unitary(q);
    auto t = gen.random_closed_term(q, 2);
    NormalValue v;
    try {
      v = normalize(t);
    } catch (const Error&) {
      continue;  // e.g. ambiguous generated shape; skip
    }
    UnitaryType uty{q, q};
    auto w = apply_unitary(u, v, uty);
    CHECK(std::abs(w.norm2() - 1.0) < 1e-7);
    auto back = apply_adjoint(u, w, uty);
    CHECK(nv_close(back, v));
    ++done;
  }
  CHECK(done > 30);
}

TEST_CASE("property: normal forms do not depend on the strategy") {
  // innermost evaluation vs term-level rule application at the root
  qclgen::Gen gen(777);
  for (int i = 0; i < 40; ++i) {
    auto q = gen.random_type(16);
    auto u1 = gen.random_unitary(q, 1);
    auto u2 = gen.random_unitary(q, 1);
    auto t = gen.random_closed_term(q, 2);
    // (u2 . u1) t evaluated as a whole vs stepwise u2 (u1 t)
    auto whole = mk_ascribe(mk_apply(mk_compose(u2, u1), t), q);
    auto stepwise = mk_ascribe(mk_apply(u2, mk_apply(u1, t)), q);
    NormalValue a, b;
    try {
      a = normalize(whole);
      b = normalize(stepwise);
    } catch (const Error&) {
      continue;
    }
    CHECK(nv_close(a, b));
    // adjoint unfolding: (u1 . u2)* t = u2* (u1* t)
    auto adj_whole = mk_ascribe(mk_apply(mk_adjoint(mk_compose(u1, u2)), t), q);
    auto adj_step = mk_ascribe(mk_apply(mk_adjoint(u2), mk_apply(mk_adjoint(u1), t)), q);
    NormalValue c, d;
    try {
      c = normalize(adj_whole);
      d = normalize(adj_step);
    } catch (const Error&) {
      continue;
    }
    CHECK(nv_close(c, d));
  }
}

TEST_CASE("property: normalization preserves the norm") {
  qclgen::Gen gen(99);
  for (int i = 0; i < 80; ++i) {
    auto q = gen.random_type(16);
    auto t = gen.random_closed_term(q, 3);
    NormalValue v;
    try {
      v = normalize(t);
    } catch (const Error&) {
      continue;
    }
    CHECK(std::abs(v.norm2() - 1.0) < 1e-7);
    // entries strictly increasing
    for (std::size_t k = 0; k + 1 < v.entries.size(); ++k)
      CHECK(term_cmp(v.entries[k].term, v.entries[k + 1].term) < 0);
  }
}
