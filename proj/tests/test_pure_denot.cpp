#include <catch2/catch_amalgamated.hpp>

#include "generators.hpp"
#include "qcl/pure_denot.hpp"

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

UnitaryExprPtr hadamard_qnat() {
  auto plus01 = mk_lincomb({{R2, mk_nat(0)}, {R2, mk_nat(1)}});
  auto minus01 = mk_lincomb({{R2, mk_nat(0)}, {-R2, mk_nat(1)}});
  auto tail = mk_succ(mk_succ(mk_var("x")));
  return mk_clauses({{mk_nat(0), plus01}, {mk_nat(1), minus01}, {tail, tail}});
}

bool mat_close(const ComplexMatrix& a, const ComplexMatrix& b, double eps = 1e-9) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a - b).max_abs() <= eps;
}

}  // namespace

TEST_CASE("hermitian eigenvalues: known cases and moment checks") {
  ComplexMatrix x(2, 2);
  x(0, 1) = 1;
  x(1, 0) = 1;
  auto ev = hermitian_eigenvalues(x);
  CHECK(ev[0] == Catch::Approx(-1.0));
  CHECK(ev[1] == Catch::Approx(1.0));

  ComplexMatrix y(2, 2);
  y(0, 0) = 2;
  y(1, 1) = 2;
  y(0, 1) = Scalar(0, 1);
  y(1, 0) = Scalar(0, -1);
  ev = hermitian_eigenvalues(y);
  CHECK(ev[0] == Catch::Approx(1.0));
  CHECK(ev[1] == Catch::Approx(3.0));

  // random Hermitian: eigenvalue moments must match trace moments
  qclgen::Gen gen(5);
  ComplexMatrix a(6, 6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) a(i, j) = gen.gauss_c();
  ComplexMatrix h = a + a.dagger();
  ev = hermitian_eigenvalues(h);
  double m1 = 0, m2 = 0;
  for (double l : ev) {
    m1 += l;
    m2 += l * l;
  }
  Scalar tr1(0);
  double tr2 = 0;
  for (std::size_t i = 0; i < 6; ++i) tr1 += h(i, i);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) tr2 += std::norm(h(i, j));
  CHECK(m1 == Catch::Approx(tr1.real()).margin(1e-8));
  CHECK(m2 == Catch::Approx(tr2).margin(1e-8));
}

TEST_CASE("interp_type dimensions and basis enumeration") {
  TruncationConfig cfg;
  CHECK(interp_type(ty_qbit(), cfg) == 2);
  CHECK(interp_type(ty_unit(), cfg) == 1);
  cfg.qnat_dim = 16;
  CHECK(interp_type(ty_tensor(ty_qbit(), ty_qnat()), cfg) == 32);

  // enumeration round trip, and its agreement with the basis order
  auto q = ty_tensor(ty_sum(ty_unit(), ty_qbit()), ty_qbit());
  std::size_t d = interp_type(q, cfg);
  for (std::size_t i = 0; i < d; ++i) {
    auto b = basis_value_at(i, q, cfg);
    CHECK(basis_index(b, q, cfg) == i);
    if (i + 1 < d) CHECK(term_cmp(b, basis_value_at(i + 1, q, cfg)) < 0);
  }

  TruncationConfig tiny{2, 7, false};
  CHECK_THROWS_MATCHES(interp_type(ty_tensor(ty_qbit(), ty_tensor(ty_qbit(), ty_qbit())), tiny),
                       Error, Catch::Matchers::MessageMatches(
                                  Catch::Matchers::ContainsSubstring("E-DIM-CAP")));
}

TEST_CASE("interp_term on the spec's examples") {
  TruncationConfig cfg;
  // Bell state column
  auto bell = mk_lincomb({{R2, mk_pair(mk_ket0(), mk_ket0())}, {R2, mk_pair(mk_ket1(), mk_ket1())}});
  auto col = interp_term(PureContext{}, bell, cfg);
  REQUIRE(col.rows() == 4);
  REQUIRE(col.cols() == 1);
  CHECK(std::abs(col(0, 0) - Scalar(R2)) < 1e-12);
  CHECK(std::abs(col(1, 0)) < 1e-12);
  CHECK(std::abs(col(2, 0)) < 1e-12);
  CHECK(std::abs(col(3, 0) - Scalar(R2)) < 1e-12);

  // a variable denotes the identity
  PureContext ctx;
  ctx.vars.push_back({"x", ty_tensor(ty_qbit(), ty_qbit())});
  CHECK(mat_close(interp_term(ctx, mk_var("x"), cfg), ComplexMatrix::identity(4)));

  // qnat literal embeds as a basis column
  TruncationConfig d4{4, 4096, false};
  auto two = interp_term(PureContext{}, mk_nat(2), d4);
  REQUIRE(two.rows() == 4);
  CHECK(std::abs(two(2, 0) - Scalar(1)) < 1e-12);

  // numeral past the truncation
  CHECK_THROWS_MATCHES(interp_term(PureContext{}, mk_nat(4), d4), Error,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("E-TRUNC-OVERFLOW")));
}

TEST_CASE("interp_unitary on the example gates") {
  TruncationConfig cfg;
  auto h = interp_unitary(hadamard(), cfg);
  REQUIRE(h.rows() == 2);
  CHECK(std::abs(h(0, 0) - Scalar(R2)) < 1e-12);
  CHECK(std::abs(h(0, 1) - Scalar(R2)) < 1e-12);
  CHECK(std::abs(h(1, 0) - Scalar(R2)) < 1e-12);
  CHECK(std::abs(h(1, 1) + Scalar(R2)) < 1e-12);

  // CNOT in basis order 00,01,10,11
  auto c = interp_unitary(cnot(), cfg);
  ComplexMatrix expect(4, 4);
  expect(0, 0) = expect(1, 1) = expect(2, 3) = expect(3, 2) = Scalar(1);
  CHECK(mat_close(c, expect));

  // ctrl u = blockdiag(I, [u])
  auto cu = interp_unitary(mk_ctrl(hadamard()), cfg);
  CHECK(mat_close(cu, ComplexMatrix::identity(2).direct_sum(h)));
}

TEST_CASE("truncation behaviour of qnat unitaries") {
  TruncationConfig cfg{8, 4096, false};
  // the basis conditions pin the successor depth of the variable tail, so a
  // well-formed clause unitary never shifts indices: exact at any truncation
  // that holds its numerals
  std::vector<std::string> warns;
  auto hq = interp_unitary(hadamard_qnat(), cfg, &warns);
  CHECK(warns.empty());
  CHECK(hq.is_unitary(1e-9));

  auto swap01 = mk_clauses({{mk_zero(), mk_nat(1)},
                            {mk_nat(1), mk_nat(0)},
                            {mk_succ(mk_succ(mk_var("x"))), mk_succ(mk_succ(mk_var("x")))}});
  warns.clear();
  (void)interp_unitary(swap01, cfg, &warns);
  CHECK(warns.empty());

  // a successor-like shifter is rejected by formation: its bodies cannot
  // decompose qnat
  auto succ_like = mk_clauses({{mk_var("x"), mk_succ(mk_var("x"))}});
  CHECK_THROWS_MATCHES(
      interp_unitary(succ_like, cfg, nullptr, UnitaryType{ty_qnat(), ty_qnat()}), Error,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("E-NOT-ONB-EXT")));

  // a truncation smaller than the clause numerals clips the matrix
  TruncationConfig d1{1, 4096, false};
  warns.clear();
  (void)interp_unitary(hadamard_qnat(), d1, &warns);
  CHECK(warns.size() == 1);

  TruncationConfig strict = d1;
  strict.strict = true;
  CHECK_THROWS_MATCHES(interp_unitary(hadamard_qnat(), strict), Error,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("E-TRUNC-BOUNDARY")));
}

TEST_CASE("synth_monoidal_unitary produces the expected abstractions") {
  TruncationConfig cfg;
  auto q1 = ty_qbit(), q2 = ty_tensor(ty_qbit(), ty_qbit());

  // swap
  auto sw = synth_monoidal_unitary({q1, q2}, {1, 0});
  auto ty = typecheck_unitary(sw);
  CHECK(type_equal(ty.domain, ty_tensor(q1, q2)));
  CHECK(type_equal(ty.codomain, ty_tensor(q2, q1)));
  auto m = interp_unitary(sw, cfg);
  // |a>|bc> -> |bc>|a>
  auto in = value_vector(normalize(mk_pair(mk_ket1(), mk_pair(mk_ket0(), mk_ket1()))),
                         ty_tensor(q1, q2), cfg);
  auto out = value_vector(normalize(mk_pair(mk_pair(mk_ket0(), mk_ket1()), mk_ket1())),
                          ty_tensor(q2, q1), cfg);
  CHECK(mat_close(m * in, out));

  // unit elimination
  auto drop = synth_monoidal_unitary({ty_unit(), q1}, {1});
  auto mt = interp_unitary(drop, cfg);
  REQUIRE(mt.rows() == 2);
  REQUIRE(mt.cols() == 2);
  CHECK(mat_close(mt, ComplexMatrix::identity(2)));

  // identity
  auto ident = synth_monoidal_unitary({q2}, {0});
  CHECK(mat_close(interp_unitary(ident, cfg), ComplexMatrix::identity(4)));

  // the permutation matrix agrees with the factor_permutation it encodes
  auto q3 = ty_qnat();
  TruncationConfig d3{3, 4096, false};
  auto perm = synth_monoidal_unitary({q1, q3, q2}, {2, 0, 1});
  auto mp = interp_unitary(perm, d3);
  CHECK(mp.is_unitary(1e-9));
}

TEST_CASE("property: well-formed terms denote isometries") {
  qclgen::Gen gen(4242);
  TruncationConfig cfg{8, 4096, false};
  int done = 0;
  for (int i = 0; i < 60; ++i) {
    auto q = gen.random_type(64);
    auto t = gen.random_closed_term(q, 3);
    try {
      auto m = interp_term(PureContext{}, t, cfg);
      CHECK(m.is_isometry(1e-8));
      ++done;
    } catch (const Error&) {
      continue;  // truncation overflow in a generated numeral etc.
    }
  }
  CHECK(done > 30);
}

TEST_CASE("property: well-formed unitaries denote unitaries") {
  qclgen::Gen gen(31337);
  TruncationConfig cfg{8, 4096, false};
  int done = 0;
  for (int i = 0; i < 40; ++i) {
    auto q = gen.random_type(64);
    auto u = gen.random_unitary(q);
    std::vector<std::string> warns;
    auto m = interp_unitary(u, cfg, &warns, UnitaryType{q, q});
    if (!warns.empty()) continue;
    CHECK(m.is_unitary(1e-8));
    ++done;
  }
  CHECK(done > 25);
}

TEST_CASE("property: syntactic orthogonality is semantic orthogonality") {
  qclgen::Gen gen(777);
  TruncationConfig cfg{8, 4096, false};
  for (int i = 0; i < 60; ++i) {
    auto q = gen.random_type(32);
    auto t1 = gen.random_closed_term(q, 2);
    auto t2 = gen.random_closed_term(q, 2);
    if (!orthogonal(t1, t2)) continue;
    try {
      auto m1 = interp_term(PureContext{}, t1, cfg);
      auto m2 = interp_term(PureContext{}, t2, cfg);
      CHECK((m1.dagger() * m2).max_abs() < 1e-8);
    } catch (const Error&) {
      continue;
    }
  }
}

TEST_CASE("orthogonal decompositions resolve the identity") {
  TruncationConfig cfg;
  // closed case
  std::vector<PureTermPtr> s1 = {ket_plus(), ket_minus()};
  REQUIRE(check_onb_ext(ty_qbit(), s1));
  ComplexMatrix sum(2, 2);
  for (auto& e : s1) {
    auto m = interp_term(PureContext{}, e, cfg);
    sum = sum + m * m.dagger();
  }
  CHECK(mat_close(sum, ComplexMatrix::identity(2)));

  // with pattern variables: the CNOT pattern set
  auto pats = std::vector<PureTermPtr>{mk_pair(mk_ket1(), mk_ket0()), mk_pair(mk_ket1(), mk_ket1()),
                                       mk_pair(mk_ket0(), mk_var("x"))};
  REQUIRE(check_onb(ty_tensor(ty_qbit(), ty_qbit()), pats));
  ComplexMatrix sum2(4, 4);
  for (auto& p : pats) {
    PureContext ctx;
    for (auto& v : free_var_set(p)) ctx.vars.push_back({v, ty_qbit()});
    auto m = interp_term(ctx, p, cfg);
    sum2 = sum2 + m * m.dagger();
  }
  CHECK(mat_close(sum2, ComplexMatrix::identity(4)));
}

TEST_CASE("substitution is composition in the model") {
  TruncationConfig cfg;
  // t = x (x) Had y under x:qbit, y:qbit
  PureContext ctx;
  ctx.vars.push_back({"x", ty_qbit()});
  ctx.vars.push_back({"y", ty_qbit()});
  auto t = mk_pair(mk_var("x"), mk_apply(hadamard(), mk_var("y")));
  auto mt = interp_term(ctx, t, cfg);

  auto e1 = ket_plus();
  auto e2 = mk_ket1();
  Valuation sigma{{"x", e1}, {"y", e2}};
  auto lhs = interp_term(PureContext{}, substitute(sigma, t), cfg);
  auto rhs = mt * interp_term(PureContext{}, e1, cfg).kron(interp_term(PureContext{}, e2, cfg));
  CHECK(mat_close(lhs, rhs));
}

TEST_CASE("property: evaluation agrees with the matrix semantics") {
  qclgen::Gen gen(2025);
  TruncationConfig cfg{8, 4096, false};
  int done = 0;
  for (int i = 0; i < 50; ++i) {
    auto q = gen.random_type(32);
    auto t = gen.random_closed_term(q, 3);
    try {
      auto direct = interp_term(PureContext{}, t, cfg);
      auto via_nf = value_vector(normalize(t), q, cfg);
      CHECK(mat_close(direct, via_nf, 1e-8));
      ++done;
    } catch (const Error&) {
      continue;
    }
  }
  CHECK(done > 25);
}

TEST_CASE("property: forward application matches the matrix product") {
  qclgen::Gen gen(91);
  TruncationConfig cfg{8, 4096, false};
  for (int i = 0; i < 40; ++i) {
    auto q = gen.random_type(32);
    auto u = gen.random_unitary(q);
    auto t = gen.random_closed_term(q, 2);
    try {
      std::vector<std::string> warns;
      auto mu = interp_unitary(u, cfg, &warns, UnitaryType{q, q});
      if (!warns.empty()) continue;
      auto v = normalize(t);
      auto lhs = value_vector(apply_unitary(u, v, UnitaryType{q, q}), q, cfg);
      auto rhs = mu * value_vector(v, q, cfg);
      CHECK(mat_close(lhs, rhs, 1e-8));
    } catch (const Error&) {
      continue;
    }
  }
}
