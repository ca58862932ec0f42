#include "rw/bv.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace rw;

namespace {

Poly monomial(int nvars, std::vector<uint8_t> exps, BigRat c, int hbar = 0)
{
	Poly p(nvars);
	PolyKey k;
	k.exps = std::move(exps);
	k.hbar = hbar;
	p.add(k, std::move(c));
	return p;
}

Poly random_poly(int nvars, std::vector<int> const &parity, std::mt19937 &rng, int terms = 6,
                 int max_hbar = 1)
{
	Poly p(nvars);
	for (int t = 0; t < terms; ++t)
	{
		PolyKey k;
		for (int i = 0; i < nvars; ++i)
			k.exps.push_back(uint8_t(parity[i] ? rng() % 2 : rng() % 4));
		k.hbar = int(rng() % (max_hbar + 1));
		long long c = (long long)(rng() % 19) - 9;
		if (c) p.add(k, BigRat(bigint(c), bigint(1 + int(rng() % 4))));
	}
	return p;
}

} // namespace

TEST_CASE("kernel contraction basics")
{
	std::vector<int> par{0};
	Kernel P = Kernel::zero(1);
	BigRat p(5, 7);
	P.coef[0][0] = p;
	// linear functionals die (two slots needed)
	CHECK(kernel_contract(P, monomial(1, {1}, BigRat(3)), par).is_zero());
	// d_P (x^4/24) = p x^2/4
	Poly F = monomial(1, {4}, BigRat(1, 24));
	CHECK(kernel_contract(P, F, par) == monomial(1, {2}, p * BigRat(1, 4)));
	// second-order Leibniz defect reproduces the bracket
	std::mt19937 rng(1);
	for (int t = 0; t < 10; ++t)
	{
		Poly A = parity_part(random_poly(1, par, rng), par, 0);
		Poly B = random_poly(1, par, rng);
		Poly defect = kernel_contract(P, poly_mul(A, B, par), par) -
		              poly_mul(kernel_contract(P, A, par), B, par) -
		              poly_mul(A, kernel_contract(P, B, par), par);
		CHECK(defect == bv_bracket(P, A, B, par));
	}
}

TEST_CASE("BV laplacian: nilpotence for odd symmetric kernels")
{
	std::vector<int> par{0, 1};
	Kernel K = Kernel::zero(2);
	K.coef[0][1] = K.coef[1][0] = BigRat(1);
	K.validate(ToySpace{{"x", "th"}, {0, 1}, {}});
	CHECK(bv_laplacian(K, Poly::scalar(2, BigRat(4)), par).is_zero());
	std::mt19937 rng(2);
	for (int t = 0; t < 20; ++t)
	{
		Poly F = random_poly(2, par, rng, 8);
		CHECK(bv_laplacian(K, bv_laplacian(K, F, par), par).is_zero());
	}
}

TEST_CASE("BV bracket identities")
{
	std::vector<int> par{0, 1};
	Kernel K = Kernel::zero(2);
	K.coef[0][1] = K.coef[1][0] = BigRat(2, 3);
	std::mt19937 rng(3);

	// {x^2, x^2} = 4 k x^2 for an even kernel entry
	{
		std::vector<int> pe{0};
		Kernel Ke = Kernel::zero(1);
		BigRat k(7, 5);
		Ke.coef[0][0] = k;
		Poly x2 = monomial(1, {2}, BigRat(1));
		CHECK(bv_bracket(Ke, x2, x2, pe) == monomial(1, {2}, BigRat(4) * k));
	}

	// {F, const} = 0
	for (int t = 0; t < 5; ++t)
		CHECK(bv_bracket(K, random_poly(2, par, rng), Poly::scalar(2, BigRat(9)), par)
		          .is_zero());

	// graded symmetry: {F,G} = -(-1)^{(|F|+1)(|G|+1)} {G,F}
	for (int t = 0; t < 10; ++t)
	{
		int pf = int(rng() % 2), pg = int(rng() % 2);
		Poly F = parity_part(random_poly(2, par, rng), par, pf);
		Poly G = parity_part(random_poly(2, par, rng), par, pg);
		Poly lhs = bv_bracket(K, F, G, par);
		Poly rhs = bv_bracket(K, G, F, par);
		int sign = -(((pf + 1) * (pg + 1)) % 2 ? 1 : -1);
		CHECK(lhs == BigRat(sign) * rhs);
	}

	// graded Leibniz: {F, GH} = {F,G}H + (-1)^{(|F|+1)|G|} G{F,H}
	for (int t = 0; t < 10; ++t)
	{
		int pf = int(rng() % 2), pg = int(rng() % 2);
		Poly F = parity_part(random_poly(2, par, rng, 4), par, pf);
		Poly G = parity_part(random_poly(2, par, rng, 4), par, pg);
		Poly H = random_poly(2, par, rng, 4);
		Poly lhs = bv_bracket(K, F, poly_mul(G, H, par), par);
		Poly rhs = poly_mul(bv_bracket(K, F, G, par), H, par);
		Poly cross = poly_mul(G, bv_bracket(K, F, H, par), par);
		rhs += BigRat(((pf + 1) * pg) % 2 ? -1 : 1) * cross;
		CHECK(lhs == rhs);
	}

	// graded Jacobi: {F,{G,H}} = {{F,G},H} + (-1)^{(|F|+1)(|G|+1)} {G,{F,H}}
	for (int t = 0; t < 10; ++t)
	{
		int pf = int(rng() % 2), pg = int(rng() % 2), ph = int(rng() % 2);
		Poly F = parity_part(random_poly(2, par, rng, 4), par, pf);
		Poly G = parity_part(random_poly(2, par, rng, 4), par, pg);
		Poly H = parity_part(random_poly(2, par, rng, 4), par, ph);
		Poly lhs = bv_bracket(K, F, bv_bracket(K, G, H, par), par);
		Poly rhs = bv_bracket(K, bv_bracket(K, F, G, par), H, par);
		Poly cross = bv_bracket(K, G, bv_bracket(K, F, H, par), par);
		rhs += BigRat(((pf + 1) * (pg + 1)) % 2 ? -1 : 1) * cross;
		CHECK(lhs == rhs);
	}
}

TEST_CASE("antisymmetric even pairing kills self-contractions")
{
	// toy mirror of the self-loop vanishing: contracting one slot pair of any
	// functional with an antisymmetric matrix on even generators gives zero
	std::vector<int> par{0, 0};
	Kernel omega = Kernel::zero(2); // NOT graded-symmetric: a raw pairing
	omega.coef[0][1] = BigRat(1);
	omega.coef[1][0] = BigRat(-1);
	std::mt19937 rng(4);
	for (int t = 0; t < 15; ++t)
		CHECK(kernel_contract(omega, random_poly(2, par, rng, 8), par).is_zero());
}

TEST_CASE("RG flow: empty propagator, pinned tree coefficient, dual routes")
{
	std::vector<int> par{0};
	Poly I = monomial(1, {3}, BigRat(1, 6));
	Kernel zero = Kernel::zero(1);
	CHECK(rg_flow_exponential(zero, I, par, 3, 9) == I);
	CHECK(rg_flow_graphs(zero, I, par, 3, 9) == I);

	Kernel P = Kernel::zero(1);
	BigRat p(5, 7);
	P.coef[0][0] = p;
	Poly W = rg_flow(P, I, par, 3, 4);
	// tree-level x^4 coefficient is p/8 (two cubic vertices, one edge,
	// |Aut| = 2 * 2! * 2! = 8)
	CHECK(W.component(0, 4) == monomial(1, {4}, p * BigRat(1, 8)));
	// one-loop x^2 and two-loop constants from the same expansion
	CHECK(W.component(1, 2) == monomial(1, {2}, p * p * BigRat(1, 2), 1));
	CHECK(W.component(2, 0) == monomial(1, {0}, p * p * p * BigRat(5, 24), 2));
}

TEST_CASE("RG flow routes agree on graded fixtures")
{
	// x even, th/et odd, with an hbar-linear component
	std::vector<int> par{0, 1, 1};
	Poly I(3);
	I += monomial(3, {1, 1, 1}, BigRat(1));
	I += monomial(3, {3, 0, 0}, BigRat(1, 6));
	I += monomial(3, {1, 0, 0}, BigRat(2, 7), 1);
	Kernel P = Kernel::zero(3);
	P.coef[0][0] = BigRat(2, 3);
	P.coef[1][2] = BigRat(1, 5);
	P.coef[2][1] = BigRat(-1, 5);
	CHECK(rg_flow_exponential(P, I, par, 3, 3) == rg_flow_graphs(P, I, par, 3, 3));
	CHECK(rg_flow_exponential(P, I, par, 2, 4) == rg_flow_graphs(P, I, par, 2, 4));

	// four generators, quartic terms, both parities in the propagator
	std::vector<int> par4{0, 0, 1, 1};
	Poly I4(4);
	I4 += monomial(4, {2, 1, 0, 0}, BigRat(1, 2));
	I4 += monomial(4, {1, 0, 1, 1}, BigRat(3, 4));
	I4 += monomial(4, {4, 0, 0, 0}, BigRat(1, 24));
	I4 += monomial(4, {0, 1, 1, 1}, BigRat(-2, 5));
	I4 += monomial(4, {0, 2, 0, 0}, BigRat(1, 3), 1);
	Kernel P4 = Kernel::zero(4);
	P4.coef[0][0] = BigRat(1, 2);
	P4.coef[0][1] = P4.coef[1][0] = BigRat(-1, 3);
	P4.coef[2][3] = BigRat(2, 7);
	P4.coef[3][2] = BigRat(-2, 7);
	CHECK(rg_flow_exponential(P4, I4, par4, 2, 3) == rg_flow_graphs(P4, I4, par4, 2, 3));
}

TEST_CASE("RG semigroup under kernel splits")
{
	std::vector<int> par{0, 0};
	std::mt19937 rng(5);
	for (int trial = 0; trial < 5; ++trial)
	{
		// random cubic interaction over two even generators
		Poly I(2);
		for (int a = 0; a <= 3; ++a)
		{
			long long c = (long long)(rng() % 13) - 6;
			if (c) I += monomial(2, {uint8_t(3 - a), uint8_t(a)}, BigRat(bigint(c), bigint(6)));
		}
		if (I.is_zero()) I = monomial(2, {3, 0}, BigRat(1, 6));
		Kernel P1 = Kernel::zero(2), P2 = Kernel::zero(2);
		auto rnd = [&]() { return BigRat(bigint((long long)(rng() % 9) - 4), bigint(1 + int(rng() % 3))); };
		P1.coef[0][0] = rnd();
		P1.coef[1][1] = rnd();
		P1.coef[0][1] = P1.coef[1][0] = rnd();
		P2.coef[0][0] = rnd();
		P2.coef[1][1] = rnd();
		P2.coef[0][1] = P2.coef[1][0] = rnd();
		// W(P1+P2, I) = W(P2, W(P1, I)); the inner flow needs a window wide
		// enough to feed every graph that lands in the outer one
		Poly lhs = rg_flow_exponential(P1 + P2, I, par, 3, 3);
		Poly inner = rg_flow_exponential(P1, I, par, 3, 13);
		Poly rhs = rg_flow_exponential(P2, inner, par, 3, 3);
		CHECK(lhs == rhs);
	}
}

TEST_CASE("QME residual and the compatibility identity")
{
	// x even, th odd; Q x = th; odd kernel K
	ToySpace sp;
	sp.names = {"x", "th"};
	sp.parity = {0, 1};
	auto par = sp.parity;
	OddOperator Q;
	Q.mat = {{BigRat(0), BigRat(1)}, {BigRat(0), BigRat(0)}};
	Q.validate(sp);
	Kernel K = Kernel::zero(2);
	K.coef[0][1] = K.coef[1][0] = BigRat(1);

	// fixture solving the classical master equation by construction: curving
	// cancels Q(I) + (1/2){I,I} at hbar^0, leaving exactly hbar Delta(I)
	Poly I0 = monomial(2, {2, 1}, BigRat(1, 2)) + monomial(2, {3, 0}, BigRat(1, 6));
	Poly curv = BigRat(-1) * (Q.apply(I0, par) +
	                          BigRat(1, 2) * bv_bracket(K, I0, I0, par));
	Poly residual = qme_residual(Q, I0, K, curv, par, 3);
	CHECK(residual.truncate(0).is_zero());
	CHECK_FALSE(residual.is_zero()); // Delta(I) = x survives at order hbar
	CHECK(residual == bv_laplacian(K, I0, par).shift_hbar(1));

	// fixture with every ingredient vanishing solves the QME outright
	Poly flat = monomial(2, {0, 1}, BigRat(1));
	CHECK(qme_residual(Q, flat, K, Poly(2), par, 3).is_zero());

	// compatibility: (Q + hbar Delta_{K_L}) e^{hbar d_P} = e^{hbar d_P} (Q + hbar Delta_{K_eps})
	// with Q(P) = K_eps - K_L
	ToySpace sp4;
	sp4.names = {"x", "th", "y", "et"};
	sp4.parity = {0, 1, 0, 1};
	auto par4 = sp4.parity;
	Kernel P = Kernel::zero(4);
	P.coef[0][0] = BigRat(2, 3);
	P.coef[0][2] = P.coef[2][0] = BigRat(1, 2);
	P.coef[1][3] = BigRat(1, 5);
	P.coef[3][1] = BigRat(-1, 5);
	OddOperator Q4;
	Q4.mat.assign(4, std::vector<BigRat>(4, BigRat(0)));
	Q4.mat[0][1] = BigRat(1);
	Q4.mat[2][3] = BigRat(3);
	Q4.mat[1][0] = BigRat(5);
	Kernel KL = Kernel::zero(4);
	KL.coef[0][1] = KL.coef[1][0] = BigRat(7, 4);
	KL.coef[2][3] = KL.coef[3][2] = BigRat(-2, 9);
	Kernel QP = Q4.apply(P, sp4);
	QP.validate(sp4); // Q(P) of a graded-symmetric kernel stays graded-symmetric
	Kernel KE = KL + QP;
	std::mt19937 rng(6);
	for (int t = 0; t < 10; ++t)
	{
		Poly X = random_poly(4, par4, rng, 6, 1);
		Poly lhs = Q4.apply(exp_contract(P, X, par4), par4) +
		           bv_laplacian(KL, exp_contract(P, X, par4), par4).shift_hbar(1);
		Poly rhs = exp_contract(
		    P, Q4.apply(X, par4) + bv_laplacian(KE, X, par4).shift_hbar(1), par4);
		CHECK(lhs == rhs);
	}
}

TEST_CASE("validation")
{
	std::vector<int> par{0, 1};
	// non-homogeneous kernels are rejected by the flow
	Kernel mixed = Kernel::zero(2);
	mixed.coef[0][0] = BigRat(1);
	mixed.coef[0][1] = mixed.coef[1][0] = BigRat(1);
	Poly I = monomial(2, {3, 0}, BigRat(1, 6));
	CHECK_THROWS_AS(rg_flow_exponential(mixed, I, par, 2, 3), ValidationError);
	// quadratic hbar^0 interactions are rejected
	Kernel P = Kernel::zero(2);
	CHECK_THROWS_AS(rg_flow_exponential(P, monomial(2, {2, 0}, BigRat(1)), par, 2, 3),
	                ValidationError);
	// parity-odd operator validation
	ToySpace sp;
	sp.names = {"x", "th"};
	sp.parity = {0, 1};
	OddOperator bad;
	bad.mat = {{BigRat(1), BigRat(0)}, {BigRat(0), BigRat(0)}};
	CHECK_THROWS_AS(bad.validate(sp), ValidationError);
	// graded symmetry of kernels
	Kernel ugly = Kernel::zero(2);
	ugly.coef[0][1] = BigRat(1);
	ugly.coef[1][0] = BigRat(-1);
	CHECK_THROWS_AS(ugly.validate(sp), ValidationError);
}
