#include "rw/heat.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace rw;

namespace {

TermSum random_sum(std::mt19937 &rng, bool with_gaussian = true)
{
	TermSum s;
	for (int t = 0; t < 6; ++t)
	{
		HeatKey k;
		k.t_half = int(rng() % 7) - 3;
		for (int i = 0; i < 3; ++i) k.upow[i] = uint8_t(rng() % 3);
		k.gaussian = with_gaussian && (rng() % 2);
		k.du_mask = uint8_t(rng() % 8);
		k.omega = (rng() % 3 == 0) ? int8_t(rng() % 3) : int8_t(-1);
		long long c = (long long)(rng() % 15) - 7;
		if (c) s.add(k, Rat(c, 1 + int(rng() % 3)));
	}
	return s;
}

} // namespace

TEST_CASE("flat heat operator annihilates the flat Gaussian kernel")
{
	CHECK(apply_heat_flat_leading(flat_gaussian_kernel()).empty());
	// any constant multiple too
	CHECK(apply_heat_flat_leading(Rat(7, 3) * flat_gaussian_kernel()).empty());
}

TEST_CASE("leading heat operator annihilates (K_t)[0] termwise")
{
	TermSum r = apply_heat_operator_leading(kt_leading());
	CHECK(r.empty());
}

TEST_CASE("the curvature part of (K_t)[0] alone compensates at t^{-3/2}")
{
	// the Omega piece of the kernel maps to +t^{-3/2} times itself under the
	// Gaussian part of the operator, which the contraction term then cancels
	TermSum omega_part = kt_leading() - flat_gaussian_kernel();
	TermSum flat_applied = apply_heat_flat_leading(omega_part);
	TermSum expected;
	for (auto &[k, c] : omega_part.terms())
	{
		HeatKey nk = k;
		nk.t_half -= 2;
		expected.add(nk, c);
	}
	CHECK(flat_applied == expected);
}

TEST_CASE("d* leading term of (K_t)[0] matches the displayed formula")
{
	CHECK(apply_dstar_leading(kt_leading()) == dstar_kt_expected());
	// a pure function term (no du) dies under the contraction
	TermSum f;
	HeatKey k;
	k.t_half = -1;
	k.gaussian = true;
	k.upow[1] = 2;
	f.add(k, Rat(3));
	CHECK(apply_dstar_leading(f).empty());
	// linearity over sums
	std::mt19937 rng(10);
	for (int t = 0; t < 8; ++t)
	{
		TermSum a = random_sum(rng), b = random_sum(rng);
		CHECK(apply_dstar_leading(a + b) ==
		      apply_dstar_leading(a) + apply_dstar_leading(b));
	}
}

TEST_CASE("vanishing filter")
{
	// (p, r) = (-3, 3) is kept
	CHECK(vanishing_violations(flat_gaussian_kernel()).empty());
	CHECK(vanishing_filter(flat_gaussian_kernel()) == flat_gaussian_kernel());
	// synthetic (p, r) = (-3, 2) violates the bound
	TermSum bad;
	HeatKey k;
	k.t_half = -3;
	k.gaussian = true;
	k.du_mask = 0b011;
	bad.add(k, Rat(1));
	CHECK_FALSE(vanishing_violations(bad).empty());
	CHECK(vanishing_filter(bad).empty());
	// empty in, empty out
	CHECK(vanishing_filter(TermSum{}).empty());
	// everything the recursion produces respects the bound
	CHECK(vanishing_violations(kt_leading()).empty());
	CHECK(vanishing_violations(apply_dstar_leading(kt_leading())).empty());
}

TEST_CASE("degree bookkeeping: both leading operators drop total degree by 2")
{
	std::mt19937 rng(11);
	for (int t = 0; t < 15; ++t)
	{
		TermSum s = random_sum(rng);
		for (auto &[k0, c0] : s.terms())
		{
			TermSum single;
			single.add(k0, c0);
			int d0 = k0.total_degree();
			for (auto &[k, c] : apply_heat_operator_leading(single).terms())
				CHECK(k.total_degree() == d0 - 2);
			for (auto &[k, c] : apply_dstar_leading(single).terms())
				CHECK(k.total_degree() == d0 - 2);
		}
	}
}

TEST_CASE("boundary limits")
{
	double sp = std::sqrt(M_PI);
	auto [a, b] = boundary_limit(1e-3, 1.0);
	CHECK(std::abs(a - sp) < 1e-3);
	CHECK(std::abs(b - sp) < 1e-3);
	// strictly below the limit at r = L
	auto [c, d] = boundary_limit(1.0, 1.0);
	CHECK(c < sp);
	CHECK(d < sp);
	// Gaussian suppression at large r
	auto [e, f] = boundary_limit(50.0, 1.0);
	CHECK(std::abs(e) < 1e-12);
	CHECK(std::abs(f) < 1e-12);
	// monotone decreasing in r on a grid
	double prev1 = sp, prev2 = sp;
	for (double r : {0.01, 0.1, 0.3, 0.7, 1.0, 2.0})
	{
		auto [v1, v2] = boundary_limit(r, 1.0);
		CHECK(v1 <= prev1 + 1e-12);
		CHECK(v2 <= prev2 + 1e-12);
		prev1 = v1;
		prev2 = v2;
	}
	CHECK_THROWS_AS(boundary_limit(-1.0, 1.0), ValidationError);
	CHECK_THROWS_AS(boundary_limit(1.0, 0.0), ValidationError);
}

TEST_CASE("fiber sphere integral")
{
	CHECK(std::abs(fiber_sphere_integral() - 1.0) < 1e-6);
	// linear in the integrand
	CHECK(std::abs(fiber_sphere_integral(-7.5) + 7.5) < 1e-5);
	// antipodally odd scalar integrates to zero
	CHECK(std::abs(sphere_scalar_integral([](double x, double, double) { return x; })) < 1e-9);
	CHECK(std::abs(sphere_scalar_integral([](double, double, double z) { return z; })) < 1e-9);
	// and the constant 1 gives the area
	CHECK(std::abs(sphere_scalar_integral([](double, double, double) { return 1.0; }) -
	               4 * M_PI) < 1e-6);
}
