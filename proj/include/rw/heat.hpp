#pragma once

#include "rw/fraction.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace rw {

/**
 * Symbolic term of the heat-kernel asymptotics at the flat-at-a-point chart
 * (g = id, vanishing Christoffels): rational coefficient x t^{t_half/2} x
 * monomial in u^0,u^1,u^2 x optional Gaussian e^{-|u|^2/4t} x wedge monomial
 * in du^0,du^1,du^2 x at most one abstract curvature 2-form slot Omega^i_j
 * (two slots exceed form degree 3 on a 3-manifold and vanish).  Omega is
 * normalized to i < j with the antisymmetry sign absorbed; the norm follows
 * the geodesic convention |u|^2 = 4 sum_i (u^i)^2, so d/du^i of the Gaussian
 * is -(2 u^i / t) times it.
 */
struct HeatKey {
	int t_half = 0;                 // exponent of t^{1/2}
	std::array<uint8_t, 3> upow{};  // u-monomial
	bool gaussian = false;
	uint8_t du_mask = 0;            // wedge of du^i
	int8_t omega = -1;              // -1 none, else pair index: 0:(0,1) 1:(0,2) 2:(1,2)

	friend auto operator<=>(HeatKey const &, HeatKey const &) = default;

	int u_degree() const { return upow[0] + upow[1] + upow[2]; }
	int du_degree() const { return std::popcount(unsigned(du_mask)); }
	/** the (p, r) bidegree: p in (t^{1/2}, u), r in du */
	int p_degree() const { return t_half + u_degree(); }
	/** total degree of the asymptotic grading */
	int total_degree() const { return p_degree() + du_degree(); }
};

inline int omega_pair_code(int i, int j, int &sign)
{
	sign = 1;
	if (i == j) return -2;
	if (i > j)
	{
		std::swap(i, j);
		sign = -1;
	}
	if (i == 0) return j == 1 ? 0 : 1;
	return 2;
}

/** finite sum of heat-asymptotics terms with exact coefficients */
class TermSum
{
  public:
	std::map<HeatKey, Rat> const &terms() const { return terms_; }
	bool empty() const { return terms_.empty(); }

	void add(HeatKey const &k, Rat c)
	{
		if (c.is_zero()) return;
		auto it = terms_.find(k);
		if (it == terms_.end())
			terms_.emplace(k, c);
		else
		{
			it->second += c;
			if (it->second.is_zero()) terms_.erase(it);
		}
	}

	TermSum &operator+=(TermSum const &o)
	{
		for (auto &[k, c] : o.terms_) add(k, c);
		return *this;
	}
	TermSum &operator-=(TermSum const &o)
	{
		for (auto &[k, c] : o.terms_) add(k, -c);
		return *this;
	}
	friend TermSum operator+(TermSum a, TermSum const &b) { return a += b; }
	friend TermSum operator-(TermSum a, TermSum const &b) { return a -= b; }
	friend TermSum operator*(Rat c, TermSum a)
	{
		if (c.is_zero()) return TermSum{};
		for (auto &[k, v] : a.terms_) v *= c;
		return a;
	}
	friend bool operator==(TermSum const &a, TermSum const &b)
	{
		return a.terms_ == b.terms_;
	}

  private:
	std::map<HeatKey, Rat> terms_;
};

namespace heat_detail {

/** d/dt: acts on the t-power and, via |u|^2/4t^2, on the Gaussian */
inline TermSum d_t(TermSum const &s)
{
	TermSum r;
	for (auto &[k, c] : s.terms())
	{
		if (k.t_half != 0)
		{
			HeatKey nk = k;
			nk.t_half -= 2;
			r.add(nk, Rat(k.t_half, 2) * c);
		}
		if (k.gaussian)
		{
			// |u|^2/(4 t^2) = sum (u^i)^2 / t^2 under |u|^2 = 4 g_ij u^i u^j
			for (int i = 0; i < 3; ++i)
			{
				HeatKey nk = k;
				nk.t_half -= 4;
				nk.upow[i] = uint8_t(nk.upow[i] + 2);
				r.add(nk, c);
			}
		}
	}
	return r;
}

/** d/du^i with the Gaussian rule d_i e = -(2 u^i / t) e */
inline TermSum d_u(TermSum const &s, int i)
{
	TermSum r;
	for (auto &[k, c] : s.terms())
	{
		if (k.upow[i] > 0)
		{
			HeatKey nk = k;
			nk.upow[i] = uint8_t(nk.upow[i] - 1);
			r.add(nk, Rat(k.upow[i]) * c);
		}
		if (k.gaussian)
		{
			HeatKey nk = k;
			nk.upow[i] = uint8_t(nk.upow[i] + 1);
			nk.t_half -= 2;
			r.add(nk, Rat(-2) * c);
		}
	}
	return r;
}

/** contraction iota(d/du^i) on the du wedge */
inline TermSum iota(TermSum const &s, int i)
{
	TermSum r;
	for (auto &[k, c] : s.terms())
	{
		if (!(k.du_mask & (1u << i))) continue;
		int below = std::popcount(unsigned(k.du_mask & ((1u << i) - 1)));
		HeatKey nk = k;
		nk.du_mask = uint8_t(k.du_mask & ~(1u << i));
		r.add(nk, Rat((below & 1) ? -1 : 1) * c);
	}
	return r;
}

/** multiply by the curvature slot Omega^i_j; a second slot vanishes (4-form) */
inline TermSum mul_omega(TermSum const &s, int i, int j)
{
	TermSum r;
	int sign = 0;
	int code = omega_pair_code(i, j, sign);
	if (code < 0) return r;
	for (auto &[k, c] : s.terms())
	{
		if (k.omega >= 0) continue;
		HeatKey nk = k;
		nk.omega = int8_t(code);
		r.add(nk, Rat(sign) * c);
	}
	return r;
}

} // namespace heat_detail

/**
 * Leading term of the heat operator in the flat chart:
 *   d/dt - (1/4) g^{ij} d_i d_j + g^{jk} Omega^i_k iota_i iota_j
 * (iota_j applied first).  The curvature contraction carries coefficient 1:
 * that is the normalization under which the displayed cancellation against
 * the Gaussian part closes termwise.
 */
inline TermSum apply_heat_flat_leading(TermSum const &s);

inline TermSum apply_heat_operator_leading(TermSum const &s)
{
	using namespace heat_detail;
	TermSum r = apply_heat_flat_leading(s);
	for (int i = 0; i < 3; ++i)
		for (int j = 0; j < 3; ++j)
		{
			if (i == j) continue;
			r += mul_omega(iota(iota(s, j), i), i, j);
		}
	return r;
}

/** Gaussian part of the leading heat operator, d/dt - (1/4) g^{ij} d_i d_j;
 *  annihilates the flat heat kernel on the nose */
inline TermSum apply_heat_flat_leading(TermSum const &s)
{
	using namespace heat_detail;
	TermSum r = d_t(s);
	for (int i = 0; i < 3; ++i) r -= Rat(1, 4) * d_u(d_u(s, i), i);
	return r;
}

/** leading term of d*: -(1/4) g^{ij} iota_i d_j in the flat chart */
inline TermSum apply_dstar_leading(TermSum const &s)
{
	using namespace heat_detail;
	TermSum r;
	for (int i = 0; i < 3; ++i) r -= Rat(1, 4) * iota(d_u(s, i), i);
	return r;
}

/** terms with p + r < 0 (they must vanish in any consistent expansion) */
inline TermSum vanishing_violations(TermSum const &s)
{
	TermSum r;
	for (auto &[k, c] : s.terms())
		if (k.p_degree() + k.du_degree() < 0) r.add(k, c);
	return r;
}

/** drops the (p + r < 0) terms */
inline TermSum vanishing_filter(TermSum const &s)
{
	TermSum r = s;
	r -= vanishing_violations(s);
	return r;
}

/** flat Gaussian heat kernel (t^{-3/2} e^{-|u|^2/4t} du^0 du^1 du^2, unnormalized) */
inline TermSum flat_gaussian_kernel()
{
	TermSum r;
	HeatKey k;
	k.t_half = -3;
	k.gaussian = true;
	k.du_mask = 0b111;
	r.add(k, Rat(1));
	return r;
}

/**
 * Total-degree-0 leading term of K_t in the flat chart, stripped of the
 * overall (4 pi)^{-3/2} det(g)^{1/2}:
 *   (1/6) eps_ijk ( t^{-3/2} du^i du^j du^k + 6 t^{-1/2} Omega^i_l g^{lj} du^k ).
 */
inline TermSum kt_leading()
{
	TermSum r = flat_gaussian_kernel();
	// eps_ijk Omega^i_j du^k expanded: 2 (Om01 du2 - Om02 du1 + Om12 du0)
	auto omega_term = [&](int code, int du, int sign) {
		HeatKey k;
		k.t_half = -1;
		k.gaussian = true;
		k.du_mask = uint8_t(1u << du);
		k.omega = int8_t(code);
		r.add(k, Rat(2 * sign));
	};
	omega_term(0, 2, 1);
	omega_term(1, 1, -1);
	omega_term(2, 0, 1);
	return r;
}

/**
 * Displayed leading term of (d* (x) 1) K_t, same normalization as
 * kt_leading():  (1/(4 t^{5/2})) e eps_ijk u^i du^j du^k
 *              + (u^k/(2 t^{3/2})) e eps_ijk Omega^i_l g^{lj}.
 */
inline TermSum dstar_kt_expected()
{
	TermSum r;
	auto first = [&](int u, uint8_t du_mask, int sign) {
		HeatKey k;
		k.t_half = -5;
		k.gaussian = true;
		k.upow[u] = 1;
		k.du_mask = du_mask;
		r.add(k, Rat(sign, 2));
	};
	// eps_ijk u^i du^j du^k = 2 (u0 du1du2 - u1 du0du2 + u2 du0du1); times 1/4
	first(0, 0b110, 1);
	first(1, 0b101, -1);
	first(2, 0b011, 1);
	auto second = [&](int u, int code, int sign) {
		HeatKey k;
		k.t_half = -3;
		k.gaussian = true;
		k.upow[u] = 1;
		k.omega = int8_t(code);
		r.add(k, Rat(sign));
	};
	// (1/2) eps_ijk u^k Omega^i_j = u2 Om01 - u1 Om02 + u0 Om12
	second(2, 0, 1);
	second(1, 1, -1);
	second(0, 2, 1);
	return r;
}

// ---------------------------------------------------------------------------
// numeric checks of the boundary limits
// ---------------------------------------------------------------------------

namespace heat_detail {

inline double adaptive_simpson(std::function<double(double)> const &f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth)
{
	double m = (a + b) / 2;
	double lm = (a + m) / 2, rm = (m + b) / 2;
	double flm = f(lm), frm = f(rm);
	double left = (m - a) / 6 * (fa + 4 * flm + fm);
	double right = (b - m) / 6 * (fm + 4 * frm + fb);
	if (depth <= 0 || std::abs(left + right - whole) < 15 * tol)
		return left + right + (left + right - whole) / 15;
	return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
	       adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline double integrate(std::function<double(double)> const &f, double a, double b, double rel_tol)
{
	double fa = f(a), fb = f(b), fm = f((a + b) / 2);
	double whole = (b - a) / 6 * (fa + 4 * fm + fb);
	double scale = std::max(std::abs(whole), 1e-30);
	return adaptive_simpson(f, a, b, fa, fm, fb, whole, rel_tol * scale, 48);
}

/** Gauss-Legendre nodes/weights on [-1,1] by Newton iteration */
inline void gauss_legendre(int n, std::vector<double> &x, std::vector<double> &w)
{
	x.assign(n, 0.0);
	w.assign(n, 0.0);
	for (int i = 0; i < n; ++i)
	{
		double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
		for (int iter = 0; iter < 100; ++iter)
		{
			double p0 = 1, p1 = 0;
			for (int k = 0; k < n; ++k)
			{
				double p2 = p1;
				p1 = p0;
				p0 = ((2 * k + 1) * t * p1 - k * p2) / (k + 1);
			}
			double dp = n * (t * p0 - p1) / (t * t - 1);
			double dt = p0 / dp;
			t -= dt;
			if (std::abs(dt) < 1e-15) break;
		}
		double p0 = 1, p1 = 0;
		for (int k = 0; k < n; ++k)
		{
			double p2 = p1;
			p1 = p0;
			p0 = ((2 * k + 1) * t * p1 - k * p2) / (k + 1);
		}
		double dp = n * (t * p0 - p1) / (t * t - 1);
		x[i] = t;
		w[i] = 2.0 / ((1 - t * t) * dp * dp);
	}
}

} // namespace heat_detail

/**
 * Quadrature of the two boundary integrals of the propagator lifting:
 *   int_0^L (r^3 / 4 t^{5/2}) e^{-r^2/4t} dt   and
 *   int_0^L (r  / 2 t^{3/2} ) e^{-r^2/4t} dt;
 * both tend to sqrt(pi) as r -> 0.  Relative tolerance 1e-8.
 */
inline std::pair<double, double> boundary_limit(double r, double L)
{
	if (r <= 0 || L <= 0) throw ValidationError("boundary_limit needs r, L > 0");
	auto f1 = [r](double t) {
		return t <= 0 ? 0.0 : (r * r * r) / (4 * std::pow(t, 2.5)) * std::exp(-r * r / (4 * t));
	};
	auto f2 = [r](double t) {
		return t <= 0 ? 0.0 : r / (2 * std::pow(t, 1.5)) * std::exp(-r * r / (4 * t));
	};
	// the second limit approaches sqrt(pi) - r/sqrt(L) + O(r^3): run the
	// quadrature well below the contracted 1e-8 so the acceptance margin at
	// r = 1e-3 is not eaten by integration error
	double a = heat_detail::integrate(f1, 0.0, L, 1e-12);
	double b = heat_detail::integrate(f2, 0.0, L, 1e-12);
	return {a, b};
}

/**
 * Fiber integral of the solid-angle 2-form (1/4pi) eps_ijk u^i du^j du^k over
 * the unit sphere (cyclic-sum convention, i.e. the area form; the full
 * permutation sum would double it).  Product Gauss-Legendre quadrature;
 * returns 1 within 1e-6.  `scale` multiplies the integrand.
 */
inline double fiber_sphere_integral(double scale = 1.0)
{
	std::vector<double> xs, ws;
	heat_detail::gauss_legendre(48, xs, ws);
	double total = 0;
	for (int a = 0; a < 48; ++a)
		for (int b = 0; b < 48; ++b)
		{
			double th = (xs[a] + 1) * M_PI / 2, w1 = ws[a] * M_PI / 2;
			double ph = (xs[b] + 1) * M_PI, w2 = ws[b] * M_PI;
			double st = std::sin(th), ct = std::cos(th);
			double sp = std::sin(ph), cp = std::cos(ph);
			double u[3] = {st * cp, st * sp, ct};
			double dth[3] = {ct * cp, ct * sp, -st};
			double dph[3] = {-st * sp, st * cp, 0};
			double J = 0;
			int cyc[3][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
			for (auto &c : cyc) J += u[c[0]] * (dth[c[1]] * dph[c[2]] - dph[c[1]] * dth[c[2]]);
			total += w1 * w2 * J;
		}
	return scale * total / (4 * M_PI);
}

/** surface integral of a scalar over the unit sphere (quadrature sanity hook) */
inline double sphere_scalar_integral(std::function<double(double, double, double)> const &f)
{
	std::vector<double> xs, ws;
	heat_detail::gauss_legendre(48, xs, ws);
	double total = 0;
	for (int a = 0; a < 48; ++a)
		for (int b = 0; b < 48; ++b)
		{
			double th = (xs[a] + 1) * M_PI / 2, w1 = ws[a] * M_PI / 2;
			double ph = (xs[b] + 1) * M_PI, w2 = ws[b] * M_PI;
			double st = std::sin(th);
			total += w1 * w2 * st * f(st * std::cos(ph), st * std::sin(ph), std::cos(th));
		}
	return total;
}

} // namespace rw
