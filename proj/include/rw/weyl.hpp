#pragma once

#include "rw/fraction.hpp"

#include <array>
#include <bit>
#include <cassert>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace rw {

/**
 * Monomial key of a Weyl-algebra term at one fiber:
 * commuting fiber generators d1..d(2n) (weight 1 each), anticommuting form
 * generators z1..z(2n) (holomorphic) and b1..b(2n) (antiholomorphic), and a
 * power of hbar (weight 2).  Packed into one 64-bit word: 8 exponent nibbles,
 * two 8-bit form masks, 8-bit hbar power.  Form words are canonically ordered
 * z-block ascending then b-block ascending; Koszul signs live in coefficients.
 */
struct WKey {
	uint64_t bits = 0;

	static constexpr int max_gens = 8;

	int fiber_exp(int i) const { return int((bits >> (4 * i)) & 0xf); }
	WKey with_fiber(int i, int e) const
	{
		WKey k = *this;
		k.bits = (bits & ~(uint64_t(0xf) << (4 * i))) | (uint64_t(e) << (4 * i));
		return k;
	}
	uint32_t dz_mask() const { return uint32_t((bits >> 32) & 0xff); }
	uint32_t dzbar_mask() const { return uint32_t((bits >> 40) & 0xff); }
	int hbar() const { return int((bits >> 48) & 0xff); }

	WKey with_dz(uint32_t m) const
	{
		WKey k = *this;
		k.bits = (bits & ~(uint64_t(0xff) << 32)) | (uint64_t(m & 0xff) << 32);
		return k;
	}
	WKey with_dzbar(uint32_t m) const
	{
		WKey k = *this;
		k.bits = (bits & ~(uint64_t(0xff) << 40)) | (uint64_t(m & 0xff) << 40);
		return k;
	}
	WKey with_hbar(int h) const
	{
		WKey k = *this;
		k.bits = (bits & ~(uint64_t(0xff) << 48)) | (uint64_t(h) << 48);
		return k;
	}

	int fiber_weight() const
	{
		int w = 0;
		for (int i = 0; i < max_gens; ++i) w += fiber_exp(i);
		return w;
	}
	/** total weight: fiber degree + 2 * hbar power (forms carry none) */
	int weight() const { return fiber_weight() + 2 * hbar(); }
	int form_degree() const
	{
		return std::popcount(dz_mask()) + std::popcount(dzbar_mask());
	}
	int dz_degree() const { return std::popcount(dz_mask()); }
	/** parity = total form degree mod 2 */
	int parity() const { return form_degree() & 1; }

	friend bool operator<(WKey a, WKey b) { return a.bits < b.bits; }
	friend bool operator==(WKey a, WKey b) { return a.bits == b.bits; }
};

namespace detail {

/** 16-bit odd word of a key: z-block in low byte, b-block in high byte. */
inline uint32_t form_word(WKey k) { return k.dz_mask() | (k.dzbar_mask() << 8); }

/** Koszul sign of merging two canonically ordered odd words; 0 on collision. */
inline int merge_sign(uint32_t wa, uint32_t wb)
{
	if (wa & wb) return 0;
	int inls = 0;
	for (uint32_t m = wb; m; m &= m - 1)
	{
		int j = std::countr_zero(m);
		inls += std::popcount(wa >> (j + 1));
	}
	return (inls & 1) ? -1 : 1;
}

} // namespace detail

/**
 * Finite truncated section of the Weyl algebra at a fiber: a map from
 * canonical monomial keys to exact rational coefficients.  Every stored key
 * has weight <= cutoff and a nonzero coefficient.
 */
class WeylElement
{
  public:
	WeylElement() = default;
	WeylElement(int n, int cutoff) : n_(n), cutoff_(cutoff)
	{
		if (n < 0 || 2 * n > WKey::max_gens)
			throw ValidationError("half-dimension out of range (need 0 <= n <= 4)");
	}

	int n() const { return n_; }
	int cutoff() const { return cutoff_; }
	bool is_zero() const { return terms_.empty(); }
	std::map<WKey, Rat> const &terms() const { return terms_; }

	void add(WKey k, Rat c)
	{
		if (c.is_zero() || k.weight() > cutoff_) return;
		auto [it, fresh] = terms_.emplace(k, c);
		if (!fresh)
		{
			it->second += c;
			if (it->second.is_zero()) terms_.erase(it);
		}
	}

	WeylElement &operator+=(WeylElement const &o)
	{
		check_compatible(o);
		for (auto &[k, c] : o.terms_) add(k, c);
		return *this;
	}
	WeylElement &operator-=(WeylElement const &o)
	{
		check_compatible(o);
		for (auto &[k, c] : o.terms_) add(k, -c);
		return *this;
	}
	friend WeylElement operator+(WeylElement a, WeylElement const &b) { return a += b; }
	friend WeylElement operator-(WeylElement a, WeylElement const &b) { return a -= b; }
	friend WeylElement operator*(Rat c, WeylElement a)
	{
		if (c.is_zero()) return WeylElement(a.n_, a.cutoff_);
		for (auto &[k, v] : a.terms_) v *= c;
		return a;
	}
	friend bool operator==(WeylElement const &a, WeylElement const &b)
	{
		return a.n_ == b.n_ && a.terms_ == b.terms_;
	}

	/** multiplies by hbar^k (k may be negative; throws if a term would drop below hbar^0) */
	WeylElement shift_hbar(int k) const
	{
		WeylElement r(n_, cutoff_);
		for (auto &[key, c] : terms_)
		{
			int h = key.hbar() + k;
			if (h < 0) throw ValidationError("element not divisible by hbar");
			r.add(key.with_hbar(h), c);
		}
		return r;
	}

	/** keeps the hbar^0 part (the classical level) */
	WeylElement classical() const
	{
		WeylElement r(n_, cutoff_);
		for (auto &[key, c] : terms_)
			if (key.hbar() == 0) r.add(key, c);
		return r;
	}

	/** keeps terms of the given total weight */
	WeylElement weight_part(int w) const
	{
		WeylElement r(n_, cutoff_);
		for (auto &[key, c] : terms_)
			if (key.weight() == w) r.add(key, c);
		return r;
	}

	/** true if every term has the same form-degree parity p */
	bool parity_homogeneous(int &p) const
	{
		if (terms_.empty())
		{
			p = 0;
			return true;
		}
		p = terms_.begin()->first.parity();
		for (auto &[k, c] : terms_)
			if (k.parity() != p) return false;
		return true;
	}

	void check_compatible(WeylElement const &o) const
	{
		if (n_ != o.n_) throw ValidationError("Weyl element dimension mismatch");
		if (cutoff_ != o.cutoff_) throw ValidationError("Weyl element cutoff mismatch");
	}

  private:
	int n_ = 0;
	int cutoff_ = 0;
	std::map<WKey, Rat> terms_;
};

/**
 * Constant curvature data for the Fedosov recursion: R is a form-degree-2,
 * fiber-weight-2 element with delta(R) = 0; christoffels G[i][j][k] give the
 * covariant derivative on fiber generators (all zero in the flat model).
 * Index convention: nabla(d^l) = - sum_{i,k} G[l][i][k] z^i d^k.
 */
struct ConnectionData {
	int n = 1;
	WeylElement curvature;
	std::vector<std::vector<std::vector<Rat>>> christoffels; // [l][i][k], may be empty

	bool flat() const { return christoffels.empty(); }
	Rat gamma(int l, int i, int k) const
	{
		return christoffels.empty() ? Rat(0) : christoffels[l][i][k];
	}
};

/**
 * The Weyl algebra of a 2n-dimensional formal holomorphic-symplectic fiber:
 * holds the symplectic form and its inverse and implements the quantum
 * product, the bracket, the Koszul homotopy operators, the Fedosov recursion
 * and flat-section lifting.  All operations truncate eagerly at the weight
 * cutoff and are pure.
 */
class WeylAlgebra
{
  public:
	WeylAlgebra(int n, int cutoff, std::vector<std::vector<Rat>> omega)
	    : n_(n), cutoff_(cutoff), omega_(std::move(omega))
	{
		if (n < 1 || 2 * n > WKey::max_gens)
			throw ValidationError("half-dimension out of range (need 1 <= n <= 4)");
		int d = 2 * n;
		if (int(omega_.size()) != d) throw ValidationError("omega must be 2n x 2n");
		for (auto &row : omega_)
			if (int(row.size()) != d) throw ValidationError("omega must be 2n x 2n");
		for (int i = 0; i < d; ++i)
			for (int j = 0; j < d; ++j)
				if (omega_[i][j] != -omega_[j][i])
					throw ValidationError("omega must be antisymmetric");
		omega_inv_ = invert(omega_);
	}

	/** standard Darboux form: omega_{2k,2k+1} = 1 (0-indexed pairs) */
	static WeylAlgebra darboux(int n, int cutoff)
	{
		std::vector<std::vector<Rat>> om(2 * n, std::vector<Rat>(2 * n, Rat(0)));
		for (int k = 0; k < n; ++k)
		{
			om[2 * k][2 * k + 1] = Rat(1);
			om[2 * k + 1][2 * k] = Rat(-1);
		}
		return WeylAlgebra(n, cutoff, std::move(om));
	}

	int n() const { return n_; }
	int dim() const { return 2 * n_; }
	int cutoff() const { return cutoff_; }
	Rat omega(int i, int j) const { return omega_[i][j]; }
	Rat omega_inv(int i, int j) const { return omega_inv_[i][j]; }

	WeylElement zero() const { return WeylElement(n_, cutoff_); }
	WeylElement one() const { return scalar(Rat(1)); }
	WeylElement scalar(Rat c) const
	{
		WeylElement e(n_, cutoff_);
		e.add(WKey{}, c);
		return e;
	}
	/** fiber generator d^i (0-indexed) */
	WeylElement fiber(int i) const
	{
		WeylElement e(n_, cutoff_);
		e.add(WKey{}.with_fiber(i, 1), Rat(1));
		return e;
	}
	WeylElement dz(int i) const
	{
		WeylElement e(n_, cutoff_);
		e.add(WKey{}.with_dz(1u << i), Rat(1));
		return e;
	}
	WeylElement dzbar(int i) const
	{
		WeylElement e(n_, cutoff_);
		e.add(WKey{}.with_dzbar(1u << i), Rat(1));
		return e;
	}
	WeylElement hbar() const
	{
		WeylElement e(n_, cutoff_);
		e.add(WKey{}.with_hbar(1), Rat(1));
		return e;
	}

	/** plain graded-commutative product (the hbar^0 layer of the quantum product) */
	WeylElement mul(WeylElement const &a, WeylElement const &b) const
	{
		check(a);
		a.check_compatible(b);
		WeylElement r(n_, cutoff_);
		for (auto &[ka, ca] : a.terms())
			for (auto &[kb, cb] : b.terms())
			{
				WKey k;
				int s = merge_keys(ka, kb, k);
				if (s) r.add(k, Rat(s) * ca * cb);
			}
		return r;
	}

	/**
	 * Quantum Weyl product: sum_{k>=0} (hbar^k / k!) omega^{i1 j1} ...
	 * omega^{ik jk} (d^k a / d-gens)(d^k b / d-gens), Koszul signs absorbed.
	 * Each contraction step preserves total weight (fiber -2, hbar +2).
	 */
	WeylElement product(WeylElement const &a, WeylElement const &b) const
	{
		check(a);
		a.check_compatible(b);
		WeylElement r(n_, cutoff_);
		std::map<std::pair<uint64_t, uint64_t>, Rat> cur;
		for (auto &[ka, ca] : a.terms())
			for (auto &[kb, cb] : b.terms())
			{
				// each contraction step preserves total weight, so anything
				// born above the cutoff stays there
				if (ka.weight() + kb.weight() > cutoff_) continue;
				auto c = ca * cb;
				auto [it, fresh] = cur.emplace(std::make_pair(ka.bits, kb.bits), c);
				if (!fresh) it->second += c;
			}
		Rat inv_fact(1);
		for (int k = 0; !cur.empty(); ++k)
		{
			if (k > 0) inv_fact /= Rat(k);
			for (auto &[pk, c] : cur)
			{
				if (c.is_zero()) continue;
				WKey ka{pk.first}, kb{pk.second};
				WKey m;
				int s = merge_keys(ka, kb, m);
				if (!s) continue;
				r.add(m.with_hbar(m.hbar() + k), Rat(s) * inv_fact * c);
			}
			// one more omega-contraction on every pending pair
			std::map<std::pair<uint64_t, uint64_t>, Rat> next;
			for (auto &[pk, c] : cur)
			{
				if (c.is_zero()) continue;
				WKey ka{pk.first}, kb{pk.second};
				for (int i = 0; i < dim(); ++i)
				{
					int ei = ka.fiber_exp(i);
					if (!ei) continue;
					for (int j = 0; j < dim(); ++j)
					{
						int ej = kb.fiber_exp(j);
						if (!ej || omega_inv_[i][j].is_zero()) continue;
						auto key = std::make_pair(ka.with_fiber(i, ei - 1).bits,
						                          kb.with_fiber(j, ej - 1).bits);
						Rat v = c * omega_inv_[i][j] * Rat(ei) * Rat(ej);
						auto [it, fresh] = next.emplace(key, v);
						if (!fresh) it->second += v;
					}
				}
			}
			cur = std::move(next);
		}
		return r;
	}

	/** graded commutator a o b - (-1)^{|a||b|} b o a, parity = form degree mod 2 */
	WeylElement bracket(WeylElement const &a, WeylElement const &b) const
	{
		WeylElement r(n_, cutoff_);
		for (int pa = 0; pa < 2; ++pa)
		{
			WeylElement ap = parity_part(a, pa);
			if (ap.is_zero()) continue;
			for (int pb = 0; pb < 2; ++pb)
			{
				WeylElement bp = parity_part(b, pb);
				if (bp.is_zero()) continue;
				r += product(ap, bp);
				WeylElement ba = product(bp, ap);
				if (pa & pb)
					r += ba;
				else
					r -= ba;
			}
		}
		return r;
	}

	/** delta(a) = z^i ^ da/dd^i: fiber weight -1, holomorphic form degree +1 */
	WeylElement delta(WeylElement const &a) const
	{
		check(a);
		WeylElement r(n_, cutoff_);
		for (auto &[k, c] : a.terms())
			for (int i = 0; i < dim(); ++i)
			{
				int e = k.fiber_exp(i);
				if (!e) continue;
				uint32_t dz = k.dz_mask();
				if (dz & (1u << i)) continue;
				int s = (std::popcount(dz & ((1u << i) - 1)) & 1) ? -1 : 1;
				r.add(k.with_fiber(i, e - 1).with_dz(dz | (1u << i)), Rat(s * e) * c);
			}
		return r;
	}

	/** delta*(a) = d^i . iota_i(a): contracts one z^i, adds one fiber generator */
	WeylElement delta_star(WeylElement const &a) const
	{
		check(a);
		WeylElement r(n_, cutoff_);
		for (auto &[k, c] : a.terms())
			for (int i = 0; i < dim(); ++i)
			{
				uint32_t dz = k.dz_mask();
				if (!(dz & (1u << i))) continue;
				int s = (std::popcount(dz & ((1u << i) - 1)) & 1) ? -1 : 1;
				r.add(k.with_fiber(i, k.fiber_exp(i) + 1).with_dz(dz & ~(1u << i)),
				      Rat(s) * c);
			}
		return r;
	}

	/** delta^{-1}: acts as (1/(p+r)) delta-star where p+r > 0, zero otherwise */
	WeylElement delta_inv(WeylElement const &a) const
	{
		check(a);
		WeylElement r(n_, cutoff_);
		for (auto &[k, c] : a.terms())
		{
			int w = k.dz_degree() + k.fiber_weight();
			if (w == 0) continue;
			WeylElement t(n_, cutoff_);
			t.add(k, c / Rat(w));
			r += delta_star(t);
		}
		return r;
	}

	/** projection onto the (0,*,0) component (antiholomorphic forms and hbar kept) */
	WeylElement pi0(WeylElement const &a) const
	{
		check(a);
		WeylElement r(n_, cutoff_);
		for (auto &[k, c] : a.terms())
			if (k.fiber_weight() == 0 && k.dz_degree() == 0) r.add(k, c);
		return r;
	}

	/**
	 * Exterior covariant derivative in the frozen-fiber model: acts as the odd
	 * derivation with nabla(d^l) = - G[l][i][k] z^i d^k on fiber generators and
	 * kills forms, scalars and hbar.  Zero Christoffels give the flat model.
	 */
	WeylElement nabla(WeylElement const &a, ConnectionData const &conn) const
	{
		check(a);
		if (conn.n != n_) throw ValidationError("connection dimension mismatch");
		WeylElement r(n_, cutoff_);
		if (conn.flat()) return r;
		for (auto &[k, c] : a.terms())
			for (int l = 0; l < dim(); ++l)
			{
				int e = k.fiber_exp(l);
				if (!e) continue;
				for (int i = 0; i < dim(); ++i)
				{
					uint32_t dz = k.dz_mask();
					if (dz & (1u << i)) continue;
					for (int kk = 0; kk < dim(); ++kk)
					{
						Rat g = conn.gamma(l, i, kk);
						if (g.is_zero()) continue;
						int s = (std::popcount(dz & ((1u << i) - 1)) & 1) ? -1 : 1;
						WKey nk = k.with_fiber(l, e - 1);
						nk = nk.with_fiber(kk, nk.fiber_exp(kk) + 1).with_dz(dz | (1u << i));
						r.add(nk, Rat(-s * e) * g * c);
					}
				}
			}
		return r;
	}

	/** (1/hbar)(a o a); well-defined since the plain square of an odd element vanishes */
	WeylElement square_over_hbar(WeylElement const &a) const
	{
		return product(a, a).shift_hbar(-1);
	}

	/**
	 * Weight-filtered fixed point of I = delta^{-1}(R + nabla I) +
	 * (1/hbar) delta^{-1}(I o I); terminates in <= cutoff passes because
	 * delta^{-1} strictly raises weight.  Rejects curvature with delta(R) != 0.
	 */
	WeylElement fedosov_solve(ConnectionData const &conn) const
	{
		WeylElement const &R = conn.curvature;
		check(R);
		if (!delta(R).is_zero())
			throw ValidationError("curvature not delta-closed (Bianchi violation)");
		WeylElement I = zero();
		for (int pass = 0; pass <= cutoff_ + 1; ++pass)
		{
			WeylElement next =
			    delta_inv(R + nabla(I, conn)) + delta_inv(square_over_hbar(I));
			if (next == I) return I;
			I = std::move(next);
		}
		throw InternalError("fedosov iteration failed to stabilize");
	}

	/** A = (delta I - R - nabla I - (1/hbar) I o I) at the classical level */
	WeylElement flatness_residual(WeylElement const &I, ConnectionData const &conn) const
	{
		WeylElement A = delta(I) - conn.curvature - nabla(I, conn) - square_over_hbar(I);
		return A.classical();
	}

	/**
	 * Flat-section lift: alpha = alpha0 + delta^{-1}(nabla alpha +
	 * (1/hbar)[I, alpha]); the seed must live in the (0,*,0) component.
	 */
	WeylElement flat_section_lift(WeylElement const &alpha0, WeylElement const &I,
	                              ConnectionData const &conn) const
	{
		check(alpha0);
		if (!(pi0(alpha0) == alpha0))
			throw ValidationError("flat-section seed must be a (0,*,0) element");
		WeylElement a = alpha0;
		for (int pass = 0; pass <= cutoff_ + 1; ++pass)
		{
			WeylElement next = alpha0 + delta_inv(nabla(a, conn) +
			                                      bracket(I, a).shift_hbar(-1));
			if (next == a) return a;
			a = std::move(next);
		}
		throw InternalError("flat-section iteration failed to stabilize");
	}

	/** D(a) = nabla a - delta a + (1/hbar)[I, a] */
	WeylElement flat_connection(WeylElement const &a, WeylElement const &I,
	                            ConnectionData const &conn) const
	{
		return nabla(a, conn) - delta(a) + bracket(I, a).shift_hbar(-1);
	}

	WeylElement parity_part(WeylElement const &a, int p) const
	{
		WeylElement r(n_, cutoff_);
		for (auto &[k, c] : a.terms())
			if (k.parity() == p) r.add(k, c);
		return r;
	}

  private:
	int n_;
	int cutoff_;
	std::vector<std::vector<Rat>> omega_, omega_inv_;

	void check(WeylElement const &a) const
	{
		if (a.n() != n_ || a.cutoff() != cutoff_)
			throw ValidationError("element does not belong to this algebra");
	}

	static int merge_keys(WKey a, WKey b, WKey &out)
	{
		int s = detail::merge_sign(detail::form_word(a), detail::form_word(b));
		if (!s) return 0;
		WKey k;
		for (int i = 0; i < WKey::max_gens; ++i)
		{
			int e = a.fiber_exp(i) + b.fiber_exp(i);
			if (e > 15) throw OverflowError("fiber exponent exceeds nibble");
			k = k.with_fiber(i, e);
		}
		k = k.with_dz(a.dz_mask() | b.dz_mask());
		k = k.with_dzbar(a.dzbar_mask() | b.dzbar_mask());
		k = k.with_hbar(a.hbar() + b.hbar());
		out = k;
		return s;
	}

	static std::vector<std::vector<Rat>> invert(std::vector<std::vector<Rat>> m)
	{
		int d = int(m.size());
		std::vector<std::vector<Rat>> inv(d, std::vector<Rat>(d, Rat(0)));
		for (int i = 0; i < d; ++i) inv[i][i] = Rat(1);
		for (int col = 0; col < d; ++col)
		{
			int piv = -1;
			for (int r = col; r < d; ++r)
				if (!m[r][col].is_zero())
				{
					piv = r;
					break;
				}
			if (piv < 0) throw ValidationError("omega is singular");
			std::swap(m[piv], m[col]);
			std::swap(inv[piv], inv[col]);
			Rat p = m[col][col];
			for (int j = 0; j < d; ++j)
			{
				m[col][j] /= p;
				inv[col][j] /= p;
			}
			for (int r = 0; r < d; ++r)
			{
				if (r == col || m[r][col].is_zero()) continue;
				Rat f = m[r][col];
				for (int j = 0; j < d; ++j)
				{
					m[r][j] -= f * m[col][j];
					inv[r][j] -= f * inv[col][j];
				}
			}
		}
		return inv;
	}
};

} // namespace rw
