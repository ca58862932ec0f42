#pragma once

#include "rw/fraction.hpp"
#include "rw/graph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace rw {

/**
 * Finite graded vector space underlying the toy BV calculus: named even/odd
 * generators and an optional graded-antisymmetric pairing.
 */
struct ToySpace {
	std::vector<std::string> names;
	std::vector<int> parity; // 0 even, 1 odd
	std::vector<std::vector<BigRat>> pairing; // may be empty

	int dim() const { return int(parity.size()); }

	void validate() const
	{
		if (names.size() != parity.size()) throw ValidationError("toy space name/parity mismatch");
		if (!pairing.empty())
		{
			if (int(pairing.size()) != dim()) throw ValidationError("pairing must be square");
			for (int a = 0; a < dim(); ++a)
			{
				if (int(pairing[a].size()) != dim()) throw ValidationError("pairing must be square");
				for (int b = 0; b < dim(); ++b)
				{
					BigRat want = pairing[b][a] * BigRat((parity[a] & parity[b]) ? 1 : -1);
					if (pairing[a][b] != want)
						throw ValidationError("pairing must be graded antisymmetric");
				}
			}
		}
	}
};

/**
 * Sparse graded polynomial with an hbar grading.  Exponent vectors cover all
 * variables uniformly; odd variables carry exponent 0/1 and their Koszul
 * signs are absorbed into coefficients with ascending-index canonical order.
 * hbar exponents may be negative inside intermediate Laurent computations;
 * public functionals keep them >= 0.
 */
struct PolyKey {
	std::vector<uint8_t> exps;
	int hbar = 0;

	friend bool operator<(PolyKey const &a, PolyKey const &b)
	{
		if (a.hbar != b.hbar) return a.hbar < b.hbar;
		return a.exps < b.exps;
	}
	friend bool operator==(PolyKey const &a, PolyKey const &b)
	{
		return a.hbar == b.hbar && a.exps == b.exps;
	}
	int degree() const
	{
		int d = 0;
		for (auto e : exps) d += e;
		return d;
	}
};

class Poly
{
  public:
	Poly() = default;
	explicit Poly(int nvars) : nvars_(nvars) {}

	int nvars() const { return nvars_; }
	bool is_zero() const { return terms_.empty(); }
	std::map<PolyKey, BigRat> const &terms() const { return terms_; }

	static Poly scalar(int nvars, BigRat c, int hbar = 0)
	{
		Poly p(nvars);
		PolyKey k;
		k.exps.assign(nvars, 0);
		k.hbar = hbar;
		p.add(k, std::move(c));
		return p;
	}
	static Poly variable(int nvars, int idx)
	{
		Poly p(nvars);
		PolyKey k;
		k.exps.assign(nvars, 0);
		k.exps[idx] = 1;
		p.add(k, BigRat(1));
		return p;
	}

	void add(PolyKey const &k, BigRat c)
	{
		if (c.is_zero()) return;
		auto it = terms_.find(k);
		if (it == terms_.end())
			terms_.emplace(k, std::move(c));
		else
		{
			it->second += c;
			if (it->second.is_zero()) terms_.erase(it);
		}
	}

	Poly &operator+=(Poly const &o)
	{
		for (auto &[k, c] : o.terms_) add(k, c);
		return *this;
	}
	Poly &operator-=(Poly const &o)
	{
		for (auto &[k, c] : o.terms_) add(k, -c);
		return *this;
	}
	friend Poly operator+(Poly a, Poly const &b) { return a += b; }
	friend Poly operator-(Poly a, Poly const &b) { return a -= b; }
	friend Poly operator*(BigRat const &c, Poly a)
	{
		if (c.is_zero()) return Poly(a.nvars_);
		for (auto &[k, v] : a.terms_) v *= c;
		return a;
	}
	friend bool operator==(Poly const &a, Poly const &b) { return a.terms_ == b.terms_; }

	Poly shift_hbar(int d) const
	{
		Poly r(nvars_);
		for (auto &[k, c] : terms_)
		{
			PolyKey nk = k;
			nk.hbar += d;
			r.add(nk, c);
		}
		return r;
	}

	Poly truncate(int hbar_max, int deg_max = -1) const
	{
		Poly r(nvars_);
		for (auto &[k, c] : terms_)
			if (k.hbar <= hbar_max && (deg_max < 0 || k.degree() <= deg_max)) r.add(k, c);
		return r;
	}

	int min_hbar() const
	{
		int m = 0;
		bool first = true;
		for (auto &[k, c] : terms_)
		{
			m = first ? k.hbar : std::min(m, k.hbar);
			first = false;
		}
		return m;
	}

	/** component with the given hbar power and total degree */
	Poly component(int hbar, int degree) const
	{
		Poly r(nvars_);
		for (auto &[k, c] : terms_)
			if (k.hbar == hbar && k.degree() == degree) r.add(k, c);
		return r;
	}

  private:
	int nvars_ = 0;
	std::map<PolyKey, BigRat> terms_;
};

namespace bv_detail {

/** Koszul sign of the merged odd words; 0 when an odd variable repeats. */
inline int odd_merge_sign(std::vector<uint8_t> const &ea, std::vector<uint8_t> const &eb,
                          std::vector<int> const &parity)
{
	int sign = 1;
	int above = 0; // odd vars of `a` with index > current position
	for (int k = int(parity.size()) - 1; k >= 0; --k)
	{
		if (!parity[k]) continue;
		if (eb[k])
		{
			if (ea[k]) return 0;
			if (above & 1) sign = -sign;
		}
		if (ea[k]) ++above;
	}
	return sign;
}

} // namespace bv_detail

/** graded product over the given variable parities */
inline Poly poly_mul(Poly const &a, Poly const &b, std::vector<int> const &parity)
{
	Poly r(a.nvars());
	for (auto &[ka, ca] : a.terms())
		for (auto &[kb, cb] : b.terms())
		{
			int s = bv_detail::odd_merge_sign(ka.exps, kb.exps, parity);
			if (!s) continue;
			PolyKey k;
			k.exps.resize(ka.exps.size());
			bool dead = false;
			for (size_t i = 0; i < k.exps.size(); ++i)
			{
				int e = ka.exps[i] + kb.exps[i];
				if (e > 250) dead = true;
				k.exps[i] = uint8_t(e);
			}
			if (dead) throw OverflowError("polynomial exponent overflow");
			k.hbar = ka.hbar + kb.hbar;
			r.add(k, BigRat(s) * ca * cb);
		}
	return r;
}

/** left graded derivative by variable idx */
inline Poly poly_derive(Poly const &a, int idx, std::vector<int> const &parity)
{
	Poly r(a.nvars());
	for (auto &[k, c] : a.terms())
	{
		if (!k.exps[idx]) continue;
		PolyKey nk = k;
		if (parity[idx])
		{
			int below = 0;
			for (int j = 0; j < idx; ++j)
				if (parity[j] && k.exps[j]) ++below;
			nk.exps[idx] = 0;
			r.add(nk, (below & 1) ? -c : c);
		}
		else
		{
			nk.exps[idx] = uint8_t(k.exps[idx] - 1);
			r.add(nk, BigRat(k.exps[idx]) * c);
		}
	}
	return r;
}

/** parity of a monomial (sum of odd-variable exponents mod 2) */
inline int monomial_parity(PolyKey const &k, std::vector<int> const &parity)
{
	int p = 0;
	for (size_t i = 0; i < k.exps.size(); ++i)
		if (parity[i]) p ^= (k.exps[i] & 1);
	return p;
}

/** splits into even/odd functional parts */
inline Poly parity_part(Poly const &a, std::vector<int> const &parity, int p)
{
	Poly r(a.nvars());
	for (auto &[k, c] : a.terms())
		if (monomial_parity(k, parity) == p) r.add(k, c);
	return r;
}

/**
 * Graded-symmetric rank-2 kernel K^{ab} on a toy space: K^{ab} =
 * (-1)^{|a||b|} K^{ba}.  Used both as propagator P and BV kernel K.
 */
struct Kernel {
	std::vector<std::vector<BigRat>> coef;

	static Kernel zero(int d)
	{
		Kernel k;
		k.coef.assign(d, std::vector<BigRat>(d, BigRat(0)));
		return k;
	}

	void validate(ToySpace const &sp) const
	{
		int d = sp.dim();
		if (int(coef.size()) != d) throw ValidationError("kernel must be dim x dim");
		for (int a = 0; a < d; ++a)
		{
			if (int(coef[a].size()) != d) throw ValidationError("kernel must be dim x dim");
			for (int b = 0; b < d; ++b)
			{
				BigRat want = coef[b][a] * BigRat((sp.parity[a] & sp.parity[b]) ? -1 : 1);
				if (coef[a][b] != want)
					throw ValidationError("kernel must be graded symmetric");
			}
		}
	}

	friend Kernel operator+(Kernel a, Kernel const &b)
	{
		for (size_t i = 0; i < a.coef.size(); ++i)
			for (size_t j = 0; j < a.coef.size(); ++j) a.coef[i][j] += b.coef[i][j];
		return a;
	}
	friend Kernel operator-(Kernel a, Kernel const &b)
	{
		for (size_t i = 0; i < a.coef.size(); ++i)
			for (size_t j = 0; j < a.coef.size(); ++j) a.coef[i][j] -= b.coef[i][j];
		return a;
	}
};

/**
 * Second-order contraction operator d_P = (1/2) sum P^{ab} d_a d_b with left
 * graded derivatives; this is the single-step propagator contraction and, for
 * odd symmetric kernels, the BV Laplacian.
 */
inline Poly kernel_contract(Kernel const &P, Poly const &F, std::vector<int> const &parity)
{
	Poly r(F.nvars());
	int d = int(P.coef.size());
	for (int a = 0; a < d; ++a)
		for (int b = 0; b < d; ++b)
		{
			if (P.coef[a][b].is_zero()) continue;
			r += P.coef[a][b] * poly_derive(poly_derive(F, b, parity), a, parity);
		}
	return BigRat(1, 2) * r;
}

/** odd linear operator on the toy space, extended as a graded derivation */
struct OddOperator {
	std::vector<std::vector<BigRat>> mat; // Q(x_a) = sum_b mat[a][b] x_b

	void validate(ToySpace const &sp) const
	{
		int d = sp.dim();
		if (int(mat.size()) != d) throw ValidationError("operator must be dim x dim");
		for (int a = 0; a < d; ++a)
		{
			if (int(mat[a].size()) != d) throw ValidationError("operator must be dim x dim");
			for (int b = 0; b < d; ++b)
				if (!mat[a][b].is_zero() && sp.parity[b] == sp.parity[a])
					throw ValidationError("operator is not parity-odd");
		}
	}

	/** derivation action on a polynomial (variables = generators) */
	Poly apply(Poly const &F, std::vector<int> const &parity) const
	{
		Poly r(F.nvars());
		int d = int(mat.size());
		for (int a = 0; a < d; ++a)
		{
			Poly dF = poly_derive(F, a, parity);
			if (dF.is_zero()) continue;
			for (int b = 0; b < d; ++b)
			{
				if (mat[a][b].is_zero()) continue;
				// x_b * dF with x_b on the left matches the left-derivative
				// convention d(x_a M)/dx_a = M
				Poly xb = Poly::variable(F.nvars(), b);
				r += mat[a][b] * poly_mul(xb, dF, parity);
			}
		}
		return r;
	}

	/**
	 * Action on a rank-2 kernel induced by the coordinate derivation, fixed
	 * by the operator identity [Q, d_P] = d_{Q(P)} on functionals:
	 *   Q(P)^{ca} = - sum_b ( q_{ab} P^{cb} + (-1)^{|c||a|} q_{cb} P^{ab} ).
	 * The result is graded-symmetric whenever P is.
	 */
	Kernel apply(Kernel const &K, ToySpace const &sp) const
	{
		int d = sp.dim();
		Kernel r = Kernel::zero(d);
		for (int c = 0; c < d; ++c)
			for (int a = 0; a < d; ++a)
			{
				BigRat acc(0);
				for (int b = 0; b < d; ++b)
				{
					acc += mat[a][b] * K.coef[c][b];
					acc += BigRat((sp.parity[c] & sp.parity[a]) ? -1 : 1) * mat[c][b] * K.coef[a][b];
				}
				r.coef[c][a] = -acc;
			}
		return r;
	}
};

/** BV Laplacian: contraction with an odd graded-symmetric kernel */
inline Poly bv_laplacian(Kernel const &K, Poly const &F, std::vector<int> const &parity)
{
	return kernel_contract(K, F, parity);
}

/** {F,G}_K = D(FG) - D(F)G - (-1)^{|F|} F D(G), extended bilinearly in parity */
inline Poly bv_bracket(Kernel const &K, Poly const &F, Poly const &G,
                       std::vector<int> const &parity)
{
	Poly r(F.nvars());
	for (int pf = 0; pf < 2; ++pf)
	{
		Poly Fp = parity_part(F, parity, pf);
		if (Fp.is_zero()) continue;
		Poly t = kernel_contract(K, poly_mul(Fp, G, parity), parity);
		t -= poly_mul(kernel_contract(K, Fp, parity), G, parity);
		Poly fg = poly_mul(Fp, kernel_contract(K, G, parity), parity);
		if (pf)
			t += fg;
		else
			t -= fg;
		r += t;
	}
	return r;
}

/** e^{hbar d_P} F; terminates because d_P strictly lowers polynomial degree */
inline Poly exp_contract(Kernel const &P, Poly const &F, std::vector<int> const &parity)
{
	Poly acc = F, term = F;
	for (int j = 1; !term.is_zero(); ++j)
	{
		term = BigRat(1, j) * kernel_contract(P, term, parity).shift_hbar(1);
		acc += term;
	}
	return acc;
}

/**
 * Scale-L quantum master equation residual:
 *   Q(I) + (1/2){I,I}_K + hbar Delta_K I + curving,
 * truncated at the hbar cutoff; zero iff the toy QME holds.
 */
inline Poly qme_residual(OddOperator const &Q, Poly const &I, Kernel const &K,
                         Poly const &curving, std::vector<int> const &parity, int hbar_cutoff)
{
	Poly r = Q.apply(I, parity);
	r += BigRat(1, 2) * bv_bracket(K, I, I, parity);
	r += bv_laplacian(K, I, parity).shift_hbar(1);
	r += curving;
	return r.truncate(hbar_cutoff);
}

/**
 * Parity of a homogeneous kernel (0 even, 1 odd); propagators of the RG flow
 * must be even, BV kernels odd.
 */
inline int kernel_parity(Kernel const &K, std::vector<int> const &parity)
{
	int p = -1;
	for (size_t a = 0; a < K.coef.size(); ++a)
		for (size_t b = 0; b < K.coef.size(); ++b)
		{
			if (K.coef[a][b].is_zero()) continue;
			int q = (parity[a] + parity[b]) & 1;
			if (p < 0) p = q;
			if (p != q) throw ValidationError("kernel is not parity-homogeneous");
		}
	return p < 0 ? 0 : p;
}

/** checks the interaction shape: hbar^0 part at least cubic, hbar^1 at least linear */
inline void validate_interaction(Poly const &I)
{
	for (auto &[k, c] : I.terms())
	{
		if (k.hbar < 0) throw ValidationError("interaction has negative hbar powers");
		if (k.hbar == 0 && k.degree() < 3)
			throw ValidationError("interaction must be at least cubic modulo hbar");
		if (k.hbar == 1 && k.degree() < 1)
			throw ValidationError("hbar-linear interaction terms must be at least linear");
	}
}

/**
 * RG flow by direct exponential expansion:
 *   W(P, I) = hbar log(e^{hbar d_P} e^{I/hbar}),
 * organized by vertex count so every intermediate is a finite Laurent
 * polynomial; exact through (hbar <= hbar_cutoff, degree <= max_degree).
 * Graphs with more than max_vertices vertices cannot reach that window.
 */
/** largest vertex count of a connected stable graph reaching the window */
inline int rg_vertex_bound(int hbar_cutoff, int max_degree)
{
	return std::max(1, max_degree + 2 * hbar_cutoff - 2);
}

inline Poly rg_flow_exponential(Kernel const &P, Poly const &I, std::vector<int> const &parity,
                                int hbar_cutoff, int max_degree)
{
	validate_interaction(I);
	if (kernel_parity(P, parity) != 0)
		throw ValidationError("RG-flow propagator must be even");
	int max_vertices = rg_vertex_bound(hbar_cutoff, max_degree);
	int nv = I.nvars();
	Poly J = I.shift_hbar(-1); // I/hbar
	// After the per-sector contraction only multiplications remain, and those
	// only raise degree and hbar; terms outside these bounds cannot reach the
	// output window, so dropping them is exact.
	auto prune = [&](Poly const &p, int m) {
		return p.truncate(hbar_cutoff - 1 + (max_vertices - m), max_degree);
	};
	// sectors[m] = e^{hbar d_P} ( (I/hbar)^m / m! )
	std::vector<Poly> sectors(max_vertices + 1, Poly(nv));
	Poly power = Poly::scalar(nv, BigRat(1));
	sectors[0] = power;
	for (int m = 1; m <= max_vertices; ++m)
	{
		power = BigRat(1, m) * poly_mul(power, J, parity);
		sectors[m] = prune(exp_contract(P, power, parity), m);
	}
	// log(1 + Y) by the vertex-count filtration via the derivative recurrence
	//   m C_m = m Y_m - sum_{k=1}^{m-1} k C_k Y_{m-k}
	std::vector<Poly> logs(max_vertices + 1, Poly(nv));
	for (int m = 1; m <= max_vertices; ++m)
	{
		Poly acc = BigRat(m) * sectors[m];
		for (int k = 1; k < m; ++k)
			acc -= BigRat(k) * poly_mul(logs[k], sectors[m - k], parity);
		logs[m] = prune(BigRat(1, m) * acc, m);
	}
	Poly W(nv);
	for (int m = 1; m <= max_vertices; ++m) W += logs[m];
	W = W.shift_hbar(1);
	if (W.min_hbar() < 0)
		throw InternalError("connected expansion left negative hbar powers");
	return W.truncate(hbar_cutoff, max_degree);
}

/**
 * RG flow as a sum over connected stable graphs: vertices of genus g and
 * valency k carry the hbar^g degree-k component of I, edges contract with P,
 * and each class weighs in with hbar^{g(gamma)} / |Aut gamma|.  Independent
 * of the exponential route; the two must agree on the same window.
 */
inline Poly rg_flow_graphs(Kernel const &P, Poly const &I, std::vector<int> const &parity,
                           int hbar_cutoff, int max_degree)
{
	validate_interaction(I);
	if (kernel_parity(P, parity) != 0)
		throw ValidationError("RG-flow propagator must be even");
	int nv = I.nvars();
	// vertex types present in I: (genus, valency) -> component polynomial
	std::map<std::pair<int, int>, Poly> components;
	for (auto &[k, c] : I.terms())
	{
		auto key = std::make_pair(k.hbar, k.degree());
		auto [it, fresh] = components.emplace(key, Poly(nv));
		PolyKey stripped = k;
		stripped.hbar = 0;
		it->second.add(stripped, c);
	}
	std::vector<std::pair<int, int>> types;
	for (auto &[gk, p] : components) types.push_back({gk.first, gk.second});
	int max_vertices = rg_vertex_bound(hbar_cutoff, max_degree);
	auto classes = enumerate_stable_connected(types, max_vertices, max_degree, hbar_cutoff);

	// multi-copy algebra: variable (v, a) = v * nv + a
	Poly W(nv);
	for (auto &cls : classes)
	{
		MultiGraph const &g = cls.canon;
		int V = g.V;
		std::vector<int> cparity(V * nv);
		for (int v = 0; v < V; ++v)
			for (int a = 0; a < nv; ++a) cparity[v * nv + a] = parity[a];
		// product of per-vertex components on their own copies
		Poly prod = Poly::scalar(V * nv, BigRat(1));
		bool missing = false;
		for (int v = 0; v < V && !missing; ++v)
		{
			auto it = components.find({g.genus[v], g.valency(v)});
			if (it == components.end())
			{
				missing = true;
				break;
			}
			Poly lifted(V * nv);
			for (auto &[k, c] : it->second.terms())
			{
				PolyKey nk;
				nk.exps.assign(V * nv, 0);
				for (int a = 0; a < nv; ++a) nk.exps[v * nv + a] = k.exps[a];
				nk.hbar = 0;
				lifted.add(nk, c);
			}
			prod = poly_mul(prod, lifted, cparity);
		}
		if (missing) continue;
		// one contraction operator per edge copy (loops contract one copy twice)
		auto edge_op = [&](Poly const &F, int u, int v) {
			Poly r(V * nv);
			for (int a = 0; a < nv; ++a)
				for (int b = 0; b < nv; ++b)
				{
					if (P.coef[a][b].is_zero()) continue;
					r += P.coef[a][b] *
					     poly_derive(poly_derive(F, v * nv + b, cparity), u * nv + a, cparity);
				}
			return r;
		};
		for (int u = 0; u < V && !prod.is_zero(); ++u)
		{
			for (int l = 0; l < g.loops[u]; ++l) prod = edge_op(prod, u, u);
			for (int v = u + 1; v < V; ++v)
				for (int k = 0; k < g.mult[u][v]; ++k) prod = edge_op(prod, u, v);
		}
		if (prod.is_zero()) continue;
		// collapse copies to the shared field and restore tail multiplicities
		BigRat tail_fact(1);
		for (int v = 0; v < V; ++v) tail_fact *= factorial<BigRat>(g.tails[v]);
		Poly collapsed(nv);
		for (auto &[k, c] : prod.terms())
		{
			PolyKey nk;
			nk.exps.assign(nv, 0);
			int sign = 1;
			// move odd variables of later copies into the shared slots; the
			// copies appear in ascending (copy, var) order so the merge sign
			// is the pairwise odd-crossing count
			std::vector<uint8_t> acc(nv, 0);
			for (int v = 0; v < V && sign; ++v)
			{
				std::vector<uint8_t> cur(nv, 0);
				for (int a = 0; a < nv; ++a) cur[a] = k.exps[v * nv + a];
				int s = bv_detail::odd_merge_sign(acc, cur, parity);
				if (!s)
				{
					sign = 0;
					break;
				}
				sign *= s;
				for (int a = 0; a < nv; ++a) acc[a] = uint8_t(acc[a] + cur[a]);
			}
			if (!sign) continue;
			nk.exps = acc;
			nk.hbar = k.hbar;
			collapsed.add(nk, BigRat(sign) * c);
		}
		int genus = g.total_genus();
		if (genus > hbar_cutoff) continue;
		W += (tail_fact / BigRat(cls.aut)) * collapsed.shift_hbar(genus);
	}
	return W.truncate(hbar_cutoff, max_degree);
}

/**
 * W(P, I) = hbar log(e^{hbar d_P} e^{I/hbar}) on the window
 * (hbar <= hbar_cutoff, degree <= max_degree), evaluated by the graph sum and
 * by the exponential expansion; the two routes must agree.
 */
inline Poly rg_flow(Kernel const &P, Poly const &I, std::vector<int> const &parity,
                    int hbar_cutoff, int max_degree)
{
	Poly we = rg_flow_exponential(P, I, parity, hbar_cutoff, max_degree);
	Poly wg = rg_flow_graphs(P, I, parity, hbar_cutoff, max_degree);
	if (!(we == wg))
		throw InternalError("RG flow routes disagree (graph sum vs exponential expansion)");
	return we;
}

} // namespace rw
