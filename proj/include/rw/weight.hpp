#pragma once

#include "rw/fraction.hpp"
#include "rw/graph.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

namespace rw {

/** Gauss-Jordan inverse of an exact-rational matrix; throws when singular. */
inline std::vector<std::vector<Rat>> invert_rat_matrix(std::vector<std::vector<Rat>> m,
                                                       std::string const &what = "matrix")
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
		if (piv < 0) throw ValidationError(what + " is not invertible");
		std::swap(m[piv], m[col]);
		std::swap(inv[piv], inv[col]);
		Rat p = m[col][col];
		for (int k = 0; k < d; ++k)
		{
			m[col][k] /= p;
			inv[col][k] /= p;
		}
		for (int r = 0; r < d; ++r)
		{
			if (r == col || m[r][col].is_zero()) continue;
			Rat f = m[r][col];
			for (int k = 0; k < d; ++k)
			{
				m[r][k] -= f * m[col][k];
				inv[r][k] -= f * inv[col][k];
			}
		}
	}
	return inv;
}

/**
 * Formal holomorphic-symplectic target: half-dimension n (2n fiber
 * directions), the symplectic form and its inverse, and per-valency vertex
 * tensors with one antiholomorphic slot and k totally symmetric fiber slots.
 * Tensor entries are stored under sorted index keys, which enforces the
 * symmetry invariant structurally.
 */
struct TargetData {
	int n = 1;
	std::vector<std::vector<Rat>> omega, omega_inv;
	// valency -> (abar, sorted fiber indices) -> value; 0-based indices
	std::map<int, std::map<std::pair<int, std::vector<int>>, Rat>> vertex_tensors;
	// harmonic label (1-based) -> fiber vector, for concrete tail evaluation
	std::map<int, std::vector<Rat>> tail_vectors;

	int dim() const { return 2 * n; }

	Rat tensor(int valency, int abar, std::vector<int> idx) const
	{
		auto it = vertex_tensors.find(valency);
		if (it == vertex_tensors.end())
			throw ValidationError("no vertex tensor of valency " + std::to_string(valency));
		std::sort(idx.begin(), idx.end());
		auto jt = it->second.find({abar, idx});
		return jt == it->second.end() ? Rat(0) : jt->second;
	}

	void validate() const
	{
		if (n < 0 || n > 4) throw ValidationError("target needs 0 <= n <= 4");
		if (int(omega.size()) != dim()) throw ValidationError("omega must be 2n x 2n");
		for (int i = 0; i < dim(); ++i)
		{
			if (int(omega[i].size()) != dim()) throw ValidationError("omega must be 2n x 2n");
			for (int j = 0; j < dim(); ++j)
				if (omega[i][j] != -omega[j][i])
					throw ValidationError("omega must be antisymmetric");
		}
		for (auto &[k, entries] : vertex_tensors)
		{
			if (k < 3)
				throw ValidationError("vertex tensors must have valency >= 3 (interaction is at least cubic)");
			for (auto &[key, v] : entries)
			{
				if (key.first < 0 || key.first >= dim())
					throw ValidationError("abar index out of range");
				if (int(key.second.size()) != k)
					throw ValidationError("tensor entry arity mismatch");
				for (int i : key.second)
					if (i < 0 || i >= dim()) throw ValidationError("fiber index out of range");
			}
		}
	}
};

/** Per-tail harmonic labels (1-based), parallel to the canonical tail order. */
struct TailAssignment {
	std::vector<int> labels;
};

/**
 * Weight values are polynomials in the abstract tail symbols x_{label,index};
 * a concrete TailAssignment evaluation substitutes target.tail_vectors.
 * Monomial keys are sorted (label, index) pairs with multiplicity.
 */
using TailMonomial = std::vector<std::pair<int, int>>;
using TailPoly = std::map<TailMonomial, Rat>;

inline TailPoly tail_scalar(Rat c)
{
	TailPoly p;
	if (!c.is_zero()) p[{}] = c;
	return p;
}
inline void tail_add(TailPoly &a, TailPoly const &b, Rat scale = Rat(1))
{
	for (auto &[m, c] : b)
	{
		auto v = c * scale;
		if (v.is_zero()) continue;
		auto it = a.find(m);
		if (it == a.end())
			a.emplace(m, v);
		else
		{
			it->second += v;
			if (it->second.is_zero()) a.erase(it);
		}
	}
}
inline TailPoly tail_mul(TailPoly const &a, TailPoly const &b)
{
	TailPoly r;
	for (auto &[ma, ca] : a)
		for (auto &[mb, cb] : b)
		{
			TailMonomial m = ma;
			m.insert(m.end(), mb.begin(), mb.end());
			std::sort(m.begin(), m.end());
			auto v = ca * cb;
			auto it = r.find(m);
			if (it == r.end())
				r.emplace(std::move(m), v);
			else
			{
				it->second += v;
				if (it->second.is_zero()) r.erase(it);
			}
		}
	return r;
}
inline Rat tail_eval(TailPoly const &p, std::map<int, std::vector<Rat>> const &vectors)
{
	Rat total(0);
	for (auto &[m, c] : p)
	{
		Rat v = c;
		for (auto &[label, idx] : m)
		{
			auto it = vectors.find(label);
			if (it == vectors.end())
				throw ValidationError("no tail vector for label " + std::to_string(label));
			v *= it->second.at(idx);
		}
		total += v;
	}
	return total;
}

namespace detail {

/** parity of the permutation taking `src` to `dst` (equal as multisets of distinct ids) */
inline int word_sort_sign(std::vector<int> const &src, std::vector<int> const &dst)
{
	std::map<int, int> pos;
	for (int i = 0; i < int(dst.size()); ++i) pos[dst[i]] = i;
	std::vector<int> perm(src.size());
	for (int i = 0; i < int(src.size()); ++i) perm[i] = pos.at(src[i]);
	int inv = 0;
	for (size_t i = 0; i < perm.size(); ++i)
		for (size_t j = i + 1; j < perm.size(); ++j)
			if (perm[i] > perm[j]) ++inv;
	return (inv & 1) ? -1 : 1;
}

} // namespace detail

/**
 * Rozansky-Witten weight of a trivalent graph: contracts one vertex tensor
 * per vertex along internal edges with omega^{ij}, closes the antiholomorphic
 * slots with a top epsilon contraction over the 2n vertices, and feeds tails
 * abstract harmonic symbols.  All orientation data (vertex order, edge
 * directions, half-edge order at vertices, tail order) is taken from the
 * canonical labeling; the Koszul sign of sorting the odd half-edge word into
 * vertex-blocks -> edge-pairs -> tails multiplies the result.
 *
 * Returns the symbolic polynomial in tail symbols; use rw_class() for the
 * concrete rational value.
 */
inline TailPoly rw_weight_symbolic(MultiGraph const &graph, TargetData const &target,
                                   TailAssignment const &tails)
{
	target.validate();
	MultiGraph g = canonicalize(graph).canon;
	int V = g.V, d = target.dim();
	for (int v = 0; v < V; ++v)
		if (g.genus[v] != 0) throw ValidationError("weight system expects genus-0 vertices");
	int T = g.num_tails();
	if (!tails.labels.empty() && int(tails.labels.size()) != T)
		throw ValidationError("tail assignment must label every tail");
	// vertices carrying a tensor must number exactly 2n, else the epsilon
	// contraction has the wrong arity and the weight vanishes
	if (V != 2 * target.n) return {};

	// canonical edge list (loops first per vertex, then upper-triangle copies)
	std::vector<std::pair<int, int>> edge_vertices; // (u, v) per edge copy
	for (int u = 0; u < V; ++u)
	{
		for (int l = 0; l < g.loops[u]; ++l) edge_vertices.push_back({u, u});
		for (int v = u + 1; v < V; ++v)
			for (int k = 0; k < g.mult[u][v]; ++k) edge_vertices.push_back({u, v});
	}
	int E = int(edge_vertices.size());

	// ids: theta_v = v; tail t = V + t; edge e halves = V + T + 2e, V + T + 2e + 1
	std::vector<std::vector<int>> vertex_word(V); // per-vertex half-edge ids in order
	{
		int t = 0;
		for (int v = 0; v < V; ++v)
			for (int k = 0; k < g.tails[v]; ++k) vertex_word[v].push_back(V + t++);
	}
	// loops attach both halves to their vertex, then edges by canonical order
	std::vector<std::vector<int>> vertex_edge_slots(V); // edge-half ids per vertex
	for (int e = 0; e < E; ++e)
	{
		auto [u, v] = edge_vertices[e];
		int h0 = V + T + 2 * e, h1 = h0 + 1;
		vertex_edge_slots[u].push_back(h0);
		vertex_edge_slots[v].push_back(h1);
	}
	std::vector<int> src, dst;
	for (int v = 0; v < V; ++v)
	{
		src.push_back(v);
		for (int id : vertex_word[v]) src.push_back(id);
		for (int id : vertex_edge_slots[v]) src.push_back(id);
	}
	for (int v = 0; v < V; ++v) dst.push_back(v);
	for (int e = 0; e < E; ++e)
	{
		dst.push_back(V + T + 2 * e);
		dst.push_back(V + T + 2 * e + 1);
	}
	for (int t = 0; t < T; ++t) dst.push_back(V + t);
	int koszul = detail::word_sort_sign(src, dst);

	// per-vertex contracted tensors: abar x (edge-slot index tuple) -> TailPoly
	// (tails folded in symbolically)
	std::vector<int> vertex_valency(V), vertex_edge_count(V);
	for (int v = 0; v < V; ++v)
	{
		vertex_edge_count[v] = int(vertex_edge_slots[v].size());
		vertex_valency[v] = vertex_edge_count[v] + g.tails[v];
		if (vertex_valency[v] != 3)
			throw ValidationError("weight system requires trivalent vertices");
	}
	// tail labels per vertex in canonical tail order
	std::vector<std::vector<int>> vertex_tail_labels(V);
	{
		int t = 0;
		for (int v = 0; v < V; ++v)
			for (int k = 0; k < g.tails[v]; ++k, ++t)
				vertex_tail_labels[v].push_back(tails.labels.empty() ? 1 : tails.labels[t]);
	}
	auto contracted = [&](int v, int abar, std::vector<int> const &edge_idx) -> TailPoly {
		// sum over tail slot indices of Phi(abar; edge_idx, tail_idx) * symbols
		TailPoly out;
		int tcount = g.tails[v];
		std::vector<int> tidx(tcount, 0);
		while (true)
		{
			std::vector<int> full = edge_idx;
			full.insert(full.end(), tidx.begin(), tidx.end());
			Rat base = target.tensor(vertex_valency[v], abar, full);
			if (!base.is_zero())
			{
				TailMonomial m;
				for (int k = 0; k < tcount; ++k)
					m.push_back({vertex_tail_labels[v][k], tidx[k]});
				std::sort(m.begin(), m.end());
				TailPoly term;
				term[std::move(m)] = base;
				tail_add(out, term);
			}
			int k = tcount - 1;
			while (k >= 0 && ++tidx[k] == d) tidx[k--] = 0;
			if (k < 0) break;
		}
		return out;
	};

	// enumerate edge fiber assignments, accumulating the epsilon determinant
	TailPoly total;
	std::vector<int> half_idx(2 * E, 0);
	std::function<void(int, Rat)> assign = [&](int e, Rat w) {
		if (e == E)
		{
			// matrix M[v][abar] of contracted tensors; Leibniz determinant
			std::vector<std::vector<TailPoly>> M(V, std::vector<TailPoly>(d));
			for (int v = 0; v < V; ++v)
			{
				std::vector<int> eidx;
				for (int id : vertex_edge_slots[v]) eidx.push_back(half_idx[id - V - T]);
				for (int abar = 0; abar < d; ++abar) M[v][abar] = contracted(v, abar, eidx);
			}
			std::vector<int> perm(V);
			std::iota(perm.begin(), perm.end(), 0);
			do
			{
				int inv = 0;
				for (int i = 0; i < V; ++i)
					for (int j = i + 1; j < V; ++j)
						if (perm[i] > perm[j]) ++inv;
				TailPoly prod = tail_scalar((inv & 1) ? -w : w);
				for (int v = 0; v < V && !prod.empty(); ++v) prod = tail_mul(prod, M[v][perm[v]]);
				tail_add(total, prod);
			} while (std::next_permutation(perm.begin(), perm.end()));
			return;
		}
		for (int i = 0; i < d; ++i)
			for (int j = 0; j < d; ++j)
			{
				Rat om = target.omega_inv[i][j];
				if (om.is_zero()) continue;
				half_idx[2 * e] = i;
				half_idx[2 * e + 1] = j;
				assign(e + 1, w * om);
			}
	};
	assign(0, Rat(koszul));
	return total;
}

/** concrete Rozansky-Witten weight; tails evaluated through target.tail_vectors */
inline Rat rw_class(MultiGraph const &graph, TargetData const &target,
                    TailAssignment const &tails)
{
	TailPoly p = rw_weight_symbolic(graph, target, tails);
	if (p.empty()) return Rat(0);
	bool needs_vectors = false;
	for (auto &[m, c] : p) needs_vectors = needs_vectors || !m.empty();
	if (!needs_vectors) return p.count({}) ? p.at({}) : Rat(0);
	return tail_eval(p, target.tail_vectors);
}

/**
 * Full symmetrization of raw ordered entries with 1/k! normalization;
 * result stored under sorted keys.  raw maps ordered index tuples to values.
 */
inline std::map<std::pair<int, std::vector<int>>, Rat>
symmetrize_tensor(std::map<std::pair<int, std::vector<int>>, Rat> const &raw, int valency)
{
	std::map<std::pair<int, std::vector<int>>, Rat> out;
	Rat kfact = factorial<Rat>(valency);
	for (auto &[key, v] : raw)
	{
		if (int(key.second.size()) != valency)
			throw ValidationError("raw tensor entry arity mismatch");
		std::vector<int> sorted = key.second;
		std::sort(sorted.begin(), sorted.end());
		// multiplicity of the multiset: product of repetition factorials
		Rat mu(1);
		for (size_t i = 0; i < sorted.size();)
		{
			size_t j = i;
			while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
			mu *= factorial<Rat>(int(j - i));
			i = j;
		}
		auto [it, fresh] = out.emplace(std::make_pair(key.first, std::move(sorted)), Rat(0));
		it->second += mu / kfact * v;
	}
	for (auto it = out.begin(); it != out.end();)
		it = it->second.is_zero() ? out.erase(it) : std::next(it);
	return out;
}

/**
 * Recomputes the weight after an arbitrary relabeling of the graph
 * presentation; equality certifies that the value is a class function.
 */
inline bool relabel_invariance_check(MultiGraph const &graph, TargetData const &target,
                                     TailAssignment const &tails,
                                     std::vector<int> const &vertex_perm)
{
	if (int(vertex_perm.size()) != graph.V) throw ValidationError("bad permutation size");
	MultiGraph h = detail::apply_perm(graph, vertex_perm);
	return rw_weight_symbolic(graph, target, tails) == rw_weight_symbolic(h, target, tails);
}

} // namespace rw
