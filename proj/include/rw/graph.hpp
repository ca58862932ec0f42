#pragma once

#include "rw/fraction.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace rw {

/**
 * Stable graph in half-edge form: an involution sigma on half-edges (fixed
 * points are tails, 2-orbits are internal edges), an incidence map to
 * vertices, and a genus label per vertex.
 */
struct StableGraph {
	std::vector<int> genus;     // per vertex
	std::vector<int> he_vertex; // half-edge -> vertex
	std::vector<int> sigma;     // involution on half-edges

	int num_vertices() const { return int(genus.size()); }
	int num_half_edges() const { return int(sigma.size()); }

	void validate() const
	{
		int H = num_half_edges();
		if (int(he_vertex.size()) != H) throw ValidationError("incidence size mismatch");
		for (int h = 0; h < H; ++h)
		{
			if (sigma[h] < 0 || sigma[h] >= H || sigma[sigma[h]] != h)
				throw ValidationError("sigma is not an involution");
			if (he_vertex[h] < 0 || he_vertex[h] >= num_vertices())
				throw ValidationError("half-edge incident to no vertex");
		}
		for (int g : genus)
			if (g < 0) throw ValidationError("negative vertex genus");
	}

	std::vector<int> tails() const
	{
		std::vector<int> t;
		for (int h = 0; h < num_half_edges(); ++h)
			if (sigma[h] == h) t.push_back(h);
		return t;
	}
	std::vector<std::pair<int, int>> edges() const
	{
		std::vector<std::pair<int, int>> e;
		for (int h = 0; h < num_half_edges(); ++h)
			if (sigma[h] > h) e.push_back({h, sigma[h]});
		return e;
	}
	int valency(int v) const
	{
		int k = 0;
		for (int h = 0; h < num_half_edges(); ++h)
			if (he_vertex[h] == v) ++k;
		return k;
	}
};

/**
 * Compact multigraph form: edge multiplicities, per-vertex loop counts,
 * unlabeled tail counts and genus labels.  This is the canonicalization
 * domain; StableGraph converts to it losslessly up to isomorphism.
 */
struct MultiGraph {
	int V = 0;
	std::vector<int> genus, tails, loops;
	std::vector<std::vector<int>> mult; // symmetric, zero diagonal

	static MultiGraph empty(int V)
	{
		MultiGraph g;
		g.V = V;
		g.genus.assign(V, 0);
		g.tails.assign(V, 0);
		g.loops.assign(V, 0);
		g.mult.assign(V, std::vector<int>(V, 0));
		return g;
	}

	int num_edges() const
	{
		int e = 0;
		for (int u = 0; u < V; ++u)
		{
			e += loops[u];
			for (int v = u + 1; v < V; ++v) e += mult[u][v];
		}
		return e;
	}
	int num_tails() const { return std::accumulate(tails.begin(), tails.end(), 0); }
	int valency(int v) const
	{
		int k = tails[v] + 2 * loops[v];
		for (int u = 0; u < V; ++u) k += mult[v][u];
		return k;
	}
	int num_components() const
	{
		if (V == 0) return 0;
		std::vector<int> comp(V, -1);
		int c = 0;
		for (int s = 0; s < V; ++s)
		{
			if (comp[s] >= 0) continue;
			std::vector<int> stack{s};
			comp[s] = c;
			while (!stack.empty())
			{
				int u = stack.back();
				stack.pop_back();
				for (int w = 0; w < V; ++w)
					if (mult[u][w] > 0 && comp[w] < 0)
					{
						comp[w] = c;
						stack.push_back(w);
					}
			}
			++c;
		}
		return c;
	}
	bool connected() const { return V <= 1 || num_components() == 1; }
	bool has_self_loop() const
	{
		for (int l : loops)
			if (l > 0) return true;
		return false;
	}
	int first_betti() const { return num_edges() - V + num_components(); }
	int total_genus() const
	{
		return first_betti() + std::accumulate(genus.begin(), genus.end(), 0);
	}
	bool stable() const
	{
		for (int v = 0; v < V; ++v)
		{
			int k = valency(v);
			if (genus[v] == 0 && k < 3) return false;
			if (genus[v] == 1 && k < 1) return false;
		}
		return true;
	}
};

inline MultiGraph to_multigraph(StableGraph const &g)
{
	g.validate();
	MultiGraph m = MultiGraph::empty(g.num_vertices());
	m.genus = g.genus;
	for (int h = 0; h < g.num_half_edges(); ++h)
	{
		if (g.sigma[h] == h)
			m.tails[g.he_vertex[h]]++;
		else if (g.sigma[h] > h)
		{
			int u = g.he_vertex[h], v = g.he_vertex[g.sigma[h]];
			if (u == v)
				m.loops[u]++;
			else
			{
				m.mult[u][v]++;
				m.mult[v][u]++;
			}
		}
	}
	return m;
}

inline StableGraph to_half_edges(MultiGraph const &m)
{
	StableGraph g;
	g.genus = m.genus;
	auto add_he = [&](int v) {
		g.he_vertex.push_back(v);
		g.sigma.push_back(int(g.sigma.size()));
		return int(g.sigma.size()) - 1;
	};
	for (int v = 0; v < m.V; ++v)
		for (int t = 0; t < m.tails[v]; ++t) add_he(v);
	for (int v = 0; v < m.V; ++v)
		for (int l = 0; l < m.loops[v]; ++l)
		{
			int a = add_he(v), b = add_he(v);
			g.sigma[a] = b;
			g.sigma[b] = a;
		}
	for (int u = 0; u < m.V; ++u)
		for (int v = u + 1; v < m.V; ++v)
			for (int k = 0; k < m.mult[u][v]; ++k)
			{
				int a = add_he(u), b = add_he(v);
				g.sigma[a] = b;
				g.sigma[b] = a;
			}
	return g;
}

/** g(gamma) = b1 + sum of vertex genera */
inline int graph_genus(StableGraph const &g) { return to_multigraph(g).total_genus(); }
inline bool is_stable(StableGraph const &g) { return to_multigraph(g).stable(); }
inline bool has_self_loop(StableGraph const &g) { return to_multigraph(g).has_self_loop(); }

namespace detail {

using CanonKey = std::vector<uint16_t>;

/**
 * Label-invariant vertex coloring by iterated refinement of
 * (genus, tails, loops) with the multiset of colored neighbor
 * multiplicities.  Automorphisms preserve colors, so the canonical search
 * may restrict to color-respecting permutations.
 */
inline std::vector<int> refine_colors(MultiGraph const &g)
{
	std::vector<std::vector<int>> sig(g.V);
	std::vector<int> color(g.V, 0);
	for (int v = 0; v < g.V; ++v) sig[v] = {g.genus[v], g.tails[v], g.loops[v]};
	int ncolors = 0;
	for (int round = 0; round <= g.V; ++round)
	{
		std::map<std::vector<int>, int> ids;
		for (int v = 0; v < g.V; ++v) ids.emplace(sig[v], 0);
		int next = 0;
		for (auto &[s, id] : ids) id = next++;
		for (int v = 0; v < g.V; ++v) color[v] = ids[sig[v]];
		if (next == ncolors) break;
		ncolors = next;
		for (int v = 0; v < g.V; ++v)
		{
			std::vector<std::pair<int, int>> nb;
			for (int u = 0; u < g.V; ++u)
				if (u != v && g.mult[v][u]) nb.push_back({color[u], g.mult[v][u]});
			std::sort(nb.begin(), nb.end());
			sig[v] = {color[v]};
			for (auto &[c, m] : nb)
			{
				sig[v].push_back(c);
				sig[v].push_back(m);
			}
		}
	}
	return color;
}

/**
 * Minimal row-by-row rendering over color-respecting permutations: position
 * a contributes (genus, tails, loops) and its multiplicities to positions
 * 0..a-1.  The string determines the graph completely, and the restriction
 * to color-respecting maps is label-invariant, so equal keys mean isomorphic
 * graphs.  `hits` counts the permutations realizing the minimum, i.e. the
 * vertex-level automorphisms.
 */
struct CanonSearch {
	MultiGraph const &g;
	std::vector<int> color;
	std::vector<int> slot_color; // color required at each position
	CanonKey best;
	long long hits = 0;        // permutations realizing `best`
	std::vector<int> best_pos; // one minimizing position map
	std::vector<int> pos;      // position -> original vertex
	std::vector<bool> used;
	CanonKey cur;

	explicit CanonSearch(MultiGraph const &graph) : g(graph)
	{
		color = refine_colors(g);
		slot_color = color;
		std::sort(slot_color.begin(), slot_color.end());
		pos.assign(g.V, -1);
		used.assign(g.V, false);
		dfs(0, true);
	}

	/**
	 * `tied` records that cur so far equals the prefix of `best` at the time
	 * the ancestors were expanded.  Pruning (prefix > best) is only sound
	 * while tied; leaves always do a full comparison, which keeps the search
	 * correct when `best` improves mid-traversal.
	 */
	void dfs(int a, bool tied)
	{
		if (a == g.V)
		{
			if (hits == 0 || cur < best)
			{
				best = cur;
				best_pos = pos;
				hits = 1;
			}
			else if (cur == best)
				++hits;
			return;
		}
		for (int v = 0; v < g.V; ++v)
		{
			if (used[v] || color[v] != slot_color[a]) continue;
			size_t mark = cur.size();
			cur.push_back(uint16_t(g.genus[v]));
			cur.push_back(uint16_t(g.tails[v]));
			cur.push_back(uint16_t(g.loops[v]));
			for (int b = 0; b < a; ++b) cur.push_back(uint16_t(g.mult[v][pos[b]]));
			bool viable = true, desc_tied = tied;
			if (hits > 0 && tied)
			{
				int cmp = 0;
				for (size_t i = mark; i < cur.size() && cmp == 0; ++i)
					if (cur[i] != best[i]) cmp = cur[i] < best[i] ? -1 : 1;
				viable = cmp <= 0;
				desc_tied = cmp == 0;
			}
			if (viable)
			{
				used[v] = true;
				pos[a] = v;
				dfs(a + 1, desc_tied);
				used[v] = false;
			}
			cur.resize(mark);
		}
	}
};

} // namespace detail

/** Isomorphism-class representative with canonical key and automorphism order. */
struct GraphClass {
	MultiGraph canon;
	std::string key;
	long long aut = 1;

	friend bool operator<(GraphClass const &a, GraphClass const &b) { return a.key < b.key; }
};

namespace detail {

inline std::string key_to_string(CanonKey const &k)
{
	std::string s;
	s.reserve(k.size() * 3);
	for (auto v : k)
	{
		s += std::to_string(v);
		s += '.';
	}
	return s;
}

inline MultiGraph apply_perm(MultiGraph const &g, std::vector<int> const &pos)
{
	MultiGraph r = MultiGraph::empty(g.V);
	for (int a = 0; a < g.V; ++a)
	{
		r.genus[a] = g.genus[pos[a]];
		r.tails[a] = g.tails[pos[a]];
		r.loops[a] = g.loops[pos[a]];
	}
	for (int a = 0; a < g.V; ++a)
		for (int b = 0; b < g.V; ++b)
			r.mult[a][b] = g.mult[pos[a]][pos[b]];
	return r;
}

} // namespace detail

/**
 * Canonical class of a multigraph.  |Aut| counts (vertex, half-edge)
 * bijections commuting with the involution and incidence and preserving
 * genus labels, with tails unlabeled: vertex-level count times the half-edge
 * factors  prod m_uv! * prod (2^l l!) * prod t!.
 */
inline GraphClass canonicalize(MultiGraph const &g)
{
	detail::CanonSearch s(g);
	GraphClass c;
	c.canon = g.V ? detail::apply_perm(g, s.best_pos) : g;
	c.key = detail::key_to_string(s.best);
	long long aut = s.hits;
	for (int u = 0; u < g.V; ++u)
	{
		for (int v = u + 1; v < g.V; ++v)
			aut *= factorial<Rat>(g.mult[u][v]).num();
		aut *= factorial<Rat>(g.loops[u]).num() << g.loops[u];
		aut *= factorial<Rat>(g.tails[u]).num();
	}
	c.aut = aut;
	return c;
}

/** order of Aut as above; brute-force bound |V| <= 12 */
inline long long automorphism_order(StableGraph const &g)
{
	if (g.num_vertices() > 12) throw ValidationError("automorphism bound |V| <= 12 exceeded");
	return canonicalize(to_multigraph(g)).aut;
}

namespace detail {

/**
 * Enumerates all symmetric multiplicity matrices (plus loop counts when
 * allowed) realizing the per-vertex stub budget in `residual`, emitting each
 * completed graph.  Row by row: vertex u fixes its loops, then distributes
 * the rest onto higher-indexed vertices.
 */
template <class F> struct AdjacencyEnum {
	MultiGraph &g;
	std::vector<int> &residual;
	bool allow_loops;
	F &emit;
	// loop_link[u] >= 0 caps loops[u] by loops[loop_link[u]] (symmetry cut for
	// interchangeable vertices; the canonical dedup keeps this safe)
	std::vector<int> const *loop_link = nullptr;

	void vertex(int u)
	{
		if (u == g.V)
		{
			emit(g);
			return;
		}
		int lmax = allow_loops ? residual[u] / 2 : 0;
		if (loop_link && (*loop_link)[u] >= 0)
			lmax = std::min(lmax, g.loops[(*loop_link)[u]]);
		for (int l = 0; l <= lmax; ++l)
		{
			g.loops[u] = l;
			row(u, u + 1, residual[u] - 2 * l);
			g.loops[u] = 0;
		}
	}

	void row(int u, int v, int left)
	{
		if (v == g.V)
		{
			if (left == 0) vertex(u + 1);
			return;
		}
		int cap = std::min(left, residual[v]);
		for (int m = 0; m <= cap; ++m)
		{
			g.mult[u][v] = g.mult[v][u] = m;
			residual[v] -= m;
			row(u, v + 1, left - m);
			residual[v] += m;
			g.mult[u][v] = g.mult[v][u] = 0;
		}
	}
};

template <class F>
void enumerate_adjacency(MultiGraph &g, std::vector<int> &residual, bool allow_loops, F &&emit,
                         std::vector<int> const *loop_link = nullptr)
{
	AdjacencyEnum<F> e{g, residual, allow_loops, emit, loop_link};
	e.vertex(0);
}

/** partitions of t into at most slots parts, each <= maxpart, non-increasing */
inline void partitions_into(int t, int slots, int maxpart, std::vector<int> &cur,
                            std::vector<std::vector<int>> &out)
{
	if (slots == 0)
	{
		if (t == 0) out.push_back(cur);
		return;
	}
	int hi = std::min(maxpart, t);
	for (int p = hi; p >= 0; --p)
	{
		cur.push_back(p);
		partitions_into(t - p, slots - 1, p, cur, out);
		cur.pop_back();
	}
}

} // namespace detail

/**
 * All isomorphism classes of genus-0 exactly-trivalent graphs without
 * self-loops with the given vertex and tail counts; parallel edges allowed.
 */
inline std::vector<GraphClass> enumerate_trivalent(int num_vertices, int num_tails,
                                                   bool allow_disconnected)
{
	if (num_vertices < 0 || num_vertices > 8)
		throw ValidationError("enumerate_trivalent bound |V| <= 8 exceeded");
	int stubs = 3 * num_vertices - num_tails;
	if (num_tails < 0 || stubs < 0 || stubs % 2 != 0)
		throw ValidationError("no nonnegative solution of 3V = 2E + T");
	std::map<std::string, GraphClass> classes;
	std::vector<std::vector<int>> tail_parts;
	std::vector<int> scratch;
	detail::partitions_into(num_tails, num_vertices, 3, scratch, tail_parts);
	for (auto &tp : tail_parts)
	{
		MultiGraph g = MultiGraph::empty(num_vertices);
		std::vector<int> residual(num_vertices);
		for (int v = 0; v < num_vertices; ++v)
		{
			g.tails[v] = tp[v];
			residual[v] = 3 - tp[v];
		}
		detail::enumerate_adjacency(g, residual, /*allow_loops=*/false,
		                            [&](MultiGraph const &cand) {
			                            if (!allow_disconnected && !cand.connected()) return;
			                            GraphClass c = canonicalize(cand);
			                            classes.emplace(c.key, std::move(c));
		                            });
	}
	std::vector<GraphClass> out;
	for (auto &[k, c] : classes) out.push_back(std::move(c));
	return out;
}

/**
 * General stable-graph enumeration for the RG-flow sum: connected classes
 * with per-vertex (genus, valency) drawn from `types`, any tail placement,
 * self-loops allowed, total tails <= max_tails, graph genus <= max_genus.
 */
inline std::vector<GraphClass> enumerate_stable_connected(
    std::vector<std::pair<int, int>> const &types, int max_vertices, int max_tails,
    int max_genus)
{
	for (auto [g, k] : types)
		if ((g == 0 && k < 3) || (g == 1 && k < 1) || g < 0 || k < 0)
			throw ValidationError("unstable vertex type (genus, valency)");
	std::map<std::string, GraphClass> classes;
	// multisets of type indices, non-decreasing
	std::vector<int> pick;
	auto process_pick = [&]() {
		int V = int(pick.size());
		MultiGraph g = MultiGraph::empty(V);
		int val_sum = 0, genus_sum = 0;
		for (int i = 0; i < V; ++i)
		{
			g.genus[i] = types[pick[i]].first;
			genus_sum += g.genus[i];
			val_sum += types[pick[i]].second;
		}
		// tails distribution (non-increasing within equal-type runs: every
		// class has such a labeling, so no class is lost) then adjacency
		std::vector<int> tails(V, 0);
		std::function<void(int, int)> tail_rec = [&](int v, int used) {
			if (used > max_tails) return;
			if (v == V)
			{
				int stubs = val_sum - used;
				if (stubs % 2) return;
				int E = stubs / 2;
				// connected needs E >= V-1; genus bound prunes too
				if (E < V - 1) return;
				if (E - V + 1 + genus_sum > max_genus) return;
				MultiGraph h = g;
				std::vector<int> residual(V), loop_link(V, -1);
				for (int i = 0; i < V; ++i)
				{
					h.tails[i] = tails[i];
					residual[i] = types[pick[i]].second - tails[i];
					if (i > 0 && pick[i] == pick[i - 1] && tails[i] == tails[i - 1])
						loop_link[i] = i - 1;
				}
				detail::enumerate_adjacency(
				    h, residual, /*allow_loops=*/true,
				    [&](MultiGraph const &cand) {
					    if (!cand.connected()) return;
					    if (cand.total_genus() > max_genus) return;
					    if (!cand.stable())
						    throw InternalError("typed enumeration produced unstable graph");
					    GraphClass c = canonicalize(cand);
					    classes.emplace(c.key, std::move(c));
				    },
				    &loop_link);
				return;
			}
			int cap = types[pick[v]].second;
			if (v > 0 && pick[v] == pick[v - 1]) cap = std::min(cap, tails[v - 1]);
			for (int t = 0; t <= cap; ++t)
			{
				tails[v] = t;
				tail_rec(v + 1, used + t);
			}
			tails[v] = 0;
		};
		tail_rec(0, 0);
	};
	std::function<void(int, int)> pick_rec = [&](int from, int left) {
		if (!pick.empty()) process_pick();
		if (left == 0) return;
		for (int t = from; t < int(types.size()); ++t)
		{
			pick.push_back(t);
			pick_rec(t, left - 1);
			pick.pop_back();
		}
	};
	pick_rec(0, max_vertices);
	std::vector<GraphClass> out;
	for (auto &[k, c] : classes) out.push_back(std::move(c));
	return out;
}

/** admissible harmonic-label assignment: vertex v's tails carry labels 1..b1 */
struct PartitionClass {
	GraphClass cls;
	int b1 = 0; // every vertex carries the full label set {1..b1}
};

/**
 * Graph classes of the partition-function sum for half-dimension n and first
 * Betti number b1: 2n genus-0 trivalent vertices, b1 tails per vertex
 * (distinct-label constraint forces the uniform distribution), (3-b1)n edges,
 * no self-loops; empty for b1 > 3.
 */
inline std::vector<PartitionClass> admissible_partition_graphs(int n, int b1)
{
	if (n < 0 || 2 * n > 8) throw ValidationError("admissible_partition_graphs needs 2n <= 8");
	if (b1 < 0) throw ValidationError("negative b1");
	std::vector<PartitionClass> out;
	if (b1 > 3 || n == 0) return out;
	int V = 2 * n;
	std::map<std::string, GraphClass> classes;
	MultiGraph g = MultiGraph::empty(V);
	std::vector<int> residual(V);
	for (int v = 0; v < V; ++v)
	{
		g.tails[v] = b1;
		residual[v] = 3 - b1;
	}
	detail::enumerate_adjacency(g, residual, /*allow_loops=*/false,
	                            [&](MultiGraph const &cand) {
		                            GraphClass c = canonicalize(cand);
		                            classes.emplace(c.key, std::move(c));
	                            });
	for (auto &[k, c] : classes) out.push_back(PartitionClass{std::move(c), b1});
	return out;
}

/** all S with |S| >= 2 inducing a connected subgraph (codimension-1 strata) */
inline std::vector<std::vector<int>> boundary_strata(StableGraph const &g)
{
	MultiGraph m = to_multigraph(g);
	std::vector<std::vector<int>> out;
	if (m.V > 20) throw ValidationError("boundary_strata bound exceeded");
	for (uint32_t mask = 0; mask < (1u << m.V); ++mask)
	{
		int k = std::popcount(mask);
		if (k < 2) continue;
		// connectivity of the induced subgraph
		int start = std::countr_zero(mask);
		uint32_t seen = 1u << start;
		std::vector<int> stack{start};
		while (!stack.empty())
		{
			int u = stack.back();
			stack.pop_back();
			for (int w = 0; w < m.V; ++w)
				if ((mask >> w & 1) && !(seen >> w & 1) && m.mult[u][w] > 0)
				{
					seen |= 1u << w;
					stack.push_back(w);
				}
		}
		if (seen != mask) continue;
		std::vector<int> S;
		for (int v = 0; v < m.V; ++v)
			if (mask >> v & 1) S.push_back(v);
		out.push_back(std::move(S));
	}
	return out;
}

enum class StratumTag { vanishes_kontsevich, two_vertex_multi_edge, two_vertex_single_edge };

struct StratumClass {
	StratumTag tag;
	int m = 0, n = 0; // valency split for the single-edge case
};

/**
 * Classifies a codimension-1 stratum: |S| >= 3 vanishes; |S| = 2 splits by
 * whether the two vertices share more than one edge, reporting the (m,n)
 * valency split in the single-edge case.
 */
inline StratumClass classify_stratum(StableGraph const &g, std::vector<int> const &S)
{
	MultiGraph m = to_multigraph(g);
	auto strata = boundary_strata(g);
	if (std::find(strata.begin(), strata.end(), S) == strata.end())
		throw ValidationError("not a valid codimension-1 stratum");
	if (S.size() >= 3) return {StratumTag::vanishes_kontsevich, 0, 0};
	int u = S[0], v = S[1];
	if (m.mult[u][v] >= 2) return {StratumTag::two_vertex_multi_edge, 0, 0};
	return {StratumTag::two_vertex_single_edge, m.valency(u) - 1, m.valency(v) - 1};
}

/** compactly supported de Rham cohomology dimensions of the genus-g handle body */
inline std::array<long long, 4> handlebody_cohomology(int g)
{
	if (g < 0) throw ValidationError("negative handle-body genus");
	return {0, 0, g, 1};
}

/**
 * Graded dimension polynomial of the observable fiber (wedge C^{2n})^{tensor g}:
 * coefficients of (1+s)^{2ng}; total dimension 2^{2ng}.
 */
inline std::vector<long long> observable_fiber_character(int n, int g)
{
	if (n < 0 || g < 0) throw ValidationError("negative arguments");
	int d = 2 * n * g;
	std::vector<long long> coeffs(d + 1);
	for (int k = 0; k <= d; ++k) coeffs[k] = binomial(d, k);
	return coeffs;
}

} // namespace rw
