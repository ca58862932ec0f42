#pragma once

#include "rw/graph.hpp"
#include "rw/graph_io.hpp"
#include "rw/parallel.hpp"
#include "rw/weight.hpp"

#include <mutex>
#include <optional>
#include <string>
#include <variant>

namespace rw {

/** exact-or-float analytic weight I_Gamma(M) */
struct AnalyticWeight {
	bool exact = true;
	Rat value;
	double value_f = 0;

	static AnalyticWeight of(Rat v)
	{
		AnalyticWeight w;
		w.value = v;
		w.value_f = v.to_double();
		return w;
	}
	static AnalyticWeight of(double v)
	{
		AnalyticWeight w;
		w.exact = false;
		w.value_f = v;
		return w;
	}
};

/**
 * Source-manifold data: first Betti number, torsion count |H_1(M;Z)|', the
 * externally supplied configuration-space integrals I_Gamma(M) keyed by the
 * graph exchange format, and (for b1 = 3) the harmonic triple intersection
 * that determines the unique class's weight as tau^{2n}.
 */
struct SourceData {
	int b1 = 0;
	long long torsion_count = 1;
	// exchange-format line -> analytic weight
	std::vector<std::pair<std::string, AnalyticWeight>> analytic_weights;
	std::optional<Rat> triple_intersection;

	void validate() const
	{
		if (b1 < 0) throw ValidationError("b1 must be nonnegative");
		if (torsion_count < 1) throw ValidationError("torsion count must be >= 1");
	}

	/** resolves weights to canonical graph keys */
	std::map<std::string, AnalyticWeight> resolved() const
	{
		std::map<std::string, AnalyticWeight> m;
		for (auto &[line, w] : analytic_weights)
		{
			auto parsed = parse_graph_line(line);
			m[canonicalize(parsed.graph).key] = w;
		}
		return m;
	}
};

struct PartitionRow {
	std::string graph;    // exchange-format line of the canonical representative
	long long aut = 1;
	Rat weight;           // b_Gamma for the canonical tail labeling
	AnalyticWeight analytic;
};

struct PartitionResult {
	bool exact = true;
	Rat value;
	double value_f = 0;
	std::vector<PartitionRow> breakdown;
};

/** canonical tail labeling of a partition class: each vertex carries 1..b1 */
inline TailAssignment partition_labels(MultiGraph const &g, int b1)
{
	TailAssignment t;
	for (int v = 0; v < g.V; ++v)
		for (int k = 0; k < g.tails[v]; ++k) t.labels.push_back(k % b1 + 1);
	return t;
}

/**
 * Z_X(M) = |H_1(M;Z)|' . sum_Gamma (1/|Aut Gamma|) b_Gamma(X) I_Gamma(M)
 * over the admissible classes of (n, b1); exactly 0 for b1 > 3 and the bare
 * torsion count for the point target n = 0.  Per-class evaluation runs under
 * the RWK_THREADS budget.
 */
inline PartitionResult assemble_partition(TargetData const &target, SourceData const &source)
{
	target.validate();
	source.validate();
	PartitionResult res;
	if (source.b1 > 3)
	{
		res.value = Rat(0);
		res.value_f = 0;
		return res;
	}
	if (target.n == 0)
	{
		res.value = Rat(source.torsion_count);
		res.value_f = res.value.to_double();
		return res;
	}
	if (source.b1 >= 1 && target.tail_vectors.empty())
		throw ValidationError("target must supply tail_vectors for b1 >= 1 sources");
	for (int m = 1; m <= source.b1; ++m)
		if (source.b1 >= 1 && !target.tail_vectors.count(m))
			throw ValidationError("missing tail vector for harmonic label " + std::to_string(m));

	auto classes = admissible_partition_graphs(target.n, source.b1);
	auto weights = source.resolved();
	res.breakdown.resize(classes.size());
	parallel_for(classes.size(), [&](size_t i) {
		auto const &cls = classes[i].cls;
		PartitionRow row;
		row.graph = format_graph(cls.canon);
		row.aut = cls.aut;
		row.weight = rw_class(cls.canon, target, partition_labels(cls.canon, source.b1));
		auto it = weights.find(cls.key);
		if (it != weights.end())
			row.analytic = it->second;
		else if (source.b1 == 3 && source.triple_intersection)
		{
			Rat tau = *source.triple_intersection;
			Rat i_gamma(1);
			for (int v = 0; v < cls.canon.V; ++v) i_gamma *= tau;
			row.analytic = AnalyticWeight::of(i_gamma);
		}
		else
			throw ValidationError("missing analytic weight for admissible class: " + row.graph);
		res.breakdown[i] = std::move(row);
	});
	bool exact = true;
	for (auto &row : res.breakdown) exact = exact && row.analytic.exact;
	res.exact = exact;
	Rat total(0);
	double total_f = 0;
	for (auto &row : res.breakdown)
	{
		Rat base = row.weight / Rat(row.aut);
		if (exact) total += base * row.analytic.value;
		total_f += base.to_double() * row.analytic.value_f;
	}
	if (exact)
	{
		res.value = Rat(source.torsion_count) * total;
		res.value_f = res.value.to_double();
	}
	else
		res.value_f = double(source.torsion_count) * total_f;
	return res;
}

} // namespace rw
