#pragma once

#include "rw/graph.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace rw {

/**
 * Line format:  V k / T m / E: (a,b) (a,b) ...
 * with 0-indexed vertices and loops written (v,v).  When tails are present a
 * `/ t: v v ...` section lists each tail's vertex, and `/ g: ...` appears when
 * any vertex genus is nonzero; `/ labels: ...` optionally carries harmonic
 * labels (1-based) parallel to the tail list.
 */
inline std::string format_graph(MultiGraph const &g, std::vector<int> const &tail_labels = {})
{
	std::ostringstream os;
	os << "V " << g.V << " / T " << g.num_tails() << " / E:";
	for (int u = 0; u < g.V; ++u)
	{
		for (int l = 0; l < g.loops[u]; ++l) os << " (" << u << "," << u << ")";
		for (int v = u + 1; v < g.V; ++v)
			for (int k = 0; k < g.mult[u][v]; ++k) os << " (" << u << "," << v << ")";
	}
	if (g.num_tails() > 0)
	{
		os << " / t:";
		for (int v = 0; v < g.V; ++v)
			for (int t = 0; t < g.tails[v]; ++t) os << " " << v;
	}
	if (std::any_of(g.genus.begin(), g.genus.end(), [](int x) { return x != 0; }))
	{
		os << " / g:";
		for (int v = 0; v < g.V; ++v) os << " " << g.genus[v];
	}
	if (!tail_labels.empty())
	{
		os << " / labels:";
		for (int l : tail_labels) os << " " << l;
	}
	return os.str();
}

struct ParsedGraph {
	MultiGraph graph;
	std::vector<int> tail_labels; // empty or one 1-based label per tail
};

inline ParsedGraph parse_graph_line(std::string const &line)
{
	// split on " / "
	std::vector<std::string> sections;
	size_t from = 0;
	while (true)
	{
		size_t at = line.find(" / ", from);
		if (at == std::string::npos)
		{
			sections.push_back(line.substr(from));
			break;
		}
		sections.push_back(line.substr(from, at - from));
		from = at + 3;
	}
	ParsedGraph out;
	int declared_tails = -1;
	std::vector<int> tail_vertices;
	for (auto &sec : sections)
	{
		std::istringstream ss(sec);
		std::string tag;
		ss >> tag;
		if (tag == "V")
		{
			int v;
			if (!(ss >> v) || v < 0) throw ValidationError("bad V section");
			out.graph = MultiGraph::empty(v);
		}
		else if (tag == "T")
		{
			if (!(ss >> declared_tails)) throw ValidationError("bad T section");
		}
		else if (tag == "E:")
		{
			std::string pair;
			while (ss >> pair)
			{
				if (pair == "aut" || pair.rfind("aut=", 0) == 0) break;
				int a, b;
				char lp, comma, rp;
				std::istringstream ps(pair);
				if (!(ps >> lp >> a >> comma >> b >> rp) || lp != '(' || rp != ')')
					throw ValidationError("bad edge token '" + pair + "'");
				if (a < 0 || b < 0 || a >= out.graph.V || b >= out.graph.V)
					throw ValidationError("edge endpoint out of range");
				if (a == b)
					out.graph.loops[a]++;
				else
				{
					out.graph.mult[a][b]++;
					out.graph.mult[b][a]++;
				}
			}
		}
		else if (tag == "t:")
		{
			int v;
			while (ss >> v)
			{
				if (v < 0 || v >= out.graph.V) throw ValidationError("tail vertex out of range");
				tail_vertices.push_back(v);
				out.graph.tails[v]++;
			}
		}
		else if (tag == "g:")
		{
			for (int v = 0; v < out.graph.V; ++v)
				if (!(ss >> out.graph.genus[v])) throw ValidationError("bad genus section");
		}
		else if (tag == "labels:")
		{
			int l;
			while (ss >> l) out.tail_labels.push_back(l);
		}
		else if (tag.rfind("aut", 0) == 0)
		{
			// enumeration output decoration; ignored on input
		}
		else
			throw ValidationError("unknown graph section '" + tag + "'");
	}
	if (declared_tails >= 0 && declared_tails != out.graph.num_tails())
		throw ValidationError("tail count does not match t: section");
	if (!out.tail_labels.empty() && int(out.tail_labels.size()) != out.graph.num_tails())
		throw ValidationError("labels: section must list one label per tail");
	return out;
}

} // namespace rw
