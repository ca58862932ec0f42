#pragma once

#include "rw/assemble.hpp"
#include "rw/bv.hpp"
#include "rw/weight.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace rw {

using nlohmann::json;

namespace io_detail {

inline json load_json(std::string const &path)
{
	std::ifstream in(path);
	if (!in) throw ValidationError("cannot open '" + path + "'");
	json j;
	try
	{
		in >> j;
	}
	catch (json::exception const &e)
	{
		throw ValidationError("parse failure in '" + path + "': " + e.what());
	}
	return j;
}

inline Rat parse_rat(json const &j, std::string const &where)
{
	if (j.is_string()) return Rat::parse(j.get<std::string>());
	if (j.is_number_integer()) return Rat(j.get<long long>());
	throw ValidationError(where + ": expected integer or rational string \"p/q\"");
}

inline BigRat parse_bigrat(json const &j, std::string const &where)
{
	if (j.is_string()) return BigRat::parse(j.get<std::string>());
	if (j.is_number_integer()) return BigRat(bigint(j.get<long long>()));
	throw ValidationError(where + ": expected integer or rational string \"p/q\"");
}

inline std::vector<std::vector<Rat>> parse_rat_matrix(json const &j, std::string const &where)
{
	if (!j.is_array()) throw ValidationError(where + ": expected a matrix");
	std::vector<std::vector<Rat>> m;
	for (auto &row : j)
	{
		if (!row.is_array()) throw ValidationError(where + ": expected a matrix row");
		std::vector<Rat> r;
		for (auto &v : row) r.push_back(parse_rat(v, where));
		m.push_back(std::move(r));
	}
	return m;
}

} // namespace io_detail

/**
 * Target file schema:
 *   { "n": 1,
 *     "omega": [["0","1"],["-1","0"]],
 *     "vertex_tensors": [ { "valency": 3, "raw": false,
 *         "entries": [ {"abar": 1, "idx": [1,1,1], "value": "1"} ] } ],
 *     "tail_vectors": { "1": ["1","0"], ... } }
 * Indices are 1-based.  Without "raw", two orderings of the same index
 * multiset must carry equal values (tensors are symmetric; run with raw=true
 * to symmetrize instead).
 */
inline TargetData parse_target(json const &j)
{
	TargetData t;
	if (!j.contains("n")) throw ValidationError("target: missing field 'n'");
	t.n = j.at("n").get<int>();
	if (t.n < 0 || t.n > 4) throw ValidationError("target: n must be in 0..4");
	int d = 2 * t.n;
	t.omega = io_detail::parse_rat_matrix(j.value("omega", json::array()), "target.omega");
	if (int(t.omega.size()) != d) throw ValidationError("target.omega: must be 2n x 2n");
	for (auto &row : t.omega)
		if (int(row.size()) != d) throw ValidationError("target.omega: must be 2n x 2n");
	t.omega_inv = invert_rat_matrix(t.omega, "target.omega");
	for (auto &vt : j.value("vertex_tensors", json::array()))
	{
		int valency = vt.at("valency").get<int>();
		if (valency < 3)
			throw ValidationError("target.vertex_tensors: valency must be >= 3");
		std::map<std::pair<int, std::vector<int>>, Rat> raw;
		bool symmetrize = vt.value("raw", false);
		for (auto &e : vt.value("entries", json::array()))
		{
			int abar = e.at("abar").get<int>();
			if (abar < 1 || abar > d)
				throw ValidationError("target.vertex_tensors.entries.abar: out of 1..2n");
			std::vector<int> idx;
			for (auto &i : e.at("idx"))
			{
				int v = i.get<int>();
				if (v < 1 || v > d)
					throw ValidationError("target.vertex_tensors.entries.idx: out of 1..2n");
				idx.push_back(v - 1);
			}
			if (int(idx.size()) != valency)
				throw ValidationError("target.vertex_tensors.entries.idx: arity != valency");
			Rat value = io_detail::parse_rat(e.at("value"), "target.vertex_tensors.entries.value");
			auto key = std::make_pair(abar - 1, idx);
			if (raw.count(key)) throw ValidationError("target.vertex_tensors: duplicate entry");
			raw[key] = value;
		}
		std::map<std::pair<int, std::vector<int>>, Rat> sym;
		if (symmetrize)
			sym = symmetrize_tensor(raw, valency);
		else
		{
			for (auto &[key, v] : raw)
			{
				auto sorted = key.second;
				std::sort(sorted.begin(), sorted.end());
				auto skey = std::make_pair(key.first, sorted);
				auto it = sym.find(skey);
				if (it == sym.end())
					sym.emplace(skey, v);
				else if (!(it->second == v))
					throw ValidationError(
					    "target.vertex_tensors: asymmetric entries for one index multiset "
					    "(set \"raw\": true to symmetrize)");
			}
		}
		t.vertex_tensors[valency] = std::move(sym);
	}
	if (j.contains("tail_vectors"))
		for (auto &[label, vec] : j.at("tail_vectors").items())
		{
			std::vector<Rat> v;
			for (auto &c : vec) v.push_back(io_detail::parse_rat(c, "target.tail_vectors"));
			if (int(v.size()) != d)
				throw ValidationError("target.tail_vectors: vector length must be 2n");
			t.tail_vectors[std::stoi(label)] = std::move(v);
		}
	t.validate();
	return t;
}

inline TargetData load_target(std::string const &path)
{
	return parse_target(io_detail::load_json(path));
}

/**
 * Source file schema:
 *   { "b1": 3, "torsion_count": 1,
 *     "harmonic_triple_intersection": "1",
 *     "analytic_weights": { "V 2 / T 0 / E: (0,1) (0,1) (0,1)": "1/2", ... } }
 * Weights may be rational strings (exact) or JSON floats.
 */
inline SourceData parse_source(json const &j)
{
	SourceData s;
	if (!j.contains("b1")) throw ValidationError("source: missing field 'b1'");
	s.b1 = j.at("b1").get<int>();
	s.torsion_count = j.value("torsion_count", 1LL);
	if (j.contains("harmonic_triple_intersection"))
		s.triple_intersection =
		    io_detail::parse_rat(j.at("harmonic_triple_intersection"), "source.harmonic_triple_intersection");
	if (j.contains("analytic_weights"))
		for (auto &[line, w] : j.at("analytic_weights").items())
		{
			if (w.is_number_float())
				s.analytic_weights.push_back({line, AnalyticWeight::of(w.get<double>())});
			else
				s.analytic_weights.push_back(
				    {line, AnalyticWeight::of(io_detail::parse_rat(w, "source.analytic_weights"))});
		}
	s.validate();
	return s;
}

inline SourceData load_source(std::string const &path)
{
	return parse_source(io_detail::load_json(path));
}

/**
 * RG/BV fixture schema:
 *   { "generators": [ {"name": "x", "parity": 0}, ... ],
 *     "pairing": [[...]],                  (optional)
 *     "interaction": [ {"exps": [3,0], "hbar": 0, "coeff": "1/6"}, ... ],
 *     "propagator": [[...]],
 *     "bv_kernel": [[...]],                (optional)
 *     "q_matrix": [[...]],                 (optional)
 *     "curving": [ ...like interaction ],  (optional)
 *     "max_degree": 4 }
 */
struct RgFixture {
	ToySpace space;
	Poly interaction;
	Kernel propagator;
	std::optional<Kernel> bv_kernel;
	std::optional<OddOperator> q_matrix;
	Poly curving;
	int max_degree = 4;
};

inline Poly parse_poly(json const &arr, int nvars, std::string const &where)
{
	Poly p(nvars);
	for (auto &t : arr)
	{
		PolyKey k;
		for (auto &e : t.at("exps")) k.exps.push_back(uint8_t(e.get<int>()));
		if (int(k.exps.size()) != nvars)
			throw ValidationError(where + ": exps length != generator count");
		k.hbar = t.value("hbar", 0);
		p.add(k, io_detail::parse_bigrat(t.at("coeff"), where + ".coeff"));
	}
	return p;
}

inline std::vector<std::vector<BigRat>> parse_bigrat_matrix(json const &j, int d,
                                                            std::string const &where)
{
	std::vector<std::vector<BigRat>> m;
	for (auto &row : j)
	{
		std::vector<BigRat> r;
		for (auto &v : row) r.push_back(io_detail::parse_bigrat(v, where));
		if (int(r.size()) != d) throw ValidationError(where + ": row length mismatch");
		m.push_back(std::move(r));
	}
	if (int(m.size()) != d) throw ValidationError(where + ": row count mismatch");
	return m;
}

inline RgFixture parse_rg_fixture(json const &j)
{
	RgFixture f;
	for (auto &g : j.at("generators"))
	{
		f.space.names.push_back(g.at("name").get<std::string>());
		f.space.parity.push_back(g.at("parity").get<int>());
	}
	int d = f.space.dim();
	if (j.contains("pairing"))
		f.space.pairing = parse_bigrat_matrix(j.at("pairing"), d, "fixture.pairing");
	f.space.validate();
	f.interaction = parse_poly(j.at("interaction"), d, "fixture.interaction");
	f.propagator.coef = parse_bigrat_matrix(j.at("propagator"), d, "fixture.propagator");
	f.propagator.validate(f.space);
	if (j.contains("bv_kernel"))
	{
		Kernel k;
		k.coef = parse_bigrat_matrix(j.at("bv_kernel"), d, "fixture.bv_kernel");
		k.validate(f.space);
		f.bv_kernel = k;
	}
	if (j.contains("q_matrix"))
	{
		OddOperator q;
		q.mat = parse_bigrat_matrix(j.at("q_matrix"), d, "fixture.q_matrix");
		q.validate(f.space);
		f.q_matrix = q;
	}
	f.curving = j.contains("curving") ? parse_poly(j.at("curving"), d, "fixture.curving")
	                                  : Poly(d);
	f.max_degree = j.value("max_degree", 4);
	return f;
}

inline RgFixture load_rg_fixture(std::string const &path)
{
	return parse_rg_fixture(io_detail::load_json(path));
}

} // namespace rw
