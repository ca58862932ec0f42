#include "rw/assemble.hpp"
#include "rw/config_io.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace rw;

namespace {

std::string data(std::string const &name) { return std::string(RW_DATA_DIR) + "/" + name; }

json minimal_target()
{
	return json::parse(R"({
	  "n": 1,
	  "omega": [["0","1"],["-1","0"]],
	  "vertex_tensors": [
	    {"valency": 3, "entries": [
	      {"abar": 1, "idx": [1,1,1], "value": "1"},
	      {"abar": 2, "idx": [2,2,2], "value": "1"}
	    ]}
	  ],
	  "tail_vectors": {"1": ["1","0"], "2": ["0","1"], "3": ["1","1"]}
	})");
}

} // namespace

TEST_CASE("target loading and validation")
{
	TargetData t = parse_target(minimal_target());
	CHECK(t.n == 1);
	CHECK(t.tensor(3, 0, {0, 0, 0}) == Rat(1));
	CHECK(t.tensor(3, 0, {0, 0, 1}) == Rat(0));
	CHECK(t.omega_inv[0][1] == Rat(-1));

	// non-invertible omega is rejected
	json bad = minimal_target();
	bad["omega"] = {{"0", "0"}, {"0", "0"}};
	CHECK_THROWS_AS(parse_target(bad), ValidationError);

	// asymmetric tensor entries are rejected with a symmetrize hint
	json asym = minimal_target();
	asym["vertex_tensors"][0]["entries"].push_back(
	    {{"abar", 1}, {"idx", {1, 1, 2}}, {"value", "1"}});
	asym["vertex_tensors"][0]["entries"].push_back(
	    {{"abar", 1}, {"idx", {1, 2, 1}}, {"value", "2"}});
	try
	{
		parse_target(asym);
		FAIL("expected rejection");
	}
	catch (ValidationError const &e)
	{
		CHECK(std::string(e.what()).find("symmetrize") != std::string::npos);
	}

	// raw entries are symmetrized instead
	json raw = minimal_target();
	raw["vertex_tensors"][0]["raw"] = true;
	raw["vertex_tensors"][0]["entries"] = json::array();
	raw["vertex_tensors"][0]["entries"].push_back(
	    {{"abar", 1}, {"idx", {1, 1, 2}}, {"value", "6"}});
	TargetData tr = parse_target(raw);
	CHECK(tr.tensor(3, 0, {0, 0, 1}) == Rat(2));
	CHECK(tr.tensor(3, 0, {0, 1, 0}) == Rat(2));

	// sub-cubic valency is rejected
	json lowv = minimal_target();
	lowv["vertex_tensors"][0]["valency"] = 2;
	lowv["vertex_tensors"][0]["entries"] = json::array();
	CHECK_THROWS_AS(parse_target(lowv), ValidationError);

	CHECK_THROWS_AS(load_target(data("no_such_file.json")), ValidationError);
}

TEST_CASE("source loading")
{
	SourceData s = load_source(data("source_b1_3.json"));
	CHECK(s.b1 == 3);
	CHECK(s.torsion_count == 1);
	REQUIRE(s.triple_intersection.has_value());
	CHECK(*s.triple_intersection == Rat(1));

	SourceData s0 = load_source(data("source_b1_0_n1.json"));
	CHECK(s0.b1 == 0);
	CHECK(s0.torsion_count == 3);
	auto resolved = s0.resolved();
	CHECK(resolved.size() == 1);

	CHECK_THROWS_AS(parse_source(json::parse(R"({"torsion_count": 1})")), ValidationError);
	CHECK_THROWS_AS(parse_source(json::parse(R"({"b1": 0, "torsion_count": 0})")),
	                ValidationError);
}

TEST_CASE("partition function: b1 > 3 short-circuits to zero")
{
	TargetData t = load_target(data("target_n1.json"));
	SourceData s = load_source(data("source_b1_4.json"));
	auto res = assemble_partition(t, s);
	CHECK(res.exact);
	CHECK(res.value == Rat(0));
	CHECK(res.breakdown.empty());
}

TEST_CASE("partition function: point target returns the torsion count")
{
	TargetData t;
	t.n = 0;
	SourceData s;
	s.b1 = 1;
	s.torsion_count = 5;
	auto res = assemble_partition(t, s);
	CHECK(res.value == Rat(5));
}

TEST_CASE("partition function: b1 = 3 fixture against the hand-assembled value")
{
	TargetData t = load_target(data("target_n1.json"));
	SourceData s = load_source(data("source_b1_3.json"));
	auto res = assemble_partition(t, s);
	REQUIRE(res.breakdown.size() == 1);

	// hand assembly: the unique class is two disjoint tripods with labels
	// 1,2,3 at each vertex; |Aut| = 2 * (3!)^2 = 72, I_Gamma = tau^2 = 1
	MultiGraph tripods = MultiGraph::empty(2);
	tripods.tails[0] = tripods.tails[1] = 3;
	CHECK(res.breakdown[0].aut == 72);
	Rat b = rw_class(tripods, t, TailAssignment{{1, 2, 3, 1, 2, 3}});
	CHECK(res.breakdown[0].weight == b);
	CHECK(res.value == b / Rat(72));

	// independent contraction of the tripod pair: vertex u gets
	// Phi_{abar}(v1, v2, v3), the epsilon closes the two abar slots
	Rat expect(0);
	auto vec = [&](int label, int i) { return t.tail_vectors.at(label).at(i); };
	for (int au = 0; au < 2; ++au)
		for (int aw = 0; aw < 2; ++aw)
		{
			if (au == aw) continue;
			Rat eps(au < aw ? 1 : -1);
			Rat pu(0), pw(0);
			for (int i = 0; i < 2; ++i)
				for (int j = 0; j < 2; ++j)
					for (int k = 0; k < 2; ++k)
					{
						Rat f = vec(1, i) * vec(2, j) * vec(3, k);
						pu += t.tensor(3, au, {i, j, k}) * f;
						pw += t.tensor(3, aw, {i, j, k}) * f;
					}
			expect += eps * pu * pw;
		}
	CHECK((b == expect || b == -expect));
	// with identical tensors and tail vectors at both vertices the epsilon
	// closure wedges two equal (0,1)-forms, so the weight vanishes on the nose
	CHECK(expect.is_zero());
	CHECK(b.is_zero());
}

TEST_CASE("partition function: b1 = 2 single-pair value is nontrivial")
{
	TargetData t = load_target(data("target_n1.json"));
	MultiGraph pair = MultiGraph::empty(2);
	pair.mult[0][1] = pair.mult[1][0] = 1;
	pair.tails[0] = pair.tails[1] = 2;
	Rat b = rw_class(pair, t, TailAssignment{{1, 2, 1, 2}});
	CHECK_FALSE(b.is_zero());
}

TEST_CASE("partition function: linearity and b1 = 2 admissible-class isolation")
{
	TargetData t = load_target(data("target_n1.json"));

	SourceData s2;
	s2.b1 = 2;
	s2.torsion_count = 1;
	// the unique admissible class: one edge, two vertices, 2+2 tails
	MultiGraph pair = MultiGraph::empty(2);
	pair.mult[0][1] = pair.mult[1][0] = 1;
	pair.tails[0] = pair.tails[1] = 2;
	std::string key = format_graph(pair);
	s2.analytic_weights.push_back({key, AnalyticWeight::of(Rat(4, 3))});
	auto res = assemble_partition(t, s2);
	REQUIRE(res.breakdown.size() == 1);

	// linear in the analytic weight
	SourceData s2b = s2;
	s2b.analytic_weights[0].second = AnalyticWeight::of(Rat(8, 3));
	CHECK(assemble_partition(t, s2b).value == Rat(2) * res.value);

	// linear in the torsion count
	SourceData s2c = s2;
	s2c.torsion_count = 7;
	CHECK(assemble_partition(t, s2c).value == Rat(7) * res.value);

	// perturbing non-admissible entries leaves the result unchanged
	SourceData s2d = s2;
	s2d.analytic_weights.push_back(
	    {"V 2 / T 0 / E: (0,1) (0,1) (0,1)", AnalyticWeight::of(Rat(999))});
	CHECK(assemble_partition(t, s2d).value == res.value);

	// missing weight for the admissible class errors
	SourceData s2e;
	s2e.b1 = 2;
	s2e.torsion_count = 1;
	CHECK_THROWS_AS(assemble_partition(t, s2e), ValidationError);
}

TEST_CASE("partition function: float analytic weights flow through")
{
	TargetData t = load_target(data("target_n1.json"));
	SourceData s;
	s.b1 = 0;
	s.torsion_count = 2;
	s.analytic_weights.push_back(
	    {"V 2 / T 0 / E: (0,1) (0,1) (0,1)", AnalyticWeight::of(0.25)});
	auto res = assemble_partition(t, s);
	CHECK_FALSE(res.exact);
	// theta weight is -2 for this target; Z = 2 * (1/12) * (-2) * 0.25
	CHECK(res.value_f == Catch::Approx(2.0 * (-2.0 / 12.0) * 0.25));
}

TEST_CASE("rg fixture loads and both routes agree on it")
{
	RgFixture f = load_rg_fixture(data("rg_fixture.json"));
	CHECK(f.space.dim() == 3);
	Poly we = rg_flow_exponential(f.propagator, f.interaction, f.space.parity, 2, f.max_degree);
	Poly wg = rg_flow_graphs(f.propagator, f.interaction, f.space.parity, 2, f.max_degree);
	CHECK(we == wg);
	REQUIRE(f.bv_kernel.has_value());
	REQUIRE(f.q_matrix.has_value());
	Poly d2 = bv_laplacian(*f.bv_kernel,
	                       bv_laplacian(*f.bv_kernel, f.interaction, f.space.parity),
	                       f.space.parity);
	CHECK(d2.is_zero());
}
