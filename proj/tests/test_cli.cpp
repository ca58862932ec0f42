#include "rw/cli.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

using namespace rw;

namespace {

std::string data(std::string const &name) { return std::string(RW_DATA_DIR) + "/" + name; }

struct CliRun {
	int code;
	std::string out, err;
};

CliRun run(std::vector<std::string> args)
{
	std::ostringstream out, err;
	int code = cli_main(std::move(args), out, err);
	return {code, out.str(), err.str()};
}

int count_lines(std::string const &s)
{
	int n = 0;
	for (char c : s)
		if (c == '\n') ++n;
	return n;
}

} // namespace

TEST_CASE("graphs enumerate")
{
	auto r = run({"graphs", "enumerate", "--vertices", "2", "--tails", "0"});
	CHECK(r.code == 0);
	CHECK(r.out == "V 2 / T 0 / E: (0,1) (0,1) (0,1) / aut=12\n");

	auto r4 = run({"graphs", "enumerate", "--vertices", "4", "--tails", "0"});
	CHECK(r4.code == 0);
	CHECK(count_lines(r4.out) == 3);
	auto r4c = run({"graphs", "enumerate", "--vertices", "4", "--tails", "0", "--connected"});
	CHECK(count_lines(r4c.out) == 2);

	auto bad = run({"graphs", "enumerate", "--vertices", "3", "--tails", "0"});
	CHECK(bad.code == 1);
}

TEST_CASE("graphs partition-classes")
{
	auto r = run({"graphs", "partition-classes", "--n", "3", "--b1", "1"});
	CHECK(r.code == 0);
	CHECK(count_lines(r.out) == 4);
	auto r0 = run({"graphs", "partition-classes", "--n", "2", "--b1", "4"});
	CHECK(r0.code == 0);
	CHECK(r0.out.empty());
}

TEST_CASE("weights subcommand")
{
	auto r = run({"weights", "--graph", data("theta.txt"), "--target", data("target_n1.json")});
	CHECK(r.code == 0);
	CHECK(r.out.find("value = -2") != std::string::npos);
	auto missing = run({"weights", "--graph", data("nope.txt"), "--target", data("target_n1.json")});
	CHECK(missing.code == 1);
}

TEST_CASE("partition subcommand")
{
	auto r = run({"partition", "--target", data("target_n1.json"), "--source",
	              data("source_b1_4.json")});
	CHECK(r.code == 0);
	CHECK(r.out.rfind("Z = 0\n", 0) == 0);

	auto r3 = run({"partition", "--target", data("target_n1.json"), "--source",
	               data("source_b1_3.json"), "--output", "json"});
	CHECK(r3.code == 0);
	auto j = json::parse(r3.out);
	CHECK(j["exact"].get<bool>());
	CHECK(j["breakdown"].size() == 1);
	CHECK(j["breakdown"][0]["aut"].get<long long>() == 72);

	auto rb0 = run({"partition", "--target", data("target_n1.json"), "--source",
	                data("source_b1_0_n1.json")});
	CHECK(rb0.code == 0);
	// Z = torsion 3 * (1/12) * (-2) * (1/2) = -1/4
	CHECK(rb0.out.rfind("Z = -1/4\n", 0) == 0);
}

TEST_CASE("rg check subcommand")
{
	auto r = run({"rg", "check", "--fixture", data("rg_fixture.json"), "--hbar", "2"});
	CHECK(r.code == 0);
	CHECK(r.out.find("rg_two_route_residual_terms 0") != std::string::npos);
	CHECK(r.out.find("bv_laplacian_squared_residual_terms 0") != std::string::npos);
	CHECK(r.out.find("qme_residual_terms") != std::string::npos);
}

TEST_CASE("verify heat-asymptotics")
{
	auto r = run({"verify", "heat-asymptotics"});
	CHECK(r.code == 0);
	CHECK(r.out.find("FAIL") == std::string::npos);
	CHECK(count_lines(r.out) == 6);
}

TEST_CASE("fedosov subcommand against the golden file")
{
	auto r = run({"fedosov", "--n", "1", "--cutoff", "6", "--curvature", data("conn_n1.txt")});
	CHECK(r.code == 0);
	std::ifstream golden(data("golden_fedosov_n1.txt"));
	REQUIRE(golden.good());
	std::stringstream want;
	want << golden.rdbuf();
	CHECK(r.out == want.str());

	auto mismatch = run({"fedosov", "--n", "2", "--cutoff", "6", "--curvature", data("conn_n1.txt")});
	CHECK(mismatch.code == 1);
}

TEST_CASE("usage errors")
{
	auto unknown = run({"frobnicate"});
	CHECK(unknown.code == 1);
	CHECK(unknown.err.find("Usage") != std::string::npos);
	auto nothing = run({});
	CHECK(nothing.code == 1);
	auto help = run({"--help"});
	CHECK(help.code == 0);
}
