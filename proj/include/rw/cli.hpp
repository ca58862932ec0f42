#pragma once

#include "rw/assemble.hpp"
#include "rw/bv.hpp"
#include "rw/config_io.hpp"
#include "rw/graph.hpp"
#include "rw/graph_io.hpp"
#include "rw/heat.hpp"
#include "rw/weight.hpp"
#include "rw/weyl.hpp"
#include "rw/weyl_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace rw {

namespace cli_detail {

inline std::string tail_poly_str(TailPoly const &p)
{
	if (p.empty()) return "0";
	std::ostringstream os;
	bool first = true;
	for (auto &[m, c] : p)
	{
		if (!first) os << " + ";
		first = false;
		os << "(" << c.str() << ")";
		for (auto &[label, idx] : m) os << " a" << label << "[" << idx + 1 << "]";
	}
	return os.str();
}

inline int run_fedosov(int n, int cutoff, std::string const &curvature_path, std::ostream &out)
{
	std::ifstream in(curvature_path);
	if (!in) throw ValidationError("cannot open '" + curvature_path + "'");
	ConnectionFile f = parse_connection(in, cutoff);
	if (f.n != n)
		throw ValidationError("--n disagrees with the connection file header");
	WeylAlgebra alg = f.omega.empty() ? WeylAlgebra::darboux(n, cutoff)
	                                  : WeylAlgebra(n, cutoff, f.omega);
	WeylElement I = alg.fedosov_solve(f.conn);
	out << "# fedosov correction I, n=" << n << " cutoff=" << cutoff << "\n";
	print_weyl(out, I);
	WeylElement residual = alg.flatness_residual(I, f.conn);
	WeylElement dinv = alg.delta_inv(I);
	WeylElement p0 = alg.pi0(I);
	bool leading_ok = I.weight_part(3) == alg.delta_inv(f.conn.curvature);
	out << "# residual report\n";
	out << "flatness_residual_mod_hbar_terms " << residual.terms().size() << "\n";
	out << "delta_inv_I_terms " << dinv.terms().size() << "\n";
	out << "pi0_I_terms " << p0.terms().size() << "\n";
	out << "weight3_equals_delta_inv_R " << (leading_ok ? "ok" : "FAIL") << "\n";
	if (!residual.is_zero() || !dinv.is_zero() || !p0.is_zero() || !leading_ok)
		throw InternalError("fedosov invariants failed");
	return 0;
}

inline int run_enumerate(int vertices, int tails, bool connected_only, std::ostream &out)
{
	auto classes = enumerate_trivalent(vertices, tails, !connected_only);
	for (auto &c : classes)
		out << format_graph(c.canon) << " / aut=" << c.aut << "\n";
	return 0;
}

inline int run_partition_classes(int n, int b1, std::ostream &out)
{
	auto classes = admissible_partition_graphs(n, b1);
	for (auto &c : classes)
	{
		TailAssignment t = partition_labels(c.cls.canon, b1);
		out << format_graph(c.cls.canon, t.labels) << " / aut=" << c.cls.aut << "\n";
	}
	return 0;
}

inline int run_weights(std::string const &graph_path, std::string const &target_path,
                       std::ostream &out)
{
	std::ifstream in(graph_path);
	if (!in) throw ValidationError("cannot open '" + graph_path + "'");
	std::string line;
	ParsedGraph pg;
	bool found = false;
	while (std::getline(in, line))
	{
		if (line.empty() || line[0] == '#') continue;
		pg = parse_graph_line(line);
		found = true;
		break;
	}
	if (!found) throw ValidationError("no graph line in '" + graph_path + "'");
	TargetData target = load_target(target_path);
	TailAssignment tails;
	tails.labels = pg.tail_labels;
	TailPoly sym = rw_weight_symbolic(pg.graph, target, tails);
	out << "b_Gamma = " << tail_poly_str(sym) << "\n";
	bool closed = true;
	for (auto &[m, c] : sym) closed = closed && m.empty();
	if (closed)
		out << "value = " << (sym.empty() ? Rat(0) : sym.begin()->second).str() << "\n";
	else if (!target.tail_vectors.empty())
		out << "value = " << tail_eval(sym, target.tail_vectors).str() << "\n";
	return 0;
}

inline int run_partition(std::string const &target_path, std::string const &source_path,
                         std::string const &output, std::ostream &out)
{
	TargetData target = load_target(target_path);
	SourceData source = load_source(source_path);
	PartitionResult res = assemble_partition(target, source);
	if (output == "json")
	{
		json j;
		j["exact"] = res.exact;
		if (res.exact) j["value"] = res.value.str();
		j["value_float"] = res.value_f;
		j["breakdown"] = json::array();
		for (auto &row : res.breakdown)
		{
			json r;
			r["graph"] = row.graph;
			r["aut"] = row.aut;
			r["weight"] = row.weight.str();
			if (row.analytic.exact)
				r["analytic"] = row.analytic.value.str();
			else
				r["analytic"] = row.analytic.value_f;
			j["breakdown"].push_back(r);
		}
		out << j.dump(2) << "\n";
	}
	else
	{
		if (res.exact)
			out << "Z = " << res.value.str() << "\n";
		else
			out << "Z = " << res.value_f << "\n";
		for (auto &row : res.breakdown)
		{
			out << "  " << row.graph << " / aut=" << row.aut
			    << " / b=" << row.weight.str() << " / I=";
			if (row.analytic.exact)
				out << row.analytic.value.str();
			else
				out << row.analytic.value_f;
			out << "\n";
		}
	}
	return 0;
}

inline int run_rg_check(std::string const &fixture_path, int hbar, std::ostream &out)
{
	RgFixture f = load_rg_fixture(fixture_path);
	auto const &par = f.space.parity;
	Poly we = rg_flow_exponential(f.propagator, f.interaction, par, hbar, f.max_degree);
	Poly wg = rg_flow_graphs(f.propagator, f.interaction, par, hbar, f.max_degree);
	Poly diff = we - wg;
	out << "rg_two_route_residual_terms " << diff.terms().size() << "\n";
	if (f.bv_kernel)
	{
		Poly d2 = bv_laplacian(*f.bv_kernel, bv_laplacian(*f.bv_kernel, f.interaction, par), par);
		out << "bv_laplacian_squared_residual_terms " << d2.terms().size() << "\n";
	}
	if (f.q_matrix && f.bv_kernel)
	{
		Poly qme = qme_residual(*f.q_matrix, f.interaction, *f.bv_kernel, f.curving, par, hbar);
		out << "qme_residual_terms " << qme.terms().size() << "\n";
		for (auto &[k, c] : qme.terms())
		{
			out << "  hbar^" << k.hbar << " exps(";
			for (size_t i = 0; i < k.exps.size(); ++i)
				out << (i ? "," : "") << int(k.exps[i]);
			out << ") " << c.str() << "\n";
		}
	}
	if (!diff.is_zero()) throw InternalError("RG flow routes disagree");
	return 0;
}

inline int run_verify_heat(std::ostream &out)
{
	bool all_ok = true;
	auto report = [&](std::string const &name, bool ok, size_t residual_terms) {
		out << (ok ? "PASS" : "FAIL") << " " << name << " (residual terms: "
		    << residual_terms << ")\n";
		all_ok = all_ok && ok;
	};
	{
		TermSum r = apply_heat_flat_leading(flat_gaussian_kernel());
		report("flat heat operator annihilates the flat Gaussian kernel", r.empty(),
		       r.terms().size());
	}
	{
		TermSum r = apply_heat_operator_leading(kt_leading());
		report("leading heat operator annihilates (K_t)[0]", r.empty(), r.terms().size());
	}
	{
		TermSum lhs = apply_dstar_leading(kt_leading());
		TermSum diff = lhs - dstar_kt_expected();
		report("(d* (x) 1) K_t leading term matches the displayed formula", diff.empty(),
		       diff.terms().size());
	}
	{
		TermSum v = vanishing_violations(kt_leading());
		report("(K_t)[0] respects the p + r >= 0 vanishing bound", v.empty(),
		       v.terms().size());
	}
	{
		auto [a, b] = boundary_limit(1e-3, 1.0);
		double sp = std::sqrt(M_PI);
		bool ok = std::abs(a - sp) < 1e-3 && std::abs(b - sp) < 1e-3;
		out << (ok ? "PASS" : "FAIL") << " boundary limits at r=1e-3: " << a << ", " << b
		    << " vs sqrt(pi)=" << sp << "\n";
		all_ok = all_ok && ok;
	}
	{
		double s = fiber_sphere_integral();
		bool ok = std::abs(s - 1.0) < 1e-6;
		out << (ok ? "PASS" : "FAIL") << " fiber sphere integral = " << s << " vs 1\n";
		all_ok = all_ok && ok;
	}
	if (!all_ok) throw InternalError("heat-asymptotics verification failed");
	return 0;
}

} // namespace cli_detail

/** CLI entry: exit 0 on success, 1 on validation error, 2 on internal failure. */
inline int cli_main(std::vector<std::string> args, std::ostream &out, std::ostream &err)
{
	CLI::App app{"exact-arithmetic engine for the perturbative Rozansky-Witten model"};
	app.require_subcommand(1);

	auto *fed = app.add_subcommand("fedosov", "solve the flat-connection recursion and dump I");
	int fed_n = 1, fed_cutoff = 6;
	std::string fed_file;
	fed->add_option("--n", fed_n, "half-dimension (target has 2n directions)")->required();
	fed->add_option("--cutoff", fed_cutoff, "weight cutoff")->required();
	fed->add_option("--curvature", fed_file, "connection file")->required();

	auto *graphs = app.add_subcommand("graphs", "stable-graph enumeration");
	graphs->require_subcommand(1);
	auto *genum = graphs->add_subcommand("enumerate", "trivalent classes for (V, T)");
	int ge_v = 2, ge_t = 0;
	bool ge_conn = false;
	genum->add_option("--vertices", ge_v)->required();
	genum->add_option("--tails", ge_t)->required();
	genum->add_flag("--connected", ge_conn, "restrict to connected classes");
	auto *gpart = graphs->add_subcommand("partition-classes", "admissible classes for (n, b1)");
	int gp_n = 1, gp_b1 = 0;
	gpart->add_option("--n", gp_n)->required();
	gpart->add_option("--b1", gp_b1)->required();

	auto *weights = app.add_subcommand("weights", "Rozansky-Witten weight of one graph");
	std::string w_graph, w_target;
	weights->add_option("--graph", w_graph)->required();
	weights->add_option("--target", w_target)->required();

	auto *part = app.add_subcommand("partition", "assemble the partition function");
	std::string p_target, p_source, p_output = "text";
	part->add_option("--target", p_target)->required();
	part->add_option("--source", p_source)->required();
	part->add_option("--output", p_output)->check(CLI::IsMember({"text", "json"}));

	auto *rg = app.add_subcommand("rg", "finite-dimensional RG/BV checks");
	rg->require_subcommand(1);
	auto *rgc = rg->add_subcommand("check", "run the fixture residuals");
	std::string rg_fixture;
	int rg_hbar = 3;
	rgc->add_option("--fixture", rg_fixture)->required();
	rgc->add_option("--hbar", rg_hbar);

	auto *verify = app.add_subcommand("verify", "machine verification suites");
	verify->require_subcommand(1);
	auto *vheat = verify->add_subcommand("heat-asymptotics",
	                                     "heat-kernel leading-term identities");

	std::reverse(args.begin(), args.end());
	try
	{
		app.parse(args);
	}
	catch (CLI::ParseError const &e)
	{
		if (e.get_exit_code() == 0) // --help
		{
			out << app.help();
			return 0;
		}
		err << "error: " << e.what() << "\n" << app.help();
		return 1;
	}

	try
	{
		if (*fed) return cli_detail::run_fedosov(fed_n, fed_cutoff, fed_file, out);
		if (*genum) return cli_detail::run_enumerate(ge_v, ge_t, ge_conn, out);
		if (*gpart) return cli_detail::run_partition_classes(gp_n, gp_b1, out);
		if (*weights) return cli_detail::run_weights(w_graph, w_target, out);
		if (*part) return cli_detail::run_partition(p_target, p_source, p_output, out);
		if (*rgc) return cli_detail::run_rg_check(rg_fixture, rg_hbar, out);
		if (*vheat) return cli_detail::run_verify_heat(out);
	}
	catch (ValidationError const &e)
	{
		err << "error: " << e.what() << "\n";
		return 1;
	}
	catch (OverflowError const &e)
	{
		err << "error: " << e.what() << "\n";
		return 1;
	}
	catch (std::logic_error const &e)
	{
		err << "internal error: " << e.what() << "\n";
		return 2;
	}
	err << "error: no subcommand\n";
	return 1;
}

} // namespace rw
