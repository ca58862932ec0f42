#pragma once

#include "rw/weyl.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace rw {

/**
 * One term per line:  coeff(p/q) hbar^k delta[e1,...,e2n] dz[i,...] dzbar[j,...]
 * delta[] lists the exponent vector over the 2n fiber generators; dz[]/dzbar[]
 * list 1-based form-generator indices in ascending order.  Terms print in
 * canonical key order, so golden files are stable.
 */
inline void print_weyl(std::ostream &os, WeylElement const &e)
{
	for (auto &[k, c] : e.terms())
	{
		os << "coeff(" << c.str() << ") hbar^" << k.hbar() << " delta[";
		for (int i = 0; i < 2 * e.n(); ++i)
		{
			if (i) os << ",";
			os << k.fiber_exp(i);
		}
		os << "] dz[";
		bool first = true;
		for (int i = 0; i < 2 * e.n(); ++i)
			if (k.dz_mask() & (1u << i))
			{
				if (!first) os << ",";
				os << (i + 1);
				first = false;
			}
		os << "] dzbar[";
		first = true;
		for (int i = 0; i < 2 * e.n(); ++i)
			if (k.dzbar_mask() & (1u << i))
			{
				if (!first) os << ",";
				os << (i + 1);
				first = false;
			}
		os << "]\n";
	}
}

inline std::string weyl_to_string(WeylElement const &e)
{
	std::ostringstream ss;
	print_weyl(ss, e);
	return ss.str();
}

namespace detail {

inline std::string expect_bracket(std::string const &s, std::string const &tag)
{
	auto open = s.find('[');
	if (open == std::string::npos || s.back() != ']' || s.substr(0, open) != tag)
		throw ValidationError("expected " + tag + "[...], got '" + s + "'");
	return s.substr(open + 1, s.size() - open - 2);
}

inline std::vector<int> parse_int_list(std::string const &body)
{
	std::vector<int> v;
	std::string cur;
	std::istringstream ss(body);
	while (std::getline(ss, cur, ','))
		if (!cur.empty()) v.push_back(std::stoi(cur));
	return v;
}

} // namespace detail

/** Parses one serialized term line into (key, coeff); throws on malformed input. */
inline std::pair<WKey, Rat> parse_weyl_term(std::string const &line, int n)
{
	std::istringstream ss(line);
	std::string coeff_tok, hbar_tok, delta_tok, dz_tok, dzbar_tok;
	if (!(ss >> coeff_tok >> hbar_tok >> delta_tok >> dz_tok >> dzbar_tok))
		throw ValidationError("malformed weyl term line: '" + line + "'");
	if (coeff_tok.rfind("coeff(", 0) != 0 || coeff_tok.back() != ')')
		throw ValidationError("expected coeff(p/q) in '" + line + "'");
	Rat c = Rat::parse(coeff_tok.substr(6, coeff_tok.size() - 7));
	if (hbar_tok.rfind("hbar^", 0) != 0)
		throw ValidationError("expected hbar^k in '" + line + "'");
	int h = std::stoi(hbar_tok.substr(5));
	auto exps = detail::parse_int_list(detail::expect_bracket(delta_tok, "delta"));
	if (int(exps.size()) != 2 * n)
		throw ValidationError("delta[] must list 2n exponents");
	WKey k;
	for (int i = 0; i < 2 * n; ++i)
	{
		if (exps[i] < 0 || exps[i] > 15) throw ValidationError("fiber exponent out of range");
		k = k.with_fiber(i, exps[i]);
	}
	uint32_t dz = 0, dzbar = 0;
	for (int i : detail::parse_int_list(detail::expect_bracket(dz_tok, "dz")))
	{
		if (i < 1 || i > 2 * n) throw ValidationError("dz index out of range");
		dz |= 1u << (i - 1);
	}
	for (int i : detail::parse_int_list(detail::expect_bracket(dzbar_tok, "dzbar")))
	{
		if (i < 1 || i > 2 * n) throw ValidationError("dzbar index out of range");
		dzbar |= 1u << (i - 1);
	}
	k = k.with_dz(dz).with_dzbar(dzbar).with_hbar(h);
	return {k, c};
}

inline WeylElement parse_weyl(std::istream &is, int n, int cutoff)
{
	WeylElement e(n, cutoff);
	std::string line;
	while (std::getline(is, line))
	{
		if (line.empty() || line[0] == '#') continue;
		auto [k, c] = parse_weyl_term(line, n);
		e.add(k, c);
	}
	return e;
}

/**
 * Connection file: `n <N>` header, optional `omega (i,j) p/q` lines (1-based,
 * Darboux if absent), optional `gamma[l,i,k] p/q` lines, and curvature term
 * lines in the element format above.
 */
struct ConnectionFile {
	int n = 1;
	std::vector<std::vector<Rat>> omega; // empty -> Darboux
	ConnectionData conn;
};

inline ConnectionFile parse_connection(std::istream &is, int cutoff)
{
	std::string line;
	if (!std::getline(is, line)) throw ValidationError("empty connection file");
	std::istringstream head(line);
	std::string tag;
	int n = 0;
	if (!(head >> tag >> n) || tag != "n" || n < 1 || n > 4)
		throw ValidationError("connection file must start with 'n <1..4>'");
	ConnectionFile f;
	f.n = n;
	f.conn.n = n;
	f.conn.curvature = WeylElement(n, cutoff);
	while (std::getline(is, line))
	{
		if (line.empty() || line[0] == '#') continue;
		if (line.rfind("omega", 0) == 0)
		{
			std::istringstream ss(line.substr(5));
			char lp, comma, rp;
			int i, j;
			std::string val;
			if (!(ss >> lp >> i >> comma >> j >> rp >> val) || lp != '(' || rp != ')')
				throw ValidationError("bad omega line: '" + line + "'");
			if (f.omega.empty())
				f.omega.assign(2 * n, std::vector<Rat>(2 * n, Rat(0)));
			Rat v = Rat::parse(val);
			f.omega.at(i - 1).at(j - 1) = v;
			f.omega.at(j - 1).at(i - 1) = -v;
		}
		else if (line.rfind("gamma[", 0) == 0)
		{
			auto close = line.find(']');
			if (close == std::string::npos) throw ValidationError("bad gamma line");
			auto idx = detail::parse_int_list(line.substr(6, close - 6));
			if (idx.size() != 3) throw ValidationError("gamma needs [l,i,k]");
			Rat v = Rat::parse(line.substr(close + 1).substr(line.substr(close + 1).find_first_not_of(' ')));
			if (f.conn.christoffels.empty())
				f.conn.christoffels.assign(
				    2 * n, std::vector<std::vector<Rat>>(2 * n, std::vector<Rat>(2 * n, Rat(0))));
			f.conn.christoffels.at(idx[0] - 1).at(idx[1] - 1).at(idx[2] - 1) = v;
		}
		else
		{
			auto [k, c] = parse_weyl_term(line, n);
			f.conn.curvature.add(k, c);
		}
	}
	return f;
}

} // namespace rw
