#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace rw {

/** Thrown when a validated input (file, CLI argument, tensor) is malformed. */
struct ValidationError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

/** Thrown when int64-backed arithmetic would overflow. */
struct OverflowError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

/** Thrown when an internal invariant breaks (CLI maps this to exit code 2). */
struct InternalError : std::logic_error {
	using std::logic_error::logic_error;
};

using bigint = boost::multiprecision::cpp_int;

namespace detail {

template <class I> struct wide {
	using type = I;
};
template <> struct wide<long long> {
	using type = __int128;
};

inline __int128 gcd_wide(__int128 a, __int128 b)
{
	if (a < 0) a = -a;
	if (b < 0) b = -b;
	while (b != 0)
	{
		__int128 t = a % b;
		a = b;
		b = t;
	}
	return a;
}
inline bigint gcd_wide(bigint a, bigint b) { return boost::multiprecision::gcd(a, b); }

inline long long narrow(__int128 v)
{
	if (v > static_cast<__int128>(INT64_MAX) || v < static_cast<__int128>(INT64_MIN))
		throw OverflowError("fraction overflow (int64 backend)");
	return static_cast<long long>(v);
}
inline bigint const &narrow(bigint const &v) { return v; }

} // namespace detail

/**
 * Exact rational number with normalized sign and gcd-reduced representation.
 * The int64 backend computes through 128-bit intermediates and throws
 * OverflowError instead of wrapping; Fraction<bigint> never overflows.
 */
template <class Int = long long> class Fraction
{
  public:
	Fraction() = default;
	Fraction(Int n) : num_(std::move(n)), den_(1) {}
	Fraction(Int n, Int d) : num_(std::move(n)), den_(std::move(d)) { reduce_small(); }
	template <class J = Int, class = std::enable_if_t<!std::is_same_v<J, long long>>>
	Fraction(long long n) : num_(n), den_(1)
	{
	}

	Int const &num() const { return num_; }
	Int const &den() const { return den_; }

	bool is_zero() const { return num_ == 0; }
	int sign() const { return num_ < 0 ? -1 : num_ > 0 ? 1 : 0; }

	friend Fraction operator+(Fraction const &a, Fraction const &b)
	{
		using W = typename detail::wide<Int>::type;
		W n = W(a.num_) * W(b.den_) + W(b.num_) * W(a.den_);
		W d = W(a.den_) * W(b.den_);
		return make_reduced(n, d);
	}
	friend Fraction operator-(Fraction const &a, Fraction const &b)
	{
		using W = typename detail::wide<Int>::type;
		W n = W(a.num_) * W(b.den_) - W(b.num_) * W(a.den_);
		W d = W(a.den_) * W(b.den_);
		return make_reduced(n, d);
	}
	friend Fraction operator*(Fraction const &a, Fraction const &b)
	{
		using W = typename detail::wide<Int>::type;
		return make_reduced(W(a.num_) * W(b.num_), W(a.den_) * W(b.den_));
	}
	friend Fraction operator/(Fraction const &a, Fraction const &b)
	{
		if (b.num_ == 0) throw ValidationError("division by zero fraction");
		using W = typename detail::wide<Int>::type;
		return make_reduced(W(a.num_) * W(b.den_), W(a.den_) * W(b.num_));
	}
	Fraction operator-() const
	{
		Fraction r = *this;
		r.num_ = -r.num_;
		return r;
	}
	Fraction &operator+=(Fraction const &b) { return *this = *this + b; }
	Fraction &operator-=(Fraction const &b) { return *this = *this - b; }
	Fraction &operator*=(Fraction const &b) { return *this = *this * b; }
	Fraction &operator/=(Fraction const &b) { return *this = *this / b; }

	friend bool operator==(Fraction const &a, Fraction const &b)
	{
		return a.num_ == b.num_ && a.den_ == b.den_;
	}
	friend bool operator!=(Fraction const &a, Fraction const &b) { return !(a == b); }
	friend bool operator<(Fraction const &a, Fraction const &b)
	{
		using W = typename detail::wide<Int>::type;
		return W(a.num_) * W(b.den_) < W(b.num_) * W(a.den_);
	}

	double to_double() const
	{
		return static_cast<double>(num_) / static_cast<double>(den_);
	}

	std::string str() const
	{
		using std::to_string;
		std::string n, d;
		if constexpr (std::is_same_v<Int, bigint>)
		{
			n = num_.str();
			d = den_.str();
		}
		else
		{
			n = to_string(num_);
			d = to_string(den_);
		}
		return d == "1" ? n : n + "/" + d;
	}

	/** Parses "p", "-p" or "p/q"; throws ValidationError on junk. */
	static Fraction parse(std::string const &s)
	{
		auto slash = s.find('/');
		try
		{
			if (slash == std::string::npos) return Fraction(parse_int(s), Int(1));
			return Fraction(parse_int(s.substr(0, slash)), parse_int(s.substr(slash + 1)));
		}
		catch (std::exception const &)
		{
			throw ValidationError("bad rational literal: '" + s + "'");
		}
	}

  private:
	Int num_ = 0;
	Int den_ = 1;

	static Int parse_int(std::string const &s)
	{
		if (s.empty()) throw ValidationError("empty integer literal");
		if constexpr (std::is_same_v<Int, bigint>)
			return Int(s);
		else
		{
			size_t pos = 0;
			long long v = std::stoll(s, &pos);
			if (pos != s.size()) throw ValidationError("trailing junk in integer");
			return v;
		}
	}

	template <class W> static Fraction make_reduced(W n, W d)
	{
		if (d == 0) throw ValidationError("zero denominator");
		if (n == 0) return Fraction();
		W g = detail::gcd_wide(n, d);
		n /= g;
		d /= g;
		if (d < 0)
		{
			n = -n;
			d = -d;
		}
		Fraction r;
		r.num_ = detail::narrow(n);
		r.den_ = detail::narrow(d);
		return r;
	}

	void reduce_small()
	{
		using W = typename detail::wide<Int>::type;
		*this = make_reduced(W(num_), W(den_));
	}
};

template <class Int>
std::ostream &operator<<(std::ostream &os, Fraction<Int> const &f)
{
	return os << f.str();
}

using Rat = Fraction<long long>;
using BigRat = Fraction<bigint>;

/** n! as an exact fraction (used for product and RG-flow normalizations). */
template <class F = Rat> F factorial(int n)
{
	F r(1);
	for (int i = 2; i <= n; ++i) r *= F(i);
	return r;
}

/** Binomial coefficient as int64; desk-scale arguments only. */
inline long long binomial(int n, int k)
{
	if (k < 0 || k > n) return 0;
	k = std::min(k, n - k);
	__int128 r = 1;
	for (int i = 1; i <= k; ++i)
	{
		r = r * (n - k + i) / i;
	}
	return detail::narrow(r);
}

} // namespace rw
