#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace rw {

/** worker cap: RWK_THREADS if set, otherwise all cores */
inline unsigned thread_budget()
{
	unsigned hw = std::max(1u, std::thread::hardware_concurrency());
	if (char const *env = std::getenv("RWK_THREADS"))
	{
		long v = std::atol(env);
		if (v >= 1) return std::min<unsigned>(unsigned(v), hw == 0 ? unsigned(v) : hw);
	}
	return hw;
}

/** index-parallel map; fn must be pure in i (exceptions rethrown on the caller) */
inline void parallel_for(size_t n, std::function<void(size_t)> const &fn)
{
	unsigned workers = std::min<size_t>(thread_budget(), n);
	if (workers <= 1)
	{
		for (size_t i = 0; i < n; ++i) fn(i);
		return;
	}
	std::vector<std::thread> pool;
	std::vector<std::exception_ptr> errors(workers);
	for (unsigned w = 0; w < workers; ++w)
		pool.emplace_back([&, w]() {
			try
			{
				for (size_t i = w; i < n; i += workers) fn(i);
			}
			catch (...)
			{
				errors[w] = std::current_exception();
			}
		});
	for (auto &t : pool) t.join();
	for (auto &e : errors)
		if (e) std::rethrow_exception(e);
}

} // namespace rw
