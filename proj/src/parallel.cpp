#include "ripl/parallel.hpp"

#include <atomic>

namespace ripl {
namespace {
std::atomic<unsigned> g_max_threads{1};
}

void set_max_threads(unsigned n) { g_max_threads = n == 0 ? 1 : n; }
unsigned max_threads() { return g_max_threads; }

}  // namespace ripl
