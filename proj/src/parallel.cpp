#include "hetspde/parallel.hpp"

#include <atomic>

namespace hetspde {
namespace {
std::atomic<int> g_threads{1};
}  // namespace

void set_default_threads(int threads) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  g_threads = threads;
}

int default_threads() { return g_threads; }

}  // namespace hetspde
