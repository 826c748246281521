#include "sindykit/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

namespace sindykit {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SINDYKIT_THREADS")) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), value);
    if (ec == std::errc() && value > 0) return value;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace sindykit
