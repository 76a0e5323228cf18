#include "switchavg/core.hpp"

#include <cstdlib>
#include <thread>

namespace switchavg {

unsigned worker_threads() {
    if (const char* env = std::getenv("SWITCHAVG_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace switchavg
