#include "dreams/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace dreams {

namespace {

std::atomic<std::size_t> configured{0};

std::size_t env_threads() {
    const char* value = std::getenv("DREAMS_THREADS");
    if (!value || !*value)
        return 1;
    try {
        const long parsed = std::stol(value);
        return parsed > 0 ? static_cast<std::size_t>(parsed) : 1;
    } catch (...) {
        return 1;
    }
}

} // namespace

void set_num_threads(std::size_t threads) { configured.store(threads); }

std::size_t num_threads() {
    const std::size_t n = configured.load();
    return n ? n : env_threads();
}

} // namespace dreams
