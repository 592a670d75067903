#include "ringlab/parallel.hpp"

#include <cstdlib>
#include <string>

namespace ringlab {

int workers_from_env() {
    const char* v = std::getenv("RINGLAB_WORKERS");
    if (!v || !*v) return 1;
    try {
        const int n = std::stoi(v);
        return n > 0 ? n : 1;
    } catch (...) {
        return 1;
    }
}

}  // namespace ringlab
