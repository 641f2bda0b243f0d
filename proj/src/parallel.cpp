#include "mas/parallel.hpp"

#include <omp.h>

#include "mas/error.hpp"

namespace mas {

void set_threads(int threads)
{
    if (threads < 1) throw Error("threads must be >= 1");
    omp_set_num_threads(threads);
}

int max_threads()
{
    return omp_get_max_threads();
}

} // namespace mas
