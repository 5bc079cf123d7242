#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "uavslice/experiment.hpp"

int main(int argc, char** argv) {
    uavslice::experiment::tune_allocator();
    doctest::Context context;
    context.applyCommandLine(argc, argv);
    return context.run();
}
