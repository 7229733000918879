#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "mineica/experiment.hpp"

int main(int argc, char** argv) {
  mineica::tune_allocator();
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
