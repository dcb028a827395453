#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "ssf/runtime.hpp"

int main(int argc, char** argv) {
  ssf::configure_allocator();
  return doctest::Context(argc, argv).run();
}
