#include <doctest.h>

TEST_SUITE("refine") {}
