#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include "mesh/topology.hpp"
TEST_CASE("smoke") { CHECK(mesh::link_etx(1.0, 1.0) == 1.0); }
