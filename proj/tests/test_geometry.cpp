#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mpfem/geometry.hpp"

using namespace mpfem;

TEST_CASE("box construction and validation") {
  const Box b({-1.0, 0.0}, {1.0, 2.0});
  CHECK_EQ(b.dim(), 2);
  CHECK(b.contains({0.0, 1.0}));
  CHECK_FALSE(b.contains({1.5, 1.0}));
  CHECK(b.contains({1.0 + 1e-13, 1.0}, 1e-12));

  CHECK_THROWS_AS(Box({0.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(Box({1.0}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Box({}, {}), std::invalid_argument);

  // point axes are legal (boundary faces, frozen controls)
  const Box face({-1.0, 1.0}, {1.0, 1.0});
  CHECK_EQ(face.upper[1], face.lower[1]);
  CHECK(face.contains({0.0, 1.0}));
}

TEST_CASE("box geometry helpers") {
  const Box b = Box::cube(2, -1.0, 1.0);
  CHECK_EQ(b.center(), std::vector<double>{0.0, 0.0});
  CHECK_EQ(b.clamp({2.0, -3.0}), std::vector<double>{1.0, -1.0});

  const Box wide = b.expanded(0.5);
  CHECK_EQ(wide.lower[0], -1.5);
  CHECK_EQ(wide.upper[1], 1.5);

  const Box joint = Box::product(b, Box::cube(1, 0.0, 2.0));
  CHECK_EQ(joint.dim(), 3);
  CHECK_EQ(joint.lower[2], 0.0);
  CHECK_EQ(joint.upper[2], 2.0);

  CHECK_EQ(b.distance2({2.0, 2.0}), doctest::Approx(std::sqrt(2.0)));
  CHECK_EQ(b.distance1({2.0, 2.0}), doctest::Approx(2.0));
  CHECK_EQ(b.distance2({0.5, -0.5}), 0.0);
  CHECK_EQ(b.distance1({0.5, -0.5}), 0.0);
}

TEST_CASE("regular grid nodes") {
  const RegularGrid g(Box::cube(1, -1.0, 1.0), 0.5);
  CHECK_EQ(g.node_count(), 5);
  CHECK_EQ(g.axis_nodes(0), std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});

  // a step that does not divide the span shortens the last interval so the
  // corner stays a node
  const RegularGrid shortened(Box::cube(1, 0.0, 1.0), 0.4);
  REQUIRE_EQ(shortened.node_count(), 4);
  CHECK_EQ(shortened.axis_nodes(0)[2], doctest::Approx(0.8));
  CHECK_EQ(shortened.axis_nodes(0)[3], 1.0);

  const RegularGrid g2(Box::cube(2, 0.0, 1.0), 0.5);
  CHECK_EQ(g2.node_count(), 9);
  // axis 0 slowest
  CHECK_EQ(g2.node(0), std::vector<double>{0.0, 0.0});
  CHECK_EQ(g2.node(1), std::vector<double>{0.0, 0.5});
  CHECK_EQ(g2.node(3), std::vector<double>{0.5, 0.0});
  CHECK_EQ(g2.node(8), std::vector<double>{1.0, 1.0});
  CHECK_EQ(g2.multi_index(5), std::vector<std::size_t>{1, 2});

  const RegularGrid with_face(Box({-1.0, 1.0}, {1.0, 1.0}), 0.5);
  CHECK_EQ(with_face.node_count(), 5);
  CHECK_EQ(with_face.axis_size(1), 1);
  CHECK_EQ(with_face.node(0), std::vector<double>{-1.0, 1.0});

  CHECK_THROWS_AS(RegularGrid(Box::cube(1, 0.0, 1.0), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(RegularGrid(Box::cube(1, 0.0, 1.0), 2.0), std::invalid_argument);
}
