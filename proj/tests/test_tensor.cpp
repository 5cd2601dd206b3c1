#include <doctest.h>

#include <limits>

#include "kidc/errors.hpp"
#include "kidc/tensor.hpp"

using kidc::InvalidInput;
using kidc::num::Tensor;

TEST_CASE("tensor shape/value consistency is enforced") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), InvalidInput);
    CHECK_THROWS_AS(Tensor({0, 3}), InvalidInput);
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.shape_str() == "[2x3]");
    CHECK(t.all_finite());
}

TEST_CASE("tensor accessors use row-major layout") {
    Tensor t = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
    CHECK(t.at(0, 2) == 3.0);
    CHECK(t.at(1, 0) == 4.0);
    t.at(1, 2) = 9.0;
    CHECK(t[5] == 9.0);
}

TEST_CASE("all_finite detects NaN and Inf") {
    Tensor t = Tensor::vec({1.0, 2.0});
    CHECK(t.all_finite());
    t[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK(!t.all_finite());
    t[1] = std::numeric_limits<double>::infinity();
    CHECK(!t.all_finite());
}
