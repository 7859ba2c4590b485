#include "doctest.h"

#include "scenes.hpp"

#include "drape/discriminator.hpp"

using namespace drape;
using namespace drape::testing;

TEST_CASE("discriminator construction is seeded and deterministic") {
    const PatchDiscriminator a(7), b(7), c(8);
    CHECK(a.parameters().size() == PatchDiscriminator::parameter_count());
    CHECK(a.parameters() == b.parameters());
    CHECK(a.parameters() != c.parameters());
    // 4x4 kernels: 3->16, 16->32, 32->1, plus biases.
    CHECK(PatchDiscriminator::parameter_count() == 16 * 3 * 16 + 16 + 32 * 16 * 16 + 32 + 32 * 16 + 1);
}

TEST_CASE("discriminator forward is deterministic and rejects wrong patch sizes") {
    std::mt19937_64 rng(61);
    const PatchDiscriminator d(1);
    const Image p = random_image(rng, 32, 32);
    CHECK(d.forward(p) == d.forward(p));
    CHECK(std::isfinite(d.forward(p)));
    CHECK_THROWS_AS(d.forward(Image(16, 16)), ValidationError);
}

TEST_CASE("patch extraction and scatter are adjoint") {
    std::mt19937_64 rng(62);
    const Image im = random_image(rng, 40, 50);
    const Image p = extract_patch(im, 7, 5);
    CHECK(p.at(0, 0, 1) == im.at(5, 7, 1));
    CHECK(p.at(31, 31, 2) == im.at(36, 38, 2));
    const Image g = random_image(rng, 32, 32);
    Image gi(40, 50);
    scatter_patch(gi, g, 7, 5);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) lhs += p.data()[i] * g.data()[i];
    for (std::size_t i = 0; i < im.size(); ++i) rhs += im.data()[i] * gi.data()[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
    CHECK_THROWS_AS(extract_patch(im, 30, 0), ValidationError);
}
