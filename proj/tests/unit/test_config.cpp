#include "doctest.h"

#include "drape/config.hpp"

#include <algorithm>
#include <set>

using namespace drape;

TEST_CASE("to_text and parse_config round-trip every key") {
    Config c;
    c.data.seed = 17;
    c.data.jitter = 1.25;
    c.hidden = 12;
    c.weights.adv = 0.125;
    c.settings(GroupId::flows).lr = 0.03;
    c.iterations = 77;
    c.enable_rfr = false;
    const Config back = parse_config(c.to_text());
    CHECK(back.to_text() == c.to_text());
    CHECK(back.data.seed == 17);
    CHECK(back.settings(GroupId::flows).lr == 0.03);
    CHECK_FALSE(back.enable_rfr);
    CHECK(back.hash() == c.hash());
}

TEST_CASE("every documented key appears once in the canonical text") {
    const auto keys = config_keys();
    const std::set<std::string> unique(keys.begin(), keys.end());
    CHECK(unique.size() == keys.size());
    const std::string text = Config{}.to_text();
    for (const auto& k : keys) CHECK(text.find(k + "=") != std::string::npos);
}

TEST_CASE("parser: comments, blanks, unknown and repeated keys, bad values") {
    const Config c = parse_config("# comment\n\nseed = 3   # trailing\nenable_adv=false\n");
    CHECK(c.data.seed == 3);
    CHECK_FALSE(c.enable_adv);
    CHECK_THROWS_AS(parse_config("sede=3\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("seed=3\nseed=4\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("seed=abc\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("enable_nld=maybe\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("just text\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("lr_flows=-1\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("subsample=50\n"), ValidationError);
}

TEST_CASE("hash ignores run length but tracks the trajectory") {
    Config a, b;
    b.iterations = a.iterations * 3;
    b.checkpoint_every = 50;
    CHECK(a.hash() == b.hash());
    b.weights.tv = 0.5;
    CHECK(a.hash() != b.hash());
}

TEST_CASE("the four variants are exactly the four toggle combinations") {
    std::set<std::tuple<bool, bool, bool>> seen;
    for (const char* v : kVariants) {
        const Config c = apply_variant(Config{}, v);
        CHECK(variant_name(c) == v);
        seen.insert({c.enable_nld, c.enable_rfr, c.enable_adv});
    }
    CHECK(seen.size() == 4);
    CHECK(seen.count({true, true, true}) == 1);
    CHECK(seen.count({false, true, true}) == 1);
    CHECK(seen.count({true, false, true}) == 1);
    CHECK(seen.count({true, true, false}) == 1);
    CHECK_THROWS_AS(apply_variant(Config{}, "no_everything"), ValidationError);
    Config custom;
    custom.enable_nld = custom.enable_rfr = false;
    CHECK(variant_name(custom) == "custom");
}

TEST_CASE("set_config_value validates the key") {
    Config c;
    set_config_value(c, "lambda_p", "0.5");
    CHECK(c.weights.perceptual == 0.5);
    CHECK_THROWS_AS(set_config_value(c, "lambda_q", "0.5"), ValidationError);
}

TEST_CASE("documented defaults") {
    const Config c;
    CHECK(c.weights.perceptual == 0.1);
    CHECK(c.weights.reg == 1e-3);
    CHECK(c.weights.adv == 0.05);
    CHECK(c.weights.tv == 1e-3);
    CHECK(c.weights.mag == 1e-4);
    CHECK(c.patches == 8);
    CHECK(c.enable_nld);
    CHECK(c.enable_rfr);
    CHECK(c.enable_adv);
}
