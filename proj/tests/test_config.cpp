#include <stdexcept>
#include <doctest.h>

#include <string>

#include "pft/config.hpp"

using namespace pft;

TEST_CASE("defaults resolve to the documented values") {
    RunConfig cfg = default_config();
    CHECK(cfg.seed == 42);
    CHECK(cfg.dim == 16);
    CHECK(cfg.shared_dim == 8);
    CHECK(cfg.transfer_strength == 0.9);
    CHECK(cfg.noise_scale == 1.4);
    CHECK(cfg.hidden_dim == 32);
    CHECK(cfg.opt.momentum == 0.9);
    CHECK(cfg.prefinetune_patience == 3);
    CHECK(cfg.finetune_patience == 30);
    CHECK(cfg.prefinetune_max_epochs == 200);
    CHECK(cfg.finetune_max_epochs == 200);
    CHECK(cfg.grid.trials_per_condition == 3);
    CHECK(cfg.grid.k_values.size() == 7);
    CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("config files override defaults field by field") {
    const std::string text = R"({
        "seed": 7,
        "synth": {"noise_scale": 2.0, "transfer_strength": 0.5},
        "model": {"hidden_dim": 8, "lr": 0.01},
        "training": {"finetune_patience": 5},
        "grid": {"k": [2, 8], "trials": 1, "speakers": ["en_00"]}
    })";
    RunConfig cfg = parse_config(text, "inline");
    CHECK(cfg.seed == 7);
    CHECK(cfg.noise_scale == 2.0);
    CHECK(cfg.transfer_strength == 0.5);
    CHECK(cfg.hidden_dim == 8);
    CHECK(cfg.opt.lr == 0.01);
    CHECK(cfg.finetune_patience == 5);
    CHECK(cfg.prefinetune_patience == 3);  // untouched
    CHECK(cfg.grid.k_values == std::vector<int>{2, 8});
    CHECK(cfg.grid.trials_per_condition == 1);
    CHECK(cfg.grid.speakers == std::vector<std::string>{"en_00"});
}

TEST_CASE("unknown keys are rejected with their dotted path") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"sead": 7})", "inline"), doctest::Contains("sead"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config(R"({"grid": {"foo": 1}})", "inline"),
                         doctest::Contains("grid.foo"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config(R"({"synth": {"dims": 4}})", "inline"),
                         doctest::Contains("synth.dims"), std::invalid_argument);
    CHECK_THROWS(parse_config("not json at all", "inline"));
}

TEST_CASE("validation names the offending field") {
    RunConfig cfg = default_config();

    SUBCASE("transfer strength out of range") {
        cfg.transfer_strength = 1.5;
        CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("transfer_strength"),
                             std::invalid_argument);
    }
    SUBCASE("learning rate must be positive") {
        cfg.opt.lr = 0.0;
        CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("lr"),
                             std::invalid_argument);
    }
    SUBCASE("momentum below one") {
        cfg.opt.momentum = 1.0;
        CHECK_THROWS(validate_config(cfg));
    }
    SUBCASE("k values from the ladder only") {
        cfg.grid.k_values = {2, 5};
        CHECK_THROWS(validate_config(cfg));
    }
    SUBCASE("at least one trial") {
        cfg.grid.trials_per_condition = 0;
        CHECK_THROWS(validate_config(cfg));
    }
    SUBCASE("parallelism is positive") {
        cfg.parallelism = 0;
        CHECK_THROWS(validate_config(cfg));
    }
}

TEST_CASE("serialization is canonical and drives the hash") {
    RunConfig a = default_config();
    RunConfig b = default_config();
    CHECK(serialize_config(a) == serialize_config(b));
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);

    b.seed = 43;
    CHECK(config_hash(a) != config_hash(b));

    // Parsing the canonical form reproduces the same resolved config.
    RunConfig round = parse_config(serialize_config(a), "roundtrip");
    CHECK(serialize_config(round) == serialize_config(a));
}
