#include <doctest.h>

#include <string>

#include "ltlo/config.hpp"

using namespace ltlo;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
  const Config c = parse_config("");
  CHECK(c.env.kind == EnvKind::Letter);
  CHECK(c.train.gamma == 0.99);
  CHECK(c.train.adam.lr == 3e-4);
  CHECK(c.train.eps_init == 0.75);
  CHECK(c.train.eps_final == 0.05);
  CHECK(c.train.curriculum_levels == 5);
  CHECK(c.train.batch_size == 256);
  CHECK(c.eval.count == 64);
  CHECK(c.out_dir == "run");
}

TEST_CASE("sections, comments and kind defaults") {
  const Config c = parse_config(
      "# leading comment\n"
      "[train]\n"
      "gamma = 0.95\n"
      "her_ratio = 0.5 \n"
      "[env]\n"
      "n = 11\n"
      "kind = room\n"
      "[io]\n"
      "out_dir = runs/a\n"
      "checkpoint_interval = 500\n");
  CHECK(c.env.kind == EnvKind::Room);
  CHECK(c.env.n == 11);  // kind applies first even when listed later
  CHECK(c.env.m == EnvParams::defaults(EnvKind::Room).m);
  CHECK(c.train.gamma == 0.95);
  CHECK(c.train.her_ratio == 0.5);
  CHECK(c.out_dir == "runs/a");
  CHECK(c.train.checkpoint_interval == 500);
}

TEST_CASE("unknown keys and sections name the culprit") {
  CHECK(error_of("[train]\nlearning_rate = 1\n").find("train.learning_rate") != std::string::npos);
  CHECK(error_of("[model]\nwidth = 3\n").find("model.width") != std::string::npos);
  CHECK(error_of("stray = 1\n").find("stray") != std::string::npos);
}

TEST_CASE("malformed values are rejected") {
  CHECK(error_of("[train]\ngamma = fast\n").find("train.gamma") != std::string::npos);
  CHECK(error_of("[train]\nbatch_size = 12x\n").find("train.batch_size") != std::string::npos);
  CHECK(error_of("[train]\nmyopic = maybe\n").find("train.myopic") != std::string::npos);
  CHECK(error_of("[env]\nkind = ocean\n").find("env.kind") != std::string::npos);
  CHECK(error_of("[eval]\nfamily = cnf\n").find("eval.family") != std::string::npos);
  CHECK(error_of("[train]\nbatch_size = 0\n").find("batch_size") != std::string::npos);
  CHECK(error_of("[train]\neps_init = 0.01\n").find("eps") != std::string::npos);
}

TEST_CASE("overrides") {
  Config c;
  apply_override(c, "train.seed=42");
  apply_override(c, "eval.shield=off");
  CHECK(c.train.seed == 42);
  CHECK_FALSE(c.eval.shield);
  CHECK_THROWS_AS(apply_override(c, "train.seed"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "train.nope=1"), ConfigError);
}

TEST_CASE("listing round-trips") {
  Config c = parse_config("[env]\nkind = fig1\n[train]\ngamma = 0.9\nlr = 0.001\nmyopic = true\n");
  const std::string text = to_ini(c);
  CHECK(to_ini(parse_config(text)) == text);
  for (const std::string& key : config_keys()) {
    const auto dot = key.find('.');
    CHECK(text.find("[" + key.substr(0, dot) + "]") != std::string::npos);
    CHECK(text.find("\n" + key.substr(dot + 1) + " = ") != std::string::npos);
  }
}
