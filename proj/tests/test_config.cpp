#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "genpol/config.hpp"
#include "genpol/error.hpp"

using namespace genpol;
namespace fs = std::filesystem;

namespace {

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path dir = fs::temp_directory_path() / "genpol_test_config";
  fs::create_directories(dir);
  std::ofstream(dir / name) << text;
  return dir / name;
}

}  // namespace

TEST_CASE("every key has a default") {
  const Config c;
  CHECK(c.real("critic.tau") == 0.7);
  CHECK(c.real("critic.gamma") == 0.99);
  CHECK(c.real("pretrain.lr") == 1e-4);
  CHECK(c.count("policy.t_train") == 1000);
  CHECK(c.count("solver.steps") == 32);
  CHECK(c.sizes("model.hidden") == std::vector<std::size_t>{256, 256, 256});
  for (const auto& e : Config::schema()) CHECK_NOTHROW(c.str(e.key));
}

TEST_CASE("file, overrides and render round trip") {
  const auto p = write_file("a.ini",
                            "# comment\n[policy]\nbeta = 3.5\n\n[model]\nhidden = 64, 32\n; other comment\n");
  Config c = Config::load(p.string());
  CHECK(c.real("policy.beta") == 3.5);
  CHECK(c.sizes("model.hidden") == std::vector<std::size_t>{64, 32});
  c.apply_override("solver.scheme=rk4_38");
  c.apply_override("output.dir=x=y");
  CHECK(c.str("solver.scheme") == "rk4_38");
  CHECK(c.str("output.dir") == "x=y");
  const auto again = write_file("b.ini", c.render());
  CHECK(Config::load(again.string()).render() == c.render());
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(Config::load("/nonexistent/genpol.ini"), ConfigError);
  CHECK_THROWS_AS(Config::load(write_file("bad.ini", "[policy]\nbogus = 1\n").string()), ConfigError);
  CHECK_THROWS_AS(Config::load(write_file("top.ini", "beta = 1\n").string()), ConfigError);
  Config c;
  CHECK_THROWS_AS(c.apply_override("policy.beta"), ConfigError);
  CHECK_THROWS_AS(c.apply_override("=3"), ConfigError);
  c.set("policy.beta", "hot");
  CHECK_THROWS_AS(c.real("policy.beta"), ConfigError);
  c.set("policy.steps", "-3");
  CHECK_THROWS_AS(c.count("policy.steps"), ConfigError);
  c.set("policy.steps", "1.5");
  CHECK_THROWS_AS(c.integer("policy.steps"), ConfigError);
  c.set("model.hidden", "64,,2");
  CHECK_THROWS_AS(c.sizes("model.hidden"), ConfigError);
  c.set("model.hidden", "0");
  CHECK_THROWS_AS(c.sizes("model.hidden"), ConfigError);
  CHECK_THROWS_AS(c.str("nope.key"), ConfigError);
}
