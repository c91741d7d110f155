#include <filesystem>
#include <set>

#include "doctest.h"
#include "hot/error.hpp"
#include "hot/scene.hpp"
#include "support/support.hpp"

using namespace hot;
using namespace hot::testing;

namespace {

const char* kTwoTraps = R"(hot-scenario 1
name two
seed 3
bead_radius 2.5
bead 0 30 22
bead 1 60 40
trap 0 point 30 22 roster=0
trap 1 line 80 60 length=10 angle=0.5
goal 40 22
goal 90 70
speed 1.5
speed 2
)";

ScenarioError expect_scenario_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    return e;
  }
  FAIL("expected ScenarioError");
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_SUITE("scene") {

TEST_CASE("workspace constants and pixel mapping") {
  CHECK(Workspace::width_um / Workspace::camera_width_px == Workspace::um_per_px);
  CHECK(Workspace::to_camera_px({60, 45}) == Vec2{320, 240});
  CHECK(Workspace::to_pixel({60, 45}) == std::pair{320, 240});
  CHECK(Workspace::to_pixel({-5, 200}) == std::pair{0, 479});
  CHECK(Workspace::contains({0, 0}));
  CHECK_FALSE(Workspace::contains({120, 10}));
  CHECK_FALSE(Workspace::contains({10, 90}));
}

TEST_CASE("coordinate round trip stays within half a pixel") {
  Rng rng(1);
  std::uniform_real_distribution<double> x(0, 120), y(0, 90);
  for (int i = 0; i < 10000; ++i) {
    const Vec2 p{x(rng), y(rng)};
    const auto [c, r] = Workspace::to_pixel(p);
    const Vec2 back = Workspace::pixel_center_um(c, r);
    CHECK(std::abs(back.x - p.x) <= 0.5 * Workspace::um_per_px + 1e-12);
    CHECK(std::abs(back.y - p.y) <= 0.5 * Workspace::um_per_px + 1e-12);
    CHECK(distance(Workspace::to_um(Workspace::to_camera_px(p)), p) < 1e-12);
  }
}

TEST_CASE("flower scenario loads with two traps 45 um apart") {
  const Scenario s = load_scenario(source_path("scenarios/flower.scenario"));
  REQUIRE(s.traps.size() == 2);
  CHECK(distance(s.traps[0].center, s.traps[1].center) == doctest::Approx(45.0));
  CHECK(s.speeds == std::vector<double>{1.5, 1.5});
  CHECK(s.traps[0].kind == TrapKind::annular);
  CHECK(s.traps[0].topological_charge == 15);
  CHECK(s.traps[0].roster.size() == 4);
  CHECK(s.traps[1].kind == TrapKind::line);
  CHECK(s.traps[1].roster.size() == 2);
  CHECK_FALSE(s.obstacle_trapping);
}

TEST_CASE("p_shape scenario loads with obstacle trapping on") {
  const Scenario s = load_scenario(source_path("scenarios/p_shape.scenario"));
  REQUIRE(s.traps.size() == 2);
  CHECK(s.traps[0].kind == TrapKind::line);
  CHECK(s.traps[0].roster.size() == 3);
  CHECK(s.traps[1].roster.size() == 4);
  CHECK(s.obstacle_trapping);
}

TEST_CASE("empty scenario is valid") {
  const Scenario s = parse_scenario("hot-scenario 1\n");
  CHECK(s.beads.empty());
  CHECK(s.traps.empty());
  CHECK(s.priority.empty());
}

TEST_CASE("goal count mismatch names the field") {
  std::string text = kTwoTraps;
  text += "goal 10 10\n";
  const auto e = expect_scenario_error(text);
  CHECK(e.code() == ErrorCode::validation);
  CHECK(e.field() == "goal");
}

TEST_CASE("parse and validation errors name the offending entry") {
  SUBCASE("missing header") {
    const auto e = expect_scenario_error("name x\n");
    CHECK(e.code() == ErrorCode::parse);
    CHECK(e.field() == "header");
  }
  SUBCASE("unknown key") {
    const auto e = expect_scenario_error("hot-scenario 1\nfrobnicate 3\n");
    CHECK(e.code() == ErrorCode::parse);
    CHECK(e.line() == 2);
  }
  SUBCASE("bad number") {
    const auto e = expect_scenario_error("hot-scenario 1\nbead 0 abc 3\n");
    CHECK(e.code() == ErrorCode::parse);
  }
  SUBCASE("bead outside workspace") {
    const auto e = expect_scenario_error("hot-scenario 1\nbead 0 130 3\n");
    CHECK(e.code() == ErrorCode::validation);
    CHECK(e.field() == "bead[0].pos");
  }
  SUBCASE("goal outside workspace") {
    const auto e = expect_scenario_error("hot-scenario 1\ntrap 0 point 5 5\ngoal 5 95\nspeed 1\n");
    CHECK(e.field() == "goal[0]");
  }
  SUBCASE("annular with zero charge") {
    const auto e = expect_scenario_error("hot-scenario 1\ntrap 0 annular 5 5 l=0\ngoal 5 5\nspeed 1\n");
    CHECK(e.field() == "trap[0].l");
  }
  SUBCASE("line with zero length") {
    const auto e = expect_scenario_error("hot-scenario 1\ntrap 0 line 5 5 length=0\ngoal 5 5\nspeed 1\n");
    CHECK(e.code() == ErrorCode::validation);
  }
  SUBCASE("bead in two rosters") {
    const auto e = expect_scenario_error(
        "hot-scenario 1\nbead 0 5 5\ntrap 0 point 5 5 roster=0\ntrap 1 point 9 9 roster=0\n"
        "goal 5 5\ngoal 9 9\nspeed 1\nspeed 1\n");
    CHECK(e.field() == "trap[1].roster");
  }
  SUBCASE("priority not a permutation") {
    std::string text = kTwoTraps;
    text += "priority 0 0\n";
    const auto e = expect_scenario_error(text);
    CHECK(e.field() == "priority");
  }
  SUBCASE("non-positive speed") {
    const auto e = expect_scenario_error("hot-scenario 1\ntrap 0 point 5 5\ngoal 5 5\nspeed 0\n");
    CHECK(e.field() == "speed[0]");
  }
}

TEST_CASE("missing scenario file is an io error") {
  CHECK_THROWS_AS(load_scenario("/nonexistent/none.scenario"), IoError);
}

TEST_CASE("canonical text round-trips bit-exactly") {
  const Scenario a = parse_scenario(kTwoTraps);
  const std::string text = format_scenario(a);
  const Scenario b = parse_scenario(text);
  CHECK(a == b);
  CHECK(format_scenario(b) == text);
  for (const char* path : {"scenarios/flower.scenario", "scenarios/p_shape.scenario"}) {
    const Scenario s = load_scenario(source_path(path));
    CHECK(parse_scenario(format_scenario(s)) == s);
  }
}

TEST_CASE("random scenarios survive save and load") {
  const auto dir = std::filesystem::temp_directory_path() / "hot_scene_rt";
  std::filesystem::create_directories(dir);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Scenario s = random_scenario(seed);
    const auto path = dir / "s.scenario";
    save_scenario(s, path);
    CHECK(load_scenario(path) == s);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("default ring radius holds four beads") {
  const double R = ring_radius_for_charge(15);
  CHECK(kTwoPi * R >= 4 * 5.0);
  CHECK(R * std::sqrt(2.0) >= 5.0);
  const Scenario s = parse_scenario("hot-scenario 1\ntrap 0 annular 20 20 l=15\ngoal 20 20\nspeed 1\n");
  CHECK(s.traps[0].ring_radius == doctest::Approx(R));
}

TEST_CASE("make_scene splits power and binds rosters") {
  const Scene sc = make_scene(parse_scenario(kTwoTraps));
  REQUIRE(sc.traps.size() == 2);
  double sum = 0;
  for (const auto& t : sc.traps) sum += t.power_share;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sc.find_bead(0)->state == BeadState::trapped);
  CHECK(sc.find_bead(0)->trap_id == 0);
  CHECK(sc.find_bead(1)->state == BeadState::free);
  CHECK(sc.next_bead_id == 2);
}

TEST_CASE("remove_trap frees its roster") {
  Scene sc = make_scene(parse_scenario(kTwoTraps));
  sc.remove_trap(0);
  CHECK(sc.find_trap(0) == nullptr);
  CHECK(sc.find_bead(0)->state == BeadState::free);
  CHECK(sc.find_bead(0)->trap_id == -1);
}

TEST_CASE("derive_obstacles is the set difference") {
  std::vector<Trap> traps(2);
  traps[0].roster = {0, 1, 2};
  traps[1].roster = {3, 4, 5};
  std::vector<Observation> seen;
  for (int i = 0; i < 10; ++i) seen.push_back({i, {double(i), 1.0}});
  const auto o = derive_obstacles(seen, traps);
  CHECK(o == std::vector<int>{6, 7, 8, 9});

  seen.resize(6);
  CHECK(derive_obstacles(seen, traps).empty());
}

TEST_CASE("flower obstacles are the seven free beads") {
  const Scenario s = load_scenario(source_path("scenarios/flower.scenario"));
  const Scene sc = make_scene(s);
  const auto o = derive_obstacles(sc);
  CHECK(o.size() == 7);
  std::set<int> rostered, obstacles(o.begin(), o.end()), all;
  for (const auto& t : sc.traps) rostered.insert(t.roster.begin(), t.roster.end());
  for (const auto& b : sc.beads) all.insert(b.id);
  for (int id : o) CHECK(rostered.count(id) == 0);
  std::set<int> both = rostered;
  both.insert(obstacles.begin(), obstacles.end());
  CHECK(both == all);
}

TEST_CASE("names round-trip") {
  for (TrapKind k : {TrapKind::point, TrapKind::annular, TrapKind::line}) CHECK(trap_kind_from_string(to_string(k)) == k);
  CHECK_FALSE(trap_kind_from_string("spiral").has_value());
  CHECK(std::string(to_string(ErrorCode::phase_mismatch)) == "phase_mismatch");
  CHECK(std::string(to_string(PlanningCause::prior_paths)) == "prior_paths");
}

}
