#include <doctest.h>

#include <cmath>

#include "chaffsim/eavesdropper.hpp"

using namespace chaffsim;

namespace {

MobilityModel two_cell() {
    return make_mobility_model(2, {0.9, 0.1, 0.5, 0.5});
}

}  // namespace

TEST_CASE("trajectory set validation") {
    TrajectorySet set;
    set.trajectories = {{0, 0}};
    CHECK_THROWS_AS(set.validate(), ValidationError);
    set.trajectories = {{0, 0}, {0, 1, 1}};
    CHECK_THROWS_AS(set.validate(), ValidationError);
    set.trajectories = {{0, 0}, {1, 1}};
    set.truth = 2;
    CHECK_THROWS_AS(set.validate(), ValidationError);
    set.truth = 1;
    CHECK_NOTHROW(set.validate());
}

TEST_CASE("ml_detect picks the strictly most likely trajectory regardless of seed") {
    MobilityModel m = two_cell();
    TrajectorySet set{{{1, 1, 1}, {0, 0, 0}}, 0};
    for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(ml_detect(m, set, seed) == 1);
}

TEST_CASE("ml_detect is equivariant under permutation of the bundle") {
    MobilityModel m = make_model(model_kind_from_letter('b'), 10, 5);
    Trajectory a = sample_trajectory(m, 30, 1);
    Trajectory b = sample_trajectory(m, 30, 2);
    Trajectory c = sample_trajectory(m, 30, 3);
    // make the winner strict so tie randomness cannot interfere
    double la = trajectory_log_likelihood(m, a);
    double lb = trajectory_log_likelihood(m, b);
    double lc = trajectory_log_likelihood(m, c);
    REQUIRE(std::fabs(la - lb) > 1e-6);
    REQUIRE(std::fabs(la - lc) > 1e-6);
    REQUIRE(std::fabs(lb - lc) > 1e-6);
    TrajectorySet s1{{a, b, c}, 0};
    TrajectorySet s2{{c, a, b}, 1};
    int w1 = ml_detect(m, s1, 7);
    int w2 = ml_detect(m, s2, 7);
    CHECK(s1.trajectories[w1] == s2.trajectories[w2]);
}

TEST_CASE("ml_detect resolves exact ties uniformly under the seed") {
    MobilityModel m = two_cell();
    TrajectorySet set{{{0, 0, 0}, {0, 0, 0}}, 0};
    int picks0 = 0;
    const int n = 4000;
    for (int seed = 0; seed < n; ++seed) picks0 += (ml_detect(m, set, seed) == 0);
    double f = static_cast<double>(picks0) / n;
    CHECK(std::fabs(f - 0.5) < 0.03);
}

TEST_CASE("ml_detect guesses uniformly when every likelihood is -inf") {
    ModelKind kind = model_kind_from_letter('c');
    kind.leak = 0.0;
    MobilityModel m = make_model(kind, 5, 1);
    // both trajectories contain an impossible jump
    TrajectorySet set{{{0, 3, 0}, {1, 4, 1}}, 0};
    int picks0 = 0;
    const int n = 4000;
    for (int seed = 0; seed < n; ++seed) picks0 += (ml_detect(m, set, seed) == 0);
    double f = static_cast<double>(picks0) / n;
    CHECK(std::fabs(f - 0.5) < 0.03);
}

TEST_CASE("advanced detector filters the precomputable ML chaff") {
    MobilityModel m = make_model(model_kind_from_letter('a'), 10, 12);
    Trajectory user = sample_trajectory(m, 40, 9);
    Trajectory chaff = ml_chaff(m, 40);
    REQUIRE(user != chaff);
    TrajectorySet set{{chaff, user}, 1};
    for (std::uint64_t seed = 0; seed < 10; ++seed)
        CHECK(advanced_detect(m, set, StrategyKind::ML, seed) == 1);
}

TEST_CASE("advanced detector filters Gamma images under OO and MO") {
    MobilityModel m = make_model(model_kind_from_letter('a'), 10, 13);
    for (StrategyKind s : {StrategyKind::OO, StrategyKind::MO}) {
        for (int k = 0; k < 5; ++k) {
            Trajectory user = sample_trajectory(m, 40, 100 + k);
            Trajectory chaff = (s == StrategyKind::OO) ? oo_chaff(m, user).chaff
                                                       : mo_chaff(m, user);
            if (chaff == user) continue;
            TrajectorySet set{{user, chaff}, 0};
            CHECK(advanced_detect(m, set, s, k) == 0);
        }
    }
}

TEST_CASE("advanced detector guesses uniformly when everything is filtered") {
    MobilityModel m = two_cell();
    Trajectory gamma = ml_chaff(m, 10);
    TrajectorySet set{{gamma, gamma}, 0};
    int picks0 = 0;
    const int n = 4000;
    for (int seed = 0; seed < n; ++seed)
        picks0 += (advanced_detect(m, set, StrategyKind::ML, seed) == 0);
    double f = static_cast<double>(picks0) / n;
    CHECK(std::fabs(f - 0.5) < 0.03);
}

TEST_CASE("advanced detector rejects randomized strategies") {
    MobilityModel m = two_cell();
    TrajectorySet set{{{0, 0}, {1, 1}}, 0};
    CHECK_THROWS_AS(advanced_detect(m, set, StrategyKind::IM, 1), UnsupportedStrategyError);
    CHECK_THROWS_AS(advanced_detect(m, set, StrategyKind::RML, 1), UnsupportedStrategyError);
}

TEST_CASE("tracking accuracy counts per-slot colocations with the true user") {
    TrajectorySet set{{{0, 1, 2, 3}, {0, 2, 2, 0}}, 0};
    DetectionResult r = tracking_accuracy(set, 1);
    CHECK(r.chosen == 1);
    CHECK(r.per_slot_correct == std::vector<char>{1, 0, 1, 0});
    CHECK(r.time_average == doctest::Approx(0.5));
    // choosing the truth gives accuracy 1
    CHECK(tracking_accuracy(set, 0).time_average == doctest::Approx(1.0));
    CHECK_THROWS_AS(tracking_accuracy(set, 2), ValidationError);
}
