#include <doctest.h>

#include <cmath>
#include <sstream>

#include "chaffsim/mobility.hpp"

using namespace chaffsim;

namespace {

MobilityModel two_cell() {
    return make_mobility_model(2, {0.9, 0.1, 0.5, 0.5});
}

}  // namespace

TEST_CASE("stationary distribution of a doubly stochastic chain is uniform") {
    std::vector<double> m{0.2, 0.3, 0.5, 0.5, 0.2, 0.3, 0.3, 0.5, 0.2};
    auto pi = stationary_distribution(3, m);
    for (double v : pi) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-9));
}

TEST_CASE("stationary distribution solves the 2x2 linear system") {
    auto pi = stationary_distribution(2, {0.9, 0.1, 0.5, 0.5});
    CHECK(pi[0] == doctest::Approx(5.0 / 6).epsilon(1e-10));
    CHECK(pi[1] == doctest::Approx(1.0 / 6).epsilon(1e-10));
}

TEST_CASE("periodic two-cycle is rejected") {
    CHECK_THROWS_AS(stationary_distribution(2, {0.0, 1.0, 1.0, 0.0}), ErgodicityError);
}

TEST_CASE("non-stochastic row is rejected") {
    CHECK_THROWS_AS(stationary_distribution(2, {0.9, 0.2, 0.5, 0.5}), ValidationError);
}

TEST_CASE("reducible chain is rejected") {
    CHECK_THROWS_AS(stationary_distribution(2, {1.0, 0.0, 0.0, 1.0}), ErgodicityError);
}

TEST_CASE("model invariants hold for every generated kind") {
    for (char kind : {'a', 'b', 'c', 'd'}) {
        MobilityModel m = make_model(model_kind_from_letter(kind), 10, 7);
        int L = m.cell_count;
        for (int i = 0; i < L; ++i) {
            double s = 0.0;
            for (int j = 0; j < L; ++j) s += m.p(i, j);
            CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        }
        // stationarity residual
        for (int j = 0; j < L; ++j) {
            double v = 0.0;
            for (int i = 0; i < L; ++i) v += m.stationary[i] * m.p(i, j);
            CHECK(std::fabs(v - m.stationary[j]) < 1e-9);
        }
        for (double v : m.stationary) CHECK(v > 0.0);
    }
}

TEST_CASE("model (c) with zero leak and L=3 has exact cyclic rows") {
    ModelKind kind = model_kind_from_letter('c');
    kind.leak = 0.0;
    MobilityModel m = make_model(kind, 3, 1);
    for (int i = 0; i < 3; ++i) {
        CHECK(m.p(i, i) == doctest::Approx(0.25));
        CHECK(m.p(i, (i + 1) % 3) == doctest::Approx(0.5));
        CHECK(m.p(i, (i + 2) % 3) == doctest::Approx(0.25));
    }
}

TEST_CASE("model (c) rows carry p right, q left, leak elsewhere") {
    MobilityModel m = make_model(model_kind_from_letter('c'), 10, 3);
    for (int i = 0; i < 10; ++i) {
        CHECK(m.p(i, (i + 1) % 10) == doctest::Approx(0.5).epsilon(1e-3));
        CHECK(m.p(i, (i + 9) % 10) == doctest::Approx(0.25).epsilon(1e-3));
        CHECK(m.p(i, i) == doctest::Approx(0.25).epsilon(1e-3));
        for (int j = 0; j < 10; ++j)
            if (j != i && j != (i + 1) % 10 && j != (i + 9) % 10)
                CHECK(m.p(i, j) == doctest::Approx(1e-5).epsilon(1e-2));
    }
    // random walk with wrap has uniform stationary distribution
    for (double v : m.stationary) CHECK(v == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("model (d) folds boundary mass into staying") {
    ModelKind kind = model_kind_from_letter('d');
    kind.leak = 0.0;
    MobilityModel m = make_model(kind, 5, 1);
    CHECK(m.p(0, 0) == doctest::Approx(0.5));   // stay + folded left
    CHECK(m.p(0, 1) == doctest::Approx(0.5));
    CHECK(m.p(4, 4) == doctest::Approx(0.75));  // stay + folded right
    CHECK(m.p(4, 3) == doctest::Approx(0.25));
}

TEST_CASE("make_model rejects L < 2 and bad parameters") {
    CHECK_THROWS_AS(make_model(model_kind_from_letter('a'), 1, 1), ValidationError);
    ModelKind bad = model_kind_from_letter('c');
    bad.p = 0.8;
    bad.q = 0.5;
    CHECK_THROWS_AS(make_model(bad, 5, 1), ValidationError);
}

TEST_CASE("sample_trajectory is deterministic under a fixed seed") {
    MobilityModel m = make_model(model_kind_from_letter('a'), 10, 11);
    CHECK(sample_trajectory(m, 50, 99) == sample_trajectory(m, 50, 99));
    CHECK(sample_trajectory(m, 50, 99) != sample_trajectory(m, 50, 100));
}

TEST_CASE("long-run empirical frequency approaches the stationary distribution") {
    MobilityModel m = two_cell();
    Trajectory x = sample_trajectory(m, 100000, 5);
    double freq0 = 0.0;
    for (int c : x) freq0 += (c == 0);
    freq0 /= x.size();
    CHECK(std::fabs(freq0 - 5.0 / 6) < 0.01);
}

TEST_CASE("ergodic frequencies converge per cell on a 10-cell model") {
    MobilityModel m = make_model(model_kind_from_letter('b'), 10, 21);
    Trajectory x = sample_trajectory(m, 100000, 6);
    std::vector<double> freq(10, 0.0);
    for (int c : x) freq[c] += 1.0;
    for (int i = 0; i < 10; ++i)
        CHECK(std::fabs(freq[i] / x.size() - m.stationary[i]) < 0.02);
}

TEST_CASE("trajectory log-likelihood matches the factor product") {
    MobilityModel m = two_cell();
    CHECK(trajectory_log_likelihood(m, {0, 0, 0}) ==
          doctest::Approx(std::log(5.0 / 6) + 2 * std::log(0.9)).epsilon(1e-12));
    CHECK(trajectory_log_likelihood(m, {0, 0, 0}) == doctest::Approx(-0.3930).epsilon(1e-3));
    CHECK(trajectory_log_likelihood(m, {1, 1, 1}) == doctest::Approx(-3.178).epsilon(1e-3));
}

TEST_CASE("zero-probability transition yields -inf likelihood") {
    ModelKind kind = model_kind_from_letter('c');
    kind.leak = 0.0;
    MobilityModel m = make_model(kind, 5, 1);
    CHECK(trajectory_log_likelihood(m, {0, 3, 0}) == kNegInf);
}

TEST_CASE("KL skewness is zero for identical rows") {
    MobilityModel m = make_mobility_model(3, {0.2, 0.3, 0.5, 0.2, 0.3, 0.5, 0.2, 0.3, 0.5});
    CHECK(temporal_skewness_kl(m) == doctest::Approx(0.0));
}

TEST_CASE("KL skewness on a hand-computed 2-row model") {
    MobilityModel m = make_mobility_model(2, {0.5, 0.5, 0.6, 0.4});
    double d01 = 0.5 * std::log(0.5 / 0.6) + 0.5 * std::log(0.5 / 0.4);
    double d10 = 0.6 * std::log(0.6 / 0.5) + 0.4 * std::log(0.4 / 0.5);
    CHECK(temporal_skewness_kl(m) == doctest::Approx((d01 + d10) / 2).epsilon(1e-12));
}

TEST_CASE("KL skewness is nonnegative on random models, zero iff rows equal") {
    for (int seed = 0; seed < 20; ++seed) {
        MobilityModel m = make_model(model_kind_from_letter('a'), 6, seed);
        CHECK(temporal_skewness_kl(m) >= 0.0);
    }
}

TEST_CASE("estimate_model without smoothing rejects a periodic sample") {
    CHECK_THROWS_AS(estimate_model({{0, 1, 0, 1}}, 0.0), ErgodicityError);
}

TEST_CASE("estimate_model applies additive smoothing to transition counts") {
    MobilityModel m = estimate_model({{0, 1, 0, 1}}, 0.01);
    // departures: cell 0 twice (both to 1), cell 1 once (to 0)
    CHECK(m.p(0, 1) == doctest::Approx(2.01 / 2.02).epsilon(1e-12));
    CHECK(m.p(0, 0) == doctest::Approx(0.01 / 2.02).epsilon(1e-12));
    CHECK(m.p(1, 0) == doctest::Approx(1.01 / 1.02).epsilon(1e-12));
    CHECK(m.p(1, 1) == doctest::Approx(0.01 / 1.02).epsilon(1e-12));
}

TEST_CASE("estimate_model recovers a known 5-cell model from 500 traces") {
    MobilityModel truth = make_model(model_kind_from_letter('a'), 5, 77);
    std::vector<Trajectory> samples;
    for (int i = 0; i < 500; ++i) samples.push_back(sample_trajectory(truth, 100, 1000 + i));
    MobilityModel est = estimate_model(samples, 1e-6);
    REQUIRE(est.cell_count == 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(std::fabs(est.p(i, j) - truth.p(i, j)) < 0.05);
    for (double v : est.stationary) CHECK(v > 0.0);
}

TEST_CASE("model text format round-trips to full precision") {
    MobilityModel m = make_model(model_kind_from_letter('b'), 7, 13);
    std::stringstream ss;
    write_model(ss, m);
    MobilityModel back = read_model(ss);
    REQUIRE(back.cell_count == 7);
    for (std::size_t i = 0; i < m.transition.size(); ++i)
        CHECK(back.transition[i] == m.transition[i]);
    for (std::size_t i = 0; i < m.stationary.size(); ++i)
        CHECK(back.stationary[i] == m.stationary[i]);
}

TEST_CASE("model reader rejects a bad header") {
    std::stringstream ss("3 WRONG v1\n");
    CHECK_THROWS_AS(read_model(ss), IoError);
}
