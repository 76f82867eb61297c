#include <random>

#include <gtest/gtest.h>

#include <diffopt/env.hpp>

#include "oracle.hpp"

using namespace diffopt;

TEST(LoadDomain, ParsesFourRooms) {
    const Domain d = load_domain_file(DIFFOPT_DATA_DIR "/maps/fourrooms.map");
    EXPECT_EQ(d.num_states(), 104);
    EXPECT_EQ(d.width(), 13);
    EXPECT_EQ(d.height(), 13);
    EXPECT_EQ(d.start(), (Cell{11, 1}));
    ASSERT_EQ(d.goals().size(), 1u);
    EXPECT_EQ(d.goals().front(), (Cell{1, 11}));
}

TEST(LoadDomain, BundledStateCounts) {
    EXPECT_EQ(load_domain_file(DIFFOPT_DATA_DIR "/maps/ring.map").num_states(), 192);
    EXPECT_EQ(load_domain_file(DIFFOPT_DATA_DIR "/maps/maze.map").num_states(), 148);
}

TEST(LoadDomain, StatesAreRowMajor) {
    const Domain d = load_domain("S.\n#.\n");
    ASSERT_EQ(d.num_states(), 3);
    EXPECT_EQ(d.cell_of(0), (Cell{0, 0}));
    EXPECT_EQ(d.cell_of(1), (Cell{0, 1}));
    EXPECT_EQ(d.cell_of(2), (Cell{1, 1}));
    EXPECT_EQ(d.state_of({1, 0}), -1);
    EXPECT_EQ(d.state_of({5, 5}), -1);
}

TEST(LoadDomain, AcceptsCrlfAndTrailingNewlines) {
    EXPECT_EQ(load_domain("S.\r\n..\r\n\n\n").num_states(), 4);
}

TEST(LoadDomain, Rejections) {
    EXPECT_THROW(load_domain(""), MalformedMap);
    EXPECT_THROW(load_domain("S..\n.."), MalformedMap);
    EXPECT_THROW(load_domain("S.x\n..."), MalformedMap);
    EXPECT_THROW(load_domain("...\n..."), MalformedMap);
    EXPECT_THROW(load_domain("S.S\n..."), MalformedMap);
    EXPECT_THROW(load_domain("S#.\n.#."), DisconnectedDomain);
    EXPECT_THROW(load_domain_file("/nonexistent/map.map"), Error);
}

TEST(LoadDomain, WindProbabilityValidated) {
    EXPECT_THROW(load_domain("S.", Wind{Action::Down, 1.5}), MalformedMap);
    EXPECT_THROW(load_domain("S.", Wind{Action::Down, -0.1}), MalformedMap);
}

TEST(Step, DeterministicMovesAndBlocking) {
    const Domain d = load_domain("S.\n#.\n");
    std::mt19937_64 rng(1);
    EXPECT_EQ(step(d, {0, 0}, Action::Right, rng), (Cell{0, 1}));
    EXPECT_EQ(step(d, {0, 0}, Action::Down, rng), (Cell{0, 0}));
    EXPECT_EQ(step(d, {0, 0}, Action::Left, rng), (Cell{0, 0}));
    EXPECT_EQ(step(d, {0, 0}, Action::Up, rng), (Cell{0, 0}));
    EXPECT_EQ(step(d, {0, 1}, Action::Down, rng), (Cell{1, 1}));
    EXPECT_THROW(step(d, {1, 0}, Action::Up, rng), std::invalid_argument);
}

TEST(Step, WindFrequencyMatchesProbability) {
    // Actions that can never move down, so every downward move is wind.
    const Domain d = load_domain_file(DIFFOPT_DATA_DIR "/maps/fourrooms.map",
                                      Wind{Action::Down, 1.0 / 3.0});
    std::mt19937_64 rng(2024);
    const Cell from{2, 2};
    int down = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        if (step(d, from, Action::Up, rng) == Cell{3, 2}) ++down;
    }
    EXPECT_NEAR(static_cast<double>(down) / draws, 1.0 / 3.0, 0.01);
}

TEST(Step, SameSeedSameTrajectory) {
    const Domain d = load_domain_file(DIFFOPT_DATA_DIR "/maps/fourrooms.map",
                                      Wind{Action::Down, 0.3});
    std::mt19937_64 a(9);
    std::mt19937_64 b(9);
    int sa = d.start_state();
    int sb = sa;
    for (int i = 0; i < 500; ++i) {
        const auto act = static_cast<Action>(i % 4);
        sa = step_state(d, sa, act, a);
        sb = step_state(d, sb, act, b);
        ASSERT_EQ(sa, sb);
    }
}

TEST(TransitionMatrix, TwoCellColumn) {
    const Domain d = load_domain("S.");
    const Eigen::MatrixXd t = transition_matrix(d);
    EXPECT_DOUBLE_EQ(t(0, 0), 0.75);
    EXPECT_DOUBLE_EQ(t(1, 0), 0.25);
    EXPECT_DOUBLE_EQ(t(1, 1), 0.75);
    EXPECT_DOUBLE_EQ(t(0, 1), 0.25);
}

TEST(TransitionMatrix, ColumnsSumToOneWithWind) {
    for (double p : {0.0, 0.2, 1.0 / 3.0, 1.0}) {
        const Domain d = load_domain_file(DIFFOPT_DATA_DIR "/maps/fourrooms.map",
                                          Wind{Action::Down, p});
        const Eigen::MatrixXd t = transition_matrix(d);
        EXPECT_TRUE((t.array() >= 0.0).all());
        EXPECT_LT((t.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12) << "p=" << p;
    }
}

TEST(TransitionMatrix, ZeroWindEqualsDeterministic) {
    const Domain plain = load_domain_file(DIFFOPT_DATA_DIR "/maps/fourrooms.map");
    const Domain calm = plain.with_wind(Wind{Action::Down, 0.0});
    EXPECT_TRUE(calm.deterministic());
    EXPECT_EQ(transition_matrix(plain), transition_matrix(calm));
}

TEST(TransitionMatrix, MatchesEmpiricalFrequencies) {
    const Domain d = load_domain_file(DIFFOPT_DATA_DIR "/maps/fourrooms.map",
                                      Wind{Action::Down, 1.0 / 3.0});
    const Eigen::MatrixXd t = transition_matrix(d);
    std::mt19937_64 rng(5);
    const int s = d.state_of({5, 3});
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(d.num_states());
    const int draws = 40000;
    for (int i = 0; i < draws; ++i) {
        counts(step_state(d, s, kActions[rng() % 4], rng)) += 1.0;
    }
    EXPECT_LT((counts / draws - t.col(s)).cwiseAbs().maxCoeff(), 0.01);
}

TEST(Actions, RoundTrip) {
    for (Action a : kActions) EXPECT_EQ(parse_action(to_string(a)), a);
    EXPECT_FALSE(parse_action("sideways").has_value());
}
