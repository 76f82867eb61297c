#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include <diffopt/options.hpp>

#include "oracle.hpp"

using namespace diffopt;

namespace {

StateGraph graph(const Eigen::MatrixXd& m) { return graph_from_weights(m); }

StateGraph grid_graph(const std::string& text) { return build_state_graph(load_domain(text)); }

StateGraph fourrooms() {
    return build_state_graph(load_domain_file(DIFFOPT_DATA_DIR "/maps/fourrooms.map"));
}

}  // namespace

TEST(ScoreField, PathOfThreeAtTimeOne) {
    const ScoreField f = score_field(graph_spectrum(graph(oracle::path(3))), 1);
    EXPECT_NEAR(f.values(0), 0.125, 1e-14);
    EXPECT_NEAR(f.values(1), 0.0, 1e-14);
    EXPECT_NEAR(f.values(2), 0.125, 1e-14);
    EXPECT_EQ(f.components, 2);
    EXPECT_EQ(f.spectrum_source, "laplacian");
}

TEST(ScoreField, EqualsDistanceToStationaryLaw) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 35);
        const Eigen::MatrixXd m = oracle::random_connected_graph(n, rng);
        const WalkSpectrum sp = graph_spectrum(graph(m));
        for (int t : {1, 2, 4, 13}) {
            const ScoreField f = score_field(sp, t);
            EXPECT_TRUE((f.values.array() >= 0.0).all());
            EXPECT_LT((f.values - oracle::score(m, t)).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(ScoreField, SpectralGapBound) {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 35);
        const StateGraph g = graph(oracle::random_connected_graph(n, rng));
        const WalkMatrices wm = walk_matrices(g);
        const WalkSpectrum sp = spectrum_of(wm);
        for (int t : {1, 2, 4, 13, 50}) {
            const ScoreField f = score_field(sp, t);
            for (int s = 0; s < n; ++s) {
                const double bound = std::pow(sp.omegas(1), 2.0 * t) * (1.0 / wm.stationary(s) - 1.0);
                EXPECT_LE(f.values(s), bound + 1e-10);
            }
        }
    }
}

TEST(ScoreField, StationaryWeightedMeanSquaredDistance) {
    // f_t(s) − Σ_{s'} π₀(s') D_t²(s, s') is the same for every s.
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 30);
        const Eigen::MatrixXd m = oracle::random_connected_graph(n, rng);
        const WalkMatrices wm = walk_matrices(graph(m));
        const WalkSpectrum sp = spectrum_of(wm);
        for (int t : {1, 2, 4, 13}) {
            const ScoreField f = score_field(sp, t);
            Eigen::VectorXd gap(n);
            for (int s = 0; s < n; ++s) {
                double weighted = 0.0;
                for (int u = 0; u < n; ++u) {
                    const double d = oracle::distance(m, s, u, t);
                    weighted += wm.stationary(u) * d * d;
                }
                gap(s) = f.values(s) - weighted;
            }
            EXPECT_LT(gap.maxCoeff() - gap.minCoeff(), 1e-10);
        }
    }
}

TEST(ScoreField, UniformMeanSquaredDistanceOnRegularGraphs) {
    for (int n : {5, 8, 13}) {
        const WalkMatrices wm = walk_matrices(graph(oracle::cycle(n)));
        const WalkSpectrum sp = spectrum_of(wm);
        for (int t : {1, 2, 4, 13}) {
            const Eigen::VectorXd gap = score_field(sp, t).values - mean_sq_diffusion_distances(wm, t);
            EXPECT_LT(gap.maxCoeff() - gap.minCoeff(), 1e-12);
        }
    }
}

TEST(ScoreField, MeanSquaredDistanceOracle) {
    std::mt19937_64 rng(34);
    const Eigen::MatrixXd m = oracle::random_connected_graph(12, rng);
    const WalkMatrices wm = walk_matrices(graph(m));
    for (int s = 0; s < 12; ++s) {
        double acc = 0.0;
        for (int u = 0; u < 12; ++u) acc += std::pow(oracle::distance(m, s, u, 3), 2);
        EXPECT_NEAR(mean_sq_diffusion_distance(wm, s, 3), acc / 12.0, 1e-13);
    }
}

TEST(ScoreField, TruncationKeepsLeadingComponents) {
    const WalkSpectrum sp = graph_spectrum(fourrooms());
    const ScoreField full = score_field(sp, 4);
    EXPECT_EQ(score_field(sp, 4, 1000).values, full.values);
    EXPECT_EQ(score_field(sp, 4, 0).values, Eigen::VectorXd::Zero(sp.size()));
    EXPECT_THROW(score_field(sp, 0), std::invalid_argument);
}

TEST(LocalMaxima, StrictAndSorted) {
    const StateGraph g = graph(oracle::path(5));
    ScoreField f;
    f.values = Eigen::VectorXd(5);
    f.values << 1.0, 0.5, 2.0, 0.1, 0.3;
    EXPECT_EQ(local_maxima(f, g), (std::vector<int>{2, 0, 4}));
}

TEST(LocalMaxima, PlateauCollapsesToLowestIndex) {
    const StateGraph g = graph(oracle::path(5));
    ScoreField f;
    f.values = Eigen::VectorXd(5);
    f.values << 0.0, 1.0, 1.0, 1.0, 0.0;
    EXPECT_EQ(local_maxima(f, g), (std::vector<int>{1}));
    f.values << 0.0, 1.0, 1.0, 2.0, 0.0;
    EXPECT_EQ(local_maxima(f, g), (std::vector<int>{3}));
}

TEST(LocalMaxima, CompleteGraphOnTwoGivesOneOption) {
    const StateGraph g = graph(oracle::path(2));
    EXPECT_EQ(diffusion_goals(g, 1), (std::vector<int>{0}));
    EXPECT_EQ(discover_diffusion_options(grid_graph("S."), 1).size(), 1u);
}

TEST(LocalMaxima, OpenGridCorners) {
    for (int n : {5, 8, 11}) {
        const Domain d = load_domain(oracle::open_grid(n, n));
        const StateGraph g = build_state_graph(d);
        const std::set<int> corners{d.state_of({0, 0}), d.state_of({0, n - 1}),
                                    d.state_of({n - 1, 0}), d.state_of({n - 1, n - 1})};
        for (int t : {4, 13, 100}) {
            const auto goals = diffusion_goals(g, t);
            EXPECT_EQ(std::set<int>(goals.begin(), goals.end()), corners) << n << " t=" << t;
        }
    }
}

TEST(DiffusionOptions, FourRoomsCounts) {
    const StateGraph g = fourrooms();
    EXPECT_EQ(discover_diffusion_options(g, 4).size(), 20u);
    EXPECT_EQ(discover_diffusion_options(g, 13).size(), 15u);
}

TEST(DiffusionOptions, CountsDoNotGrowWithScale) {
    for (const char* map : {"/maps/fourrooms.map", "/maps/ring.map", "/maps/maze.map"}) {
        const StateGraph g = build_state_graph(load_domain_file(std::string(DIFFOPT_DATA_DIR) + map));
        EXPECT_LE(discover_diffusion_options(g, 13).size(), discover_diffusion_options(g, 4).size()) << map;
    }
}

TEST(DiffusionOptions, StructureOfEachOption) {
    const StateGraph g = fourrooms();
    const OptionSet set = discover_diffusion_options(g, 4);
    EXPECT_EQ(set.method, OptionMethod::Diffusion);
    EXPECT_EQ(set.params.t, 4.0);
    for (const Option& o : set.options) {
        ASSERT_TRUE(o.goal.has_value());
        for (int s = 0; s < g.size(); ++s) {
            EXPECT_TRUE(o.can_start(s));
            EXPECT_EQ(o.terminates(s), s == *o.goal);
        }
    }
}

TEST(DiffusionOptions, WindyDomainUsesPolarSpectrum) {
    const Domain d = load_domain_file(DIFFOPT_DATA_DIR "/maps/fourrooms.map", Wind{Action::Down, 1.0 / 3.0});
    const StateGraph g = build_directed_graph(d);
    const ScoreField f = score_field(graph_spectrum(g), 4);
    EXPECT_EQ(f.spectrum_source, "polar");
    EXPECT_FALSE(discover_diffusion_options(g, 4).options.empty());
}

TEST(ShortestPath, PolicyFollowsBfsTree) {
    const Domain d = load_domain_file(DIFFOPT_DATA_DIR "/maps/fourrooms.map");
    const StateGraph g = build_state_graph(d);
    const int goal = d.state_of({1, 11});
    const Policy p = shortest_path_policy(g, goal);
    const auto dist = oracle::bfs(g.weights, goal);
    EXPECT_FALSE(p[static_cast<std::size_t>(goal)].has_value());
    for (int s = 0; s < g.size(); ++s) {
        if (s == goal) continue;
        ASSERT_TRUE(p[static_cast<std::size_t>(s)].has_value());
        const int next = d.successor(s, *p[static_cast<std::size_t>(s)]);
        EXPECT_EQ(dist[static_cast<std::size_t>(next)], dist[static_cast<std::size_t>(s)] - 1);
    }
}

TEST(ShortestPath, TiesFollowActionOrder) {
    const Domain d = load_domain("S.\n..\n");
    const Policy p = shortest_path_policy(build_state_graph(d), d.state_of({0, 0}));
    // From (1,1) both Left and Up shorten the path; Left comes first.
    EXPECT_EQ(p[static_cast<std::size_t>(d.state_of({1, 1}))], Action::Left);
}

TEST(ShortestPath, UnreachableGoal) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
    m(0, 1) = m(1, 0) = m(2, 3) = m(3, 2) = 1.0;
    const StateGraph g = graph_from_weights(m, {{0, 0}, {0, 1}, {0, 2}, {0, 3}});
    EXPECT_THROW(shortest_path_policy(g, 3), UnreachableGoal);
    EXPECT_THROW(shortest_path_policy(graph(oracle::path(3)), 0), std::invalid_argument);
}

TEST(Eigenoptions, ExactCountAndBothSigns) {
    const StateGraph g = fourrooms();
    for (int k : {1, 5, 20}) EXPECT_EQ(eigenoptions(g, k).size(), static_cast<std::size_t>(k));
    EXPECT_THROW(eigenoptions(g, 0), std::invalid_argument);
}

TEST(Eigenoptions, PathOfThreeSignsTerminateAtOppositeEnds) {
    const Domain d = load_domain("S..\n");
    const OptionSet set = eigenoptions(build_state_graph(d), 2);
    ASSERT_EQ(set.size(), 2u);
    EXPECT_NE(set.options[0].termination, set.options[1].termination);
    // φ̃_2 on P3 is proportional to (1, 0, −1) up to sign.
    for (const Option& o : set.options) {
        EXPECT_TRUE(o.terminates(0) != o.terminates(2));
        EXPECT_FALSE(o.terminates(1));
    }
}

TEST(Eigenoptions, PoliciesReachTermination) {
    const Domain d = load_domain_file(DIFFOPT_DATA_DIR "/maps/fourrooms.map");
    const OptionSet set = eigenoptions(build_state_graph(d), 20);
    for (const Option& o : set.options) {
        for (int s = 0; s < d.num_states(); ++s) {
            int x = s;
            int steps = 0;
            while (!o.terminates(x) && steps <= d.num_states()) {
                ASSERT_TRUE(o.policy[static_cast<std::size_t>(x)].has_value());
                x = d.successor(x, *o.policy[static_cast<std::size_t>(x)]);
                ++steps;
            }
            EXPECT_TRUE(o.terminates(x));
        }
    }
}

TEST(CoverOptions, CorridorEndpointsFirst) {
    const StateGraph g = grid_graph("S....\n");
    const OptionSet set = cover_options(g, 2);
    ASSERT_EQ(set.size(), 2u);
    std::set<int> goals{*set.options[0].goal, *set.options[1].goal};
    EXPECT_EQ(goals, (std::set<int>{0, 4}));
}

TEST(CoverOptions, AugmentationDoesNotReduceConnectivity) {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd a = oracle::random_connected_graph(4 + trial, rng, false);
        const Eigen::VectorXd v = fiedler_vector(a);
        Eigen::Index lo = 0;
        Eigen::Index hi = 0;
        v.minCoeff(&lo);
        v.maxCoeff(&hi);
        const double before = algebraic_connectivity(a);
        a(lo, hi) = a(hi, lo) = 1.0;
        EXPECT_GE(algebraic_connectivity(a), before - 1e-12);
    }
}

TEST(CoverOptions, PointOptionsOnlyFromSource) {
    const StateGraph g = fourrooms();
    const OptionSet set = cover_options(g, 6);
    ASSERT_EQ(set.size(), 6u);
    for (const Option& o : set.options) {
        int sources = 0;
        for (int s = 0; s < g.size(); ++s) sources += o.can_start(s) ? 1 : 0;
        EXPECT_EQ(sources, 1);
        for (int s = 0; s < g.size(); ++s) {
            if (!o.can_start(s)) EXPECT_FALSE(o.eligible(s));
        }
    }
    EXPECT_EQ(cover_options(g, 3).size(), 3u);
}

TEST(RandomOptions, DistinctSeededAndExhaustive) {
    const StateGraph g = fourrooms();
    std::mt19937_64 a(5);
    std::mt19937_64 b(5);
    const OptionSet x = random_options(g, 20, a);
    const OptionSet y = random_options(g, 20, b);
    std::set<int> gx;
    for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_EQ(x.options[i].goal, y.options[i].goal);
        gx.insert(*x.options[i].goal);
    }
    EXPECT_EQ(gx.size(), 20u);

    std::mt19937_64 c(1);
    const OptionSet all = random_options(g, g.size(), c);
    std::set<int> every;
    for (const Option& o : all.options) every.insert(*o.goal);
    EXPECT_EQ(static_cast<int>(every.size()), g.size());
    EXPECT_THROW(random_options(g, g.size() + 1, c), std::invalid_argument);
}

TEST(Methods, NamesRoundTrip) {
    for (OptionMethod m : {OptionMethod::Diffusion, OptionMethod::Eigen, OptionMethod::Cover,
                           OptionMethod::Random, OptionMethod::None}) {
        EXPECT_EQ(parse_method(to_string(m)), m);
    }
    EXPECT_FALSE(parse_method("bogus").has_value());
}

TEST(WriteOptions, HeaderAndRowCount) {
    const StateGraph g = grid_graph("S..\n");
    const OptionSet set = discover_diffusion_options(g, 1);
    std::ostringstream out;
    write_options_csv(out, set, g);
    const std::string text = out.str();
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "option,method,state,row,col,action,is_goal,in_initiation,terminates");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'),
              static_cast<long>(1 + set.size() * 3));
}
