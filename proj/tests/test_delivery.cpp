/*
 * Copyright 2026 The ccdelivery Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ccdelivery/delivery.hpp"
#include "fixtures.hpp"

namespace ccdelivery {
namespace {

using testing::example_subnetwork;

PartitionSet sized_partitions(std::initializer_list<std::size_t> sizes, std::size_t& next_user) {
    PartitionSet set;
    for (std::size_t n : sizes) {
        Partition p;
        for (std::size_t h = 0; h < n; ++h) p.push_back({h, next_user++});
        set.partitions.push_back(p);
    }
    return set;
}

TEST(BuildSchedule, RoundsAndEmptyCounts) {
    std::size_t u = 0;
    const auto s = build_schedule({sized_partitions({4, 4, 1}, u), sized_partitions({2, 2}, u), PartitionSet{}});
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.rounds[0].empty_profiles, 1u);
    EXPECT_EQ(s.rounds[1].empty_profiles, 1u);
    EXPECT_EQ(s.rounds[2].empty_profiles, 2u);
    EXPECT_FALSE(s.rounds[1].by_profile[2].has_value());
}

TEST(BuildSchedule, AllEmpty) {
    EXPECT_EQ(build_schedule({PartitionSet{}, PartitionSet{}}).size(), 0u);
}

TEST(BuildSchedule, HelperVectorSkipsEmptySlots) {
    // Partition 0-2-0-1: helpers e2, e4 serving u2, u1.
    PartitionSet set;
    set.partitions.push_back({{3, 1}, {1, 2}});
    const auto s = build_schedule({set});
    const auto& served = *s.rounds[0].by_profile[0];
    EXPECT_EQ(served.helpers, (std::vector<std::size_t>{1, 3}));
    EXPECT_EQ(served.users, (std::vector<std::size_t>{2, 1}));
}

TEST(CountTransmissions, ClosedFormExamples) {
    std::size_t u = 0;
    // L=3, t=1, one round with one empty profile: all three pairs are sent.
    const auto s = build_schedule({sized_partitions({4}, u), sized_partitions({2}, u), PartitionSet{}});
    EXPECT_EQ(count_transmissions(s, 1), 3u);
    EXPECT_EQ(enumerate_transmissions(s, 1), 3u);

    std::vector<PartitionSet> ten;
    for (int l = 0; l < 10; ++l) ten.push_back(sized_partitions({4}, u));
    const auto full = build_schedule(ten);
    EXPECT_EQ(count_transmissions(full, 1), 45u);
    EXPECT_DOUBLE_EQ(delivery_time(45, 10, 1), 4.5);
}

TEST(CountTransmissions, FormulaMatchesEnumeration) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t L = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
        const std::size_t t = std::uniform_int_distribution<std::size_t>(0, L - 1)(rng);
        std::vector<PartitionSet> sets(L);
        std::size_t u = 0;
        for (auto& set : sets) {
            const std::size_t g = std::uniform_int_distribution<std::size_t>(0, 4)(rng);
            for (std::size_t i = 0; i < g; ++i) set.partitions.push_back({{0, u++}});
        }
        const auto s = build_schedule(sets);
        EXPECT_EQ(count_transmissions(s, t), enumerate_transmissions(s, t));
        EXPECT_EQ(count_transmissions(s, t), plan_transmissions(s, t).size());
    }
}

TEST(DeliveryTime, Basics) {
    EXPECT_DOUBLE_EQ(delivery_time(0, 10, 1), 0.0);
    // Fully connected, C_l = c*E: c rounds of C(L,t+1) groups.
    for (std::size_t c : {1u, 2u, 3u}) {
        const std::size_t E = 4, L = 10, t = 1, K = L * c * E;
        const double expected = (double(K) / double(L * E)) * double(binomial(L, t + 1)) / double(binomial(L, t));
        EXPECT_DOUBLE_EQ(delivery_time(c * binomial(L, t + 1), L, t), expected);
    }
}

TEST(SumDof, Values) {
    EXPECT_FALSE(sum_dof(0, 0.1, 0.0).has_value());
    EXPECT_THROW(sum_dof(3, 0.1, 0.0), UndefinedMetric);
    EXPECT_NEAR(*sum_dof(40, 0.1, 4.5), 8.0, 1e-12);
    EXPECT_DOUBLE_EQ(*sum_dof(40, 10, 1, 45), 8.0);
    EXPECT_THROW(sum_dof(1, 10, 1, 0), UndefinedMetric);
}

ChannelMatrix random_channel(const Connectivity& c, std::uint64_t seed) {
    Rng rng(seed);
    return draw_channels(c, rng);
}

TEST(Precoder, ExampleOneClosedForm) {
    const auto conn = Connectivity::from_candidates(4, {{0}, {0, 1}, {0, 1, 2}, {1, 3}});
    const auto H = random_channel(conn, 2);
    const auto h = [&](std::size_t k, std::size_t i) { return H(k, i); };
    const Complex X1{0.3, -1.1}, X2{1.7, 0.2}, X3{-0.4, 0.9}, X4{0.05, -0.6};
    // Helper signals written out by back substitution on the lower-triangular pattern.
    Eigen::VectorXcd x(4);
    x << X1, X2 - X1 * h(1, 0) / h(1, 1),
        X3 - X2 * h(2, 1) / h(2, 2) + X1 * (h(1, 0) * h(2, 1) - h(1, 1) * h(2, 0)) / (h(1, 1) * h(2, 2)),
        X4 - X2 * h(3, 1) / h(3, 3) + X1 * (h(1, 0) * h(3, 1)) / (h(1, 1) * h(3, 3));
    const Eigen::VectorXcd y = H.coefficients * x;
    EXPECT_LT(std::abs(y(0) - X1 * h(0, 0)), 1e-12);
    EXPECT_LT(std::abs(y(1) - X2 * h(1, 1)), 1e-12);
    EXPECT_LT(std::abs(y(2) - X3 * h(2, 2)), 1e-12);
    EXPECT_LT(std::abs(y(3) - X4 * h(3, 3)), 1e-12);

    // The zero-forcing precoder applied to the scaled messages produces the same x.
    const auto inv = build_precoder(H, {0, 1, 2, 3}, {0, 1, 2, 3});
    Eigen::VectorXcd scaled(4);
    scaled << X1 * h(0, 0), X2 * h(1, 1), X3 * h(2, 2), X4 * h(3, 3);
    EXPECT_LT((inv * scaled - x).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Precoder, ScalarCase) {
    const auto conn = Connectivity::from_candidates(2, {{1}});
    const auto H = random_channel(conn, 5);
    const auto inv = build_precoder(H, {1}, {0});
    EXPECT_LT(std::abs(inv(0, 0) - 1.0 / H(0, 1)), 1e-15);
}

TEST(Precoder, IdentityOnRandomMatchings) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::vector<std::size_t>> cand(4);
        for (std::size_t k = 0; k < 4; ++k) {
            cand[k].push_back(k);  // perfect matching on the diagonal
            for (std::size_t i = 0; i < 4; ++i)
                if (i != k && rng() % 2) cand[k].push_back(i);
            std::sort(cand[k].begin(), cand[k].end());
        }
        const auto H = random_channel(Connectivity::from_candidates(4, cand), rng());
        const auto inv = build_precoder(H, {0, 1, 2, 3}, {0, 1, 2, 3});
        const Eigen::MatrixXcd id = H.coefficients * inv;
        double norm = (id - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().rowwise().sum().maxCoeff();
        EXPECT_LT(norm, 1e-9);
    }
}

TEST(Precoder, SingularSubmatrixRejected) {
    ChannelMatrix H;
    H.coefficients = Eigen::MatrixXcd::Ones(2, 2);
    EXPECT_THROW(build_precoder(H, {0, 1}, {0, 1}), SingularMatrix);
    EXPECT_THROW(build_precoder(H, {0}, {0, 1}), InvalidParameter);
}

/// The running example as profile 1 of a 3-profile system, with profile 2
/// holding users 14 and 18 on helpers 2 and 4.
struct ExampleTwo {
    Connectivity conn;
    ProfileAssignment profiles;
    RoundSchedule schedule;
    ChannelMatrix channel;
};

ExampleTwo example_two(std::uint64_t seed) {
    ExampleTwo ex;
    const auto sub = example_subnetwork();
    // 0-based global users: label u is index u-1. Profile 1 holds u1..u12,
    // profile 2 holds u13, u14, u18 and profile 3 holds u15, u16, u17, u19.
    std::vector<std::vector<std::size_t>> cand(19, {0, 1, 2, 3});
    for (std::size_t k = 0; k < 12; ++k) cand[k] = sub.candidates[k];
    cand[12] = {0};
    cand[13] = cand[17] = {1, 3};
    std::vector<std::size_t> profile_of(19, 2);
    for (std::size_t k = 0; k < 12; ++k) profile_of[k] = 0;
    profile_of[12] = profile_of[13] = profile_of[17] = 1;
    ex.conn = Connectivity::from_candidates(4, cand);
    ex.profiles = ProfileAssignment::from_profiles(profile_of, 3);

    std::vector<PartitionSet> sets(3);
    sets[0].partitions = {{{0, 0}, {1, 3}, {2, 6}, {3, 10}}, {{0, 1}, {1, 4}, {2, 7}, {3, 11}},
                          {{0, 2}, {1, 8}, {2, 5}, {3, 9}}};
    sets[1].partitions = {{{0, 12}}, {{1, 13}, {3, 17}}};
    sets[2].partitions = {{{0, 14}, {1, 15}, {2, 16}, {3, 18}}};
    ex.schedule = build_schedule(sets);
    Rng rng(seed);
    ex.channel = draw_channels(ex.conn, rng);
    return ex;
}

TEST(ComposeSignal, ExampleTwoRoundTwo) {
    auto ex = example_two(3);
    const auto& r2 = ex.schedule.rounds[1];
    EXPECT_EQ(r2.empty_profiles, 1u);
    EXPECT_EQ(r2.by_profile[0]->users, (std::vector<std::size_t>{1, 4, 7, 11}));  // u2 u5 u8 u12
    EXPECT_EQ(r2.by_profile[1]->helpers, (std::vector<std::size_t>{1, 3}));

    const auto demands = Demands::distinct(19);
    const SymbolBook symbols(9, 3);
    const auto rec = compose_signal(1, {1, 2}, ex.channel, ex.schedule, demands, symbols);
    ASSERT_TRUE(rec.has_value());
    ASSERT_EQ(rec->blocks.size(), 1u);
    // z([V2, V4]) = [0, V2, 0, V4]
    const auto& padded = rec->blocks[0].padded;
    EXPECT_EQ(padded(0), Complex{});
    EXPECT_EQ(padded(2), Complex{});
    EXPECT_NE(padded(1), Complex{});
    EXPECT_NE(padded(3), Complex{});
    EXPECT_EQ(rec->blocks[0].plan.subfile.members, (std::vector<std::size_t>{2}));
}

TEST(ComposeSignal, GroupWithoutActiveProfileIsSkipped) {
    std::size_t u = 0;
    const auto s = build_schedule({sized_partitions({1}, u), PartitionSet{}, PartitionSet{}});
    ChannelMatrix H;
    H.coefficients = Eigen::MatrixXcd::Ones(1, 1);
    EXPECT_FALSE(compose_signal(0, {1, 2}, H, s, Demands::distinct(1), SymbolBook(1, 3)).has_value());
}

TEST(ComposeSignal, SignalIsSumOfBlocks) {
    auto ex = example_two(4);
    const auto demands = Demands::distinct(19);
    const SymbolBook symbols(1, 3);
    for (const auto& plan : plan_transmissions(ex.schedule, 1)) {
        const auto rec = compose_signal(plan, ex.channel, demands, symbols);
        Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(4);
        for (const auto& b : rec.blocks) sum += b.padded;
        EXPECT_LT((sum - rec.signal).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(VerifyDecode, ExampleTwoUser14) {
    auto ex = example_two(5);
    const auto demands = Demands::distinct(19);
    const SymbolBook symbols(2, 3);
    const auto rec = compose_signal(1, {0, 1}, ex.channel, ex.schedule, demands, symbols);
    ASSERT_TRUE(rec.has_value());
    ASSERT_EQ(rec->blocks.size(), 2u);
    const auto residuals = verify_decode(*rec, ex.channel, demands, symbols);
    bool saw14 = false;
    for (const auto& r : residuals) {
        EXPECT_LT(r.residual, 1e-9);
        if (r.user == 13) {
            saw14 = true;
            EXPECT_EQ(r.profile, 1u);
        }
    }
    EXPECT_TRUE(saw14);
    // u14 wants W_{1} from this group.
    EXPECT_EQ(rec->blocks[1].plan.subfile.members, (std::vector<std::size_t>{0}));
}

TEST(VerifyDecode, SingleUserExact) {
    const auto conn = Connectivity::from_candidates(1, {{0}});
    const auto H = random_channel(conn, 8);
    PartitionSet set;
    set.partitions.push_back({{0, 0}});
    const auto s = build_schedule({set, PartitionSet{}});
    const auto demands = Demands::distinct(1);
    const SymbolBook symbols(3, 2);
    const auto rec = compose_signal(0, {0, 1}, H, s, demands, symbols);
    const auto r = verify_decode(*rec, H, demands, symbols);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_LT(r[0].residual, 1e-14);
}

TEST(VerifyDecode, CorruptedSignalFails) {
    auto ex = example_two(6);
    const auto demands = Demands::distinct(19);
    const SymbolBook symbols(2, 3);
    auto rec = compose_signal(0, {0, 1}, ex.channel, ex.schedule, demands, symbols);
    rec->signal(0) += Complex{1e-3, 0};
    EXPECT_THROW(verify_decode(*rec, ex.channel, demands, symbols), DecodeFailure);
}

TEST(VerifyDecode, EveryTransmissionOverManyDraws) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto ex = example_two(seed);
        const auto demands = Demands::distinct(19);
        const SymbolBook symbols(seed, 3);
        for (const auto& plan : plan_transmissions(ex.schedule, 1))
            for (const auto& r : verify_decode(compose_signal(plan, ex.channel, demands, symbols), ex.channel, demands,
                                               symbols))
                EXPECT_LT(r.residual, 1e-9);
    }
}

TEST(Coverage, ExampleTwoIsComplete) {
    auto ex = example_two(1);
    const auto report = coverage_check(ex.schedule, ex.profiles, 1);
    EXPECT_TRUE(report.ok()) << (report.ok() ? "" : report.problems.front());
}

TEST(Coverage, MissingUserReported) {
    std::size_t u = 0;
    const auto s = build_schedule({sized_partitions({1}, u), PartitionSet{}, PartitionSet{}});
    const auto profiles = ProfileAssignment::from_profiles({0, 1}, 3);  // user 2 never scheduled
    EXPECT_FALSE(coverage_check(s, profiles, 1).ok());
}

TEST(Coverage, EmptySystem) {
    EXPECT_TRUE(coverage_check(RoundSchedule{3, {}}, ProfileAssignment::from_profiles({}, 3), 1).ok());
}

TEST(Coverage, RandomSmallSystems) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t L = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
        const std::size_t t = std::uniform_int_distribution<std::size_t>(0, L - 1)(rng);
        const std::size_t K = std::uniform_int_distribution<std::size_t>(0, 30)(rng);
        std::vector<std::vector<std::size_t>> cand(K);
        for (auto& c : cand) {
            for (std::size_t i = 0; i < 3; ++i)
                if (rng() % 2) c.push_back(i);
            if (c.empty()) c.push_back(rng() % 3);
        }
        const auto conn = Connectivity::from_candidates(3, cand);
        Rng prng(rng());
        const auto profiles = assign_profiles(K, L, prng);
        std::vector<PartitionSet> sets;
        for (std::size_t l = 0; l < L; ++l) sets.push_back(bb_partition(subnetwork(conn, profiles, l)));
        EXPECT_TRUE(coverage_check(build_schedule(sets), profiles, t).ok());
    }
}

TEST(SpecialCase, FullyConnectedOneRoundNoPadding) {
    const auto net = testing::uniform_full_network(4, 5, 4);
    std::vector<PartitionSet> sets;
    for (std::size_t l = 0; l < 5; ++l) sets.push_back(bb_partition(subnetwork(net.connectivity, net.profiles, l)));
    const auto s = build_schedule(sets);
    ASSERT_EQ(s.size(), 1u);
    const auto plans = plan_transmissions(s, 2);
    EXPECT_EQ(plans.size(), binomial(5, 3));
    for (const auto& p : plans) {
        EXPECT_EQ(p.blocks.size(), 3u);
        for (const auto& b : p.blocks) EXPECT_EQ(b.partition.helpers.size(), 4u);
    }
}

TEST(Trace, OneLinePerTransmission) {
    auto ex = example_two(1);
    std::ostringstream out;
    write_trace(out, plan_transmissions(ex.schedule, 1));
    const std::string text = out.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 3 + 3 + 2);
    EXPECT_NE(text.find("2,1 2,1 2,6,{2} {1}\n"), std::string::npos);
    EXPECT_NE(text.find("2,2 3,2,2,{3}\n"), std::string::npos);
}

}  // namespace
}  // namespace ccdelivery
