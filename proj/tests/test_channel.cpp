#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "beampred/channel.hpp"
#include "oracles.hpp"

using namespace beampred;

namespace {

using oracle::kPi;

ChannelSnapshot single_path(double aod, cplx alpha = 1.0, double rho = 1.0) {
    ChannelSnapshot s;
    s.paths.push_back({aod, alpha, rho});
    return s;
}

void expect_cvec_near(const CVector& got, const CVector& want, double tol = 1e-12) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_NEAR(got[i].real(), want[i].real(), tol) << "element " << i;
        EXPECT_NEAR(got[i].imag(), want[i].imag(), tol) << "element " << i;
    }
}

CVector random_channel(std::mt19937_64& rng, std::size_t m_ant) {
    std::normal_distribution<double> n(0.0, 1.0);
    CVector h(m_ant);
    for (auto& v : h) v = cplx(n(rng), n(rng));
    return h;
}

}  // namespace

TEST(SteeringVector, BroadsideIsAllOnes) { expect_cvec_near(steering_vector(0.0, 4), CVector(4, 1.0)); }

TEST(SteeringVector, ThirtyDegreesTwoAntennas) { expect_cvec_near(steering_vector(kPi / 6, 2), {1.0, cplx(0.0, 1.0)}); }

TEST(SteeringVector, SingleAntenna) {
    for (double phi : {-1.2, 0.0, 0.4, 1.5}) expect_cvec_near(steering_vector(phi, 1), {1.0});
}

TEST(SteeringVector, FirstElementExactlyOne) {
    const auto a = steering_vector(0.73, 16);
    EXPECT_EQ(a[0], cplx(1.0, 0.0));
}

TEST(SteeringVector, RejectsAnglesOutsideSector) {
    EXPECT_THROW(steering_vector(kPi / 2, 4), DomainError);
    EXPECT_THROW(steering_vector(-kPi / 2, 4), DomainError);
    EXPECT_THROW(steering_vector(2.0, 4), DomainError);
    EXPECT_THROW(steering_vector(0.1, 0), DomainError);
}

TEST(SteeringVector, NegatedAngleIsConjugate) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 50; ++i) {
        const double phi = u(rng);
        const auto a = steering_vector(phi, 32);
        const auto b = steering_vector(-phi, 32);
        for (std::size_t m = 0; m < a.size(); ++m) {
            EXPECT_NEAR(b[m].real(), a[m].real(), 1e-12);
            EXPECT_NEAR(b[m].imag(), -a[m].imag(), 1e-12);
        }
    }
}

TEST(CodebookBeam, ZeroPhase) { expect_cvec_near(codebook_beam(0, {4, 4, 0.5}), CVector(4, 0.5)); }

TEST(CodebookBeam, QuarterTurns) {
    expect_cvec_near(codebook_beam(1, {4, 4, 0.5}), {0.5, cplx(0, 0.5), -0.5, cplx(0, -0.5)});
}

TEST(CodebookBeam, HalfTurnTwoAntennas) {
    const double r = 1.0 / std::sqrt(2.0);
    expect_cvec_near(codebook_beam(2, {2, 4, 0.5}), {r, -r});
}

TEST(CodebookBeam, OutOfRangeIndex) { EXPECT_THROW(codebook_beam(4, {4, 4, 0.5}), IndexError); }

TEST(CodebookBeam, UnitNorm) {
    for (std::size_t q_count : {1u, 7u, 32u, 64u, 128u})
        for (std::size_t m : {1u, 5u, 64u}) {
            const Codebook cb{m, q_count, 0.5};
            for (std::size_t q = 0; q < q_count; ++q) {
                double n2 = 0.0;
                for (const auto& v : codebook_beam(q, cb)) n2 += std::norm(v);
                EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-6);
            }
        }
}

TEST(ChannelVector, SinglePathBroadside) { expect_cvec_near(channel_vector(single_path(0.0), 4), CVector(4, 1.0)); }

TEST(ChannelVector, PathLossScalesAmplitude) { expect_cvec_near(channel_vector(single_path(0.0, 1.0, 4.0), 2), CVector(2, 0.5)); }

TEST(ChannelVector, IdenticalPathsAdd) {
    ChannelSnapshot s = single_path(0.0);
    s.paths.push_back(s.paths[0]);
    expect_cvec_near(channel_vector(s, 2), CVector(2, 2.0));
}

TEST(ChannelVector, MatchesConjugatedSteeringFormula) {
    expect_cvec_near(channel_vector(single_path(0.6, cplx(0.3, -0.8), 2.5), 16), oracle::single_path(0.6, 16, cplx(0.3, -0.8), 2.5));
}

TEST(ChannelVector, PropagatesDomainError) { EXPECT_THROW(channel_vector(single_path(kPi / 2), 4), DomainError); }

TEST(ChannelVector, LinearInThePathList) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(-1.4, 1.4), amp(-1.0, 1.0), loss(1.0, 50.0);
    for (int trial = 0; trial < 30; ++trial) {
        ChannelSnapshot a, b, both;
        for (int i = 0; i < 3; ++i) a.paths.push_back({ang(rng), cplx(amp(rng), amp(rng)), loss(rng)});
        for (int i = 0; i < 2; ++i) b.paths.push_back({ang(rng), cplx(amp(rng), amp(rng)), loss(rng)});
        both.paths = a.paths;
        both.paths.insert(both.paths.end(), b.paths.begin(), b.paths.end());
        const auto ha = channel_vector(a, 24), hb = channel_vector(b, 24), hab = channel_vector(both, 24);
        for (std::size_t m = 0; m < 24; ++m) EXPECT_LT(std::abs(hab[m] - (ha[m] + hb[m])), 1e-6);
    }
}

TEST(BeamGain, AlignedBeam) {
    const CVector h(4, 1.0);
    EXPECT_NEAR(beam_gain(h, codebook_beam(0, {4, 4, 0.5})), 4.0, 1e-12);
}

TEST(BeamGain, ZeroChannel) { EXPECT_EQ(beam_gain(CVector(4, 0.0), codebook_beam(3, {4, 8, 0.5})), 0.0); }

TEST(BeamGain, OrthogonalVectors) {
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(beam_gain(CVector{1.0, -1.0}, CVector{r, r}), 0.0, 1e-15);
}

TEST(BeamGain, UsesUnconjugatedTranspose) {
    // h^T f with h = [1, j], f = [1, j] is 1 + j^2 = 0; h^H f would give 2.
    EXPECT_NEAR(beam_gain(CVector{1.0, cplx(0, 1)}, CVector{1.0, cplx(0, 1)}), 0.0, 1e-15);
}

TEST(BeamGain, LengthMismatch) { EXPECT_THROW(beam_gain(CVector(3, 1.0), CVector(4, 1.0)), ShapeError); }

TEST(OptimalBeam, BroadsideIsBeamZero) {
    const Codebook cb{16, 16, 0.5};
    EXPECT_EQ(optimal_beam(channel_vector(single_path(0.0), 16), cb), 0u);
}

TEST(OptimalBeam, ThirtyDegreesIsBeamFour) {
    const Codebook cb{16, 16, 0.5};
    const auto h = channel_vector(single_path(std::asin(0.5)), 16);
    const auto oracle = oracle::gains(oracle::single_path(std::asin(0.5), 16), 16);
    EXPECT_EQ(oracle::argmax(oracle), 4u);
    EXPECT_EQ(optimal_beam(h, cb), 4u);
}

TEST(OptimalBeam, ZeroChannelTiesToLowestIndex) { EXPECT_EQ(optimal_beam(CVector(8, 0.0), {8, 8, 0.5}), 0u); }

TEST(OptimalBeam, ShapeMismatch) { EXPECT_THROW(optimal_beam(CVector(8, 1.0), {16, 16, 0.5}), ShapeError); }

TEST(OptimalBeam, GridOfAnglesMatchesExhaustiveScan) {
    for (std::size_t q_count : {16u, 32u, 64u}) {
        const Codebook cb{q_count, q_count, 0.5};
        for (std::size_t q = 0; 2 * q <= q_count; ++q) {
            const double s = 2.0 * double(q) / double(q_count);
            if (s >= 1.0) continue;
            const double phi = std::asin(s);
            const auto h = channel_vector(single_path(phi), q_count);
            EXPECT_EQ(optimal_beam(h, cb), oracle::argmax(oracle::gains(h, q_count)));
            EXPECT_EQ(optimal_beam(h, cb), q);
        }
    }
}

TEST(OptimalBeam, AttainsMaximumOfIndependentScan) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t m = 8 + trial % 24, q_count = 4 + trial % 40;
        const auto h = random_channel(rng, m);
        const auto g = oracle::gains(h, q_count);
        const auto best = optimal_beam(h, {m, q_count, 0.5});
        EXPECT_NEAR(g[best], *std::max_element(g.begin(), g.end()), 1e-9);
    }
}

TEST(NormalizedGain, SelfIsOne) {
    const Codebook cb{16, 16, 0.5};
    const auto h = channel_vector(single_path(0.3), 16);
    EXPECT_DOUBLE_EQ(normalized_gain(h, optimal_beam(h, cb), cb), 1.0);
}

TEST(NormalizedGain, OffBeamMatchesExhaustiveRatio) {
    const Codebook cb{16, 16, 0.5};
    const auto h = channel_vector(single_path(std::asin(0.5)), 16);
    const auto g = oracle::gains(h, 16);
    const double want = g[0] / g[oracle::argmax(g)];
    const double got = normalized_gain(h, 0, cb);
    EXPECT_NEAR(got, want, 1e-12);
    EXPECT_LT(got, 1.0);
}

TEST(NormalizedGain, ZeroChannelIsOne) {
    for (std::size_t q = 0; q < 8; ++q) EXPECT_EQ(normalized_gain(CVector(8, 0.0), q, {8, 8, 0.5}), 1.0);
}

TEST(NormalizedGain, OutOfRangeIndex) { EXPECT_THROW(normalized_gain(CVector(8, 1.0), 8, {8, 8, 0.5}), IndexError); }

TEST(NormalizedGain, BoundedAndOneOnlyAtMaximum) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t m = 16, q_count = 16 + trial % 17;
        const Codebook cb{m, q_count, 0.5};
        const auto h = random_channel(rng, m);
        const auto g = oracle::gains(h, q_count);
        const double best = *std::max_element(g.begin(), g.end());
        for (std::size_t q = 0; q < q_count; ++q) {
            const double v = normalized_gain(h, q, cb);
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
            EXPECT_EQ(v == 1.0, g[q] >= best * (1.0 - 1e-12)) << "q=" << q;
        }
    }
}

TEST(Snapshot, ValidationRejectsWeakLos) {
    ChannelSnapshot s = single_path(0.2, 0.5);
    s.paths.push_back({0.7, 1.0, 1.0});
    EXPECT_THROW(validate(s), DomainError);
    s.paths[1].path_loss = 10.0;
    EXPECT_NO_THROW(validate(s));
    s.paths[1].path_loss = -1.0;
    EXPECT_THROW(validate(s), DomainError);
}
